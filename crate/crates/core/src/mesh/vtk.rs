use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::SimplicialMesh;
use crate::error::{Error, Result};
use crate::metric::MetricField;

/// Point data attached to a VTK export.
pub enum VtkField<'a> {
    Scalar(&'a str, &'a [f64]),
    Tensor(&'a str, &'a MetricField),
}

/// Legacy ASCII VTK unstructured grid.
pub fn write_vtk(mesh: &SimplicialMesh, fields: &[VtkField<'_>], path: impl AsRef<Path>) -> Result<()> {
    let nv = mesh.num_vertices();
    for f in fields {
        let (name, n) = match f {
            VtkField::Scalar(name, v) => (name, v.len()),
            VtkField::Tensor(name, m) => (name, m.len()),
        };
        if n != nv {
            return Err(Error::CountMismatch {
                what: format!("values of field '{name}'"),
                expected: nv,
                found: n,
            });
        }
    }
    let mut w = BufWriter::new(File::create(path)?);
    let d = mesh.dim();
    writeln!(w, "# vtk DataFile Version 3.0\nanisomesh\nASCII\nDATASET UNSTRUCTURED_GRID")?;
    writeln!(w, "POINTS {nv} double")?;
    for v in 0..nv {
        let p = mesh.vertex(v);
        let z = if d == 3 { p[2] } else { 0.0 };
        writeln!(w, "{} {} {}", p[0], p[1], z)?;
    }
    let nc = mesh.num_cells();
    writeln!(w, "CELLS {nc} {}", nc * (d + 2))?;
    for cell in mesh.cells() {
        write!(w, "{}", d + 1)?;
        for v in cell {
            write!(w, " {v}")?;
        }
        writeln!(w)?;
    }
    let ty = if d == 2 { 5 } else { 10 };
    writeln!(w, "CELL_TYPES {nc}")?;
    for _ in 0..nc {
        writeln!(w, "{ty}")?;
    }
    if !fields.is_empty() {
        writeln!(w, "POINT_DATA {nv}")?;
    }
    for f in fields {
        match f {
            VtkField::Scalar(name, vals) => {
                writeln!(w, "SCALARS {name} double 1\nLOOKUP_TABLE default")?;
                for x in vals.iter() {
                    writeln!(w, "{x}")?;
                }
            }
            VtkField::Tensor(name, field) => {
                writeln!(w, "TENSORS {name} double")?;
                for m in field.values() {
                    let a = m.to_matrix();
                    for row in a {
                        writeln!(w, "{} {} {}", row[0], row[1], row[2])?;
                    }
                }
            }
        }
    }
    w.flush()?;
    Ok(())
}
