//! ASCII Medit `.mesh` / `.sol` reader and writer.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use super::SimplicialMesh;
use crate::error::{Error, Result};
use crate::metric::{MetricField, MetricTensor};

/// Medit solution type code for a symmetric tensor.
const SOL_TYPE_TENSOR: usize = 3;

pub fn write_medit(mesh: &SimplicialMesh, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    let d = mesh.dim();
    writeln!(w, "MeshVersionFormatted 2\n\nDimension {d}\n")?;
    writeln!(w, "Vertices\n{}", mesh.num_vertices())?;
    for v in 0..mesh.num_vertices() {
        for x in mesh.vertex(v) {
            write!(w, "{x} ")?;
        }
        writeln!(w, "0")?;
    }
    let (cell_kw, facet_kw) = if d == 2 {
        ("Triangles", "Edges")
    } else {
        ("Tetrahedra", "Triangles")
    };
    writeln!(w, "\n{cell_kw}\n{}", mesh.num_cells())?;
    for cell in mesh.cells() {
        for v in cell {
            write!(w, "{} ", v + 1)?;
        }
        writeln!(w, "0")?;
    }
    writeln!(w, "\n{facet_kw}\n{}", mesh.num_facets())?;
    for f in 0..mesh.num_facets() {
        for v in mesh.facet(f) {
            write!(w, "{} ", v + 1)?;
        }
        writeln!(w, "{}", mesh.facet_marker(f))?;
    }
    let corners: Vec<usize> = (0..mesh.num_vertices()).filter(|&v| mesh.is_corner(v)).collect();
    if !corners.is_empty() {
        writeln!(w, "\nCorners\n{}", corners.len())?;
        for v in corners {
            writeln!(w, "{}", v + 1)?;
        }
    }
    writeln!(w, "\nEnd")?;
    w.flush()?;
    Ok(())
}

pub fn write_sol(field: &MetricField, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "MeshVersionFormatted 2\n\nDimension {}\n", field.dim())?;
    writeln!(w, "SolAtVertices\n{}\n1 {SOL_TYPE_TENSOR}", field.len())?;
    for m in field.values() {
        let s: Vec<String> = m.lower().iter().map(|x| x.to_string()).collect();
        writeln!(w, "{}", s.join(" "))?;
    }
    writeln!(w, "\nEnd")?;
    w.flush()?;
    Ok(())
}

struct Tokens {
    path: PathBuf,
    toks: Vec<(usize, String)>,
    pos: usize,
}

impl Tokens {
    fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut toks = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("");
            toks.extend(line.split_whitespace().map(|t| (i + 1, t.to_string())));
        }
        Ok(Self {
            path: path.to_path_buf(),
            toks,
            pos: 0,
        })
    }

    fn line(&self) -> usize {
        self.toks
            .get(self.pos)
            .or_else(|| self.toks.last())
            .map_or(0, |t| t.0)
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(Error::Parse {
            path: self.path.clone(),
            line: self.line(),
            msg: msg.into(),
        })
    }

    fn next(&mut self) -> Option<&str> {
        let t = self.toks.get(self.pos).map(|t| t.1.as_str());
        self.pos += 1;
        t
    }

    fn parse<T: std::str::FromStr>(&mut self, what: &str) -> Result<T> {
        let line = self.line();
        match self.next().map(|s| s.parse::<T>()) {
            Some(Ok(v)) => Ok(v),
            Some(Err(_)) => Err(Error::Parse {
                path: self.path.clone(),
                line,
                msg: format!("expected {what}, found '{}'", self.toks[self.pos - 1].1),
            }),
            None => self.err(format!("unexpected end of file, expected {what}")),
        }
    }

    fn index(&mut self, nv: usize) -> Result<usize> {
        let i: usize = self.parse("vertex index")?;
        if i == 0 || i > nv {
            self.pos -= 1;
            return self.err(format!("vertex index {i} out of range 1..={nv}"));
        }
        Ok(i - 1)
    }
}

pub fn read_medit(path: impl AsRef<Path>) -> Result<SimplicialMesh> {
    let mut t = Tokens::read(path.as_ref())?;
    let mut dim = 0usize;
    let mut coords = Vec::new();
    let mut cells2 = Vec::new();
    let mut tets = Vec::new();
    let mut edges = (Vec::new(), Vec::new());
    let mut tris = (Vec::new(), Vec::new());
    let mut corner_list = Vec::new();
    let mut saw_end = false;
    while let Some(kw) = t.next().map(str::to_string) {
        match kw.as_str() {
            "MeshVersionFormatted" => {
                let _: u32 = t.parse("format version")?;
            }
            "Dimension" => {
                dim = t.parse("dimension")?;
                if dim != 2 && dim != 3 {
                    t.pos -= 1;
                    return t.err(format!("unsupported dimension {dim}"));
                }
            }
            "Vertices" => {
                if dim == 0 {
                    return t.err("Vertices before Dimension");
                }
                let n: usize = t.parse("vertex count")?;
                coords.reserve(n * dim);
                for _ in 0..n {
                    for _ in 0..dim {
                        coords.push(t.parse::<f64>("coordinate")?);
                    }
                    let _: i64 = t.parse("vertex reference")?;
                }
            }
            "Triangles" | "Tetrahedra" | "Edges" => {
                let k = match kw.as_str() {
                    "Edges" => 2,
                    "Triangles" => 3,
                    _ => 4,
                };
                let nv = coords.len() / dim.max(1);
                let n: usize = t.parse("element count")?;
                let mut discarded = Vec::new();
                let (conn, refs) = match (kw.as_str(), dim) {
                    ("Edges", _) => (&mut edges.0, &mut edges.1),
                    ("Triangles", 2) => (&mut cells2, &mut discarded),
                    ("Triangles", _) => (&mut tris.0, &mut tris.1),
                    _ => (&mut tets, &mut discarded),
                };
                for _ in 0..n {
                    for _ in 0..k {
                        conn.push(t.index(nv)?);
                    }
                    refs.push(t.parse::<i32>("element reference")?);
                }
            }
            "Corners" => {
                let nv = coords.len() / dim.max(1);
                let n: usize = t.parse("corner count")?;
                for _ in 0..n {
                    corner_list.push(t.index(nv)?);
                }
            }
            "End" => {
                saw_end = true;
                break;
            }
            other => {
                t.pos -= 1;
                return t.err(format!("unknown section keyword '{other}'"));
            }
        }
    }
    if !saw_end {
        return t.err("missing End keyword");
    }
    if dim == 0 {
        return t.err("missing Dimension");
    }
    let (cells, (facets, markers)) = if dim == 2 { (cells2, edges) } else { (tets, tris) };
    let mut mesh = SimplicialMesh::new(dim, coords, cells, facets, markers)?;
    let mut corners = vec![false; mesh.num_vertices()];
    for v in corner_list {
        corners[v] = true;
    }
    mesh = mesh.with_corners(corners)?;
    mesh.detect_corners();
    Ok(mesh)
}

pub fn read_sol(path: impl AsRef<Path>, mesh: &SimplicialMesh) -> Result<MetricField> {
    let mut t = Tokens::read(path.as_ref())?;
    let mut dim = 0usize;
    let mut values = None;
    let mut saw_end = false;
    while let Some(kw) = t.next().map(str::to_string) {
        match kw.as_str() {
            "MeshVersionFormatted" => {
                let _: u32 = t.parse("format version")?;
            }
            "Dimension" => dim = t.parse("dimension")?,
            "SolAtVertices" => {
                if dim != mesh.dim() {
                    return t.err(format!("solution dimension {dim} does not match mesh dimension {}", mesh.dim()));
                }
                let n: usize = t.parse("value count")?;
                if n != mesh.num_vertices() {
                    return Err(Error::CountMismatch {
                        what: "solution values".into(),
                        expected: mesh.num_vertices(),
                        found: n,
                    });
                }
                let nfields: usize = t.parse("field count")?;
                if nfields != 1 {
                    return t.err(format!("expected one field, found {nfields}"));
                }
                let kind: usize = t.parse("field type")?;
                if kind != SOL_TYPE_TENSOR {
                    t.pos -= 1;
                    return t.err(format!("expected symmetric tensor field (type 3), found type {kind}"));
                }
                let k = dim * (dim + 1) / 2;
                let mut vals = Vec::with_capacity(n);
                let mut buf = vec![0.0; k];
                for _ in 0..n {
                    for x in buf.iter_mut() {
                        *x = t.parse("tensor entry")?;
                    }
                    vals.push(MetricTensor::from_lower(dim, &buf)?);
                }
                values = Some(vals);
            }
            "End" => {
                saw_end = true;
                break;
            }
            other => {
                t.pos -= 1;
                return t.err(format!("unknown section keyword '{other}'"));
            }
        }
    }
    if !saw_end {
        return t.err("missing End keyword");
    }
    match values {
        Some(v) => MetricField::new(mesh, v),
        None => t.err("missing SolAtVertices section"),
    }
}
