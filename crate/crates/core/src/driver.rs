//! The solve, recover, adapt fixed-point loop and convergence studies.

use std::io::Write;
use std::time::Instant;

use log::info;

use crate::error::{invalid, Error, Result};
use crate::fem::{assemble, l2_error, PoissonProblem, SolverOptions};
use crate::mesh::{statistics, structured_mesh, MeshStatistics, SimplicialMesh, STATS_CSV_HEADER};
use crate::metric::MetricField;
use crate::options::AdaptOptions;
use crate::parallel::parallel_adapt;
use crate::recovery::{hessian_metric, ScalarField};

/// Subdivisions per axis of the initial structured mesh.
pub const INITIAL_SUBDIVISIONS: usize = 10;

/// One adapted (or uniform) mesh with its solution error.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceRecord {
    pub target: f64,
    pub vertices: usize,
    pub elements: usize,
    pub l2_error: f64,
    pub stats: MeshStatistics,
    /// Seconds spent producing this record.
    pub wall_time: f64,
}

#[derive(Clone, Debug)]
pub struct FixedPointResult {
    pub mesh: SimplicialMesh,
    pub metric: MetricField,
    pub solution: ScalarField,
    /// One record per fixed-point iteration, measured on the adapted mesh.
    pub records: Vec<ConvergenceRecord>,
}

/// Solves `problem` on `mesh` and returns the solution and its L² error
/// (zero when no exact solution is known).
pub fn solve(mesh: &SimplicialMesh, problem: &PoissonProblem) -> Result<(ScalarField, f64)> {
    let system = assemble(mesh, problem)?;
    let (u, info) = system.solve(mesh, &SolverOptions::default())?;
    log::debug!("solved {} unknowns in {} CG iterations", system.num_free(), info.iterations);
    let err = match &problem.exact {
        Some(exact) => l2_error(mesh, &u, |x| exact(x))?,
        None => 0.0,
    };
    Ok((u, err))
}

fn record(target: f64, mesh: &SimplicialMesh, l2_error: f64, start: Instant) -> ConvergenceRecord {
    ConvergenceRecord {
        target,
        vertices: mesh.num_vertices(),
        elements: mesh.num_cells(),
        l2_error,
        stats: statistics(mesh),
        wall_time: start.elapsed().as_secs_f64(),
    }
}

/// Runs `opts.fixed_point_iters` iterations of solve, Hessian metric and
/// adaptation starting from a 10×10 structured mesh, re-solving on every
/// adapted mesh.
pub fn run_fixed_point(problem: &PoissonProblem, opts: &AdaptOptions) -> Result<FixedPointResult> {
    run_fixed_point_from(structured_mesh(problem.dim, INITIAL_SUBDIVISIONS)?, problem, opts)
}

/// As [`run_fixed_point`] from a given initial mesh.
pub fn run_fixed_point_from(
    initial: SimplicialMesh,
    problem: &PoissonProblem,
    opts: &AdaptOptions,
) -> Result<FixedPointResult> {
    opts.validate()?;
    if problem.dim != 2 || initial.dim() != 2 {
        return invalid("adaptation runs on 2D problems only");
    }
    let mut mesh = initial;
    let mut start = Instant::now();
    let (mut u, _) = solve(&mesh, problem)?;
    let mut metric = None;
    let mut records = Vec::with_capacity(opts.fixed_point_iters);
    for iteration in 0..opts.fixed_point_iters {
        let wrap = |e: Error| Error::FixedPoint { iteration, source: Box::new(e) };
        let m = hessian_metric(&mesh, &u, opts).map_err(wrap)?;
        let adapted = parallel_adapt(&mesh, &m, opts).map_err(wrap)?;
        mesh = adapted.mesh;
        let (v, err) = solve(&mesh, problem).map_err(wrap)?;
        u = v;
        metric = Some(adapted.metric);
        let r = record(opts.target_complexity, &mesh, err, start);
        info!(
            "iteration {iteration}: {} vertices, {} elements, L2 error {:.4e}",
            r.vertices, r.elements, r.l2_error
        );
        records.push(r);
        start = Instant::now();
    }
    let metric = metric.expect("at least one iteration");
    Ok(FixedPointResult { mesh, metric, solution: u, records })
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn fit_log_slope(points: &[(f64, f64)]) -> Result<f64> {
    if points.len() < 2 || points.iter().any(|&(x, y)| !(x > 0.0 && y > 0.0)) {
        return invalid("slope fit needs at least two positive points");
    }
    let n = points.len() as f64;
    let (lx, ly): (Vec<f64>, Vec<f64>) = points.iter().map(|&(x, y)| (x.ln(), y.ln())).unzip();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return invalid("slope fit needs distinct abscissae");
    }
    Ok(sxy / sxx)
}

/// Adaptive runs over increasing targets with a uniform-refinement
/// baseline at matched vertex counts.
#[derive(Clone, Debug)]
pub struct ConvergenceStudy {
    pub problem: String,
    pub options: AdaptOptions,
    pub adaptive: Vec<ConvergenceRecord>,
    pub uniform: Vec<ConvergenceRecord>,
    pub adaptive_slope: f64,
    pub uniform_slope: f64,
}

/// Structured mesh whose vertex count is closest to `vertices`.
pub fn matched_uniform_mesh(dim: usize, vertices: usize) -> Result<SimplicialMesh> {
    let n = ((vertices as f64).powf(1.0 / dim as f64).round() as usize).saturating_sub(1).max(1);
    structured_mesh(dim, n)
}

pub fn convergence_study(problem: &PoissonProblem, targets: &[f64], opts: &AdaptOptions) -> Result<ConvergenceStudy> {
    if targets.len() < 3 {
        return invalid(format!("a convergence study needs at least 3 targets, got {}", targets.len()));
    }
    if targets.windows(2).any(|w| !(w[0] < w[1])) {
        return invalid("targets must be strictly increasing");
    }
    let mut adaptive = Vec::with_capacity(targets.len());
    let mut uniform = Vec::with_capacity(targets.len());
    for &target in targets {
        let o = AdaptOptions { target_complexity: target, ..opts.clone() };
        let start = Instant::now();
        let run = run_fixed_point(problem, &o)?;
        let last = run.records.last().expect("at least one iteration");
        adaptive.push(ConvergenceRecord { wall_time: start.elapsed().as_secs_f64(), ..last.clone() });

        let start = Instant::now();
        let mesh = matched_uniform_mesh(problem.dim, last.vertices)?;
        let (_, err) = solve(&mesh, problem)?;
        uniform.push(record(target, &mesh, err, start));
        info!(
            "target {target}: adaptive {} vertices error {:.4e}; uniform {} vertices error {:.4e}",
            last.vertices,
            last.l2_error,
            mesh.num_vertices(),
            err
        );
    }
    let slope = |rs: &[ConvergenceRecord]| fit_log_slope(&rs.iter().map(|r| (r.vertices as f64, r.l2_error)).collect::<Vec<_>>());
    Ok(ConvergenceStudy {
        problem: problem.name.clone(),
        options: opts.clone(),
        adaptive_slope: slope(&adaptive)?,
        uniform_slope: slope(&uniform)?,
        adaptive,
        uniform,
    })
}

/// Column header of record CSV files.
pub const RECORD_CSV_HEADER: &str = "kind,step,target,l2_error,wall_time";

fn write_options<W: Write>(w: &mut W, problem: &str, opts: &AdaptOptions) -> Result<()> {
    writeln!(w, "# options: problem={problem} {opts}")?;
    Ok(())
}

fn write_record<W: Write>(w: &mut W, kind: &str, step: usize, r: &ConvergenceRecord) -> Result<()> {
    writeln!(
        w,
        "{kind},{step},{},{:e},{:.3},{}",
        r.target,
        r.l2_error,
        r.wall_time,
        r.stats.csv_row()
    )?;
    Ok(())
}

fn write_header<W: Write>(w: &mut W) -> Result<()> {
    writeln!(w, "{RECORD_CSV_HEADER},{STATS_CSV_HEADER}")?;
    Ok(())
}

/// Per-iteration records of one fixed-point run.
pub fn write_fixed_point_csv<W: Write>(
    mut w: W,
    problem: &str,
    opts: &AdaptOptions,
    records: &[ConvergenceRecord],
) -> Result<()> {
    write_options(&mut w, problem, opts)?;
    write_header(&mut w)?;
    for (i, r) in records.iter().enumerate() {
        write_record(&mut w, "iteration", i + 1, r)?;
    }
    Ok(())
}

/// Adaptive and uniform records followed by the fitted slopes.
pub fn write_study_csv<W: Write>(mut w: W, study: &ConvergenceStudy) -> Result<()> {
    write_options(&mut w, &study.problem, &study.options)?;
    write_header(&mut w)?;
    for (i, r) in study.adaptive.iter().enumerate() {
        write_record(&mut w, "adaptive", i + 1, r)?;
    }
    for (i, r) in study.uniform.iter().enumerate() {
        write_record(&mut w, "uniform", i + 1, r)?;
    }
    writeln!(w, "slope,adaptive,{}", study.adaptive_slope)?;
    writeln!(w, "slope,uniform,{}", study.uniform_slope)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::manufactured_quadratic;

    #[test]
    fn slope_of_power_law() {
        let pts: Vec<(f64, f64)> = [10.0, 100.0, 1000.0].iter().map(|&x: &f64| (x, 3.0 * x.powf(-1.5))).collect();
        assert!((fit_log_slope(&pts).unwrap() + 1.5).abs() < 1e-12);
        assert!(fit_log_slope(&pts[..1]).is_err());
        assert!(fit_log_slope(&[(1.0, 1.0), (1.0, 2.0)]).is_err());
        assert!(fit_log_slope(&[(1.0, 0.0), (2.0, 2.0)]).is_err());
    }

    #[test]
    fn matched_mesh_sizes() {
        assert_eq!(matched_uniform_mesh(2, 121).unwrap().num_vertices(), 121);
        assert_eq!(matched_uniform_mesh(2, 130).unwrap().num_vertices(), 121);
        assert_eq!(matched_uniform_mesh(3, 1000).unwrap().num_vertices(), 1000);
    }

    #[test]
    fn fixed_point_on_quadratic() {
        let problem = manufactured_quadratic(2);
        let opts = AdaptOptions { target_complexity: 400.0, fixed_point_iters: 2, ..Default::default() };
        let run = run_fixed_point(&problem, &opts).unwrap();
        assert_eq!(run.records.len(), 2);
        run.mesh.validate().unwrap();
        assert_eq!(run.solution.values().len(), run.mesh.num_vertices());
        for r in &run.records {
            assert!(r.vertices > 0 && r.elements > 0 && r.l2_error > 0.0 && r.wall_time >= 0.0);
        }
        // Near-isotropic output for a uniform Hessian.
        assert!(run.records[1].stats.frac_ar_gt2 <= 0.05, "{:?}", run.records[1].stats);
    }

    #[test]
    fn fixed_point_on_interface() {
        let problem = PoissonProblem::interface_default(2);
        let opts = AdaptOptions::with_target(8000.0);
        let run = run_fixed_point(&problem, &opts).unwrap();
        let last = &run.records[2].stats;
        assert!(last.frac_ar_gt2 >= 0.05, "{last:?}");
        assert!(last.measure_max / last.measure_min >= 1e4, "{last:?}");
        // More iterations reduce the dependence on the coarse start.
        let once = run_fixed_point(&problem, &AdaptOptions { fixed_point_iters: 1, ..opts }).unwrap();
        assert!(run.records[2].l2_error <= once.records[0].l2_error);
    }

    #[test]
    fn bad_inputs() {
        let opts = AdaptOptions::default();
        assert!(run_fixed_point(&manufactured_quadratic(3), &opts).is_err());
        assert!(convergence_study(&manufactured_quadratic(2), &[100.0, 200.0], &opts).is_err());
        assert!(convergence_study(&manufactured_quadratic(2), &[100.0, 300.0, 200.0], &opts).is_err());
    }

    #[test]
    fn csv_layout() {
        let problem = manufactured_quadratic(2);
        let opts = AdaptOptions { fixed_point_iters: 1, ..Default::default() };
        let study = convergence_study(&problem, &[100.0, 200.0, 400.0], &opts).unwrap();
        let mut buf = Vec::new();
        write_study_csv(&mut buf, &study).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[0].starts_with("# options: problem=quadratic target=1000"));
        assert_eq!(lines[1], format!("{RECORD_CSV_HEADER},{STATS_CSV_HEADER}"));
        let columns = lines[1].split(',').count();
        assert!(lines[2..8].iter().all(|l| l.split(',').count() == columns));
        assert!(lines[8].starts_with("slope,adaptive,-"));
        assert!(lines[9].starts_with("slope,uniform,-"));
        assert_eq!(lines.len(), 10);
    }
}
