//! Command-line harness for the adaptation toolkit.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;

use anisomesh::driver::{write_fixed_point_csv, write_study_csv};
use anisomesh::mesh::{read_medit, read_sol, statistics, write_medit, write_sol, write_vtk, VtkField, STATS_CSV_HEADER};
use anisomesh::{convergence_study, parallel_adapt, run_fixed_point, AdaptOptions, NormOrder, PoissonProblem, SimplicialMesh};

#[derive(Parser, Debug)]
#[command(name = "anisomesh", version, about = "Anisotropic metric-based mesh adaptation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Adapt a Medit mesh to a metric given in a Medit .sol file.
    Adapt(AdaptCmd),
    /// Run the solve, recover, adapt fixed-point loop on a model problem.
    Solve(SolveCmd),
    /// Convergence study against uniform refinement.
    Converge(ConvergeCmd),
    /// Print element statistics of a Medit mesh.
    Stats(StatsCmd),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Problem {
    Quadratic,
    Interface,
}

impl Problem {
    fn name(self) -> &'static str {
        match self {
            Problem::Quadratic => "quadratic",
            Problem::Interface => "interface",
        }
    }

    fn build(self) -> PoissonProblem {
        PoissonProblem::by_name(self.name(), 2).expect("known problem")
    }
}

/// Metric and partitioning options shared by every adapting command.
#[derive(Args, Debug)]
struct MetricArgs {
    /// Norm order of the L^p normalization (positive integer or "inf").
    #[arg(long = "p-norm", default_value = "1")]
    p_norm: NormOrder,
    #[arg(long = "h-min", default_value_t = 1e-8)]
    h_min: f64,
    #[arg(long = "h-max", default_value_t = 0.5)]
    h_max: f64,
    #[arg(long, default_value_t = 1.3)]
    gradation: f64,
    /// Repartition and re-adapt passes per adaptation.
    #[arg(long = "parallel-iters", default_value_t = 3)]
    parallel_iters: usize,
    /// Number of partitions adapted concurrently.
    #[arg(long, default_value_t = 1)]
    parts: usize,
    /// Bisection axis seed of the partitioner.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl MetricArgs {
    fn options(&self, target: f64, iters: usize) -> AdaptOptions {
        AdaptOptions {
            target_complexity: target,
            p: self.p_norm,
            h_min: self.h_min,
            h_max: self.h_max,
            a_max: None,
            gradation: self.gradation,
            fixed_point_iters: iters,
            parallel_iters: self.parallel_iters,
            num_parts: self.parts,
            seed: self.seed,
        }
    }
}

#[derive(Args, Debug)]
struct AdaptCmd {
    #[arg(long)]
    mesh: PathBuf,
    #[arg(long)]
    sol: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Also write the metric interpolated on the adapted mesh here.
    #[arg(long = "out-sol")]
    out_sol: Option<PathBuf>,
    #[arg(long)]
    vtk: Option<PathBuf>,
    #[command(flatten)]
    metric: MetricArgs,
}

#[derive(Args, Debug)]
struct SolveCmd {
    #[arg(long, value_enum)]
    problem: Problem,
    /// Target metric complexity N.
    #[arg(long, default_value_t = 1000.0)]
    target: f64,
    /// Fixed-point iterations.
    #[arg(long, default_value_t = 3)]
    iters: usize,
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    vtk: Option<PathBuf>,
    /// Write the final mesh in Medit format.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    metric: MetricArgs,
}

#[derive(Args, Debug)]
struct ConvergeCmd {
    #[arg(long, value_enum)]
    problem: Problem,
    /// Increasing target complexities, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    targets: Vec<f64>,
    #[arg(long, default_value_t = 3)]
    iters: usize,
    #[arg(long)]
    csv: Option<PathBuf>,
    #[command(flatten)]
    metric: MetricArgs,
}

#[derive(Args, Debug)]
struct StatsCmd {
    #[arg(long)]
    mesh: PathBuf,
    #[arg(long)]
    csv: Option<PathBuf>,
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn load_mesh(path: &Path) -> Result<SimplicialMesh> {
    read_medit(path).with_context(|| format!("reading {}", path.display()))
}

fn cmd_adapt(cmd: &AdaptCmd) -> Result<()> {
    let mesh = load_mesh(&cmd.mesh)?;
    if mesh.dim() != 2 {
        bail!("adaptation runs on 2D meshes only, {} is {}D", cmd.mesh.display(), mesh.dim());
    }
    let metric = read_sol(&cmd.sol, &mesh).with_context(|| format!("reading {}", cmd.sol.display()))?;
    // Target and fixed-point count are unused by a single adaptation.
    let opts = cmd.metric.options(1.0, 1);
    opts.validate()?;
    let adapted = parallel_adapt(&mesh, &metric, &opts)?;
    write_medit(&adapted.mesh, &cmd.out)?;
    if let Some(p) = &cmd.out_sol {
        write_sol(&adapted.metric, p)?;
    }
    if let Some(p) = &cmd.vtk {
        write_vtk(&adapted.mesh, &[VtkField::Tensor("metric", &adapted.metric)], p)?;
    }
    let stats = statistics(&adapted.mesh);
    info!("adapted {} -> {} elements", mesh.num_cells(), stats.element_count);
    let mut w = output(None)?;
    writeln!(w, "{STATS_CSV_HEADER}")?;
    writeln!(w, "{}", stats.csv_row())?;
    w.flush()?;
    Ok(())
}

fn cmd_solve(cmd: &SolveCmd) -> Result<()> {
    let problem = cmd.problem.build();
    let opts = cmd.metric.options(cmd.target, cmd.iters);
    let run = run_fixed_point(&problem, &opts)?;
    let mut w = output(cmd.csv.as_deref())?;
    write_fixed_point_csv(&mut w, cmd.problem.name(), &opts, &run.records)?;
    w.flush()?;
    if let Some(p) = &cmd.vtk {
        write_vtk(
            &run.mesh,
            &[VtkField::Scalar("u", run.solution.values()), VtkField::Tensor("metric", &run.metric)],
            p,
        )?;
    }
    if let Some(p) = &cmd.out {
        write_medit(&run.mesh, p)?;
    }
    Ok(())
}

fn cmd_converge(cmd: &ConvergeCmd) -> Result<()> {
    let problem = cmd.problem.build();
    let opts = cmd.metric.options(cmd.targets.first().copied().unwrap_or(1.0), cmd.iters);
    let study = convergence_study(&problem, &cmd.targets, &opts)?;
    info!(
        "fitted slopes: adaptive {:.3}, uniform {:.3}",
        study.adaptive_slope, study.uniform_slope
    );
    let mut w = output(cmd.csv.as_deref())?;
    write_study_csv(&mut w, &study)?;
    w.flush()?;
    Ok(())
}

fn cmd_stats(cmd: &StatsCmd) -> Result<()> {
    let mesh = load_mesh(&cmd.mesh)?;
    let stats = statistics(&mesh);
    let mut w = output(cmd.csv.as_deref())?;
    writeln!(w, "{STATS_CSV_HEADER}")?;
    writeln!(w, "{}", stats.csv_row())?;
    w.flush()?;
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return if usage { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match &cli.command {
        Command::Adapt(c) => cmd_adapt(c),
        Command::Solve(c) => cmd_solve(c),
        Command::Converge(c) => cmd_converge(c),
        Command::Stats(c) => cmd_stats(c),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
