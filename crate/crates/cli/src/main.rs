//! `movfem` command-line driver.
//!
//! Exit codes: 0 on success, 2 for an invalid configuration, 3 when the
//! numerics fail (degenerate mesh, singular solve), 1 for I/O trouble.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use movfem::harness::{
    convergence_motion, default_sweep, motion_label, run_burgers_suite, run_comparison_table,
    run_convergence, run_single, transfer_label, write_results_csv, write_solution_csv, Axis,
    BurgersRun, ResultRow, RunConfig,
};
use movfem::motion::MotionPolicy;
use movfem::timestepper::{TransferMode, DEFAULT_EPS};
use movfem::Error;

#[derive(Parser, Debug)]
#[command(
    name = "movfem",
    version,
    about = "Moving-mesh finite elements with TR-BDF2 time stepping"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// One run; writes a single results row.
    Solve(SolveArgs),
    /// Moving (characteristics) against static over an (n, m) grid.
    Table(TableArgs),
    /// Final-time L2 error over a space or time refinement sweep.
    Convergence(ConvergenceArgs),
    /// Burgers' equation: static Galerkin, static SUPG and moving mesh.
    Burgers(BurgersArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Motion {
    Static,
    Char,
    Solvel,
}

impl Motion {
    fn policy(self) -> MotionPolicy {
        match self {
            Motion::Static => MotionPolicy::fixed(),
            Motion::Char => MotionPolicy::characteristics(),
            Motion::Solvel => MotionPolicy::solution_velocity(),
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Transfer {
    Interp,
    L2,
}

impl From<Transfer> for TransferMode {
    fn from(t: Transfer) -> Self {
        match t {
            Transfer::Interp => TransferMode::Interpolate,
            Transfer::L2 => TransferMode::L2Project,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum AxisArg {
    Space,
    Time,
    Both,
}

#[derive(Args, Debug)]
struct Common {
    /// Results file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Accepted for reproducibility scripts; the solver is deterministic.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Debug)]
struct SolveArgs {
    /// conv1, diff2 or burgers.
    #[arg(long, default_value = "conv1")]
    problem: String,
    /// Node count (odd, at least 5).
    #[arg(long, default_value_t = 101)]
    n: usize,
    /// Number of time partitions.
    #[arg(long, default_value_t = 10)]
    m: usize,
    #[arg(long, value_enum, default_value_t = Motion::Static)]
    motion: Motion,
    #[arg(long, value_enum, default_value_t = Transfer::Interp)]
    transfer: Transfer,
    #[arg(long, default_value_t = DEFAULT_EPS)]
    eps: f64,
    /// SUPG coefficient (0 disables stabilization).
    #[arg(long, default_value_t = 0.0)]
    supg: f64,
    #[arg(long, default_value_t = 100.0)]
    reynolds: f64,
    /// Write `t,x,u` at every partition end.
    #[arg(long)]
    dump_solution: Option<PathBuf>,
    /// Write `node_index,t,x` node trajectories.
    #[arg(long)]
    dump_mesh: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct TableArgs {
    #[arg(long, default_value = "conv1")]
    problem: String,
    /// Comma-separated node counts.
    #[arg(long, value_delimiter = ',', default_values_t = [101, 501, 1001, 3001])]
    n: Vec<usize>,
    /// Comma-separated partition counts.
    #[arg(long, value_delimiter = ',', default_values_t = [10, 20, 50, 75, 100, 200, 500, 1000])]
    m: Vec<usize>,
    #[arg(long, value_enum, default_value_t = Transfer::Interp)]
    transfer: Transfer,
    #[arg(long, default_value_t = DEFAULT_EPS)]
    eps: f64,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct ConvergenceArgs {
    #[arg(long, default_value = "diff2")]
    problem: String,
    #[arg(long, value_enum, default_value_t = AxisArg::Both)]
    axis: AxisArg,
    /// `char` moves nodes along characteristics without resetting the mesh.
    #[arg(long, value_enum, default_value_t = Motion::Char)]
    motion: Motion,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct BurgersArgs {
    #[arg(long, default_value_t = 100.0)]
    reynolds: f64,
    #[arg(long, default_value_t = 61)]
    n: usize,
    #[arg(long, default_value_t = 25)]
    m: usize,
    /// Solutions at every partition end go to `<stem>_<run>.csv` next to this path.
    #[arg(long)]
    dump_solution: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
}

enum Failure {
    Core(Error),
    Io(io::Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Io(e)
    }
}

fn output(path: &Option<PathBuf>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

fn solve(a: SolveArgs) -> Result<(), Failure> {
    let cfg = RunConfig {
        reynolds: a.reynolds,
        eps: a.eps,
        supg_delta: a.supg,
        dump_solution: a.dump_solution,
        dump_mesh: a.dump_mesh,
        ..RunConfig::new(a.problem, a.n, a.m)
            .with_motion(a.motion.policy())
            .with_transfer(a.transfer.into())
    };
    let record = run_single(&cfg)?;
    let row = ResultRow {
        problem: cfg.problem.clone(),
        n: a.n,
        m: a.m,
        motion: motion_label(&cfg.motion).to_string(),
        transfer: transfer_label(cfg.transfer).to_string(),
        eps: a.eps,
        supg: a.supg,
        moving: Ok(record),
        reference: None,
    };
    write_results_csv(output(&a.common.out)?, &[row])?;
    Ok(())
}

fn table(a: TableArgs) -> Result<(), Failure> {
    let rows = run_comparison_table(&a.problem, &a.n, &a.m, a.transfer.into(), a.eps)?;
    write_results_csv(output(&a.common.out)?, &rows)?;
    for r in &rows {
        if let Err(e) = &r.moving {
            eprintln!("n={} m={} moving run failed: {e}", r.n, r.m);
        }
        if let Some(Err(e)) = &r.reference {
            eprintln!("n={} m={} static run failed: {e}", r.n, r.m);
        }
    }
    Ok(())
}

fn convergence(a: ConvergenceArgs) -> Result<(), Failure> {
    let axes: &[Axis] = match a.axis {
        AxisArg::Space => &[Axis::Space],
        AxisArg::Time => &[Axis::Time],
        AxisArg::Both => &[Axis::Time, Axis::Space],
    };
    let motion = match a.motion {
        Motion::Char => convergence_motion(),
        other => other.policy(),
    };
    let mut out = output(&a.common.out)?;
    writeln!(out, "axis,n,m,step,l2")?;
    for &axis in axes {
        let (fixed, sizes) = default_sweep(axis);
        let res = run_convergence(&a.problem, axis, fixed, &sizes, motion)?;
        let label = match axis {
            Axis::Space => "space",
            Axis::Time => "time",
        };
        for ((&k, &h), &e) in res.sizes.iter().zip(&res.steps).zip(&res.errors) {
            let (n, m) = match axis {
                Axis::Space => (k, fixed),
                Axis::Time => (fixed, k),
            };
            writeln!(out, "{label},{n},{m},{h:.11e},{e:.11e}")?;
        }
        eprintln!("{label} order: {:.4}", res.rate);
    }
    out.flush()?;
    Ok(())
}

fn dump_path(base: &Path, label: &str) -> PathBuf {
    let stem = base
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("burgers");
    base.with_file_name(format!("{stem}_{label}.csv"))
}

fn burgers(a: BurgersArgs) -> Result<(), Failure> {
    let suite = run_burgers_suite(a.reynolds, a.n, a.m)?;
    let runs: [&BurgersRun; 3] = [&suite.galerkin, &suite.supg, &suite.moving];
    let mut out = output(&a.common.out)?;
    writeln!(
        out,
        "run,reynolds,n,m,overshoot,front,min_length_near_front,mean_length"
    )?;
    for r in runs {
        writeln!(
            out,
            "{},{},{},{},{:.11e},{:.11e},{:.11e},{:.11e}",
            r.label,
            suite.reynolds,
            suite.n,
            suite.m,
            r.overshoot,
            r.front,
            r.min_length_near_front,
            r.mean_length
        )?;
        if let Some(base) = &a.dump_solution {
            let file = BufWriter::new(File::create(dump_path(base, &r.label))?);
            write_solution_csv(file, &r.output.snapshots)?;
        }
    }
    out.flush()?;
    Ok(())
}

fn exit_code(f: &Failure) -> u8 {
    match f {
        Failure::Io(_) | Failure::Core(Error::Io(_)) => 1,
        Failure::Core(e) if e.is_numerical() => 3,
        Failure::Core(_) => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve(a) => solve(a),
        Command::Table(a) => table(a),
        Command::Convergence(a) => convergence(a),
        Command::Burgers(a) => burgers(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Core(e) => eprintln!("error: {e}"),
                Failure::Io(e) => eprintln!("error: {e}"),
            }
            ExitCode::from(exit_code(&f))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_by_error_kind() {
        let core = |e: Error| exit_code(&Failure::Core(e));
        assert_eq!(core(Error::InvalidArgument("n".into())), 2);
        assert_eq!(core(Error::InvalidCoefficient("a".into())), 2);
        assert_eq!(core(Error::DegenerateMesh("crossing".into())), 3);
        assert_eq!(core(Error::Singular("pivot".into())), 3);
        assert_eq!(core(Error::InvalidState("nodes".into())), 3);
        assert_eq!(core(Error::Io("disk".into())), 1);
        assert_eq!(exit_code(&Failure::Io(io::Error::other("x"))), 1);
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }

    #[test]
    fn burgers_dump_names() {
        assert_eq!(
            dump_path(Path::new("/tmp/out.csv"), "supg"),
            PathBuf::from("/tmp/out_supg.csv")
        );
    }
}
