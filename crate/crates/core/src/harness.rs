//! Experiment driver: single runs, moving-versus-static tables, convergence
//! studies, the Burgers comparison, and CSV output.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::time::Instant;

use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::mesh::{build_uniform_slice, write_trajectory_csv, MeshSlice, TimePartition};
use crate::motion::{plan_partition, reconfigure_between_partitions, MotionKind, MotionPolicy};
use crate::norms::{
    convergence_rate, h1_seminorm_error, l2_error, overshoot_metric, sample_solution, ErrorRecord,
};
use crate::problems::{by_name, problem_burgers, ProblemSpec};
use crate::timestepper::{
    advance_partition, initial_coefficients, StepperConfig, TransferMode, DEFAULT_EPS,
};

/// Everything that defines one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub problem: String,
    /// Only used by `burgers`.
    pub reynolds: f64,
    pub n: usize,
    pub m: usize,
    pub motion: MotionPolicy,
    pub transfer: TransferMode,
    pub eps: f64,
    pub supg_delta: f64,
    pub dump_solution: Option<PathBuf>,
    pub dump_mesh: Option<PathBuf>,
}

impl RunConfig {
    pub fn new(problem: impl Into<String>, n: usize, m: usize) -> Self {
        Self {
            problem: problem.into(),
            reynolds: 100.0,
            n,
            m,
            motion: MotionPolicy::fixed(),
            transfer: TransferMode::Interpolate,
            eps: DEFAULT_EPS,
            supg_delta: 0.0,
            dump_solution: None,
            dump_mesh: None,
        }
    }

    pub fn with_motion(mut self, motion: MotionPolicy) -> Self {
        self.motion = motion;
        self
    }

    pub fn with_transfer(mut self, transfer: TransferMode) -> Self {
        self.transfer = transfer;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 5 || self.n.is_multiple_of(2) {
            return invalid(format!("n = {} must be odd and at least 5", self.n));
        }
        if self.m < 1 {
            return invalid("m must be at least 1");
        }
        self.motion.validate()?;
        self.stepper().validate()
    }

    pub fn stepper(&self) -> StepperConfig {
        StepperConfig {
            eps: self.eps,
            transfer: self.transfer,
            supg_delta: self.supg_delta,
            newton_steps: 1,
        }
    }
}

pub fn motion_label(m: &MotionPolicy) -> &'static str {
    match m.kind {
        MotionKind::Static => "static",
        MotionKind::Characteristics => "char",
        MotionKind::SolutionVelocity => "solvel",
    }
}

pub fn transfer_label(t: TransferMode) -> &'static str {
    match t {
        TransferMode::Interpolate => "interp",
        TransferMode::L2Project => "l2",
    }
}

/// Final state of a run plus whatever was recorded along the way.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub record: ErrorRecord,
    pub final_slice: MeshSlice,
    pub final_coeffs: Vec<f64>,
    /// `(t, slice, coefficients)` at every partition end, if requested.
    pub snapshots: Vec<(f64, MeshSlice, Vec<f64>)>,
    /// Every partition, if requested.
    pub partitions: Vec<TimePartition>,
}

/// Integrates `problem` over `cfg.m` uniform partitions.
pub fn run_problem(
    problem: &ProblemSpec,
    cfg: &RunConfig,
    keep_history: bool,
) -> Result<RunOutput> {
    cfg.validate()?;
    let clock = Instant::now();
    let stepper = cfg.stepper();
    let (lo, hi) = problem.domain;
    let n_el = (cfg.n - 1) / 2;
    let reference = (hi - lo) / n_el as f64;
    let min_length = cfg.motion.min_spacing_factor * reference;
    let t_final = problem.t_final;

    let mut slice = build_uniform_slice(lo, hi, cfg.n, 0.0)?;
    let mut coeffs = initial_coefficients(&slice, |x| (problem.u_initial)(x), cfg.transfer)?;
    let mut snapshots = Vec::new();
    let mut partitions = Vec::new();
    if keep_history {
        snapshots.push((0.0, slice.clone(), coeffs.clone()));
    }
    for i in 0..cfg.m {
        let t0 = t_final * i as f64 / cfg.m as f64;
        let t1 = if i + 1 == cfg.m {
            t_final
        } else {
            t_final * (i + 1) as f64 / cfg.m as f64
        };
        let step = || -> Result<(TimePartition, Vec<f64>)> {
            let start = match cfg.motion.kind {
                MotionKind::Static => slice.clone(),
                _ => reconfigure_between_partitions(&slice, &cfg.motion, reference)?,
            };
            let velocity = |x: f64| slice.evaluate(&coeffs, x).0;
            let (_, partition) = plan_partition(
                &start,
                &cfg.motion,
                problem,
                Some(&velocity),
                t0,
                t1 - t0,
                cfg.eps,
                min_length,
            )?;
            let fe = advance_partition(&coeffs, &slice, &partition, problem, &stepper)?;
            Ok((fe.partition, fe.u2))
        };
        let (partition, u2) =
            step().map_err(|e| e.context(format_args!("partition {} of {}", i + 1, cfg.m)))?;
        slice = partition.slice_at_normalized(1.0)?;
        coeffs = u2;
        if keep_history {
            snapshots.push((t1, slice.clone(), coeffs.clone()));
            partitions.push(partition);
        }
    }
    let cpu_seconds = clock.elapsed().as_secs_f64();
    let (l2_final, h1_final) = match &problem.exact {
        Some(ex) => (
            l2_error(&slice, &coeffs, |x| (ex.u)(x, t_final)),
            h1_seminorm_error(&slice, &coeffs, |x| (ex.u_x)(x, t_final)),
        ),
        None => (f64::NAN, f64::NAN),
    };
    Ok(RunOutput {
        record: ErrorRecord {
            n: cfg.n,
            m: cfg.m,
            l2_final,
            h1_final,
            energy: None,
            cpu_seconds,
        },
        final_slice: slice,
        final_coeffs: coeffs,
        snapshots,
        partitions,
    })
}

/// One run by problem name, writing any requested dumps.
pub fn run_single(cfg: &RunConfig) -> Result<ErrorRecord> {
    let problem = by_name(&cfg.problem, cfg.reynolds)?;
    let keep = cfg.dump_solution.is_some() || cfg.dump_mesh.is_some();
    let out = run_problem(&problem, cfg, keep)?;
    if let Some(path) = &cfg.dump_solution {
        write_solution_csv(BufWriter::new(File::create(path)?), &out.snapshots)?;
    }
    if let Some(path) = &cfg.dump_mesh {
        write_trajectory_csv(BufWriter::new(File::create(path)?), &out.partitions, 5)?;
    }
    Ok(out.record)
}

/// `t,x,u` rows at the nodes of every snapshot.
pub fn write_solution_csv<W: Write>(
    mut out: W,
    snapshots: &[(f64, MeshSlice, Vec<f64>)],
) -> Result<()> {
    writeln!(out, "t,x,u")?;
    for (t, slice, coeffs) in snapshots {
        for (x, u) in slice.node_positions.iter().zip(coeffs) {
            writeln!(out, "{t:.11e},{x:.11e},{u:.11e}")?;
        }
    }
    out.flush()?;
    Ok(())
}

/// One row of the results CSV. A failed run keeps its error message.
#[derive(Debug, Clone)]
pub struct ResultRow {
    pub problem: String,
    pub n: usize,
    pub m: usize,
    pub motion: String,
    pub transfer: String,
    pub eps: f64,
    pub supg: f64,
    pub moving: std::result::Result<ErrorRecord, Error>,
    /// Absent for single solves.
    pub reference: Option<std::result::Result<ErrorRecord, Error>>,
}

impl ResultRow {
    /// `moving / static` final L2 error, when both runs succeeded.
    pub fn ratio(&self) -> Option<f64> {
        match (&self.moving, &self.reference) {
            (Ok(a), Some(Ok(b))) => Some(a.l2_final / b.l2_final),
            _ => None,
        }
    }
}

pub const RESULTS_HEADER: &str =
    "problem,n,m,motion,transfer,eps,supg,l2_moving_or_value,l2_static,ratio,cpu_moving,cpu_static";

fn fmt_num(v: f64) -> String {
    format!("{v:.11e}")
}

pub fn write_results_csv<W: Write>(mut out: W, rows: &[ResultRow]) -> Result<()> {
    writeln!(out, "{RESULTS_HEADER}")?;
    for r in rows {
        let (l2m, cpum) = match &r.moving {
            Ok(rec) => (fmt_num(rec.l2_final), fmt_num(rec.cpu_seconds)),
            Err(_) => ("failed".to_string(), "failed".to_string()),
        };
        let (l2s, cpus) = match &r.reference {
            None => (String::new(), String::new()),
            Some(Ok(rec)) => (fmt_num(rec.l2_final), fmt_num(rec.cpu_seconds)),
            Some(Err(_)) => ("failed".to_string(), "failed".to_string()),
        };
        let ratio = match (&r.moving, &r.reference) {
            (_, None) => String::new(),
            _ => r
                .ratio()
                .map(fmt_num)
                .unwrap_or_else(|| "failed".to_string()),
        };
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            r.problem, r.n, r.m, r.motion, r.transfer, r.eps, r.supg, l2m, l2s, ratio, cpum, cpus
        )?;
    }
    out.flush()?;
    Ok(())
}

/// Row for a moving run against its static reference on the same `(n, m)`.
pub fn compare_cell(
    problem: &str,
    n: usize,
    m: usize,
    motion: MotionPolicy,
    transfer: TransferMode,
    eps: f64,
) -> ResultRow {
    let spec = by_name(problem, 100.0);
    let cfg = RunConfig {
        eps,
        ..RunConfig::new(problem, n, m).with_transfer(transfer)
    };
    let run = |c: &RunConfig| -> std::result::Result<ErrorRecord, Error> {
        let spec = spec.clone()?;
        run_problem(&spec, c, false).map(|o| o.record)
    };
    let (moving, reference) = rayon::join(
        || run(&cfg.clone().with_motion(motion)),
        || run(&cfg.clone().with_motion(MotionPolicy::fixed())),
    );
    ResultRow {
        problem: problem.to_string(),
        n,
        m,
        motion: motion_label(&motion).to_string(),
        transfer: transfer_label(transfer).to_string(),
        eps,
        supg: 0.0,
        moving,
        reference: Some(reference),
    }
}

/// Moving (characteristics with uniform reset) against static for every
/// `(n, m)` of the grid. Rows come back in grid order, `n` outermost.
pub fn run_comparison_table(
    problem: &str,
    n_list: &[usize],
    m_list: &[usize],
    transfer: TransferMode,
    eps: f64,
) -> Result<Vec<ResultRow>> {
    if n_list.is_empty() || m_list.is_empty() {
        return invalid("empty n or m list");
    }
    by_name(problem, 100.0)?;
    let cells: Vec<(usize, usize)> = n_list
        .iter()
        .flat_map(|&n| m_list.iter().map(move |&m| (n, m)))
        .collect();
    Ok(cells
        .par_iter()
        .map(|&(n, m)| {
            compare_cell(
                problem,
                n,
                m,
                MotionPolicy::characteristics(),
                transfer,
                eps,
            )
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Space,
    Time,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceResult {
    pub axis: Axis,
    /// The swept `n` (space) or `m` (time) values.
    pub sizes: Vec<usize>,
    /// Element length or time step for each size.
    pub steps: Vec<f64>,
    pub errors: Vec<f64>,
    pub rate: f64,
}

/// Default sweeps: time with `n = 3001`, `m` in 10..80; space with `m = 1000`,
/// `n` in 51..401.
pub fn default_sweep(axis: Axis) -> (usize, Vec<usize>) {
    match axis {
        Axis::Time => (3001, vec![10, 20, 40, 80]),
        Axis::Space => (1000, vec![51, 101, 201, 401]),
    }
}

/// Motion used for convergence studies: characteristics without reset, so
/// no interpolation error accumulates between partitions.
pub fn convergence_motion() -> MotionPolicy {
    MotionPolicy {
        uniform_reset: false,
        ..MotionPolicy::characteristics()
    }
}

/// Final-time L2 errors over a sweep and their least-squares order.
pub fn run_convergence(
    problem: &str,
    axis: Axis,
    fixed: usize,
    sizes: &[usize],
    motion: MotionPolicy,
) -> Result<ConvergenceResult> {
    let spec = by_name(problem, 100.0)?;
    if spec.exact.is_none() {
        return invalid(format!("problem {problem} has no exact solution"));
    }
    let (lo, hi) = spec.domain;
    let results: Vec<Result<(f64, f64)>> = sizes
        .par_iter()
        .map(|&k| {
            let (n, m) = match axis {
                Axis::Time => (fixed, k),
                Axis::Space => (k, fixed),
            };
            let cfg = RunConfig::new(problem, n, m).with_motion(motion);
            let out = run_problem(&spec, &cfg, false)?;
            let step = match axis {
                Axis::Time => spec.t_final / m as f64,
                Axis::Space => (hi - lo) / ((n - 1) / 2) as f64,
            };
            Ok((step, out.record.l2_final))
        })
        .collect();
    let mut steps = Vec::new();
    let mut errors = Vec::new();
    for r in results {
        let (h, e) = r?;
        steps.push(h);
        errors.push(e);
    }
    let rate = convergence_rate(&errors, &steps)?;
    Ok(ConvergenceResult {
        axis,
        sizes: sizes.to_vec(),
        steps,
        errors,
        rate,
    })
}

/// SUPG coefficient used for the static comparison run at Reynolds number `r`.
pub fn burgers_supg_delta(reynolds: f64) -> f64 {
    if reynolds >= 1000.0 {
        1.0
    } else {
        0.1
    }
}

/// Half-width of the window around the front in which element lengths are
/// inspected.
pub const FRONT_WINDOW: f64 = 0.5;

#[derive(Debug, Clone)]
pub struct BurgersRun {
    pub label: String,
    pub output: RunOutput,
    pub overshoot: f64,
    /// Where the final solution first drops below half the initial left state.
    pub front: f64,
    pub min_length_near_front: f64,
    pub mean_length: f64,
}

#[derive(Debug, Clone)]
pub struct BurgersSuite {
    pub reynolds: f64,
    pub n: usize,
    pub m: usize,
    pub galerkin: BurgersRun,
    pub supg: BurgersRun,
    pub moving: BurgersRun,
}

fn front_position(samples: &[(f64, f64)], level: f64) -> f64 {
    samples
        .windows(2)
        .find(|w| w[0].1 >= level && w[1].1 < level)
        .map(|w| {
            let (x0, u0) = w[0];
            let (x1, u1) = w[1];
            x0 + (x1 - x0) * (u0 - level) / (u0 - u1)
        })
        .unwrap_or(f64::NAN)
}

fn burgers_run(label: &str, problem: &ProblemSpec, cfg: &RunConfig) -> Result<BurgersRun> {
    let output = run_problem(problem, cfg, true)?;
    let samples = sample_solution(&output.final_slice, &output.final_coeffs, 10);
    let values: Vec<f64> = samples.iter().map(|s| s.1).collect();
    let left = (problem.u_initial)(problem.domain.0);
    let right = (problem.u_initial)(problem.domain.1);
    let bounds = (left.min(right), left.max(right));
    let front = front_position(&samples, 0.5 * (left + right));
    let slice = &output.final_slice;
    let min_near = (0..slice.n_elements())
        .filter(|&e| {
            (slice.element_left(e) + 0.5 * slice.element_lengths[e] - front).abs() <= FRONT_WINDOW
        })
        .map(|e| slice.element_lengths[e])
        .fold(f64::INFINITY, f64::min);
    let (lo, hi) = slice.domain();
    Ok(BurgersRun {
        label: label.to_string(),
        overshoot: overshoot_metric(&values, bounds),
        front,
        min_length_near_front: min_near,
        mean_length: (hi - lo) / slice.n_elements() as f64,
        output,
    })
}

/// Static Galerkin, static SUPG and moving (solution velocity) runs of
/// Burgers' equation.
pub fn run_burgers_suite(reynolds: f64, n: usize, m: usize) -> Result<BurgersSuite> {
    let problem = problem_burgers(reynolds)?;
    let base = RunConfig {
        reynolds,
        ..RunConfig::new("burgers", n, m)
    };
    let supg_cfg = RunConfig {
        supg_delta: burgers_supg_delta(reynolds),
        ..base.clone()
    };
    let moving_cfg = base.clone().with_motion(MotionPolicy::solution_velocity());
    let ((galerkin, supg), moving) = rayon::join(
        || {
            rayon::join(
                || burgers_run("galerkin", &problem, &base),
                || burgers_run("supg", &problem, &supg_cfg),
            )
        },
        || burgers_run("moving", &problem, &moving_cfg),
    );
    Ok(BurgersSuite {
        reynolds,
        n,
        m,
        galerkin: galerkin?,
        supg: supg?,
        moving: moving?,
    })
}
