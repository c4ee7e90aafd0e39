//! TR-BDF2 on moving meshes.
//!
//! Coefficient vectors are shared by all slices of a partition, so the stages
//! only differ in which slice the matrices are assembled on: `t_{i,1}` for the
//! trapezoid stage and `t_{i,2}` for the BDF2 stage.

use num_complex::Complex64;

use crate::assembly::{assemble_mass, assemble_operator, OperatorOptions};
use crate::basis::{check_eps, lagrange2, spatial_rule, time_lagrange};
use crate::error::{invalid, Error, Result};
use crate::linalg::{norm2, BandedMatrix};
use crate::mesh::{MeshSlice, TimePartition};
use crate::problems::ProblemSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransferMode {
    Interpolate,
    L2Project,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepperConfig {
    pub eps: f64,
    pub transfer: TransferMode,
    pub supg_delta: f64,
    /// Newton iterations per stage for nonlinear problems.
    pub newton_steps: usize,
}

pub const DEFAULT_EPS: f64 = 0.5857864376269049;

impl Default for StepperConfig {
    fn default() -> Self {
        Self {
            eps: 2.0 - std::f64::consts::SQRT_2,
            transfer: TransferMode::Interpolate,
            supg_delta: 0.0,
            newton_steps: 1,
        }
    }
}

impl StepperConfig {
    pub fn validate(&self) -> Result<()> {
        check_eps(self.eps)?;
        if !(self.supg_delta >= 0.0) {
            return invalid(format!("SUPG coefficient {} must be >= 0", self.supg_delta));
        }
        if self.newton_steps == 0 {
            return invalid("at least one Newton step is required");
        }
        Ok(())
    }

    fn operator_options<'a>(
        &self,
        advecting: Option<&'a [f64]>,
        linearize: bool,
    ) -> OperatorOptions<'a> {
        OperatorOptions {
            advecting,
            linearize,
            supg_delta: self.supg_delta,
        }
    }
}

/// Solution on one partition: coefficients at the basis times `zeta_0..2`.
#[derive(Debug, Clone, PartialEq)]
pub struct FEFunction {
    pub u0: Vec<f64>,
    pub u1: Vec<f64>,
    pub u2: Vec<f64>,
    pub partition: TimePartition,
}

impl FEFunction {
    /// Coefficients at normalized time `s` (quadratic in time along the node
    /// trajectories).
    pub fn coefficients_at(&self, s: f64) -> Vec<f64> {
        let w = time_lagrange(s, self.partition.eps);
        (0..self.u0.len())
            .map(|k| w[0] * self.u0[k] + w[1] * self.u1[k] + w[2] * self.u2[k])
            .collect()
    }

    /// Value at physical `(x, t)`.
    pub fn evaluate(&self, x: f64, t: f64) -> Result<f64> {
        let slice = self.partition.slice_at(t)?;
        let s = self.partition.normalized(t);
        Ok(slice.evaluate(&self.coefficients_at(s), x).0)
    }

    pub fn end_slice(&self) -> Result<MeshSlice> {
        self.partition.slice_at_normalized(1.0)
    }
}

/// Initial coefficients on `slice`: nodal interpolation or L2 projection of `f`.
pub fn initial_coefficients(
    slice: &MeshSlice,
    f: impl Fn(f64) -> f64,
    mode: TransferMode,
) -> Result<Vec<f64>> {
    match mode {
        TransferMode::Interpolate => Ok(slice.interpolate(f)),
        TransferMode::L2Project => {
            let rule = spatial_rule();
            let mut r = vec![0.0; slice.n_nodes()];
            for e in 0..slice.n_elements() {
                let h = slice.element_lengths[e];
                let xl = slice.element_left(e);
                let dofs = MeshSlice::dofs(e);
                for (&xi, &w) in rule.points.iter().zip(&rule.weights) {
                    let fx = f(xl + h * xi);
                    let phi = lagrange2(xi);
                    for j in 0..3 {
                        r[dofs[j]] += w * h * fx * phi[j].0;
                    }
                }
            }
            solve_mass(slice, &r)
        }
    }
}

fn solve_mass(slice: &MeshSlice, r: &[f64]) -> Result<Vec<f64>> {
    assemble_mass(slice)?.solve(r).map_err(|e| match e {
        Error::Singular(msg) => Error::DegenerateMesh(format!("singular mass matrix: {msg}")),
        other => other,
    })
}

/// Moves a finite element function across a mesh discontinuity.
pub fn transfer_initial(
    prev: &[f64],
    old_slice: &MeshSlice,
    new_slice: &MeshSlice,
    mode: TransferMode,
) -> Result<Vec<f64>> {
    if prev.len() != old_slice.n_nodes() {
        return invalid(format!(
            "{} coefficients for a slice with {} nodes",
            prev.len(),
            old_slice.n_nodes()
        ));
    }
    if old_slice.same_geometry(new_slice) {
        return Ok(prev.to_vec());
    }
    match mode {
        TransferMode::Interpolate => Ok(new_slice.interpolate(|x| old_slice.evaluate(prev, x).0)),
        TransferMode::L2Project => {
            let r = project_rhs(prev, old_slice, new_slice);
            solve_mass(new_slice, &r)
        }
    }
}

/// `r_j = <u_old, phi_j^new>` integrated exactly over the common refinement
/// of both meshes (each piece is a polynomial product of degree 4).
fn project_rhs(prev: &[f64], old: &MeshSlice, new: &MeshSlice) -> Vec<f64> {
    let rule = spatial_rule();
    let mut r = vec![0.0; new.n_nodes()];
    let old_n_el = old.n_elements();
    for e in 0..new.n_elements() {
        let a = new.element_left(e);
        let h = new.element_lengths[e];
        let b = a + h;
        let dofs = MeshSlice::dofs(e);
        let (mut oe, _) = old.locate(a);
        let mut lo = a;
        loop {
            let old_right = if oe + 1 < old_n_el {
                old.element_left(oe + 1)
            } else {
                f64::INFINITY
            };
            let hi = b.min(old_right);
            if hi > lo {
                let len = hi - lo;
                let ol = old.element_left(oe);
                let oh = old.element_lengths[oe];
                for (&q, &w) in rule.points.iter().zip(&rule.weights) {
                    let x = lo + len * q;
                    let u = old.evaluate_local(prev, oe, (x - ol) / oh).0;
                    let phi = lagrange2((x - a) / h);
                    for j in 0..3 {
                        r[dofs[j]] += w * len * u * phi[j].0;
                    }
                }
            }
            if hi >= b {
                break;
            }
            lo = hi;
            oe += 1;
        }
    }
    r
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StageKind {
    Tr,
    Bdf2,
}

/// One stage written as `alpha M W - M h + N(theta W + kappa) - L = 0`, where
/// `N(v) = A(v) v` is the spatial operator (linear unless the problem is).
struct Stage {
    slice: MeshSlice,
    t: f64,
    alpha: f64,
    theta: f64,
    kappa: Vec<f64>,
    history: Vec<f64>,
    mass: BandedMatrix,
}

impl Stage {
    fn new(
        kind: StageKind,
        u0: &[f64],
        u1: Option<&[f64]>,
        partition: &TimePartition,
        eps: f64,
    ) -> Result<Self> {
        check_eps(eps)?;
        if (eps - partition.eps).abs() > 1e-15 {
            return invalid(format!(
                "stepper eps {eps} differs from the partition's {}",
                partition.eps
            ));
        }
        let n = partition.n_nodes();
        if u0.len() != n {
            return invalid(format!("{} coefficients for {n} nodes", u0.len()));
        }
        let dt = partition.dt;
        let (t1, t2) = partition.collocation_times();
        let (t, alpha, theta, kappa, history) = match kind {
            StageKind::Tr => {
                let alpha = 1.0 / (eps * dt);
                (
                    t1,
                    alpha,
                    0.5,
                    u0.iter().map(|v| 0.5 * v).collect(),
                    u0.iter().map(|v| alpha * v).collect(),
                )
            }
            StageKind::Bdf2 => {
                let u1 = match u1 {
                    Some(u1) if u1.len() == n => u1,
                    _ => return invalid("BDF2 stage needs the trapezoid stage value"),
                };
                let w1 = 1.0 / (eps * (1.0 - eps) * dt);
                let w0 = (1.0 - eps) / (eps * dt);
                (
                    t2,
                    (2.0 - eps) / ((1.0 - eps) * dt),
                    1.0,
                    vec![0.0; n],
                    u1.iter().zip(u0).map(|(a, b)| w1 * a - w0 * b).collect(),
                )
            }
        };
        let slice = partition.slice_at(t)?;
        let mass = assemble_mass(&slice)?;
        Ok(Self {
            slice,
            t,
            alpha,
            theta,
            kappa,
            history,
            mass,
        })
    }

    fn combined(&self, w: &[f64]) -> Vec<f64> {
        w.iter()
            .zip(&self.kappa)
            .map(|(a, b)| self.theta * a + b)
            .collect()
    }

    /// Residual and the scale `|rhs| + |matrix| |w|` used to judge it.
    fn residual(
        &self,
        w: &[f64],
        problem: &ProblemSpec,
        config: &StepperConfig,
    ) -> Result<(Vec<f64>, f64)> {
        let v = self.combined(w);
        let (a, load) = assemble_operator(
            &self.slice,
            problem,
            self.t,
            &config.operator_options(Some(&v), false),
        )?;
        let mw = self.mass.matvec(w);
        let mh = self.mass.matvec(&self.history);
        let av = a.matvec(&v);
        let r: Vec<f64> = (0..w.len())
            .map(|k| self.alpha * mw[k] - mh[k] + av[k] - load[k])
            .collect();
        let lhs = self.mass.combine(self.alpha, &a, self.theta);
        let rhs_norm = norm2(&mh) + norm2(&load) + norm2(&a.matvec(&self.kappa));
        let scale = rhs_norm + lhs.norm_inf() * norm2(w);
        Ok((r, scale))
    }

    /// Direct solve of the linear stage equation.
    fn solve_linear(&self, problem: &ProblemSpec, config: &StepperConfig) -> Result<Vec<f64>> {
        let (a, load) = assemble_operator(
            &self.slice,
            problem,
            self.t,
            &config.operator_options(None, false),
        )?;
        let lhs = self.mass.combine(self.alpha, &a, self.theta);
        let mh = self.mass.matvec(&self.history);
        let ak = a.matvec(&self.kappa);
        let rhs: Vec<f64> = (0..mh.len()).map(|k| mh[k] - ak[k] + load[k]).collect();
        lhs.solve(&rhs)
    }

    fn newton_step(
        &self,
        w: &[f64],
        problem: &ProblemSpec,
        config: &StepperConfig,
    ) -> Result<Vec<f64>> {
        let v = self.combined(w);
        let (r, _) = self.residual(w, problem, config)?;
        let (jac, _) = assemble_operator(
            &self.slice,
            problem,
            self.t,
            &config.operator_options(Some(&v), true),
        )?;
        let j = self.mass.combine(self.alpha, &jac, self.theta);
        let d = j.solve(&r)?;
        Ok(w.iter().zip(&d).map(|(a, b)| a - b).collect())
    }
}

/// Trapezoid stage: `U0 -> U1` at `zeta_1`, enforced at `t_{i,1}`.
pub fn tr_stage(
    u0: &[f64],
    partition: &TimePartition,
    problem: &ProblemSpec,
    config: &StepperConfig,
) -> Result<Vec<f64>> {
    if problem.nonlinear {
        return newton_stage(StageKind::Tr, u0, u0, None, partition, problem, config);
    }
    Stage::new(StageKind::Tr, u0, None, partition, config.eps)?.solve_linear(problem, config)
}

/// BDF2 stage: `(U0, U1) -> U2` at `zeta_2 = t_i`.
pub fn bdf2_stage(
    u0: &[f64],
    u1: &[f64],
    partition: &TimePartition,
    problem: &ProblemSpec,
    config: &StepperConfig,
) -> Result<Vec<f64>> {
    if problem.nonlinear {
        return newton_stage(
            StageKind::Bdf2,
            u1,
            u0,
            Some(u1),
            partition,
            problem,
            config,
        );
    }
    Stage::new(StageKind::Bdf2, u0, Some(u1), partition, config.eps)?.solve_linear(problem, config)
}

/// `config.newton_steps` Newton iterations on the stage equation from `predictor`.
pub fn newton_stage(
    kind: StageKind,
    predictor: &[f64],
    u0: &[f64],
    u1: Option<&[f64]>,
    partition: &TimePartition,
    problem: &ProblemSpec,
    config: &StepperConfig,
) -> Result<Vec<f64>> {
    config.validate()?;
    if predictor.len() != u0.len() {
        return invalid("predictor length does not match the partition");
    }
    let stage = Stage::new(kind, u0, u1, partition, config.eps)?;
    let mut w = predictor.to_vec();
    for _ in 0..config.newton_steps {
        w = stage.newton_step(&w, problem, config)?;
    }
    Ok(w)
}

/// Euclidean norm of the stage residual at `w`, and that norm relative to the
/// stage scale.
pub fn stage_residual(
    kind: StageKind,
    w: &[f64],
    u0: &[f64],
    u1: Option<&[f64]>,
    partition: &TimePartition,
    problem: &ProblemSpec,
    config: &StepperConfig,
) -> Result<(f64, f64)> {
    let stage = Stage::new(kind, u0, u1, partition, config.eps)?;
    let (r, scale) = stage.residual(w, problem, config)?;
    let norm = norm2(&r);
    Ok((norm, if scale > 0.0 { norm / scale } else { norm }))
}

/// Transfer onto the partition's initial slice followed by both stages.
pub fn advance_partition(
    prev_end: &[f64],
    old_slice: &MeshSlice,
    partition: &TimePartition,
    problem: &ProblemSpec,
    config: &StepperConfig,
) -> Result<FEFunction> {
    config.validate()?;
    let start = partition.slice_at_normalized(0.0)?;
    let u0 = transfer_initial(prev_end, old_slice, &start, config.transfer)?;
    let u1 = tr_stage(&u0, partition, problem, config)?;
    let u2 = bdf2_stage(&u0, &u1, partition, problem, config)?;
    Ok(FEFunction {
        u0,
        u1,
        u2,
        partition: partition.clone(),
    })
}

/// Amplification factor of one step on `y' = lambda y`, `z = lambda dt`.
pub fn stability_function(z: Complex64, eps: f64) -> Result<Complex64> {
    check_eps(eps)?;
    let tr_den = 1.0 - eps * z / 2.0;
    let bdf_den = eps * (2.0 - eps) - eps * (1.0 - eps) * z;
    let tiny = 1e-14 * (1.0 + z.norm());
    if tr_den.norm() <= tiny || bdf_den.norm() <= tiny {
        return Err(Error::Domain(format!(
            "z = {z} is a pole of the stability function"
        )));
    }
    let tr = (1.0 + eps * z / 2.0) / tr_den;
    Ok((tr - (1.0 - eps) * (1.0 - eps)) / bdf_den)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_uniform_slice, NodeTrajectory};
    use crate::problems::{problem_burgers, problem_convection};
    use rand::{rngs::StdRng, Rng, SeedableRng};

    fn reaction(kappa: f64) -> ProblemSpec {
        ProblemSpec::new("react", (0.0, 1.0), 1.0).with_reaction(move |_, _| kappa)
    }

    fn frozen(n: usize, lo: f64, hi: f64, dt: f64, eps: f64) -> (MeshSlice, TimePartition) {
        let s = build_uniform_slice(lo, hi, n, 0.0).unwrap();
        let p = TimePartition::frozen(&s, dt, eps).unwrap();
        (s, p)
    }

    /// Scalar two-stage recurrence for `y' = lambda y`.
    fn scalar_step(z: f64, eps: f64) -> f64 {
        let y1 = (1.0 + eps * z / 2.0) / (1.0 - eps * z / 2.0);
        (y1 - (1.0 - eps) * (1.0 - eps)) / (eps * (2.0 - eps) - eps * (1.0 - eps) * z)
    }

    #[test]
    fn stability_examples() {
        for eps in [0.25, 2.0 / 3.0, 2.0 - 2f64.sqrt()] {
            let r = stability_function(Complex64::new(0.0, 0.0), eps).unwrap();
            assert!((r - 1.0).norm() < 1e-15);
        }
        let eps = 2.0 - 2f64.sqrt();
        assert!(
            stability_function(Complex64::new(-1e6, 0.0), eps)
                .unwrap()
                .norm()
                < 1e-3
        );
        let r = stability_function(Complex64::new(-1.0, 0.0), eps).unwrap();
        assert!((r.re - 0.35044026276028173).abs() < 1e-15);
        assert!((r.re - scalar_step(-1.0, eps)).abs() < 1e-15);
        assert!(r.im.abs() < 1e-15);
        assert!(matches!(
            stability_function(Complex64::new(2.0 / eps, 0.0), eps),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn a_stable_on_left_half_plane() {
        for eps in [2.0 / 3.0, 2.0 - 2f64.sqrt()] {
            for i in 0..50 {
                for j in 0..50 {
                    let z =
                        Complex64::new(-100.0 * i as f64 / 49.0, -100.0 + 200.0 * j as f64 / 49.0);
                    assert!(stability_function(z, eps).unwrap().norm() <= 1.0 + 1e-12);
                }
            }
        }
    }

    #[test]
    fn local_error_is_third_order() {
        for eps in [2.0 / 3.0, 2.0 - 2f64.sqrt()] {
            let err = |h: f64| {
                (stability_function(Complex64::new(-h, 0.0), eps).unwrap().re - (-h).exp()).abs()
            };
            let slope = (err(0.02) / err(0.01)).log2();
            assert!((slope - 3.0).abs() < 0.05, "eps {eps}: slope {slope}");
        }
    }

    #[test]
    fn steady_state_is_preserved() {
        let eps = DEFAULT_EPS;
        let (_, p) = frozen(21, -1.0, 2.0, 0.1, eps);
        let prob = ProblemSpec::new("heat", (-1.0, 2.0), 1.0)
            .with_diffusion(|x, _| 1.0 + x * x, |x, _| 2.0 * x);
        let cfg = StepperConfig::default();
        let u0 = vec![1.7; 21];
        let u1 = tr_stage(&u0, &p, &prob, &cfg).unwrap();
        let u2 = bdf2_stage(&u0, &u1, &p, &prob, &cfg).unwrap();
        for k in 0..21 {
            assert!((u1[k] - 1.7).abs() < 1e-13);
            assert!((u2[k] - 1.7).abs() < 1e-13);
        }
    }

    #[test]
    fn reaction_constant_mode_matches_scalar_recurrence() {
        let eps = DEFAULT_EPS;
        let dt = 0.1;
        let kappa = 1.0;
        let (_, p) = frozen(9, 0.0, 1.0, dt, eps);
        let cfg = StepperConfig::default();
        let prob = reaction(kappa);
        let u0 = vec![2.0; 9];
        let u1 = tr_stage(&u0, &p, &prob, &cfg).unwrap();
        let tr = (1.0 - eps * dt * kappa / 2.0) / (1.0 + eps * dt * kappa / 2.0);
        assert!(u1.iter().all(|v| (v - 2.0 * tr).abs() < 1e-13));
        let u2 = bdf2_stage(&u0, &u1, &p, &prob, &cfg).unwrap();
        let r = stability_function(Complex64::new(-0.1, 0.0), eps)
            .unwrap()
            .re;
        assert!(u2.iter().all(|v| (v - 2.0 * r).abs() < 1e-13));
    }

    #[test]
    fn stage_residuals_vanish() {
        let prob = problem_convection();
        let eps = DEFAULT_EPS;
        let s = build_uniform_slice(-3.0, 3.0, 101, 0.0).unwrap();
        // a mildly deforming mesh
        let paths: Vec<NodeTrajectory> = s
            .vertices()
            .map(|x| NodeTrajectory {
                c0: x,
                c1: 0.02 * (9.0 - x * x),
                c2: -0.01 * (9.0 - x * x),
            })
            .collect();
        let p = TimePartition::new(0.0, 0.01, eps, paths).unwrap();
        let cfg = StepperConfig::default();
        let u0 = s.interpolate(|x| (prob.u_initial)(x));
        let u1 = tr_stage(&u0, &p, &prob, &cfg).unwrap();
        let u2 = bdf2_stage(&u0, &u1, &p, &prob, &cfg).unwrap();
        let (_, rel1) = stage_residual(StageKind::Tr, &u1, &u0, None, &p, &prob, &cfg).unwrap();
        let (_, rel2) =
            stage_residual(StageKind::Bdf2, &u2, &u0, Some(&u1), &p, &prob, &cfg).unwrap();
        assert!(rel1 < 1e-10 && rel2 < 1e-10, "{rel1} {rel2}");
    }

    #[test]
    fn newton_on_linear_problem_is_direct_solve() {
        let prob = problem_convection();
        let (s, p) = frozen(41, -3.0, 3.0, 0.05, DEFAULT_EPS);
        let cfg = StepperConfig {
            supg_delta: 0.1,
            ..Default::default()
        };
        let u0 = s.interpolate(|x| (prob.u_initial)(x));
        let direct = tr_stage(&u0, &p, &prob, &cfg).unwrap();
        let zero = vec![0.0; u0.len()];
        let newton = newton_stage(StageKind::Tr, &zero, &u0, None, &p, &prob, &cfg).unwrap();
        for k in 0..u0.len() {
            assert!((direct[k] - newton[k]).abs() < 1e-12);
        }
        let direct2 = bdf2_stage(&u0, &direct, &p, &prob, &cfg).unwrap();
        let newton2 =
            newton_stage(StageKind::Bdf2, &u0, &u0, Some(&direct), &p, &prob, &cfg).unwrap();
        for k in 0..u0.len() {
            assert!((direct2[k] - newton2[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn burgers_constant_state_is_unchanged() {
        let prob = problem_burgers(100.0).unwrap();
        let (s, p) = frozen(21, -3.0, 3.0, 0.08, DEFAULT_EPS);
        let cfg = StepperConfig::default();
        let fe = advance_partition(&[0.7; 21], &s, &p, &prob, &cfg).unwrap();
        assert!(fe.u2.iter().all(|v| (v - 0.7).abs() < 1e-13));
    }

    #[test]
    fn burgers_newton_step_reduces_residual() {
        let prob = problem_burgers(100.0).unwrap();
        let (s, p) = frozen(61, -3.0, 3.0, 2.0 / 25.0, DEFAULT_EPS);
        let cfg = StepperConfig::default();
        let u0 = s.interpolate(|x| (prob.u_initial)(x));
        let (before, _) = stage_residual(StageKind::Tr, &u0, &u0, None, &p, &prob, &cfg).unwrap();
        let u1 = tr_stage(&u0, &p, &prob, &cfg).unwrap();
        let (after, _) = stage_residual(StageKind::Tr, &u1, &u0, None, &p, &prob, &cfg).unwrap();
        assert!(after < before, "{after} >= {before}");
        let (before, _) =
            stage_residual(StageKind::Bdf2, &u1, &u0, Some(&u1), &p, &prob, &cfg).unwrap();
        let u2 = bdf2_stage(&u0, &u1, &p, &prob, &cfg).unwrap();
        let (after, _) =
            stage_residual(StageKind::Bdf2, &u2, &u0, Some(&u1), &p, &prob, &cfg).unwrap();
        assert!(after < before, "{after} >= {before}");
    }

    #[test]
    fn zero_data_gives_zero_solution() {
        let prob = ProblemSpec::new("zero", (0.0, 1.0), 1.0);
        let (s, p) = frozen(7, 0.0, 1.0, 0.1, DEFAULT_EPS);
        let fe = advance_partition(&[0.0; 7], &s, &p, &prob, &StepperConfig::default()).unwrap();
        assert!(fe.u0.iter().chain(&fe.u1).chain(&fe.u2).all(|&v| v == 0.0));
    }

    fn random_mesh(rng: &mut StdRng, n_el: usize, lo: f64, hi: f64) -> MeshSlice {
        let mut cuts: Vec<f64> = (0..n_el - 1).map(|_| rng.gen_range(lo..hi)).collect();
        cuts.sort_by(f64::total_cmp);
        let mut xs = vec![lo];
        xs.extend(cuts);
        xs.push(hi);
        xs.dedup();
        MeshSlice::from_vertices(0.0, &xs, &vec![0.0; xs.len()]).unwrap()
    }

    #[test]
    fn transfer_reproduces_quadratics() {
        let old = MeshSlice::from_vertices(0.0, &[-1.0, 0.3, 2.0], &[0.0; 3]).unwrap();
        let u = old.interpolate(|x| x * x);
        let mut rng = StdRng::seed_from_u64(1);
        for _ in 0..10 {
            let new = random_mesh(&mut rng, 9, -1.0, 2.0);
            for mode in [TransferMode::Interpolate, TransferMode::L2Project] {
                let got = transfer_initial(&u, &old, &new, mode).unwrap();
                for (k, &x) in new.node_positions.iter().enumerate() {
                    assert!((got[k] - x * x).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn transfer_identity_on_identical_slices() {
        let s = build_uniform_slice(-3.0, 3.0, 11, 0.0).unwrap();
        let u: Vec<f64> = (0..11).map(|k| (k as f64).sin()).collect();
        for mode in [TransferMode::Interpolate, TransferMode::L2Project] {
            assert_eq!(transfer_initial(&u, &s, &s.clone(), mode).unwrap(), u);
        }
    }

    #[test]
    fn projection_satisfies_jump_condition() {
        let mut rng = StdRng::seed_from_u64(2);
        for _ in 0..20 {
            let old = random_mesh(&mut rng, 12, -3.0, 3.0);
            let new = random_mesh(&mut rng, 7, -3.0, 3.0);
            let u: Vec<f64> = (0..old.n_nodes())
                .map(|_| rng.gen_range(-1.0..1.0))
                .collect();
            let v = transfer_initial(&u, &old, &new, TransferMode::L2Project).unwrap();
            let r = project_rhs(&u, &old, &new);
            let mv = assemble_mass(&new).unwrap().matvec(&v);
            for k in 0..r.len() {
                assert!((mv[k] - r[k]).abs() < 1e-10);
            }
            let m_old = assemble_mass(&old).unwrap().matvec(&u).iter().sum::<f64>();
            assert!((mv.iter().sum::<f64>() - m_old).abs() < 1e-10);
        }
    }

    #[test]
    fn projected_initial_data_is_exact_for_quadratics() {
        let s = build_uniform_slice(0.0, 1.0, 9, 0.0).unwrap();
        let c = initial_coefficients(&s, |x| 1.0 - 2.0 * x + 3.0 * x * x, TransferMode::L2Project)
            .unwrap();
        for (k, &x) in s.node_positions.iter().enumerate() {
            assert!((c[k] - (1.0 - 2.0 * x + 3.0 * x * x)).abs() < 1e-12);
        }
    }

    #[test]
    fn config_validation() {
        assert!(StepperConfig::default().validate().is_ok());
        assert!(StepperConfig {
            eps: 1.0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(StepperConfig {
            supg_delta: -1.0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(StepperConfig {
            newton_steps: 0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert_eq!(StepperConfig::default().eps, DEFAULT_EPS);
    }
}
