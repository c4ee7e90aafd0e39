//! Error norms, the discrete negative norm, the energy semi-norm and a few
//! run diagnostics.

use crate::assembly::{assemble_mass, assemble_stiffness};
use crate::basis::{lagrange2, spatial_rule, time_diff_coeffs};
use crate::error::{invalid, Result};
use crate::linalg::dot;
use crate::mesh::{MeshSlice, TimePartition};

/// Final-time errors of one run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorRecord {
    pub n: usize,
    pub m: usize,
    pub l2_final: f64,
    pub h1_final: f64,
    pub energy: Option<f64>,
    pub cpu_seconds: f64,
}

/// `int_Omega g(e, xi) dx` over the slice, 5-point Gauss per element.
fn integrate_local(slice: &MeshSlice, g: impl Fn(usize, f64) -> f64) -> f64 {
    let rule = spatial_rule();
    (0..slice.n_elements())
        .map(|e| {
            let h = slice.element_lengths[e];
            h * rule
                .points
                .iter()
                .zip(&rule.weights)
                .map(|(&xi, &w)| w * g(e, xi))
                .sum::<f64>()
        })
        .sum()
}

/// `||u_h - u||_0` for coefficients `coeffs` on `slice`.
pub fn l2_error(slice: &MeshSlice, coeffs: &[f64], exact: impl Fn(f64) -> f64) -> f64 {
    integrate_local(slice, |e, xi| {
        let x = slice.element_left(e) + slice.element_lengths[e] * xi;
        let d = slice.evaluate_local(coeffs, e, xi).0 - exact(x);
        d * d
    })
    .sqrt()
}

/// `|u_h - u|_1`, given the exact derivative.
pub fn h1_seminorm_error(slice: &MeshSlice, coeffs: &[f64], exact_x: impl Fn(f64) -> f64) -> f64 {
    integrate_local(slice, |e, xi| {
        let x = slice.element_left(e) + slice.element_lengths[e] * xi;
        let d = slice.evaluate_local(coeffs, e, xi).1 - exact_x(x);
        d * d
    })
    .sqrt()
}

/// `sup |<v, chi>| / ||chi||_1` over the finite element space of `slice`.
pub fn negative_norm(v: impl Fn(f64) -> f64, slice: &MeshSlice) -> Result<f64> {
    negative_norm_local(slice, |e, xi| {
        v(slice.element_left(e) + slice.element_lengths[e] * xi)
    })
}

/// As [`negative_norm`], with `v` given in element coordinates.
fn negative_norm_local(slice: &MeshSlice, v: impl Fn(usize, f64) -> f64) -> Result<f64> {
    let rule = spatial_rule();
    let mut r = vec![0.0; slice.n_nodes()];
    for e in 0..slice.n_elements() {
        let h = slice.element_lengths[e];
        let dofs = MeshSlice::dofs(e);
        for (&xi, &w) in rule.points.iter().zip(&rule.weights) {
            let val = v(e, xi);
            let phi = lagrange2(xi);
            for j in 0..3 {
                r[dofs[j]] += w * h * val * phi[j].0;
            }
        }
    }
    if r.iter().all(|&x| x == 0.0) {
        return Ok(0.0);
    }
    let gram = assemble_mass(slice)?.combine(1.0, &assemble_stiffness(slice)?, 1.0);
    let y = gram.solve(&r)?;
    Ok(dot(&r, &y).max(0.0).sqrt())
}

/// Squared `H^1` norm of `v` given as `(value, d/dxi)` in element coordinates.
fn h1_sq_local(slice: &MeshSlice, v: impl Fn(usize, f64) -> (f64, f64)) -> f64 {
    integrate_local(slice, |e, xi| {
        let (val, dxi) = v(e, xi);
        let dx = dxi / slice.element_lengths[e];
        val * val + dx * dx
    })
}

fn l2_sq_local(slice: &MeshSlice, v: impl Fn(usize, f64) -> (f64, f64)) -> f64 {
    integrate_local(slice, |e, xi| v(e, xi).0.powi(2))
}

/// Error field for [`energy_seminorm`]: `(partition, s, element, xi)` to the
/// value and `d/dxi` of the error at the point that sits at local coordinate
/// `xi` of `element` at normalized time `s`.
///
/// Evaluating the field at basis time `s` and integrating on the slice of a
/// different time is the shift of a function between slices of a partition.
pub type ErrorField<'a> = dyn Fn(usize, f64, usize, f64) -> (f64, f64) + 'a;

/// Squared energy semi-norm of a space-time error:
///
/// `max_{i,j} ||u(t_{i,j})||_0^2 + sum_i dt_i ( ||dbar u(t_{i,1})||_{-1}^2
///   + ||u_TR(t_{i,1})||_1^2 + ||u(zeta_{i,1})||_1^2 + ||dbar u(t_i-)||_{-1}^2
///   + ||u(t_i-)||_1^2 )`,
///
/// where every term is integrated on the slice at its collocation time.
pub fn energy_seminorm(partitions: &[TimePartition], err: &ErrorField<'_>) -> Result<f64> {
    let mut max_l2: f64 = 0.0;
    let mut sum = 0.0;
    for (i, p) in partitions.iter().enumerate() {
        let eps = p.eps;
        let c = time_diff_coeffs(eps)?;
        let dt = p.dt;
        let mid = p.slice_at_normalized(0.5 * eps)?;
        let end = p.slice_at_normalized(1.0)?;
        let at = |s: f64| move |e: usize, xi: f64| err(i, s, e, xi);
        let e0 = at(0.0);
        let e1 = at(eps);
        let e2 = at(1.0);

        max_l2 = max_l2.max(l2_sq_local(&mid, |e, xi| err(i, 0.5 * eps, e, xi)));
        max_l2 = max_l2.max(l2_sq_local(&end, e2));

        let dmid = negative_norm_local(&mid, |e, xi| {
            (c.mid.0 * e0(e, xi).0 + c.mid.1 * e1(e, xi).0) / dt
        })?;
        let tr = h1_sq_local(&mid, |e, xi| {
            let (a, da) = e0(e, xi);
            let (b, db) = e1(e, xi);
            (0.5 * (a + b), 0.5 * (da + db))
        });
        let z1 = h1_sq_local(&mid, e1);
        let dend = negative_norm_local(&end, |e, xi| {
            (c.end.0 * e0(e, xi).0 + c.end.1 * e1(e, xi).0 + c.end.2 * e2(e, xi).0) / dt
        })?;
        let last = h1_sq_local(&end, e2);
        sum += dt * (dmid * dmid + tr + z1 + dend * dend + last);
    }
    Ok(max_l2 + sum)
}

/// `max |v|` sampled at the element ends and the quadrature points of every
/// element. A diagnostic lower bound for the true supremum.
pub fn sup_norm_sampled(slice: &MeshSlice, v: impl Fn(usize, f64) -> f64) -> f64 {
    let rule = spatial_rule();
    (0..slice.n_elements())
        .flat_map(|e| {
            let v = &v;
            [0.0, 1.0]
                .into_iter()
                .chain(rule.points.iter().copied())
                .map(move |xi| v(e, xi).abs())
        })
        .fold(0.0, f64::max)
}

/// Amount by which samples leave `[lo, hi]`.
pub fn overshoot_metric(samples: &[f64], bounds: (f64, f64)) -> f64 {
    let max = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = samples.iter().copied().fold(f64::INFINITY, f64::min);
    if samples.is_empty() {
        return 0.0;
    }
    (max - bounds.1).max(0.0) + (bounds.0 - min).max(0.0)
}

/// Values of the finite element function at `per_element` equispaced points
/// of every element (both ends included).
pub fn sample_solution(slice: &MeshSlice, coeffs: &[f64], per_element: usize) -> Vec<(f64, f64)> {
    let k = per_element.max(2);
    let mut out = Vec::with_capacity(slice.n_elements() * (k - 1) + 1);
    for e in 0..slice.n_elements() {
        let start = if e == 0 { 0 } else { 1 };
        for j in start..k {
            let xi = j as f64 / (k - 1) as f64;
            let x = slice.element_left(e) + slice.element_lengths[e] * xi;
            out.push((x, slice.evaluate_local(coeffs, e, xi).0));
        }
    }
    out
}

/// Least-squares slope of `log(error)` against `log(step)`.
pub fn convergence_rate(errors: &[f64], steps: &[f64]) -> Result<f64> {
    if errors.len() != steps.len() {
        return invalid("errors and step sizes differ in length");
    }
    if errors.len() < 3 {
        return invalid(format!("need at least 3 points, got {}", errors.len()));
    }
    if errors
        .iter()
        .chain(steps)
        .any(|&v| !(v > 0.0) || !v.is_finite())
    {
        return invalid("errors and step sizes must be positive");
    }
    let xs: Vec<f64> = steps.iter().map(|v| v.ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|v| v.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return invalid("step sizes are all equal");
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    Ok(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_uniform_slice, NodeTrajectory};
    use rand::{rngs::StdRng, Rng, SeedableRng};

    #[test]
    fn l2_examples() {
        let s = build_uniform_slice(-3.0, 3.0, 21, 0.0).unwrap();
        let c = s.interpolate(|x| x * x);
        assert!(l2_error(&s, &c, |x| x * x) < 1e-12);
        let zero = vec![0.0; 21];
        assert!((l2_error(&s, &zero, |_| 1.0) - 6f64.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn l2_against_refined_quadrature() {
        let s = build_uniform_slice(-3.0, 3.0, 101, 0.0).unwrap();
        let u = |x: f64| (-x * x).exp();
        let c = s.interpolate(u);
        let got = l2_error(&s, &c, u);
        // composite Simpson with 200 panels per element
        let mut acc = 0.0;
        for e in 0..s.n_elements() {
            let (a, h) = (s.element_left(e), s.element_lengths[e]);
            let k = 200;
            for j in 0..=k {
                let w = if j == 0 || j == k {
                    1.0
                } else if j % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                let xi = j as f64 / k as f64;
                let d = s.evaluate_local(&c, e, xi).0 - u(a + h * xi);
                acc += w * d * d * h / (3.0 * k as f64);
            }
        }
        assert!((got - acc.sqrt()).abs() < 1e-10);
    }

    #[test]
    fn h1_examples() {
        let s = build_uniform_slice(0.0, 1.0, 9, 0.0).unwrap();
        let zero = vec![0.0; 9];
        assert!((h1_seminorm_error(&s, &zero, |_| 1.0) - 1.0).abs() < 1e-13);
        let c = s.interpolate(|x| x * x);
        assert!(h1_seminorm_error(&s, &c, |x| 2.0 * x) < 1e-12);

        let mut rng = StdRng::seed_from_u64(4);
        let c: Vec<f64> = (0..9).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let k = assemble_stiffness(&s).unwrap();
        let q = dot(&c, &k.matvec(&c));
        assert!((h1_seminorm_error(&s, &c, |_| 0.0).powi(2) - q).abs() < 1e-12);
    }

    #[test]
    fn negative_norm_examples() {
        let s = build_uniform_slice(0.0, 1.0, 11, 0.0).unwrap();
        assert_eq!(negative_norm(|_| 0.0, &s).unwrap(), 0.0);
        assert!((negative_norm(|_| 1.0, &s).unwrap() - 1.0).abs() < 1e-12);
        let v = |x: f64| (3.0 * x).sin() + x;
        let nn = negative_norm(v, &s).unwrap();
        let zero = vec![0.0; 11];
        assert!(nn <= l2_error(&s, &zero, v) + 1e-14);
    }

    #[test]
    fn negative_norm_is_a_supremum() {
        let s = build_uniform_slice(-1.0, 2.0, 13, 0.0).unwrap();
        let mut rng = StdRng::seed_from_u64(8);
        let vc: Vec<f64> = (0..13).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let nn = negative_norm(|x| s.evaluate(&vc, x).0, &s).unwrap();
        let m = assemble_mass(&s).unwrap();
        let g = m.combine(1.0, &assemble_stiffness(&s).unwrap(), 1.0);
        let mut best: f64 = 0.0;
        for _ in 0..200 {
            let chi: Vec<f64> = (0..13).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let norm = dot(&chi, &g.matvec(&chi)).sqrt();
            best = best.max(dot(&vc, &m.matvec(&chi)).abs() / norm);
        }
        assert!(best <= nn + 1e-8);
        // the maximiser is G^-1 r
        let r = m.matvec(&vc);
        let chi = g.solve(&r).unwrap();
        let attained = dot(&r, &chi).abs() / dot(&chi, &g.matvec(&chi)).sqrt();
        assert!((attained - nn).abs() < 1e-10);
    }

    fn one_partition(dt: f64) -> TimePartition {
        let s = build_uniform_slice(-3.0, 3.0, 13, 0.0).unwrap();
        let paths = s
            .vertices()
            .map(|x| NodeTrajectory {
                c0: x,
                c1: 0.1 * (9.0 - x * x) * dt,
                c2: 0.0,
            })
            .collect();
        TimePartition::new(0.0, dt, 2.0 - 2f64.sqrt(), paths).unwrap()
    }

    #[test]
    fn energy_examples() {
        let p = one_partition(0.1);
        let zero = |_: usize, _: f64, _: usize, _: f64| (0.0, 0.0);
        assert_eq!(
            energy_seminorm(std::slice::from_ref(&p), &zero).unwrap(),
            0.0
        );
        let gamma = 0.7;
        let konst = |_: usize, _: f64, _: usize, _: f64| (gamma, 0.0);
        let got = energy_seminorm(std::slice::from_ref(&p), &konst).unwrap();
        let want = gamma * gamma * 6.0 * (1.0 + 3.0 * 0.1);
        assert!((got - want).abs() < 1e-10, "{got} vs {want}");
        let double = |_: usize, s: f64, e: usize, xi: f64| (2.0 * (s + xi + e as f64), 2.0);
        let single = |_: usize, s: f64, e: usize, xi: f64| (s + xi + e as f64, 1.0);
        let a = energy_seminorm(std::slice::from_ref(&p), &double).unwrap();
        let b = energy_seminorm(std::slice::from_ref(&p), &single).unwrap();
        assert!((a - 4.0 * b).abs() < 1e-10 * a);
    }

    #[test]
    fn sampled_sup_norm() {
        let s = build_uniform_slice(-1.0, 1.0, 21, 0.0).unwrap();
        let c = s.interpolate(|x| 1.0 - x * x);
        let sup = sup_norm_sampled(&s, |e, xi| s.evaluate_local(&c, e, xi).0);
        // x = 0 is an element end on this mesh
        assert!((sup - 1.0).abs() < 1e-14);
        let neg: Vec<f64> = c.iter().map(|v| -3.0 * v).collect();
        let sup3 = sup_norm_sampled(&s, |e, xi| s.evaluate_local(&neg, e, xi).0);
        assert!((sup3 - 3.0).abs() < 1e-13);
        // ||v||_0 <= sqrt(|Omega|) sup |v|, attained samples included
        assert!(l2_error(&s, &c, |_| 0.0) <= 2f64.sqrt() * sup);
    }

    #[test]
    fn overshoot_examples() {
        assert_eq!(overshoot_metric(&[0.0, 0.3, 1.0], (0.0, 1.0)), 0.0);
        assert!((overshoot_metric(&[0.5, 1.08, 0.2], (0.0, 1.0)) - 0.08).abs() < 1e-15);
        assert!((overshoot_metric(&[-0.1, 1.2], (0.0, 1.0)) - 0.3).abs() < 1e-15);
    }

    #[test]
    fn rate_examples() {
        let hs = [0.1, 0.05, 0.025, 0.0125];
        let e2: Vec<f64> = hs.iter().map(|h| 3.0 * h * h).collect();
        assert!((convergence_rate(&e2, &hs).unwrap() - 2.0).abs() < 1e-10);
        let e3: Vec<f64> = hs.iter().map(|h| h * h * h).collect();
        assert!((convergence_rate(&e3, &hs).unwrap() - 3.0).abs() < 1e-10);
        let wobble: Vec<f64> = hs.iter().map(|h| h * h * (1.0 + 0.1 * h.sin())).collect();
        assert!((convergence_rate(&wobble, &hs).unwrap() - 2.0).abs() < 0.05);
        assert!(convergence_rate(&[0.0, 1.0, 2.0], &[1.0, 2.0, 3.0]).is_err());
        assert!(convergence_rate(&[1.0, 2.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn samples_cover_the_mesh() {
        let s = build_uniform_slice(0.0, 1.0, 5, 0.0).unwrap();
        let pts = sample_solution(&s, &s.interpolate(|x| x), 11);
        assert_eq!(pts.len(), 21);
        assert!(pts.iter().all(|(x, u)| (x - u).abs() < 1e-14));
    }
}
