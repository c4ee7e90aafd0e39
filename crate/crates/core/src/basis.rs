//! Reference-element bases, quadrature rules and TR-BDF2 time-difference stencils.
//!
//! Every reference rule lives on `[0, 1]`.

use crate::error::{invalid, Result};

/// Value and derivative of the quadratic Lagrange basis function attached to
/// `node` (nodes at 0, 1/2, 1) at reference coordinate `xhat`.
pub fn lagrange2_eval(xhat: f64, node: usize) -> Result<(f64, f64)> {
    if node > 2 {
        return invalid(format!("quadratic basis node index {node} out of range"));
    }
    Ok(lagrange2(xhat)[node])
}

/// All three quadratic basis functions at once: `[(value, d/dxhat); 3]`.
#[inline]
pub fn lagrange2(x: f64) -> [(f64, f64); 3] {
    [
        ((1.0 - x) * (1.0 - 2.0 * x), 4.0 * x - 3.0),
        (4.0 * x * (1.0 - x), 4.0 - 8.0 * x),
        (x * (2.0 * x - 1.0), 4.0 * x - 1.0),
    ]
}

/// Second reference derivatives of the quadratic basis (constant per function).
pub const LAGRANGE2_SECOND: [f64; 3] = [4.0, -8.0, 4.0];

/// Quadratic Lagrange weights in normalized time for basis nodes `(0, eps, 1)`.
pub fn time_lagrange(s: f64, eps: f64) -> [f64; 3] {
    [
        (s - eps) * (s - 1.0) / eps,
        s * (s - 1.0) / (eps * (eps - 1.0)),
        s * (s - eps) / (1.0 - eps),
    ]
}

/// A quadrature rule on the reference interval `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    /// Applies the rule to `f` on `[0, 1]`.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }

    /// Applies the rule on `[lo, hi]`.
    pub fn integrate_on(&self, lo: f64, hi: f64, f: impl Fn(f64) -> f64) -> f64 {
        let h = hi - lo;
        h * self.integrate(|s| f(lo + h * s))
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Gauss-Legendre rule with `n_points` in {3, 4, 5}, mapped to `[0, 1]`.
pub fn gauss_legendre(n_points: usize) -> Result<QuadratureRule> {
    if !(3..=5).contains(&n_points) {
        return invalid(format!(
            "unsupported Gauss-Legendre point count {n_points} (expected 3, 4 or 5)"
        ));
    }
    Ok(gauss_legendre_unit(n_points))
}

/// Newton iteration on the Legendre polynomial from the Chebyshev-like guess.
fn gauss_legendre_unit(n: usize) -> QuadratureRule {
    let mut points = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for i in 0..n {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        // [-1, 1] -> [0, 1]
        points.push(0.5 * (1.0 - z));
        weights.push(1.0 / ((1.0 - z * z) * dp * dp));
    }
    QuadratureRule { points, weights }
}

/// Default spatial rule: 5-point Gauss-Legendre.
pub fn spatial_rule() -> QuadratureRule {
    gauss_legendre_unit(5)
}

/// Two-point right Gauss-Radau rule: `3/4 f(1/3) + 1/4 f(1)`.
pub fn gauss_radau_right() -> QuadratureRule {
    QuadratureRule {
        points: vec![1.0 / 3.0, 1.0],
        weights: vec![0.75, 0.25],
    }
}

/// Coefficients of the discrete time derivative at the two collocation times,
/// in units of `1/dt`.
///
/// `mid` multiplies `(u(zeta0), u(zeta1))` at `t_{i,1}`; `end` multiplies
/// `(u(zeta0), u(zeta1), u(zeta2))` at `t_{i,2}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeDiffCoeffs {
    pub eps: f64,
    pub mid: (f64, f64),
    pub end: (f64, f64, f64),
}

pub fn time_diff_coeffs(eps: f64) -> Result<TimeDiffCoeffs> {
    check_eps(eps)?;
    Ok(TimeDiffCoeffs {
        eps,
        mid: (-1.0 / eps, 1.0 / eps),
        end: (
            (1.0 - eps) / eps,
            -1.0 / (eps * (1.0 - eps)),
            (2.0 - eps) / (1.0 - eps),
        ),
    })
}

impl TimeDiffCoeffs {
    /// Mid-step stencil applied to samples, scaled by `1/dt`.
    pub fn apply_mid(&self, u0: f64, u1: f64, dt: f64) -> f64 {
        (self.mid.0 * u0 + self.mid.1 * u1) / dt
    }

    /// End-step stencil applied to samples, scaled by `1/dt`.
    pub fn apply_end(&self, u0: f64, u1: f64, u2: f64, dt: f64) -> f64 {
        (self.end.0 * u0 + self.end.1 * u1 + self.end.2 * u2) / dt
    }
}

pub(crate) fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps < 1.0 {
        Ok(())
    } else {
        invalid(format!("eps = {eps} must lie strictly inside (0, 1)"))
    }
}

/// Componentwise average `(u0 + u1) / 2`.
pub fn trapezoid_combination(u0: &[f64], u1: &[f64]) -> Result<Vec<f64>> {
    if u0.len() != u1.len() {
        return invalid(format!(
            "trapezoid combination of vectors with lengths {} and {}",
            u0.len(),
            u1.len()
        ));
    }
    Ok(u0.iter().zip(u1).map(|(a, b)| 0.5 * (a + b)).collect())
}
