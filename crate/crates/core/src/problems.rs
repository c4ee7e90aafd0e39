//! Test problems: coefficient functions, manufactured sources, exact solutions.
//!
//! The equation is `u_t - (a u_x)_x + b u_x + c u = f` on `(x_lo, x_hi)` with
//! Neumann data `a u_x n = g` at both ends. A nonlinear problem adds `u u_x`
//! to the convection (Burgers).

use std::fmt;
use std::sync::Arc;

use crate::error::{invalid, Result};

pub type SpaceTimeFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
pub type SpaceFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type TimeFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Exact solution and the derivatives needed to manufacture data for it.
#[derive(Clone)]
pub struct ExactSolution {
    pub u: SpaceTimeFn,
    pub u_x: SpaceTimeFn,
    pub u_xx: SpaceTimeFn,
    pub u_t: SpaceTimeFn,
}

#[derive(Clone)]
pub struct ProblemSpec {
    pub name: String,
    pub a: SpaceTimeFn,
    /// `da/dx`, needed by the SUPG residual.
    pub a_x: SpaceTimeFn,
    pub b: SpaceTimeFn,
    pub c: SpaceTimeFn,
    pub f: SpaceTimeFn,
    /// Outward flux `a u_x n` at the left end (`n = -1`).
    pub g_left: TimeFn,
    /// Outward flux `a u_x n` at the right end (`n = +1`).
    pub g_right: TimeFn,
    pub exact: Option<ExactSolution>,
    pub u_initial: SpaceFn,
    pub nonlinear: bool,
    pub domain: (f64, f64),
    pub t_final: f64,
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("name", &self.name)
            .field("domain", &self.domain)
            .field("t_final", &self.t_final)
            .field("nonlinear", &self.nonlinear)
            .field("has_exact", &self.exact.is_some())
            .finish()
    }
}

fn constant2(v: f64) -> SpaceTimeFn {
    Arc::new(move |_, _| v)
}

impl ProblemSpec {
    /// Heat equation `u_t = u_xx` with zero data; customise with the `with_*` methods.
    pub fn new(name: impl Into<String>, domain: (f64, f64), t_final: f64) -> Self {
        Self {
            name: name.into(),
            a: constant2(1.0),
            a_x: constant2(0.0),
            b: constant2(0.0),
            c: constant2(0.0),
            f: constant2(0.0),
            g_left: Arc::new(|_| 0.0),
            g_right: Arc::new(|_| 0.0),
            exact: None,
            u_initial: Arc::new(|_| 0.0),
            nonlinear: false,
            domain,
            t_final,
        }
    }

    pub fn with_diffusion(
        mut self,
        a: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        a_x: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        self.a = Arc::new(a);
        self.a_x = Arc::new(a_x);
        self
    }

    pub fn with_convection(mut self, b: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        self.b = Arc::new(b);
        self
    }

    pub fn with_reaction(mut self, c: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        self.c = Arc::new(c);
        self
    }

    pub fn with_source(mut self, f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        self.f = Arc::new(f);
        self
    }

    pub fn with_initial(mut self, u0: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.u_initial = Arc::new(u0);
        self
    }

    pub fn with_flux(
        mut self,
        g_left: impl Fn(f64) -> f64 + Send + Sync + 'static,
        g_right: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        self.g_left = Arc::new(g_left);
        self.g_right = Arc::new(g_right);
        self
    }

    pub fn nonlinear(mut self) -> Self {
        self.nonlinear = true;
        self
    }

    /// Attaches an exact solution and derives the initial condition and the
    /// Neumann fluxes from it. The source is left alone; see
    /// [`manufactured_source`].
    pub fn with_exact(mut self, exact: ExactSolution) -> Self {
        let (lo, hi) = self.domain;
        let u = exact.u.clone();
        self.u_initial = Arc::new(move |x| u(x, 0.0));
        let (a, ux) = (self.a.clone(), exact.u_x.clone());
        self.g_left = Arc::new(move |t| -a(lo, t) * ux(lo, t));
        let (a, ux) = (self.a.clone(), exact.u_x.clone());
        self.g_right = Arc::new(move |t| a(hi, t) * ux(hi, t));
        self.exact = Some(exact);
        self
    }

    /// Sets `f` to the manufactured source of the attached exact solution.
    pub fn with_manufactured_source(mut self) -> Self {
        let spec = self.clone();
        self.f = Arc::new(move |x, t| manufactured_source(&spec, x, t).unwrap_or(0.0));
        self
    }
}

/// `u_t - (a u_x)_x + b u_x + c u` (plus `u u_x` when nonlinear) for the exact
/// solution, from its analytic derivatives.
pub fn manufactured_source(spec: &ProblemSpec, x: f64, t: f64) -> Result<f64> {
    let Some(ex) = &spec.exact else {
        return invalid(format!("problem {} has no exact solution", spec.name));
    };
    let (u, ux, uxx, ut) = (
        (ex.u)(x, t),
        (ex.u_x)(x, t),
        (ex.u_xx)(x, t),
        (ex.u_t)(x, t),
    );
    let mut r = ut - (spec.a_x)(x, t) * ux - (spec.a)(x, t) * uxx
        + (spec.b)(x, t) * ux
        + (spec.c)(x, t) * u;
    if spec.nonlinear {
        r += u * ux;
    }
    Ok(r)
}

/// `u_t - 0.01 u_xx + 3 u_x = f1` on `(-3, 3) x (0, 1]`, exact `exp(-(x - 3t)^2)`.
pub fn problem_convection() -> ProblemSpec {
    let exact = ExactSolution {
        u: Arc::new(|x, t| (-(x - 3.0 * t).powi(2)).exp()),
        u_x: Arc::new(|x, t| {
            let y = x - 3.0 * t;
            -2.0 * y * (-y * y).exp()
        }),
        u_xx: Arc::new(|x, t| {
            let y = x - 3.0 * t;
            (4.0 * y * y - 2.0) * (-y * y).exp()
        }),
        u_t: Arc::new(|x, t| {
            let y = x - 3.0 * t;
            6.0 * y * (-y * y).exp()
        }),
    };
    ProblemSpec::new("conv1", (-3.0, 3.0), 1.0)
        .with_diffusion(|_, _| 0.01, |_, _| 0.0)
        .with_convection(|_, _| 3.0)
        .with_exact(exact)
        .with_source(|x, t| {
            let y = x - 3.0 * t;
            (0.02 - 0.04 * y * y) * (-y * y).exp()
        })
}

/// `u_t - ((x^2 + t^2 + 0.1) u_x)_x + 0.1 (x^3 - 9x) u_x + u = f2` on
/// `(-3, 3) x (0, 1]`, exact `sin(pi/6 (x + 5t))`.
pub fn problem_diffusion() -> ProblemSpec {
    use std::f64::consts::PI;
    let k = PI / 6.0;
    let exact = ExactSolution {
        u: Arc::new(move |x, t| (k * (x + 5.0 * t)).sin()),
        u_x: Arc::new(move |x, t| k * (k * (x + 5.0 * t)).cos()),
        u_xx: Arc::new(move |x, t| -k * k * (k * (x + 5.0 * t)).sin()),
        u_t: Arc::new(move |x, t| 5.0 * k * (k * (x + 5.0 * t)).cos()),
    };
    ProblemSpec::new("diff2", (-3.0, 3.0), 1.0)
        .with_diffusion(|x, t| x * x + t * t + 0.1, |x, _| 2.0 * x)
        .with_convection(|x, _| 0.1 * (x * x * x - 9.0 * x))
        .with_reaction(|_, _| 1.0)
        .with_exact(exact)
        .with_source(move |x, t| {
            let arg = k * (x + 5.0 * t);
            let (s, c) = arg.sin_cos();
            let a = x * x + t * t + 0.1;
            5.0 * k * c - 2.0 * x * k * c + a * k * k * s + 0.1 * (x * x * x - 9.0 * x) * k * c + s
        })
}

/// Front width and left state of the Burgers initial profile
/// `amplitude/2 (1 - tanh(x / width))`.
pub const BURGERS_FRONT_WIDTH: f64 = 0.25;
pub const BURGERS_AMPLITUDE: f64 = 1.0;

/// `u_t - u_xx / R + u u_x = 0` on `(-3, 3) x (0, 2]` with `u_x(+-3) = 0`.
pub fn problem_burgers(reynolds: f64) -> Result<ProblemSpec> {
    problem_burgers_with(reynolds, BURGERS_AMPLITUDE, BURGERS_FRONT_WIDTH)
}

pub fn problem_burgers_with(reynolds: f64, amplitude: f64, width: f64) -> Result<ProblemSpec> {
    if !(reynolds > 0.0) {
        return invalid(format!("Reynolds number {reynolds} must be positive"));
    }
    if !(width > 0.0) {
        return invalid(format!("front width {width} must be positive"));
    }
    let nu = 1.0 / reynolds;
    Ok(ProblemSpec::new("burgers", (-3.0, 3.0), 2.0)
        .with_diffusion(move |_, _| nu, |_, _| 0.0)
        .with_initial(move |x| 0.5 * amplitude * (1.0 - (x / width).tanh()))
        .nonlinear())
}

/// Looks a problem up by its CLI name.
pub fn by_name(name: &str, reynolds: f64) -> Result<ProblemSpec> {
    match name {
        "conv1" => Ok(problem_convection()),
        "diff2" => Ok(problem_diffusion()),
        "burgers" => problem_burgers(reynolds),
        other => invalid(format!(
            "unknown problem '{other}' (expected conv1, diff2 or burgers)"
        )),
    }
}
