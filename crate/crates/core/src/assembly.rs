//! Galerkin assembly on a mesh slice.
//!
//! Row index is the test function, column index the trial function. The
//! convection that enters the bilinear form is the relative velocity
//! `b - x_t`, where `x_t` is the mesh velocity, linear inside each element.

use std::sync::OnceLock;

use crate::basis::{lagrange2, spatial_rule, LAGRANGE2_SECOND};
use crate::error::{Error, Result};
use crate::linalg::BandedMatrix;
use crate::mesh::MeshSlice;
use crate::problems::ProblemSpec;

pub const BANDWIDTH: usize = 2;

struct RefTable {
    weights: Vec<f64>,
    points: Vec<f64>,
    phi: Vec<[(f64, f64); 3]>,
}

fn table() -> &'static RefTable {
    static TABLE: OnceLock<RefTable> = OnceLock::new();
    TABLE.get_or_init(|| {
        let rule = spatial_rule();
        RefTable {
            phi: rule.points.iter().map(|&x| lagrange2(x)).collect(),
            weights: rule.weights,
            points: rule.points,
        }
    })
}

/// Extra terms for the stage operators beyond the plain bilinear form.
#[derive(Debug, Clone, Copy, Default)]
pub struct OperatorOptions<'a> {
    /// Finite element field added to the convection velocity when the problem
    /// is nonlinear (`u u_x` evaluated as `w u_x`).
    pub advecting: Option<&'a [f64]>,
    /// Adds the derivative of the advecting field as a reaction term, turning
    /// the Picard operator into the Newton Jacobian of `u u_x`.
    pub linearize: bool,
    /// SUPG coefficient; the test function becomes `chi + delta (b - x_t) chi_x`.
    pub supg_delta: f64,
}

/// `M_jk = (phi_k, phi_j)`.
pub fn assemble_mass(slice: &MeshSlice) -> Result<BandedMatrix> {
    let tab = table();
    let mut m = BandedMatrix::zeros(slice.n_nodes(), BANDWIDTH);
    for e in 0..slice.n_elements() {
        let h = element_length(slice, e)?;
        let dofs = MeshSlice::dofs(e);
        let mut local = [[0.0; 3]; 3];
        for (q, &w) in tab.weights.iter().enumerate() {
            let phi = &tab.phi[q];
            for j in 0..3 {
                for k in 0..3 {
                    local[j][k] += w * h * phi[j].0 * phi[k].0;
                }
            }
        }
        scatter(&mut m, &dofs, &local);
    }
    Ok(m)
}

/// Unit-coefficient stiffness `K_jk = (phi_k', phi_j')`.
pub fn assemble_stiffness(slice: &MeshSlice) -> Result<BandedMatrix> {
    let tab = table();
    let mut k = BandedMatrix::zeros(slice.n_nodes(), BANDWIDTH);
    for e in 0..slice.n_elements() {
        let h = element_length(slice, e)?;
        let mut local = [[0.0; 3]; 3];
        for (q, &w) in tab.weights.iter().enumerate() {
            let phi = &tab.phi[q];
            for i in 0..3 {
                for j in 0..3 {
                    local[i][j] += w * phi[i].1 * phi[j].1 / h;
                }
            }
        }
        scatter(&mut k, &MeshSlice::dofs(e), &local);
    }
    Ok(k)
}

/// Matrix of `A_tau<t; u, chi> = int a u_x chi_x + (b - x_t) u_x chi + c u chi`.
///
/// For a nonlinear problem this is the linear part only (no `u u_x`).
pub fn assemble_atau(slice: &MeshSlice, problem: &ProblemSpec, t: f64) -> Result<BandedMatrix> {
    Ok(assemble_operator(slice, problem, t, &OperatorOptions::default())?.0)
}

/// `L_j = (f, phi_j) + g_left phi_j(left) + g_right phi_j(right)`.
pub fn assemble_load(slice: &MeshSlice, problem: &ProblemSpec, t: f64) -> Result<Vec<f64>> {
    Ok(assemble_operator(slice, problem, t, &OperatorOptions::default())?.1)
}

/// The SUPG perturbation of the bilinear form and of the load for coefficient
/// `delta`, i.e. the stabilised system minus the Galerkin one.
pub fn supg_test_shift(
    slice: &MeshSlice,
    problem: &ProblemSpec,
    t: f64,
    delta: f64,
) -> Result<(BandedMatrix, Vec<f64>)> {
    let (a0, l0) = assemble_operator(slice, problem, t, &OperatorOptions::default())?;
    let opts = OperatorOptions {
        supg_delta: delta,
        ..Default::default()
    };
    let (a1, l1) = assemble_operator(slice, problem, t, &opts)?;
    Ok((
        a1.combine(1.0, &a0, -1.0),
        l1.iter().zip(&l0).map(|(x, y)| x - y).collect(),
    ))
}

/// Operator matrix and load vector in one pass.
///
/// Per element, with `beta = b - x_t (+ w)`, `gamma = c (+ w_x)`, `tau = delta beta`:
/// `int a phi_k' phi_j' + (beta phi_k' + gamma phi_k)(phi_j + tau phi_j')
///  + tau phi_j' (-a_x phi_k' - a phi_k'')` and `int f (phi_j + tau phi_j')`.
pub fn assemble_operator(
    slice: &MeshSlice,
    problem: &ProblemSpec,
    t: f64,
    opts: &OperatorOptions<'_>,
) -> Result<(BandedMatrix, Vec<f64>)> {
    let tab = table();
    let n = slice.n_nodes();
    let mut op = BandedMatrix::zeros(n, BANDWIDTH);
    let mut load = vec![0.0; n];
    let advecting = if problem.nonlinear {
        opts.advecting
    } else {
        None
    };
    if let Some(w) = advecting {
        if w.len() != n {
            return Err(Error::InvalidArgument(format!(
                "advecting field has {} coefficients for {n} nodes",
                w.len()
            )));
        }
    }
    for e in 0..slice.n_elements() {
        let h = element_length(slice, e)?;
        let xl = slice.element_left(e);
        let dofs = MeshSlice::dofs(e);
        let mut local = [[0.0; 3]; 3];
        let mut local_load = [0.0; 3];
        for (q, (&w, &xi)) in tab.weights.iter().zip(&tab.points).enumerate() {
            let phi = &tab.phi[q];
            let x = xl + h * xi;
            let a = (problem.a)(x, t);
            if !(a > 0.0) {
                return Err(Error::InvalidCoefficient(format!(
                    "diffusion a({x}, {t}) = {a} is not positive"
                )));
            }
            let mut beta = (problem.b)(x, t) - slice.mesh_velocity(e, xi);
            let mut gamma = (problem.c)(x, t);
            if let Some(wf) = advecting {
                let (wv, wx) = local_value(wf, &dofs, phi, h);
                beta += wv;
                if opts.linearize {
                    gamma += wx;
                }
            }
            let tau = opts.supg_delta * beta;
            let a_x = if tau != 0.0 { (problem.a_x)(x, t) } else { 0.0 };
            let f = (problem.f)(x, t);
            let jw = w * h;
            let dphi: [f64; 3] = [phi[0].1 / h, phi[1].1 / h, phi[2].1 / h];
            for j in 0..3 {
                let test = phi[j].0 + tau * dphi[j];
                local_load[j] += jw * f * test;
                for k in 0..3 {
                    let d2 = LAGRANGE2_SECOND[k] / (h * h);
                    local[j][k] += jw
                        * (a * dphi[k] * dphi[j]
                            + (beta * dphi[k] + gamma * phi[k].0) * test
                            + tau * dphi[j] * (-a_x * dphi[k] - a * d2));
                }
            }
        }
        scatter(&mut op, &dofs, &local);
        for j in 0..3 {
            load[dofs[j]] += local_load[j];
        }
    }
    load[0] += (problem.g_left)(t);
    load[n - 1] += (problem.g_right)(t);
    Ok((op, load))
}

#[inline]
fn local_value(coeffs: &[f64], dofs: &[usize; 3], phi: &[(f64, f64); 3], h: f64) -> (f64, f64) {
    let mut v = 0.0;
    let mut d = 0.0;
    for k in 0..3 {
        v += coeffs[dofs[k]] * phi[k].0;
        d += coeffs[dofs[k]] * phi[k].1;
    }
    (v, d / h)
}

fn element_length(slice: &MeshSlice, e: usize) -> Result<f64> {
    let h = slice.element_lengths[e];
    if h > 0.0 {
        Ok(h)
    } else {
        Err(Error::DegenerateMesh(format!(
            "element {e} has length {h:e} at t = {}",
            slice.time
        )))
    }
}

fn scatter(m: &mut BandedMatrix, dofs: &[usize; 3], local: &[[f64; 3]; 3]) {
    for j in 0..3 {
        for k in 0..3 {
            m.add(dofs[j], dofs[k], local[j][k]);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_uniform_slice, MeshSlice};
    use crate::problems::{problem_convection, ProblemSpec};
    use rand::{rngs::StdRng, Rng, SeedableRng};

    /// Exact `[0, 1]` integrals of basis products via polynomial coefficients.
    fn exact_local(h: f64) -> ([[f64; 3]; 3], [[f64; 3]; 3]) {
        let phi = [[1.0, -3.0, 2.0], [0.0, 4.0, -4.0], [0.0, -1.0, 2.0]];
        let d = |p: &[f64; 3]| [p[1], 2.0 * p[2], 0.0];
        let int = |p: &[f64; 3], q: &[f64; 3]| {
            let mut s = 0.0;
            for i in 0..3 {
                for j in 0..3 {
                    s += p[i] * q[j] / (i + j + 1) as f64;
                }
            }
            s
        };
        let mut m = [[0.0; 3]; 3];
        let mut k = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] = h * int(&phi[i], &phi[j]);
                k[i][j] = int(&d(&phi[i]), &d(&phi[j])) / h;
            }
        }
        (m, k)
    }

    #[test]
    fn single_element_matrices_match_exact_integrals() {
        for &(x0, x1) in &[(0.0, 1.0), (-0.4, 0.1), (3.0, 3.02)] {
            let h: f64 = x1 - x0;
            let slice = MeshSlice::from_vertices(0.0, &[x0, x1], &[0.0, 0.0]).unwrap();
            let m = assemble_mass(&slice).unwrap().to_dense();
            let k = assemble_stiffness(&slice).unwrap().to_dense();
            let (em, ek) = exact_local(h);
            let cm = [[4.0, 2.0, -1.0], [2.0, 16.0, 2.0], [-1.0, 2.0, 4.0]];
            let ck = [[7.0, -8.0, 1.0], [-8.0, 16.0, -8.0], [1.0, -8.0, 7.0]];
            for i in 0..3 {
                for j in 0..3 {
                    assert!((em[i][j] - h / 30.0 * cm[i][j]).abs() < 1e-13);
                    assert!(
                        (ek[i][j] - ck[i][j] / (3.0 * h)).abs() < 1e-13 * (1.0 + ek[i][j].abs())
                    );
                    assert!((m[i][j] - em[i][j]).abs() < 1e-13);
                    assert!((k[i][j] - ek[i][j]).abs() < 1e-13 * (1.0 + ek[i][j].abs()));
                }
            }
        }
    }

    fn random_slice(rng: &mut StdRng, n_el: usize) -> MeshSlice {
        let mut xs = vec![rng.gen_range(-1.0..0.0)];
        for _ in 0..n_el {
            let last = *xs.last().unwrap();
            xs.push(last + rng.gen_range(0.05..0.6));
        }
        let vs: Vec<f64> = xs.iter().map(|_| rng.gen_range(-2.0..2.0)).collect();
        MeshSlice::from_vertices(0.3, &xs, &vs).unwrap()
    }

    fn dense_close(a: &BandedMatrix, b: &BandedMatrix, tol: f64) -> bool {
        (0..a.dim()).all(|i| (0..a.dim()).all(|j| (a.get(i, j) - b.get(i, j)).abs() <= tol))
    }

    #[test]
    fn single_element_mass_rows() {
        let h = 0.7;
        let s = MeshSlice::from_vertices(0.0, &[1.0, 1.0 + h], &[0.0, 0.0]).unwrap();
        let m = assemble_mass(&s).unwrap();
        let rows: Vec<f64> = m.matvec(&[1.0; 3]);
        assert!((rows[0] - h / 6.0).abs() < 1e-15);
        assert!((rows[1] - 2.0 * h / 3.0).abs() < 1e-15);
        assert!((rows[2] - h / 6.0).abs() < 1e-15);
    }

    #[test]
    fn mass_total_is_domain_length() {
        let s = build_uniform_slice(-3.0, 3.0, 21, 0.0).unwrap();
        let m = assemble_mass(&s).unwrap();
        let total: f64 = m.matvec(&[1.0; 21]).iter().sum();
        assert!((total - 6.0).abs() < 1e-13);
    }

    #[test]
    fn mass_is_spd_on_random_slices() {
        let mut rng = StdRng::seed_from_u64(3);
        for _ in 0..20 {
            let s = random_slice(&mut rng, 7);
            let m = assemble_mass(&s).unwrap();
            assert!(m.asymmetry() < 1e-15);
            let dense = nalgebra::DMatrix::from_fn(m.dim(), m.dim(), |i, j| m.get(i, j));
            assert!(dense.cholesky().is_some());
        }
    }

    #[test]
    fn translation_with_the_flow_cancels_convection() {
        let base = build_uniform_slice(-3.0, 3.0, 11, 0.0).unwrap();
        let xs = base.vertex_positions();
        let moving = MeshSlice::from_vertices(0.0, &xs, &vec![3.0; xs.len()]).unwrap();
        let conv = ProblemSpec::new("b3", (-3.0, 3.0), 1.0).with_convection(|_, _| 3.0);
        let still = ProblemSpec::new("b0", (-3.0, 3.0), 1.0);
        let a1 = assemble_atau(&moving, &conv, 0.0).unwrap();
        let a0 = assemble_atau(&base, &still, 0.0).unwrap();
        assert!(dense_close(&a1, &a0, 1e-13));
    }

    #[test]
    fn reaction_only_gives_mass() {
        // a must stay positive, so split off a tiny diffusion and compare the rest
        let s = build_uniform_slice(0.0, 2.0, 9, 0.0).unwrap();
        let p = ProblemSpec::new("c", (0.0, 2.0), 1.0)
            .with_diffusion(|_, _| 1e-300, |_, _| 0.0)
            .with_reaction(|_, _| 1.0);
        let a = assemble_atau(&s, &p, 0.0).unwrap();
        let m = assemble_mass(&s).unwrap();
        assert!(dense_close(&a, &m, 1e-15));
    }

    #[test]
    fn constants_are_annihilated() {
        let mut rng = StdRng::seed_from_u64(5);
        let p = problem_convection()
            .with_diffusion(|x, t| 1.0 + x * x + t, |x, _| 2.0 * x)
            .with_convection(|x, _| x.sin());
        for _ in 0..10 {
            let s = random_slice(&mut rng, 6);
            let a = assemble_atau(&s, &p, 0.5).unwrap();
            let r = a.matvec(&vec![2.5; s.n_nodes()]);
            assert!(r.iter().all(|v| v.abs() < 1e-12));
        }
    }

    #[test]
    fn symmetric_without_relative_convection() {
        let mut rng = StdRng::seed_from_u64(9);
        for _ in 0..10 {
            let s = random_slice(&mut rng, 5);
            let xs = s.vertex_positions();
            let still = MeshSlice::from_vertices(0.0, &xs, &vec![0.0; xs.len()]).unwrap();
            let p = ProblemSpec::new("sym", (-1.0, 4.0), 1.0)
                .with_diffusion(|x, _| 2.0 + x.cos(), |x, _| -x.sin())
                .with_reaction(|x, _| 1.0 + x * x);
            let a = assemble_atau(&still, &p, 0.0).unwrap();
            assert!(a.asymmetry() < 1e-12);
        }
    }

    #[test]
    fn convection_offset_invariance() {
        let mut rng = StdRng::seed_from_u64(21);
        for _ in 0..10 {
            let s = random_slice(&mut rng, 5);
            let xs = s.vertex_positions();
            let vs = s.vertex_velocities();
            let still = MeshSlice::from_vertices(0.3, &xs, &vec![0.0; xs.len()]).unwrap();
            let b = |x: f64, _t: f64| 1.0 + 0.5 * x;
            let p = ProblemSpec::new("b", (-1.0, 4.0), 1.0).with_convection(b);
            // b - v with v the linear interpolant of the vertex velocities
            let s2 = still.clone();
            let vs2 = vs.clone();
            let q = ProblemSpec::new("b-v", (-1.0, 4.0), 1.0).with_convection(move |x, t| {
                let (e, xi) = s2.locate(x);
                b(x, t) - (vs2[e] + (vs2[e + 1] - vs2[e]) * xi)
            });
            let a1 = assemble_atau(&s, &p, 0.3).unwrap();
            let a2 = assemble_atau(&still, &q, 0.3).unwrap();
            assert!(dense_close(&a1, &a2, 1e-12));
        }
    }

    #[test]
    fn load_examples() {
        let s = MeshSlice::from_vertices(0.0, &[0.0, 0.4], &[0.0, 0.0]).unwrap();
        let zero = ProblemSpec::new("z", (0.0, 0.4), 1.0);
        assert_eq!(assemble_load(&s, &zero, 0.0).unwrap(), vec![0.0; 3]);
        let one = ProblemSpec::new("f1", (0.0, 0.4), 1.0).with_source(|_, _| 1.0);
        let l = assemble_load(&s, &one, 0.0).unwrap();
        let h = 0.4;
        assert!((l[0] - h / 6.0).abs() < 1e-15);
        assert!((l[1] - 2.0 * h / 3.0).abs() < 1e-15);
        assert!((l[2] - h / 6.0).abs() < 1e-15);

        let p = problem_convection();
        let s = build_uniform_slice(-3.0, 3.0, 5, 0.0).unwrap();
        let l = assemble_load(&s, &p, 0.0).unwrap();
        let with_f = ProblemSpec {
            g_left: p.g_left.clone(),
            g_right: p.g_right.clone(),
            ..zero.clone()
        };
        let boundary_only = assemble_load(&s, &with_f, 0.0).unwrap();
        assert!((boundary_only[4] - 0.01 * (-6.0 * (-9.0f64).exp())).abs() < 1e-18);
        assert!(l[4] != boundary_only[4]);
    }

    #[test]
    fn nonpositive_diffusion_is_rejected() {
        let s = build_uniform_slice(-1.0, 1.0, 5, 0.0).unwrap();
        let p = ProblemSpec::new("bad", (-1.0, 1.0), 1.0).with_diffusion(|x, _| x, |_, _| 1.0);
        assert!(matches!(
            assemble_atau(&s, &p, 0.0),
            Err(Error::InvalidCoefficient(_))
        ));
    }

    #[test]
    fn supg_examples() {
        let s = build_uniform_slice(-3.0, 3.0, 11, 0.0).unwrap();
        let p = ProblemSpec::new("b3", (-3.0, 3.0), 1.0)
            .with_diffusion(|_, _| 0.01, |_, _| 0.0)
            .with_convection(|_, _| 3.0)
            .with_source(|x, _| x);
        let (da, dl) = supg_test_shift(&s, &p, 0.0, 0.0).unwrap();
        assert_eq!(da.norm_inf(), 0.0);
        assert!(dl.iter().all(|&v| v == 0.0));

        let (da, _) = supg_test_shift(&s, &p, 0.0, 0.1).unwrap();
        for i in 0..s.n_nodes() {
            assert!(da.get(i, i) > 0.0);
        }
        let a = assemble_atau(&s, &p, 0.0).unwrap();
        let stab = a.combine(1.0, &da, 1.0);
        assert!(stab.asymmetry() > 1e-6);

        // mesh moving with the flow: no streamline direction, no perturbation
        let xs = s.vertex_positions();
        let moving = MeshSlice::from_vertices(0.0, &xs, &vec![3.0; xs.len()]).unwrap();
        let (da, dl) = supg_test_shift(&moving, &p, 0.0, 0.1).unwrap();
        assert!(da.norm_inf() < 1e-13);
        assert!(dl.iter().all(|v| v.abs() < 1e-13));
    }
}
