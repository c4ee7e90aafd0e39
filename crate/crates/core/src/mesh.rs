//! Space-time mesh geometry in one space dimension.
//!
//! Nodes are numbered left to right with vertices at even indices and element
//! midpoints at odd indices, so element `e` owns nodes `2e, 2e+1, 2e+2`.
//! Only vertex trajectories are stored; midpoint trajectories are the mean of
//! their two vertices because the spatial map of each element is affine.

use std::io::Write;

use crate::basis::{check_eps, lagrange2};
use crate::error::{invalid, Error, Result};

/// Quadratic path `x(s) = c0 + c1 s + c2 s^2` in normalized partition time
/// `s = (t - t_start) / dt`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeTrajectory {
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
}

impl NodeTrajectory {
    pub fn fixed(x: f64) -> Self {
        Self {
            c0: x,
            c1: 0.0,
            c2: 0.0,
        }
    }

    #[inline]
    pub fn position(&self, s: f64) -> f64 {
        self.c0 + s * (self.c1 + s * self.c2)
    }

    /// Physical velocity `dx/dt` for a partition of length `dt`.
    #[inline]
    pub fn velocity(&self, s: f64, dt: f64) -> f64 {
        (self.c1 + 2.0 * self.c2 * s) / dt
    }

    pub fn mean(&self, other: &NodeTrajectory) -> NodeTrajectory {
        NodeTrajectory {
            c0: 0.5 * (self.c0 + other.c0),
            c1: 0.5 * (self.c1 + other.c1),
            c2: 0.5 * (self.c2 + other.c2),
        }
    }
}

/// The unique quadratic through `(0, x0)`, `(eps, x1)`, `(1, x2)`.
pub fn fit_quadratic_trajectory(x0: f64, x1: f64, x2: f64, eps: f64) -> Result<NodeTrajectory> {
    check_eps(eps)?;
    let d1 = x1 - x0;
    let d2 = x2 - x0;
    let c2 = (d1 - eps * d2) / (eps * (eps - 1.0));
    Ok(NodeTrajectory {
        c0: x0,
        c1: d2 - c2,
        c2,
    })
}

/// The spatial mesh frozen at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct MeshSlice {
    pub time: f64,
    pub node_positions: Vec<f64>,
    pub node_velocities: Vec<f64>,
    pub element_lengths: Vec<f64>,
}

impl MeshSlice {
    /// Builds a slice from vertex data; midpoints are placed at element centres
    /// with the mean vertex velocity.
    pub fn from_vertices(time: f64, vertices: &[f64], velocities: &[f64]) -> Result<Self> {
        if vertices.len() < 2 || vertices.len() != velocities.len() {
            return invalid(format!(
                "slice needs at least two vertices with matching velocities (got {} and {})",
                vertices.len(),
                velocities.len()
            ));
        }
        let n_el = vertices.len() - 1;
        let mut node_positions = Vec::with_capacity(2 * n_el + 1);
        let mut node_velocities = Vec::with_capacity(2 * n_el + 1);
        let mut element_lengths = Vec::with_capacity(n_el);
        for e in 0..n_el {
            let (xl, xr) = (vertices[e], vertices[e + 1]);
            let len = xr - xl;
            if !(len > 0.0) {
                return Err(Error::DegenerateMesh(format!(
                    "element {e} has length {len:e} at t = {time}"
                )));
            }
            node_positions.push(xl);
            node_positions.push(0.5 * (xl + xr));
            node_velocities.push(velocities[e]);
            node_velocities.push(0.5 * (velocities[e] + velocities[e + 1]));
            element_lengths.push(len);
        }
        node_positions.push(vertices[n_el]);
        node_velocities.push(velocities[n_el]);
        Ok(Self {
            time,
            node_positions,
            node_velocities,
            element_lengths,
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.node_positions.len()
    }

    pub fn n_elements(&self) -> usize {
        self.element_lengths.len()
    }

    pub fn vertices(&self) -> impl Iterator<Item = f64> + '_ {
        self.node_positions.iter().step_by(2).copied()
    }

    pub fn vertex_positions(&self) -> Vec<f64> {
        self.vertices().collect()
    }

    pub fn vertex_velocities(&self) -> Vec<f64> {
        self.node_velocities.iter().step_by(2).copied().collect()
    }

    #[inline]
    pub fn dofs(e: usize) -> [usize; 3] {
        [2 * e, 2 * e + 1, 2 * e + 2]
    }

    #[inline]
    pub fn element_left(&self, e: usize) -> f64 {
        self.node_positions[2 * e]
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.node_positions[0], *self.node_positions.last().unwrap())
    }

    /// Element index and local coordinate of `x`. Points outside the mesh are
    /// attributed to the nearest boundary element (local coordinate outside
    /// `[0, 1]`).
    pub fn locate(&self, x: f64) -> (usize, f64) {
        let n_el = self.n_elements();
        let verts = &self.node_positions;
        // last vertex index 2e with verts[2e] <= x
        let (mut lo, mut hi) = (0usize, n_el);
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if verts[2 * mid] <= x {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let e = lo;
        (e, (x - verts[2 * e]) / self.element_lengths[e])
    }

    /// Value and x-derivative at `x` of the finite element function with
    /// nodal coefficients `coeffs` on this slice.
    pub fn evaluate(&self, coeffs: &[f64], x: f64) -> (f64, f64) {
        let (e, xi) = self.locate(x);
        self.evaluate_local(coeffs, e, xi)
    }

    pub fn evaluate_local(&self, coeffs: &[f64], e: usize, xi: f64) -> (f64, f64) {
        let phi = lagrange2(xi);
        let h = self.element_lengths[e];
        let dofs = Self::dofs(e);
        let mut v = 0.0;
        let mut d = 0.0;
        for k in 0..3 {
            v += coeffs[dofs[k]] * phi[k].0;
            d += coeffs[dofs[k]] * phi[k].1;
        }
        (v, d / h)
    }

    /// Mesh velocity at local coordinate `xi` of element `e` (linear between
    /// the vertex velocities).
    #[inline]
    pub fn mesh_velocity(&self, e: usize, xi: f64) -> f64 {
        let vl = self.node_velocities[2 * e];
        let vr = self.node_velocities[2 * e + 2];
        vl + (vr - vl) * xi
    }

    /// Same node positions as `other`, bit for bit.
    pub fn same_geometry(&self, other: &MeshSlice) -> bool {
        self.node_positions == other.node_positions
    }

    /// Nodal interpolant of `f` on this slice.
    pub fn interpolate(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        self.node_positions.iter().map(|&x| f(x)).collect()
    }
}

/// Uniform slice with `n_nodes` (odd, at least 3) nodes and zero velocity.
pub fn build_uniform_slice(lo: f64, hi: f64, n_nodes: usize, time: f64) -> Result<MeshSlice> {
    if n_nodes < 3 || n_nodes.is_multiple_of(2) {
        return invalid(format!("node count {n_nodes} must be odd and at least 3"));
    }
    if !(hi > lo) {
        return invalid(format!("empty domain ({lo}, {hi})"));
    }
    let n_el = (n_nodes - 1) / 2;
    let h = (hi - lo) / n_el as f64;
    let mut verts: Vec<f64> = (0..=n_el).map(|k| lo + h * k as f64).collect();
    verts[n_el] = hi;
    MeshSlice::from_vertices(time, &verts, &vec![0.0; n_el + 1])
}

/// One time slab `[t_start, t_start + dt]` with its vertex trajectories.
#[derive(Debug, Clone, PartialEq)]
pub struct TimePartition {
    pub t_start: f64,
    pub t_end: f64,
    pub dt: f64,
    pub eps: f64,
    vertex_paths: Vec<NodeTrajectory>,
}

impl TimePartition {
    /// Does not check for degeneracy; see [`TimePartition::check_nondegenerate`].
    pub fn new(
        t_start: f64,
        t_end: f64,
        eps: f64,
        vertex_paths: Vec<NodeTrajectory>,
    ) -> Result<Self> {
        check_eps(eps)?;
        let dt = t_end - t_start;
        if !(dt > 0.0) {
            return invalid(format!("partition [{t_start}, {t_end}] has no length"));
        }
        if vertex_paths.len() < 2 {
            return invalid("partition needs at least two vertices");
        }
        Ok(Self {
            t_start,
            t_end,
            dt,
            eps,
            vertex_paths,
        })
    }

    /// Partition whose vertices stay where they are in `slice`.
    pub fn frozen(slice: &MeshSlice, t_end: f64, eps: f64) -> Result<Self> {
        let paths = slice.vertices().map(NodeTrajectory::fixed).collect();
        Self::new(slice.time, t_end, eps, paths)
    }

    pub fn vertex_paths(&self) -> &[NodeTrajectory] {
        &self.vertex_paths
    }

    pub fn n_vertices(&self) -> usize {
        self.vertex_paths.len()
    }

    pub fn n_elements(&self) -> usize {
        self.vertex_paths.len() - 1
    }

    pub fn n_nodes(&self) -> usize {
        2 * self.vertex_paths.len() - 1
    }

    /// Trajectory of any node; midpoint paths are derived from their vertices.
    pub fn trajectory(&self, node: usize) -> NodeTrajectory {
        if node.is_multiple_of(2) {
            self.vertex_paths[node / 2]
        } else {
            let e = node / 2;
            self.vertex_paths[e].mean(&self.vertex_paths[e + 1])
        }
    }

    /// `(t_{i,1}, t_{i,2})`.
    pub fn collocation_times(&self) -> (f64, f64) {
        (self.time_at(0.5 * self.eps), self.t_end)
    }

    /// `(zeta_0, zeta_1, zeta_2)`.
    pub fn basis_times(&self) -> (f64, f64, f64) {
        (self.t_start, self.time_at(self.eps), self.t_end)
    }

    pub fn time_at(&self, s: f64) -> f64 {
        if s == 1.0 {
            self.t_end
        } else {
            self.t_start + s * self.dt
        }
    }

    pub fn normalized(&self, t: f64) -> f64 {
        if t == self.t_end {
            1.0
        } else {
            (t - self.t_start) / self.dt
        }
    }

    /// Mesh at physical time `t` inside the partition.
    pub fn slice_at(&self, t: f64) -> Result<MeshSlice> {
        let tol = 1e-12 * self.dt.max(self.t_end.abs());
        if t < self.t_start - tol || t > self.t_end + tol {
            return invalid(format!(
                "time {t} outside partition [{}, {}]",
                self.t_start, self.t_end
            ));
        }
        self.slice_at_normalized(self.normalized(t))
    }

    /// Mesh at normalized time `s` in `[0, 1]`.
    pub fn slice_at_normalized(&self, s: f64) -> Result<MeshSlice> {
        let xs: Vec<f64> = self.vertex_paths.iter().map(|p| p.position(s)).collect();
        let vs: Vec<f64> = self
            .vertex_paths
            .iter()
            .map(|p| p.velocity(s, self.dt))
            .collect();
        MeshSlice::from_vertices(self.time_at(s), &xs, &vs)
    }

    /// Length of element `e` at normalized time `s` (the 1D Jacobian).
    #[inline]
    pub fn element_length(&self, e: usize, s: f64) -> f64 {
        self.vertex_paths[e + 1].position(s) - self.vertex_paths[e].position(s)
    }

    /// Exact minimum over `s` in `[0, 1]` of the length of element `e`.
    pub fn min_element_length(&self, e: usize) -> f64 {
        min_gap(&self.vertex_paths[e], &self.vertex_paths[e + 1])
    }

    pub fn check_nondegenerate(&self) -> Result<()> {
        for e in 0..self.n_elements() {
            let m = self.min_element_length(e);
            if !(m > 0.0) {
                return Err(Error::DegenerateMesh(format!(
                    "element {e} collapses (minimum length {m:e}) in partition [{}, {}]",
                    self.t_start, self.t_end
                )));
            }
        }
        Ok(())
    }

    pub fn is_degenerate(&self) -> bool {
        self.check_nondegenerate().is_err()
    }
}

/// Exact minimum over `[0, 1]` of `right(s) - left(s)`.
pub(crate) fn min_gap(left: &NodeTrajectory, right: &NodeTrajectory) -> f64 {
    let a = right.c2 - left.c2;
    let b = right.c1 - left.c1;
    let c = right.c0 - left.c0;
    let mut m = c.min(a + b + c);
    if a > 0.0 {
        let s = -b / (2.0 * a);
        if s > 0.0 && s < 1.0 {
            m = m.min(c + s * (b + s * a));
        }
    }
    m
}

/// `|H_e(t)|` where `J_e(t) = (1 + dt H_e(t)) J_e(t_start)`.
pub fn evolution_magnitude(partition: &TimePartition, element: usize, t: f64) -> Result<f64> {
    if element >= partition.n_elements() {
        return invalid(format!("element {element} out of range"));
    }
    let s = partition.normalized(t);
    if !(-1e-12..=1.0 + 1e-12).contains(&s) {
        return invalid(format!("time {t} outside partition"));
    }
    evolution_at(partition, element, s)
}

fn evolution_at(partition: &TimePartition, e: usize, s: f64) -> Result<f64> {
    let j0 = partition.element_length(e, 0.0);
    if !(j0 > 0.0) {
        return Err(Error::DegenerateMesh(format!(
            "element {e} has non-positive initial length {j0:e}"
        )));
    }
    let jt = partition.element_length(e, s);
    Ok(((jt / j0 - 1.0) / partition.dt).abs())
}

/// Sampled space-time regularity of a partition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegularityReport {
    /// Largest sampled `|H_e(t)|`.
    pub mu_max: f64,
    /// Extremes of `J_e(t) / J_e(t_start)`.
    pub det_ratio_min: f64,
    pub det_ratio_max: f64,
    pub degenerate: bool,
}

pub const DEFAULT_REGULARITY_SAMPLES: usize = 11;

pub fn regularity_report(partition: &TimePartition, n_samples: usize) -> Result<RegularityReport> {
    if n_samples < 3 {
        return invalid(format!("need at least 3 samples, got {n_samples}"));
    }
    let mut report = RegularityReport {
        mu_max: 0.0,
        det_ratio_min: f64::INFINITY,
        det_ratio_max: f64::NEG_INFINITY,
        degenerate: partition.is_degenerate(),
    };
    for k in 0..n_samples {
        let s = k as f64 / (n_samples - 1) as f64;
        for e in 0..partition.n_elements() {
            let j0 = partition.element_length(e, 0.0);
            let jt = partition.element_length(e, s);
            if !(jt > 0.0) || !(j0 > 0.0) {
                report.degenerate = true;
                continue;
            }
            let ratio = jt / j0;
            report.det_ratio_min = report.det_ratio_min.min(ratio);
            report.det_ratio_max = report.det_ratio_max.max(ratio);
            report.mu_max = report.mu_max.max(((ratio - 1.0) / partition.dt).abs());
        }
    }
    Ok(report)
}

/// Re-anchors coefficients from one slice of a partition onto another. The
/// coefficients themselves are unchanged; only the basis they multiply moves.
pub fn shift_coefficients(coeffs: &[f64], from: &MeshSlice, to: &MeshSlice) -> Result<Vec<f64>> {
    if from.n_nodes() != to.n_nodes() || coeffs.len() != from.n_nodes() {
        return invalid(format!(
            "shift between slices with {} and {} nodes of {} coefficients",
            from.n_nodes(),
            to.n_nodes(),
            coeffs.len()
        ));
    }
    Ok(coeffs.to_vec())
}

/// Writes `node_index,t,x` rows, sampling each partition at `samples` equally
/// spaced times (endpoints included).
pub fn write_trajectory_csv<W: Write>(
    mut out: W,
    partitions: &[TimePartition],
    samples: usize,
) -> Result<()> {
    let samples = samples.max(2);
    writeln!(out, "node_index,t,x")?;
    for p in partitions {
        for k in 0..samples {
            let s = k as f64 / (samples - 1) as f64;
            let t = p.time_at(s);
            for node in 0..p.n_nodes() {
                let x = p.trajectory(node).position(s);
                writeln!(out, "{node},{t:.11e},{x:.11e}")?;
            }
        }
    }
    Ok(())
}
