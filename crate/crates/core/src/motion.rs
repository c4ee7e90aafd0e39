//! Mesh motion: vertex trajectories for one partition, collision handling and
//! reconfiguration at partition boundaries.
//!
//! The first and last vertices never move.

use crate::basis::check_eps;
use crate::error::{invalid, Error, Result};
use crate::mesh::{
    build_uniform_slice, fit_quadratic_trajectory, min_gap, MeshSlice, NodeTrajectory,
    TimePartition,
};
use crate::problems::ProblemSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MotionKind {
    Static,
    /// Two forward Euler steps along `x_t = b(x, t)`.
    Characteristics,
    /// Linear motion with the previous solution as velocity, `x_t = u_h(x, t_{i-1})`.
    SolutionVelocity,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotionPolicy {
    pub kind: MotionKind,
    /// Start every partition from the uniform mesh.
    pub uniform_reset: bool,
    /// Elements shorter than this times the reference spacing lose a vertex.
    pub min_spacing_factor: f64,
    /// Elements longer than this times the reference spacing are bisected.
    pub max_spacing_factor: f64,
}

impl MotionPolicy {
    pub fn fixed() -> Self {
        Self {
            kind: MotionKind::Static,
            uniform_reset: false,
            min_spacing_factor: 0.1,
            max_spacing_factor: 2.0,
        }
    }

    /// Characteristics with a uniform mesh at the start of every partition.
    pub fn characteristics() -> Self {
        Self {
            kind: MotionKind::Characteristics,
            uniform_reset: true,
            ..Self::fixed()
        }
    }

    /// Solution-velocity motion without reset, so nodes can gather at fronts.
    pub fn solution_velocity() -> Self {
        Self {
            kind: MotionKind::SolutionVelocity,
            ..Self::fixed()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.min_spacing_factor > 0.0 && self.min_spacing_factor < 1.0) {
            return invalid(format!(
                "min_spacing_factor {} must lie in (0, 1)",
                self.min_spacing_factor
            ));
        }
        if !(self.max_spacing_factor > 1.0) {
            return invalid(format!(
                "max_spacing_factor {} must exceed 1",
                self.max_spacing_factor
            ));
        }
        Ok(())
    }
}

/// Vertex paths from two forward Euler steps along `b`, fitted through the
/// positions at `zeta_0, zeta_1, zeta_2`.
pub fn characteristic_paths(
    vertices: &[f64],
    b: &(dyn Fn(f64, f64) -> f64 + Sync),
    t_start: f64,
    dt: f64,
    eps: f64,
) -> Result<Vec<NodeTrajectory>> {
    check_eps(eps)?;
    let last = vertices.len() - 1;
    vertices
        .iter()
        .enumerate()
        .map(|(k, &x0)| {
            if k == 0 || k == last {
                return Ok(NodeTrajectory::fixed(x0));
            }
            let x1 = x0 + eps * dt * b(x0, t_start);
            let x2 = x1 + (1.0 - eps) * dt * b(x1, t_start + eps * dt);
            fit_quadratic_trajectory(x0, x1, x2, eps)
        })
        .collect()
}

/// Linear vertex paths with the given vertex velocities.
pub fn linear_paths(
    vertices: &[f64],
    velocity: impl Fn(f64) -> f64,
    dt: f64,
) -> Vec<NodeTrajectory> {
    let last = vertices.len() - 1;
    vertices
        .iter()
        .enumerate()
        .map(|(k, &x0)| {
            if k == 0 || k == last {
                NodeTrajectory::fixed(x0)
            } else {
                NodeTrajectory {
                    c0: x0,
                    c1: dt * velocity(x0),
                    c2: 0.0,
                }
            }
        })
        .collect()
}

fn checked_partition(
    t_start: f64,
    dt: f64,
    eps: f64,
    paths: Vec<NodeTrajectory>,
) -> Result<TimePartition> {
    let p = TimePartition::new(t_start, t_start + dt, eps, paths)?;
    p.check_nondegenerate()?;
    Ok(p)
}

/// Partition following the characteristics of `problem.b` from `start_slice`.
pub fn characteristics_trajectories(
    start_slice: &MeshSlice,
    problem: &ProblemSpec,
    t_start: f64,
    dt: f64,
    eps: f64,
) -> Result<TimePartition> {
    let paths = characteristic_paths(
        &start_slice.vertex_positions(),
        &*problem.b,
        t_start,
        dt,
        eps,
    )?;
    checked_partition(t_start, dt, eps, paths)
}

/// Partition in which each vertex moves linearly with velocity `u_prev(x0)`.
pub fn solution_velocity_trajectories(
    start_slice: &MeshSlice,
    u_prev: impl Fn(f64) -> f64,
    t_start: f64,
    dt: f64,
    eps: f64,
) -> Result<TimePartition> {
    let paths = linear_paths(&start_slice.vertex_positions(), u_prev, dt);
    checked_partition(t_start, dt, eps, paths)
}

/// Removes vertices until no element of the partition gets shorter than
/// `min_length` at any time. Returns the surviving start positions and paths.
///
/// Of the two vertices of a colliding element the one that is not a boundary
/// vertex goes; between two interior vertices, the one next to the shorter
/// neighbouring element goes.
pub fn resolve_collisions(
    vertices: &[f64],
    paths: &[NodeTrajectory],
    min_length: f64,
) -> Result<(Vec<f64>, Vec<NodeTrajectory>)> {
    let mut xs = vertices.to_vec();
    let mut ps = paths.to_vec();
    let mut e = 0;
    while e + 1 < ps.len() {
        if min_gap(&ps[e], &ps[e + 1]) >= min_length {
            e += 1;
            continue;
        }
        let last = ps.len() - 1;
        if last < 2 {
            return Err(Error::InvalidState(
                "colliding boundary vertices: no interior vertex left to delete".into(),
            ));
        }
        let victim = if e == 0 {
            1
        } else if e + 1 == last {
            e
        } else {
            let left = xs[e] - xs[e - 1];
            let right = xs[e + 2] - xs[e + 1];
            if left <= right {
                e
            } else {
                e + 1
            }
        };
        xs.remove(victim);
        ps.remove(victim);
        e = e.saturating_sub(1);
    }
    Ok((xs, ps))
}

/// Start slice and trajectories for the partition `[t_start, t_start + dt]`.
///
/// `velocity` supplies the vertex velocity for solution-velocity motion.
/// Vertices that would bring an element below `min_length` are dropped from
/// the start slice, so topology only changes between partitions.
pub fn plan_partition(
    start: &MeshSlice,
    policy: &MotionPolicy,
    problem: &ProblemSpec,
    velocity: Option<&dyn Fn(f64) -> f64>,
    t_start: f64,
    dt: f64,
    eps: f64,
    min_length: f64,
) -> Result<(MeshSlice, TimePartition)> {
    let verts = start.vertex_positions();
    let paths = match policy.kind {
        MotionKind::Static => {
            let p = TimePartition::new(
                t_start,
                t_start + dt,
                eps,
                verts.iter().map(|&x| NodeTrajectory::fixed(x)).collect(),
            )?;
            let mut s = start.clone();
            s.time = t_start;
            return Ok((s, p));
        }
        MotionKind::Characteristics => characteristic_paths(&verts, &*problem.b, t_start, dt, eps)?,
        MotionKind::SolutionVelocity => {
            let v = velocity.ok_or_else(|| {
                Error::InvalidArgument("solution-velocity motion needs a velocity field".into())
            })?;
            linear_paths(&verts, v, dt)
        }
    };
    let (xs, ps) = resolve_collisions(&verts, &paths, min_length)?;
    let partition = checked_partition(t_start, dt, eps, ps)?;
    let slice = if xs.len() == verts.len() {
        let mut s = start.clone();
        s.time = t_start;
        s
    } else {
        MeshSlice::from_vertices(t_start, &xs, &vec![0.0; xs.len()])?
    };
    Ok((slice, partition))
}

/// Mesh for the start of the next partition, built from the end slice of the
/// previous one. Velocities of the result are zero.
pub fn reconfigure_between_partitions(
    end_slice: &MeshSlice,
    policy: &MotionPolicy,
    reference_spacing: f64,
) -> Result<MeshSlice> {
    policy.validate()?;
    if !(reference_spacing > 0.0) {
        return invalid(format!(
            "reference spacing {reference_spacing} must be positive"
        ));
    }
    let (lo, hi) = end_slice.domain();
    if policy.uniform_reset {
        let n_el = ((hi - lo) / reference_spacing).round().max(1.0) as usize;
        return build_uniform_slice(lo, hi, 2 * n_el + 1, end_slice.time);
    }
    let min_len = policy.min_spacing_factor * reference_spacing;
    let max_len = policy.max_spacing_factor * reference_spacing;
    let mut xs = end_slice.vertex_positions();
    let mut e = 0;
    while e + 1 < xs.len() {
        if xs[e + 1] - xs[e] >= min_len {
            e += 1;
            continue;
        }
        let last = xs.len() - 1;
        if last < 2 {
            return Err(Error::InvalidState(
                "reconfiguration would leave fewer than 3 nodes".into(),
            ));
        }
        // never a boundary vertex; otherwise the side with the shorter neighbour
        let victim = if e == 0 {
            1
        } else if e + 1 == last || xs[e] - xs[e - 1] <= xs[e + 2] - xs[e + 1] {
            e
        } else {
            e + 1
        };
        xs.remove(victim);
        e = e.saturating_sub(1);
    }
    let mut out = Vec::with_capacity(xs.len());
    for w in xs.windows(2) {
        out.push(w[0]);
        let len = w[1] - w[0];
        if len > max_len {
            let pieces = (len / max_len).log2().ceil().exp2() as usize;
            for k in 1..pieces {
                out.push(w[0] + len * k as f64 / pieces as f64);
            }
        }
    }
    out.push(*xs.last().unwrap());
    if out.len() < 2 {
        return Err(Error::InvalidState(
            "reconfiguration left fewer than 3 nodes".into(),
        ));
    }
    MeshSlice::from_vertices(end_slice.time, &out, &vec![0.0; out.len()])
}
