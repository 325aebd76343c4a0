//! Convex restriction: the time-optimal LP along a fixed graph path.

use crate::error::{check_dim, Error, Result};
use crate::geom::{BBox, State, TOL};
use crate::lp::{Cmp, LinearProgram, LpOutcome};
use crate::stgraph::{SpaceTimeGraph, VertexId};
use crate::trajectory::Trajectory;

use super::VelocityBounds;

/// Solves the restricted program along `path`: one straight segment per
/// visited set, chained end to start, from `x_start` to any state at
/// `p_goal`. Returns the trajectory and its cost `arrival - x_start.t`, or
/// `None` when the path admits no feasible timing.
pub fn restriction(
    g: &SpaceTimeGraph,
    path: &[VertexId],
    x_start: &State,
    p_goal: &[f64],
    vb: &VelocityBounds,
    eps: f64,
) -> Result<Option<(Trajectory, f64)>> {
    let d = g.dim();
    check_dim(d, x_start.dim())?;
    check_dim(d, p_goal.len())?;
    if path.is_empty() {
        return Err(Error::InvalidArgument("empty graph path".into()));
    }
    let sets = path
        .iter()
        .map(|&v| {
            g.set(v)
                .ok_or_else(|| Error::InvalidArgument(format!("path names unknown vertex {v}")))
        })
        .collect::<Result<Vec<_>>>()?;
    let x0 = x_start.to_point();
    if !sets[0].contains(&x0)? {
        return Ok(None);
    }

    let n = d + 1;
    let k = path.len();
    let mut lp = LinearProgram::new();
    // q[i] is the i-th breakpoint after the start; q[k-1] is the arrival.
    let q: Vec<Vec<usize>> = (0..k).map(|_| (0..n).map(|_| lp.free_var(0.0)).collect()).collect();
    lp.set_cost(q[k - 1][d], 1.0);

    enum Pt<'a> {
        Fixed(&'a [f64]),
        Var(&'a [usize]),
    }
    // terms of coeff * point coordinate j; fixed coordinates fold into rhs
    let add = |terms: &mut Vec<(usize, f64)>, rhs: &mut f64, pt: &Pt, j: usize, c: f64| match pt {
        Pt::Fixed(x) => *rhs -= c * x[j],
        Pt::Var(v) => terms.push((v[j], c)),
    };

    for (i, set) in sets.iter().enumerate() {
        let from = if i == 0 { Pt::Fixed(&x0) } else { Pt::Var(&q[i - 1]) };
        let to = Pt::Var(&q[i]);
        // the start point was checked above; only later points need rows
        let ends: &[&Pt] = if i == 0 { &[&to] } else { &[&from, &to] };
        for pt in ends {
            for (a, b) in set.rows() {
                let mut terms = Vec::with_capacity(n);
                let mut rhs = b;
                for (j, &c) in a.iter().enumerate() {
                    add(&mut terms, &mut rhs, pt, j, c);
                }
                lp.add_row(&terms, Cmp::Le, rhs);
            }
        }
        // dwell: t_to - t_from >= eps
        let mut terms = Vec::new();
        let mut rhs = eps;
        add(&mut terms, &mut rhs, &to, d, 1.0);
        add(&mut terms, &mut rhs, &from, d, -1.0);
        lp.add_row(&terms, Cmp::Ge, rhs);
        // v_min * dt <= dp <= v_max * dt, per dimension
        for j in 0..d {
            for (bound, cmp) in [(vb.v_max[j], Cmp::Le), (vb.v_min[j], Cmp::Ge)] {
                let mut terms = Vec::new();
                let mut rhs = 0.0;
                add(&mut terms, &mut rhs, &to, j, 1.0);
                add(&mut terms, &mut rhs, &from, j, -1.0);
                add(&mut terms, &mut rhs, &to, d, -bound);
                add(&mut terms, &mut rhs, &from, d, bound);
                lp.add_row(&terms, cmp, rhs);
            }
        }
    }
    for j in 0..d {
        lp.add_row(&[(q[k - 1][j], 1.0)], Cmp::Eq, p_goal[j]);
    }

    let x = match lp.solve()? {
        LpOutcome::Optimal { x, .. } => x,
        LpOutcome::Infeasible => return Ok(None),
        LpOutcome::Unbounded => return Err(Error::Solver("restriction LP unbounded".into())),
    };
    let mut states = Vec::with_capacity(k + 1);
    states.push(x_start.clone());
    for (i, qi) in q.iter().enumerate() {
        let mut s = State::from_point(&qi.iter().map(|&j| x[j]).collect::<Vec<_>>());
        if i == k - 1 {
            s.p = p_goal.to_vec();
        }
        states.push(s);
    }
    let traj = polish(Trajectory::new(states), vb, eps);
    let cost = traj.arrival_time() - x_start.t;
    Ok(Some((traj, cost)))
}

/// Time needed to move by `delta` along dimension `j`.
fn travel_1d(delta: f64, j: usize, vb: &VelocityBounds) -> f64 {
    if delta > 0.0 {
        if vb.v_max[j] > 0.0 {
            delta / vb.v_max[j]
        } else {
            f64::INFINITY
        }
    } else if delta < 0.0 {
        if vb.v_min[j] < 0.0 {
            delta / vb.v_min[j]
        } else {
            f64::INFINITY
        }
    } else {
        0.0
    }
}

/// Shortest time from point `a` into the spatial part of `bb`.
fn travel_to_box(a: &[f64], bb: &BBox, vb: &VelocityBounds) -> f64 {
    (0..a.len())
        .map(|j| {
            let delta = if a[j] < bb.lo[j] {
                bb.lo[j] - a[j]
            } else if a[j] > bb.hi[j] {
                bb.hi[j] - a[j]
            } else {
                0.0
            };
            travel_1d(delta, j, vb)
        })
        .fold(0.0, f64::max)
}

/// Shortest time from anywhere in the spatial part of `bb` to point `b`.
fn travel_from_box(bb: &BBox, b: &[f64], vb: &VelocityBounds) -> f64 {
    (0..b.len())
        .map(|j| {
            let delta = if b[j] > bb.hi[j] {
                b[j] - bb.hi[j]
            } else if b[j] < bb.lo[j] {
                b[j] - bb.lo[j]
            } else {
                0.0
            };
            travel_1d(delta, j, vb)
        })
        .fold(0.0, f64::max)
}

/// Cheap bound on the restriction cost of `path` from bounding boxes alone.
/// `None` when the boxes already rule the path out.
pub(crate) fn path_lower_bound(
    g: &SpaceTimeGraph,
    path: &[VertexId],
    x_start: &State,
    p_goal: &[f64],
    vb: &VelocityBounds,
    eps: f64,
) -> Option<f64> {
    let d = g.dim();
    let boxes: Vec<&BBox> = path.iter().map(|&v| g.bbox(v)).collect::<Option<_>>()?;
    let t0 = x_start.t;
    let k = path.len();
    let mut prev = t0;
    let mut best = t0 + (0..d).map(|j| travel_1d(p_goal[j] - x_start.p[j], j, vb)).fold(0.0, f64::max);
    for i in 0..k {
        // q[i] lies in set i and, before the goal, in set i + 1
        let mut lo = (prev + eps).max(boxes[i].lo[d]).max(t0 + travel_to_box(&x_start.p, boxes[i], vb));
        let mut hi = boxes[i].hi[d];
        if i + 1 < k {
            lo = lo.max(boxes[i + 1].lo[d]).max(t0 + travel_to_box(&x_start.p, boxes[i + 1], vb));
            hi = hi.min(boxes[i + 1].hi[d]);
        }
        if lo > hi + 1e-7 {
            return None;
        }
        best = best
            .max(lo + (k - 1 - i) as f64 * eps)
            .max(lo + travel_from_box(boxes[i], p_goal, vb));
        prev = lo;
    }
    Some(best - t0)
}

/// Removes simplex round-off: snaps each step to at least `eps` and pulls
/// per-dimension displacements back inside the velocity bounds.
fn polish(mut traj: Trajectory, vb: &VelocityBounds, eps: f64) -> Trajectory {
    for i in 1..traj.states.len() {
        let prev_t = traj.states[i - 1].t;
        let prev_p = traj.states[i - 1].p.clone();
        let cur = &mut traj.states[i];
        if cur.t - prev_t < eps && cur.t - prev_t > eps - 10.0 * TOL {
            cur.t = prev_t + eps;
        }
        let dt = cur.t - prev_t;
        for j in 0..prev_p.len() {
            let dp = cur.p[j] - prev_p[j];
            if dp > vb.v_max[j] * dt {
                cur.t = prev_t + dp / vb.v_max[j];
            } else if dp < vb.v_min[j] * dt {
                cur.t = prev_t + dp / vb.v_min[j];
            }
        }
    }
    traj
}
