//! Fractional-flow relaxation of the shortest-path program.
//!
//! Each undirected edge becomes two arcs. A virtual source feeds every start
//! vertex and every goal vertex drains into a virtual sink. Per arc we keep a
//! flow `phi` and perspective copies of both endpoint segments, scaled by
//! `phi`, so every set-membership, dwell and velocity row stays linear.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::error::{check_dim, Error, Result};
use crate::geom::{BBox, HPoly, State};
use crate::lp::{Cmp, LinearProgram, LpOutcome};
use crate::stgraph::{GoalVertex, SpaceTimeGraph, VertexId};

use super::VelocityBounds;

/// Node of the augmented graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Node {
    Source,
    Vertex(VertexId),
    Sink,
}

/// Relaxed arc flows and the LP optimum (a lower bound on every path cost).
#[derive(Debug, Clone)]
pub struct FlowSolution {
    pub flow: BTreeMap<(Node, Node), f64>,
    pub lower_bound: f64,
}

impl FlowSolution {
    /// Total flow leaving `node`.
    pub fn out_flow(&self, node: Node) -> f64 {
        self.flow
            .range((node, Node::Source)..)
            .take_while(|((u, _), _)| *u == node)
            .map(|(_, f)| *f)
            .sum()
    }
}

/// Vertices reachable from a source and co-reachable to a sink, skipping
/// sets that end before the start time.
pub(crate) fn useful_vertices(
    g: &SpaceTimeGraph,
    sources: &[VertexId],
    sinks: &[GoalVertex],
    t_start: f64,
    eps: f64,
) -> BTreeSet<VertexId> {
    let alive = |v: VertexId| g.bbox(v).is_some_and(|b| b.hi[g.dim()] >= t_start + eps - 1e-9);
    let bfs = |seeds: Vec<VertexId>| {
        let mut seen: BTreeSet<VertexId> = seeds.iter().copied().filter(|&v| alive(v)).collect();
        let mut queue: VecDeque<VertexId> = seen.iter().copied().collect();
        while let Some(u) = queue.pop_front() {
            for v in g.neighbors(u) {
                if alive(v) && seen.insert(v) {
                    queue.push_back(v);
                }
            }
        }
        seen
    };
    let fwd = bfs(sources.to_vec());
    let bwd = bfs(sinks.iter().map(|s| s.id).collect());
    fwd.intersection(&bwd).copied().collect()
}

/// Perspective copy of one vertex's segment: `(x, y)` scaled by `phi`.
struct Copy {
    x: Vec<usize>,
    y: Vec<usize>,
}

fn add_copy(lp: &mut LinearProgram, set: &HPoly, bb: &BBox, phi: usize, vb: &VelocityBounds, eps: f64) -> Copy {
    let n = set.dim();
    let d = n - 1;
    // phi in [0, 1], so a scaled point stays in the hull of 0 and the box;
    // finite bounds keep the simplex well conditioned
    let mut var = |k: usize| lp.add_var(0.0, bb.lo[k].min(0.0), bb.hi[k].max(0.0));
    let x: Vec<usize> = (0..n).map(&mut var).collect();
    let y: Vec<usize> = (0..n).map(&mut var).collect();
    for pt in [&x, &y] {
        for (a, b) in set.rows() {
            let mut terms: Vec<(usize, f64)> = pt.iter().zip(a).map(|(&j, &c)| (j, c)).collect();
            terms.push((phi, -b));
            lp.add_row(&terms, Cmp::Le, 0.0);
        }
    }
    lp.add_row(&[(y[d], 1.0), (x[d], -1.0), (phi, -eps)], Cmp::Ge, 0.0);
    for j in 0..d {
        for (bound, cmp) in [(vb.v_max[j], Cmp::Le), (vb.v_min[j], Cmp::Ge)] {
            lp.add_row(
                &[(y[j], 1.0), (x[j], -1.0), (y[d], -bound), (x[d], bound)],
                cmp,
                0.0,
            );
        }
    }
    Copy { x, y }
}

/// Builds and solves the relaxation. `Ok(None)` when no source-sink flow
/// exists (the graph offers no path).
pub fn relaxation(
    g: &SpaceTimeGraph,
    sources: &[VertexId],
    sinks: &[GoalVertex],
    x_start: &State,
    p_goal: &[f64],
    vb: &VelocityBounds,
    eps: f64,
) -> Result<Option<FlowSolution>> {
    let d = g.dim();
    check_dim(d, x_start.dim())?;
    check_dim(d, p_goal.len())?;
    if sources.is_empty() || sinks.is_empty() {
        return Err(Error::InvalidArgument("relaxation needs sources and sinks".into()));
    }
    let keep = useful_vertices(g, sources, sinks, x_start.t, eps);
    let x0 = x_start.to_point();
    let n = d + 1;

    let mut arcs: Vec<(Node, Node)> = Vec::new();
    for &s in sources {
        if keep.contains(&s) {
            arcs.push((Node::Source, Node::Vertex(s)));
        }
    }
    for &u in &keep {
        for v in g.neighbors(u) {
            if keep.contains(&v) {
                arcs.push((Node::Vertex(u), Node::Vertex(v)));
            }
        }
    }
    let sink_ids: BTreeSet<VertexId> = sinks.iter().map(|s| s.id).collect();
    for &t in &sink_ids {
        if keep.contains(&t) {
            arcs.push((Node::Vertex(t), Node::Sink));
        }
    }
    if !arcs.iter().any(|a| a.0 == Node::Source) || !arcs.iter().any(|a| a.1 == Node::Sink) {
        return Ok(None);
    }

    let mut lp = LinearProgram::new();
    let mut phis = Vec::with_capacity(arcs.len());
    // per vertex: incoming head copies and outgoing tail copies (as var lists)
    let mut inflow: BTreeMap<VertexId, Vec<(usize, Copy)>> = BTreeMap::new();
    let mut outflow: BTreeMap<VertexId, Vec<(usize, Copy)>> = BTreeMap::new();

    for &(u, v) in &arcs {
        let phi = lp.add_var(0.0, 0.0, 1.0);
        phis.push(phi);
        let tail = match u {
            Node::Vertex(id) => Some(add_copy(&mut lp, g.set(id).unwrap(), g.bbox(id).unwrap(), phi, vb, eps)),
            _ => None,
        };
        let head = match v {
            Node::Vertex(id) => Some(add_copy(&mut lp, g.set(id).unwrap(), g.bbox(id).unwrap(), phi, vb, eps)),
            _ => None,
        };
        match (&tail, &head) {
            (Some(tc), Some(hc)) => {
                for j in 0..n {
                    lp.add_row(&[(tc.y[j], 1.0), (hc.x[j], -1.0)], Cmp::Eq, 0.0);
                }
            }
            (None, Some(hc)) => {
                // leaving the source: x = phi * x_start
                for j in 0..n {
                    lp.add_row(&[(hc.x[j], 1.0), (phi, -x0[j])], Cmp::Eq, 0.0);
                }
            }
            (Some(tc), None) => {
                // entering the sink: y.p = phi * p_goal
                for j in 0..d {
                    lp.add_row(&[(tc.y[j], 1.0), (phi, -p_goal[j])], Cmp::Eq, 0.0);
                }
            }
            (None, None) => unreachable!("no arc joins source and sink directly"),
        }
        if let (Node::Vertex(id), Some(hc)) = (v, head) {
            // dwell inside the entered set is the arc's cost
            lp.set_cost(hc.y[d], 1.0);
            lp.set_cost(hc.x[d], -1.0);
            inflow.entry(id).or_default().push((phi, hc));
        }
        if let (Node::Vertex(id), Some(tc)) = (u, tail) {
            outflow.entry(id).or_default().push((phi, tc));
        }
    }

    let source_terms: Vec<(usize, f64)> = arcs
        .iter()
        .zip(&phis)
        .filter(|(a, _)| a.0 == Node::Source)
        .map(|(_, &p)| (p, 1.0))
        .collect();
    lp.add_row(&source_terms, Cmp::Eq, 1.0);

    let empty = Vec::new();
    for &v in &keep {
        let ins = inflow.get(&v).unwrap_or(&empty);
        let outs = outflow.get(&v).unwrap_or(&empty);
        let mut terms: Vec<(usize, f64)> = ins.iter().map(|(p, _)| (*p, 1.0)).collect();
        terms.extend(outs.iter().map(|(p, _)| (*p, -1.0)));
        lp.add_row(&terms, Cmp::Eq, 0.0);
        let through: Vec<(usize, f64)> = ins.iter().map(|(p, _)| (*p, 1.0)).collect();
        lp.add_row(&through, Cmp::Le, 1.0);
        for j in 0..n {
            for pick in [0usize, 1] {
                let sel = |c: &Copy| if pick == 0 { c.x[j] } else { c.y[j] };
                let mut terms: Vec<(usize, f64)> = ins.iter().map(|(_, c)| (sel(c), 1.0)).collect();
                terms.extend(outs.iter().map(|(_, c)| (sel(c), -1.0)));
                lp.add_row(&terms, Cmp::Eq, 0.0);
            }
        }
    }

    log::debug!(
        "relaxation: {} vertices, {} arcs, {} vars, {} rows",
        keep.len(),
        arcs.len(),
        lp.num_vars(),
        lp.num_rows()
    );
    let (objective, x) = match lp.solve_interior()? {
        LpOutcome::Optimal { objective, x } => (objective, x),
        LpOutcome::Infeasible => return Ok(None),
        LpOutcome::Unbounded => return Err(Error::Solver("relaxation LP unbounded".into())),
    };
    let flow = arcs
        .iter()
        .zip(&phis)
        .map(|(&a, &p)| (a, x[p].clamp(0.0, 1.0)))
        .collect();
    Ok(Some(FlowSolution {
        flow,
        lower_bound: objective,
    }))
}
