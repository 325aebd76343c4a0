//! Space-time graph of convex sets.
//!
//! Vertices are nonempty, bounded space-time polyhedra; an undirected edge
//! joins two vertices whose (closed) sets intersect.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::geom::{BBox, HPoly, State, TOL};

pub type VertexId = usize;

#[derive(Debug, Clone)]
pub struct SpaceTimeGraph {
    t_max: f64,
    d: usize,
    sets: BTreeMap<VertexId, HPoly>,
    boxes: BTreeMap<VertexId, BBox>,
    adj: BTreeMap<VertexId, BTreeSet<VertexId>>,
    next_id: VertexId,
}

/// A goal vertex together with the earliest time the goal position is
/// reachable inside it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GoalVertex {
    pub id: VertexId,
    pub t_entry: f64,
}

impl SpaceTimeGraph {
    /// Empty graph over R^d x [0, t_max].
    pub fn empty(d: usize, t_max: f64) -> Result<Self> {
        if !(t_max > 0.0) {
            return Err(Error::InvalidArgument(format!("t_max must be > 0, got {t_max}")));
        }
        Ok(SpaceTimeGraph {
            t_max,
            d,
            sets: BTreeMap::new(),
            boxes: BTreeMap::new(),
            adj: BTreeMap::new(),
            next_id: 0,
        })
    }

    /// Extrudes every spatial set over `[0, t_max]` and connects
    /// intersecting pairs.
    pub fn build(spatial_sets: &[HPoly], t_max: f64) -> Result<Self> {
        let first = spatial_sets
            .first()
            .ok_or_else(|| Error::InvalidArgument("no spatial sets given".into()))?;
        let mut g = SpaceTimeGraph::empty(first.dim(), t_max)?;
        let mut ids = Vec::with_capacity(spatial_sets.len());
        for s in spatial_sets {
            check_dim(g.d, s.dim())?;
            match g.add_vertex(s.extrude_time(0.0, t_max)?)? {
                Some(id) => ids.push(id),
                None => return Err(Error::EmptySet),
            }
        }
        for (i, &u) in ids.iter().enumerate() {
            for &v in &ids[i + 1..] {
                if g.sets_intersect(u, v)? {
                    g.link(u, v);
                }
            }
        }
        Ok(g)
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    /// Spatial dimension d (sets live in R^{d+1}).
    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn num_vertices(&self) -> usize {
        self.sets.len()
    }

    pub fn num_edges(&self) -> usize {
        self.adj.values().map(|n| n.len()).sum::<usize>() / 2
    }

    pub fn vertex_ids(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.sets.keys().copied()
    }

    pub fn vertices(&self) -> impl Iterator<Item = (VertexId, &HPoly)> {
        self.sets.iter().map(|(&id, p)| (id, p))
    }

    pub fn set(&self, id: VertexId) -> Option<&HPoly> {
        self.sets.get(&id)
    }

    pub fn bbox(&self, id: VertexId) -> Option<&BBox> {
        self.boxes.get(&id)
    }

    pub fn contains_vertex(&self, id: VertexId) -> bool {
        self.sets.contains_key(&id)
    }

    pub fn neighbors(&self, id: VertexId) -> impl Iterator<Item = VertexId> + '_ {
        self.adj.get(&id).into_iter().flat_map(|s| s.iter().copied())
    }

    pub fn has_edge(&self, u: VertexId, v: VertexId) -> bool {
        self.adj.get(&u).is_some_and(|s| s.contains(&v))
    }

    /// Undirected edges as `(u, v)` with `u < v`, in sorted order.
    pub fn edges(&self) -> impl Iterator<Item = (VertexId, VertexId)> + '_ {
        self.adj
            .iter()
            .flat_map(|(&u, ns)| ns.iter().filter(move |&&v| u < v).map(move |&v| (u, v)))
    }

    /// Adds a vertex without touching edges. Empty sets are dropped
    /// (`Ok(None)`); unbounded sets are rejected.
    pub fn add_vertex(&mut self, set: HPoly) -> Result<Option<VertexId>> {
        check_dim(self.d + 1, set.dim())?;
        let bbox = match set.bounding_box() {
            Ok(b) => b,
            Err(Error::EmptySet) => return Ok(None),
            Err(e) => return Err(e),
        };
        let id = self.next_id;
        self.next_id += 1;
        self.sets.insert(id, set);
        self.boxes.insert(id, bbox);
        self.adj.insert(id, BTreeSet::new());
        Ok(Some(id))
    }

    fn link(&mut self, u: VertexId, v: VertexId) {
        if u == v {
            return;
        }
        self.adj.entry(u).or_default().insert(v);
        self.adj.entry(v).or_default().insert(u);
    }

    fn remove_vertex(&mut self, id: VertexId) -> Option<BTreeSet<VertexId>> {
        self.sets.remove(&id)?;
        self.boxes.remove(&id);
        let nbrs = self.adj.remove(&id).unwrap_or_default();
        for n in &nbrs {
            if let Some(s) = self.adj.get_mut(n) {
                s.remove(&id);
            }
        }
        Some(nbrs)
    }

    /// Bounding-box prefilter followed by an exact emptiness LP.
    pub fn sets_intersect(&self, u: VertexId, v: VertexId) -> Result<bool> {
        let (bu, bv) = (&self.boxes[&u], &self.boxes[&v]);
        if !bu.overlaps(bv, TOL) {
            return Ok(false);
        }
        Ok(!self.sets[&u].intersect(&self.sets[&v])?.is_empty()?)
    }

    /// Replaces `removed` by `new_sets`, reconnecting the new vertices among
    /// themselves and to the removed vertex's former neighbors. Returns the
    /// ids of the nonempty new sets.
    pub fn insert_decomposition(
        &mut self,
        removed: VertexId,
        new_sets: Vec<HPoly>,
    ) -> Result<Vec<VertexId>> {
        let former = self
            .remove_vertex(removed)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown vertex {removed}")))?;
        let mut fresh = Vec::with_capacity(new_sets.len());
        for s in new_sets {
            if let Some(id) = self.add_vertex(s)? {
                fresh.push(id);
            }
        }
        for (i, &u) in fresh.iter().enumerate() {
            for &v in &fresh[i + 1..] {
                if self.sets_intersect(u, v)? {
                    self.link(u, v);
                }
            }
            for &n in &former {
                if self.sets_intersect(u, n)? {
                    self.link(u, n);
                }
            }
        }
        Ok(fresh)
    }

    /// Every vertex whose set contains `x`.
    pub fn start_vertices(&self, x: &State) -> Result<Vec<VertexId>> {
        check_dim(self.d, x.dim())?;
        let pt = x.to_point();
        let mut out = Vec::new();
        for (&id, set) in &self.sets {
            if self.boxes[&id].contains(&pt, TOL) && set.contains(&pt)? {
                out.push(id);
            }
        }
        Ok(out)
    }

    /// Closed time interval `{t | (p, t) in X_id}` clipped to `[0, t_max]`.
    pub fn goal_line_interval(&self, id: VertexId, p: &[f64]) -> Option<(f64, f64)> {
        let set = self.sets.get(&id)?;
        let (mut lo, mut hi) = (0.0_f64, self.t_max);
        for (a, b) in set.rows() {
            let (ap, at) = a.split_at(self.d);
            let rhs = b - crate::geom::dot(ap, p);
            let at = at[0];
            if at.abs() <= 1e-12 {
                if rhs < -TOL {
                    return None;
                }
            } else if at > 0.0 {
                hi = hi.min(rhs / at);
            } else {
                lo = lo.max(rhs / at);
            }
        }
        (lo <= hi + TOL).then_some((lo, hi.max(lo)))
    }

    /// Vertices from which a robot that reached `p_goal` can stay there until
    /// `t_max` (the goal line is covered by the union of all sets from the
    /// entry time on).
    pub fn goal_vertices(&self, p_goal: &[f64]) -> Result<Vec<GoalVertex>> {
        check_dim(self.d, p_goal.len())?;
        let mut intervals: Vec<(VertexId, f64, f64)> = Vec::new();
        for &id in self.sets.keys() {
            let bb = &self.boxes[&id];
            let inside = p_goal
                .iter()
                .enumerate()
                .all(|(k, v)| *v >= bb.lo[k] - TOL && *v <= bb.hi[k] + TOL);
            if !inside {
                continue;
            }
            if let Some((lo, hi)) = self.goal_line_interval(id, p_goal) {
                intervals.push((id, lo, hi));
            }
        }
        let mut sorted: Vec<(f64, f64)> = intervals.iter().map(|&(_, l, h)| (l, h)).collect();
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        Ok(intervals
            .into_iter()
            .filter(|&(_, lo, _)| covers(&sorted, lo, self.t_max))
            .map(|(id, lo, _)| GoalVertex { id, t_entry: lo })
            .collect())
    }

    /// Serializable snapshot.
    pub fn to_json_value(&self) -> GraphJson {
        GraphJson {
            t_max: self.t_max,
            d: self.d,
            vertices: self.sets.iter().map(|(&k, v)| (k, v.clone())).collect(),
            edges: self.edges().map(|(u, v)| [u, v]).collect(),
        }
    }

    pub fn from_json_value(j: GraphJson) -> Result<Self> {
        let mut g = SpaceTimeGraph::empty(j.d, j.t_max)?;
        for (id, set) in j.vertices {
            check_dim(g.d + 1, set.dim())?;
            let bbox = set.bounding_box()?;
            g.sets.insert(id, set);
            g.boxes.insert(id, bbox);
            g.adj.insert(id, BTreeSet::new());
            g.next_id = g.next_id.max(id + 1);
        }
        for [u, v] in j.edges {
            if !g.sets.contains_key(&u) || !g.sets.contains_key(&v) {
                return Err(Error::InvalidArgument(format!("edge ({u},{v}) names an unknown vertex")));
            }
            g.link(u, v);
        }
        Ok(g)
    }
}

/// Does the union of sorted intervals cover `[from, to]` without a gap
/// larger than `TOL`?
fn covers(sorted: &[(f64, f64)], from: f64, to: f64) -> bool {
    let mut reach = from;
    if reach >= to - TOL {
        return true;
    }
    for &(lo, hi) in sorted {
        if hi < reach {
            continue;
        }
        // sorted by start: a gap here cannot be closed later
        if lo > reach + TOL {
            return false;
        }
        reach = hi;
        if reach >= to - TOL {
            return true;
        }
    }
    false
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GraphJson {
    pub t_max: f64,
    pub d: usize,
    pub vertices: BTreeMap<VertexId, HPoly>,
    pub edges: Vec<[VertexId; 2]>,
}

impl Serialize for SpaceTimeGraph {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_json_value().serialize(s)
    }
}

impl<'de> Deserialize<'de> for SpaceTimeGraph {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = GraphJson::deserialize(d)?;
        SpaceTimeGraph::from_json_value(j).map_err(serde::de::Error::custom)
    }
}
