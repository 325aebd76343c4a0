//! Time-optimal single-robot planning over a space-time graph of convex sets.
//!
//! The pipeline is relaxation -> randomized rounding -> convex restriction
//! per sampled path, keeping the cheapest feasible trajectory. An exhaustive
//! mode enumerates every simple path instead and serves as the exact oracle
//! on small graphs.

mod relaxation;
mod restriction;
mod rounding;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

pub use relaxation::{relaxation, FlowSolution, Node};
pub use restriction::restriction;
use restriction::path_lower_bound;
pub use rounding::{round_paths, MIN_FLOW};

use crate::error::{check_dim, Error, Result};
use crate::geom::State;
use crate::stgraph::{GoalVertex, SpaceTimeGraph, VertexId};
use crate::trajectory::Trajectory;

pub const DEFAULT_EPS: f64 = 1e-3;
/// Upper limit on simple paths visited by the exhaustive mode.
pub const EXHAUSTIVE_PATH_CAP: usize = 100_000;

/// Paths whose cheap bound exceeds the incumbent by more than this are skipped.
const PRUNE_SLACK: f64 = 1e-9;

/// Per-dimension velocity limits, `v_min < 0 < v_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VelocityBounds {
    pub v_min: Vec<f64>,
    pub v_max: Vec<f64>,
}

impl VelocityBounds {
    pub fn new(v_min: Vec<f64>, v_max: Vec<f64>) -> Result<Self> {
        check_dim(v_min.len(), v_max.len())?;
        if v_min.iter().zip(&v_max).any(|(lo, hi)| !(*lo < 0.0 && *hi > 0.0)) {
            return Err(Error::InvalidArgument(
                "velocity bounds must satisfy v_min < 0 < v_max".into(),
            ));
        }
        Ok(VelocityBounds { v_min, v_max })
    }

    /// `[-v, v]` in every one of `d` dimensions.
    pub fn symmetric(d: usize, v: f64) -> Result<Self> {
        Self::new(vec![-v; d], vec![v; d])
    }

    pub fn dim(&self) -> usize {
        self.v_max.len()
    }

    /// Minimum travel time between two positions ignoring obstacles.
    pub fn free_space_time(&self, from: &[f64], to: &[f64]) -> f64 {
        from.iter()
            .zip(to)
            .enumerate()
            .map(|(k, (a, b))| {
                let dp = b - a;
                if dp >= 0.0 {
                    dp / self.v_max[k]
                } else {
                    dp / self.v_min[k]
                }
            })
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolveMode {
    Heuristic,
    Exhaustive,
}

impl std::str::FromStr for SolveMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "heuristic" => Ok(SolveMode::Heuristic),
            "exhaustive" => Ok(SolveMode::Exhaustive),
            _ => Err(Error::InvalidArgument(format!("unknown solver mode {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveParams {
    /// Minimum dwell per visited set (seconds).
    pub epsilon: f64,
    /// Cap on sampled paths; `None` selects `ceil(1e3 * ln |E|)`.
    pub path_budget: Option<usize>,
    pub rng_seed: u64,
    pub mode: SolveMode,
    /// Extra re-seeded rounding rounds when no sampled path is feasible.
    pub restriction_retries: u32,
}

impl Default for SolveParams {
    fn default() -> Self {
        SolveParams {
            epsilon: DEFAULT_EPS,
            path_budget: None,
            rng_seed: 0,
            mode: SolveMode::Heuristic,
            restriction_retries: 2,
        }
    }
}

/// `ceil(1e3 * ln |E|)`, at least 1.
pub fn default_path_budget(num_edges: usize) -> usize {
    if num_edges <= 1 {
        return 1;
    }
    ((1e3 * (num_edges as f64).ln()).ceil() as usize).max(1)
}

impl SolveParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) {
            return Err(Error::InvalidArgument("epsilon must be > 0".into()));
        }
        if self.path_budget == Some(0) {
            return Err(Error::InvalidArgument("path budget must be >= 1".into()));
        }
        Ok(())
    }

    pub fn budget_for(&self, g: &SpaceTimeGraph) -> usize {
        let auto = default_path_budget(g.num_edges());
        self.path_budget.map_or(auto, |b| b.max(1))
    }
}

/// Why a single-robot query produced no trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureReason {
    /// The start state lies in no vertex set.
    NoStartVertex,
    /// No vertex lets the robot hold the goal until `t_max`.
    NoGoalVertex,
    /// The relaxation admits no source-sink flow.
    NoPath,
    /// Every candidate path had an infeasible restriction.
    NoFeasiblePath,
}

impl std::fmt::Display for FailureReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            FailureReason::NoStartVertex => "start state is not in free space",
            FailureReason::NoGoalVertex => "goal cannot be held until t_max",
            FailureReason::NoPath => "no path between start and goal",
            FailureReason::NoFeasiblePath => "no candidate path admits a feasible trajectory",
        };
        f.write_str(s)
    }
}

/// Result of a successful query plus solver statistics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Plan {
    pub trajectory: Trajectory,
    pub cost: f64,
    pub path: Vec<VertexId>,
    pub lower_bound: Option<f64>,
    pub paths_tried: usize,
    pub feasible_paths: usize,
    pub mode: SolveMode,
    pub seed: u64,
}

/// Solve report as written to disk.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveReport {
    pub cost: Option<f64>,
    pub lower_bound: Option<f64>,
    pub paths_tried: usize,
    pub feasible_paths: usize,
    pub mode: SolveMode,
    pub seed: u64,
}

impl From<&Plan> for SolveReport {
    fn from(p: &Plan) -> Self {
        SolveReport {
            cost: Some(p.cost),
            lower_bound: p.lower_bound,
            paths_tried: p.paths_tried,
            feasible_paths: p.feasible_paths,
            mode: p.mode,
            seed: p.seed,
        }
    }
}

#[derive(Debug, Clone)]
pub enum SolveOutcome {
    Solved(Plan),
    Failed(FailureReason),
}

impl SolveOutcome {
    pub fn plan(self) -> Option<Plan> {
        match self {
            SolveOutcome::Solved(p) => Some(p),
            SolveOutcome::Failed(_) => None,
        }
    }
}

/// Winning restriction: trajectory, cost and graph path.
type Candidate = (Trajectory, f64, Vec<VertexId>);

/// Best of the restrictions over `paths`; ties go to the earliest path.
/// Paths are visited in order of a cheap lower bound and skipped once that
/// bound exceeds the incumbent, which never changes the answer. The count
/// returned is the number of feasible restrictions actually solved.
fn best_restriction(
    g: &SpaceTimeGraph,
    paths: &[Vec<VertexId>],
    x_start: &State,
    p_goal: &[f64],
    vb: &VelocityBounds,
    eps: f64,
) -> Result<(Option<Candidate>, usize)> {
    let mut order: Vec<(f64, usize)> = paths
        .iter()
        .enumerate()
        .filter_map(|(i, p)| path_lower_bound(g, p, x_start, p_goal, vb, eps).map(|lb| (lb, i)))
        .collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut best: Option<(Trajectory, f64, usize)> = None;
    let mut feasible = 0;
    for (lb, i) in order {
        if best.as_ref().is_some_and(|b| lb > b.1 + PRUNE_SLACK) {
            break;
        }
        let path = &paths[i];
        let res = match restriction(g, path, x_start, p_goal, vb, eps) {
            Ok(r) => r,
            Err(Error::Solver(msg)) => {
                log::warn!("restriction on path {path:?} failed numerically: {msg}");
                None
            }
            Err(e) => return Err(e),
        };
        if let Some((traj, cost)) = res {
            feasible += 1;
            let better = best
                .as_ref()
                .is_none_or(|b| cost < b.1 - 1e-12 || (cost <= b.1 + 1e-12 && i < b.2));
            if better {
                best = Some((traj, cost, i));
            }
        }
    }
    Ok((best.map(|(t, c, i)| (t, c, paths[i].clone())), feasible))
}

/// Every simple path from a source to a sink (depth-first, ascending ids).
pub fn enumerate_paths(
    g: &SpaceTimeGraph,
    sources: &[VertexId],
    sinks: &[GoalVertex],
    cap: usize,
) -> Vec<Vec<VertexId>> {
    let sink_set: BTreeSet<VertexId> = sinks.iter().map(|s| s.id).collect();
    let mut out = Vec::new();
    let mut stack: Vec<VertexId> = Vec::new();
    let mut on_path: BTreeSet<VertexId> = BTreeSet::new();

    fn dfs(
        g: &SpaceTimeGraph,
        u: VertexId,
        sinks: &BTreeSet<VertexId>,
        stack: &mut Vec<VertexId>,
        on_path: &mut BTreeSet<VertexId>,
        out: &mut Vec<Vec<VertexId>>,
        cap: usize,
    ) {
        if out.len() >= cap {
            return;
        }
        stack.push(u);
        on_path.insert(u);
        if sinks.contains(&u) {
            out.push(stack.clone());
        }
        for v in g.neighbors(u).collect::<Vec<_>>() {
            if !on_path.contains(&v) {
                dfs(g, v, sinks, stack, on_path, out, cap);
            }
        }
        stack.pop();
        on_path.remove(&u);
    }

    for &s in sources {
        dfs(g, s, &sink_set, &mut stack, &mut on_path, &mut out, cap);
    }
    out
}

/// Plans a time-optimal trajectory from `x_start` to any state at `p_goal`
/// that can be held until `t_max`.
pub fn solve_stgcs(
    g: &SpaceTimeGraph,
    x_start: &State,
    p_goal: &[f64],
    vb: &VelocityBounds,
    params: &SolveParams,
) -> Result<SolveOutcome> {
    params.validate()?;
    check_dim(g.dim(), vb.dim())?;
    let sources = g.start_vertices(x_start)?;
    if sources.is_empty() {
        return Ok(SolveOutcome::Failed(FailureReason::NoStartVertex));
    }
    let sinks = g.goal_vertices(p_goal)?;
    if sinks.is_empty() {
        return Ok(SolveOutcome::Failed(FailureReason::NoGoalVertex));
    }
    let eps = params.epsilon;

    match params.mode {
        SolveMode::Exhaustive => {
            let paths = enumerate_paths(g, &sources, &sinks, EXHAUSTIVE_PATH_CAP);
            if paths.is_empty() {
                return Ok(SolveOutcome::Failed(FailureReason::NoPath));
            }
            let (best, feasible) = best_restriction(g, &paths, x_start, p_goal, vb, eps)?;
            Ok(match best {
                Some((trajectory, cost, path)) => SolveOutcome::Solved(Plan {
                    trajectory,
                    cost,
                    path,
                    lower_bound: None,
                    paths_tried: paths.len(),
                    feasible_paths: feasible,
                    mode: SolveMode::Exhaustive,
                    seed: params.rng_seed,
                }),
                None => SolveOutcome::Failed(FailureReason::NoFeasiblePath),
            })
        }
        SolveMode::Heuristic => {
            let Some(flows) = relaxation(g, &sources, &sinks, x_start, p_goal, vb, eps)? else {
                return Ok(SolveOutcome::Failed(FailureReason::NoPath));
            };
            let budget = params.budget_for(g);
            let mut tried: BTreeSet<Vec<VertexId>> = BTreeSet::new();
            let mut feasible_total = 0;
            for attempt in 0..=params.restriction_retries {
                let seed = params.rng_seed.wrapping_add(attempt as u64);
                let fresh: Vec<Vec<VertexId>> = round_paths(&flows, budget, seed)
                    .into_iter()
                    .filter(|p| !tried.contains(p))
                    .collect();
                tried.extend(fresh.iter().cloned());
                let (best, feasible) = best_restriction(g, &fresh, x_start, p_goal, vb, eps)?;
                feasible_total += feasible;
                if let Some((trajectory, cost, path)) = best {
                    return Ok(SolveOutcome::Solved(Plan {
                        trajectory,
                        cost,
                        path,
                        lower_bound: Some(flows.lower_bound),
                        paths_tried: tried.len(),
                        feasible_paths: feasible_total,
                        mode: SolveMode::Heuristic,
                        seed: params.rng_seed,
                    }));
                }
            }
            Ok(SolveOutcome::Failed(FailureReason::NoFeasiblePath))
        }
    }
}

#[cfg(test)]
mod tests;
