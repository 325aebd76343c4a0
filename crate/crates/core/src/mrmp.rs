//! Multi-robot coordination on top of single-robot planning: exact
//! collision checks, sequential, randomized-priority and priority-based
//! search, plus an independent validator.

use std::collections::hash_map::DefaultHasher;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::hash::{Hash, Hasher};
use std::str::FromStr;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ecd::{canonicalize, reserve_in_place_unchecked, vertex_segment_sequence, Reservation};
use crate::error::{check_dim, Error, Result};
use crate::gcsprog::{solve_stgcs, FailureReason, SolveOutcome, SolveParams, VelocityBounds};
use crate::geom::{HPoly, State};
use crate::stgraph::SpaceTimeGraph;
use crate::trajectory::Trajectory;

/// Collisions need a separation below `r - COLLIDE_SLACK`.
pub const COLLIDE_SLACK: f64 = 1e-9;

/// Sampling step used by [`validate`].
pub const VALIDATE_DT: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Robot {
    pub start: State,
    pub goal: Vec<f64>,
}

/// A ready-to-plan instance: the graph already has every dynamic obstacle
/// reserved. The static spatial sets and obstacles are kept for validation.
#[derive(Debug, Clone)]
pub struct MrmpInstance {
    pub graph: SpaceTimeGraph,
    pub spatial_sets: Vec<HPoly>,
    pub obstacles: Vec<Reservation>,
    pub robots: Vec<Robot>,
    pub vb: VelocityBounds,
    pub safe_radius: f64,
    pub time_budget: f64,
    pub solve_params: SolveParams,
}

impl MrmpInstance {
    /// Builds the space-time graph, reserves the obstacles and checks the
    /// robots' start and goal data.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        spatial_sets: Vec<HPoly>,
        t_max: f64,
        obstacles: Vec<Reservation>,
        robots: Vec<Robot>,
        vb: VelocityBounds,
        safe_radius: f64,
        time_budget: f64,
        solve_params: SolveParams,
    ) -> Result<Self> {
        if !(safe_radius > 0.0) {
            return Err(Error::Instance(format!("safe radius must be > 0, got {safe_radius}")));
        }
        if !(time_budget > 0.0) {
            return Err(Error::Instance(format!("time budget must be > 0, got {time_budget}")));
        }
        solve_params.validate()?;
        let mut graph = SpaceTimeGraph::build(&spatial_sets, t_max)?;
        let d = graph.dim();
        check_dim(d, vb.dim())?;
        // obstacles must stay in the map; they may overlap one another
        let map = graph.clone();
        for (k, ob) in obstacles.iter().enumerate() {
            for s in &ob.trajectory.states {
                check_dim(d, s.dim())?;
            }
            vertex_segment_sequence(&map, &canonicalize(&ob.trajectory, t_max))
                .and_then(|_| reserve_in_place_unchecked(&mut graph, ob))
                .map_err(|e| Error::Instance(format!("dynamic obstacle {k}: {e}")))?;
        }
        for (i, r) in robots.iter().enumerate() {
            check_dim(d, r.start.dim())?;
            check_dim(d, r.goal.len())?;
            if r.start.t < 0.0 || r.start.t >= t_max {
                return Err(Error::Instance(format!("robot {i}: start time outside [0, t_max)")));
            }
        }
        for i in 0..robots.len() {
            for j in i + 1..robots.len() {
                let sep = linf(&robots[i].start.p, &robots[j].start.p);
                if sep < safe_radius - COLLIDE_SLACK {
                    return Err(Error::Instance(format!(
                        "robots {i} and {j} start {sep} apart, below the safe radius"
                    )));
                }
            }
        }
        Ok(MrmpInstance {
            graph,
            spatial_sets,
            obstacles,
            robots,
            vb,
            safe_radius,
            time_budget,
            solve_params,
        })
    }

    pub fn num_robots(&self) -> usize {
        self.robots.len()
    }

    pub fn t_max(&self) -> f64 {
        self.graph.t_max()
    }
}

fn linf(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max)
}

/// Earliest time in `[0, t_max]` at which the two robots come closer than
/// `r` in the max-norm, both holding their end positions outside their own
/// time spans.
pub fn collide(a: &Trajectory, b: &Trajectory, r: f64, t_max: f64) -> Option<f64> {
    let horizon = t_max.max(a.arrival_time()).max(b.arrival_time());
    let ca = canonicalize(a, horizon);
    let cb = canonicalize(b, horizon);
    let mut times: Vec<f64> = ca.states.iter().chain(&cb.states).map(|s| s.t).collect();
    times.sort_by(f64::total_cmp);
    times.dedup();
    let thr = r - COLLIDE_SLACK;
    for w in times.windows(2) {
        let (t0, t1) = (w[0], w[1]);
        let p0: Vec<f64> = diff(&ca.position_at(t0), &cb.position_at(t0));
        let p1: Vec<f64> = diff(&ca.position_at(t1), &cb.position_at(t1));
        if let Some(t) = first_below(&p0, &p1, t0, t1, thr) {
            return Some(t);
        }
    }
    if times.len() == 1 && linf(&ca.position_at(times[0]), &cb.position_at(times[0])) < thr {
        return Some(times[0]);
    }
    None
}

fn diff(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(u, v)| u - v).collect()
}

/// `f(s) = max_k |p0_k + s (p1_k - p0_k)|` on `s in [0, 1]` is convex and
/// piecewise linear. Returns the first time `f < thr`, if any.
fn first_below(p0: &[f64], p1: &[f64], t0: f64, t1: f64, thr: f64) -> Option<f64> {
    let w: Vec<f64> = p1.iter().zip(p0).map(|(a, b)| a - b).collect();
    let f = |s: f64| p0.iter().zip(&w).map(|(p, v)| (p + s * v).abs()).fold(0.0, f64::max);
    if f(0.0) < thr {
        return Some(t0);
    }
    // kinks: zeros of each coordinate and crossings |dp_k| = |dp_l|
    let mut cands = vec![1.0];
    let mut root = |num: f64, den: f64| {
        if den.abs() > 1e-300 {
            let s = num / den;
            if s > 0.0 && s < 1.0 {
                cands.push(s);
            }
        }
    };
    for k in 0..p0.len() {
        root(-p0[k], w[k]);
        for l in k + 1..p0.len() {
            root(p0[l] - p0[k], w[k] - w[l]);
            root(-(p0[l] + p0[k]), w[k] + w[l]);
        }
    }
    let (s_min, f_min) = cands
        .iter()
        .map(|&s| (s, f(s)))
        .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.total_cmp(&b.0)))
        .unwrap();
    if f_min >= thr {
        return None;
    }
    // f is convex, so it decreases on [0, s_min]: bisect for the crossing
    let (mut lo, mut hi) = (0.0, s_min);
    let dt = t1 - t0;
    while (hi - lo) * dt > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < thr {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(t0 + hi * dt)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Sp,
    Rp,
    Pbs,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Sp, Method::Rp, Method::Pbs];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Sp => "sp",
            Method::Rp => "rp",
            Method::Pbs => "pbs",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sp" => Ok(Method::Sp),
            "rp" => Ok(Method::Rp),
            "pbs" => Ok(Method::Pbs),
            _ => Err(Error::InvalidArgument(format!("unknown method '{s}' (sp, rp or pbs)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub soc: f64,
    pub makespan: f64,
    pub runtime_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub trajectories: Vec<Trajectory>,
    pub metrics: Metrics,
    pub method: Method,
    pub seed: u64,
}

/// Time cost of each trajectory (arrival minus departure time).
pub fn costs(trajectories: &[Trajectory]) -> Vec<f64> {
    trajectories
        .iter()
        .map(|t| t.arrival_time() - t.first().t)
        .collect()
}

/// Sum of costs and makespan.
pub fn metrics(trajectories: &[Trajectory]) -> (f64, f64) {
    let c = costs(trajectories);
    (c.iter().sum(), c.iter().copied().fold(0.0, f64::max))
}

#[derive(Debug, Clone, PartialEq)]
pub enum MrmpFailure {
    Robot { robot: usize, reason: FailureReason },
    Exhausted,
    Timeout,
}

impl fmt::Display for MrmpFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MrmpFailure::Robot { robot, reason } => write!(f, "robot {robot}: {reason}"),
            MrmpFailure::Exhausted => f.write_str("fail to find a solution (search exhausted)"),
            MrmpFailure::Timeout => f.write_str("fail to find a solution (time budget exceeded)"),
        }
    }
}

/// Search counters reported alongside every outcome.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SearchStats {
    /// PBS node expansions.
    pub nodes_expanded: usize,
    /// Priority orders tried by SP (1) or RP.
    pub permutations: usize,
    pub single_robot_solves: usize,
    /// Edge count of the last graph planned on.
    pub graph_edges_final: usize,
}

#[derive(Debug, Clone)]
pub struct MrmpOutcome {
    pub solution: Option<Solution>,
    pub failure: Option<MrmpFailure>,
    pub stats: SearchStats,
}

impl MrmpOutcome {
    fn solved(trajectories: Vec<Trajectory>, method: Method, seed: u64, start: Instant, stats: SearchStats) -> Self {
        let (soc, makespan) = metrics(&trajectories);
        MrmpOutcome {
            solution: Some(Solution {
                trajectories,
                metrics: Metrics {
                    soc,
                    makespan,
                    runtime_s: start.elapsed().as_secs_f64(),
                },
                method,
                seed,
            }),
            failure: None,
            stats,
        }
    }

    fn failed(failure: MrmpFailure, stats: SearchStats) -> Self {
        MrmpOutcome {
            solution: None,
            failure: Some(failure),
            stats,
        }
    }
}

fn deadline(inst: &MrmpInstance, start: Instant) -> Instant {
    start + Duration::from_secs_f64(inst.time_budget.min(1e9))
}

enum SpResult {
    Solved(Vec<Trajectory>),
    Failed(MrmpFailure),
}

fn sp_inner(inst: &MrmpInstance, order: &[usize], until: Instant, stats: &mut SearchStats) -> Result<SpResult> {
    let n = inst.num_robots();
    let mut seen = vec![false; n];
    for &i in order {
        if i >= n || std::mem::replace(&mut seen[i], true) {
            return Err(Error::InvalidArgument(format!("{order:?} is not a permutation of 0..{n}")));
        }
    }
    if order.len() != n {
        return Err(Error::InvalidArgument(format!("{order:?} is not a permutation of 0..{n}")));
    }
    let mut g = inst.graph.clone();
    let mut trajs: Vec<Option<Trajectory>> = vec![None; n];
    for &i in order {
        if Instant::now() >= until {
            return Ok(SpResult::Failed(MrmpFailure::Timeout));
        }
        let rb = &inst.robots[i];
        stats.single_robot_solves += 1;
        match solve_stgcs(&g, &rb.start, &rb.goal, &inst.vb, &inst.solve_params)? {
            SolveOutcome::Solved(plan) => {
                reserve_in_place_unchecked(&mut g, &Reservation::new(plan.trajectory.clone(), inst.safe_radius)?)?;
                trajs[i] = Some(plan.trajectory);
            }
            SolveOutcome::Failed(reason) => {
                return Ok(SpResult::Failed(MrmpFailure::Robot { robot: i, reason }));
            }
        }
    }
    stats.graph_edges_final = g.num_edges();
    Ok(SpResult::Solved(trajs.into_iter().map(Option::unwrap).collect()))
}

/// Sequential planning in the given priority order.
pub fn sp(inst: &MrmpInstance, order: &[usize]) -> Result<MrmpOutcome> {
    let start = Instant::now();
    let mut stats = SearchStats {
        permutations: 1,
        ..Default::default()
    };
    Ok(match sp_inner(inst, order, deadline(inst, start), &mut stats)? {
        SpResult::Solved(t) => MrmpOutcome::solved(t, Method::Sp, inst.solve_params.rng_seed, start, stats),
        SpResult::Failed(f) => MrmpOutcome::failed(f, stats),
    })
}

fn factorial(n: usize) -> Option<usize> {
    (1..=n).try_fold(1usize, |acc, k| acc.checked_mul(k))
}

/// Randomized prioritized planning: seeded unused permutations until one
/// succeeds, all are tried, or the time budget runs out.
pub fn rp(inst: &MrmpInstance) -> Result<MrmpOutcome> {
    let start = Instant::now();
    let until = deadline(inst, start);
    let n = inst.num_robots();
    let total = factorial(n);
    let mut rng = ChaCha8Rng::seed_from_u64(inst.solve_params.rng_seed);
    let mut tried: BTreeSet<Vec<usize>> = BTreeSet::new();
    let mut stats = SearchStats::default();
    loop {
        if total.is_some_and(|t| tried.len() >= t) {
            return Ok(MrmpOutcome::failed(MrmpFailure::Exhausted, stats));
        }
        if Instant::now() >= until {
            return Ok(MrmpOutcome::failed(MrmpFailure::Timeout, stats));
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        if !tried.insert(order.clone()) {
            continue;
        }
        stats.permutations += 1;
        log::debug!("rp: trying order {order:?}");
        match sp_inner(inst, &order, until, &mut stats)? {
            SpResult::Solved(t) => {
                return Ok(MrmpOutcome::solved(t, Method::Rp, inst.solve_params.rng_seed, start, stats))
            }
            SpResult::Failed(MrmpFailure::Timeout) => {
                return Ok(MrmpOutcome::failed(MrmpFailure::Timeout, stats))
            }
            SpResult::Failed(_) => {}
        }
    }
}

/// Child exploration order in [`pbs_with`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ChildOrder {
    /// Push `(i before j)` then `(j before i)`, so the latter is popped first.
    #[default]
    LaterFirst,
    EarlierFirst,
}

#[derive(Debug, Clone)]
struct PriorityNode {
    /// Pairs `(hi, lo)`: robot `hi` has priority over robot `lo`.
    prec: BTreeSet<(usize, usize)>,
    trajectories: Vec<Trajectory>,
}

/// Robots with transitive priority over `j`.
fn higher(prec: &BTreeSet<(usize, usize)>, j: usize) -> BTreeSet<usize> {
    let mut out = BTreeSet::new();
    let mut stack = vec![j];
    while let Some(v) = stack.pop() {
        for &(h, l) in prec {
            if l == v && out.insert(h) {
                stack.push(h);
            }
        }
    }
    out
}

/// Robots with transitive lower priority than `i`.
fn lower(prec: &BTreeSet<(usize, usize)>, i: usize) -> BTreeSet<usize> {
    let mut out = BTreeSet::new();
    let mut stack = vec![i];
    while let Some(v) = stack.pop() {
        for &(h, l) in prec {
            if h == v && out.insert(l) {
                stack.push(l);
            }
        }
    }
    out
}

/// Kahn's algorithm restricted to `set`, smallest index first.
fn topo_sort(prec: &BTreeSet<(usize, usize)>, set: &BTreeSet<usize>) -> Vec<usize> {
    let mut indeg: BTreeMap<usize, usize> = set.iter().map(|&v| (v, 0)).collect();
    for &(h, l) in prec {
        if set.contains(&h) && set.contains(&l) {
            *indeg.get_mut(&l).unwrap() += 1;
        }
    }
    let mut ready: BTreeSet<usize> = indeg.iter().filter(|(_, &d)| d == 0).map(|(&v, _)| v).collect();
    let mut out = Vec::with_capacity(set.len());
    while let Some(v) = ready.pop_first() {
        out.push(v);
        for &(h, l) in prec {
            if h == v && set.contains(&l) {
                let d = indeg.get_mut(&l).unwrap();
                *d -= 1;
                if *d == 0 {
                    ready.insert(l);
                }
            }
        }
    }
    out
}

fn fingerprint(t: &Trajectory) -> u64 {
    let mut h = DefaultHasher::new();
    for s in &t.states {
        s.t.to_bits().hash(&mut h);
        for p in &s.p {
            p.to_bits().hash(&mut h);
        }
    }
    h.finish()
}

type CacheKey = (usize, Vec<(usize, u64)>);

struct Pbs<'a> {
    inst: &'a MrmpInstance,
    until: Instant,
    cache: BTreeMap<CacheKey, Option<Trajectory>>,
    stats: SearchStats,
}

impl Pbs<'_> {
    /// Plans robot `j` against the reserved trajectories of `above`.
    fn plan(&mut self, j: usize, above: &BTreeSet<usize>, trajs: &[Trajectory]) -> Result<Option<Trajectory>> {
        let key: CacheKey = (j, above.iter().map(|&k| (k, fingerprint(&trajs[k]))).collect());
        if let Some(hit) = self.cache.get(&key) {
            return Ok(hit.clone());
        }
        let inst = self.inst;
        let mut g = inst.graph.clone();
        for &k in above {
            // robots of equal rank may overlap each other; coverage is moot here
            reserve_in_place_unchecked(&mut g, &Reservation::new(trajs[k].clone(), inst.safe_radius)?)?;
        }
        self.stats.single_robot_solves += 1;
        self.stats.graph_edges_final = g.num_edges();
        let rb = &inst.robots[j];
        let out = solve_stgcs(&g, &rb.start, &rb.goal, &inst.vb, &inst.solve_params)?
            .plan()
            .map(|p| p.trajectory);
        self.cache.insert(key, out.clone());
        Ok(out)
    }

    fn collides(&self, a: &Trajectory, b: &Trajectory) -> Option<f64> {
        collide(a, b, self.inst.safe_radius, self.inst.t_max())
    }

    /// Replans `i` and every robot below it that now collides with a
    /// higher-priority robot. `Ok(false)` when some replan fails.
    fn update_node(&mut self, node: &mut PriorityNode, i: usize) -> Result<bool> {
        let mut group = lower(&node.prec, i);
        group.insert(i);
        for j in topo_sort(&node.prec, &group) {
            if Instant::now() >= self.until {
                return Ok(false);
            }
            let above = higher(&node.prec, j);
            let hit = above
                .iter()
                .any(|&k| self.collides(&node.trajectories[k], &node.trajectories[j]).is_some());
            if !hit {
                continue;
            }
            match self.plan(j, &above, &node.trajectories)? {
                Some(t) => node.trajectories[j] = t,
                None => return Ok(false),
            }
        }
        Ok(true)
    }

    /// Earliest collision, ties broken by the smallest robot pair.
    fn first_collision(&self, trajs: &[Trajectory]) -> Option<(f64, usize, usize)> {
        let mut best: Option<(f64, usize, usize)> = None;
        for i in 0..trajs.len() {
            for j in i + 1..trajs.len() {
                if let Some(t) = self.collides(&trajs[i], &trajs[j]) {
                    if best.is_none_or(|b| t < b.0) {
                        best = Some((t, i, j));
                    }
                }
            }
        }
        best
    }
}

/// Priority-based search with the default child order.
pub fn pbs(inst: &MrmpInstance) -> Result<MrmpOutcome> {
    pbs_with(inst, ChildOrder::default())
}

pub fn pbs_with(inst: &MrmpInstance, order: ChildOrder) -> Result<MrmpOutcome> {
    let start = Instant::now();
    let mut s = Pbs {
        inst,
        until: deadline(inst, start),
        cache: BTreeMap::new(),
        stats: SearchStats::default(),
    };
    let n = inst.num_robots();
    let none = BTreeSet::new();
    let mut root_trajs = Vec::with_capacity(n);
    for i in 0..n {
        match s.plan(i, &none, &[])? {
            Some(t) => root_trajs.push(t),
            None => {
                let rb = &inst.robots[i];
                let reason = match solve_stgcs(&inst.graph, &rb.start, &rb.goal, &inst.vb, &inst.solve_params)? {
                    SolveOutcome::Failed(r) => r,
                    SolveOutcome::Solved(_) => FailureReason::NoFeasiblePath,
                };
                return Ok(MrmpOutcome::failed(MrmpFailure::Robot { robot: i, reason }, s.stats));
            }
        }
    }
    if n > 0 && s.stats.graph_edges_final == 0 {
        s.stats.graph_edges_final = inst.graph.num_edges();
    }
    let mut stack = vec![PriorityNode {
        prec: BTreeSet::new(),
        trajectories: root_trajs,
    }];
    while let Some(node) = stack.pop() {
        if Instant::now() >= s.until {
            return Ok(MrmpOutcome::failed(MrmpFailure::Timeout, s.stats));
        }
        let Some((t, i, j)) = s.first_collision(&node.trajectories) else {
            let stats = s.stats;
            return Ok(MrmpOutcome::solved(node.trajectories, Method::Pbs, inst.solve_params.rng_seed, start, stats));
        };
        s.stats.nodes_expanded += 1;
        log::debug!("pbs: expanding node with {} priorities; robots {i} and {j} collide at {t}", node.prec.len());
        let pairs = match order {
            ChildOrder::LaterFirst => [(i, j), (j, i)],
            ChildOrder::EarlierFirst => [(j, i), (i, j)],
        };
        for (hi, lo) in pairs {
            // adding hi before lo must not close a cycle
            if hi == lo || higher(&node.prec, hi).contains(&lo) {
                continue;
            }
            let mut child = node.clone();
            child.prec.insert((hi, lo));
            if s.update_node(&mut child, lo)? {
                stack.push(child);
            }
        }
    }
    let failure = if Instant::now() >= s.until {
        MrmpFailure::Timeout
    } else {
        MrmpFailure::Exhausted
    };
    Ok(MrmpOutcome::failed(failure, s.stats))
}

/// Runs one of the three methods (SP uses index order).
pub fn run_method(inst: &MrmpInstance, method: Method) -> Result<MrmpOutcome> {
    match method {
        Method::Sp => sp(inst, &(0..inst.num_robots()).collect::<Vec<_>>()),
        Method::Rp => rp(inst),
        Method::Pbs => pbs(inst),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    Collision,
    SampledCollision,
    ObstacleCollision,
    Containment,
    Velocity,
    Boundary,
    TimeOrder,
    Shape,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub robots: Vec<usize>,
    pub time: Option<f64>,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, kind: ViolationKind, robots: Vec<usize>, time: Option<f64>, detail: String) {
        self.violations.push(Violation {
            kind,
            robots,
            time,
            detail,
        });
    }
}

/// Smallest max-norm separation on a `dt` grid over `[0, t_max]` and the
/// first sample below `thr`.
pub fn sampled_separation(a: &Trajectory, b: &Trajectory, t_max: f64, dt: f64, thr: f64) -> (f64, Option<f64>) {
    let steps = (t_max / dt).ceil() as usize;
    let mut min_sep = f64::INFINITY;
    let mut first = None;
    for k in 0..=steps {
        let t = (k as f64 * dt).min(t_max);
        let sep = linf(&a.position_at(t), &b.position_at(t));
        if sep < thr && first.is_none() {
            first = Some(t);
        }
        min_sep = min_sep.min(sep);
    }
    (min_sep, first)
}

/// Independent checks of a multi-robot solution against its instance.
pub fn validate(trajectories: &[Trajectory], inst: &MrmpInstance) -> ValidationReport {
    let mut rep = ValidationReport::default();
    let n = inst.num_robots();
    let r = inst.safe_radius;
    let t_max = inst.t_max();
    let d = inst.graph.dim();
    if trajectories.len() != n {
        rep.push(
            ViolationKind::Shape,
            vec![],
            None,
            format!("{} trajectories for {n} robots", trajectories.len()),
        );
        return rep;
    }
    let mut well_formed = vec![true; n];
    for (i, tr) in trajectories.iter().enumerate() {
        if tr.states.is_empty() || tr.states.iter().any(|s| s.dim() != d) {
            rep.push(ViolationKind::Shape, vec![i], None, "empty trajectory or wrong dimension".into());
            well_formed[i] = false;
            continue;
        }
        for w in tr.states.windows(2) {
            if !(w[1].t > w[0].t) {
                rep.push(ViolationKind::TimeOrder, vec![i], Some(w[1].t), "time stamps not strictly increasing".into());
            }
        }
        if tr.first().t < -1e-9 || tr.arrival_time() > t_max + 1e-9 {
            rep.push(ViolationKind::TimeOrder, vec![i], None, "trajectory leaves [0, t_max]".into());
        }
        let rb = &inst.robots[i];
        if linf(&tr.first().p, &rb.start.p) > 1e-9 || (tr.first().t - rb.start.t).abs() > 1e-9 {
            rep.push(ViolationKind::Boundary, vec![i], Some(tr.first().t), "does not begin at the start state".into());
        }
        if linf(&tr.last().p, &rb.goal) > 1e-9 {
            rep.push(ViolationKind::Boundary, vec![i], Some(tr.last().t), "does not end at the goal".into());
        }
        for seg in tr.segments() {
            if let Some(v) = seg.velocity() {
                for k in 0..d {
                    let slack = 1e-9 * (1.0 + v[k].abs());
                    if v[k] > inst.vb.v_max[k] + slack || v[k] < inst.vb.v_min[k] - slack {
                        rep.push(
                            ViolationKind::Velocity,
                            vec![i],
                            Some(seg.x.t),
                            format!("velocity {} along axis {k} outside bounds", v[k]),
                        );
                    }
                }
            }
            let (a, b) = (&seg.x.p, &seg.y.p);
            let inside = inst.spatial_sets.iter().any(|s| {
                s.contains_tol(a, 1e-7).unwrap_or(false) && s.contains_tol(b, 1e-7).unwrap_or(false)
            });
            if !inside {
                rep.push(
                    ViolationKind::Containment,
                    vec![i],
                    Some(seg.x.t),
                    "segment not inside a single free-space set".into(),
                );
            }
        }
        for (k, ob) in inst.obstacles.iter().enumerate() {
            if let Some(t) = collide(tr, &ob.trajectory, ob.apothem, t_max) {
                rep.push(
                    ViolationKind::ObstacleCollision,
                    vec![i],
                    Some(t),
                    format!("closer than {} to dynamic obstacle {k}", ob.apothem),
                );
            }
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            if !(well_formed[i] && well_formed[j]) {
                continue;
            }
            let (a, b) = (&trajectories[i], &trajectories[j]);
            if let Some(t) = collide(a, b, r, t_max) {
                rep.push(ViolationKind::Collision, vec![i, j], Some(t), format!("closer than {r}"));
            }
            let (min_sep, first) = sampled_separation(a, b, t_max, VALIDATE_DT, r - 1e-6);
            if let Some(t) = first {
                rep.push(
                    ViolationKind::SampledCollision,
                    vec![i, j],
                    Some(t),
                    format!("sampled separation {min_sep} below {r}"),
                );
            }
        }
    }
    rep
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gcsprog::SolveMode;
    use proptest::prelude::*;

    fn st(x: f64, y: f64, t: f64) -> State {
        State::new(vec![x, y], t)
    }

    fn tr(pts: &[(f64, f64, f64)]) -> Trajectory {
        Trajectory::new(pts.iter().map(|&(x, y, t)| st(x, y, t)).collect())
    }

    #[test]
    fn collide_examples() {
        let a = tr(&[(0.0, 0.0, 0.0), (1.0, 0.0, 1.0)]);
        let b = tr(&[(1.0, 0.0, 0.0), (0.0, 0.0, 1.0)]);
        let t = collide(&a, &b, 0.1, 1.0).unwrap();
        assert!((t - 0.45).abs() < 1e-9);
        assert_eq!(collide(&b, &a, 0.1, 1.0), Some(t));

        let lane = tr(&[(0.0, 0.0, 0.0), (5.0, 0.0, 5.0)]);
        let other = tr(&[(0.0, 1.0, 0.0), (5.0, 1.0, 5.0)]);
        assert_eq!(collide(&lane, &other, 0.5, 10.0), None);
        assert_eq!(collide(&lane, &lane, 0.5, 10.0), Some(0.0));
    }

    #[test]
    fn collide_uses_stay_extensions() {
        // b arrives at a's parked position after a has stopped
        let a = tr(&[(0.0, 0.0, 0.0), (2.0, 0.0, 2.0)]);
        let b = tr(&[(5.0, 0.0, 0.0), (5.0, 0.0, 4.0), (2.2, 0.0, 6.8)]);
        let t = collide(&a, &b, 0.5, 10.0).unwrap();
        assert!((t - 6.5).abs() < 1e-8, "{t}");
        // a late start holds the first position before departure
        let c = tr(&[(2.0, 0.2, 8.0), (9.0, 0.2, 15.0)]);
        let t = collide(&a, &c, 0.5, 20.0).unwrap();
        assert!((t - 1.5).abs() < 1e-8);
    }

    fn rand_traj(rng: &mut ChaCha8Rng) -> Trajectory {
        use rand::Rng;
        let k = rng.gen_range(2..5);
        let mut t = rng.gen_range(0.0..2.0);
        let mut states = Vec::new();
        for _ in 0..k {
            states.push(st(rng.gen_range(0.0..4.0), rng.gen_range(0.0..4.0), t));
            t += rng.gen_range(0.2..3.0);
        }
        Trajectory::new(states)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn collide_is_symmetric_and_matches_sampling(seed in 0u64..10_000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (a, b) = (rand_traj(&mut rng), rand_traj(&mut rng));
            let r = 0.7;
            let t_max = 12.0;
            let c = collide(&a, &b, r, t_max);
            prop_assert_eq!(c, collide(&b, &a, r, t_max));
            let (_, first) = sampled_separation(&a, &b, t_max, 1e-3, r - COLLIDE_SLACK);
            if let Some(ts) = first {
                let tc = c.expect("sampling found a collision the exact check missed");
                prop_assert!(tc <= ts + 1e-9 && ts - tc <= 1e-3 + 1e-9, "exact {} sampled {}", tc, ts);
            }
        }
    }

    fn box_instance(robots: Vec<Robot>, r: f64) -> MrmpInstance {
        let map = vec![HPoly::from_box(&[0.0, 0.0], &[10.0, 4.0]).unwrap()];
        MrmpInstance::new(
            map,
            50.0,
            vec![],
            robots,
            VelocityBounds::symmetric(2, 1.0).unwrap(),
            r,
            60.0,
            SolveParams::default(),
        )
        .unwrap()
    }

    fn robot(x: f64, y: f64, gx: f64, gy: f64) -> Robot {
        Robot {
            start: st(x, y, 0.0),
            goal: vec![gx, gy],
        }
    }

    #[test]
    fn single_robot_sp_matches_solve() {
        let inst = box_instance(vec![robot(1.0, 1.0, 7.0, 3.0)], 1.0);
        let out = sp(&inst, &[0]).unwrap();
        let sol = out.solution.unwrap();
        assert!((sol.metrics.soc - 6.0).abs() < 1e-6);
        assert_eq!(sol.metrics.soc, sol.metrics.makespan);
    }

    #[test]
    fn head_on_pair() {
        let inst = box_instance(vec![robot(1.0, 2.0, 9.0, 2.0), robot(9.0, 2.0, 1.0, 2.0)], 1.0);
        for m in Method::ALL {
            let out = run_method(&inst, m).unwrap();
            let sol = out.solution.unwrap_or_else(|| panic!("{m} failed: {:?}", out.failure));
            let rep = validate(&sol.trajectories, &inst);
            assert!(rep.is_valid(), "{m}: {:?}", rep.violations);
            for c in costs(&sol.trajectories) {
                assert!(c >= 8.0 - 1e-6);
            }
            if m == Method::Pbs {
                assert!(out.stats.nodes_expanded <= 2);
            }
        }
    }

    #[test]
    fn far_apart_robots_keep_analytic_costs() {
        let inst = box_instance(vec![robot(1.0, 0.5, 9.0, 0.5), robot(1.0, 3.5, 9.0, 3.5)], 1.0);
        let out = pbs(&inst).unwrap();
        assert_eq!(out.stats.nodes_expanded, 0);
        let sol = out.solution.unwrap();
        assert!((sol.metrics.soc - 16.0).abs() < 1e-6);
        let out = sp(&inst, &[1, 0]).unwrap();
        assert!((out.solution.unwrap().metrics.soc - 16.0).abs() < 1e-6);
    }

    #[test]
    fn blocked_goal_fails_everywhere() {
        // robot 1 sits on robot 0's goal for ever
        let inst = box_instance(vec![robot(1.0, 2.0, 5.0, 2.0), robot(5.0, 2.0, 5.0, 2.0)], 1.0);
        let out = rp(&inst).unwrap();
        assert!(out.solution.is_none());
        assert_eq!(out.failure, Some(MrmpFailure::Exhausted));
        assert_eq!(out.stats.permutations, 2);
        let out = pbs(&inst).unwrap();
        assert!(out.solution.is_none());
    }

    #[test]
    fn rp_is_deterministic() {
        let inst = box_instance(vec![robot(1.0, 2.0, 9.0, 2.0), robot(9.0, 2.0, 1.0, 2.0)], 1.0);
        let a = rp(&inst).unwrap().solution.unwrap();
        let b = rp(&inst).unwrap().solution.unwrap();
        assert_eq!(a.trajectories, b.trajectories);
    }

    #[test]
    fn validate_flags_problems() {
        let map = vec![HPoly::from_box(&[-1.0, -1.0], &[2.0, 1.0]).unwrap()];
        let inst = MrmpInstance::new(
            map,
            1.0,
            vec![],
            vec![robot(0.0, 0.0, 1.0, 0.0), robot(1.0, 0.0, 0.0, 0.0)],
            VelocityBounds::symmetric(2, 1.0).unwrap(),
            0.1,
            10.0,
            SolveParams { mode: SolveMode::Exhaustive, ..Default::default() },
        )
        .unwrap();
        let a = tr(&[(0.0, 0.0, 0.0), (1.0, 0.0, 1.0)]);
        let b = tr(&[(1.0, 0.0, 0.0), (0.0, 0.0, 1.0)]);
        let rep = validate(&[a.clone(), b], &inst);
        let col = rep.violations.iter().find(|v| v.kind == ViolationKind::Collision).unwrap();
        assert!((col.time.unwrap() - 0.45).abs() < 1e-9);
        assert!(rep.violations.iter().any(|v| v.kind == ViolationKind::SampledCollision));

        let fast = tr(&[(1.0, 0.0, 0.0), (0.0, 0.0, 0.5)]);
        let far = tr(&[(1.0, 0.0, 0.0), (1.0, 0.5, 0.5), (0.5, 0.5, 1.0)]);
        let rep = validate(&[a.clone(), fast], &inst);
        assert!(rep.violations.iter().any(|v| v.kind == ViolationKind::Velocity));
        let rep = validate(&[a, far], &inst);
        assert!(rep.violations.iter().all(|v| v.kind != ViolationKind::Velocity));
    }

    #[test]
    fn metrics_examples() {
        assert_eq!(metrics(&[tr(&[(0.0, 0.0, 0.0), (1.0, 0.0, 2.0)])]), (2.0, 2.0));
        let two = [tr(&[(0.0, 0.0, 0.0), (1.0, 0.0, 2.0)]), tr(&[(0.0, 0.0, 0.0), (1.0, 0.0, 3.5)])];
        assert_eq!(metrics(&two), (5.5, 3.5));
        let inst = box_instance(vec![robot(1.0, 1.0, 1.0, 1.0), robot(5.0, 1.0, 5.0, 1.0)], 1.0);
        let sol = pbs(&inst).unwrap().solution.unwrap();
        assert!((sol.metrics.soc - 2e-3).abs() < 1e-9);
        assert!((sol.metrics.makespan - 1e-3).abs() < 1e-9);
    }

    #[test]
    fn topo_and_closure() {
        let prec: BTreeSet<(usize, usize)> = [(2, 0), (0, 1), (3, 1)].into_iter().collect();
        assert_eq!(higher(&prec, 1), [0, 2, 3].into_iter().collect());
        assert_eq!(lower(&prec, 2), [0, 1].into_iter().collect());
        let all: BTreeSet<usize> = (0..4).collect();
        assert_eq!(topo_sort(&prec, &all), vec![2, 0, 3, 1]);
    }

    #[test]
    fn solution_json_shape() {
        let sol = Solution {
            trajectories: vec![tr(&[(0.0, 0.0, 0.0), (1.0, 0.0, 2.0)])],
            metrics: Metrics { soc: 2.0, makespan: 2.0, runtime_s: 0.5 },
            method: Method::Pbs,
            seed: 3,
        };
        let v = serde_json::to_value(&sol).unwrap();
        assert_eq!(v["method"], "pbs");
        assert_eq!(v["seed"], 3);
        assert_eq!(v["metrics"]["soc"], 2.0);
        let back: Solution = serde_json::from_value(v).unwrap();
        assert_eq!(back, sol);
    }
}
