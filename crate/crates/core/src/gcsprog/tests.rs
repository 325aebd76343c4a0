use std::collections::VecDeque;

use super::*;
use crate::geom::HPoly;

fn rect(x0: f64, y0: f64, x1: f64, y1: f64) -> HPoly {
    HPoly::from_box(&[x0, y0], &[x1, y1]).unwrap()
}

fn st(x: f64, y: f64, t: f64) -> State {
    State::new(vec![x, y], t)
}

/// Time-stepped lattice search over the union of static sets: each step of
/// `dt` moves by at most `v * dt` per axis (8-connected moves plus waiting).
/// Returns the arrival time at `goal`, which must lie on the lattice.
fn grid_oracle(sets: &[HPoly], start: [f64; 2], goal: [f64; 2], v: f64, dt: f64) -> Option<f64> {
    let h = v * dt;
    let bb = sets
        .iter()
        .map(|s| s.bounding_box().unwrap())
        .fold(([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]), |(lo, hi), b| {
            (
                [lo[0].min(b.lo[0]), lo[1].min(b.lo[1])],
                [hi[0].max(b.hi[0]), hi[1].max(b.hi[1])],
            )
        });
    let nx = ((bb.1[0] - bb.0[0]) / h).round() as i64 + 1;
    let ny = ((bb.1[1] - bb.0[1]) / h).round() as i64 + 1;
    let coord = |i: i64, j: i64| [bb.0[0] + i as f64 * h, bb.0[1] + j as f64 * h];
    let free = |i: i64, j: i64| {
        i >= 0 && j >= 0 && i < nx && j < ny && sets.iter().any(|s| s.contains_tol(&coord(i, j), 1e-9).unwrap())
    };
    // consecutive lattice points must share a set so the step stays free
    let step_ok = |a: [f64; 2], b: [f64; 2]| {
        sets.iter().any(|s| s.contains_tol(&a, 1e-9).unwrap() && s.contains_tol(&b, 1e-9).unwrap())
    };
    let idx = |p: [f64; 2]| (((p[0] - bb.0[0]) / h).round() as i64, ((p[1] - bb.0[1]) / h).round() as i64);
    let (si, sj) = idx(start);
    let (gi, gj) = idx(goal);
    let mut dist = vec![u32::MAX; (nx * ny) as usize];
    let mut q = VecDeque::new();
    dist[(si * ny + sj) as usize] = 0;
    q.push_back((si, sj));
    while let Some((i, j)) = q.pop_front() {
        let dcur = dist[(i * ny + j) as usize];
        if (i, j) == (gi, gj) {
            return Some(dcur as f64 * dt);
        }
        for di in -1..=1 {
            for dj in -1..=1 {
                let (a, b) = (i + di, j + dj);
                if free(a, b) && dist[(a * ny + b) as usize] == u32::MAX && step_ok(coord(i, j), coord(a, b)) {
                    dist[(a * ny + b) as usize] = dcur + 1;
                    q.push_back((a, b));
                }
            }
        }
    }
    None
}

fn vb(v: f64) -> VelocityBounds {
    VelocityBounds::symmetric(2, v).unwrap()
}

#[test]
fn restriction_single_box() {
    let g = SpaceTimeGraph::build(&[rect(0.0, 0.0, 1.0, 1.0)], 50.0).unwrap();
    let (traj, cost) = restriction(&g, &[0], &st(0.0, 0.0, 0.0), &[1.0, 1.0], &vb(0.5), 1e-3)
        .unwrap()
        .unwrap();
    assert!((cost - 2.0).abs() < 1e-9);
    assert_eq!(traj.last().p, vec![1.0, 1.0]);
    assert!((traj.last().t - 2.0).abs() < 1e-9);
}

#[test]
fn restriction_zero_length_query_costs_eps() {
    let g = SpaceTimeGraph::build(&[rect(0.0, 0.0, 1.0, 1.0)], 50.0).unwrap();
    let (_, cost) = restriction(&g, &[0], &st(0.0, 0.0, 0.0), &[0.0, 0.0], &vb(0.5), 1e-3)
        .unwrap()
        .unwrap();
    assert!((cost - 1e-3).abs() < 1e-12);
}

fn l_shape() -> Vec<HPoly> {
    vec![rect(0.0, 0.0, 1.0, 3.0), rect(0.0, 2.0, 3.0, 3.0)]
}

#[test]
fn restriction_detour_matches_grid_oracle() {
    let sets = l_shape();
    let g = SpaceTimeGraph::build(&sets, 50.0).unwrap();
    let (_, cost) = restriction(&g, &[0, 1], &st(0.5, 0.5, 0.0), &[2.5, 2.5], &vb(1.0), 1e-3)
        .unwrap()
        .unwrap();
    let straight = vb(1.0).free_space_time(&[0.5, 0.5], &[2.5, 2.5]);
    assert!(cost >= straight - 1e-9);
    let oracle = grid_oracle(&sets, [0.5, 0.5], [2.5, 2.5], 1.0, 0.01).unwrap();
    assert!((cost - oracle).abs() <= 0.02, "restriction {cost} vs lattice {oracle}");
    // the wrong order of sets cannot reach the goal
    assert!(restriction(&g, &[1, 0], &st(0.5, 0.5, 0.0), &[2.5, 2.5], &vb(1.0), 1e-3)
        .unwrap()
        .is_none());
}

#[test]
fn restriction_is_time_translation_invariant() {
    let g = SpaceTimeGraph::build(&l_shape(), 50.0).unwrap();
    let (a, ca) = restriction(&g, &[0, 1], &st(0.5, 0.5, 0.0), &[2.5, 2.5], &vb(1.0), 1e-3)
        .unwrap()
        .unwrap();
    let (b, cb) = restriction(&g, &[0, 1], &st(0.5, 0.5, 7.25), &[2.5, 2.5], &vb(1.0), 1e-3)
        .unwrap()
        .unwrap();
    assert!((ca - cb).abs() < 1e-9);
    assert!((b.arrival_time() - a.arrival_time() - 7.25).abs() < 1e-9);
}

#[test]
fn relaxation_unique_path_is_tight() {
    let g = SpaceTimeGraph::build(&l_shape(), 50.0).unwrap();
    let x0 = st(0.5, 0.5, 0.0);
    let goal = [2.5, 2.5];
    let src = g.start_vertices(&x0).unwrap();
    let sinks = g.goal_vertices(&goal).unwrap();
    let f = relaxation(&g, &src, &sinks, &x0, &goal, &vb(1.0), 1e-3).unwrap().unwrap();
    let (_, cost) = restriction(&g, &[0, 1], &x0, &goal, &vb(1.0), 1e-3).unwrap().unwrap();
    assert!((f.lower_bound - cost).abs() < 1e-6, "{} vs {}", f.lower_bound, cost);
    for (&(u, v), &phi) in &f.flow {
        let on_path = matches!(
            (u, v),
            (Node::Source, Node::Vertex(0)) | (Node::Vertex(0), Node::Vertex(1)) | (Node::Vertex(1), Node::Sink)
        );
        assert!((phi - if on_path { 1.0 } else { 0.0 }).abs() < 1e-6, "{u:?}->{v:?}: {phi}");
    }
    assert_eq!(round_paths(&f, 20, 3), vec![vec![0, 1]]);
}

fn two_corridors() -> Vec<HPoly> {
    vec![
        rect(0.0, 0.0, 1.0, 3.0),
        rect(4.0, 0.0, 5.0, 3.0),
        rect(0.0, 0.0, 5.0, 1.0),
        rect(0.0, 2.0, 5.0, 3.0),
    ]
}

#[test]
fn relaxation_symmetric_corridors() {
    let g = SpaceTimeGraph::build(&two_corridors(), 50.0).unwrap();
    let x0 = st(0.5, 1.5, 0.0);
    let goal = [4.5, 1.5];
    let src = g.start_vertices(&x0).unwrap();
    let sinks = g.goal_vertices(&goal).unwrap();
    assert_eq!(src, vec![0]);
    let f = relaxation(&g, &src, &sinks, &x0, &goal, &vb(1.0), 1e-3).unwrap().unwrap();
    let (_, low) = restriction(&g, &[0, 2, 1], &x0, &goal, &vb(1.0), 1e-3).unwrap().unwrap();
    let (_, high) = restriction(&g, &[0, 3, 1], &x0, &goal, &vb(1.0), 1e-3).unwrap().unwrap();
    assert!((low - high).abs() < 1e-9);
    assert!((f.lower_bound - low).abs() < 1e-6);
}

#[test]
fn lower_bound_below_every_path() {
    let g = SpaceTimeGraph::build(&two_corridors(), 50.0).unwrap();
    let x0 = st(0.5, 2.5, 0.0);
    let goal = [4.5, 0.5];
    let src = g.start_vertices(&x0).unwrap();
    let sinks = g.goal_vertices(&goal).unwrap();
    let f = relaxation(&g, &src, &sinks, &x0, &goal, &vb(1.0), 1e-3).unwrap().unwrap();
    let paths = enumerate_paths(&g, &src, &sinks, 1000);
    assert!(!paths.is_empty());
    let best = paths
        .iter()
        .filter_map(|p| restriction(&g, p, &x0, &goal, &vb(1.0), 1e-3).unwrap())
        .map(|(_, c)| c)
        .fold(f64::INFINITY, f64::min);
    assert!(f.lower_bound <= best + 1e-6);
}

#[test]
fn solve_empty_map_is_analytic() {
    let g = SpaceTimeGraph::build(&[rect(0.0, 0.0, 10.0, 10.0)], 50.0).unwrap();
    for mode in [SolveMode::Heuristic, SolveMode::Exhaustive] {
        let params = SolveParams { mode, ..Default::default() };
        let plan = solve_stgcs(&g, &st(1.0, 2.0, 0.0), &[7.0, 3.0], &vb(0.5), &params)
            .unwrap()
            .plan()
            .unwrap();
        assert!((plan.cost - 12.0).abs() < 1e-6);
    }
}

#[test]
fn solve_failures() {
    let g = SpaceTimeGraph::build(&[rect(0.0, 0.0, 1.0, 1.0), rect(3.0, 0.0, 4.0, 1.0)], 50.0).unwrap();
    let p = SolveParams::default();
    let f = |x: f64, gx: f64| match solve_stgcs(&g, &st(x, 0.5, 0.0), &[gx, 0.5], &vb(1.0), &p).unwrap() {
        SolveOutcome::Failed(r) => Some(r),
        SolveOutcome::Solved(_) => None,
    };
    assert_eq!(f(2.0, 0.5), Some(FailureReason::NoStartVertex));
    assert_eq!(f(0.5, 2.0), Some(FailureReason::NoGoalVertex));
    assert_eq!(f(0.5, 3.5), Some(FailureReason::NoPath));
    assert_eq!(f(0.5, 0.7), None);
}

#[test]
fn solve_is_deterministic_and_valid() {
    let g = SpaceTimeGraph::build(&two_corridors(), 50.0).unwrap();
    let params = SolveParams { rng_seed: 17, ..Default::default() };
    let run = || {
        solve_stgcs(&g, &st(0.5, 2.5, 0.0), &[4.5, 0.5], &vb(1.0), &params)
            .unwrap()
            .plan()
            .unwrap()
    };
    let (a, b) = (run(), run());
    assert_eq!(a.trajectory, b.trajectory);
    assert!(a.lower_bound.unwrap() <= a.cost + 1e-6);
    let tr = &a.trajectory;
    assert!(tr.min_step() >= 1e-3 - 1e-9);
    assert_eq!(tr.first(), &st(0.5, 2.5, 0.0));
    assert_eq!(tr.last().p, vec![4.5, 0.5]);
    for seg in tr.segments() {
        let v = seg.velocity().unwrap();
        assert!(v.iter().all(|c| c.abs() <= 1.0 + 1e-9));
        let common = g.vertices().any(|(_, s)| {
            s.contains(&seg.x.to_point()).unwrap() && s.contains(&seg.y.to_point()).unwrap()
        });
        assert!(common);
    }
}

#[test]
fn default_budget_uses_natural_log() {
    assert_eq!(default_path_budget(0), 1);
    assert_eq!(default_path_budget(1), 1);
    assert_eq!(default_path_budget(10), 2303);
}

#[test]
fn path_bound_is_sound() {
    use crate::ecd::{reserve, Reservation};
    let g = SpaceTimeGraph::build(&two_corridors(), 20.0).unwrap();
    let ob = Trajectory::new(vec![st(0.5, 0.5, 0.0), st(4.5, 0.5, 4.0), st(4.5, 2.5, 6.0)]);
    let g = reserve(&g, &Reservation::new(ob, 0.4).unwrap()).unwrap();
    let x0 = st(0.5, 1.5, 0.0);
    let goal = [4.5, 1.5];
    let vb = vb(1.0);
    let src = g.start_vertices(&x0).unwrap();
    let sinks = g.goal_vertices(&goal).unwrap();
    let flows = relaxation(&g, &src, &sinks, &x0, &goal, &vb, DEFAULT_EPS).unwrap().unwrap();
    let mut paths = round_paths(&flows, 400, 3);
    paths.extend(enumerate_paths(&g, &src, &sinks, 200));
    assert!(paths.len() > 10);
    let (mut pruned, mut bounded) = (0, 0);
    for p in &paths {
        let exact = restriction(&g, p, &x0, &goal, &vb, DEFAULT_EPS).unwrap();
        match path_lower_bound(&g, p, &x0, &goal, &vb, DEFAULT_EPS) {
            None => {
                pruned += 1;
                assert!(exact.is_none(), "feasible path {p:?} was ruled out");
            }
            Some(lb) => {
                if let Some((_, cost)) = exact {
                    bounded += 1;
                    assert!(lb <= cost + 1e-9, "bound {lb} above cost {cost} on {p:?}");
                }
            }
        }
    }
    assert!(bounded > 0 && pruned > 0, "{bounded} bounded, {pruned} pruned");
}
