//! Randomized path rounding from fractional flows.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::stgraph::VertexId;

use super::relaxation::{FlowSolution, Node};

/// Arcs carrying less flow than this are ignored by the walks.
pub const MIN_FLOW: f64 = 1e-6;

fn successors(flows: &FlowSolution) -> BTreeMap<Node, Vec<(Node, f64)>> {
    let mut out: BTreeMap<Node, Vec<(Node, f64)>> = BTreeMap::new();
    for (&(u, v), &f) in &flows.flow {
        if f >= MIN_FLOW {
            out.entry(u).or_default().push((v, f));
        }
    }
    out
}

fn strip(walk: &[Node]) -> Vec<VertexId> {
    walk.iter()
        .filter_map(|n| match n {
            Node::Vertex(v) => Some(*v),
            _ => None,
        })
        .collect()
}

/// Follows the largest-flow arc to an unvisited node at each step.
fn greedy_path(succ: &BTreeMap<Node, Vec<(Node, f64)>>) -> Option<Vec<Node>> {
    let mut walk = vec![Node::Source];
    let mut seen = BTreeSet::from([Node::Source]);
    let mut cur = Node::Source;
    while cur != Node::Sink {
        let next = succ
            .get(&cur)?
            .iter()
            .filter(|(v, _)| !seen.contains(v))
            .max_by(|a, b| a.1.total_cmp(&b.1).then(b.0.cmp(&a.0)))?
            .0;
        seen.insert(next);
        walk.push(next);
        cur = next;
    }
    Some(walk)
}

/// One flow-proportional walk with loop erasure. Gives up after
/// `max_steps` moves or at a dead end.
fn random_walk(
    succ: &BTreeMap<Node, Vec<(Node, f64)>>,
    rng: &mut ChaCha8Rng,
    max_steps: usize,
) -> Option<Vec<Node>> {
    let mut walk = vec![Node::Source];
    for _ in 0..max_steps {
        let cur = *walk.last().unwrap();
        if cur == Node::Sink {
            return Some(walk);
        }
        let options = succ.get(&cur)?;
        let total: f64 = options.iter().map(|(_, f)| f).sum();
        let mut pick = rng.gen::<f64>() * total;
        let mut next = options.last().unwrap().0;
        for &(v, f) in options {
            if pick < f {
                next = v;
                break;
            }
            pick -= f;
        }
        match walk.iter().position(|&n| n == next) {
            Some(i) => walk.truncate(i + 1),
            None => walk.push(next),
        }
    }
    (*walk.last().unwrap() == Node::Sink).then_some(walk)
}

/// Samples up to `budget` distinct simple paths (greedy path first, then
/// seeded random walks). Paths exclude the virtual source and sink.
pub fn round_paths(flows: &FlowSolution, budget: usize, rng_seed: u64) -> Vec<Vec<VertexId>> {
    let succ = successors(flows);
    let budget = budget.max(1);
    let mut seen: BTreeSet<Vec<VertexId>> = BTreeSet::new();
    let mut out = Vec::new();
    let mut push = |walk: Vec<Node>, out: &mut Vec<Vec<VertexId>>| {
        let p = strip(&walk);
        if !p.is_empty() && seen.insert(p.clone()) {
            out.push(p);
        }
    };
    if let Some(w) = greedy_path(&succ) {
        push(w, &mut out);
    }
    let max_steps = 20 * (succ.len() + 2);
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    for _ in 1..budget {
        if let Some(w) = random_walk(&succ, &mut rng, max_steps) {
            push(w, &mut out);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flows(arcs: &[((Node, Node), f64)]) -> FlowSolution {
        FlowSolution {
            flow: arcs.iter().copied().collect(),
            lower_bound: 0.0,
        }
    }

    use Node::{Sink, Source, Vertex as V};

    #[test]
    fn integral_flow_gives_support() {
        let f = flows(&[
            ((Source, V(0)), 1.0),
            ((V(0), V(1)), 1.0),
            ((V(1), V(0)), 0.0),
            ((V(1), Sink), 1.0),
        ]);
        assert_eq!(round_paths(&f, 50, 1), vec![vec![0, 1]]);
    }

    fn split() -> FlowSolution {
        flows(&[
            ((Source, V(0)), 1.0),
            ((V(0), V(1)), 0.5),
            ((V(0), V(2)), 0.5),
            ((V(1), V(3)), 0.5),
            ((V(2), V(3)), 0.5),
            ((V(3), Sink), 1.0),
        ])
    }

    #[test]
    fn split_flow_finds_both_corridors() {
        let paths = round_paths(&split(), 16, 42);
        assert_eq!(paths.len(), 2);
        assert!(paths.contains(&vec![0, 1, 3]) && paths.contains(&vec![0, 2, 3]));
    }

    #[test]
    fn budget_one_is_greedy_only() {
        let paths = round_paths(&split(), 1, 42);
        // ties broken toward the smaller vertex id
        assert_eq!(paths, vec![vec![0, 1, 3]]);
    }

    #[test]
    fn loops_are_erased() {
        let f = flows(&[
            ((Source, V(0)), 1.0),
            ((V(0), V(1)), 0.9),
            ((V(1), V(0)), 0.4),
            ((V(1), V(2)), 0.5),
            ((V(2), Sink), 1.0),
            ((V(0), V(2)), 0.5),
        ]);
        for seed in 0..20 {
            for p in round_paths(&f, 30, seed) {
                let set: BTreeSet<_> = p.iter().collect();
                assert_eq!(set.len(), p.len(), "path {p:?} repeats a vertex");
            }
        }
    }

    #[test]
    fn deterministic_under_seed() {
        assert_eq!(round_paths(&split(), 8, 9), round_paths(&split(), 8, 9));
    }
}
