//! Seeded random instances on catalog maps.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::ecd::reserve_in_place_unchecked;
use crate::error::{Error, Result};
use crate::geom::{BBox, State};
use crate::mrmp::Robot;
use crate::stgraph::SpaceTimeGraph;

use super::maps::{map_entry, MapCatalogEntry};
use super::InstanceFile;

/// Rejected samples allowed per instance before giving up.
pub const MAX_REJECTIONS: usize = 100_000;

fn linf(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max)
}

struct Sampler<'a> {
    entry: &'a MapCatalogEntry,
    hull: BBox,
    rejections: usize,
}

impl Sampler<'_> {
    /// Uniform point of the free space, rejected until `accept` holds.
    fn draw(&mut self, rng: &mut ChaCha8Rng, mut accept: impl FnMut(&[f64]) -> Result<bool>) -> Result<Vec<f64>> {
        loop {
            let p: Vec<f64> = (0..2).map(|k| rng.gen_range(self.hull.lo[k]..=self.hull.hi[k])).collect();
            let inside = self.entry.sets.iter().any(|s| s.contains(&p).unwrap_or(false));
            if inside && accept(&p)? {
                return Ok(p);
            }
            self.rejections += 1;
            if self.rejections >= MAX_REJECTIONS {
                return Err(Error::Crowded(format!(
                    "map '{}' is too crowded: {MAX_REJECTIONS} rejected samples",
                    self.entry.name
                )));
            }
        }
    }
}

/// `count` instances with `n` robots each. Robots are drawn one after the
/// other from a stream keyed by `(seed, instance_id)`, so the instance with
/// `n + 1` robots extends the one with `n`.
pub fn gen_instances(map_name: &str, n: usize, count: usize, seed: u64) -> Result<Vec<InstanceFile>> {
    let entry = map_entry(map_name)?;
    let mut graph = SpaceTimeGraph::build(&entry.sets, entry.t_max)?;
    for ob in &entry.obstacles {
        reserve_in_place_unchecked(&mut graph, ob)?;
    }
    let boxes: Vec<BBox> = entry.sets.iter().map(|s| s.bounding_box()).collect::<Result<_>>()?;
    let hull = BBox {
        lo: (0..2).map(|k| boxes.iter().map(|b| b.lo[k]).fold(f64::INFINITY, f64::min)).collect(),
        hi: (0..2).map(|k| boxes.iter().map(|b| b.hi[k]).fold(f64::NEG_INFINITY, f64::max)).collect(),
    };
    let sep = 2.0 * entry.safe_radius;
    let mut out = Vec::with_capacity(count);
    for id in 0..count {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(id as u64);
        let mut s = Sampler {
            entry: &entry,
            hull: hull.clone(),
            rejections: 0,
        };
        let mut robots: Vec<Robot> = Vec::with_capacity(n);
        for _ in 0..n {
            let start = s.draw(&mut rng, |p| {
                Ok(robots.iter().all(|r| linf(p, &r.start.p) >= sep)
                    && !graph.start_vertices(&State::new(p.to_vec(), 0.0))?.is_empty())
            })?;
            let goal = s.draw(&mut rng, |p| {
                Ok(robots.iter().all(|r| linf(p, &r.goal) >= sep) && !graph.goal_vertices(p)?.is_empty())
            })?;
            robots.push(Robot {
                start: State::new(start, 0.0),
                goal,
            });
        }
        out.push(entry.instance(robots, seed, Some(id)));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_nested() {
        let a = gen_instances("empty", 3, 4, 7).unwrap();
        let b = gen_instances("empty", 3, 4, 7).unwrap();
        assert_eq!(
            a.iter().map(|f| f.to_json().unwrap()).collect::<Vec<_>>(),
            b.iter().map(|f| f.to_json().unwrap()).collect::<Vec<_>>()
        );
        let c = gen_instances("empty", 4, 4, 7).unwrap();
        for (small, big) in a.iter().zip(&c) {
            assert_eq!(small.robots[..], big.robots[..3]);
        }
        let d = gen_instances("empty", 3, 4, 8).unwrap();
        assert_ne!(a[0].robots, d[0].robots);
    }

    #[test]
    fn separation_and_freedom() {
        for map in ["empty", "simple_like", "complex_like"] {
            for f in gen_instances(map, 4, 3, 1).unwrap() {
                let sep = 2.0 * f.safe_radius;
                for i in 0..4 {
                    for j in i + 1..4 {
                        assert!(linf(&f.robots[i].start.p, &f.robots[j].start.p) >= sep);
                        assert!(linf(&f.robots[i].goal, &f.robots[j].goal) >= sep);
                    }
                }
                f.to_instance(Default::default(), 10.0).unwrap();
            }
        }
    }

    #[test]
    fn distinct_single_robot_instances() {
        let fs = gen_instances("empty", 1, 12, 0).unwrap();
        for i in 0..12 {
            for j in i + 1..12 {
                assert_ne!(fs[i].robots, fs[j].robots);
            }
        }
    }

    #[test]
    fn crowded_map_errors() {
        assert!(matches!(gen_instances("corridor", 50, 1, 0), Err(Error::Crowded(_))));
    }
}
