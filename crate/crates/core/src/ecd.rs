//! Exact convex decomposition: reserving a trajectory as a space-time
//! obstacle by splitting the graph vertices its tube touches.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{segment_tube, BBox, HPoly, Segment, State, Tube, TOL};
use crate::stgraph::{SpaceTimeGraph, VertexId};
use crate::trajectory::Trajectory;

/// A vertex set overlapping a tube by less than this is left alone.
pub const DEPTH_TOL: f64 = 1e-7;

/// Sets whose Chebyshev radius is at most this have no interior and are
/// dropped from decompositions.
const INTERIOR_TOL: f64 = TOL;

/// Rows beyond this count trigger redundant-row pruning on new children.
const PRUNE_ROWS: usize = 16;

/// A sub-segment of a trajectory lying inside one vertex set.
#[derive(Debug, Clone, PartialEq)]
pub struct VertexSegment {
    pub vertex_id: VertexId,
    pub seg: Segment,
}

/// A trajectory to be kept clear by `apothem` in the max-norm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reservation {
    pub trajectory: Trajectory,
    pub apothem: f64,
}

impl Reservation {
    pub fn new(trajectory: Trajectory, apothem: f64) -> Result<Self> {
        if !(apothem > 0.0) {
            return Err(Error::InvalidArgument(format!("apothem must be > 0, got {apothem}")));
        }
        if trajectory.states.is_empty() {
            return Err(Error::InvalidArgument("empty trajectory".into()));
        }
        Ok(Reservation { trajectory, apothem })
    }
}

/// Adds waits at the start position from time 0 and at the final position
/// until `t_max`, and drops repeated states.
pub fn canonicalize(traj: &Trajectory, t_max: f64) -> Trajectory {
    let mut states: Vec<State> = Vec::with_capacity(traj.states.len() + 2);
    let first = traj.first();
    if first.t > TOL {
        states.push(State::new(first.p.clone(), 0.0));
    }
    for s in &traj.states {
        match states.last() {
            Some(prev) if s.t <= prev.t + TOL => {}
            _ => states.push(s.clone()),
        }
    }
    let last = states.last().unwrap().clone();
    if last.t < t_max - TOL {
        states.push(State::new(last.p, t_max));
    }
    if states.len() == 1 {
        // a single state at t_max: the column is still [0, t_max]
        let p = states[0].p.clone();
        states = vec![State::new(p.clone(), 0.0), State::new(p, t_max)];
    }
    Trajectory::new(states)
}

/// Clips every segment of a canonical trajectory against every vertex set.
/// Fails when part of the trajectory lies in no set.
pub fn vertex_segment_sequence(g: &SpaceTimeGraph, traj: &Trajectory) -> Result<Vec<VertexSegment>> {
    let mut out = Vec::new();
    for seg in traj.segments() {
        let sbox = BBox::of_segment(&seg);
        let mut spans = Vec::new();
        for (id, set) in g.vertices() {
            if !g.bbox(id).unwrap().overlaps(&sbox, TOL) {
                continue;
            }
            if let Some(c) = set.clip_segment(&seg)? {
                if c.duration() > TOL {
                    spans.push((c.x.t, c.y.t));
                    out.push(VertexSegment { vertex_id: id, seg: c });
                }
            }
        }
        spans.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut reach = seg.x.t;
        for (lo, hi) in spans {
            if lo > reach + 1e-7 {
                return Err(Error::Coverage { t0: reach, t1: lo });
            }
            reach = reach.max(hi);
        }
        if reach < seg.y.t - 1e-7 {
            return Err(Error::Coverage { t0: reach, t1: seg.y.t });
        }
    }
    Ok(out)
}

fn has_interior(p: &HPoly) -> Result<bool> {
    Ok(p.chebyshev()?.0 > INTERIOR_TOL)
}

fn tidy(p: HPoly) -> Result<HPoly> {
    if p.num_rows() > PRUNE_ROWS {
        p.prune_redundant()
    } else {
        Ok(p)
    }
}

/// Splits `x` around the tube of `seg`: the part before the segment, the
/// part after it, and the middle band sliced by each side face in turn.
/// Children without interior are dropped; none meets the open tube.
pub fn decompose_one(x: &HPoly, seg: &Segment, r: f64) -> Result<Vec<HPoly>> {
    let tube = segment_tube(seg, r)?;
    let mut out = Vec::new();
    for band in [
        x.time_band(None, Some(seg.x.t))?,
        x.time_band(Some(seg.y.t), None)?,
    ] {
        if has_interior(&band)? {
            out.push(tidy(band)?);
        }
    }
    let mut rest = x.time_band(Some(seg.x.t), Some(seg.y.t))?;
    for face in tube.side_faces() {
        if !has_interior(&rest)? {
            break;
        }
        let piece = rest.with_halfspace(&face.outside)?;
        if has_interior(&piece)? {
            out.push(tidy(piece)?);
        }
        rest = rest.with_halfspace(&face.inside)?;
    }
    Ok(out)
}

struct SegTube {
    seg: Segment,
    tube: Tube,
    bbox: BBox,
}

fn tube_bbox(seg: &Segment, r: f64) -> BBox {
    let mut b = BBox::of_segment(seg);
    let d = seg.x.dim();
    for k in 0..d {
        b.lo[k] -= r;
        b.hi[k] += r;
    }
    b
}

fn meets_open(set: &HPoly, set_box: &BBox, st: &SegTube) -> Result<bool> {
    if !set_box.overlaps(&st.bbox, -DEPTH_TOL) {
        return Ok(false);
    }
    Ok(set.depth_in(st.tube.poly())?.is_some_and(|d| d > DEPTH_TOL))
}

/// Sub-segment of `seg` over `[t0, t1]`.
fn restrict(seg: &Segment, t0: f64, t1: f64) -> Segment {
    let dur = seg.duration();
    let at = |t: f64| {
        if t <= seg.x.t {
            seg.x.clone()
        } else if t >= seg.y.t {
            seg.y.clone()
        } else {
            let s = seg.lerp((t - seg.x.t) / dur);
            State::new(s.p, t)
        }
    };
    Segment::new(at(t0), at(t1))
}

/// Children replacing one vertex hit by the tubes `hits` (sorted by time).
fn split_vertex(set: &HPoly, set_box: &BBox, hits: &[&SegTube], r: f64) -> Result<Vec<HPoly>> {
    let d = set.dim() - 1;
    let (lo, hi) = (set_box.lo[d], set_box.hi[d]);
    let mut cuts = vec![lo];
    for h in hits {
        for t in [h.seg.x.t, h.seg.y.t] {
            if t > lo + TOL && t < hi - TOL {
                cuts.push(t);
            }
        }
    }
    cuts.push(hi);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup_by(|a, b| (*a - *b).abs() <= TOL);

    let mut out = Vec::new();
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        let slab = set.time_band((a > lo).then_some(a), (b < hi).then_some(b))?;
        if !has_interior(&slab)? {
            continue;
        }
        let mid = 0.5 * (a + b);
        let cover = hits.iter().find(|h| h.seg.x.t <= mid && mid <= h.seg.y.t);
        match cover {
            Some(h) if slab.depth_in(h.tube.poly())?.is_some_and(|dp| dp > DEPTH_TOL) => {
                out.extend(decompose_one(&slab, &restrict(&h.seg, a, b), r)?);
            }
            _ => out.push(tidy(slab)?),
        }
    }
    Ok(out)
}

/// Like [`reserve_in_place`] but without the coverage check. Use it when the
/// trajectory is known to lie in the map, even if it crosses space that an
/// earlier reservation already removed.
pub fn reserve_in_place_unchecked(g: &mut SpaceTimeGraph, res: &Reservation) -> Result<usize> {
    carve(g, res, false)
}

/// Reserves `res` in place: afterwards no vertex set meets the open tube
/// of the canonicalized trajectory. Returns the number of vertices split.
pub fn reserve_in_place(g: &mut SpaceTimeGraph, res: &Reservation) -> Result<usize> {
    carve(g, res, true)
}

fn carve(g: &mut SpaceTimeGraph, res: &Reservation, check_coverage: bool) -> Result<usize> {
    if !(res.apothem > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "apothem must be > 0, got {}",
            res.apothem
        )));
    }
    let traj = canonicalize(&res.trajectory, g.t_max());
    let tubes = traj
        .segments()
        .map(|seg| {
            Ok(SegTube {
                tube: segment_tube(&seg, res.apothem)?,
                bbox: tube_bbox(&seg, res.apothem),
                seg,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut affected = Vec::new();
    for (id, set) in g.vertices() {
        let bbox = g.bbox(id).unwrap();
        let mut hits = Vec::new();
        for (k, st) in tubes.iter().enumerate() {
            if meets_open(set, bbox, st)? {
                hits.push(k);
            }
        }
        if !hits.is_empty() {
            affected.push((id, hits));
        }
    }
    if affected.is_empty() {
        // already clear (for instance reserved before): nothing to split
        return Ok(0);
    }
    if check_coverage {
        vertex_segment_sequence(g, &traj)?;
    }

    let split = affected.len();
    for (id, hits) in affected {
        let set = g.set(id).unwrap().clone();
        let bbox = g.bbox(id).unwrap().clone();
        let hits: Vec<&SegTube> = hits.iter().map(|&k| &tubes[k]).collect();
        let children = split_vertex(&set, &bbox, &hits, res.apothem)?;
        g.insert_decomposition(id, children)?;
    }
    log::debug!(
        "reserve: split {split} vertices, graph now {} vertices / {} edges",
        g.num_vertices(),
        g.num_edges()
    );
    Ok(split)
}

/// Copying form of [`reserve_in_place`].
pub fn reserve(g: &SpaceTimeGraph, res: &Reservation) -> Result<SpaceTimeGraph> {
    let mut out = g.clone();
    reserve_in_place(&mut out, res)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn st(x: f64, y: f64, t: f64) -> State {
        State::new(vec![x, y], t)
    }

    fn cube(lo: [f64; 3], hi: [f64; 3]) -> HPoly {
        HPoly::from_box(&lo, &hi).unwrap()
    }

    fn rect(x0: f64, y0: f64, x1: f64, y1: f64) -> HPoly {
        HPoly::from_box(&[x0, y0], &[x1, y1]).unwrap()
    }

    #[test]
    fn canonicalize_examples() {
        let full = Trajectory::new(vec![st(0.0, 0.0, 0.0), st(1.0, 0.0, 50.0)]);
        assert_eq!(canonicalize(&full, 50.0), full);
        let mid = Trajectory::new(vec![st(0.0, 0.0, 5.0), st(1.0, 0.0, 6.0)]);
        assert_eq!(
            canonicalize(&mid, 50.0).states,
            vec![st(0.0, 0.0, 0.0), st(0.0, 0.0, 5.0), st(1.0, 0.0, 6.0), st(1.0, 0.0, 50.0)]
        );
        let single = Trajectory::new(vec![st(2.0, 2.0, 10.0)]);
        assert_eq!(
            canonicalize(&single, 50.0).states,
            vec![st(2.0, 2.0, 0.0), st(2.0, 2.0, 10.0), st(2.0, 2.0, 50.0)]
        );
        let dup = Trajectory::new(vec![st(0.0, 0.0, 0.0), st(0.0, 0.0, 0.0), st(1.0, 1.0, 50.0)]);
        assert_eq!(canonicalize(&dup, 50.0).states.len(), 2);
    }

    #[test]
    fn sequence_examples() {
        let g = SpaceTimeGraph::build(&[rect(0.0, 0.0, 2.0, 2.0), rect(2.0, 0.0, 4.0, 2.0)], 10.0)
            .unwrap();
        let inside = Trajectory::new(vec![st(0.5, 0.5, 0.0), st(1.5, 0.5, 10.0)]);
        let vs = vertex_segment_sequence(&g, &inside).unwrap();
        assert_eq!(vs.len(), 1);
        assert_eq!(vs[0].vertex_id, 0);

        // crossing x = 2 at t = 5
        let cross = Trajectory::new(vec![st(1.0, 1.0, 0.0), st(3.0, 1.0, 10.0)]);
        let vs = vertex_segment_sequence(&g, &cross).unwrap();
        assert_eq!(vs.len(), 2);
        assert!((vs[0].seg.y.t - 5.0).abs() < 1e-12);
        assert!((vs[1].seg.x.t - 5.0).abs() < 1e-12);

        let riding = Trajectory::new(vec![st(2.0, 0.5, 0.0), st(2.0, 1.5, 10.0)]);
        let vs = vertex_segment_sequence(&g, &riding).unwrap();
        assert_eq!(vs.len(), 2);
        assert_eq!(vs[0].seg, vs[1].seg);

        let leaving = Trajectory::new(vec![st(3.0, 1.0, 0.0), st(5.0, 1.0, 10.0)]);
        match vertex_segment_sequence(&g, &leaving) {
            Err(Error::Coverage { t0, t1 }) => {
                assert!((t0 - 5.0).abs() < 1e-9 && (t1 - 10.0).abs() < 1e-9)
            }
            other => panic!("expected coverage error, got {other:?}"),
        }
    }

    /// Every sample of `x` is either strictly inside the tube or strictly
    /// inside exactly one child, unless it sits within `tol` of a face.
    fn check_partition(x: &HPoly, seg: &Segment, r: f64, children: &[HPoly], n: usize, seed: u64) {
        let tube = segment_tube(seg, r).unwrap();
        let bb = x.bounding_box().unwrap();
        let tol = 1e-7;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut checked = 0;
        while checked < n {
            let p: Vec<f64> = (0..x.dim()).map(|k| rng.gen_range(bb.lo[k]..=bb.hi[k])).collect();
            if x.max_violation(&p) > -tol {
                continue;
            }
            checked += 1;
            let near = |h: &HPoly| h.rows().any(|(a, b)| (crate::geom::dot(a, &p) - b).abs() < tol);
            if near(tube.poly()) || children.iter().any(near) {
                continue;
            }
            let in_tube = tube.poly().max_violation(&p) < 0.0;
            let hits = children.iter().filter(|c| c.max_violation(&p) < 0.0).count();
            assert_eq!(hits + in_tube as usize, 1, "sample {p:?}: {hits} children, tube {in_tube}");
        }
        for c in children {
            let depth = c.depth_in(tube.poly()).unwrap();
            assert!(depth.is_none_or(|d| d <= tol), "child meets the open tube");
            let w = c.chebyshev().unwrap().1;
            assert!(x.contains_tol(&w, 1e-7).unwrap());
        }
    }

    #[test]
    fn interior_tuple_gives_six_children() {
        let x = cube([0.0, 0.0, 0.0], [10.0, 10.0, 50.0]);
        let seg = Segment::new(st(3.0, 4.0, 10.0), st(6.0, 5.0, 20.0));
        let kids = decompose_one(&x, &seg, 0.5).unwrap();
        assert_eq!(kids.len(), 6);
        check_partition(&x, &seg, 0.5, &kids, 10_000, 1);
    }

    #[test]
    fn full_time_span_gives_four_children() {
        let x = cube([0.0, 0.0, 10.0], [10.0, 10.0, 20.0]);
        let seg = Segment::new(st(3.0, 4.0, 10.0), st(6.0, 5.0, 20.0));
        let kids = decompose_one(&x, &seg, 0.5).unwrap();
        assert_eq!(kids.len(), 4);
        check_partition(&x, &seg, 0.5, &kids, 2_000, 2);
    }

    #[test]
    fn wide_tube_leaves_only_time_bands() {
        let x = cube([0.0, 0.0, 0.0], [1.0, 1.0, 50.0]);
        let seg = Segment::new(st(0.5, 0.5, 10.0), st(0.5, 0.5, 20.0));
        let kids = decompose_one(&x, &seg, 2.0).unwrap();
        assert_eq!(kids.len(), 2);
        check_partition(&x, &seg, 2.0, &kids, 2_000, 3);
    }

    #[test]
    fn degenerate_segment_is_rejected() {
        let x = cube([0.0, 0.0, 0.0], [1.0, 1.0, 50.0]);
        let seg = Segment::new(st(0.5, 0.5, 10.0), st(0.5, 0.5, 10.0));
        assert!(decompose_one(&x, &seg, 0.5).is_err());
    }

    #[test]
    fn stationary_column_gives_four_sets() {
        let g = SpaceTimeGraph::build(&[rect(0.0, 0.0, 10.0, 10.0)], 50.0).unwrap();
        let res = Reservation::new(Trajectory::new(vec![st(5.0, 5.0, 0.0)]), 0.5).unwrap();
        let g2 = reserve(&g, &res).unwrap();
        assert_eq!(g2.num_vertices(), 4);
        // the four pieces around the column form a ring
        assert_eq!(g2.num_edges(), 4);
    }

    fn ring_map() -> Vec<HPoly> {
        vec![
            rect(0.0, 0.0, 10.0, 3.0),
            rect(0.0, 7.0, 10.0, 10.0),
            rect(0.0, 0.0, 3.0, 10.0),
            rect(7.0, 0.0, 10.0, 10.0),
        ]
    }

    fn assert_clear(g: &SpaceTimeGraph, res: &Reservation) {
        let traj = canonicalize(&res.trajectory, g.t_max());
        for seg in traj.segments() {
            let tube = segment_tube(&seg, res.apothem).unwrap();
            for (id, set) in g.vertices() {
                let d = set.depth_in(tube.poly()).unwrap();
                assert!(d.is_none_or(|d| d <= 1e-6), "vertex {id} meets the tube by {d:?}");
            }
        }
    }

    fn assert_edges_exact(g: &SpaceTimeGraph) {
        let ids: Vec<_> = g.vertex_ids().collect();
        for (i, &u) in ids.iter().enumerate() {
            for &v in &ids[i + 1..] {
                let meet = !g.set(u).unwrap().intersect(g.set(v).unwrap()).unwrap().is_empty().unwrap();
                assert_eq!(g.has_edge(u, v), meet, "edge ({u}, {v})");
            }
        }
    }

    #[test]
    fn reserve_multi_set_trajectory() {
        let g = SpaceTimeGraph::build(&ring_map(), 50.0).unwrap();
        // moves along the bottom strip into the right strip and up
        let traj = Trajectory::new(vec![
            st(1.5, 1.5, 2.0),
            st(8.5, 1.5, 12.0),
            st(8.5, 8.5, 22.0),
        ]);
        let res = Reservation::new(traj, 0.8).unwrap();
        let g2 = reserve(&g, &res).unwrap();
        assert!(g2.num_vertices() > g.num_vertices());
        assert_clear(&g2, &res);
        assert_edges_exact(&g2);

        // free space outside the tube is conserved
        let canon = canonicalize(&res.trajectory, 50.0);
        let tubes: Vec<_> = canon.segments().map(|s| segment_tube(&s, 0.8).unwrap()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..3000 {
            let p = vec![rng.gen_range(0.0..10.0), rng.gen_range(0.0..10.0), rng.gen_range(0.0..50.0)];
            let free = g.vertices().any(|(_, s)| s.max_violation(&p) < -1e-7);
            let in_tube = tubes.iter().any(|t| t.poly().max_violation(&p) < 1e-7);
            let covered = g2.vertices().any(|(_, s)| s.max_violation(&p) <= 1e-7);
            let was = g.vertices().any(|(_, s)| s.max_violation(&p) <= 1e-7);
            if free && !in_tube {
                assert!(covered, "lost free point {p:?}");
            }
            if covered {
                assert!(was, "gained point {p:?}");
            }
        }

        // idempotent on the open tube
        let g3 = reserve(&g2, &res).unwrap();
        assert_eq!(g3.num_vertices(), g2.num_vertices());
    }

    #[test]
    fn reserve_rejects_trajectory_outside_free_space() {
        let g = SpaceTimeGraph::build(&ring_map(), 50.0).unwrap();
        let traj = Trajectory::new(vec![st(1.5, 1.5, 0.0), st(5.0, 5.0, 10.0)]);
        let res = Reservation::new(traj, 0.5).unwrap();
        assert!(matches!(reserve(&g, &res), Err(Error::Coverage { .. })));
    }

    #[test]
    fn crossing_reservations_need_the_unchecked_form() {
        let g = SpaceTimeGraph::build(&[rect(0.0, 0.0, 10.0, 10.0)], 20.0).unwrap();
        let a = Reservation::new(Trajectory::new(vec![st(1.0, 5.0, 0.0), st(9.0, 5.0, 8.0)]), 0.5).unwrap();
        let b = Reservation::new(Trajectory::new(vec![st(5.0, 1.0, 0.0), st(5.0, 9.0, 8.0)]), 0.5).unwrap();
        let mut g1 = reserve(&g, &a).unwrap();
        assert!(matches!(reserve(&g1, &b), Err(Error::Coverage { .. })));
        assert!(reserve_in_place_unchecked(&mut g1, &b).unwrap() > 0);
        assert_clear(&g1, &a);
        assert_clear(&g1, &b);
        assert_edges_exact(&g1);
    }

    #[test]
    fn reservation_json() {
        let res = Reservation::new(Trajectory::new(vec![st(1.0, 2.0, 0.0), st(2.0, 2.0, 1.0)]), 0.5).unwrap();
        let s = serde_json::to_string(&res).unwrap();
        assert_eq!(
            s,
            r#"{"trajectory":{"states":[{"p":[1.0,2.0],"t":0.0},{"p":[2.0,2.0],"t":1.0}]},"apothem":0.5}"#
        );
        assert_eq!(serde_json::from_str::<Reservation>(&s).unwrap(), res);
        assert!(Reservation::new(res.trajectory.clone(), 0.0).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn decomposition_partitions(
            x0 in 0.5f64..9.5, y0 in 0.5f64..9.5, x1 in 0.5f64..9.5, y1 in 0.5f64..9.5,
            t0 in 0.0f64..20.0, dt in 0.5f64..20.0, r in 0.1f64..3.0, seed in 0u64..1000,
        ) {
            let x = cube([0.0, 0.0, 0.0], [10.0, 10.0, 50.0]);
            let seg = Segment::new(st(x0, y0, t0), st(x1, y1, t0 + dt));
            let kids = decompose_one(&x, &seg, r).unwrap();
            prop_assert!(kids.len() <= 6);
            check_partition(&x, &seg, r, &kids, 400, seed);
        }
    }
}
