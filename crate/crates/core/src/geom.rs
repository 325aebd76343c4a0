//! H-representation polyhedral kernel.
//!
//! Every set is `{x | A x <= b}` with rows rescaled to unit infinity-norm on
//! construction. Space-time sets carry time as their last coordinate.
//! Boundaries are closed: all membership tests are inclusive within [`TOL`].

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::lp::{Cmp, LinearProgram, LpOutcome};

/// Containment / emptiness tolerance shared by all geometric predicates.
pub const TOL: f64 = 1e-9;

/// A space-time state: position `p` at time `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct State {
    pub p: Vec<f64>,
    pub t: f64,
}

impl State {
    pub fn new(p: impl Into<Vec<f64>>, t: f64) -> Self {
        State { p: p.into(), t }
    }

    pub fn dim(&self) -> usize {
        self.p.len()
    }

    /// Flattens to a point of R^{d+1} (time last).
    pub fn to_point(&self) -> Vec<f64> {
        let mut v = self.p.clone();
        v.push(self.t);
        v
    }

    pub fn from_point(x: &[f64]) -> Self {
        let (t, p) = x.split_last().expect("space-time point has at least one coordinate");
        State { p: p.to_vec(), t: *t }
    }
}

/// Straight space-time segment from `x` to `y`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub x: State,
    pub y: State,
}

impl Segment {
    pub fn new(x: State, y: State) -> Self {
        Segment { x, y }
    }

    pub fn duration(&self) -> f64 {
        self.y.t - self.x.t
    }

    /// Constant velocity of the segment; `None` for zero duration.
    pub fn velocity(&self) -> Option<Vec<f64>> {
        let dt = self.duration();
        if dt <= 0.0 {
            return None;
        }
        Some(self.x.p.iter().zip(&self.y.p).map(|(a, b)| (b - a) / dt).collect())
    }

    /// Point at parameter `s` in [0, 1].
    pub fn lerp(&self, s: f64) -> State {
        let p: Vec<f64> = self
            .x
            .p
            .iter()
            .zip(&self.y.p)
            .map(|(a, b)| a + s * (b - a))
            .collect();
        State::new(p, self.x.t + s * (self.y.t - self.x.t))
    }
}

/// A single closed halfspace `normal . x <= offset`.
#[derive(Debug, Clone, PartialEq)]
pub struct Halfspace {
    pub normal: Vec<f64>,
    pub offset: f64,
}

impl Halfspace {
    pub fn complement(&self) -> Halfspace {
        Halfspace {
            normal: self.normal.iter().map(|v| -v).collect(),
            offset: -self.offset,
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        dot(&self.normal, x) - self.offset
    }
}

/// Axis-aligned box `[lo, hi]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl BBox {
    pub fn overlaps(&self, other: &BBox, tol: f64) -> bool {
        self.lo
            .iter()
            .zip(&self.hi)
            .zip(other.lo.iter().zip(&other.hi))
            .all(|((l0, h0), (l1, h1))| l0 <= &(h1 + tol) && l1 <= &(h0 + tol))
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(v, (l, h))| *v >= l - tol && *v <= h + tol)
    }

    /// Box spanned by a segment's endpoints.
    pub fn of_segment(seg: &Segment) -> BBox {
        let a = seg.x.to_point();
        let b = seg.y.to_point();
        BBox {
            lo: a.iter().zip(&b).map(|(u, v)| u.min(*v)).collect(),
            hi: a.iter().zip(&b).map(|(u, v)| u.max(*v)).collect(),
        }
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Convex polyhedron `{x | A x <= b}` (row-major `A`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "HPolyJson", into = "HPolyJson")]
pub struct HPoly {
    dim: usize,
    a: Vec<f64>,
    b: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct HPolyJson {
    #[serde(rename = "A")]
    a: Vec<Vec<f64>>,
    b: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    dim: Option<usize>,
}

impl TryFrom<HPolyJson> for HPoly {
    type Error = Error;

    fn try_from(j: HPolyJson) -> Result<Self> {
        let dim = match (j.a.first(), j.dim) {
            (Some(row), _) => row.len(),
            (None, Some(d)) => d,
            (None, None) => {
                return Err(Error::InvalidArgument(
                    "polyhedron without rows needs an explicit \"dim\"".into(),
                ))
            }
        };
        HPoly::new(dim, &j.a, &j.b)
    }
}

impl From<HPoly> for HPolyJson {
    fn from(p: HPoly) -> Self {
        let a: Vec<Vec<f64>> = p.rows().map(|(r, _)| r.to_vec()).collect();
        HPolyJson {
            dim: a.is_empty().then_some(p.dim),
            a,
            b: p.b,
        }
    }
}

impl HPoly {
    /// Builds a polyhedron from rows; each row is rescaled to unit
    /// infinity-norm and trivially-true rows are dropped.
    pub fn new(dim: usize, a: &[Vec<f64>], b: &[f64]) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("polyhedron dimension must be >= 1".into()));
        }
        check_dim(a.len(), b.len())?;
        let mut poly = HPoly {
            dim,
            a: Vec::with_capacity(a.len() * dim),
            b: Vec::with_capacity(b.len()),
        };
        for (row, &rhs) in a.iter().zip(b) {
            check_dim(dim, row.len())?;
            poly.push_row(row, rhs)?;
        }
        Ok(poly)
    }

    /// The whole space R^dim (no rows).
    pub fn universe(dim: usize) -> Self {
        HPoly {
            dim,
            a: Vec::new(),
            b: Vec::new(),
        }
    }

    /// Axis-aligned box `lo <= x <= hi`.
    pub fn from_box(lo: &[f64], hi: &[f64]) -> Result<Self> {
        check_dim(lo.len(), hi.len())?;
        let n = lo.len();
        let mut poly = HPoly::universe(n);
        for k in 0..n {
            let mut e = vec![0.0; n];
            e[k] = 1.0;
            poly.push_row(&e, hi[k])?;
            e[k] = -1.0;
            poly.push_row(&e, -lo[k])?;
        }
        Ok(poly)
    }

    fn push_row(&mut self, row: &[f64], rhs: f64) -> Result<()> {
        if row.iter().any(|v| !v.is_finite()) || rhs.is_nan() {
            return Err(Error::InvalidArgument("non-finite polyhedron row".into()));
        }
        let scale = row.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if scale == 0.0 {
            if rhs >= 0.0 {
                return Ok(());
            }
            // 0 <= rhs < 0: keep a canonical contradictory row.
            self.a.extend(std::iter::repeat_n(0.0, self.dim));
            self.b.push(-1.0);
            return Ok(());
        }
        if rhs == f64::INFINITY {
            return Ok(());
        }
        self.a.extend(row.iter().map(|v| v / scale));
        self.b.push(rhs / scale);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_rows(&self) -> usize {
        self.b.len()
    }

    pub fn row(&self, i: usize) -> (&[f64], f64) {
        (&self.a[i * self.dim..(i + 1) * self.dim], self.b[i])
    }

    pub fn rows(&self) -> impl Iterator<Item = (&[f64], f64)> + '_ {
        (0..self.num_rows()).map(move |i| self.row(i))
    }

    pub fn halfspace(&self, i: usize) -> Halfspace {
        let (a, b) = self.row(i);
        Halfspace {
            normal: a.to_vec(),
            offset: b,
        }
    }

    /// Returns a copy with one more constraint.
    pub fn with_halfspace(&self, h: &Halfspace) -> Result<HPoly> {
        check_dim(self.dim, h.normal.len())?;
        let mut out = self.clone();
        out.push_row(&h.normal, h.offset)?;
        Ok(out)
    }

    /// Largest violation `max_i (a_i x - b_i)`; nonpositive inside.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        self.rows()
            .map(|(a, b)| dot(a, x) - b)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn contains(&self, x: &[f64]) -> Result<bool> {
        self.contains_tol(x, TOL)
    }

    pub fn contains_tol(&self, x: &[f64], tol: f64) -> Result<bool> {
        check_dim(self.dim, x.len())?;
        Ok(self.rows().all(|(a, b)| dot(a, x) <= b + tol))
    }

    /// Row-stacked intersection.
    pub fn intersect(&self, other: &HPoly) -> Result<HPoly> {
        check_dim(self.dim, other.dim)?;
        let mut out = self.clone();
        out.a.extend_from_slice(&other.a);
        out.b.extend_from_slice(&other.b);
        Ok(out)
    }

    /// Chebyshev ball `(radius, center)` in the Euclidean norm, with the
    /// radius capped at 1. A negative radius means the set is empty; its
    /// magnitude measures how far the rows are from being consistent.
    pub fn chebyshev(&self) -> Result<(f64, Vec<f64>)> {
        let mut lp = LinearProgram::new();
        let xs: Vec<usize> = (0..self.dim).map(|_| lp.free_var(0.0)).collect();
        let rho = lp.add_var(-1.0, f64::NEG_INFINITY, 1.0);
        for (a, b) in self.rows() {
            let norm = a.iter().map(|v| v * v).sum::<f64>().sqrt();
            let mut terms: Vec<(usize, f64)> =
                xs.iter().zip(a).map(|(&j, &c)| (j, c)).collect();
            terms.push((rho, norm.max(1.0)));
            lp.add_row(&terms, Cmp::Le, b);
        }
        match lp.solve()? {
            LpOutcome::Optimal { x, .. } => Ok((x[rho], x[..self.dim].to_vec())),
            other => Err(Error::Solver(format!("Chebyshev LP returned {other:?}"))),
        }
    }

    pub fn is_empty(&self) -> Result<bool> {
        Ok(self.chebyshev()?.0 < -TOL)
    }

    /// A point of the set (Chebyshev center) or `None` when empty.
    pub fn witness(&self) -> Result<Option<Vec<f64>>> {
        let (r, c) = self.chebyshev()?;
        Ok((r >= -TOL).then_some(c))
    }

    /// Largest `delta <= 1` such that some point of `self` satisfies every
    /// row of `other` with slack `delta`. Positive iff `self` meets the
    /// interior of `other`. `None` when `self` is empty.
    pub fn depth_in(&self, other: &HPoly) -> Result<Option<f64>> {
        check_dim(self.dim, other.dim)?;
        let mut lp = LinearProgram::new();
        let xs: Vec<usize> = (0..self.dim).map(|_| lp.free_var(0.0)).collect();
        let delta = lp.add_var(-1.0, f64::NEG_INFINITY, 1.0);
        for (a, b) in self.rows() {
            let terms: Vec<(usize, f64)> = xs.iter().zip(a).map(|(&j, &c)| (j, c)).collect();
            lp.add_row(&terms, Cmp::Le, b);
        }
        for (a, b) in other.rows() {
            let mut terms: Vec<(usize, f64)> =
                xs.iter().zip(a).map(|(&j, &c)| (j, c)).collect();
            terms.push((delta, 1.0));
            lp.add_row(&terms, Cmp::Le, b);
        }
        match lp.solve()? {
            LpOutcome::Optimal { x, .. } => Ok(Some(x[delta])),
            LpOutcome::Infeasible => Ok(None),
            LpOutcome::Unbounded => Err(Error::Solver("depth LP unbounded".into())),
        }
    }

    /// Maximizes `c . x` over the set. `Ok(None)` if empty.
    pub fn support(&self, c: &[f64]) -> Result<Option<(f64, Vec<f64>)>> {
        check_dim(self.dim, c.len())?;
        let mut lp = LinearProgram::new();
        let xs: Vec<usize> = c.iter().map(|&ci| lp.free_var(-ci)).collect();
        for (a, b) in self.rows() {
            let terms: Vec<(usize, f64)> = xs.iter().zip(a).map(|(&j, &v)| (j, v)).collect();
            lp.add_row(&terms, Cmp::Le, b);
        }
        match lp.solve()? {
            LpOutcome::Optimal { objective, x } => Ok(Some((-objective, x))),
            LpOutcome::Infeasible => Ok(None),
            LpOutcome::Unbounded => Ok(Some((f64::INFINITY, Vec::new()))),
        }
    }

    /// Per-coordinate extent via 2n LPs.
    pub fn bounding_box(&self) -> Result<BBox> {
        let mut lo = vec![0.0; self.dim];
        let mut hi = vec![0.0; self.dim];
        if self.is_empty()? {
            return Err(Error::EmptySet);
        }
        for k in 0..self.dim {
            let mut c = vec![0.0; self.dim];
            c[k] = 1.0;
            match self.support(&c)? {
                Some((v, _)) if v.is_finite() => hi[k] = v,
                Some(_) => return Err(Error::Unbounded(k)),
                None => return Err(Error::EmptySet),
            }
            c[k] = -1.0;
            match self.support(&c)? {
                Some((v, _)) if v.is_finite() => lo[k] = -v,
                Some(_) => return Err(Error::Unbounded(k)),
                None => return Err(Error::EmptySet),
            }
        }
        Ok(BBox { lo, hi })
    }

    /// Adds `t0 <= t <= t1` as a new last coordinate.
    pub fn extrude_time(&self, t0: f64, t1: f64) -> Result<HPoly> {
        if !(t0 < t1) {
            return Err(Error::InvalidArgument(format!(
                "extrusion needs t0 < t1, got [{t0}, {t1}]"
            )));
        }
        let n = self.dim + 1;
        let mut out = HPoly::universe(n);
        for (a, b) in self.rows() {
            let mut row = a.to_vec();
            row.push(0.0);
            out.push_row(&row, b)?;
        }
        let mut e = vec![0.0; n];
        e[n - 1] = -1.0;
        out.push_row(&e, -t0)?;
        e[n - 1] = 1.0;
        out.push_row(&e, t1)?;
        Ok(out)
    }

    /// Restricts a space-time set to `t0 <= t <= t1` (either side optional).
    pub fn time_band(&self, t0: Option<f64>, t1: Option<f64>) -> Result<HPoly> {
        let mut out = self.clone();
        let mut e = vec![0.0; self.dim];
        if let Some(t0) = t0 {
            e[self.dim - 1] = -1.0;
            out.push_row(&e, -t0)?;
        }
        if let Some(t1) = t1 {
            e[self.dim - 1] = 1.0;
            out.push_row(&e, t1)?;
        }
        Ok(out)
    }

    /// Maximal sub-segment of `seg` inside the set (parametric clipping).
    pub fn clip_segment(&self, seg: &Segment) -> Result<Option<Segment>> {
        let x = seg.x.to_point();
        let y = seg.y.to_point();
        check_dim(self.dim, x.len())?;
        check_dim(self.dim, y.len())?;
        let dir: Vec<f64> = x.iter().zip(&y).map(|(a, b)| b - a).collect();
        let (mut s0, mut s1) = (0.0_f64, 1.0_f64);
        for (a, b) in self.rows() {
            let base = dot(a, &x) - b;
            let slope = dot(a, &dir);
            if slope.abs() <= 1e-15 {
                if base > TOL {
                    return Ok(None);
                }
                continue;
            }
            let s = -base / slope;
            if slope > 0.0 {
                s1 = s1.min(s);
            } else {
                s0 = s0.max(s);
            }
            if s0 > s1 + 1e-12 {
                return Ok(None);
            }
        }
        let s1 = s1.max(s0);
        let clipped = Segment::new(
            if s0 == 0.0 { seg.x.clone() } else { seg.lerp(s0) },
            if s1 == 1.0 { seg.y.clone() } else { seg.lerp(s1) },
        );
        Ok(Some(clipped))
    }

    /// Drops rows implied by the remaining ones (one LP per row).
    pub fn prune_redundant(&self) -> Result<HPoly> {
        let mut keep: Vec<bool> = vec![true; self.num_rows()];
        for i in 0..self.num_rows() {
            keep[i] = false;
            let rest = self.select_rows(&keep);
            let (a, b) = self.row(i);
            match rest.support(a)? {
                Some((v, _)) if v <= b + TOL => {}
                _ => keep[i] = true,
            }
        }
        Ok(self.select_rows(&keep))
    }

    fn select_rows(&self, keep: &[bool]) -> HPoly {
        let mut out = HPoly::universe(self.dim);
        for (i, &k) in keep.iter().enumerate() {
            if k {
                let (a, b) = self.row(i);
                out.a.extend_from_slice(a);
                out.b.push(b);
            }
        }
        out
    }
}

/// The sheared prism swept by the square `box(p, r)` along a segment.
///
/// Row layout: `[t >= x.t, t <= y.t, +p_0 side, -p_0 side, +p_1 side, ...]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tube {
    poly: HPoly,
    pub seg: Segment,
    pub apothem: f64,
}

/// A side face of a [`Tube`] with its outward complement.
#[derive(Debug, Clone, PartialEq)]
pub struct SideFace {
    pub inside: Halfspace,
    pub outside: Halfspace,
}

impl Tube {
    pub fn poly(&self) -> &HPoly {
        &self.poly
    }

    pub fn into_poly(self) -> HPoly {
        self.poly
    }

    /// The 2d side faces in canonical order `+p_0, -p_0, +p_1, -p_1, ...`.
    pub fn side_faces(&self) -> Vec<SideFace> {
        (2..self.poly.num_rows())
            .map(|i| {
                let inside = self.poly.halfspace(i);
                SideFace {
                    outside: inside.complement(),
                    inside,
                }
            })
            .collect()
    }
}

pub fn segment_tube(seg: &Segment, r: f64) -> Result<Tube> {
    let d = seg.x.dim();
    check_dim(d, seg.y.dim())?;
    if !(r > 0.0) {
        return Err(Error::InvalidArgument(format!("tube apothem must be > 0, got {r}")));
    }
    let v = seg.velocity().ok_or_else(|| {
        Error::InvalidArgument(format!(
            "degenerate segment: duration {} is not positive",
            seg.duration()
        ))
    })?;
    let n = d + 1;
    let mut poly = HPoly::universe(n);
    let mut e = vec![0.0; n];
    e[d] = -1.0;
    poly.push_row(&e, -seg.x.t)?;
    e[d] = 1.0;
    poly.push_row(&e, seg.y.t)?;
    for k in 0..d {
        // p_k - v_k t stays within r of its value at the segment start
        let c = seg.x.p[k] - v[k] * seg.x.t;
        let mut row = vec![0.0; n];
        row[k] = 1.0;
        row[d] = -v[k];
        poly.push_row(&row, c + r)?;
        row[k] = -1.0;
        row[d] = v[k];
        poly.push_row(&row, -c + r)?;
    }
    Ok(Tube {
        poly,
        seg: seg.clone(),
        apothem: r,
    })
}
