//! Deterministic SVG rendering of 2d instances and solutions.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::ecd::canonicalize;
use crate::error::{Error, Result};
use crate::geom::HPoly;
use crate::trajectory::Trajectory;

use super::InstanceFile;

const SCALE: f64 = 50.0;
const MARGIN: f64 = 10.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

/// Vertices of a bounded 2d polygon in counter-clockwise order.
fn polygon(p: &HPoly) -> Result<Vec<[f64; 2]>> {
    let bb = match p.bounding_box() {
        Ok(b) => b,
        Err(Error::EmptySet) => return Ok(vec![]),
        Err(e) => return Err(e),
    };
    let mut poly = vec![
        [bb.lo[0], bb.lo[1]],
        [bb.hi[0], bb.lo[1]],
        [bb.hi[0], bb.hi[1]],
        [bb.lo[0], bb.hi[1]],
    ];
    for (a, b) in p.rows() {
        let f = |q: &[f64; 2]| a[0] * q[0] + a[1] * q[1] - b;
        let mut out = Vec::new();
        for i in 0..poly.len() {
            let (u, v) = (poly[i], poly[(i + 1) % poly.len()]);
            let (fu, fv) = (f(&u), f(&v));
            if fu <= 0.0 {
                out.push(u);
            }
            if (fu < 0.0 && fv > 0.0) || (fu > 0.0 && fv < 0.0) {
                let s = fu / (fu - fv);
                out.push([u[0] + s * (v[0] - u[0]), u[1] + s * (v[1] - u[1])]);
            }
        }
        poly = out;
        if poly.is_empty() {
            break;
        }
    }
    Ok(poly)
}

/// Convex hull (monotone chain) of a point cloud.
fn hull(mut pts: Vec<[f64; 2]>) -> Vec<[f64; 2]> {
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let cross = |o: [f64; 2], a: [f64; 2], b: [f64; 2]| (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
    let mut lower: Vec<[f64; 2]> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<[f64; 2]> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

struct Frame {
    x0: f64,
    y1: f64,
}

impl Frame {
    fn pt(&self, p: &[f64]) -> String {
        format!("{:.3},{:.3}", MARGIN + (p[0] - self.x0) * SCALE, MARGIN + (self.y1 - p[1]) * SCALE)
    }

    fn pts(&self, ps: &[[f64; 2]]) -> String {
        ps.iter().map(|p| self.pt(p)).collect::<Vec<_>>().join(" ")
    }
}

/// Renders the map, the swept area of each dynamic obstacle and one
/// polyline per robot. State markers fade with time.
pub fn render_svg(inst: &InstanceFile, trajectories: &[Trajectory]) -> Result<String> {
    if inst.d != 2 {
        return Err(Error::UnsupportedDimension(inst.d));
    }
    let polys: Vec<Vec<[f64; 2]>> = inst.map.iter().map(polygon).collect::<Result<_>>()?;
    let all: Vec<[f64; 2]> = polys.iter().flatten().copied().collect();
    let (x0, x1) = all.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), p| (l.min(p[0]), h.max(p[0])));
    let (y0, y1) = all.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), p| (l.min(p[1]), h.max(p[1])));
    let frame = Frame { x0, y1 };
    let w = (x1 - x0) * SCALE + 2.0 * MARGIN;
    let h = (y1 - y0) * SCALE + 2.0 * MARGIN;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.3} {h:.3}">"#
    );
    let _ = writeln!(s, r##"<rect width="100%" height="100%" fill="#ffffff"/>"##);
    for p in &polys {
        let _ = writeln!(
            s,
            r##"<polygon class="set" points="{}" fill="#e8e8e8" fill-opacity="0.6" stroke="#999999" stroke-width="1"/>"##,
            frame.pts(p)
        );
    }
    for ob in &inst.dynamic_obstacles {
        let canon = canonicalize(&ob.trajectory, inst.t_max);
        let a = ob.apothem;
        for seg in canon.segments() {
            let mut corners = Vec::new();
            for q in [&seg.x.p, &seg.y.p] {
                for (dx, dy) in [(-a, -a), (a, -a), (a, a), (-a, a)] {
                    corners.push([q[0] + dx, q[1] + dy]);
                }
            }
            let _ = writeln!(
                s,
                r##"<polygon class="obstacle" points="{}" fill="#d62728" fill-opacity="0.15" stroke="none"/>"##,
                frame.pts(&hull(corners))
            );
        }
    }
    let t_max = inst.t_max;
    for (i, tr) in trajectories.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts: Vec<String> = tr.states.iter().map(|st| frame.pt(&st.p)).collect();
        let _ = writeln!(
            s,
            r#"<polyline class="robot" data-robot="{i}" points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
            pts.join(" ")
        );
        for st in &tr.states {
            let alpha = 1.0 - 0.8 * (st.t / t_max).clamp(0.0, 1.0);
            let c = frame.pt(&st.p);
            let (cx, cy) = c.split_once(',').unwrap();
            let _ = writeln!(
                s,
                r#"<circle cx="{cx}" cy="{cy}" r="4" fill="{color}" fill-opacity="{alpha:.3}"/>"#
            );
        }
    }
    s.push_str("</svg>\n");
    Ok(s)
}

pub fn emit_svg(trajectories: &[Trajectory], inst: &InstanceFile, path: &Path) -> Result<()> {
    fs::write(path, render_svg(inst, trajectories)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench_io::fixture;
    use crate::geom::State;

    #[test]
    fn polygon_of_box() {
        let p = HPoly::from_box(&[0.0, 0.0], &[2.0, 1.0]).unwrap();
        assert_eq!(polygon(&p).unwrap().len(), 4);
        let tri = HPoly::new(2, &[vec![-1.0, 0.0], vec![0.0, -1.0], vec![1.0, 1.0]], &[0.0, 0.0, 1.0]).unwrap();
        assert_eq!(polygon(&tri).unwrap().len(), 3);
    }

    #[test]
    fn one_polyline_per_robot_and_deterministic() {
        let f = fixture("simple_exchange").unwrap();
        let t = Trajectory::new(vec![State::new(vec![1.5, 5.0], 0.0), State::new(vec![1.5, 8.0], 3.0)]);
        let a = render_svg(&f, std::slice::from_ref(&t)).unwrap();
        assert_eq!(a.matches("<polyline").count(), 1);
        assert_eq!(a.matches(r#"class="set""#).count(), 4);
        assert_eq!(a.matches(r#"class="obstacle""#).count(), 4);
        assert_eq!(a, render_svg(&f, &[t]).unwrap());
    }

    #[test]
    fn three_d_is_rejected() {
        let mut f = fixture("empty_pair").unwrap();
        f.d = 3;
        assert!(matches!(render_svg(&f, &[]), Err(Error::UnsupportedDimension(3))));
    }
}
