use std::f64::consts::PI;

use super::geometry::{RectTract, TractKind, THIRD_PI};
use crate::error::{HairError, Result};
use crate::Complex;

/// Closed axis-aligned boundary segment.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Segment {
    pub u0: f64,
    pub v0: f64,
    pub u1: f64,
    pub v1: f64,
}

impl Segment {
    fn vertical(u: f64, v0: f64, v1: f64) -> Self {
        Segment { u0: u, v0, u1: u, v1 }
    }

    fn horizontal(v: f64, u0: f64, u1: f64) -> Self {
        Segment { u0, v0: v, u1, v1: v }
    }

    /// Distance from `(anchor + du, v)` with the segment shifted by `anchor`.
    pub fn distance_local(&self, anchor: f64, du: f64, v: f64) -> f64 {
        let (a0, a1) = (self.u0 - anchor, self.u1 - anchor);
        let cu = du.clamp(a0.min(a1), a0.max(a1));
        let cv = v.clamp(self.v0.min(self.v1), self.v0.max(self.v1));
        (du - cu).hypot(v - cv)
    }
}

/// All boundary segments meeting the strip `lo <= u <= hi`, clipped to it.
pub fn boundary_segments(tract: &RectTract, lo: f64, hi: f64) -> Vec<Segment> {
    let mut segs = Vec::new();
    let clip = |a: f64, b: f64| (a.max(lo), b.min(hi));
    let horiz = |segs: &mut Vec<Segment>, v: f64, a: f64, b: f64| {
        let (a, b) = clip(a, b);
        if a <= b {
            segs.push(Segment::horizontal(v, a, b));
        }
    };
    let half = tract.kind == TractKind::HalfStrip;
    let v_edge = if half { THIRD_PI } else { PI };
    if lo <= 0.5 && 0.5 <= hi {
        segs.push(Segment::vertical(0.5, -v_edge, v_edge));
    }
    horiz(&mut segs, v_edge, 0.5, f64::INFINITY);
    horiz(&mut segs, -v_edge, 0.5, f64::INFINITY);
    if half {
        return segs;
    }
    let r = tract.plain_r();
    for j in 0..=r.len() {
        let (a, b) = tract.corridor_span(j);
        if b < lo || a > hi {
            continue;
        }
        horiz(&mut segs, THIRD_PI, a, b);
        horiz(&mut segs, -THIRD_PI, a, b);
    }
    for (k, &rk) in r.iter().enumerate() {
        if rk >= lo && rk <= hi {
            match tract.eps(k) {
                Some(e) => {
                    segs.push(Segment::vertical(rk, e, THIRD_PI));
                    segs.push(Segment::vertical(rk, -THIRD_PI, -e));
                }
                None => segs.push(Segment::vertical(rk, -THIRD_PI, THIRD_PI)),
            }
        }
        let w = rk + 1.0;
        if w >= lo && w <= hi {
            segs.push(Segment::vertical(w, THIRD_PI, PI));
            segs.push(Segment::vertical(w, -PI, -THIRD_PI));
        }
    }
    segs
}

/// Distance from `(anchor + du, v)` to the boundary, measured in coordinates
/// relative to `anchor` so that gate offsets far below the spacing of doubles
/// near `anchor` stay exact.
pub fn boundary_distance_local(tract: &RectTract, anchor: f64, du: f64, v: f64) -> f64 {
    let u = anchor + du;
    boundary_segments(tract, u - PI - 1.0, u + PI + 1.0)
        .iter()
        .map(|s| s.distance_local(anchor, du, v))
        .fold(f64::INFINITY, f64::min)
}

/// Euclidean distance from `w` to the boundary of the tract.
pub fn boundary_distance(tract: &RectTract, w: Complex) -> Result<f64> {
    if !tract.contains(w.re, w.im) {
        return Err(HairError::OutsideTract(w.re, w.im));
    }
    Ok(boundary_distance_local(tract, w.re, 0.0, w.im))
}
