//! Bound functions `b(u) = exp(J/2)`, `B(u) = exp(2J)` with `J(u) = ∫_1^u dt / dist(t, ∂T)`.
//!
//! Along the real axis `dist(t) = min(π/3, t − 1/2, min_k sqrt((t − r_k)² + ε_k²))`, so
//! `J` has a closed form: logarithmic near the left edge, `3/π` per unit on flat
//! stretches and `asinh(s/ε)` across each gate window `|t − r_k| < c_k`,
//! `c_k = sqrt(π²/9 − ε_k²)`. When every gate involved fits in a double the
//! integral is also computed by quadrature of the exact boundary distance.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::distance::boundary_distance_local;
use super::geometry::{RectTract, TractKind, THIRD_PI};
use super::quadrature::integrate;
use crate::error::{HairError, Result};
use crate::{Bounds, Tower};

/// Gates beyond this position are handled symbolically only.
pub const GEOMETRIC_HORIZON: f64 = 1e8;

const LEFT_SWITCH: f64 = 0.5 + THIRD_PI;
const FLAT: f64 = 3.0 / PI;

/// A point `base + off` of the real axis; anchoring at `r_k` keeps offsets exact.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Abscissa {
    pub base: Tower,
    pub off: f64,
}

impl Abscissa {
    pub fn plain(x: f64) -> Self {
        Abscissa { base: Tower::from_real(x).expect("finite abscissa"), off: 0.0 }
    }

    pub fn anchored(base: Tower, off: f64) -> Self {
        Abscissa { base, off }
    }

    pub fn tower(base: Tower) -> Self {
        Abscissa { base, off: 0.0 }
    }

    pub fn value(&self) -> Tower {
        self.base.add_log(self.off)
    }

    /// Plain value when the base fits comfortably in a double.
    pub fn to_plain(&self) -> Option<f64> {
        self.base.to_real().filter(|b| b.abs() < 1e300).map(|b| b + self.off)
    }

    /// Offset of `self` from `anchor` when it is resolvable in doubles.
    fn offset_from(&self, anchor: &Tower) -> Option<f64> {
        if self.base == *anchor {
            return Some(self.off);
        }
        match (self.base.to_real(), anchor.to_real()) {
            (Some(b), Some(a)) if b.abs() < 1e300 && a.abs() < 1e300 => Some((b - a) + self.off),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Side {
    /// Pending gates ignored: an underestimate valid for every later choice of ε.
    Lower,
    /// Pending gates closed (ε = 0): an overestimate valid for every later choice.
    Upper,
}

fn nonneg(t: Tower) -> Tower {
    if t.sign() < 0 {
        Tower::zero()
    } else {
        t
    }
}

/// `∫_{s1}^{s2} ds / sqrt(s² + ε²)` from `q = −ln ε`, cancellation-free.
fn gate_integral(s1: f64, s2: f64, q: &Tower) -> Result<Tower> {
    debug_assert!(s1 <= s2);
    let eps = q.to_real().map(|q| (-q).exp()).unwrap_or(0.0);
    let tail = |s: f64| {
        let r = eps / s;
        (1.0 + (1.0 + r * r).sqrt()).ln()
    };
    // asinh(|s|/ε) = q + ln|s| + ln(1 + sqrt(1 + (ε/s)²))
    let full = |s: f64| q.add_log(s.abs().ln() + tail(s));
    if s1 < 0.0 && s2 > 0.0 {
        return Ok(full(s1).add(&full(s2)));
    }
    let (near, far) = if s2 <= 0.0 { (s2.abs(), s1.abs()) } else { (s1, s2) };
    if far == 0.0 {
        return Ok(Tower::zero());
    }
    if near == 0.0 {
        return Ok(full(far));
    }
    Tower::from_real((far / near).ln() + tail(far) - tail(near))
}

struct GateView {
    r: Tower,
    /// `−ln ε`; `None` for a closed pending gate on the upper side.
    q: Option<Tower>,
    c: f64,
}

fn gates_for(tract: &RectTract, side: Side) -> Vec<GateView> {
    let mut out = Vec::new();
    for (k, r) in tract.r().iter().enumerate() {
        match tract.log_eps().get(k) {
            Some(l) => {
                let e = tract.eps(k).unwrap();
                out.push(GateView { r: *r, q: Some(l.neg()), c: (THIRD_PI * THIRD_PI - e * e).sqrt() });
            }
            None if side == Side::Upper => out.push(GateView { r: *r, q: None, c: THIRD_PI }),
            None => {}
        }
    }
    out
}

/// Length `x − (anchor + a_off)` as a tower, for `x` to the right of it.
fn length(x: &Abscissa, anchor: &Tower, a_off: f64) -> Result<Tower> {
    match x.offset_from(anchor) {
        Some(d) => Tower::from_real((d - a_off).max(0.0)),
        None => {
            let a = anchor.to_real().map(|a| a + a_off);
            match a {
                Some(a) => Ok(x.base.add_log(x.off - a)),
                None => Ok(x.base),
            }
        }
    }
}

/// Closed-form `J(x)`. Requires separated gate windows.
fn j_closed(tract: &RectTract, x: &Abscissa, side: Side) -> Result<Tower> {
    let one = Tower::one();
    if x.value().lt(&one) {
        return Err(HairError::Precondition("bound functions need u >= 1".into()));
    }
    if let Some(p) = x.to_plain() {
        if p <= LEFT_SWITCH {
            return Tower::from_real(((p - 0.5) / 0.5).ln().max(0.0));
        }
    }
    if tract.kind == TractKind::HalfStrip {
        let flat = length(x, &Tower::from_real(LEFT_SWITCH)?, 0.0)?.scale(FLAT);
        return Ok(flat.add_log((THIRD_PI / 0.5).ln()));
    }
    let gates = gates_for(tract, side);
    let mut j = Tower::from_real((THIRD_PI / 0.5).ln())?;
    let mut cur = (Tower::from_real(LEFT_SWITCH)?, 0.0);
    for (idx, g) in gates.iter().enumerate() {
        let prev_end = cur.0.to_real().map(|b| b + cur.1);
        if let Some(pe) = prev_end {
            if g.r.to_real().is_some_and(|r| r - g.c < pe) {
                return Err(HairError::Precondition(format!("gate window {idx} overlaps the previous feature")));
            }
        }
        let start_off = x.offset_from(&g.r).map(|d| d + g.c);
        let before_window = match start_off {
            Some(d) => d <= 0.0,
            None => x.base.lt(&g.r),
        };
        if before_window {
            let flat = length(x, &cur.0, cur.1)?.scale(FLAT);
            return Ok(j.add(&nonneg(flat)));
        }
        let stretch = length(&Abscissa::anchored(g.r, -g.c), &cur.0, cur.1)?;
        j = j.add(&stretch.scale(FLAT));
        let s = x.offset_from(&g.r);
        let s_end = match s {
            Some(s) if s < g.c => s,
            _ => g.c,
        };
        let piece = match &g.q {
            Some(q) => gate_integral(-g.c, s_end, q)?,
            None => {
                if s_end >= 0.0 {
                    return Err(HairError::Precondition("integral crosses a closed gate".into()));
                }
                Tower::from_real((g.c / -s_end).ln())?
            }
        };
        j = j.add(&piece);
        if s_end < g.c {
            return Ok(j);
        }
        cur = (g.r, g.c);
    }
    let flat = length(x, &cur.0, cur.1)?.scale(FLAT);
    Ok(j.add(&nonneg(flat)))
}

/// Quadrature of `1/dist` along `[1, x]` with forced breakpoints at every
/// `r_k`, `r_k ± 1`, `r_k ± c_k` and `1/2 + π/3`; sinh substitution across gates.
fn j_quadrature(tract: &RectTract, x: f64, tol: f64) -> Result<(f64, f64)> {
    let rs = tract.plain_r();
    let mut cuts = vec![1.0, x];
    if LEFT_SWITCH < x {
        cuts.push(LEFT_SWITCH);
    }
    let mut windows = Vec::new();
    if tract.kind == TractKind::Staged {
        for (k, &r) in rs.iter().enumerate() {
            if r - 2.0 > x {
                break;
            }
            let e = tract.eps(k);
            let c = (THIRD_PI * THIRD_PI - e.unwrap_or(0.0).powi(2)).sqrt();
            for p in [r - 1.0, r - c, r, r + c, r + 1.0] {
                if p > 1.0 && p < x {
                    cuts.push(p);
                }
            }
            windows.push((r, c, e));
        }
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let (mut total, mut err) = (0.0, 0.0);
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        let mid = 0.5 * (a + b);
        let gate = windows.iter().find(|(r, c, _)| mid > r - c && mid < r + c);
        let q = match gate {
            Some(&(r, _, Some(e))) if e > 0.0 => {
                let (ta, tb) = ((a - r) / e, (b - r) / e);
                let f = |tau: f64| {
                    let s = e * tau.sinh();
                    e * tau.cosh() / boundary_distance_local(tract, r, s, 0.0)
                };
                integrate(f, ta.asinh(), tb.asinh(), tol)?
            }
            Some(&(r, _, _)) => {
                if a < r && b > r {
                    return Err(HairError::Precondition("integral crosses a closed gate".into()));
                }
                let sg = if b <= r { -1.0 } else { 1.0 };
                let (la, lb) = ((a - r).abs().ln(), (b - r).abs().ln());
                let f = |sig: f64| {
                    let s = sg * sig.exp();
                    s.abs() / boundary_distance_local(tract, r, s, 0.0)
                };
                let (lo, hi) = if la < lb { (la, lb) } else { (lb, la) };
                integrate(f, lo, hi, tol)?
            }
            None => integrate(|t| 1.0 / boundary_distance_local(tract, t, 0.0, 0.0), a, b, tol)?,
        };
        total += q.value;
        err += q.error;
    }
    Ok((total, err))
}

fn geometric_reach(tract: &RectTract, x: &Abscissa) -> Option<f64> {
    let p = x.to_plain().filter(|p| *p <= 10.0 * GEOMETRIC_HORIZON)?;
    for (k, r) in tract.r().iter().enumerate() {
        let r = match r.to_real() {
            Some(r) if r <= GEOMETRIC_HORIZON => r,
            Some(r) if r - 2.0 > p => break,
            None => break,
            _ => return None,
        };
        if r - 2.0 > p {
            break;
        }
        if let Some(l) = tract.log_eps().get(k) {
            if !l.to_real().is_some_and(|l| l > -700.0) {
                return None;
            }
        }
    }
    Some(p)
}

/// `J` interval, bounds and provenance at one abscissa.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundEval {
    pub j_lo: Tower,
    pub j_hi: Tower,
    pub pair: Bounds,
    pub geometry_verified: bool,
    pub quad_error: f64,
}

impl BoundEval {
    /// `ln b_lo = J_lo / 2`.
    pub fn ln_b_lo(&self) -> Tower {
        half(&self.j_lo)
    }

    /// `ln B_hi = 2 J_hi`.
    pub fn ln_b_hi(&self) -> Tower {
        self.j_hi.scale(2.0)
    }
}

fn half(t: &Tower) -> Tower {
    if t.sign() == 0 {
        *t
    } else {
        t.scale(0.5)
    }
}

fn widen(t: &Tower, frac: f64, up: bool) -> Tower {
    if t.sign() == 0 {
        return *t;
    }
    match t.to_real() {
        Some(v) if v < 1e300 => {
            let w = v * frac;
            Tower::from_real(if up { v + w } else { (v - w).max(0.0) }).unwrap()
        }
        _ => {
            if up {
                t.scale(1.0 + frac)
            } else {
                t.scale(1.0 - frac)
            }
        }
    }
}

/// Evaluate the bound functions at `x`. `widening` multiplies the error
/// allowance (`BUILD_WIDENING` while building, `VERIFY_WIDENING` when re-checking).
pub fn bound_eval(tract: &RectTract, x: &Abscissa, quad_tol: f64, widening: f64) -> Result<BoundEval> {
    let c_lo = j_closed(tract, x, Side::Lower);
    let c_hi = j_closed(tract, x, Side::Upper);
    let frac = quad_tol * widening;
    let geo = geometric_reach(tract, x);
    let (j_lo, j_hi, verified, qerr) = match geo {
        Some(p) => {
            let (jq, e) = j_quadrature(tract, p, 0.1 * quad_tol)?;
            let w = (e.max(quad_tol * jq.abs())) * widening;
            let mut lo = Tower::from_real((jq - w).max(0.0))?;
            let mut hi = Tower::from_real(jq + w)?;
            let mut verified = true;
            if let (Ok(a), Ok(b)) = (&c_lo, &c_hi) {
                lo = if a.lt(&lo) { widen(a, frac, false) } else { lo };
                hi = if b.gt(&hi) { widen(b, frac, true) } else { hi };
                let cb = b.to_real().unwrap_or(f64::INFINITY);
                verified = (cb - jq).abs() <= w + frac * cb;
            }
            (lo, hi, verified, e)
        }
        None => {
            let (a, b) = (c_lo?, c_hi?);
            (widen(&a, frac, false), widen(&b, frac, true), false, 0.0)
        }
    };
    let pair = Bounds::new(half(&j_lo).exp(), j_hi.scale(2.0).exp().max(half(&j_lo).exp()))?;
    Ok(BoundEval { j_lo, j_hi, pair, geometry_verified: verified, quad_error: qerr })
}

/// `b(u) <= F(u) <= B(u)` as a tower pair.
pub fn bound_functions(tract: &RectTract, u: f64, quad_tol: f64) -> Result<Bounds> {
    if !(u >= 1.0) {
        return Err(HairError::Precondition("bound functions need u >= 1".into()));
    }
    Ok(bound_eval(tract, &Abscissa::plain(u), quad_tol, 1.0)?.pair)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &Tower, b: f64, rel: f64) -> bool {
        let a = a.to_real().unwrap();
        (a - b).abs() <= rel * b.abs().max(1e-300)
    }

    #[test]
    fn empty_integral() {
        let t = RectTract::from_plain(&[4.0], &[-5.0]).unwrap();
        let b = bound_functions(&t, 1.0, 1e-6).unwrap();
        assert_eq!(b.lo.to_real(), Some(1.0));
        assert_eq!(b.hi.to_real(), Some(1.0));
    }

    #[test]
    fn constant_distance_segment() {
        let t = RectTract::half_strip();
        let a = bound_eval(&t, &Abscissa::plain(2.0), 1e-9, 1.0).unwrap();
        let b = bound_eval(&t, &Abscissa::plain(2.0 + THIRD_PI), 1e-9, 1.0).unwrap();
        let dj = b.j_hi.to_real().unwrap() - a.j_hi.to_real().unwrap();
        assert!((dj - 1.0).abs() < 1e-7);
        assert!(((dj / 2.0).exp() - 0.5f64.exp()).abs() < 1e-6);
        assert!(((2.0 * dj).exp() - 2f64.exp()).abs() < 1e-6);
    }

    #[test]
    fn closed_form_matches_quadrature() {
        let t = RectTract::from_plain(&[4.0, 9.0], &[-20.0, -3.0]).unwrap();
        for u in [1.2, 1.9, 3.5, 4.0, 4.7, 6.0, 8.5, 9.0, 9.9, 12.0] {
            let c = j_closed(&t, &Abscissa::plain(u), Side::Upper).unwrap().to_real().unwrap();
            let (q, _) = j_quadrature(&t, u, 1e-10).unwrap();
            assert!((c - q).abs() < 1e-7 * c.max(1.0), "u = {u}: {c} vs {q}");
        }
    }

    #[test]
    fn pending_gate_sides() {
        let t = RectTract::from_plain(&[4.0, 9.0], &[-20.0]).unwrap();
        let x = Abscissa::plain(8.2);
        let lo = j_closed(&t, &x, Side::Lower).unwrap().to_real().unwrap();
        let hi = j_closed(&t, &x, Side::Upper).unwrap().to_real().unwrap();
        assert!(lo < hi);
        assert!((hi - lo - ((THIRD_PI / 0.8).ln() - FLAT * (THIRD_PI - 0.8))).abs() < 1e-12);
        assert!(j_closed(&t, &Abscissa::plain(9.5), Side::Upper).is_err());
        let e = bound_eval(&t, &x, 1e-6, 1.0).unwrap();
        assert!(e.geometry_verified);
        assert!(!e.pair.hi.lt(&e.pair.lo));
    }

    #[test]
    fn anchored_offsets_at_huge_gate() {
        let r1 = Tower::from_real(1e147).unwrap();
        let r0 = Tower::from_real(4.0).unwrap();
        let t = RectTract::new(vec![r0, r1], vec![Tower::from_real(-51.0).unwrap(), Tower::from_real(-1.2e148).unwrap()]).unwrap();
        let before = bound_eval(&t, &Abscissa::anchored(r1, -1.0), 1e-6, 1.0).unwrap();
        let after = bound_eval(&t, &Abscissa::anchored(r1, 1.0), 1e-6, 1.0).unwrap();
        assert!(!before.geometry_verified);
        let jb = before.j_hi.to_real().unwrap();
        let ja = after.j_lo.to_real().unwrap();
        // crossing the gate adds about 2 * 1.2e148
        assert!((ja - jb) / 2.4e148 > 0.99);
        // flat stretch dominates before the gate
        assert!((jb / (FLAT * 1e147) - 1.0).abs() < 1e-5);
    }

    #[test]
    fn tower_abscissa_beyond_doubles() {
        let t = RectTract::from_plain(&[4.0], &[-51.0]).unwrap();
        let x = Abscissa::tower(Tower::from_log(1e10));
        let e = bound_eval(&t, &x, 1e-6, 1.0).unwrap();
        // J ~ (3/π) x, so ln J ~ 1e10
        assert!(close(&e.j_hi.log().unwrap(), 1e10 + FLAT.ln(), 1e-12));
    }

    #[test]
    fn gate_integral_forms() {
        let q = Tower::from_real(10.0).unwrap();
        let e = (-10f64).exp();
        let direct = |a: f64, b: f64| (b / e).asinh() - (a / e).asinh();
        for (a, b) in [(-1.0, 1.0), (-1.0, -0.5), (0.25, 1.0), (0.0, 1.0), (-1.0, 0.0)] {
            let g = gate_integral(a, b, &q).unwrap().to_real().unwrap();
            assert!((g - direct(a, b)).abs() < 1e-10, "{a} {b}");
        }
    }
}
