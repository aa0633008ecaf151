use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{HairError, Result};
use crate::Tower;

pub const THIRD_PI: f64 = PI / 3.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TractKind {
    /// Corridors with walls at |v| = π/3, gates at `r_k`, chambers after each gate.
    #[default]
    Staged,
    /// `{u > 1/2, |v| < π/3}`: the control with one-component cross-cuts.
    HalfStrip,
}

/// The rectilinear tract for a finite sequence `r_k`, `ε_k`.
///
/// Gates with index `>= log_eps.len()` are pending: their `ε` has not been
/// chosen yet and they are closed. Beyond the last gate the final corridor
/// runs to infinity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TractRepr")]
pub struct RectTract {
    #[serde(default)]
    pub kind: TractKind,
    r: Vec<Tower>,
    log_eps: Vec<Tower>,
    /// Exact doubles for the leading representable `r_k`.
    #[serde(default)]
    r_plain: Vec<f64>,
}

#[derive(Deserialize)]
struct TractRepr {
    #[serde(default)]
    kind: TractKind,
    r: Vec<Tower>,
    log_eps: Vec<Tower>,
    #[serde(default)]
    r_plain: Vec<f64>,
}

impl TryFrom<TractRepr> for RectTract {
    type Error = HairError;
    fn try_from(t: TractRepr) -> Result<Self> {
        if t.kind == TractKind::HalfStrip {
            return Ok(RectTract::half_strip());
        }
        let plain = if t.r_plain.is_empty() { None } else { Some(t.r_plain) };
        RectTract::build(t.r, plain, t.log_eps)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Lane {
    Bottom,
    Middle,
    Top,
}

impl Lane {
    pub const ALL: [Lane; 3] = [Lane::Bottom, Lane::Middle, Lane::Top];

    pub fn v_range(self) -> (f64, f64) {
        match self {
            Lane::Bottom => (-PI, -THIRD_PI),
            Lane::Middle => (-THIRD_PI, THIRD_PI),
            Lane::Top => (THIRD_PI, PI),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Piece {
    Channel { corridor: usize, lane: Lane },
    Chamber(usize),
    Sink,
}

/// Open rectangle of the decomposition.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rect {
    pub piece: Piece,
    pub u_lo: f64,
    pub u_hi: f64,
    pub v_lo: f64,
    pub v_hi: f64,
}

/// Open vertical segment `{u} × (v_lo, v_hi)` joining two pieces, `left` on the smaller-u side.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Opening {
    pub left: Piece,
    pub right: Piece,
    pub u: f64,
    pub v_lo: f64,
    pub v_hi: f64,
    /// Index of the gate when this is the middle opening at `r_k`.
    pub gate: Option<usize>,
}

impl RectTract {
    pub fn new(r: Vec<Tower>, log_eps: Vec<Tower>) -> Result<Self> {
        Self::build(r, None, log_eps)
    }

    /// Like `new`, with exact doubles for the first `plain.len()` gates.
    pub fn build(r: Vec<Tower>, plain: Option<Vec<f64>>, log_eps: Vec<Tower>) -> Result<Self> {
        let r_plain = match plain {
            Some(p) => {
                if p.len() > r.len() || p.iter().zip(&r).any(|(x, t)| Tower::from_real(*x).map_or(true, |y| y.cmp_tol(t).is_ne())) {
                    return Err(HairError::Precondition("plain r disagrees with towers".into()));
                }
                p
            }
            None => r.iter().map_while(|t| t.to_real().filter(|x| *x < 1e300)).collect(),
        };
        if log_eps.len() > r.len() {
            return Err(HairError::Precondition("more eps than gates".into()));
        }
        if let Some(r0) = r.first() {
            if !r0.gt(&Tower::one()) {
                return Err(HairError::Precondition("r_0 must exceed 1".into()));
            }
        }
        for w in r.windows(2) {
            if !w[1].gt(&w[0].add_log(1.0)) {
                return Err(HairError::Precondition(format!("r not separated: {} then {}", w[0], w[1])));
            }
        }
        let cap = Tower::from_real(THIRD_PI.ln()).unwrap();
        if let Some(bad) = log_eps.iter().find(|l| !l.lt(&cap)) {
            return Err(HairError::Precondition(format!("ln eps {bad} not below ln(pi/3)")));
        }
        Ok(RectTract { kind: TractKind::Staged, r, log_eps, r_plain })
    }

    pub fn from_plain(r: &[f64], log_eps: &[f64]) -> Result<Self> {
        let t = |xs: &[f64]| xs.iter().map(|&x| Tower::from_real(x)).collect::<Result<Vec<_>>>();
        Self::build(t(r)?, Some(r.to_vec()), t(log_eps)?)
    }

    pub fn half_strip() -> Self {
        RectTract { kind: TractKind::HalfStrip, r: vec![], log_eps: vec![], r_plain: vec![] }
    }

    pub fn r(&self) -> &[Tower] {
        &self.r
    }

    pub fn log_eps(&self) -> &[Tower] {
        &self.log_eps
    }

    pub fn gates(&self) -> usize {
        self.r.len()
    }

    pub fn chosen(&self) -> usize {
        self.log_eps.len()
    }

    /// Gate positions that fit in a double, in order.
    pub fn plain_r(&self) -> Vec<f64> {
        self.r_plain.clone()
    }

    /// `ε_k` as a double (0 when it underflows); `None` for a pending gate.
    pub fn eps(&self, k: usize) -> Option<f64> {
        self.log_eps.get(k).map(|l| l.to_real().map(f64::exp).unwrap_or(0.0))
    }

    /// Same tract with the gates from `k` on pending.
    pub fn truncated_eps(&self, k: usize) -> Self {
        let mut t = self.clone();
        t.log_eps.truncate(k);
        t
    }

    pub fn with_eps(&self, k: usize, log_eps: Tower) -> Result<Self> {
        let mut l = self.log_eps.clone();
        l.truncate(k);
        if l.len() != k {
            return Err(HairError::Precondition("earlier eps missing".into()));
        }
        l.push(log_eps);
        Self::build(self.r.clone(), Some(self.r_plain.clone()), l)
    }

    /// Append a pending gate; `exact` is its double value when known.
    pub fn with_gate(&self, r: Tower, exact: Option<f64>) -> Result<Self> {
        let mut rs = self.r.clone();
        rs.push(r);
        let mut p = self.r_plain.clone();
        if let (Some(x), true) = (exact, p.len() + 1 == rs.len()) {
            p.push(x);
        }
        Self::build(rs, Some(p), self.log_eps.clone())
    }

    /// `|v| < ε_k`, compared in log scale.
    pub fn gate_open(&self, k: usize, v: f64) -> bool {
        match self.log_eps.get(k) {
            None => false,
            Some(l) => v == 0.0 || Tower::from_real(v.abs().ln()).unwrap().lt(l),
        }
    }

    /// Membership from the corridor, gate and chamber rules directly.
    pub fn contains(&self, u: f64, v: f64) -> bool {
        if self.kind == TractKind::HalfStrip {
            return u > 0.5 && v.abs() < THIRD_PI;
        }
        if !(u > 0.5 && v.abs() < PI) {
            return false;
        }
        for (k, &rk) in self.plain_r().iter().enumerate() {
            if u == rk {
                return v.abs() > THIRD_PI || self.gate_open(k, v);
            }
            if u == rk + 1.0 {
                return v.abs() < THIRD_PI;
            }
            if u > rk && u < rk + 1.0 {
                return true;
            }
            if u < rk {
                return v.abs() != THIRD_PI;
            }
        }
        v.abs() != THIRD_PI
    }

    pub fn base_point(&self) -> (f64, f64) {
        (0.5, 0.0)
    }

    /// Number of corridors (the last one unbounded).
    pub fn corridors(&self) -> usize {
        self.plain_r().len() + 1
    }

    pub fn corridor_span(&self, j: usize) -> (f64, f64) {
        let r = self.plain_r();
        let lo = if j == 0 { 0.5 } else { r[j - 1] + 1.0 };
        let hi = r.get(j).copied().unwrap_or(f64::INFINITY);
        (lo, hi)
    }

    pub fn rectangles(&self) -> Vec<Rect> {
        if self.kind == TractKind::HalfStrip {
            return vec![Rect {
                piece: Piece::Channel { corridor: 0, lane: Lane::Middle },
                u_lo: 0.5,
                u_hi: f64::INFINITY,
                v_lo: -THIRD_PI,
                v_hi: THIRD_PI,
            }];
        }
        let r = self.plain_r();
        let mut out = Vec::new();
        for j in 0..=r.len() {
            let (lo, hi) = self.corridor_span(j);
            for lane in Lane::ALL {
                let (v_lo, v_hi) = lane.v_range();
                out.push(Rect { piece: Piece::Channel { corridor: j, lane }, u_lo: lo, u_hi: hi, v_lo, v_hi });
            }
            if j < r.len() {
                out.push(Rect { piece: Piece::Chamber(j), u_lo: r[j], u_hi: r[j] + 1.0, v_lo: -PI, v_hi: PI });
            }
        }
        out
    }

    pub fn openings(&self) -> Vec<Opening> {
        let mut out = Vec::new();
        let sink = |piece: Piece, v_lo, v_hi| Opening { left: piece, right: Piece::Sink, u: f64::INFINITY, v_lo, v_hi, gate: None };
        if self.kind == TractKind::HalfStrip {
            out.push(sink(Piece::Channel { corridor: 0, lane: Lane::Middle }, -THIRD_PI, THIRD_PI));
            return out;
        }
        let r = self.plain_r();
        for (j, &rj) in r.iter().enumerate() {
            let ch = |lane| Piece::Channel { corridor: j, lane };
            let (b, t) = (Lane::Bottom.v_range(), Lane::Top.v_range());
            out.push(Opening { left: ch(Lane::Bottom), right: Piece::Chamber(j), u: rj, v_lo: b.0, v_hi: b.1, gate: None });
            out.push(Opening { left: ch(Lane::Top), right: Piece::Chamber(j), u: rj, v_lo: t.0, v_hi: t.1, gate: None });
            if let Some(e) = self.eps(j) {
                out.push(Opening { left: ch(Lane::Middle), right: Piece::Chamber(j), u: rj, v_lo: -e, v_hi: e, gate: Some(j) });
            }
            out.push(Opening {
                left: Piece::Chamber(j),
                right: Piece::Channel { corridor: j + 1, lane: Lane::Middle },
                u: rj + 1.0,
                v_lo: -THIRD_PI,
                v_hi: THIRD_PI,
                gate: None,
            });
        }
        for lane in Lane::ALL {
            let (a, b) = lane.v_range();
            out.push(sink(Piece::Channel { corridor: r.len(), lane }, a, b));
        }
        out
    }

    fn on_opening(&self, o: &Opening, u: f64, v: f64) -> bool {
        if u != o.u {
            return false;
        }
        match o.gate {
            Some(k) => self.gate_open(k, v),
            None => v > o.v_lo && v < o.v_hi,
        }
    }

    /// Piece containing `(u, v)`; points on an opening belong to its left piece.
    pub fn piece_at(&self, u: f64, v: f64) -> Option<Piece> {
        for rect in self.rectangles() {
            if u > rect.u_lo && u < rect.u_hi && v > rect.v_lo && v < rect.v_hi {
                return Some(rect.piece);
            }
        }
        self.openings().iter().find(|o| self.on_opening(o, u, v)).map(|o| o.left)
    }

    /// Membership through the rectangle decomposition.
    pub fn contains_by_pieces(&self, u: f64, v: f64) -> bool {
        self.piece_at(u, v).is_some()
    }

    pub fn rect_of(&self, piece: Piece) -> Option<Rect> {
        self.rectangles().into_iter().find(|r| r.piece == piece)
    }
}
