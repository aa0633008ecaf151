//! Cross-cuts, gulfs and backtracking on the rectangle graph.

use std::collections::{BTreeMap, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::geometry::{Lane, Piece, RectTract};
use crate::error::{HairError, Result};
use crate::Complex;

/// Component of `{Re w = a} ∩ T`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossCut {
    pub a: f64,
    pub v_lo: f64,
    pub v_hi: f64,
    pub component_id: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Node {
    Whole(Piece),
    Left(Piece),
    Right(Piece),
}

struct CutGraph {
    adj: BTreeMap<Node, Vec<(Node, usize)>>,
    /// Edge ids that lie on `Re w = a`, by component id.
    cut_edges: Vec<usize>,
    cuts: Vec<CrossCut>,
    split: Vec<Piece>,
    a: f64,
}

impl CutGraph {
    fn new(tract: &RectTract, a: f64) -> Self {
        let rects = tract.rectangles();
        let split: Vec<Piece> = rects.iter().filter(|r| r.u_lo < a && a < r.u_hi).map(|r| r.piece).collect();
        let mut g = CutGraph { adj: BTreeMap::new(), cut_edges: vec![], cuts: vec![], split, a };
        let mut raw = Vec::new();
        let mut edge = 0;
        for o in tract.openings() {
            let (l, r) = (g.node(o.left, o.u), g.node(o.right, o.u));
            if o.u == a {
                raw.push((o.v_lo, o.v_hi, edge));
            }
            g.link(l, r, edge);
            edge += 1;
        }
        for rect in rects.iter().filter(|r| r.u_lo < a && a < r.u_hi) {
            raw.push((rect.v_lo, rect.v_hi, edge));
            g.link(Node::Left(rect.piece), Node::Right(rect.piece), edge);
            edge += 1;
        }
        raw.sort_by(|x, y| x.0.total_cmp(&y.0));
        for (id, (v_lo, v_hi, e)) in raw.into_iter().enumerate() {
            g.cuts.push(CrossCut { a, v_lo, v_hi, component_id: id });
            g.cut_edges.push(e);
        }
        g
    }

    fn node(&self, piece: Piece, u: f64) -> Node {
        if self.split.contains(&piece) {
            if u < self.a {
                Node::Left(piece)
            } else {
                Node::Right(piece)
            }
        } else {
            Node::Whole(piece)
        }
    }

    fn link(&mut self, x: Node, y: Node, e: usize) {
        self.adj.entry(x).or_default().push((y, e));
        self.adj.entry(y).or_default().push((x, e));
    }

    fn reachable(&self, from: Node, removed: Option<usize>, keep: impl Fn(Node) -> bool) -> Vec<Node> {
        let mut seen = vec![from];
        let mut queue = VecDeque::from([from]);
        while let Some(n) = queue.pop_front() {
            for &(m, e) in self.adj.get(&n).map(Vec::as_slice).unwrap_or(&[]) {
                if Some(e) == removed || !keep(m) || seen.contains(&m) {
                    continue;
                }
                seen.push(m);
                queue.push_back(m);
            }
        }
        seen
    }

    fn reaches_sink(&self, from: Node, removed: Option<usize>) -> bool {
        self.reachable(from, removed, |_| true).contains(&Node::Whole(Piece::Sink))
    }

    fn is_left(&self, n: Node, tract: &RectTract) -> bool {
        match n {
            Node::Left(_) => true,
            Node::Right(_) => false,
            Node::Whole(Piece::Sink) => false,
            Node::Whole(p) => tract.rect_of(p).is_some_and(|r| r.u_hi <= self.a),
        }
    }

    /// Cut component joined to `start` inside `{Re w < a}` that separates it from ∞.
    fn separating(&self, tract: &RectTract, start: Node) -> Option<usize> {
        let left = self.reachable(start, None, |n| self.is_left(n, tract));
        let mut found = None;
        for (id, &e) in self.cut_edges.iter().enumerate() {
            let touches = left.iter().any(|n| self.adj.get(n).is_some_and(|v| v.iter().any(|&(_, x)| x == e)));
            if touches && !self.reaches_sink(start, Some(e)) {
                if found.is_some() {
                    return None;
                }
                found = Some(id);
            }
        }
        found
    }
}

/// All components of `{Re w = a} ∩ T`, bottom to top.
pub fn cross_cuts(tract: &RectTract, a: f64) -> Vec<CrossCut> {
    CutGraph::new(tract, a).cuts
}

fn start_node(tract: &RectTract, g: &CutGraph, zeta: Complex) -> Result<Node> {
    let piece = tract.piece_at(zeta.re, zeta.im).ok_or(HairError::OutsideTract(zeta.re, zeta.im))?;
    Ok(g.node(piece, zeta.re))
}

fn base_node(tract: &RectTract, g: &CutGraph) -> Node {
    let (u, _) = tract.base_point();
    g.node(Piece::Channel { corridor: 0, lane: Lane::Middle }, u)
}

/// The cross-cut `L_{ζ,a}`.
pub fn locate(tract: &RectTract, zeta: Complex, a: f64) -> Result<CrossCut> {
    if !(a > zeta.re) {
        return Err(HairError::Precondition(format!("cut at {a} not right of {}", zeta.re)));
    }
    let g = CutGraph::new(tract, a);
    let s = start_node(tract, &g, zeta)?;
    let id = g
        .separating(tract, s)
        .ok_or_else(|| HairError::Precondition(format!("no unique separating cut at {a}")))?;
    Ok(g.cuts[id])
}

/// `L_{p,a}` for the base point `p = 1/2` on the centre channel.
pub fn locate_base(tract: &RectTract, a: f64) -> Result<CrossCut> {
    let g = CutGraph::new(tract, a);
    let id = g
        .separating(tract, base_node(tract, &g))
        .ok_or_else(|| HairError::Precondition(format!("no unique separating cut at {a}")))?;
    Ok(g.cuts[id])
}

/// Does `cut` leave `p` and ∞ in one component?
pub fn misses_base(tract: &RectTract, cut: &CrossCut) -> bool {
    let g = CutGraph::new(tract, cut.a);
    g.reaches_sink(base_node(tract, &g), Some(g.cut_edges[cut.component_id]))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GulfWitness {
    pub found: bool,
    pub a: f64,
    pub cut: Option<CrossCut>,
}

/// Grid step in `a` for the gulf search.
pub const GULF_STEP: f64 = 0.25;

/// Search `a = Re ζ + 0.25 j <= a_max` for a cut `L_{ζ,a}` not separating `p` from ∞.
pub fn gulf_witness(tract: &RectTract, zeta: Complex, a_max: f64) -> Result<GulfWitness> {
    if !tract.contains(zeta.re, zeta.im) {
        return Err(HairError::OutsideTract(zeta.re, zeta.im));
    }
    if zeta.re < 1.0 {
        return Err(HairError::Precondition("gulf search needs Re ζ >= 1".into()));
    }
    let mut j = 1;
    loop {
        let a = zeta.re + GULF_STEP * j as f64;
        if a > a_max {
            return Ok(GulfWitness { found: false, a: a_max, cut: None });
        }
        let cut = locate(tract, zeta, a)?;
        if misses_base(tract, &cut) {
            return Ok(GulfWitness { found: true, a, cut: Some(cut) });
        }
        j += 1;
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlopeReport {
    pub alpha: f64,
    pub beta: f64,
    pub samples: usize,
    pub violations: usize,
}

/// `(α, β) = (1, 2π)`, checked on sampled pairs of tract points.
pub fn slope_constants(tract: &RectTract) -> SlopeReport {
    let (alpha, beta) = (1.0, std::f64::consts::TAU);
    let mut rng = ChaCha8Rng::seed_from_u64(0x51_09e);
    let u_max = tract.plain_r().last().map_or(20.0, |r| (r + 5.0).min(1e6));
    let point = |rng: &mut ChaCha8Rng| loop {
        let (u, v) = (rng.gen_range(0.5..u_max), rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI));
        if tract.contains(u, v) {
            return (u, v);
        }
    };
    let samples = 10_000;
    let violations = (0..samples)
        .filter(|_| {
            let (p, q) = (point(&mut rng), point(&mut rng));
            (p.1 - q.1).abs() > alpha * p.0.max(q.0).max(0.0) + beta
        })
        .count();
    SlopeReport { alpha, beta, samples, violations }
}

/// `(Re w0 − min Re along path)^+`, minimised over rectangle paths to ∞.
pub fn backtrack_depth(tract: &RectTract, w0: Complex) -> Result<f64> {
    let start = tract.piece_at(w0.re, w0.im).ok_or(HairError::OutsideTract(w0.re, w0.im))?;
    let openings = tract.openings();
    let mut best: BTreeMap<Piece, f64> = BTreeMap::from([(start, w0.re)]);
    let mut queue = VecDeque::from([start]);
    while let Some(p) = queue.pop_front() {
        let here = best[&p];
        for o in &openings {
            let next = if o.left == p {
                o.right
            } else if o.right == p {
                o.left
            } else {
                continue;
            };
            let val = here.min(o.u);
            if best.get(&next).map_or(true, |&b| val > b) {
                best.insert(next, val);
                queue.push_back(next);
            }
        }
    }
    let reach = best.get(&Piece::Sink).ok_or_else(|| HairError::Precondition("∞ unreachable".into()))?;
    Ok((w0.re - reach).max(0.0))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityRow {
    pub d: f64,
    pub a: f64,
    pub passes: bool,
    pub mismatches: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub big_a: f64,
    pub rows: Vec<StabilityRow>,
    pub smallest_passing: Option<f64>,
}

/// For each `D`, whether every `ζ` with `Re ζ = A` has `L_{ζ,DA} = L_{p,DA}`.
pub fn verify_crosscut_stability(tract: &RectTract, big_a: f64, d_candidates: &[f64]) -> Result<StabilityReport> {
    let (pu, _) = tract.base_point();
    if !(big_a > pu.max(1.0)) {
        return Err(HairError::Precondition("A must exceed max(Re p, 1)".into()));
    }
    let vs: Vec<f64> = (-47..=47).map(|i| i as f64 * std::f64::consts::PI / 48.0).collect();
    let mut rows = Vec::new();
    for &d in d_candidates {
        let a = d * big_a;
        if !(a > big_a) {
            rows.push(StabilityRow { d, a, passes: false, mismatches: 0 });
            continue;
        }
        let base = locate_base(tract, a)?;
        let mut mismatches = 0;
        for &v in vs.iter().filter(|&&v| tract.contains(big_a, v)) {
            if locate(tract, Complex::new(big_a, v), a)? != base {
                mismatches += 1;
            }
        }
        rows.push(StabilityRow { d, a, passes: mismatches == 0, mismatches });
    }
    let smallest_passing = rows.iter().filter(|r| r.passes).map(|r| r.d).reduce(f64::min);
    Ok(StabilityReport { big_a, rows, smallest_passing })
}
