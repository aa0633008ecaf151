//! Inductive construction of `r_k`, `ε_k`, `u_k` with bound-function certificates.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::bounds::{bound_eval, Abscissa, BoundEval};
use super::geometry::RectTract;
use crate::error::{HairError, Result};
use crate::Tower;

/// Error allowance used while choosing the sequences; re-verification uses less,
/// so every certificate keeps slack under a tenfold looser quadrature tolerance.
pub const BUILD_WIDENING: f64 = 100.0;
pub const VERIFY_WIDENING: f64 = 10.0;

/// Magnitudes below this are stored as plain numbers.
pub const PLAIN_CUTOFF: f64 = 1e15;

/// A real that is a plain number when small enough and a tower otherwise.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Magnitude {
    Plain(f64),
    Tower(Tower),
}

impl Magnitude {
    pub fn from_tower(t: Tower, cutoff: f64) -> Self {
        match t.to_real() {
            Some(v) if v.abs() < cutoff => Magnitude::Plain(v),
            _ => Magnitude::Tower(t),
        }
    }

    pub fn tower(&self) -> Tower {
        match self {
            Magnitude::Plain(v) => Tower::from_real(*v).expect("finite plain magnitude"),
            Magnitude::Tower(t) => *t,
        }
    }

    pub fn plain(&self) -> Option<f64> {
        match self {
            Magnitude::Plain(v) => Some(*v),
            Magnitude::Tower(t) => t.to_real().filter(|v| v.abs() < 1e300),
        }
    }

    pub fn abscissa(&self) -> Abscissa {
        match self {
            Magnitude::Plain(v) => Abscissa::plain(*v),
            Magnitude::Tower(t) => Abscissa::tower(*t),
        }
    }
}

impl std::fmt::Display for Magnitude {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Magnitude::Plain(v) => write!(f, "{v}"),
            Magnitude::Tower(t) => write!(f, "{t}"),
        }
    }
}

/// `t + c` rounded up: an absorbed positive constant bumps the result.
pub(crate) fn upper(t: &Tower, c: f64) -> Tower {
    if c > 0.0 {
        t.add_log_strict(c)
    } else {
        t.add_log(c)
    }
}

/// `t + c` rounded down by the recorded absorption error.
pub(crate) fn lower(t: &Tower, c: f64) -> Tower {
    let r = t.add_log_checked(c);
    if c < 0.0 && r.absorbed && t.sign() > 0 {
        let v = r.value;
        Tower::from_parts(1, v.height(), v.mantissa() - r.mantissa_error).unwrap_or(v)
    } else {
        r.value
    }
}

/// Sum of non-negative towers rounded up.
pub(crate) fn sum_upper(a: &Tower, b: &Tower) -> Tower {
    let s = a.add(b);
    if a.sign() != 0 && b.sign() != 0 && !s.gt(&a.max(*b)) {
        s.bump()
    } else {
        s
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Certified {
    #[serde(rename = "A")]
    pub a: Vec<bool>,
    #[serde(rename = "B")]
    pub b: Vec<bool>,
    #[serde(rename = "C")]
    pub c: Vec<bool>,
}

/// Log-scale bound values recorded while building stage `k`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub k: usize,
    #[serde(rename = "logB_at")]
    pub log_upper_at: BTreeMap<String, Magnitude>,
    #[serde(rename = "logb_at")]
    pub log_lower_at: BTreeMap<String, Magnitude>,
    pub geometry_verified: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SequencePlan {
    pub version: u32,
    pub r: Vec<Magnitude>,
    pub log_eps: Vec<Magnitude>,
    pub u: Vec<Magnitude>,
    pub certified: Certified,
    pub quad_tol: f64,
    pub deltas: Vec<f64>,
    pub etas: Vec<f64>,
    pub thetas: Vec<f64>,
    #[serde(default)]
    pub stages: Vec<StageRecord>,
}

impl SequencePlan {
    pub fn stage_count(&self) -> usize {
        self.log_eps.len()
    }

    fn tract_with(&self, gates: usize) -> Result<RectTract> {
        let r: Vec<Tower> = self.r[..gates].iter().map(Magnitude::tower).collect();
        let plain: Vec<f64> = self.r[..gates].iter().map_while(Magnitude::plain).collect();
        let eps = self.log_eps.iter().take(gates).map(Magnitude::tower).collect();
        RectTract::build(r, Some(plain), eps)
    }

    /// Tract with every chosen gate; the corridor after the last one is unbounded.
    pub fn tract(&self) -> Result<RectTract> {
        self.tract_with(self.log_eps.len())
    }

    /// Tract including the next gate, still pending.
    pub fn pending_tract(&self) -> Result<RectTract> {
        self.tract_with(self.r.len())
    }

    /// Same plan with `ε_k` multiplied by `e^{dlog}`, certificates cleared.
    pub fn perturb_eps(&self, k: usize, dlog: f64) -> Result<Self> {
        let l = self.log_eps.get(k).ok_or_else(|| HairError::Plan(format!("no eps_{k}")))?;
        let mut p = self.clone();
        p.log_eps[k] = Magnitude::from_tower(l.tower().add_log(dlog), 1e300);
        p.certified = Certified::default();
        Ok(p)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plan serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let p: SequencePlan = serde_json::from_str(s).map_err(|e| HairError::Plan(e.to_string()))?;
        if p.version != 1 {
            return Err(HairError::Plan(format!("unsupported version {}", p.version)));
        }
        if p.r.len() != p.log_eps.len() + 1 || p.u.len() != p.r.len() {
            return Err(HairError::Plan("inconsistent sequence lengths".into()));
        }
        Ok(p)
    }
}

fn pick(xs: &[f64], k: usize, name: &str) -> Result<f64> {
    match xs.get(k) {
        Some(&x) if x > 0.0 && x.is_finite() => Ok(x),
        Some(_) => Err(HairError::Precondition(format!("{name}_{k} must be positive"))),
        None => Err(HairError::Precondition(format!("{name} needs an entry for index {k}"))),
    }
}

/// `ln b(r_k + 1) > 12 r_k + ln(u_{k+1} + θ_k)` for a candidate `q = −ln ε_k`.
pub(crate) struct GateCheck {
    pub lhs: BoundEval,
    pub rhs: Tower,
}

impl GateCheck {
    pub fn holds(&self) -> bool {
        self.lhs.ln_b_lo().gt(&self.rhs)
    }
}

pub(crate) fn gate_rhs(r_k: &Tower, u_next: &Tower, theta: f64) -> Result<Tower> {
    let l = upper(u_next, theta).log()?;
    Ok(sum_upper(&r_k.scale(12.0), &l))
}

pub(crate) fn gate_check(tract: &RectTract, k: usize, q: &Tower, rhs: &Tower, tol: f64, widening: f64) -> Result<GateCheck> {
    let t = tract.with_eps(k, q.neg())?;
    let lhs = bound_eval(&t, &Abscissa::anchored(t.r()[k], 1.0), tol, widening)?;
    Ok(GateCheck { lhs, rhs: *rhs })
}

/// Smallest `q` (to relative precision 1e-10) passing the gate check, by doubling then bisection.
fn solve_gate(tract: &RectTract, k: usize, rhs: &Tower, tol: f64) -> Result<Tower> {
    let passes = |q: &Tower| -> Result<bool> { Ok(gate_check(tract, k, q, rhs, tol, BUILD_WIDENING)?.holds()) };
    if let Some(target) = rhs.to_real().filter(|v| *v < 1e290) {
        let (mut lo, mut hi) = (0.0f64, target.max(1.0));
        let mut doublings = 0;
        while !passes(&Tower::from_real(hi)?)? {
            lo = hi;
            hi *= 2.0;
            doublings += 1;
            if doublings > 64 || !hi.is_finite() {
                return Err(HairError::Bisection(-hi));
            }
        }
        while hi - lo > 1e-10 * hi {
            let mid = 0.5 * (lo + hi);
            if passes(&Tower::from_real(mid)?)? {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        return Tower::from_real(hi);
    }
    // crossing the gate contributes about 2q to J, hence about q to ln b
    let mut q = rhs.bump();
    for _ in 0..16 {
        if passes(&q)? {
            return Ok(q);
        }
        q = q.scale(2.0);
    }
    Err(HairError::Bisection(f64::NEG_INFINITY))
}

/// Build `stages` rounds of the construction. `deltas` needs `stages + 1`
/// entries, `etas` and `thetas` need `stages`.
pub fn build_sequences(deltas: &[f64], etas: &[f64], thetas: &[f64], stages: usize, quad_tol: f64) -> Result<SequencePlan> {
    if stages == 0 {
        return Err(HairError::Precondition("stages must be at least 1".into()));
    }
    if !(quad_tol > 0.0 && quad_tol < 0.01) {
        return Err(HairError::Precondition("quad_tol must lie in (0, 0.01)".into()));
    }
    let r0 = pick(deltas, 0, "delta")? + 3.0;
    let mut plan = SequencePlan {
        version: 1,
        r: vec![Magnitude::Plain(r0)],
        log_eps: vec![],
        u: vec![Magnitude::Plain(1.0)],
        certified: Certified::default(),
        quad_tol,
        deltas: deltas[..=stages.min(deltas.len() - 1)].to_vec(),
        etas: etas.iter().take(stages).copied().collect(),
        thetas: thetas.iter().take(stages).copied().collect(),
        stages: vec![],
    };
    for k in 0..stages {
        let (eta, theta, delta_next) = (pick(etas, k, "eta")?, pick(thetas, k, "theta")?, pick(deltas, k + 1, "delta")?);
        let mut rec = StageRecord { k, geometry_verified: true, ..Default::default() };
        let tract = plan.pending_tract()?;
        let r_k = plan.r[k].tower();

        let at_left = bound_eval(&tract, &Abscissa::anchored(r_k, -1.0), quad_tol, BUILD_WIDENING)?;
        rec.geometry_verified &= at_left.geometry_verified;
        rec.log_upper_at.insert(format!("r_{k}-1"), Magnitude::from_tower(at_left.ln_b_hi(), 1e300));
        let cand = upper(&r_k, 2.0).max(upper(&at_left.pair.hi, eta));
        let u_next = Magnitude::from_tower(upper(&cand, 1.0), PLAIN_CUTOFF);

        let rhs = gate_rhs(&r_k, &u_next.tower(), theta)?;
        let q = solve_gate(&tract, k, &rhs, quad_tol)?;
        let log_eps = Magnitude::from_tower(q.neg(), 1e300);
        let chosen = tract.with_eps(k, q.neg())?;
        let check = gate_check(&tract, k, &q, &rhs, quad_tol, 1.0)?;
        rec.geometry_verified &= check.lhs.geometry_verified;
        rec.log_lower_at.insert(format!("r_{k}+1"), Magnitude::from_tower(check.lhs.ln_b_lo(), 1e300));

        let at_u = bound_eval(&chosen, &u_next.abscissa(), quad_tol, BUILD_WIDENING)?;
        rec.geometry_verified &= at_u.geometry_verified;
        rec.log_upper_at.insert(format!("u_{}", k + 1), Magnitude::from_tower(at_u.ln_b_hi(), 1e300));
        let r_next = Magnitude::from_tower(upper(&at_u.pair.hi, 2.0 + delta_next), PLAIN_CUTOFF);

        plan.u.push(u_next);
        plan.log_eps.push(log_eps);
        plan.r.push(r_next);
        plan.stages.push(rec);
    }
    let report = super::verify::verify_plan(&plan, 0)?;
    plan.certified = report.certified;
    Ok(plan)
}

/// `δ = η = θ ≡ 1`.
pub fn build_unit_sequences(stages: usize, quad_tol: f64) -> Result<SequencePlan> {
    let ones = vec![1.0; stages + 1];
    build_sequences(&ones, &ones, &ones, stages, quad_tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding_directions() {
        let big = Tower::from_real(1e147).unwrap();
        assert!(upper(&big, 3.0).gt(&big));
        assert!(!lower(&big, -3.0).gt(&big));
        assert!(lower(&Tower::from_real(7.0).unwrap(), -3.0).lt(&Tower::from_real(4.0 + 1e-6).unwrap()));
        let small = Tower::from_real(5.0).unwrap();
        assert_eq!(upper(&small, 2.0).to_real().map(|v| (v - 7.0).abs() < 1e-12), Some(true));
        let huge = Tower::from_log(1e200);
        assert!(sum_upper(&huge, &huge.scale(0.5)).gt(&huge));
    }

    #[test]
    fn magnitude_json() {
        let m = Magnitude::from_tower(Tower::from_real(3.5).unwrap(), PLAIN_CUTOFF);
        assert_eq!(serde_json::to_string(&m).unwrap(), "3.5");
        let t = Magnitude::from_tower(Tower::from_log(1e20), PLAIN_CUTOFF);
        let s = serde_json::to_string(&t).unwrap();
        assert!(s.contains("height"));
        assert_eq!(serde_json::from_str::<Magnitude>(&s).unwrap(), t);
    }

    #[test]
    fn two_stage_plan() {
        let plan = build_unit_sequences(2, 1e-6).unwrap();
        assert_eq!(plan.r[0], Magnitude::Plain(4.0));
        let u1 = plan.u[1].plain().unwrap();
        assert!(u1 > 60.0 && u1 < 90.0, "{u1}");
        let le0 = plan.log_eps[0].plain().unwrap();
        assert!(le0 <= -48.0 && le0 > -60.0, "{le0}");
        let rep = super::super::verify::verify_plan(&plan, 6).unwrap();
        assert!(rep.holds, "{:?}", rep.failures().collect::<Vec<_>>());
        let loose = super::super::verify::verify_plan_with(&plan, 6, 1e-4, 1.0).unwrap();
        assert!(loose.holds);
        let bad = plan.perturb_eps(0, 1e6f64.ln()).unwrap();
        let rep = super::super::verify::verify_plan(&bad, 6).unwrap();
        let fails: Vec<_> = rep.failures().map(|r| r.name.clone()).collect();
        assert_eq!(fails.len(), 1, "{fails:?}");
        assert!(fails[0].starts_with("iii[0]"));
        let back = SequencePlan::from_json(&plan.to_json()).unwrap();
        assert_eq!(back, plan);
    }

    #[test]
    fn three_stage_plan() {
        let plan = build_unit_sequences(3, 1e-6).unwrap();
        let rep = super::super::verify::verify_plan(&plan, 6).unwrap();
        assert!(rep.holds, "{:?}", rep.failures().collect::<Vec<_>>());
        assert!(plan.r[3].plain().is_none());
    }
}
