//! Interval re-verification of a sequence plan and the Ahlfors distortion check.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::bounds::{bound_eval, Abscissa, BoundEval};
use super::geometry::RectTract;
use super::sequences::{gate_rhs, lower, upper, Certified, Magnitude, SequencePlan, VERIFY_WIDENING};
use crate::error::{HairError, Result};
use crate::Tower;

/// One checked inequality `lhs < rhs`, passing when `rhs_lo > lhs_hi`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanRecord {
    pub name: String,
    pub lhs_lo: Magnitude,
    pub lhs_hi: Magnitude,
    pub rhs_lo: Magnitude,
    pub rhs_hi: Magnitude,
    pub verdict: bool,
}

impl PlanRecord {
    fn new(name: String, lhs: (Tower, Tower), rhs: (Tower, Tower)) -> Self {
        let m = |t: Tower| Magnitude::from_tower(t, 1e300);
        PlanRecord { name, verdict: rhs.0.gt(&lhs.1), lhs_lo: m(lhs.0), lhs_hi: m(lhs.1), rhs_lo: m(rhs.0), rhs_hi: m(rhs.1) }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanReport {
    pub version: u32,
    pub stages: usize,
    pub horizon: usize,
    pub quad_tol: f64,
    pub widening: f64,
    pub records: Vec<PlanRecord>,
    pub certified: Certified,
    pub geometry_verified: bool,
    pub holds: bool,
}

impl PlanReport {
    pub fn failures(&self) -> impl Iterator<Item = &PlanRecord> {
        self.records.iter().filter(|r| !r.verdict)
    }

    pub fn record(&self, prefix: &str) -> Vec<&PlanRecord> {
        self.records.iter().filter(|r| r.name.starts_with(prefix)).collect()
    }
}

fn point(t: Tower) -> (Tower, Tower) {
    (t, t)
}

struct Evaluator<'a> {
    tract: &'a RectTract,
    tol: f64,
    widening: f64,
    geometric: bool,
}

impl Evaluator<'_> {
    fn at(&mut self, x: &Abscissa) -> Result<BoundEval> {
        let e = bound_eval(self.tract, x, self.tol, self.widening)?;
        self.geometric &= e.geometry_verified;
        Ok(e)
    }

    fn upper_at(&mut self, t: &Tower) -> Result<Tower> {
        let x = match t.to_real().filter(|v| *v < 1e300) {
            Some(v) => Abscissa::plain(v.max(1.0)),
            None => Abscissa::tower(*t),
        };
        Ok(self.at(&x)?.pair.hi)
    }
}

/// Re-verify every certificate of `plan` with the default widened intervals.
pub fn verify_plan(plan: &SequencePlan, horizon: usize) -> Result<PlanReport> {
    verify_plan_with(plan, horizon, plan.quad_tol, VERIFY_WIDENING)
}

pub fn verify_plan_with(plan: &SequencePlan, horizon: usize, quad_tol: f64, widening: f64) -> Result<PlanReport> {
    let stages = plan.stage_count();
    if stages == 0 || plan.r.len() != stages + 1 || plan.u.len() != stages + 1 {
        return Err(HairError::Plan("plan is not complete through its stages".into()));
    }
    if plan.deltas.len() < stages + 1 || plan.etas.len() < stages || plan.thetas.len() < stages {
        return Err(HairError::Plan("plan lacks delta/eta/theta entries".into()));
    }
    let tract = plan.tract()?;
    let mut ev = Evaluator { tract: &tract, tol: quad_tol, widening, geometric: true };
    let r: Vec<Tower> = plan.r.iter().map(Magnitude::tower).collect();
    let u: Vec<Tower> = plan.u.iter().map(Magnitude::tower).collect();
    let mut records = Vec::new();
    let mut cert = Certified { a: vec![true; stages + 1], b: vec![true; stages], c: vec![true; stages] };

    for k in 0..=stages {
        let mut ok = true;
        if k > 0 {
            let rec = PlanRecord::new(format!("A[{k}]: r_{}+2 < u_{k}", k - 1), point(upper(&r[k - 1], 2.0)), point(u[k]));
            ok &= rec.verdict;
            records.push(rec);
        }
        let e = ev.at(&plan.u[k].abscissa())?;
        let rhs = lower(&r[k], -(1.0 + plan.deltas[k]));
        let rec = PlanRecord::new(format!("A[{k}]: B(u_{k}) < r_{k}-1-delta_{k}"), (e.pair.lo, e.pair.hi), point(rhs));
        ok &= rec.verdict;
        records.push(rec);
        cert.a[k] = ok;
    }

    for k in 0..stages {
        let e = ev.at(&Abscissa::anchored(r[k], -1.0))?;
        let eta = plan.etas[k];
        let rec = PlanRecord::new(
            format!("B[{k}]: B(r_{k}-1)+eta_{k} < u_{}", k + 1),
            (e.pair.lo.add_log(eta), upper(&e.pair.hi, eta)),
            point(u[k + 1]),
        );
        cert.b[k] = rec.verdict;
        records.push(rec);

        let once = ev.upper_at(&u[k])?;
        let twice = ev.upper_at(&once)?;
        records.push(PlanRecord::new(format!("ii[{k}]: B(B(u_{k})) < u_{}", k + 1), (Tower::one(), twice), point(u[k + 1])));

        let lhs = gate_rhs(&r[k], &u[k + 1], plan.thetas[k])?;
        let e = ev.at(&Abscissa::anchored(r[k], 1.0))?;
        let rec = PlanRecord::new(
            format!("iii[{k}]: 12 r_{k} + ln(u_{}+theta_{k}) < ln b(r_{k}+1)", k + 1),
            point(lhs),
            (e.ln_b_lo(), e.j_hi.scale(0.5)),
        );
        cert.c[k] = rec.verdict;
        records.push(rec);
    }

    if horizon > 0 {
        // M^n(u_0) > u_n for n <= K follows from (iii); beyond K from b(u) > u for u >= u_K
        let big_k = stages;
        let e = ev.at(&plan.u[big_k].abscissa())?;
        records.push(PlanRecord::new(format!("iv: u_{big_k} < b(u_{big_k})"), point(u[big_k]), (e.pair.lo, e.pair.hi)));
        let slope = Tower::from_real(2.0 * PI / 3.0)?;
        records.push(PlanRecord::new(format!("iv: 2pi/3 < u_{big_k}"), point(slope), point(u[big_k])));

        let steps = horizon + 2 * stages;
        let mut orbit = vec![u[0]];
        for _ in 0..steps {
            let next = ev.upper_at(orbit.last().unwrap())?;
            orbit.push(next);
        }
        for n in 1..=horizon {
            for l in 0..=2 * stages {
                let target = u[n.min(big_k)];
                records.push(PlanRecord::new(
                    format!("iv: B^{}(u_0) < u_{} <= M^{n}(u_0)", n + l, n.min(big_k)),
                    (Tower::one(), orbit[n + l]),
                    point(target),
                ));
            }
        }
        for k in 0..big_k {
            for j in 1..=big_k - k {
                let mut x = u[k];
                for _ in 0..2 * j {
                    x = ev.upper_at(&x)?;
                }
                records.push(PlanRecord::new(format!("iv: B^{}(u_{k}) < u_{}", 2 * j, k + j), (u[k], x), point(u[k + j])));
            }
        }
    }

    let holds = records.iter().all(|r| r.verdict);
    Ok(PlanReport {
        version: 1,
        stages,
        horizon,
        quad_tol,
        widening,
        records,
        certified: cert,
        geometry_verified: ev.geometric,
        holds,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AhlforsModel {
    /// `{|Im w| < π}` with the conformal map `w ↦ e^{w/2}`.
    Strip,
    Tract { tract: RectTract, quad_tol: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AhlforsReport {
    pub model: String,
    pub a: f64,
    pub b: f64,
    /// Lower bound for `ln(F(b)/F(a))`.
    pub log_ratio_lower: Magnitude,
    /// `(b − a)/2 − 4π`.
    pub log_target: f64,
    pub conclusive: bool,
    pub holds: bool,
}

/// `|F(b)|/|F(a)| >= exp((b − a)/2 − 4π)` for `b > a + 4π`.
pub fn verify_ahlfors(model: &AhlforsModel, a: f64, b: f64) -> Result<AhlforsReport> {
    if !(b > a + 4.0 * PI) {
        return Err(HairError::Precondition(format!("need b > a + 4π, got a = {a}, b = {b}")));
    }
    let target = 0.5 * (b - a) - 4.0 * PI;
    match model {
        AhlforsModel::Strip => {
            let ratio = 0.5 * (b - a);
            Ok(AhlforsReport {
                model: "strip".into(),
                a,
                b,
                log_ratio_lower: Magnitude::Plain(ratio),
                log_target: target,
                conclusive: true,
                holds: ratio >= target,
            })
        }
        AhlforsModel::Tract { tract, quad_tol } => {
            if a < 1.0 {
                return Err(HairError::Precondition("bound functions need a >= 1".into()));
            }
            let lo = bound_eval(tract, &Abscissa::plain(b), *quad_tol, 1.0)?.ln_b_lo();
            let hi = bound_eval(tract, &Abscissa::plain(a), *quad_tol, 1.0)?.ln_b_hi();
            let ok = lo.gt(&upper(&hi, target));
            let diff = match (lo.to_real(), hi.to_real()) {
                (Some(x), Some(y)) => Magnitude::Plain(x - y),
                _ => Magnitude::from_tower(lo, 1e300),
            };
            Ok(AhlforsReport { model: "tract".into(), a, b, log_ratio_lower: diff, log_target: target, conclusive: ok, holds: ok })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strip_cases() {
        for d in [4.0 * PI + 1.0, 20.0, 30.0] {
            let r = verify_ahlfors(&AhlforsModel::Strip, 1.0, 1.0 + d).unwrap();
            assert!(r.holds && r.conclusive);
        }
        assert!(verify_ahlfors(&AhlforsModel::Strip, 1.0, 5.0).is_err());
    }
}
