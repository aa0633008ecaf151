//! Orbits with a hand-off to logarithmic coordinates, and bounded-horizon
//! classification into escaping, zipping and fast-escaping points.

use std::cmp::Ordering;
use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};

use crate::error::{HairError, Result};
use crate::functions::{iterated_max_modulus, max_modulus, FamilyKind, FunctionFamily};
use crate::logtransform::reduce_angle;
use crate::{Complex, Tower};

/// Orbits switch to log coordinates once `|f^k(z)|` exceeds this.
pub const LIFT_THRESHOLD: f64 = 1e100;
/// Imaginary parts beyond this can no longer be reduced mod 2π reliably.
pub const PHASE_LIMIT: f64 = 1e12;

pub const DEFAULT_HORIZON: usize = 40;
pub const DEFAULT_L_MAX: usize = 10;

/// `w = log f^k(z)` with `Re w` a tower and `Im w = θ + 2πk`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogPoint {
    pub re: Tower,
    pub theta: f64,
    pub tract: i64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rep", rename_all = "snake_case")]
pub enum Rep {
    Plain { z: Complex },
    Lifted { w: LogPoint },
}

impl Rep {
    /// `|f^k(z)|` as a tower.
    pub fn modulus(&self) -> Tower {
        match self {
            Rep::Plain { z } => Tower::from_real(z.norm()).expect("finite orbit point"),
            Rep::Lifted { w } => w.re.exp(),
        }
    }

    /// `ln |f^k(z)|`, `None` at zero.
    pub fn log_modulus(&self) -> Option<Tower> {
        match self {
            Rep::Plain { z } => {
                let n = z.norm();
                (n > 0.0).then(|| Tower::from_real(n.ln()).expect("finite log"))
            }
            Rep::Lifted { w } => Some(w.re),
        }
    }

    pub fn is_lifted(&self) -> bool {
        matches!(self, Rep::Lifted { .. })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrbitStep {
    pub index: usize,
    #[serde(flatten)]
    pub rep: Rep,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Halt {
    /// The family has no log model and the orbit left plain range.
    NeedsLogModel,
    /// The argument of a lifted point is no longer resolvable.
    PhaseLost,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrbitRecord {
    pub family: FunctionFamily,
    pub start: Complex,
    pub horizon: usize,
    pub steps: Vec<OrbitStep>,
    pub halt: Option<Halt>,
    /// Filled by [`OrbitRecord::classified`].
    #[serde(default)]
    pub verdict: Option<ClassificationVerdict>,
}

impl OrbitRecord {
    pub fn classified(mut self, r: f64, l_max: usize) -> Result<Self> {
        self.verdict = Some(classify(&self, r, l_max)?);
        Ok(self)
    }

    pub fn completed(&self) -> bool {
        self.halt.is_none() && self.steps.len() == self.horizon + 1
    }

    pub fn moduli(&self) -> Vec<Tower> {
        self.steps.iter().map(|s| s.rep.modulus()).collect()
    }

    pub fn lift_step(&self) -> Option<usize> {
        self.steps.iter().find(|s| s.rep.is_lifted()).map(|s| s.index)
    }
}

impl LogPoint {
    pub fn from_complex(w: Complex) -> Self {
        let (theta, tract) = reduce_angle(w.im);
        LogPoint { re: Tower::from_real(w.re).expect("finite log point"), theta, tract }
    }
}

fn lift(w: Complex) -> Rep {
    Rep::Lifted { w: LogPoint::from_complex(w) }
}

/// `F(w) = e^w + ll` on a log point; exact while `Re w < 700`, real-axis only beyond.
pub fn log_step(ll: Complex, w: &LogPoint) -> std::result::Result<LogPoint, Halt> {
    match w.re.to_real().filter(|x| *x < 700.0) {
        Some(x) => {
            let f = Complex::new(x, w.theta).exp() + ll;
            if f.im.abs() > PHASE_LIMIT {
                return Err(Halt::PhaseLost);
            }
            Ok(LogPoint::from_complex(f))
        }
        None if w.theta == 0.0 && ll.im == 0.0 => Ok(LogPoint { re: w.re.exp().add_log(ll.re), theta: 0.0, tract: 0 }),
        None => Err(Halt::PhaseLost),
    }
}

fn step_exp(family: &FunctionFamily, rep: &Rep) -> std::result::Result<Rep, Halt> {
    let ll = family.lambda.ln();
    match rep {
        Rep::Plain { z } => {
            let w = z + ll;
            if w.im.abs() > PHASE_LIMIT {
                Err(Halt::PhaseLost)
            } else if w.re > LIFT_THRESHOLD.ln() {
                Ok(lift(w))
            } else {
                Ok(Rep::Plain { z: w.exp() })
            }
        }
        Rep::Lifted { w } => log_step(ll, w).map(|w| Rep::Lifted { w }),
    }
}

fn step_plain(family: &FunctionFamily, rep: &Rep) -> std::result::Result<Rep, Halt> {
    let Rep::Plain { z } = rep else { return Err(Halt::NeedsLogModel) };
    match family.eval(*z) {
        Ok(v) if v.norm() <= LIFT_THRESHOLD => Ok(Rep::Plain { z: v }),
        _ => Err(Halt::NeedsLogModel),
    }
}

/// `z0, f(z0), ..., f^horizon(z0)`, lifting to log coordinates above [`LIFT_THRESHOLD`].
pub fn run_orbit(family: &FunctionFamily, z0: Complex, horizon: usize) -> Result<OrbitRecord> {
    if horizon == 0 {
        return Err(HairError::Precondition("horizon must be at least 1".into()));
    }
    if !z0.is_finite() {
        return Err(HairError::NonFinite("z0"));
    }
    if family.kind == FamilyKind::ExpFamily && z0.im.abs() > PHASE_LIMIT {
        return Err(HairError::Precondition("start point beyond phase resolution".into()));
    }
    let mut rep = if z0.norm() > LIFT_THRESHOLD && family.kind == FamilyKind::ExpFamily {
        lift(z0.ln())
    } else {
        Rep::Plain { z: z0 }
    };
    let mut steps = vec![OrbitStep { index: 0, rep }];
    let mut halt = None;
    for index in 1..=horizon {
        let next = match family.kind {
            FamilyKind::ExpFamily => step_exp(family, &rep),
            _ => step_plain(family, &rep),
        };
        match next {
            Ok(r) => {
                rep = r;
                steps.push(OrbitStep { index, rep });
            }
            Err(h) => {
                halt = Some(h);
                break;
            }
        }
    }
    Ok(OrbitRecord { family: *family, start: z0, horizon, steps, halt, verdict: None })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EscapeVerdict {
    CertifiedAtHorizon,
    NotEscapedAtHorizon,
    /// The orbit halted before the horizon.
    Indeterminate,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", content = "level", rename_all = "kebab-case")]
pub enum FastLevel {
    Certified(usize),
    RefutedUpTo(usize),
    NotApplicable,
}

impl FastLevel {
    pub fn level(&self) -> Option<usize> {
        match self {
            FastLevel::Certified(l) => Some(*l),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassificationVerdict {
    pub escaping: EscapeVerdict,
    /// `(n, (1/n) ln ln |f^n(z)|)` for every `n` with `|f^n(z)| > e`.
    pub zip_rate: Vec<(usize, Tower)>,
    pub zip_exceeds_one: bool,
    pub fast_level: FastLevel,
    pub r_used: f64,
}

/// Steps over which the moduli must increase for an escape certificate.
const TAIL: usize = 3;

/// Classify an orbit against `M^n(R, f)`. `R` must satisfy `M(R, f) > R`.
pub fn classify(orbit: &OrbitRecord, r: f64, l_max: usize) -> Result<ClassificationVerdict> {
    let family = &orbit.family;
    if !max_modulus(family, r)?.gt(&Tower::from_real(r)?) {
        return Err(HairError::InadmissibleR(r));
    }
    let mods = orbit.moduli();
    let e = Tower::from_real(std::f64::consts::E)?;
    let zip_rate: Vec<(usize, Tower)> = mods
        .iter()
        .enumerate()
        .skip(1)
        .filter(|(_, m)| m.gt(&e))
        .map(|(n, m)| (n, m.log().and_then(|l| l.log()).expect("modulus above e").scale(1.0 / n as f64)))
        .collect();
    let h = orbit.horizon;
    let escaping = if !orbit.completed() {
        EscapeVerdict::Indeterminate
    } else {
        let last = mods[h];
        let rising = mods[h.saturating_sub(TAIL)..].windows(2).all(|w| w[1].gt(&w[0]));
        if rising && last.gt(&Tower::from_real(LIFT_THRESHOLD.max(r))?) {
            EscapeVerdict::CertifiedAtHorizon
        } else {
            EscapeVerdict::NotEscapedAtHorizon
        }
    };
    let zip_exceeds_one = escaping == EscapeVerdict::CertifiedAtHorizon
        && zip_rate.last().is_some_and(|(n, z)| *n == h && z.gt(&Tower::one()));
    let fast_level = if escaping != EscapeVerdict::CertifiedAtHorizon {
        FastLevel::NotApplicable
    } else {
        let m = iterated_max_modulus(family, r, h)?;
        (0..=l_max.min(h - 1))
            .find(|&l| (1..=h - l).all(|n| !mods[n + l].lt(&m[n - 1])))
            .map_or(FastLevel::RefutedUpTo(l_max), FastLevel::Certified)
    };
    Ok(ClassificationVerdict { escaping, zip_rate, zip_exceeds_one, fast_level, r_used: r })
}

/// `run_orbit` followed by `classify`.
pub fn classify_point(family: &FunctionFamily, z0: Complex, horizon: usize, r: f64, l_max: usize) -> Result<ClassificationVerdict> {
    classify(&run_orbit(family, z0, horizon)?, r, l_max)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RIndependence {
    pub r1: f64,
    pub r2: f64,
    pub first: ClassificationVerdict,
    pub second: ClassificationVerdict,
    /// Smallest `k` with `M^k(min R) >= max R`.
    pub shift: usize,
    pub verdicts_agree: bool,
    pub levels_within_shift: bool,
}

/// Compare classifications under two admissible radii.
pub fn check_r_independence(orbit: &OrbitRecord, r1: f64, r2: f64, l_max: usize) -> Result<RIndependence> {
    let (lo, hi) = if r1 <= r2 { (r1, r2) } else { (r2, r1) };
    let hi_t = Tower::from_real(hi)?;
    let mut shift = 0;
    let mut cur = Tower::from_real(lo)?;
    let iter = iterated_max_modulus(&orbit.family, lo, 64)?;
    while cur.lt(&hi_t) {
        if shift == iter.len() {
            return Err(HairError::Precondition("radii too far apart".into()));
        }
        cur = iter[shift];
        shift += 1;
    }
    let first = classify(orbit, r1, l_max + shift)?;
    let second = classify(orbit, r2, l_max + shift)?;
    let certified = |v: &ClassificationVerdict| v.fast_level.level().is_some();
    let verdicts_agree = first.escaping == second.escaping && certified(&first) == certified(&second);
    let levels_within_shift = match (first.fast_level.level(), second.fast_level.level()) {
        (Some(a), Some(b)) => a.abs_diff(b) <= shift,
        _ => true,
    };
    Ok(RIndependence { r1, r2, first, second, shift, verdicts_agree, levels_within_shift })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthRow {
    pub n: usize,
    pub lhs: Tower,
    pub rhs: Tower,
    pub holds: bool,
}

// With `Re F^{n+1} = e^x cos θ + ln|λ|`, divide through by `e^{εx}`:
// `e^{(1-ε)x} cos θ > 1/ε + ln|λ| (1/ε - 1) e^{-εx}`.
fn factored(w: &LogPoint, eps: f64, ll: f64) -> bool {
    let c = w.theta.cos();
    if c <= 0.0 {
        return false;
    }
    let left = if eps < 1.0 { w.re.scale(1.0 - eps).exp().scale(c) } else { Tower::from_real(c).expect("cosine") };
    let tail = w.re.scale(eps).neg().exp().to_real().unwrap_or(0.0);
    let right = 1.0 / eps + ll * (1.0 / eps - 1.0) * tail;
    Tower::from_real(right).is_ok_and(|r| left.gt(&r))
}

/// `Re F^{n+1}(w) > (1/ε) M(ε Re F^n(w), F)` along a lifted exponential orbit.
pub fn probe_growth_inequality(orbit: &OrbitRecord, eps: f64, n_range: RangeInclusive<usize>) -> Result<Vec<GrowthRow>> {
    if orbit.family.kind != FamilyKind::ExpFamily {
        return Err(HairError::NoLogModel);
    }
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(HairError::Precondition("epsilon must lie in (0, 1]".into()));
    }
    let ll = orbit.family.lambda.norm().ln();
    let mut rows = Vec::new();
    for n in n_range {
        let (Some(a), Some(b)) = (orbit.steps.get(n), orbit.steps.get(n + 1)) else {
            return Err(HairError::Precondition(format!("orbit has no step {}", n + 1)));
        };
        let (Rep::Lifted { w: wn }, Rep::Lifted { w: wn1 }) = (a.rep, b.rep) else {
            return Err(HairError::Precondition(format!("orbit not lifted at step {n}")));
        };
        if wn.re.sign() <= 0 {
            return Err(HairError::Precondition(format!("Re F^{n} is not positive")));
        }
        let rhs = wn.re.scale(eps).exp().add_log(ll).scale(1.0 / eps);
        let holds = match wn1.re.cmp_tol(&rhs) {
            Ordering::Equal => factored(&wn, eps, ll),
            o => o == Ordering::Greater,
        };
        rows.push(GrowthRow { n, lhs: wn1.re, rhs, holds });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functions::real_fixed_points;

    fn fam() -> FunctionFamily {
        FunctionFamily::exp_family(0.2).unwrap()
    }

    #[test]
    fn fixed_point_orbit() {
        let [qa, _] = real_fixed_points(&fam()).unwrap();
        let o = run_orbit(&fam(), Complex::new(qa.point, 0.0), 20).unwrap();
        assert!(o.completed());
        for s in &o.steps {
            let Rep::Plain { z } = s.rep else { panic!() };
            assert!((z.re - qa.point).abs() < 1e-9);
        }
        let v = classify(&o, 5.0, 10).unwrap();
        assert_eq!(v.escaping, EscapeVerdict::NotEscapedAtHorizon);
        assert_eq!(v.fast_level, FastLevel::NotApplicable);
    }

    #[test]
    fn real_orbit_lifts_and_escapes() {
        let o = run_orbit(&fam(), Complex::new(3.54, 0.0), 15).unwrap();
        assert!(o.completed());
        assert_eq!(o.lift_step(), Some(4));
        let Rep::Plain { z } = o.steps[1].rep else { panic!() };
        assert!((z.re - 0.2 * 3.54f64.exp()).abs() < 1e-12);
        let m = o.moduli();
        assert!(m.windows(2).all(|w| w[1].gt(&w[0])));
        let v = classify(&o, 5.0, 10).unwrap();
        assert_eq!(v.escaping, EscapeVerdict::CertifiedAtHorizon);
        assert!(matches!(v.fast_level, FastLevel::Certified(l) if l <= 3));
        assert!(v.zip_exceeds_one);
    }

    #[test]
    fn horizon_one() {
        let o = run_orbit(&fam(), Complex::new(1.0, 1.0), 1).unwrap();
        assert_eq!(o.steps.len(), 2);
        assert!(run_orbit(&fam(), Complex::new(1.0, 1.0), 0).is_err());
    }

    #[test]
    fn inadmissible_radius() {
        let o = run_orbit(&fam(), Complex::new(3.54, 0.0), 5).unwrap();
        assert!(matches!(classify(&o, 1.0, 3), Err(HairError::InadmissibleR(_))));
    }

    #[test]
    fn growth_probe() {
        let o = run_orbit(&fam(), Complex::new(3.54, 0.0), 15).unwrap();
        assert!(probe_growth_inequality(&o, 0.25, 5..=10).unwrap().iter().all(|r| r.holds));
        assert!(probe_growth_inequality(&o, 1.0, 5..=10).unwrap().iter().all(|r| !r.holds));
        let [qa, _] = real_fixed_points(&fam()).unwrap();
        let still = run_orbit(&fam(), Complex::new(qa.point, 0.0), 15).unwrap();
        assert!(probe_growth_inequality(&still, 0.5, 5..=10).is_err());
    }

    #[test]
    fn r_independence_on_the_radius() {
        // the orbit of R itself is M^n(R), so the level moves by exactly one
        let o = run_orbit(&fam(), Complex::new(5.0, 0.0), 15).unwrap();
        let r2 = max_modulus(&fam(), 5.0).unwrap().to_real().unwrap();
        let rep = check_r_independence(&o, 5.0, r2, 10).unwrap();
        assert_eq!(rep.shift, 1);
        assert_eq!(rep.first.fast_level, FastLevel::Certified(0));
        assert_eq!(rep.second.fast_level, FastLevel::Certified(1));
        assert!(rep.verdicts_agree && rep.levels_within_shift);
    }

    #[test]
    fn non_exp_halts() {
        let f = FunctionFamily::fatou(Complex::new(1.0, 0.0)).unwrap();
        let o = run_orbit(&f, Complex::new(-300.0, 0.0), 5).unwrap();
        assert_eq!(o.halt, Some(Halt::NeedsLogModel));
        assert_eq!(classify(&o, 5.0, 3).unwrap().escaping, EscapeVerdict::Indeterminate);
    }
}
