//! Devaney hairs of `λe^z` by inverse-branch pullback, the linear head-start
//! ordering, and fast-escape certification along a hair.

use std::f64::consts::PI;
use std::ops::RangeInclusive;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{HairError, Result};
use crate::escape::{classify_point, log_step, ClassificationVerdict, LogPoint};
use crate::functions::{real_fixed_points, FamilyKind, FunctionFamily};
use crate::logtransform::{tract_index, Address, LogModel};
use crate::{Complex, Tower};

pub const SEED_OFFSET: f64 = 10.0;
const MAX_DEPTH: usize = 400;
const MAX_ENTRY: i64 = 1 << 20;
/// Above this the pulled-back real part is kept as a tower.
const BIG: f64 = 1e250;

/// A point of a hair for each potential, in the plane.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HairTrace {
    pub family: FunctionFamily,
    pub address: Address,
    pub potentials: Vec<f64>,
    pub points: Vec<Complex>,
    pub pullback_depth: usize,
    pub tolerance: f64,
    /// Scale of the potential map `Φ(t) = κ(e^t − 1)`.
    pub kappa: f64,
    pub endpoint: Complex,
}

#[derive(Clone, Copy)]
enum Pulled {
    Big { re: Tower, im: f64 },
    Small(Complex),
}

/// `κ = q_r` when `λ` has a real repelling fixed point, else 2.
pub fn potential_scale(family: &FunctionFamily) -> f64 {
    match real_fixed_points(family) {
        Ok([_, qr]) => qr.point,
        Err(_) => 2.0,
    }
}

/// `Φ(t) = κ(e^t − 1)`, which satisfies `F(w(t)) = w_σ(Φ(t))` along the trace.
pub fn advance_potential(kappa: f64, t: f64) -> f64 {
    kappa * t.exp_m1()
}

fn seed(kappa: f64, t: f64, depth: usize) -> Pulled {
    let mut plain = Some(t);
    let mut tower = Tower::zero();
    for _ in 0..depth {
        match plain {
            Some(x) if x < 700.0 => plain = Some(advance_potential(kappa, x)),
            Some(x) => {
                tower = Tower::from_real(x).expect("finite").exp().scale(kappa);
                plain = None;
            }
            None => tower = tower.exp().scale(kappa),
        }
    }
    match plain {
        Some(x) if x + SEED_OFFSET < BIG => Pulled::Small(Complex::new(x + SEED_OFFSET, 0.0)),
        Some(x) => Pulled::Big { re: Tower::from_real(x).expect("finite"), im: 0.0 },
        None => Pulled::Big { re: tower.add_log(SEED_OFFSET), im: 0.0 },
    }
}

/// `L_k(w) = Log(w − ln λ) + 2πik`.
fn branch(ll: Complex, k: i64, w: Pulled) -> Pulled {
    let lift = 2.0 * PI * k as f64;
    match w {
        Pulled::Small(w) => {
            let v = (w - ll).ln();
            Pulled::Small(Complex::new(v.re, v.im + lift))
        }
        Pulled::Big { re, im } => {
            let shifted = re.add_log(-ll.re);
            let arg = shifted.to_real().map_or(0.0, |x| (im - ll.im).atan2(x));
            let re = shifted.log().expect("positive real part");
            match re.to_real().filter(|x| *x < BIG) {
                Some(x) => Pulled::Small(Complex::new(x, arg + lift)),
                None => Pulled::Big { re, im: arg + lift },
            }
        }
    }
}

/// Log-coordinate hair point at potential `t` after `depth` pullbacks.
pub fn hair_log_point(family: &FunctionFamily, address: &Address, kappa: f64, t: f64, depth: usize) -> Result<Complex> {
    let ll = family.lambda.ln();
    let mut w = seed(kappa, t, depth);
    for j in (0..depth).rev() {
        w = branch(ll, address.entry(j), w);
    }
    match w {
        Pulled::Small(w) => Ok(w),
        Pulled::Big { .. } => Err(HairError::NeedsLogLift),
    }
}

fn plane(w: Complex) -> Result<Complex> {
    if w.re > 709.0 {
        return Err(HairError::NeedsLogLift);
    }
    Ok(w.exp())
}

fn check_family(family: &FunctionFamily, address: &Address) -> Result<()> {
    if family.kind != FamilyKind::ExpFamily {
        return Err(HairError::Precondition("hairs are traced for the exponential family only".into()));
    }
    if address.max_abs() > MAX_ENTRY {
        return Err(HairError::Precondition(format!("address entries must stay below {MAX_ENTRY}")));
    }
    Ok(())
}

/// Pullback depth whose result moves by less than `tol` over five more levels.
fn stable_depth(family: &FunctionFamily, address: &Address, kappa: f64, ts: &[f64], tol: f64) -> Result<usize> {
    let spread = SEED_OFFSET + 2.0 * PI * address.max_abs() as f64;
    let mut d = (spread / tol).log2().ceil().max(1.0) as usize + 5;
    while d + 5 <= MAX_DEPTH {
        let moved = ts.iter().try_fold(0.0f64, |acc, &t| -> Result<f64> {
            let a = hair_log_point(family, address, kappa, t, d)?;
            let b = hair_log_point(family, address, kappa, t, d + 5)?;
            Ok(acc.max((a - b).norm()))
        })?;
        if moved < tol {
            return Ok(d + 5);
        }
        d += 5;
    }
    Err(HairError::Precondition("pullback did not settle".into()))
}

pub fn trace_hair(family: &FunctionFamily, address: &Address, t_range: RangeInclusive<f64>, points: usize, tol: f64) -> Result<HairTrace> {
    check_family(family, address)?;
    let (lo, hi) = (*t_range.start(), *t_range.end());
    if !(lo >= 0.0 && hi >= lo && hi.is_finite()) || points == 0 || !(tol > 0.0) {
        return Err(HairError::Precondition("need 0 <= t_lo <= t_hi, points >= 1, tol > 0".into()));
    }
    let potentials: Vec<f64> = if points == 1 {
        vec![lo]
    } else {
        (0..points).map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64).collect()
    };
    let kappa = potential_scale(family);
    let probes = [0.0, lo, hi];
    let depth = stable_depth(family, address, kappa, &probes, tol)?;
    let points = potentials
        .par_iter()
        .map(|&t| plane(hair_log_point(family, address, kappa, t, depth)?))
        .collect::<Result<Vec<_>>>()?;
    let endpoint = plane(hair_log_point(family, address, kappa, 0.0, depth)?)?;
    Ok(HairTrace { family: *family, address: address.clone(), potentials, points, pullback_depth: depth, tolerance: tol, kappa, endpoint })
}

impl HairTrace {
    /// `|f(z(t)) − z_σ(Φ(t))|` for the point at index `i`.
    pub fn forward_residual(&self, i: usize) -> Result<f64> {
        let t = self.potentials[i];
        let image = self.family.eval(self.points[i])?;
        let shifted = self.address.shift(1);
        let next = plane(hair_log_point(&self.family, &shifted, self.kappa, advance_potential(self.kappa, t), self.pullback_depth)?)?;
        Ok((image - next).norm() / next.norm().max(1.0))
    }

    /// First potential whose point is more than `10·tol` from the endpoint.
    pub fn t_min(&self) -> Option<f64> {
        self.potentials
            .iter()
            .zip(&self.points)
            .find(|(_, z)| (**z - self.endpoint).norm() > 10.0 * self.tolerance)
            .map(|(t, _)| *t)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Which {
    First,
    Second,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeadStartWitness {
    #[serde(rename = "K")]
    pub k: f64,
    #[serde(rename = "M")]
    pub m: f64,
    #[serde(rename = "N")]
    pub n: usize,
    pub leader: Complex,
    pub trailer: Complex,
    pub leader_re: Tower,
    pub trailer_re: Tower,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum HeadStart {
    Decided { leader: Which, witness: HeadStartWitness },
    Undecided { checked: usize },
}

/// `a > K·b⁺ + M` in tower arithmetic.
fn ahead(a: &Tower, b: &Tower, k: f64, m: f64) -> bool {
    let rhs = if b.sign() > 0 { b.scale(k).add_log(m) } else { Tower::from_real(m).expect("finite M") };
    a.gt(&rhs)
}

/// Smallest `N <= N_max` at which one orbit leads the other by the linear head-start condition.
pub fn head_start_order(model: &LogModel, w: Complex, zeta: Complex, k: f64, m: f64, n_max: usize) -> Result<HeadStart> {
    if !model.is_explicit() {
        return Err(HairError::NoLogModel);
    }
    if !(k > 1.0 && m > 0.0) {
        return Err(HairError::Precondition("need K > 1 and M > 0".into()));
    }
    let ll = model.log_lambda();
    let (mut a, mut b) = (LogPoint::from_complex(w), LogPoint::from_complex(zeta));
    for n in 0..=n_max {
        if a.tract != b.tract {
            return Err(HairError::AddressDivergence(n));
        }
        let witness = |leader, trailer, lr, tr| HeadStartWitness { k, m, n, leader, trailer, leader_re: lr, trailer_re: tr };
        if ahead(&a.re, &b.re, k, m) {
            return Ok(HeadStart::Decided { leader: Which::First, witness: witness(w, zeta, a.re, b.re) });
        }
        if ahead(&b.re, &a.re, k, m) {
            return Ok(HeadStart::Decided { leader: Which::Second, witness: witness(zeta, w, b.re, a.re) });
        }
        if n == n_max {
            break;
        }
        match (log_step(ll, &a), log_step(ll, &b)) {
            (Ok(x), Ok(y)) => (a, b) = (x, y),
            _ => return Ok(HeadStart::Undecided { checked: n }),
        }
    }
    Ok(HeadStart::Undecided { checked: n_max })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Slope {
    pub alpha: f64,
    pub beta: f64,
}

impl Default for Slope {
    fn default() -> Self {
        Slope { alpha: 1.0, beta: 2.0 * PI }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FastLemmaReport {
    pub epsilon: f64,
    pub re_f_w: f64,
    pub re_f_zeta: f64,
    /// `exp(|w − ζ|/16π) Re F(ζ)`.
    pub distance_bound: Tower,
    pub distance_bound_holds: bool,
    /// `exp(ε Re w) Re F(ζ)`.
    pub target: Tower,
    pub holds: bool,
}

pub fn fast_lemma_epsilon(k: f64) -> f64 {
    (1.0 - 1.0 / k) / (16.0 * PI)
}

pub fn verify_fast_lemma(model: &LogModel, w: Complex, zeta: Complex, k: f64, m: f64) -> Result<FastLemmaReport> {
    verify_fast_lemma_with(model, w, zeta, k, m, Slope::default())
}

pub fn verify_fast_lemma_with(model: &LogModel, w: Complex, zeta: Complex, k: f64, m: f64, slope: Slope) -> Result<FastLemmaReport> {
    let fw = model.log_eval(w)?.w;
    let fz = model.log_eval(zeta)?.w;
    let mut failed = Vec::new();
    if !(k > 1.0) {
        failed.push("K > 1".to_string());
    }
    if !(m > 0.0) {
        failed.push("M > 0".to_string());
    }
    if !(w.re > k * zeta.re.max(0.0) + m) {
        failed.push("Re w > K (Re zeta)^+ + M".to_string());
    }
    if tract_index(w.im) != tract_index(zeta.im) {
        failed.push("w and zeta in one tract".to_string());
    }
    if !(fw.re >= 0.0 && fz.re >= 0.0) {
        failed.push("Re F >= 0 at both points".to_string());
    }
    if !((fw.im - fz.im).abs() <= slope.alpha * fw.re.max(fz.re) + slope.beta) {
        failed.push("slope bound on Im F".to_string());
    }
    if !failed.is_empty() {
        return Err(HairError::Precondition(failed.join("; ")));
    }
    let eps = fast_lemma_epsilon(k);
    let lhs = Tower::from_real(fw.re)?;
    let times = |x: f64| -> Result<Tower> {
        let e = Tower::from_real(x)?.exp();
        Ok(if fz.re > 0.0 { e.scale(fz.re) } else { Tower::zero() })
    };
    let distance_bound = times((w - zeta).norm() / (16.0 * PI))?;
    let target = times(eps * w.re)?;
    Ok(FastLemmaReport {
        epsilon: eps,
        re_f_w: fw.re,
        re_f_zeta: fz.re,
        distance_bound_holds: lhs.gt(&distance_bound),
        distance_bound,
        holds: lhs.gt(&target),
        target,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HairPointVerdict {
    pub t: f64,
    pub z: Complex,
    pub interior: bool,
    pub verdict: ClassificationVerdict,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HairFastReport {
    pub r_used: f64,
    pub horizon: usize,
    pub t_min: Option<f64>,
    pub rows: Vec<HairPointVerdict>,
    pub endpoint: ClassificationVerdict,
    pub interior: usize,
    pub interior_certified: usize,
    pub max_level: Option<usize>,
    /// Certified levels never increase with `t`.
    pub monotone: bool,
}

pub fn certify_hair_fast(trace: &HairTrace, r: f64, horizon: usize, l_max: usize) -> Result<HairFastReport> {
    let t_min = trace.t_min();
    let rows = trace
        .potentials
        .par_iter()
        .zip(&trace.points)
        .map(|(&t, &z)| {
            let verdict = classify_point(&trace.family, z, horizon, r, l_max)?;
            Ok(HairPointVerdict { t, z, interior: t_min.is_some_and(|m| t >= m), verdict })
        })
        .collect::<Result<Vec<_>>>()?;
    let endpoint = classify_point(&trace.family, trace.endpoint, horizon, r, l_max)?;
    let inner: Vec<_> = rows.iter().filter(|r| r.interior).collect();
    let levels: Vec<Option<usize>> = inner.iter().map(|r| r.verdict.fast_level.level()).collect();
    let monotone = levels.windows(2).all(|p| match (p[0], p[1]) {
        (Some(a), Some(b)) => b <= a,
        (None, _) => true,
        (Some(_), None) => false,
    });
    Ok(HairFastReport {
        r_used: r,
        horizon,
        t_min,
        interior: inner.len(),
        interior_certified: levels.iter().flatten().count(),
        max_level: levels.iter().flatten().max().copied(),
        monotone,
        endpoint,
        rows,
    })
}
