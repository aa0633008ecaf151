//! Logarithmic transforms `exp F(w) = f(e^w)`, addresses, and the ω/Ω comparison.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{HairError, Result};
use crate::functions::{FamilyKind, FunctionFamily};
use crate::tractlab::RectTract;
use crate::{Complex, Tower};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum LogModelKind {
    /// `F(w) = e^w + Log λ`
    ExplicitExp,
    /// Only the bound functions `b <= F <= B` of a rectilinear tract are known.
    BoundedModel { tract: RectTract, quad_tol: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogModel {
    pub kind: LogModelKind,
    pub lambda: Complex,
    /// Offset of the normalized view `ζ ↦ F(ζ + R0) − R0`.
    pub r0: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogValue {
    pub w: Complex,
    /// Index k of the translate `T + 2πik` nearest to `w`.
    pub tract: i64,
}

pub fn tract_index(im: f64) -> i64 {
    (im / TAU).round() as i64
}

/// Reduce an imaginary part to (−π, π] and return the 2π multiple removed.
pub fn reduce_angle(im: f64) -> (f64, i64) {
    let k = tract_index(im);
    let mut th = im - TAU * k as f64;
    if th <= -PI {
        th += TAU;
        return (th, k - 1);
    }
    if th > PI {
        th -= TAU;
        return (th, k + 1);
    }
    (th, k)
}

impl LogModel {
    pub fn explicit_exp(family: &FunctionFamily) -> Result<Self> {
        if family.kind != FamilyKind::ExpFamily {
            return Err(HairError::NoLogModel);
        }
        let mut m = LogModel { kind: LogModelKind::ExplicitExp, lambda: family.lambda, r0: 0.0 };
        m.r0 = m.normalization_offset();
        Ok(m)
    }

    pub fn explicit_real(lambda: f64) -> Result<Self> {
        Self::explicit_exp(&FunctionFamily::exp_family(lambda)?)
    }

    pub fn bounded(tract: RectTract, quad_tol: f64) -> Self {
        LogModel {
            kind: LogModelKind::BoundedModel { tract, quad_tol },
            lambda: Complex::new(1.0, 0.0),
            r0: 0.0,
        }
    }

    pub fn is_explicit(&self) -> bool {
        self.kind == LogModelKind::ExplicitExp
    }

    /// Principal `Log λ`.
    pub fn log_lambda(&self) -> Complex {
        self.lambda.ln()
    }

    pub fn log_eval(&self, w: Complex) -> Result<LogValue> {
        if !self.is_explicit() {
            return Err(HairError::Precondition("bounded model has no pointwise values".into()));
        }
        if w.re > 700.0 {
            return Err(HairError::NeedsLogLift);
        }
        let v = w.exp() + self.log_lambda();
        Ok(LogValue { w: v, tract: tract_index(v.im) })
    }

    pub fn derivative(&self, w: Complex) -> Complex {
        w.exp()
    }

    /// `M(r, F) = max_{Re w = r} Re F(w)`.
    pub fn log_max(&self, r: f64) -> Result<Tower> {
        match &self.kind {
            LogModelKind::ExplicitExp => Ok(Tower::from_log(r).add_log(self.lambda.norm().ln())),
            LogModelKind::BoundedModel { tract, quad_tol } => {
                Ok(crate::tractlab::bound_functions(tract, r, *quad_tol)?.hi)
            }
        }
    }

    /// Smallest half-integer R with `|F'| >= 2` on every sampled point of `{Re F > R}`.
    fn normalization_offset(&self) -> f64 {
        let ll = self.log_lambda();
        let mut r = 0.0;
        loop {
            let mut ok = true;
            'grid: for i in 0..=300 {
                let u = -5.0 + 15.0 * i as f64 / 300.0;
                for j in 0..=120 {
                    let v = -PI + TAU * j as f64 / 120.0;
                    let w = Complex::new(u, v);
                    let f = w.exp() + ll;
                    if f.re > r && w.exp().norm() < 2.0 {
                        ok = false;
                        break 'grid;
                    }
                }
            }
            if ok {
                return r;
            }
            r += 0.5;
        }
    }

    /// `F(ζ + R0) − R0`.
    pub fn normalized_eval(&self, zeta: Complex) -> Result<Complex> {
        let off = Complex::new(self.r0, 0.0);
        Ok(self.log_eval(zeta + off)?.w - off)
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ExpansionReport {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// `|F'(w)| >= (Re F(w) − R) / 4π` at a point with `Re F(w) > R`.
pub fn check_expansion(model: &LogModel, w: Complex, r: f64) -> Result<ExpansionReport> {
    let f = model.log_eval(w)?.w;
    if !(f.re > r) {
        return Err(HairError::Precondition(format!("Re F(w) = {} not above R = {r}", f.re)));
    }
    let lhs = model.derivative(w).norm();
    let rhs = (f.re - r) / (4.0 * PI);
    Ok(ExpansionReport { lhs, rhs, holds: lhs >= rhs })
}

/// Larger root of `e^{εt} = t`, or 0 when `e^{εt} > t` everywhere.
fn omega_threshold(eps: f64) -> f64 {
    if eps >= (-1f64).exp() {
        return 0.0;
    }
    let g = |t: f64| (eps * t).exp() - t;
    // g is negative at the minimum t = ln(1/ε)/ε and positive far right
    let mut lo = (1.0 / eps).ln() / eps;
    let mut hi = 2.0 * lo;
    while g(hi) <= 0.0 {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if g(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// `R = max{s r, (2/ε) ln s, t*}` with `s = 2δ/ε`.
pub fn omega_domination_radius(eps: f64, delta: f64, r: f64) -> Result<f64> {
    if !(eps > 0.0 && delta > eps && r > 0.0) {
        return Err(HairError::Precondition("need delta > eps > 0 and r > 0".into()));
    }
    let s = 2.0 * delta / eps;
    Ok((s * r).max(2.0 / eps * s.ln()).max(omega_threshold(eps)))
}

/// `Ω^n(r) <= (1/s) ω^n(R)` for `1 <= n <= n_max`, `ω(t) = e^{εt}`, `Ω(t) = e^{δt}`.
pub fn verify_omega_domination(eps: f64, delta: f64, r: f64, big_r: f64, n_max: usize) -> bool {
    let (Ok(mut lo), Ok(mut hi)) = (Tower::from_real(r), Tower::from_real(big_r)) else {
        return false;
    };
    if !(eps > 0.0 && delta > 0.0 && r > 0.0 && big_r > 0.0) {
        return false;
    }
    let s = 2.0 * delta / eps;
    for _ in 0..n_max {
        lo = lo.scale(delta).exp();
        hi = hi.scale(eps).exp();
        if lo.gt(&hi.scale(1.0 / s)) {
            return false;
        }
    }
    true
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Address {
    Constant { entry: i64 },
    Periodic { word: Vec<i64> },
    PrefixPeriodic { prefix: Vec<i64>, tail: Vec<i64> },
}

impl Address {
    pub fn constant(n: i64) -> Self {
        Address::Constant { entry: n }
    }

    pub fn periodic(word: Vec<i64>) -> Self {
        assert!(!word.is_empty(), "empty periodic word");
        Address::Periodic { word }.normalized()
    }

    pub fn prefix_periodic(prefix: Vec<i64>, tail: Vec<i64>) -> Self {
        assert!(!tail.is_empty(), "empty periodic tail");
        Address::PrefixPeriodic { prefix, tail }.normalized()
    }

    fn normalized(self) -> Self {
        match self {
            Address::Periodic { word } if word.iter().all(|&x| x == word[0]) => Address::constant(word[0]),
            Address::PrefixPeriodic { prefix, tail } if prefix.is_empty() => Address::periodic(tail),
            a => a,
        }
    }

    /// `s_k`.
    pub fn entry(&self, k: usize) -> i64 {
        match self {
            Address::Constant { entry } => *entry,
            Address::Periodic { word } => word[k % word.len()],
            Address::PrefixPeriodic { prefix, tail } => {
                if k < prefix.len() {
                    prefix[k]
                } else {
                    tail[(k - prefix.len()) % tail.len()]
                }
            }
        }
    }

    pub fn max_abs(&self) -> i64 {
        match self {
            Address::Constant { entry } => entry.abs(),
            Address::Periodic { word } => word.iter().map(|x| x.abs()).max().unwrap(),
            Address::PrefixPeriodic { prefix, tail } => {
                prefix.iter().chain(tail).map(|x| x.abs()).max().unwrap()
            }
        }
    }

    /// `σ^k`.
    pub fn shift(&self, k: usize) -> Self {
        match self {
            Address::Constant { .. } => self.clone(),
            Address::Periodic { word } => {
                let n = word.len();
                Address::periodic((0..n).map(|i| word[(i + k) % n]).collect())
            }
            Address::PrefixPeriodic { prefix, tail } => {
                if k < prefix.len() {
                    Address::prefix_periodic(prefix[k..].to_vec(), tail.clone())
                } else {
                    Address::periodic(tail.clone()).shift(k - prefix.len())
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_eval_examples() {
        let m = LogModel::explicit_real(0.2).unwrap();
        let v = m.log_eval(Complex::new(0.0, 0.0)).unwrap();
        assert!((v.w.re - (1.0 + 0.2f64.ln())).abs() < 1e-15);
        let v = m.log_eval(Complex::new(10f64.ln(), 0.0)).unwrap();
        assert!((v.w.re - (10.0 + 0.2f64.ln())).abs() < 1e-12);
        assert_eq!(v.w.im, 0.0);
        assert_eq!(v.tract, 0);
    }

    #[test]
    fn log_max_examples() {
        let m = LogModel::explicit_real(0.2).unwrap();
        let v = m.log_max(3.0).unwrap().to_real().unwrap();
        assert!((v - (3f64.exp() + 0.2f64.ln())).abs() < 1e-12);
        let one = LogModel::explicit_real(1.0 / 3.0).unwrap();
        assert!(one.log_max(1.0).unwrap().lt(&one.log_max(1.1).unwrap()));
        let unit = LogModel { kind: LogModelKind::ExplicitExp, lambda: Complex::new(1.0, 0.0), r0: 0.0 };
        assert_eq!(unit.log_max(0.0).unwrap().to_real(), Some(1.0));
    }

    #[test]
    fn normalization() {
        let m = LogModel::explicit_real(0.2).unwrap();
        assert_eq!(m.r0, 0.5);
        assert!(FunctionFamily::fatou(Complex::new(1.0, 0.0)).map(|f| LogModel::explicit_exp(&f)).unwrap().is_err());
    }

    #[test]
    fn expansion_example() {
        let m = LogModel::explicit_real(0.2).unwrap();
        let r = check_expansion(&m, Complex::new(2.0, 0.0), 1.0).unwrap();
        assert!((r.lhs - 2f64.exp()).abs() < 1e-12);
        assert!((r.rhs - (2f64.exp() + 0.2f64.ln() - 1.0) / (4.0 * PI)).abs() < 1e-12);
        assert!(r.holds);
        assert!(check_expansion(&m, Complex::new(0.0, 0.0), 1.0).is_err());
    }

    #[test]
    fn omega_radius_examples() {
        assert_eq!(omega_domination_radius(1.0, 2.0, 1.0).unwrap(), 4.0);
        assert_eq!(omega_domination_radius(0.5, 1.0, 2.0).unwrap(), 8.0);
        assert!(omega_domination_radius(1.0, 1.0, 1.0).is_err());
        let t = omega_threshold(0.05);
        assert!((0.05 * t).exp() >= t && (t - 89.0).abs() < 2.0);
    }

    #[test]
    fn omega_verify_examples() {
        assert!(verify_omega_domination(1.0, 2.0, 1.0, 4.0, 12));
        assert!(!verify_omega_domination(1.0, 2.0, 1.0, 0.5, 3));
        assert!(verify_omega_domination(1.0, 2.0, 1.0, 0.5, 0));
    }

    #[test]
    fn address_shift() {
        assert_eq!(Address::periodic(vec![0, 1]).shift(1), Address::periodic(vec![1, 0]));
        assert_eq!(Address::constant(0).shift(7), Address::constant(0));
        assert_eq!(Address::prefix_periodic(vec![3], vec![0]).shift(2), Address::constant(0));
        let a = Address::prefix_periodic(vec![5, -2], vec![1, 2, 3]);
        for k in 0..10 {
            assert_eq!(a.shift(k).entry(0), a.entry(k));
            assert_eq!(a.shift(k).entry(3), a.entry(k + 3));
        }
    }

    #[test]
    fn angle_reduction() {
        let (th, k) = reduce_angle(3.0 * TAU + 0.5);
        assert!((th - 0.5).abs() < 1e-12 && k == 3);
        let (th, k) = reduce_angle(PI);
        assert!(th == PI && k == 0);
    }
}
