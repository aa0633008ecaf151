//! Concrete entire-function families, maximum modulus and the semiconjugacy checks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{HairError, Result};
use crate::{Complex, Tower};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FamilyKind {
    /// `λ e^z`
    ExpFamily,
    /// `z + λ + e^{-z}`
    FatouMap,
    /// `m z + λ + e^{-z}`
    AffineExp,
    /// `e^{-λ} w^m e^{-w}`
    StarMap,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FunctionFamily {
    pub kind: FamilyKind,
    pub lambda: Complex,
    pub m: u32,
}

/// Results of `eval` above this modulus are reported as needing a log-lift.
pub const PLAIN_LIMIT: f64 = 1e300;

/// Circle samples used by [`max_modulus`].
pub const CIRCLE_SAMPLES: usize = 4096;

/// Radius above which the maximum modulus of the non-exponential families is
/// taken from its asymptotic form (the neglected terms are below e^{-700}).
const ASYMPTOTIC_RADIUS: f64 = 700.0;

impl FunctionFamily {
    pub fn new(kind: FamilyKind, lambda: Complex, m: u32) -> Result<Self> {
        if !lambda.is_finite() {
            return Err(HairError::NonFinite("lambda"));
        }
        let m = match kind {
            FamilyKind::ExpFamily | FamilyKind::FatouMap => 1,
            _ => m,
        };
        match kind {
            FamilyKind::ExpFamily if lambda.norm() == 0.0 => {
                return Err(HairError::Precondition("lambda must be nonzero".into()))
            }
            FamilyKind::FatouMap if lambda.re <= 0.0 => {
                return Err(HairError::Precondition("FatouMap needs Re lambda > 0".into()))
            }
            FamilyKind::AffineExp if m < 2 => {
                return Err(HairError::Precondition("AffineExp needs m >= 2".into()))
            }
            FamilyKind::StarMap if m < 1 => {
                return Err(HairError::Precondition("StarMap needs m >= 1".into()))
            }
            _ => {}
        }
        Ok(FunctionFamily { kind, lambda, m })
    }

    pub fn exp_family(lambda: f64) -> Result<Self> {
        Self::new(FamilyKind::ExpFamily, Complex::new(lambda, 0.0), 1)
    }

    pub fn fatou(lambda: Complex) -> Result<Self> {
        Self::new(FamilyKind::FatouMap, lambda, 1)
    }

    pub fn affine(m: u32, lambda: Complex) -> Result<Self> {
        Self::new(FamilyKind::AffineExp, lambda, m)
    }

    pub fn star(m: u32, lambda: Complex) -> Result<Self> {
        Self::new(FamilyKind::StarMap, lambda, m)
    }

    /// Real λ in (0, 1/e): the parameters with a real hair ending at q_r.
    pub fn is_real_hair_exp(&self) -> bool {
        self.kind == FamilyKind::ExpFamily
            && self.lambda.im == 0.0
            && self.lambda.re > 0.0
            && self.lambda.re < (-1f64).exp()
    }

    pub fn eval(&self, z: Complex) -> Result<Complex> {
        let v = self.eval_unchecked(z);
        if !v.is_finite() || v.norm() > PLAIN_LIMIT {
            return Err(HairError::NeedsLogLift);
        }
        Ok(v)
    }

    fn eval_unchecked(&self, z: Complex) -> Complex {
        let l = self.lambda;
        match self.kind {
            FamilyKind::ExpFamily => l * z.exp(),
            FamilyKind::FatouMap => z + l + (-z).exp(),
            FamilyKind::AffineExp => z * self.m as f64 + l + (-z).exp(),
            FamilyKind::StarMap => z.powu(self.m) * (-z - l).exp(),
        }
    }

    pub fn derivative(&self, z: Complex) -> Complex {
        let l = self.lambda;
        match self.kind {
            FamilyKind::ExpFamily => l * z.exp(),
            FamilyKind::FatouMap => Complex::new(1.0, 0.0) - (-z).exp(),
            FamilyKind::AffineExp => Complex::new(self.m as f64, 0.0) - (-z).exp(),
            FamilyKind::StarMap => {
                let m = self.m as f64;
                z.powu(self.m - 1) * (Complex::new(m, 0.0) - z) * (-z - l).exp()
            }
        }
    }

    /// `ln |f(z)|` without forming `f(z)` when it would overflow.
    pub fn log_abs(&self, z: Complex) -> f64 {
        let l = self.lambda;
        match self.kind {
            FamilyKind::ExpFamily => l.norm().ln() + z.re,
            FamilyKind::StarMap => -l.re + self.m as f64 * z.norm().ln() - z.re,
            FamilyKind::FatouMap | FamilyKind::AffineExp => {
                let lin = z * self.m as f64 + l;
                if z.re < 0.0 {
                    // f = e^{-z} (1 + lin e^{z})
                    -z.re + (Complex::new(1.0, 0.0) + lin * z.exp()).norm().ln()
                } else {
                    (lin + (-z).exp()).norm().ln()
                }
            }
        }
    }

    /// Asymptotic `ln M(r)` for radii where the dominant term is exact to machine precision.
    fn log_max_asymptotic(&self, r: f64) -> f64 {
        match self.kind {
            FamilyKind::ExpFamily => self.lambda.norm().ln() + r,
            FamilyKind::FatouMap | FamilyKind::AffineExp => r,
            FamilyKind::StarMap => -self.lambda.re + self.m as f64 * r.ln() + r,
        }
    }
}

fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

/// `ln M(r, f)`, closed form for the exponential family, circle sampling otherwise.
pub fn log_max_modulus(family: &FunctionFamily, r: f64) -> f64 {
    if family.kind == FamilyKind::ExpFamily {
        return family.log_max_asymptotic(r);
    }
    if r > ASYMPTOTIC_RADIUS {
        return family.log_max_asymptotic(r);
    }
    let at = |th: f64| family.log_abs(Complex::from_polar(r, th));
    let step = std::f64::consts::TAU / CIRCLE_SAMPLES as f64;
    let (mut best_i, mut best) = (0, f64::NEG_INFINITY);
    for i in 0..CIRCLE_SAMPLES {
        let v = at(i as f64 * step);
        if v > best {
            best = v;
            best_i = i;
        }
    }
    let th = best_i as f64 * step;
    let (_, refined) = golden_max(at, th - step, th + step, 1e-13);
    refined.max(best)
}

pub fn max_modulus(family: &FunctionFamily, r: f64) -> Result<Tower> {
    if !(r > 0.0) {
        return Err(HairError::Precondition("max_modulus needs r > 0".into()));
    }
    Ok(Tower::from_log(log_max_modulus(family, r)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MaxModulusMethod {
    ClosedForm,
    CircleSampled,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MaxModulusCurve {
    pub family: FunctionFamily,
    pub samples: Vec<(f64, Tower)>,
    pub method: MaxModulusMethod,
}

pub fn max_modulus_curve(family: &FunctionFamily, radii: &[f64]) -> Result<MaxModulusCurve> {
    let samples = radii
        .iter()
        .map(|&r| Ok((r, max_modulus(family, r)?)))
        .collect::<Result<Vec<_>>>()?;
    let method = if family.kind == FamilyKind::ExpFamily {
        MaxModulusMethod::ClosedForm
    } else {
        MaxModulusMethod::CircleSampled
    };
    Ok(MaxModulusCurve { family: *family, samples, method })
}

/// `M(t, f)` for a tower radius.
pub fn max_modulus_tower(family: &FunctionFamily, t: &Tower) -> Tower {
    match t.to_real() {
        Some(r) if r <= ASYMPTOTIC_RADIUS || family.kind == FamilyKind::ExpFamily && r < 1e300 => {
            Tower::from_log(log_max_modulus(family, r))
        }
        _ => match family.kind {
            FamilyKind::ExpFamily => t.add_log(family.lambda.norm().ln()).exp(),
            FamilyKind::FatouMap | FamilyKind::AffineExp => t.exp(),
            FamilyKind::StarMap => {
                let corr = t
                    .ln_real()
                    .map(|lr| family.m as f64 * lr - family.lambda.re)
                    .unwrap_or(0.0);
                t.add_log(corr).exp()
            }
        },
    }
}

/// `[M^1(R), ..., M^n(R)]`.
pub fn iterated_max_modulus(family: &FunctionFamily, r: f64, n: usize) -> Result<Vec<Tower>> {
    let rt = Tower::from_real(r)?;
    let first = max_modulus(family, r)?;
    if !first.gt(&rt) {
        return Err(HairError::InadmissibleR(r));
    }
    let mut out = Vec::with_capacity(n);
    let mut cur = rt;
    for _ in 0..n {
        cur = if family.kind == FamilyKind::ExpFamily {
            cur.add_log(family.lambda.norm().ln()).exp()
        } else {
            max_modulus_tower(family, &cur)
        };
        out.push(cur);
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SemiconjReport {
    /// Largest `|π(f(z)) − g(π(z))| / max(1, |g(π(z))|)`.
    pub max_residual: f64,
    pub max_abs_residual: f64,
    pub worst_z: Complex,
    pub samples: usize,
}

fn check_pair(f: &FunctionFamily, g: &FunctionFamily, a: Complex) -> Result<()> {
    let ok_pair = g.kind == FamilyKind::StarMap
        && a == Complex::new(-1.0, 0.0)
        && f.lambda == g.lambda
        && match f.kind {
            FamilyKind::FatouMap => g.m == 1,
            FamilyKind::AffineExp => g.m == f.m,
            _ => false,
        };
    if ok_pair {
        Ok(())
    } else {
        Err(HairError::MismatchedPair)
    }
}

/// Residual of `π∘f = g∘π` at one point, `π(z) = e^{az}`: (relative, absolute).
pub fn semiconj_residual(f: &FunctionFamily, g: &FunctionFamily, a: Complex, z: Complex) -> (f64, f64) {
    let lhs = (a * f.eval_unchecked(z)).exp();
    let rhs = g.eval_unchecked((a * z).exp());
    let abs = (lhs - rhs).norm();
    (abs / rhs.norm().max(1.0), abs)
}

pub fn check_semiconjugacy(
    f: &FunctionFamily,
    g: &FunctionFamily,
    a: Complex,
    samples: usize,
    seed: u64,
) -> Result<SemiconjReport> {
    check_pair(f, g, a)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rep = SemiconjReport { max_residual: 0.0, max_abs_residual: 0.0, worst_z: Complex::new(0.0, 0.0), samples };
    for _ in 0..samples {
        let z = Complex::new(rng.gen_range(-5.0..=5.0), rng.gen_range(-5.0..=5.0));
        let (rel, abs) = semiconj_residual(f, g, a, z);
        if rel > rep.max_residual {
            rep.max_residual = rel;
            rep.worst_z = z;
        }
        rep.max_abs_residual = rep.max_abs_residual.max(abs);
    }
    Ok(rep)
}

/// `m^m e^{-m-λ}`, the critical value of the star map.
pub fn critical_value(m: u32, lambda: Complex) -> Complex {
    let m = m as f64;
    (Complex::new(m * m.ln() - m, 0.0) - lambda).exp()
}

/// `Re λ > 1 + m(ln m − 1)`.
pub fn criterion_halfplane(m: u32, lambda: Complex) -> bool {
    assert!(m >= 1, "criterion_halfplane needs m >= 1");
    let mf = m as f64;
    let holds = lambda.re > 1.0 + mf * (mf.ln() - 1.0);
    if holds {
        let v = critical_value(m, lambda).norm();
        assert!(v < (-1f64).exp(), "critical value {v} not inside |w| < 1/e");
    }
    holds
}

/// `λ > (m−1)(ln(m−1) − 1)` for real λ, with `0 < g(u) < u` spot-checked on (0, 50].
pub fn criterion_halfline(m: u32, lambda: f64) -> Result<bool> {
    if m < 2 {
        return Err(HairError::Precondition("criterion_halfline needs m >= 2".into()));
    }
    let k = (m - 1) as f64;
    let holds = lambda > k * (k.ln() - 1.0);
    if holds {
        let g = FunctionFamily::star(m, Complex::new(lambda, 0.0))?;
        for i in 0..=400 {
            let u = 50.0 * 10f64.powf(-8.0 * (1.0 - i as f64 / 400.0));
            let gu = g.eval_unchecked(Complex::new(u, 0.0)).re;
            assert!(gu > 0.0 && gu < u, "g({u}) = {gu} violates 0 < g(u) < u");
        }
    }
    Ok(holds)
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct BasinHeuristic {
    pub converged: bool,
    pub steps: usize,
    pub last: Complex,
    /// Always true: orbit convergence is not a proof of immediate-basin membership.
    pub heuristic: bool,
}

/// Iterate the critical value of the star map and report convergence to 0.
pub fn critical_orbit_heuristic(m: u32, lambda: Complex) -> Result<BasinHeuristic> {
    let g = FunctionFamily::star(m, lambda)?;
    let mut w = critical_value(m, lambda);
    for n in 0..10_000 {
        if w.norm() < 1e-6 {
            return Ok(BasinHeuristic { converged: true, steps: n, last: w, heuristic: true });
        }
        w = g.eval_unchecked(w);
        if !w.is_finite() {
            break;
        }
    }
    Ok(BasinHeuristic { converged: false, steps: 10_000, last: w, heuristic: true })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixedPoint {
    pub point: f64,
    pub multiplier: f64,
}

fn bisect(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let fa = f(a);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m == a || m == b || b - a < 1e-14 {
            break;
        }
        if (f(m) > 0.0) == (fa > 0.0) {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// The attracting and repelling real fixed points of `λe^z`, `0 < λ < 1/e`.
pub fn real_fixed_points(family: &FunctionFamily) -> Result<[FixedPoint; 2]> {
    if !family.is_real_hair_exp() {
        return Err(HairError::Precondition("real_fixed_points needs ExpFamily with 0 < lambda < 1/e".into()));
    }
    let l = family.lambda.re;
    let f = |q: f64| l * q.exp() - q;
    let turn = -l.ln();
    let qa = bisect(f, 0.0, turn);
    let mut hi = 2.0 * turn + 1.0;
    while f(hi) <= 0.0 {
        hi *= 2.0;
    }
    let qr = bisect(f, turn, hi);
    Ok([
        FixedPoint { point: qa, multiplier: l * qa.exp() },
        FixedPoint { point: qr, multiplier: l * qr.exp() },
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex {
        Complex::new(re, im)
    }

    #[test]
    fn eval_examples() {
        let e = FunctionFamily::exp_family(0.2).unwrap();
        assert_eq!(e.eval(c(0.0, 0.0)).unwrap(), c(0.2, 0.0));
        let f = FunctionFamily::fatou(c(1.0, 0.0)).unwrap();
        assert_eq!(f.eval(c(0.0, 0.0)).unwrap(), c(2.0, 0.0));
        let g = FunctionFamily::star(1, c(1.0, 0.0)).unwrap();
        assert!((g.eval(c(1.0, 0.0)).unwrap().re - (-2f64).exp()).abs() < 1e-15);
        assert_eq!(e.eval(c(800.0, 0.0)), Err(HairError::NeedsLogLift));
    }

    #[test]
    fn family_invariants() {
        assert!(FunctionFamily::fatou(c(0.0, 1.0)).is_err());
        assert!(FunctionFamily::affine(1, c(0.0, 0.0)).is_err());
        assert!(FunctionFamily::star(0, c(0.0, 0.0)).is_err());
    }

    #[test]
    fn derivative_matches_difference() {
        let fams = [
            FunctionFamily::exp_family(0.3).unwrap(),
            FunctionFamily::fatou(c(1.0, 0.5)).unwrap(),
            FunctionFamily::affine(3, c(0.2, 0.0)).unwrap(),
            FunctionFamily::star(2, c(0.5, 0.1)).unwrap(),
        ];
        let z = c(0.7, -0.4);
        let h = 1e-6;
        for f in fams {
            let num = (f.eval(z + c(h, 0.0)).unwrap() - f.eval(z - c(h, 0.0)).unwrap()) / (2.0 * h);
            assert!((num - f.derivative(z)).norm() < 1e-7, "{:?}", f.kind);
        }
    }

    #[test]
    fn log_abs_agrees_with_eval() {
        let f = FunctionFamily::affine(2, c(0.3, 0.0)).unwrap();
        for z in [c(-3.0, 1.0), c(2.0, -2.0), c(-0.1, 0.1)] {
            let d = f.log_abs(z) - f.eval(z).unwrap().norm().ln();
            assert!(d.abs() < 1e-12);
        }
    }

    #[test]
    fn max_modulus_exp_closed_form() {
        let e = FunctionFamily::exp_family(0.2).unwrap();
        let m = max_modulus(&e, 1.0).unwrap().to_real().unwrap();
        assert!((m - 0.2 * 1f64.exp()).abs() < 1e-12);
    }

    #[test]
    fn max_modulus_fatou_dense_oracle() {
        let f = FunctionFamily::fatou(c(1.0, 0.0)).unwrap();
        let n = 1_000_000;
        let oracle = (0..n)
            .map(|i| {
                let z = Complex::from_polar(2.0, std::f64::consts::TAU * i as f64 / n as f64);
                (z + c(1.0, 0.0) + (-z).exp()).norm()
            })
            .fold(0.0, f64::max);
        let m = max_modulus(&f, 2.0).unwrap().to_real().unwrap();
        assert!(((m - oracle) / oracle).abs() < 1e-6);
        assert!(m >= oracle * (1.0 - 1e-12));
    }

    #[test]
    fn iterated_examples() {
        let e = FunctionFamily::exp_family(0.2).unwrap();
        let it = iterated_max_modulus(&e, 5.0, 2).unwrap();
        let m1 = 0.2 * 5f64.exp();
        assert!((it[0].to_real().unwrap() - m1).abs() < 1e-9);
        assert_eq!(it[0].height(), 2);
        let l2 = it[1].ln_real().unwrap();
        assert!((l2 - (0.2f64.ln() + m1)).abs() < 1e-9);
        assert!(iterated_max_modulus(&e, 5.0, 0).unwrap().is_empty());
        assert!(matches!(iterated_max_modulus(&e, 1.0, 2), Err(HairError::InadmissibleR(_))));
        let f = FunctionFamily::fatou(c(1.0, 0.0)).unwrap();
        let one = iterated_max_modulus(&f, 3.0, 1).unwrap();
        assert_eq!(one[0].cmp_tol(&max_modulus(&f, 3.0).unwrap()), std::cmp::Ordering::Equal);
    }

    #[test]
    fn semiconjugacy_examples() {
        let f = FunctionFamily::fatou(c(1.0, 0.0)).unwrap();
        let g = FunctionFamily::star(1, c(1.0, 0.0)).unwrap();
        let a = c(-1.0, 0.0);
        assert!(semiconj_residual(&f, &g, a, c(0.0, 0.0)).1 < 1e-16);
        let f2 = FunctionFamily::affine(2, c(0.0, 0.0)).unwrap();
        let g2 = FunctionFamily::star(2, c(0.0, 0.0)).unwrap();
        assert!(semiconj_residual(&f2, &g2, a, c(0.0, std::f64::consts::PI)).0 < 1e-12);
        assert_eq!(check_semiconjugacy(&f, &g2, a, 10, 1).unwrap_err(), HairError::MismatchedPair);
    }

    #[test]
    fn criteria() {
        assert!(criterion_halfplane(4, c(3.0, 0.0)));
        assert!((critical_value(4, c(3.0, 0.0)).norm() - 256.0 * (-7f64).exp()).abs() < 1e-12);
        assert!(!criterion_halfplane(4, c(0.0, 0.0)));
        assert!(criterion_halfplane(1, c(2.0, 0.0)));
        assert!(criterion_halfline(2, 0.0).unwrap());
        assert!(!criterion_halfline(2, -2.0).unwrap());
        assert!(criterion_halfline(3, 0.0).unwrap());
        assert!(criterion_halfline(1, 0.0).is_err());
    }

    #[test]
    fn basin_heuristic() {
        assert!(critical_orbit_heuristic(2, c(0.0, 0.0)).unwrap().converged);
        assert!(critical_orbit_heuristic(1, c(2.0, 0.0)).unwrap().converged);
        assert!(!critical_orbit_heuristic(4, c(0.0, 0.0)).unwrap().converged);
    }

    #[test]
    fn fixed_points() {
        let e = FunctionFamily::exp_family(0.2).unwrap();
        let [a, r] = real_fixed_points(&e).unwrap();
        assert!((a.point - 0.259171).abs() < 1e-5);
        assert!((r.point - 2.542641).abs() < 1e-5);
        assert!(a.multiplier < 1.0 && r.multiplier > 1.0);
        let e3 = FunctionFamily::exp_family(0.3).unwrap();
        assert!((real_fixed_points(&e3).unwrap()[0].point - 0.489402).abs() < 1e-5);
        assert!(real_fixed_points(&FunctionFamily::exp_family(0.5).unwrap()).is_err());
    }
}
