//! Adaptive 7-point Gauss / 15-point Kronrod quadrature.

use crate::error::{HairError, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Quad {
    pub value: f64,
    pub error: f64,
    pub panels: usize,
}

fn gk15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for i in 0..7 {
        let x = h * XGK[i];
        let s = f(c - x) + f(c + x);
        k += WGK[i] * s;
        if i % 2 == 1 {
            g += WG[i / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Integrate `f` over `[a, b]` until every panel meets `rel_tol` relative to the running total.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64) -> Result<Quad> {
    if a == b {
        return Ok(Quad { value: 0.0, error: 0.0, panels: 0 });
    }
    let (whole, err) = gk15(&f, a, b);
    let mut stack = vec![(a, b, whole, err, 0u32)];
    let (mut value, mut error, mut panels) = (0.0, 0.0, 0);
    let scale = whole.abs();
    while let Some((lo, hi, v, e, depth)) = stack.pop() {
        let budget = rel_tol * scale.max(f64::MIN_POSITIVE) * ((hi - lo) / (b - a)).abs().max(1e-3);
        if e <= budget || e <= 1e-15 * v.abs() {
            value += v;
            error += e;
            panels += 1;
            continue;
        }
        if depth >= 60 {
            return Err(HairError::Quadrature { lo, hi });
        }
        let mid = 0.5 * (lo + hi);
        let (v1, e1) = gk15(&f, lo, mid);
        let (v2, e2) = gk15(&f, mid, hi);
        stack.push((lo, mid, v1, e1, depth + 1));
        stack.push((mid, hi, v2, e2, depth + 1));
    }
    Ok(Quad { value, error, panels })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exact() {
        let q = integrate(|x| x.powi(5) - 3.0 * x, 0.0, 2.0, 1e-12).unwrap();
        assert!((q.value - (64.0 / 6.0 - 6.0)).abs() < 1e-12);
    }

    #[test]
    fn peaked_integrand() {
        let e: f64 = 1e-3;
        let q = integrate(|x| 1.0 / x.hypot(e), -1.0, 1.0, 1e-10).unwrap();
        let exact = 2.0 * (1.0 / e).asinh();
        assert!((q.value - exact).abs() < 1e-8 * exact);
        assert!(q.error < 1e-8 * exact);
    }
}
