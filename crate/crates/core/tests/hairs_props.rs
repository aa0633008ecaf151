use std::f64::consts::PI;

use hairlab::hairs::{head_start_order, trace_hair, verify_fast_lemma, HeadStart, Which};
use hairlab::functions::FunctionFamily;
use hairlab::logtransform::{tract_index, Address, LogModel};
use hairlab::Complex;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Repelling fixed point of `λe^x` by plain bisection on `λe^x − x` over `[ln(1/λ), 50]`.
fn q_r(lambda: f64) -> f64 {
    let (mut a, mut b) = (-lambda.ln(), 50.0);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if lambda * m.exp() - m > 0.0 {
            b = m;
        } else {
            a = m;
        }
    }
    0.5 * (a + b)
}

fn address(choice: usize) -> Address {
    match choice {
        0 => Address::constant(0),
        1 => Address::constant(1),
        2 => Address::periodic(vec![1, -1]),
        3 => Address::prefix_periodic(vec![2], vec![0]),
        _ => Address::periodic(vec![0, -2, 1]),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn forward_semiconjugacy(lambda in 0.1f64..0.35, choice in 0usize..5, t0 in 0.3f64..2.0) {
        let f = FunctionFamily::exp_family(lambda).unwrap();
        let tol = 1e-9;
        let h = trace_hair(&f, &address(choice), t0..=t0 + 1.0, 5, tol).unwrap();
        for i in 0..h.points.len() {
            let r = h.forward_residual(i).unwrap();
            prop_assert!(r < 10.0 * tol, "residual {r} at t = {}", h.potentials[i]);
        }
    }

    #[test]
    fn order_agrees_with_potential(lambda in 0.1f64..0.35, choice in 0usize..5, k in 1.1f64..4.0, m in 0.5f64..6.0) {
        let f = FunctionFamily::exp_family(lambda).unwrap();
        let model = LogModel::explicit_real(lambda).unwrap();
        let h = trace_hair(&f, &address(choice), 0.5..=4.0, 8, 1e-9).unwrap();
        let mut decided = 0;
        for i in 0..h.points.len() {
            for j in i + 1..h.points.len() {
                let (lo, hi) = (h.points[i].ln(), h.points[j].ln());
                if tract_index(lo.im) != tract_index(hi.im) {
                    continue;
                }
                match head_start_order(&model, hi, lo, k, m, 12) {
                    Ok(HeadStart::Decided { leader, .. }) => {
                        prop_assert_eq!(leader, Which::First);
                        decided += 1;
                    }
                    Ok(HeadStart::Undecided { .. }) | Err(_) => {}
                }
                if let Ok(HeadStart::Decided { leader, .. }) = head_start_order(&model, lo, hi, k, m, 12) {
                    prop_assert_eq!(leader, Which::Second);
                }
            }
        }
        prop_assert!(decided > 0);
    }
}

#[test]
fn endpoint_limit() {
    for lambda in [0.1, 0.2, 0.3] {
        let f = FunctionFamily::exp_family(lambda).unwrap();
        let h = trace_hair(&f, &Address::constant(0), 1e-9..=1e-3, 6, 1e-10).unwrap();
        let q = q_r(lambda);
        assert!((h.endpoint - Complex::new(q, 0.0)).norm() < 1e-6);
        for z in &h.points {
            assert!((z - Complex::new(q, 0.0)).norm() < 1e-2 * q);
        }
        let gaps: Vec<f64> = h.points.iter().map(|z| (z - Complex::new(q, 0.0)).norm()).collect();
        assert!(gaps.windows(2).all(|g| g[0] <= g[1]));
    }
}

#[test]
fn fast_lemma_never_refutes() {
    let mut rng = ChaCha8Rng::seed_from_u64(1009);
    let (mut admissible, mut drawn) = (0, 0);
    while admissible < 1000 {
        drawn += 1;
        assert!(drawn < 1_000_000, "too few admissible samples");
        let lambda = rng.gen_range(0.05..0.35);
        let model = LogModel::explicit_real(lambda).unwrap();
        let k = rng.gen_range(1.01..8.0);
        let m = rng.gen_range(2.0..8.0);
        let zeta = Complex::new(rng.gen_range(-3.0..6.0), rng.gen_range(-PI..PI));
        let w = Complex::new(k * zeta.re.max(0.0) + m + rng.gen_range(1e-6..15.0), rng.gen_range(-PI..PI));
        if tract_index(w.im) != tract_index(zeta.im) {
            continue;
        }
        let Ok(rep) = verify_fast_lemma(&model, w, zeta, k, m) else { continue };
        admissible += 1;
        assert!(rep.holds, "refuted at λ={lambda} w={w} ζ={zeta} K={k} M={m}");
    }
}
