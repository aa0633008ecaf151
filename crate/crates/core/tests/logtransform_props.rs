use hairlab::functions::FunctionFamily;
use hairlab::logtransform::{check_expansion, omega_domination_radius, verify_omega_domination, LogModel};
use hairlab::tractlab::RectTract;
use hairlab::Complex;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn exp_conjugates_model() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for lambda in [Complex::new(0.2, 0.0), Complex::new(-1.0, 0.5), Complex::new(3.0, -2.0)] {
        let f = FunctionFamily::new(hairlab::functions::FamilyKind::ExpFamily, lambda, 1).unwrap();
        let model = LogModel::explicit_exp(&f).unwrap();
        for _ in 0..10_000 {
            let w = Complex::new(rng.gen_range(-10.0..4.0), rng.gen_range(-30.0..30.0));
            let lhs = model.log_eval(w).unwrap().w.exp();
            let rhs = f.eval(w.exp()).unwrap();
            assert!((lhs - rhs).norm() < 1e-9 * rhs.norm().max(1.0), "w = {w}");
        }
    }
}

proptest! {
    #[test]
    fn expansion_holds(lambda in 0.01f64..5.0, u in -2.0f64..6.0, v in -20.0f64..20.0, r in 0.0f64..10.0) {
        let model = LogModel::explicit_real(lambda).unwrap();
        let r = r.max(lambda.ln());
        if let Ok(rep) = check_expansion(&model, Complex::new(u, v), r) {
            prop_assert!(rep.holds, "{rep:?}");
        }
    }

    #[test]
    fn omega_radius_dominates(eps in 0.02f64..2.0, ratio in 1.01f64..20.0, r in 0.1f64..20.0) {
        let delta = eps * ratio;
        let big = omega_domination_radius(eps, delta, r).unwrap();
        prop_assert!(verify_omega_domination(eps, delta, r, big, 12));
    }

    #[test]
    fn explicit_log_max_increasing(lambda in 0.01f64..5.0, a in 0.0f64..600.0, gap in 1e-6f64..50.0) {
        let model = LogModel::explicit_real(lambda).unwrap();
        prop_assert!(model.log_max(a + gap).unwrap().gt(&model.log_max(a).unwrap()));
    }
}

#[test]
fn omega_grid() {
    for eps in [0.05, 0.1, 0.2, 0.5, 1.0] {
        for mult in [1.5, 2.0, 3.0, 5.0, 10.0] {
            for r in [0.5, 1.0, 2.0, 5.0, 10.0] {
                let big = omega_domination_radius(eps, eps * mult, r).unwrap();
                assert!(verify_omega_domination(eps, eps * mult, r, big, 12));
            }
        }
    }
}

#[test]
fn bounded_log_max_increasing() {
    let model = LogModel::bounded(RectTract::from_plain(&[4.0, 9.0], &[-51.0, -3.0]).unwrap(), 1e-8);
    let vals: Vec<_> = (0..20).map(|i| model.log_max(1.0 + 0.7 * i as f64).unwrap()).collect();
    assert!(vals.windows(2).all(|w| w[1].gt(&w[0])));
}
