use perpetual_core::levy::simulate_path;
use perpetual_core::perpetual::{
    batty_inequality_check, finiteness_diagnosis, g_profile, integral_profile, Budget, Outcome,
};
use perpetual_core::{build_model, ModelSpec, TestFunction};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn integral_grows_continuously(seed in any::<u64>(), bm in any::<bool>()) {
        let (spec, step) = if bm {
            (ModelSpec::drifted_bm(1.0, 1.0), Some(0.01))
        } else {
            (ModelSpec::truncated_stable(1.0, 0.5, 1.0), None)
        };
        let m = build_model(spec).unwrap();
        let f = TestFunction::exp_decay();
        let p = simulate_path(&m, 10.0, step, seed).unwrap();
        let times: Vec<f64> = (0..=200).map(|k| k as f64 * 0.05).collect();
        let prof = integral_profile(&f, &p, 0.0, &times).unwrap();
        prop_assert!(prof.windows(2).all(|w| w[1] >= w[0]));
        // |f| <= 1 on the range visited, so increments are Lipschitz in t
        let sup = f.local_bound(p.values.iter().copied().fold(f64::INFINITY, f64::min), f64::INFINITY);
        prop_assert!(prof.windows(2).all(|w| w[1] - w[0] <= sup * 0.05 + 1e-12));
    }
}

#[test]
fn tail_probability_decreases_in_a() {
    let m = build_model(ModelSpec::lattice_cpp(2.0, 1.0)).unwrap();
    let f = TestFunction::exp_decay();
    let budget = Budget::new(500, 40.0, 12);
    let mut last = [f64::INFINITY; 5];
    for a in [0.0, 0.25, 0.5, 1.0, 2.0] {
        let g = g_profile(&f, &m, a, &[0.5, 1.5, 2.5, 3.5, 4.5], &budget).unwrap();
        for (k, t) in g.iter().enumerate() {
            assert!(t.g_hat <= last[k]);
            last[k] = t.g_hat;
        }
    }
}

#[test]
fn coupled_starts_order_the_integrals() {
    let m = build_model(ModelSpec::truncated_stable(1.0, 0.5, 1.0)).unwrap();
    let f = TestFunction::reciprocal(2.0);
    for seed in 0..50 {
        let p = simulate_path(&m, 30.0, None, seed).unwrap();
        let xs = [0.0, 0.5, 1.0, 3.0];
        let v: Vec<f64> = xs.iter().map(|&x| integral_profile(&f, &p, x, &[30.0]).unwrap()[0]).collect();
        assert!(v.windows(2).all(|w| w[1] <= w[0]), "{v:?}");
    }
}

#[test]
fn batty_holds_on_a_small_grid() {
    let m = build_model(ModelSpec::lattice_cpp(2.0, 1.0)).unwrap();
    for (f, a) in [(TestFunction::exp_decay(), 0.5), (TestFunction::indicator(0.0, 2.0), 1.0)] {
        let r = batty_inequality_check(&f, &m, 0.5, a, 10.0, 400, None, 3, None, Some((0.0, 4.0))).unwrap();
        assert!(r.holds, "{}: lhs {} rhs {}", f.id(), r.lhs, r.rhs);
    }
}

#[test]
fn bootstrap_agrees_on_clear_cases() {
    let m = build_model(ModelSpec::lattice_cpp(2.0, 1.0)).unwrap();
    let finite = finiteness_diagnosis(&TestFunction::exp_decay(), &m, 0.5, &[10.0, 20.0, 40.0, 80.0], 500, 1, None)
        .unwrap();
    assert_eq!(finite.outcome, Outcome::Finite);
    assert!(finite.bootstrap_agreement >= 0.95);
    let infinite =
        finiteness_diagnosis(&TestFunction::constant(1.0), &m, 0.5, &[10.0, 20.0, 40.0, 80.0], 500, 1, None).unwrap();
    assert_eq!(infinite.outcome, Outcome::Infinite);
    assert!(infinite.bootstrap_agreement >= 0.95);
}
