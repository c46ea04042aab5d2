use perpetual_core::criteria::{dk_test, erickson_maller_test, potential_integral};
use perpetual_core::perpetual::Outcome;
use perpetual_core::potential::{analytic_potential, default_grid, estimate_potential, uniform_grid};
use perpetual_core::region::{Interval, Role};
use perpetual_core::{build_model, ModelSpec, RegionSpec, TestFunction};
use proptest::prelude::*;

fn nonincreasing_corpus() -> Vec<TestFunction> {
    vec![
        TestFunction::exp_decay(),
        TestFunction::reciprocal(2.0),
        TestFunction::reciprocal(1.0),
        TestFunction::indicator(0.0, 1.0),
    ]
}

#[test]
fn dk_and_potential_agree_without_lattice() {
    let bm = build_model(ModelSpec::drifted_bm(1.0, 1.0)).unwrap();
    let grid = uniform_grid(-4.0, 256.0, 1040);
    let pm = analytic_potential(&bm, &grid).unwrap().unwrap();
    for f in nonincreasing_corpus() {
        let dk = dk_test(&f, 0.0).unwrap();
        let pi = potential_integral(&f, &pm, &RegionSpec::above(0.0), 0.0).unwrap();
        assert_eq!(dk.verdict, pi.verdict, "{}", f.id());
        assert_ne!(dk.verdict, Outcome::Inconclusive, "{}", f.id());
    }
}

#[test]
fn erickson_maller_matches_dk_on_lattice_walk() {
    let m = build_model(ModelSpec::lattice_cpp(2.0, 1.0)).unwrap();
    let pm = analytic_potential(&m, &default_grid(&m, 0.0, 512.0)).unwrap().unwrap();
    for f in nonincreasing_corpus() {
        let em = erickson_maller_test(&f, &pm, 0.5).unwrap();
        let dk = dk_test(&f, 0.5).unwrap();
        assert_eq!(em.verdict, dk.verdict, "{}", f.id());
    }
}

fn shared_pm() -> perpetual_core::PotentialMeasure {
    let m = build_model(ModelSpec::truncated_stable(1.0, 0.5, 1.0)).unwrap();
    estimate_potential(&m, &uniform_grid(0.0, 16.0, 64), 200, 30.0, None, 8).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn additive_over_disjoint_regions(cut in 1.0f64..15.0, w in 0.1f64..0.9) {
        let pm = shared_pm();
        let lo = (cut * 4.0).floor() / 4.0;
        let mid = lo + 0.25 * (w * 4.0).ceil();
        let f = TestFunction::step("s", &[(2.0, 0.0, 3.0), (0.5, 3.0, 9.0)]).unwrap();
        let e1 = RegionSpec::explicit(vec![Interval::new(0.0, lo)], Role::Region).unwrap();
        let e2 = RegionSpec::explicit(vec![Interval::new(lo, mid)], Role::Region).unwrap();
        let both = RegionSpec::explicit(vec![Interval::new(0.0, lo), Interval::new(lo, mid)], Role::Region).unwrap();
        let v1 = potential_integral(&f, &pm, &e1, 0.0).unwrap().value;
        let v2 = potential_integral(&f, &pm, &e2, 0.0).unwrap().value;
        let v = potential_integral(&f, &pm, &both, 0.0).unwrap().value;
        prop_assert!((v - (v1 + v2)).abs() <= 1e-12 * v.abs().max(1.0));
    }

    #[test]
    fn linear_in_step_functions(c in 0.001f64..1000.0) {
        let pm = shared_pm();
        let f = TestFunction::step("s", &[(1.0, 0.0, 2.0), (0.25, 2.0, 6.0)]).unwrap();
        let e = RegionSpec::above(0.0);
        let base = potential_integral(&f, &pm, &e, 0.0).unwrap().value;
        let scaled = potential_integral(&f.scaled(c).unwrap(), &pm, &e, 0.0).unwrap().value;
        prop_assert!((scaled - c * base).abs() <= 1e-13 * (c * base).abs());
    }
}

#[test]
fn lattice_sine_breaks_the_lebesgue_test() {
    let m = build_model(ModelSpec::lattice_cpp(2.0, 1.0)).unwrap();
    let pm = analytic_potential(&m, &default_grid(&m, 0.0, 256.0)).unwrap().unwrap();
    let f = TestFunction::lattice_sine(1.0).unwrap();
    assert_eq!(dk_test(&f, 0.0).unwrap().verdict, Outcome::Infinite);
    let pi = potential_integral(&f, &pm, &RegionSpec::above(-0.5), 0.0).unwrap();
    assert_eq!(pi.value, 0.0);
    assert_eq!(pi.verdict, Outcome::Finite);
}
