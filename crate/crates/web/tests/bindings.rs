use perpetual_web::{l_set_profile, overshoot_cdf, potential_histogram};
use serde_json::Value;

#[test]
fn lattice_histogram_matches_closed_form() {
    let v: Value = serde_json::from_str(&potential_histogram("lattice", vec![2.0, 1.0], 0.0, 10.0, 0, 2000, 0.0, 3).unwrap()).unwrap();
    let masses = v["masses"].as_array().unwrap();
    let exact = v["exact"].as_array().unwrap();
    assert_eq!(masses.len(), exact.len());
    for (m, e) in masses.iter().zip(exact) {
        assert!((m.as_f64().unwrap() - e.as_f64().unwrap()).abs() < 0.05);
    }
}

#[test]
fn profile_is_monotone_for_decreasing_f() {
    let v: Value =
        serde_json::from_str(&l_set_profile("stable", vec![1.0, 0.5, 1.0], "recip2", 0.5, 0.5, 0.0, 4.0, 8, 300, 40.0, 0.0, 1).unwrap())
            .unwrap();
    let g: Vec<f64> = v["g_hat"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    assert!(g.windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn overshoots_and_errors() {
    let v: Value = serde_json::from_str(&overshoot_cdf(1.0, 0.5, 1.0, vec![1.0, 4.0], 500, 2).unwrap()).unwrap();
    assert_eq!(v["cdf"].as_array().unwrap().len(), 2);
    assert!(potential_histogram("nope", vec![], 0.0, 1.0, 4, 10, 0.0, 1).is_err());
    assert!(potential_histogram("bm", vec![-1.0, 1.0], 0.0, 1.0, 4, 10, 0.0, 1).is_err());
}
