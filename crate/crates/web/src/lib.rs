//! Browser bindings. Each call runs a small Monte Carlo experiment and
//! returns JSON for the page to draw; seeds are plain numbers so runs are
//! reproducible from the page.

use perpetual_core::counterexample::estimate_overshoot_cdf;
use perpetual_core::perpetual::{estimate_l_set, Budget};
use perpetual_core::potential::{analytic_potential, default_grid, estimate_potential, uniform_grid};
use perpetual_core::{build_model, LevyModel, ModelSpec, TestFunction};
use serde::Serialize;
use wasm_bindgen::prelude::wasm_bindgen;

/// `kind` is one of `drift`, `bm`, `lattice`, `stable` with parameters
/// `[drift]`, `[drift, var]`, `[rate, span]`, `[activity, index, cutoff]`.
fn model(kind: &str, p: &[f64]) -> Result<LevyModel, String> {
    let need = |n: usize| if p.len() == n { Ok(()) } else { Err(format!("{kind} takes {n} parameters")) };
    let spec = match kind {
        "drift" => need(1).map(|_| ModelSpec::pure_drift(p[0]))?,
        "bm" => need(2).map(|_| ModelSpec::drifted_bm(p[0], p[1]))?,
        "lattice" => need(2).map(|_| ModelSpec::lattice_cpp(p[0], p[1]))?,
        "stable" => need(3).map(|_| ModelSpec::truncated_stable(p[0], p[1], p[2]))?,
        other => return Err(format!("unknown model {other}")),
    };
    build_model(spec).map_err(|e| e.to_string())
}

fn function(name: &str) -> Result<TestFunction, String> {
    Ok(match name {
        "exp" => TestFunction::exp_decay(),
        "recip1" => TestFunction::reciprocal(1.0),
        "recip2" => TestFunction::reciprocal(2.0),
        "indicator" => TestFunction::indicator(0.0, 1.0),
        "lattice_sine" => TestFunction::lattice_sine(1.0).map_err(|e| e.to_string())?,
        other => return Err(format!("unknown function {other}")),
    })
}

fn step_of(model: &LevyModel, step: f64) -> Option<f64> {
    (model.needs_step() || step > 0.0).then_some(if step > 0.0 { step } else { 0.01 })
}

fn json<T: Serialize>(v: &T) -> Result<String, String> {
    serde_json::to_string(v).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct Histogram {
    model: String,
    edges: Vec<f64>,
    masses: Vec<f64>,
    stderr: Vec<f64>,
    /// Closed form on the same bins, when the model has one.
    exact: Option<Vec<f64>>,
}

/// Occupation histogram of `U` on `bins` bins over `[lo, hi]`.
#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn potential_histogram(
    kind: &str,
    params: Vec<f64>,
    lo: f64,
    hi: f64,
    bins: usize,
    paths: usize,
    step: f64,
    seed: u32,
) -> Result<String, String> {
    let m = model(kind, &params)?;
    let edges = if m.lattice_span().is_some() { default_grid(&m, lo, hi) } else { uniform_grid(lo, hi, bins.max(1)) };
    let horizon = 2.0 * (hi - lo.min(0.0)) / m.mean() + 10.0;
    let pm = estimate_potential(&m, &edges, paths, horizon, step_of(&m, step), seed as u64).map_err(|e| e.to_string())?;
    let exact = analytic_potential(&m, &edges).map_err(|e| e.to_string())?.map(|p| p.masses);
    json(&Histogram { model: m.id(), edges: pm.edges, masses: pm.masses, stderr: pm.stderr, exact })
}

#[derive(Serialize)]
struct Profile {
    xs: Vec<f64>,
    g_hat: Vec<f64>,
    stderr: Vec<f64>,
    member: Vec<bool>,
    threshold: Option<f64>,
}

/// `Ĝ_a(x) = P(I^x_T > a)` on `n + 1` starting points and the set where it
/// is at most `q`.
#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn l_set_profile(
    kind: &str,
    params: Vec<f64>,
    f: &str,
    a: f64,
    q: f64,
    x_lo: f64,
    x_hi: f64,
    n: usize,
    paths: usize,
    horizon: f64,
    step: f64,
    seed: u32,
) -> Result<String, String> {
    let m = model(kind, &params)?;
    let f = function(f)?;
    let n = n.max(1);
    let xs: Vec<f64> = (0..=n).map(|i| x_lo + (x_hi - x_lo) * i as f64 / n as f64).collect();
    let mut budget = Budget::new(paths, horizon, seed as u64);
    if let Some(h) = step_of(&m, step) {
        budget = budget.with_step(h);
    }
    let l = estimate_l_set(&f, &m, a, q, &xs, &budget).map_err(|e| e.to_string())?;
    json(&Profile {
        xs: l.points.iter().map(|p| p.x).collect(),
        g_hat: l.points.iter().map(|p| p.g_hat).collect(),
        stderr: l.points.iter().map(|p| p.stderr).collect(),
        member: l.points.iter().map(|p| p.member).collect(),
        threshold: l.threshold,
    })
}

#[derive(Serialize)]
struct Overshoots {
    eps: Vec<f64>,
    levels: Vec<f64>,
    /// `cdf[level][k] = P̂(O <= eps[k])`.
    cdf: Vec<Vec<f64>>,
    zero_mass: Vec<f64>,
    sup_distance: f64,
    dkw_band: f64,
}

/// Overshoot laws of the truncated stable subordinator at increasing levels.
#[wasm_bindgen]
pub fn overshoot_cdf(activity: f64, index: f64, cutoff: f64, levels: Vec<f64>, paths: usize, seed: u32) -> Result<String, String> {
    let m = model("stable", &[activity, index, cutoff])?;
    let t = estimate_overshoot_cdf(&m, &levels, paths, seed as u64, false).map_err(|e| e.to_string())?;
    let cdf = (0..t.levels.len()).map(|l| (0..t.eps_grid.len()).map(|k| t.cdf(l, k)).collect()).collect();
    let zero_mass = (0..t.levels.len()).map(|l| t.zero_mass(l)).collect();
    json(&Overshoots {
        eps: t.eps_grid.clone(),
        levels: t.levels.clone(),
        cdf,
        zero_mass,
        sup_distance: t.sup_distance,
        dkw_band: t.dkw_band,
    })
}
