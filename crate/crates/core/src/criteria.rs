//! Analytic finiteness tests evaluated against a potential measure, and a
//! Monte Carlo probe of transience.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{invalid_arg, Error, Result};
use crate::function::TestFunction;
use crate::levy::{simulate_with, LevyModel, PathSample, SimOptions};
use crate::par;
use crate::perpetual::Outcome;
use crate::potential::PotentialMeasure;
use crate::region::RegionSpec;
use crate::rng::{domain, SeedTree};
use crate::stats::{proportion_se, quantile_sorted, sorted};

/// Doubling rungs of the Lebesgue test ladder.
pub const DK_RUNGS: u32 = 10;
/// Rungs of the ladders anchored at the top of a potential grid.
pub const GRID_RUNGS: u32 = 8;
/// Increment ratio at or below which partial sums are taken to converge.
pub const CONVERGENT_RATIO: f64 = 0.85;
/// Increment ratio at or above which partial sums are taken to diverge.
pub const DIVERGENT_RATIO: f64 = 0.95;
/// Ratios inspected by the divergence rule.
pub const RULE_WINDOW: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LadderPoint {
    pub upper: f64,
    pub partial: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionReport {
    pub test: String,
    /// `+inf` when the verdict is infinite.
    #[serde(with = "crate::json::ext_f64")]
    pub value: f64,
    /// Partial value over the largest window.
    pub truncated_value: f64,
    pub verdict: Outcome,
    pub ladder: Vec<LadderPoint>,
    #[serde(with = "crate::json::ext_f64")]
    pub last_ratio: f64,
    pub model_id: String,
    pub f_id: String,
    pub inputs_digest: String,
    pub note: String,
}

/// First 16 hex digits of the SHA-256 of the joined parts.
pub fn digest(parts: &[&str]) -> String {
    let mut h = Sha256::new();
    for p in parts {
        h.update(p.as_bytes());
        h.update([0u8]);
    }
    hex::encode(h.finalize())[..16].to_string()
}

fn f_descr(f: &TestFunction) -> String {
    match f.spec() {
        Some(s) => serde_json::to_string(&s).unwrap_or_else(|_| f.id().to_string()),
        None => format!("custom:{}", f.id()),
    }
}

fn pm_descr(pm: &PotentialMeasure) -> String {
    format!(
        "{}|{}|{}|{}|{}|{}|{}",
        pm.meta.model_id,
        pm.meta.paths,
        pm.meta.horizon,
        pm.meta.seed,
        pm.lo(),
        pm.hi(),
        pm.bins()
    )
}

/// Divergence rule on partial sums at increasing window endpoints.
///
/// With increments `d_k` and ratios `r_k = d_k / d_{k-1}` over the last
/// `RULE_WINDOW` rungs: negligible increments or every ratio at most
/// `CONVERGENT_RATIO` give finite; positive increments with every ratio at
/// least `DIVERGENT_RATIO` give infinite; anything else is inconclusive.
pub fn ladder_verdict(partials: &[f64]) -> (Outcome, f64) {
    let k = partials.len();
    if k < RULE_WINDOW + 1 {
        return (Outcome::Inconclusive, f64::NAN);
    }
    let inc: Vec<f64> = (0..k).map(|i| partials[i] - if i == 0 { 0.0 } else { partials[i - 1] }).collect();
    let scale = partials[k - 1].abs().max(1.0);
    let tiny = 1e-12 * scale;
    let tail = &inc[k - RULE_WINDOW - 1..];
    let ratios: Vec<f64> = tail
        .windows(2)
        .map(|w| {
            if w[1].abs() <= tiny {
                0.0
            } else if w[0].abs() <= tiny {
                f64::INFINITY
            } else {
                w[1] / w[0]
            }
        })
        .collect();
    let last = *ratios.last().unwrap();
    if tail[1..].iter().all(|d| d.abs() <= tiny) {
        return (Outcome::Finite, last);
    }
    if ratios.iter().all(|&r| r <= CONVERGENT_RATIO) {
        return (Outcome::Finite, last);
    }
    if tail[1..].iter().all(|&d| d > tiny) && ratios.iter().all(|&r| r >= DIVERGENT_RATIO) {
        return (Outcome::Infinite, last);
    }
    (Outcome::Inconclusive, last)
}

fn report(
    test: &str,
    ladder: Vec<LadderPoint>,
    model_id: String,
    f: &TestFunction,
    digest_parts: &[&str],
    note: String,
) -> CriterionReport {
    let partials: Vec<f64> = ladder.iter().map(|p| p.partial).collect();
    let (verdict, last_ratio) = ladder_verdict(&partials);
    let truncated_value = partials.last().copied().unwrap_or(0.0);
    CriterionReport {
        test: test.to_string(),
        value: if verdict == Outcome::Infinite { f64::INFINITY } else { truncated_value },
        truncated_value,
        verdict,
        ladder,
        last_ratio,
        model_id,
        f_id: f.id().to_string(),
        inputs_digest: digest(digest_parts),
        note,
    }
}

/// Window endpoints `hi * 2^{k-K}`, `k = 1..K`, kept when above `floor`.
fn grid_windows(hi: f64, floor: f64) -> Vec<f64> {
    (1..=GRID_RUNGS)
        .map(|k| if k == GRID_RUNGS { hi } else { hi * 2f64.powi(k as i32 - GRID_RUNGS as i32) })
        .filter(|&w| w > floor)
        .collect()
}

/// `∫_E f(x + y) U(dy)` over `E ∩ [pm.lo, w]`.
fn restricted_sum(f: &TestFunction, pm: &PotentialMeasure, e: &RegionSpec, x: f64, w: f64) -> f64 {
    let mut s = 0.0;
    for i in 0..pm.bins() {
        let (a, b) = (pm.edges[i], pm.edges[i + 1]);
        if a >= w {
            break;
        }
        let m = pm.masses[i];
        if m == 0.0 {
            continue;
        }
        match &pm.atoms {
            Some(atoms) => {
                let y = atoms[i];
                if y <= w && e.in_e(y) {
                    s += f.eval(x + y) * m;
                }
            }
            None => {
                // f averaged over the part of the bin inside E
                let mut int = 0.0;
                for (p, q) in e.e_pieces(a, b.min(w)) {
                    int += f.integral(x + p, x + q);
                }
                s += m / (b - a) * int;
            }
        }
    }
    s
}

/// `∫_E f(x + y) U(dy)` with a verdict from the partial sums over windows
/// `[pm.lo, L]` doubling up to the top of the grid.
pub fn potential_integral(f: &TestFunction, pm: &PotentialMeasure, e: &RegionSpec, x: f64) -> Result<CriterionReport> {
    if !e.covers(pm.hi()) {
        return Err(Error::Coverage(format!(
            "region '{}' is materialized to {} but the grid reaches {}",
            e.label,
            e.materialized_upper(),
            pm.hi()
        )));
    }
    let windows = grid_windows(pm.hi(), pm.lo().max(0.0));
    let ladder: Vec<LadderPoint> =
        windows.iter().map(|&w| LadderPoint { upper: w, partial: restricted_sum(f, pm, e, x, w) }).collect();
    let fd = f_descr(f);
    let pd = pm_descr(pm);
    let xs = x.to_string();
    let mut note = format!("E = {}; grid [{}, {}]", e.label, pm.lo(), pm.hi());
    if !pm.meta.warnings.is_empty() {
        note.push_str("; potential warnings: ");
        note.push_str(&pm.meta.warnings.join("; "));
    }
    Ok(report(
        "potential_integral",
        ladder,
        pm.meta.model_id.clone(),
        f,
        &["potential_integral", &fd, &pd, &e.label, &xs],
        note,
    ))
}

/// Lebesgue test: `∫_l^∞ f(s) ds` via partial integrals over `[l, w_k]`,
/// `w_k = l 2^k` (or `l + 2^k` when `l <= 0`), capped at the depth to which
/// `f` is materialized.
pub fn dk_test(f: &TestFunction, l: f64) -> Result<CriterionReport> {
    if !l.is_finite() {
        return Err(invalid_arg("lower cutoff must be finite"));
    }
    let upper_of = |k: u32| if l > 0.0 { l * 2f64.powi(k as i32) } else { l + 2f64.powi(k as i32) };
    let mut rungs = DK_RUNGS;
    let mut note = String::from("ladder extrapolation of partial integrals");
    if let Some(m) = f.materialized_to() {
        while rungs > 0 && upper_of(rungs) > m {
            rungs -= 1;
        }
        note = format!("{note}; f materialized to {m}, ladder capped at {} rungs", rungs);
    }
    let ladder: Vec<LadderPoint> = (1..=rungs)
        .map(|k| {
            let w = upper_of(k);
            LadderPoint { upper: w, partial: f.integral(l, w) }
        })
        .collect();
    let fd = f_descr(f);
    let ls = l.to_string();
    Ok(report("dk_test", ladder, String::new(), f, &["dk_test", &fd, &ls], note))
}

/// `U([0, y])` with linear interpolation inside continuous bins.
struct CumulativeU<'a> {
    pm: &'a PotentialMeasure,
    below: Vec<f64>,
}

impl<'a> CumulativeU<'a> {
    fn new(pm: &'a PotentialMeasure) -> Self {
        let mut below = Vec::with_capacity(pm.bins() + 1);
        let mut acc = 0.0;
        below.push(0.0);
        for i in 0..pm.bins() {
            acc += Self::part(pm, i, f64::INFINITY);
            below.push(acc);
        }
        Self { pm, below }
    }

    /// Mass of bin `i` on `[0, y]`.
    fn part(pm: &PotentialMeasure, i: usize, y: f64) -> f64 {
        let (a, b) = (pm.edges[i], pm.edges[i + 1]);
        match &pm.atoms {
            Some(atoms) => {
                if atoms[i] >= 0.0 && atoms[i] <= y {
                    pm.masses[i]
                } else {
                    0.0
                }
            }
            None => {
                let lo = a.max(0.0);
                let hi = b.min(y);
                if hi > lo {
                    pm.masses[i] * (hi - lo) / (b - a)
                } else {
                    0.0
                }
            }
        }
    }

    fn at(&self, y: f64) -> f64 {
        if y < self.pm.lo() {
            return 0.0;
        }
        if y >= self.pm.hi() {
            return *self.below.last().unwrap();
        }
        let i = self.pm.edges.partition_point(|&e| e <= y) - 1;
        self.below[i] + Self::part(self.pm, i, y)
    }
}

/// Sub-points per continuous bin in the Stieltjes sum.
const STIELTJES_REFINE: usize = 16;

/// Erickson–Maller form `-∫_l^∞ U([0, y]) df(y)` for nonincreasing `f`.
///
/// The Stieltjes sum runs over the grid edges refined by the breakpoints of
/// `f`. Atomic measures use the left value of the step function `U([0, ·])`,
/// which is exact; continuous ones use the midpoint on a refined grid.
pub fn erickson_maller_test(f: &TestFunction, pm: &PotentialMeasure, l: f64) -> Result<CriterionReport> {
    if !(l < pm.hi()) {
        return Err(Error::Coverage(format!("cutoff {l} is outside the grid ending at {}", pm.hi())));
    }
    f.check_nonincreasing(l, pm.hi(), 4096)?;
    let far = f.eval(1e12_f64.max(pm.hi() * 1e6));
    if far > 1e-6 * f.eval(l).max(1.0) {
        return Err(invalid_arg(format!("{} does not tend to 0", f.id())));
    }
    let mut ys: Vec<f64> = vec![l];
    let refine = if pm.is_atomic() { 1 } else { STIELTJES_REFINE };
    for w in pm.edges.windows(2) {
        for j in 0..refine {
            let y = w[0] + (w[1] - w[0]) * j as f64 / refine as f64;
            if y > l {
                ys.push(y);
            }
        }
    }
    if let Some(atoms) = &pm.atoms {
        ys.extend(atoms.iter().copied().filter(|&a| a > l));
    }
    ys.extend(f.breakpoints().into_iter().filter(|&b| b > l && b < pm.hi()));
    let windows = grid_windows(pm.hi(), l.max(0.0));
    ys.extend(windows.iter().copied());
    ys.sort_by(f64::total_cmp);
    ys.dedup();
    let cu = CumulativeU::new(pm);
    let mut ladder = Vec::with_capacity(windows.len());
    let mut acc = 0.0;
    let mut wi = 0;
    for k in 0..ys.len() - 1 {
        while wi < windows.len() && windows[wi] <= ys[k] {
            ladder.push(LadderPoint { upper: windows[wi], partial: acc });
            wi += 1;
        }
        let (a, b) = (ys[k], ys[k + 1]);
        let u = if pm.is_atomic() { cu.at(a) } else { cu.at(0.5 * (a + b)) };
        acc += u * (f.eval(a) - f.eval(b));
    }
    while wi < windows.len() {
        ladder.push(LadderPoint { upper: windows[wi], partial: acc });
        wi += 1;
    }
    let fd = f_descr(f);
    let pd = pm_descr(pm);
    let ls = l.to_string();
    Ok(report(
        "erickson_maller",
        ladder,
        pm.meta.model_id.clone(),
        f,
        &["erickson_maller", &fd, &pd, &ls],
        format!("Stieltjes sum over [{l}, {}]", pm.hi()),
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlackwellReport {
    pub lebesgue: CriterionReport,
    pub potential: CriterionReport,
    pub verdicts_agree: bool,
}

/// Lebesgue test against the potential integral over `(l, ∞)`.
pub fn blackwell_equivalence_check(f: &TestFunction, pm: &PotentialMeasure, l: f64) -> Result<BlackwellReport> {
    f.check_nonincreasing(l, pm.hi(), 4096)?;
    let lebesgue = dk_test(f, l)?;
    let potential = potential_integral(f, pm, &RegionSpec::above(l), 0.0)?;
    let verdicts_agree = lebesgue.verdict == potential.verdict;
    Ok(BlackwellReport { lebesgue, potential, verdicts_agree })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KhasminskiiJ {
    pub j: f64,
    #[serde(with = "crate::json::ext_f64")]
    pub theta_max: f64,
    pub argmax: f64,
    pub values: Vec<(f64, f64)>,
    pub caveat: String,
}

/// `J = max_x ∫ f(x + y) U(dy)` over the grid of `x`, and `θ_max = 1/J`.
pub fn khasminskii_j(f: &TestFunction, pm: &PotentialMeasure, xs: &[f64]) -> Result<KhasminskiiJ> {
    if xs.is_empty() {
        return Err(invalid_arg("empty x grid"));
    }
    let whole = RegionSpec::whole_line();
    let mut values = Vec::with_capacity(xs.len());
    let (mut j, mut argmax) = (0.0f64, xs[0]);
    for &x in xs {
        let r = potential_integral(f, pm, &whole, x)?;
        if r.verdict != Outcome::Finite {
            return Err(Error::NotCertifiable(format!(
                "∫ f(x+y) U(dy) is {} at x = {x}; J has no finite bound",
                r.verdict
            )));
        }
        if r.value > j {
            j = r.value;
            argmax = x;
        }
        values.push((x, r.value));
    }
    Ok(KhasminskiiJ {
        j,
        theta_max: if j > 0.0 { 1.0 / j } else { f64::INFINITY },
        argmax,
        values,
        caveat: format!("sup over x replaced by a maximum over {} grid points", xs.len()),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransienceReport {
    pub region: String,
    pub model_id: String,
    pub x: f64,
    pub horizon: f64,
    pub paths: usize,
    pub seed: u64,
    pub p_stay_hat: f64,
    pub stderr: f64,
    /// Paths that were in `ℝ \ E` at some time in `[0, T]`.
    pub visit_fraction: f64,
    /// `(p, quantile)` of the last time in `ℝ \ E` (0 for paths never there).
    pub last_visit_quantiles: Vec<(f64, f64)>,
    /// `min(p, 1 - p)`: distance of the estimate from the nearer of 0 and 1.
    pub clustering_distance: f64,
    /// Intervals needed to cover the 99.9th percentile of path maxima.
    pub materialized_depth: usize,
    pub max_quantile_999: f64,
    pub note: String,
}

/// Last time in `[0, T]` at which `x + ξ` lies in `ℝ \ E`.
fn last_visit(path: &PathSample, x: f64, e: &RegionSpec) -> Option<f64> {
    let mut last = None;
    for (t0, t1, v0, v1) in path.pieces() {
        if !path.exact || path.slope == 0.0 {
            if !e.in_e(x + v0) {
                last = Some(t1);
            }
            continue;
        }
        let (a, b) = (x + v0, x + v1);
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let pieces = e.not_e_pieces(lo, hi);
        if let Some(&(p, q)) = pieces.last() {
            let y = if path.slope > 0.0 { q } else { pieces[0].0.min(p) };
            last = Some(t0 + (y - a) / path.slope);
        }
    }
    if path.end_time() < path.horizon {
        return last;
    }
    if !e.in_e(x + path.final_value()) {
        last = Some(path.horizon);
    }
    last
}

/// Estimates `P^x(ξ eventually stays in E)` from the last visit to `ℝ \ E`
/// before `T`. A path counts as staying when its last visit is before
/// `0.9 T` and it ends above `sup(ℝ \ E)`.
///
/// Generated regions are materialized per path up to its running maximum;
/// the depth reported is the one covering the 99.9th percentile of maxima.
pub fn transience_probe(
    model: &LevyModel,
    e: &RegionSpec,
    x: f64,
    paths: usize,
    horizon: f64,
    seed: u64,
    step: Option<f64>,
) -> Result<TransienceReport> {
    if paths == 0 {
        return Err(invalid_arg("need at least one path"));
    }
    let sup_c = e.complement_sup();
    let stop = (model.is_subordinator() && sup_c.is_finite()).then(|| (sup_c - x).max(0.0));
    let opts = SimOptions { step, stop_above: stop };
    let tree = SeedTree::new(seed);
    let rows = par::map_indices(paths, |i| -> Result<(Option<f64>, bool, f64)> {
        let mut rng = tree.stream(&[domain::PROBE], i as u64);
        let path = simulate_with(model, horizon, &opts, &mut rng)?;
        let max = x + path.running_max();
        let local;
        let region = if e.is_generated() {
            let mut r = e.clone();
            r.materialize_to(max)?;
            local = r;
            &local
        } else {
            e
        };
        let lv = last_visit(&path, x, region);
        let end_above = path.end_time() < path.horizon || x + path.final_value() > sup_c;
        let stays = end_above && lv.is_none_or(|t| t < 0.9 * horizon);
        Ok((lv, stays, max))
    });
    let rows: Vec<(Option<f64>, bool, f64)> = rows.into_iter().collect::<Result<_>>()?;
    let n = paths as f64;
    let p = rows.iter().filter(|r| r.1).count() as f64 / n;
    let visit_fraction = rows.iter().filter(|r| r.0.is_some()).count() as f64 / n;
    let lv = sorted(&rows.iter().map(|r| r.0.unwrap_or(0.0)).collect::<Vec<_>>());
    let maxima = sorted(&rows.iter().map(|r| r.2).collect::<Vec<_>>());
    let q999 = quantile_sorted(&maxima, 0.999);
    let depth = if e.is_generated() {
        let mut r = e.clone();
        r.materialize_to(q999)?;
        r.depth()
    } else {
        e.depth()
    };
    Ok(TransienceReport {
        region: e.label.clone(),
        model_id: model.id(),
        x,
        horizon,
        paths,
        seed,
        p_stay_hat: p,
        stderr: proportion_se(p, paths),
        visit_fraction,
        last_visit_quantiles: [0.5, 0.9, 0.99, 1.0].iter().map(|&q| (q, quantile_sorted(&lv, q))).collect(),
        clustering_distance: p.min(1.0 - p),
        materialized_depth: depth,
        max_quantile_999: q999,
        note: "finite-horizon evidence for transience, not a proof; P^x-transience has probability 0 or 1".into(),
    })
}

/// `test,value,verdict,model_id,f_id` after `#` metadata lines.
pub fn comparison_csv(reports: &[CriterionReport], extra_meta: &[(&str, String)]) -> String {
    let mut out = String::new();
    for (k, v) in extra_meta {
        let _ = writeln!(out, "# {k}={v}");
    }
    out.push_str("test,value,verdict,model_id,f_id\n");
    for r in reports {
        let _ = writeln!(out, "{},{},{},{},{}", r.test, r.value, r.verdict, r.model_id, r.f_id);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levy::{build_model, ModelSpec};
    use crate::potential::{analytic_potential, default_grid, uniform_grid};
    use crate::region::{Interval, Role};
    use approx::assert_relative_eq;

    fn lattice_pm(hi: f64) -> PotentialMeasure {
        let m = build_model(ModelSpec::lattice_cpp(2.0, 1.0)).unwrap();
        analytic_potential(&m, &default_grid(&m, 0.0, hi)).unwrap().unwrap()
    }

    fn drift_pm() -> PotentialMeasure {
        let m = build_model(ModelSpec::pure_drift(1.0)).unwrap();
        analytic_potential(&m, &uniform_grid(-4.0, 512.0, 1032)).unwrap().unwrap()
    }

    #[test]
    fn rule_classifies_textbook_sequences() {
        let geom: Vec<f64> = (1..=10).map(|k| 1.0 - 0.5f64.powi(k)).collect();
        assert_eq!(ladder_verdict(&geom).0, Outcome::Finite);
        let lin: Vec<f64> = (1..=10).map(|k| k as f64).collect();
        assert_eq!(ladder_verdict(&lin).0, Outcome::Infinite);
        let zero = vec![0.0; 10];
        assert_eq!(ladder_verdict(&zero).0, Outcome::Finite);
        let short = vec![1.0, 2.0];
        assert_eq!(ladder_verdict(&short).0, Outcome::Inconclusive);
        let slow: Vec<f64> = (1..=10).map(|k| 1.0 - 0.9f64.powi(k)).collect();
        assert_eq!(ladder_verdict(&slow).0, Outcome::Inconclusive);
    }

    #[test]
    fn geometric_series_on_the_lattice() {
        let r = potential_integral(&TestFunction::exp_decay(), &lattice_pm(200.0), &RegionSpec::above(-0.5), 0.0)
            .unwrap();
        let expect = 1.0 / (2.0 * (1.0 - (-1f64).exp()));
        assert_relative_eq!(r.value, expect, max_relative = 1e-12);
        assert_eq!(r.verdict, Outcome::Finite);
    }

    #[test]
    fn constant_function_diverges() {
        let r = potential_integral(&TestFunction::constant(1.0), &drift_pm(), &RegionSpec::above(0.0), 0.0).unwrap();
        assert_eq!(r.verdict, Outcome::Infinite);
        assert!(r.value.is_infinite());
        let j = serde_json::to_string(&r).unwrap();
        assert!(j.contains("\"value\":\"inf\""));
    }

    #[test]
    fn additivity_and_scaling() {
        let pm = lattice_pm(50.0);
        let f = TestFunction::step("s", &[(1.0, 0.0, 3.5), (2.0, 5.0, 9.0)]).unwrap();
        let e1 = RegionSpec::explicit(vec![Interval::new(-1.0, 4.0)], Role::Region).unwrap();
        let e2 = RegionSpec::explicit(vec![Interval::new(4.0, 20.0)], Role::Region).unwrap();
        let e12 = RegionSpec::explicit(vec![Interval::new(-1.0, 4.0), Interval::new(4.0, 20.0)], Role::Region).unwrap();
        let v = |e: &RegionSpec, f: &TestFunction| potential_integral(f, &pm, e, 0.0).unwrap().truncated_value;
        assert_eq!(v(&e12, &f), v(&e1, &f) + v(&e2, &f));
        assert_eq!(v(&e12, &f.scaled(3.0).unwrap()), 3.0 * v(&e12, &f));
    }

    #[test]
    fn dk_corpus() {
        assert_eq!(dk_test(&TestFunction::exp_decay(), 1.0).unwrap().verdict, Outcome::Finite);
        assert_eq!(dk_test(&TestFunction::reciprocal(2.0), 1.0).unwrap().verdict, Outcome::Finite);
        assert_eq!(dk_test(&TestFunction::reciprocal(1.0), 1.0).unwrap().verdict, Outcome::Infinite);
        assert_eq!(dk_test(&TestFunction::indicator(0.0, 1.0), 1.0).unwrap().verdict, Outcome::Finite);
        assert_eq!(dk_test(&TestFunction::lattice_sine(1.0).unwrap(), 1.0).unwrap().verdict, Outcome::Infinite);
    }

    #[test]
    fn erickson_maller_on_pure_drift() {
        let pm = drift_pm();
        let r = erickson_maller_test(&TestFunction::exp_decay(), &pm, 0.0).unwrap();
        assert_eq!(r.verdict, Outcome::Finite);
        assert_relative_eq!(r.value, 1.0, max_relative = 1e-3);
        let r = erickson_maller_test(&TestFunction::reciprocal(1.0), &pm, 0.0).unwrap();
        assert_eq!(r.verdict, Outcome::Infinite);
        let r = erickson_maller_test(&TestFunction::indicator(0.0, 1.0), &pm, 1.0).unwrap();
        assert_eq!(r.value, 0.0);
        assert!(erickson_maller_test(&TestFunction::lattice_sine(1.0).unwrap(), &pm, 0.0).is_err());
    }

    #[test]
    fn erickson_maller_on_lattice_is_exact() {
        // -∫ U([0,y]) d e^{-y} over [0, ∞) = Σ_n e^{-n} / λ
        let r = erickson_maller_test(&TestFunction::exp_decay(), &lattice_pm(200.0), 0.0).unwrap();
        let expect = 1.0 / (2.0 * (1.0 - (-1f64).exp()));
        assert_relative_eq!(r.value, expect, max_relative = 1e-9);
    }

    #[test]
    fn blackwell_agreement() {
        let pm = drift_pm();
        for f in [TestFunction::exp_decay(), TestFunction::reciprocal(1.0), TestFunction::indicator(0.0, 1.0)] {
            assert!(blackwell_equivalence_check(&f, &pm, 1.0).unwrap().verdicts_agree);
        }
    }

    #[test]
    fn khasminskii_j_oracles() {
        let xs: Vec<f64> = (-20..=20).map(|k| k as f64 * 0.1).collect();
        let f = TestFunction::indicator(0.0, 1.0);
        let j = khasminskii_j(&f, &lattice_pm(20.0), &xs).unwrap();
        assert_eq!(j.j, 0.5);
        assert_eq!(j.theta_max, 2.0);
        let j = khasminskii_j(&f, &drift_pm(), &xs).unwrap();
        assert_relative_eq!(j.j, 1.0, epsilon = 1e-12);
        let z = khasminskii_j(&TestFunction::zero(), &drift_pm(), &xs).unwrap();
        assert!(z.theta_max.is_infinite());
        assert!(khasminskii_j(&TestFunction::constant(1.0), &drift_pm(), &xs).is_err());
    }

    #[test]
    fn negative_half_line_is_transient() {
        let m = build_model(ModelSpec::drifted_bm(1.0, 1.0)).unwrap();
        let r = transience_probe(&m, &RegionSpec::complement_below(0.0), 0.0, 200, 60.0, 1, Some(0.01)).unwrap();
        assert!(r.p_stay_hat > 0.97, "{}", r.p_stay_hat);
        assert!(r.clustering_distance < 0.03);
    }

    #[test]
    fn lattice_neighbourhoods_are_recurrent() {
        let m = build_model(ModelSpec::lattice_cpp(2.0, 1.0)).unwrap();
        let e = RegionSpec::periodic(1.0, 0.25, 0, Role::Complement).unwrap();
        let r = transience_probe(&m, &e, 0.0, 200, 50.0, 1, None).unwrap();
        assert_eq!(r.p_stay_hat, 0.0);
        assert!(r.materialized_depth > 90);
        let capped = e.with_max_depth(10);
        assert!(matches!(transience_probe(&m, &capped, 0.0, 20, 50.0, 1, None), Err(Error::Coverage(_))));
    }

    #[test]
    fn comparison_table() {
        let r = dk_test(&TestFunction::exp_decay(), 1.0).unwrap();
        let csv = comparison_csv(&[r], &[("seed", "1".into())]);
        assert!(csv.starts_with("# seed=1\ntest,value,verdict,model_id,f_id\ndk_test,"));
    }
}
