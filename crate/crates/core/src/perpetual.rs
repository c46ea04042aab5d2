//! Path integrals `I^x_t = ∫_0^t f(x + ξ_s) ds` and estimators built on them.

use std::fmt::Write as _;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid_arg, Error, Result};
use crate::function::TestFunction;
use crate::levy::{simulate_with, LevyModel, PathSample, SimOptions};
use crate::par;
use crate::rng::{domain, SeedTree};
use crate::stats::{linear_fit, log_mean_exp, mean_se, proportion_se, quantile_sorted, sorted, LinearFit};

/// Relative accrual over the last 10% of the horizon above which a path
/// counts as still accruing.
pub const CENSOR_REL_TOL: f64 = 1e-3;
/// Absolute accrual floor for the censoring rule.
pub const CENSOR_ABS_TOL: f64 = 1e-12;
/// Median growth between the last two rungs below which the ladder plateaus.
pub const PLATEAU_GROWTH: f64 = 0.02;
/// Censored fraction allowed for a finite verdict.
pub const PLATEAU_MAX_CENSORED: f64 = 0.05;
/// t-statistic required of a growth fit for an infinite verdict.
pub const GROWTH_MIN_T: f64 = 5.0;
/// Bootstrap resamples for the zero-one consistency check.
pub const BOOTSTRAP_RESAMPLES: usize = 200;
/// Probe points for `β` in the Batty check.
pub const BATTY_PROBES: usize = 64;

pub const REPORTED_QUANTILES: [f64; 6] = [0.05, 0.25, 0.5, 0.75, 0.95, 0.99];

/// Monte Carlo budget shared by the estimators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Budget {
    pub paths: usize,
    pub horizon: f64,
    pub seed: u64,
    /// Grid step for models with a Gaussian part.
    #[serde(default)]
    pub step: Option<f64>,
}

impl Budget {
    pub fn new(paths: usize, horizon: f64, seed: u64) -> Self {
        Self { paths, horizon, seed, step: None }
    }

    pub fn with_step(mut self, step: f64) -> Self {
        self.step = Some(step);
        self
    }

    fn check(&self) -> Result<()> {
        if self.paths == 0 {
            return Err(invalid_arg("need at least one path"));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(invalid_arg(format!("horizon {} must be finite and > 0", self.horizon)));
        }
        Ok(())
    }
}

/// Level above which `f(x + ·)` vanishes for every `x >= x_min`; a
/// subordinator can be stopped there.
fn stop_level(f: &TestFunction, model: &LevyModel, x_min: f64) -> Option<f64> {
    if !model.is_subordinator() {
        return None;
    }
    match f.support() {
        None => Some(0.0),
        Some((_, hi)) if hi.is_finite() => Some((hi - x_min).max(0.0)),
        _ => None,
    }
}

fn simulate_for<R: Rng + ?Sized>(
    f: &TestFunction,
    model: &LevyModel,
    x_min: f64,
    horizon: f64,
    step: Option<f64>,
    rng: &mut R,
) -> Result<PathSample> {
    let opts = SimOptions { step, stop_above: stop_level(f, model, x_min) };
    simulate_with(model, horizon, &opts, rng)
}

/// `f(x + ξ_t)`, zero past the end of a stopped path.
fn f_at(f: &TestFunction, path: &PathSample, x: f64, t: f64) -> f64 {
    if t > path.end_time() {
        0.0
    } else {
        f.eval(x + path.value_at(t))
    }
}

/// `I^x_t` at each of `times` (any order, each in `[0, horizon]`).
///
/// Exact paths are integrated piece by piece in closed form. Grid paths use
/// the trapezoid rule for the continuous part of `f` and the left endpoint
/// for its indicator part.
pub fn integral_profile(f: &TestFunction, path: &PathSample, x: f64, times: &[f64]) -> Result<Vec<f64>> {
    for &t in times {
        if !(t >= 0.0 && t <= path.horizon * (1.0 + 1e-12)) {
            return Err(invalid_arg(format!("time {t} outside the path horizon [0, {}]", path.horizon)));
        }
    }
    let end = path.end_time();
    if times.iter().any(|&t| t > end) && !f.vanishes_above(x + path.final_value()) {
        return Err(invalid_arg(format!(
            "path stopped at t = {end} but {} does not vanish above {}",
            f.id(),
            x + path.final_value()
        )));
    }
    let mut order: Vec<usize> = (0..times.len()).collect();
    order.sort_by(|&a, &b| times[a].total_cmp(&times[b]));
    let mut out = vec![0.0; times.len()];
    let mut next = 0;
    let mut acc = 0.0;
    let split = !path.exact && !f.is_step();
    for (t0, t1, v0, v1) in path.pieces() {
        while next < order.len() && times[order[next]] <= t0 {
            out[order[next]] = acc;
            next += 1;
        }
        if next == order.len() {
            return Ok(out);
        }
        let dt = t1 - t0;
        let piece = |tau: f64| -> f64 {
            if path.exact {
                f.integral_along_linear(x + v0, path.slope, tau)
            } else if split {
                let (s0, c0) = f.eval_split(x + v0);
                let (_, c1) = f.eval_split(x + v1);
                s0 * tau + 0.5 * (c0 + c1) * dt * (tau / dt)
            } else {
                f.eval(x + v0) * tau
            }
        };
        while next < order.len() && times[order[next]] < t1 {
            out[order[next]] = acc + piece(times[order[next]] - t0);
            next += 1;
        }
        acc += piece(dt);
    }
    for &i in &order[next..] {
        out[i] = acc;
    }
    Ok(out)
}

/// `I^x_T` with `T` the path horizon.
pub fn integral_along_path(f: &TestFunction, path: &PathSample, x: f64) -> Result<f64> {
    Ok(integral_profile(f, path, x, &[path.horizon])?[0])
}

/// Censoring rule: the path accrued more than a `CENSOR_REL_TOL` share of its
/// total during the last 10% of the horizon, or the current rate would.
fn is_censored(total: f64, at_90: f64, f_end: f64, t: f64) -> bool {
    let tol = CENSOR_REL_TOL * total + CENSOR_ABS_TOL;
    total - at_90 > tol || f_end * 0.1 * t > tol
}

/// Integrals of many paths at several horizons, one row per path.
struct LadderSample {
    horizons: Vec<f64>,
    /// `values[i][j] = I^x_{T_j}` on path `i`.
    values: Vec<Vec<f64>>,
    censored: Vec<Vec<bool>>,
}

impl LadderSample {
    fn column(&self, j: usize) -> Vec<f64> {
        self.values.iter().map(|r| r[j]).collect()
    }

    fn censored_fraction(&self, j: usize) -> f64 {
        self.censored.iter().filter(|r| r[j]).count() as f64 / self.values.len() as f64
    }
}

fn sample_ladder(
    f: &TestFunction,
    model: &LevyModel,
    x: f64,
    horizons: &[f64],
    paths: usize,
    seed: u64,
    step: Option<f64>,
) -> Result<LadderSample> {
    let t_max = horizons.iter().copied().fold(0.0, f64::max);
    let mut checkpoints = Vec::with_capacity(2 * horizons.len());
    for &t in horizons {
        checkpoints.push(t);
        checkpoints.push(0.9 * t);
    }
    let tree = SeedTree::new(seed);
    let rows = par::map_indices(paths, |i| -> Result<(Vec<f64>, Vec<bool>)> {
        let mut rng = tree.path(i as u64);
        let path = simulate_for(f, model, x, t_max, step, &mut rng)?;
        let prof = integral_profile(f, &path, x, &checkpoints)?;
        let mut vals = Vec::with_capacity(horizons.len());
        let mut cens = Vec::with_capacity(horizons.len());
        for (j, &t) in horizons.iter().enumerate() {
            let total = prof[2 * j];
            vals.push(total);
            cens.push(is_censored(total, prof[2 * j + 1], f_at(f, &path, x, t), t));
        }
        Ok((vals, cens))
    });
    let mut values = Vec::with_capacity(paths);
    let mut censored = Vec::with_capacity(paths);
    for r in rows {
        let (v, c) = r?;
        values.push(v);
        censored.push(c);
    }
    Ok(LadderSample { horizons: horizons.to_vec(), values, censored })
}

/// `Ĝ_a(x) = P̂(I^x_T > a)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailEstimate {
    pub x: f64,
    pub a: f64,
    pub horizon: f64,
    pub paths: usize,
    pub g_hat: f64,
    pub stderr: f64,
    pub censored_fraction: f64,
}

fn tail_estimate(sample: &[f64], x: f64, a: f64, horizon: f64, censored_fraction: f64) -> TailEstimate {
    let n = sample.len();
    let g_hat = sample.iter().filter(|&&v| v > a).count() as f64 / n as f64;
    TailEstimate { x, a, horizon, paths: n, g_hat, stderr: proportion_se(g_hat, n), censored_fraction }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IDistribution {
    pub f_id: String,
    pub model_id: String,
    pub x: f64,
    pub horizon: f64,
    pub paths: usize,
    pub seed: u64,
    pub mean: f64,
    pub stderr: f64,
    pub min: f64,
    pub max: f64,
    /// `(p, quantile)` pairs.
    pub quantiles: Vec<(f64, f64)>,
    pub tails: Vec<TailEstimate>,
    pub censored_fraction: f64,
}

/// Distribution summary of `I^x_T` over independent paths, with `Ĝ_a(x)` for
/// each requested `a`.
pub fn estimate_i_distribution(
    f: &TestFunction,
    model: &LevyModel,
    x: f64,
    budget: &Budget,
    a_grid: &[f64],
) -> Result<IDistribution> {
    Ok(sample_i_distribution(f, model, x, budget, a_grid)?.0)
}

/// As [`estimate_i_distribution`], also returning the raw per-path integrals.
pub fn sample_i_distribution(
    f: &TestFunction,
    model: &LevyModel,
    x: f64,
    budget: &Budget,
    a_grid: &[f64],
) -> Result<(IDistribution, Vec<f64>)> {
    budget.check()?;
    let s = sample_ladder(f, model, x, &[budget.horizon], budget.paths, budget.seed, budget.step)?;
    let values = s.column(0);
    let cf = s.censored_fraction(0);
    let ms = mean_se(&values);
    let sv = sorted(&values);
    let dist = IDistribution {
        f_id: f.id().to_string(),
        model_id: model.id(),
        x,
        horizon: budget.horizon,
        paths: budget.paths,
        seed: budget.seed,
        mean: ms.mean,
        stderr: ms.se,
        min: sv[0],
        max: *sv.last().unwrap(),
        quantiles: REPORTED_QUANTILES.iter().map(|&p| (p, quantile_sorted(&sv, p))).collect(),
        tails: a_grid.iter().map(|&a| tail_estimate(&values, x, a, budget.horizon, cf)).collect(),
        censored_fraction: cf,
    };
    Ok((dist, values))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Finite,
    Infinite,
    Inconclusive,
}

impl Outcome {
    pub fn as_str(&self) -> &'static str {
        match self {
            Outcome::Finite => "finite",
            Outcome::Infinite => "infinite",
            Outcome::Inconclusive => "inconclusive",
        }
    }
}

impl std::fmt::Display for Outcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LadderRow {
    pub horizon: f64,
    pub median_i: f64,
    pub mean_i: f64,
    pub censored_fraction: f64,
}

/// Plateau statistics behind a verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlateauStats {
    /// Relative growth of the median between the last two rungs.
    pub last_growth: f64,
    /// Median against `ln T`.
    pub log_fit: Option<LinearFit>,
    /// `ln(median)` against `ln T`; absent when a median is zero.
    pub power_fit: Option<LinearFit>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub outcome: Outcome,
    pub f_id: String,
    pub model_id: String,
    pub x: f64,
    pub paths: usize,
    pub seed: u64,
    pub ladder: Vec<LadderRow>,
    pub stats: PlateauStats,
    /// Share of bootstrap resamples classified like the full sample.
    pub bootstrap_agreement: f64,
    pub note: String,
}

impl Verdict {
    /// Ladder table `horizon,median_I,mean_I,censored_fraction` after `#` metadata lines.
    pub fn ladder_csv(&self, extra_meta: &[(&str, String)]) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# model={}", self.model_id);
        let _ = writeln!(out, "# f={}", self.f_id);
        let _ = writeln!(out, "# x={}", self.x);
        let _ = writeln!(out, "# paths={}", self.paths);
        let _ = writeln!(out, "# seed={}", self.seed);
        for (k, v) in extra_meta {
            let _ = writeln!(out, "# {k}={v}");
        }
        out.push_str("horizon,median_I,mean_I,censored_fraction\n");
        for r in &self.ladder {
            let _ = writeln!(out, "{},{},{},{}", r.horizon, r.median_i, r.mean_i, r.censored_fraction);
        }
        out
    }
}

fn relative_growth(prev: f64, last: f64) -> f64 {
    if prev == 0.0 {
        if last == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (last - prev) / prev
    }
}

/// Plateau classifier over ladder rows (increasing horizons, at least 3).
pub fn classify_ladder(rows: &[LadderRow]) -> (Outcome, PlateauStats) {
    let k = rows.len();
    let last_growth = relative_growth(rows[k - 2].median_i, rows[k - 1].median_i);
    let ln_t: Vec<f64> = rows.iter().map(|r| r.horizon.ln()).collect();
    let med: Vec<f64> = rows.iter().map(|r| r.median_i).collect();
    let log_fit = (k >= 3).then(|| linear_fit(&ln_t, &med));
    let power_fit = (k >= 3 && med.iter().all(|&m| m > 0.0))
        .then(|| linear_fit(&ln_t, &med.iter().map(|m| m.ln()).collect::<Vec<_>>()));
    let stats = PlateauStats { last_growth, log_fit, power_fit };
    if last_growth.abs() < PLATEAU_GROWTH && rows[k - 1].censored_fraction < PLATEAU_MAX_CENSORED {
        return (Outcome::Finite, stats);
    }
    let grows = |fit: &Option<LinearFit>| fit.is_some_and(|f| f.slope > 0.0 && f.t_stat > GROWTH_MIN_T);
    if last_growth >= PLATEAU_GROWTH && (grows(&stats.log_fit) || grows(&stats.power_fit)) {
        return (Outcome::Infinite, stats);
    }
    (Outcome::Inconclusive, stats)
}

fn median_of(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    quantile_sorted(&v, 0.5)
}

fn ladder_rows(sample: &LadderSample, idx: Option<&[usize]>) -> Vec<LadderRow> {
    let n = idx.map_or(sample.values.len(), |i| i.len());
    (0..sample.horizons.len())
        .map(|j| {
            let col: Vec<f64> = match idx {
                Some(ix) => ix.iter().map(|&i| sample.values[i][j]).collect(),
                None => sample.column(j),
            };
            let cens = match idx {
                Some(ix) => ix.iter().filter(|&&i| sample.censored[i][j]).count(),
                None => sample.censored.iter().filter(|r| r[j]).count(),
            };
            let mean_i = col.iter().sum::<f64>() / n as f64;
            LadderRow {
                horizon: sample.horizons[j],
                median_i: median_of(col),
                mean_i,
                censored_fraction: cens as f64 / n as f64,
            }
        })
        .collect()
}

/// Empirical finiteness verdict for `I^x` from the growth of `I^x_T` along
/// an increasing horizon ladder. All rungs reuse the same paths.
pub fn finiteness_diagnosis(
    f: &TestFunction,
    model: &LevyModel,
    x: f64,
    ladder: &[f64],
    paths: usize,
    seed: u64,
    step: Option<f64>,
) -> Result<Verdict> {
    if ladder.len() < 3 {
        return Err(invalid_arg("the horizon ladder needs at least 3 rungs"));
    }
    if ladder.windows(2).any(|w| w[0] >= w[1]) || !(ladder[0] > 0.0) {
        return Err(invalid_arg("ladder horizons must be positive and increasing"));
    }
    Budget::new(paths, ladder[ladder.len() - 1], seed).check()?;
    let sample = sample_ladder(f, model, x, ladder, paths, seed, step)?;
    let rows = ladder_rows(&sample, None);
    let (outcome, stats) = classify_ladder(&rows);
    let tree = SeedTree::new(seed);
    let agree = par::map_indices(BOOTSTRAP_RESAMPLES, |b| {
        let mut rng = tree.stream(&[domain::BOOTSTRAP], b as u64);
        let idx: Vec<usize> = (0..paths).map(|_| rng.random_range(0..paths)).collect();
        classify_ladder(&ladder_rows(&sample, Some(&idx))).0 == outcome
    });
    let bootstrap_agreement = agree.iter().filter(|&&a| a).count() as f64 / BOOTSTRAP_RESAMPLES as f64;
    Ok(Verdict {
        outcome,
        f_id: f.id().to_string(),
        model_id: model.id(),
        x,
        paths,
        seed,
        ladder: rows,
        stats,
        bootstrap_agreement,
        note: "P(I^x < inf) is 0 or 1, so the verdict is about the whole law; \
               horizons are finite and truncation biases I^x downward"
            .into(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LPoint {
    pub x: f64,
    pub g_hat: f64,
    pub stderr: f64,
    pub censored_fraction: f64,
    pub member: bool,
}

/// Grid approximation of `L_a(q) = {x : G_a(x) <= q}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LSetApprox {
    pub a: f64,
    pub q: f64,
    pub f_id: String,
    pub model_id: String,
    pub horizon: f64,
    pub paths: usize,
    pub seed: u64,
    pub points: Vec<LPoint>,
    /// Members form an up-set of the grid within 2 SE slack.
    pub up_set: bool,
    /// Smallest member above which every grid point is a member.
    pub threshold: Option<f64>,
}

impl LSetApprox {
    pub fn to_csv(&self, extra_meta: &[(&str, String)]) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# model={}", self.model_id);
        let _ = writeln!(out, "# f={}", self.f_id);
        let _ = writeln!(out, "# a={}", self.a);
        let _ = writeln!(out, "# q={}", self.q);
        let _ = writeln!(out, "# horizon={}", self.horizon);
        let _ = writeln!(out, "# paths={}", self.paths);
        let _ = writeln!(out, "# seed={}", self.seed);
        for (k, v) in extra_meta {
            let _ = writeln!(out, "# {k}={v}");
        }
        out.push_str("x,g_hat,stderr,censored_fraction,member\n");
        for p in &self.points {
            let _ = writeln!(out, "{},{},{},{},{}", p.x, p.g_hat, p.stderr, p.censored_fraction, p.member as u8);
        }
        out
    }
}

/// `Ĝ_a(x)` on a grid of starting points with common random numbers: path
/// `i` is the same for every `x`.
pub fn g_profile(
    f: &TestFunction,
    model: &LevyModel,
    a: f64,
    xs: &[f64],
    budget: &Budget,
) -> Result<Vec<TailEstimate>> {
    budget.check()?;
    if xs.is_empty() {
        return Err(invalid_arg("empty x grid"));
    }
    let x_min = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let t = budget.horizon;
    let tree = SeedTree::new(budget.seed);
    let rows = par::map_indices(budget.paths, |i| -> Result<Vec<(f64, bool)>> {
        let mut rng = tree.path(i as u64);
        let path = simulate_for(f, model, x_min, t, budget.step, &mut rng)?;
        xs.iter()
            .map(|&x| {
                let p = integral_profile(f, &path, x, &[t, 0.9 * t])?;
                Ok((p[0], is_censored(p[0], p[1], f_at(f, &path, x, t), t)))
            })
            .collect()
    });
    let rows: Vec<Vec<(f64, bool)>> = rows.into_iter().collect::<Result<_>>()?;
    Ok(xs
        .iter()
        .enumerate()
        .map(|(k, &x)| {
            let col: Vec<f64> = rows.iter().map(|r| r[k].0).collect();
            let cf = rows.iter().filter(|r| r[k].1).count() as f64 / budget.paths as f64;
            tail_estimate(&col, x, a, t, cf)
        })
        .collect())
}

pub fn estimate_l_set(
    f: &TestFunction,
    model: &LevyModel,
    a: f64,
    q: f64,
    xs: &[f64],
    budget: &Budget,
) -> Result<LSetApprox> {
    if !(a >= 0.0) || !(0.0..=1.0).contains(&q) {
        return Err(invalid_arg("need a >= 0 and q in [0, 1]"));
    }
    let mut grid = xs.to_vec();
    grid.sort_by(f64::total_cmp);
    let tails = g_profile(f, model, a, &grid, budget)?;
    let points: Vec<LPoint> = tails
        .iter()
        .map(|t| LPoint {
            x: t.x,
            g_hat: t.g_hat,
            stderr: t.stderr,
            censored_fraction: t.censored_fraction,
            member: t.g_hat <= q,
        })
        .collect();
    // up-set: no point above a member has G clearly above q
    let mut up_set = true;
    if let Some(first) = points.iter().position(|p| p.member) {
        for p in &points[first..] {
            let slack = 2.0 * p.stderr.max(proportion_se(q.max(1.0 / budget.paths as f64), budget.paths));
            if p.g_hat > q + slack {
                up_set = false;
            }
        }
    }
    let threshold = points
        .iter()
        .rposition(|p| !p.member)
        .map_or(points.first().map(|p| p.x), |i| points.get(i + 1).map(|p| p.x));
    Ok(LSetApprox {
        a,
        q,
        f_id: f.id().to_string(),
        model_id: model.id(),
        horizon: budget.horizon,
        paths: budget.paths,
        seed: budget.seed,
        points,
        up_set,
        threshold,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BattyReport {
    pub f_id: String,
    pub model_id: String,
    pub x: f64,
    pub a: f64,
    pub t: f64,
    pub n_outer: usize,
    pub n_inner: usize,
    pub probe_window: (f64, f64),
    pub probe_points: usize,
    pub beta_hat: f64,
    pub beta_argmin: f64,
    pub beta_se: f64,
    pub mean_i: f64,
    pub mean_i_se: f64,
    pub lhs: f64,
    pub lhs_se: f64,
    pub rhs: f64,
    pub holds: bool,
    pub caveat: String,
}

/// Checks `β E[I^x_t] <= a P(I^x_t < ∞)` with `β = inf_{y ∈ supp f} P(I^y_t <= a)`.
///
/// `β` is a minimum over a probe grid of the support, which can only
/// overstate the true infimum; `probe_window` replaces an unbounded support.
#[allow(clippy::too_many_arguments)]
pub fn batty_inequality_check(
    f: &TestFunction,
    model: &LevyModel,
    x: f64,
    a: f64,
    t: f64,
    n_outer: usize,
    n_inner: Option<usize>,
    seed: u64,
    step: Option<f64>,
    probe_window: Option<(f64, f64)>,
) -> Result<BattyReport> {
    Budget::new(n_outer, t, seed).check()?;
    let n_inner = n_inner.unwrap_or_else(|| ((n_outer as f64).sqrt().round() as usize).max(1));
    let window = match (probe_window, f.support()) {
        (Some(w), _) => w,
        (None, Some((lo, hi))) if lo.is_finite() && hi.is_finite() => (lo, hi),
        (None, Some(_)) => {
            return Err(invalid_arg("unbounded support: a probe window must be supplied"));
        }
        (None, None) => return Err(invalid_arg("f vanishes identically: empty support probe")),
    };
    if !(window.0 < window.1) {
        return Err(invalid_arg("empty support probe window"));
    }
    let probes: Vec<f64> = (0..BATTY_PROBES)
        .map(|k| window.0 + (window.1 - window.0) * (k as f64 + 0.5) / BATTY_PROBES as f64)
        .collect();
    let tree = SeedTree::new(seed);
    let hits = par::map_indices(probes.len(), |k| -> Result<usize> {
        let y = probes[k];
        let mut n_le = 0;
        for j in 0..n_inner {
            let mut rng = tree.stream(&[domain::BATTY_INNER, k as u64], j as u64);
            let path = simulate_for(f, model, y, t, step, &mut rng)?;
            if integral_along_path(f, &path, y)? <= a {
                n_le += 1;
            }
        }
        Ok(n_le)
    });
    let hits: Vec<usize> = hits.into_iter().collect::<Result<_>>()?;
    let (kmin, &hmin) = hits.iter().enumerate().min_by_key(|&(_, h)| *h).unwrap();
    let beta_hat = hmin as f64 / n_inner as f64;
    let beta_se = proportion_se(beta_hat, n_inner);
    let outer = par::map_indices(n_outer, |i| -> Result<f64> {
        let mut rng = tree.stream(&[domain::BATTY_OUTER], i as u64);
        let path = simulate_for(f, model, x, t, step, &mut rng)?;
        integral_along_path(f, &path, x)
    });
    let outer: Vec<f64> = outer.into_iter().collect::<Result<_>>()?;
    let ms = mean_se(&outer);
    let lhs = beta_hat * ms.mean;
    let lhs_se = ((beta_hat * ms.se).powi(2) + (ms.mean * beta_se).powi(2)).sqrt();
    // I^x_t is finite for locally bounded f and finite t
    let rhs = a;
    Ok(BattyReport {
        f_id: f.id().to_string(),
        model_id: model.id(),
        x,
        a,
        t,
        n_outer,
        n_inner,
        probe_window: window,
        probe_points: BATTY_PROBES,
        beta_hat,
        beta_argmin: probes[kmin],
        beta_se,
        mean_i: ms.mean,
        mean_i_se: ms.se,
        lhs,
        lhs_se,
        rhs,
        holds: lhs <= rhs + 3.0 * lhs_se,
        caveat: format!(
            "beta is a minimum over {BATTY_PROBES} probe points in [{}, {}] with {n_inner} paths each; \
             the noisy minimum is biased low",
            window.0, window.1
        ),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KhasminskiiReport {
    pub f_id: String,
    pub model_id: String,
    pub x: f64,
    pub theta: f64,
    pub j: Option<f64>,
    #[serde(with = "crate::json::ext_opt_f64")]
    pub theta_max: Option<f64>,
    pub horizon: f64,
    pub paths: usize,
    pub seed: u64,
    /// `mean(e^{θ I})` over the first `paths` paths.
    pub empirical_mgf: f64,
    pub log_mgf: f64,
    /// Same estimate over `2 * paths` paths.
    pub doubled_mgf: f64,
    /// Same estimate with the top 1% of the sample removed.
    pub trimmed_mgf: f64,
    pub doubling_change: f64,
    pub trimming_change: f64,
    pub stable: bool,
    pub warning: Option<String>,
}

/// Empirical `E[e^{θ I^x_T}]` with a heavy-tail stability screen.
///
/// With `j` given, `θ >= 1/J` is refused unless `override_gate` is set.
#[allow(clippy::too_many_arguments)]
pub fn khasminskii_exponential_check(
    f: &TestFunction,
    model: &LevyModel,
    x: f64,
    theta: f64,
    budget: &Budget,
    j: Option<f64>,
    override_gate: bool,
) -> Result<KhasminskiiReport> {
    if !(theta > 0.0) {
        return Err(invalid_arg("theta must be > 0"));
    }
    budget.check()?;
    let theta_max = j.map(|j| if j > 0.0 { 1.0 / j } else { f64::INFINITY });
    let mut warning = None;
    if let Some(tm) = theta_max {
        if theta >= tm {
            let msg = format!("theta = {theta} is not below 1/J = {tm}; the exponential moment may be infinite");
            if !override_gate {
                return Err(Error::InvalidArgument(msg));
            }
            warning = Some(msg);
        }
    }
    let doubled = Budget { paths: 2 * budget.paths, ..*budget };
    let (_, values) = sample_i_distribution(f, model, x, &doubled, &[])?;
    let scaled: Vec<f64> = values.iter().map(|v| theta * v).collect();
    let n = budget.paths;
    let log_mgf = log_mean_exp(&scaled[..n]);
    let log_doubled = log_mean_exp(&scaled);
    let mut first = scaled[..n].to_vec();
    first.sort_by(f64::total_cmp);
    let keep = n - n / 100;
    let log_trimmed = log_mean_exp(&first[..keep.max(1)]);
    let rel = |other: f64| ((other - log_mgf).exp() - 1.0).abs();
    let doubling_change = rel(log_doubled);
    let trimming_change = rel(log_trimmed);
    Ok(KhasminskiiReport {
        f_id: f.id().to_string(),
        model_id: model.id(),
        x,
        theta,
        j,
        theta_max,
        horizon: budget.horizon,
        paths: n,
        seed: budget.seed,
        empirical_mgf: log_mgf.exp(),
        log_mgf,
        doubled_mgf: log_doubled.exp(),
        trimmed_mgf: log_trimmed.exp(),
        doubling_change,
        trimming_change,
        stable: doubling_change < 0.10 && trimming_change < 0.25,
        warning,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levy::{build_model, simulate_path, ModelSpec};
    use approx::assert_relative_eq;

    fn lattice() -> LevyModel {
        build_model(ModelSpec::lattice_cpp(2.0, 1.0)).unwrap()
    }

    #[test]
    fn indicator_on_pure_drift() {
        let m = build_model(ModelSpec::pure_drift(1.0)).unwrap();
        let p = simulate_path(&m, 5.0, None, 0).unwrap();
        let f = TestFunction::indicator(0.0, 1.0);
        assert_relative_eq!(integral_along_path(&f, &p, 0.0).unwrap(), 1.0, epsilon = 1e-14);
        let prof = integral_profile(&f, &p, 0.0, &[5.0, 0.5, 0.0, 2.0]).unwrap();
        assert_eq!(prof[2], 0.0);
        assert_relative_eq!(prof[1], 0.5, epsilon = 1e-14);
        assert_relative_eq!(prof[3], 1.0, epsilon = 1e-14);
    }

    #[test]
    fn exponential_on_pure_drift() {
        let m = build_model(ModelSpec::pure_drift(1.0)).unwrap();
        let p = simulate_path(&m, 60.0, None, 0).unwrap();
        let v = integral_along_path(&TestFunction::exp_decay(), &p, 0.0).unwrap();
        assert_relative_eq!(v, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn horizon_mismatch_rejected() {
        let m = build_model(ModelSpec::pure_drift(1.0)).unwrap();
        let p = simulate_path(&m, 5.0, None, 0).unwrap();
        assert!(integral_profile(&TestFunction::constant(1.0), &p, 0.0, &[6.0]).is_err());
    }

    #[test]
    fn trapezoid_on_grid_paths() {
        let p = PathSample {
            times: vec![0.0, 1.0, 2.0],
            values: vec![0.0, 1.0, 2.0],
            exact: false,
            slope: 0.0,
            horizon: 2.0,
            stopped_above: None,
            hit_tol: 0.0,
        };
        let f = TestFunction::reciprocal(1.0).plus(&TestFunction::indicator(0.5, 1.5)).unwrap();
        let v = integral_along_path(&f, &p, 0.0).unwrap();
        // trapezoid of 1/(1+y) at 0,1,2 plus left endpoint of the indicator (1 at y=1)
        let expect = 0.5 * (1.0 + 0.5) + 0.5 * (0.5 + 1.0 / 3.0) + 1.0;
        assert_relative_eq!(v, expect, epsilon = 1e-14);
    }

    #[test]
    fn lattice_mean_holding_time() {
        let m = lattice();
        let f = TestFunction::indicator(0.0, 1.0);
        let d = estimate_i_distribution(&f, &m, 0.5, &Budget::new(20_000, 50.0, 4), &[0.1, 0.5, 1.0]).unwrap();
        assert!((d.mean - 0.5).abs() < 3.0 * d.stderr, "{} ± {}", d.mean, d.stderr);
        assert_eq!(d.censored_fraction, 0.0);
        assert!(d.tails.windows(2).all(|w| w[0].g_hat >= w[1].g_hat));
        let expect = (-2.0f64 * 0.5).exp();
        assert!((d.tails[1].g_hat - expect).abs() < 4.0 * d.tails[1].stderr);
    }

    #[test]
    fn zero_function_gives_zero() {
        let d = estimate_i_distribution(&TestFunction::zero(), &lattice(), 0.0, &Budget::new(100, 10.0, 1), &[0.0])
            .unwrap();
        assert_eq!(d.max, 0.0);
        assert_eq!(d.tails[0].g_hat, 0.0);
    }

    #[test]
    fn stopped_subordinator_needs_vanishing_f() {
        let m = build_model(ModelSpec::truncated_stable(1.0, 0.5, 1.0)).unwrap();
        let mut rng = SeedTree::new(1).path(0);
        let p = simulate_with(&m, 50.0, &SimOptions { step: None, stop_above: Some(3.0) }, &mut rng).unwrap();
        assert!(p.end_time() < 50.0);
        assert!(integral_along_path(&TestFunction::indicator(0.0, 1.0), &p, 0.0).is_ok());
        assert!(integral_along_path(&TestFunction::exp_decay(), &p, 0.0).is_err());
    }

    #[test]
    fn classifier_rules() {
        let row = |h: f64, m: f64, c: f64| LadderRow { horizon: h, median_i: m, mean_i: m, censored_fraction: c };
        let flat = [row(10.0, 1.0, 0.0), row(20.0, 1.0, 0.0), row(40.0, 1.001, 0.0)];
        assert_eq!(classify_ladder(&flat).0, Outcome::Finite);
        let log = [10.0f64, 20.0, 40.0, 80.0].map(|t| row(t, (1.0 + t).ln(), 1.0));
        assert_eq!(classify_ladder(&log).0, Outcome::Infinite);
        let censored_flat = [row(10.0, 1.0, 0.5), row(20.0, 1.0, 0.5), row(40.0, 1.0, 0.5)];
        assert_eq!(classify_ladder(&censored_flat).0, Outcome::Inconclusive);
        let zeros = [row(10.0, 0.0, 0.0), row(20.0, 0.0, 0.0), row(40.0, 0.0, 0.0)];
        assert_eq!(classify_ladder(&zeros).0, Outcome::Finite);
    }

    #[test]
    fn diagnosis_on_drifted_bm() {
        let m = build_model(ModelSpec::drifted_bm(1.0, 1.0)).unwrap();
        let ladder = [10.0, 20.0, 40.0, 80.0];
        let v = finiteness_diagnosis(&TestFunction::exp_decay(), &m, 0.0, &ladder, 400, 3, Some(0.01)).unwrap();
        assert_eq!(v.outcome, Outcome::Finite);
        assert!(v.bootstrap_agreement >= 0.95);
        let w = finiteness_diagnosis(&TestFunction::reciprocal(1.0), &m, 0.0, &ladder, 400, 3, Some(0.01)).unwrap();
        assert_eq!(w.outcome, Outcome::Infinite);
        let csv = w.ladder_csv(&[]);
        assert!(csv.contains("horizon,median_I,mean_I,censored_fraction\n"));
        assert_eq!(csv.lines().filter(|l| !l.starts_with('#')).count(), 5);
    }

    #[test]
    fn l_set_of_zero_function_is_everything() {
        let l = estimate_l_set(&TestFunction::zero(), &lattice(), 0.5, 0.0, &[-1.0, 0.0, 1.0], &Budget::new(50, 10.0, 1))
            .unwrap();
        assert!(l.points.iter().all(|p| p.member));
        assert!(l.up_set);
        assert_eq!(l.threshold, Some(-1.0));
    }

    #[test]
    fn l_set_threshold_moves_left_with_a() {
        let m = build_model(ModelSpec::pure_drift(1.0)).unwrap();
        let xs: Vec<f64> = (-20..=20).map(|k| k as f64 * 0.25).collect();
        let b = Budget::new(10, 40.0, 1);
        // I^x = e^{-x} deterministically
        let l1 = estimate_l_set(&TestFunction::exp_decay(), &m, 0.5, 0.1, &xs, &b).unwrap();
        let l2 = estimate_l_set(&TestFunction::exp_decay(), &m, 2.0, 0.1, &xs, &b).unwrap();
        assert!(l1.up_set && l2.up_set);
        assert!(l2.threshold.unwrap() < l1.threshold.unwrap());
    }

    #[test]
    fn batty_on_pure_drift() {
        let m = build_model(ModelSpec::pure_drift(1.0)).unwrap();
        let r = batty_inequality_check(&TestFunction::indicator(0.0, 1.0), &m, 0.0, 2.0, 10.0, 100, None, 1, None, None)
            .unwrap();
        assert_eq!(r.beta_hat, 1.0);
        assert_relative_eq!(r.mean_i, 1.0, epsilon = 1e-12);
        assert!(r.holds);
        assert_eq!(r.n_inner, 10);
        assert!(batty_inequality_check(&TestFunction::zero(), &m, 0.0, 2.0, 10.0, 100, None, 1, None, None).is_err());
    }

    #[test]
    fn khasminskii_gate_and_zero() {
        let z = khasminskii_exponential_check(&TestFunction::zero(), &lattice(), 0.0, 1.0, &Budget::new(100, 5.0, 1), Some(0.0), false)
            .unwrap();
        assert_eq!(z.empirical_mgf, 1.0);
        assert!(z.stable);
        let f = TestFunction::indicator(0.0, 1.0);
        let b = Budget::new(100, 5.0, 1);
        assert!(khasminskii_exponential_check(&f, &lattice(), 0.5, 2.5, &b, Some(0.5), false).is_err());
        let r = khasminskii_exponential_check(&f, &lattice(), 0.5, 2.5, &b, Some(0.5), true).unwrap();
        assert!(r.warning.is_some());
    }

    #[test]
    fn common_random_numbers_give_ordered_integrals() {
        let m = build_model(ModelSpec::drifted_bm(1.0, 1.0)).unwrap();
        let f = TestFunction::exp_decay();
        let mut rng = SeedTree::new(9).path(0);
        let p = simulate_with(&m, 30.0, &SimOptions::with_step(0.01), &mut rng).unwrap();
        let a = integral_along_path(&f, &p, 0.0).unwrap();
        let b = integral_along_path(&f, &p, 1.0).unwrap();
        assert!(b <= a);
    }
}
