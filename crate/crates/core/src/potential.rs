//! Potential measure `U(dy) = ∫_0^∞ P(ξ_s ∈ dy) ds`, i.e. the expected
//! occupation measure, on a grid of bins.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{invalid_arg, Error, Result};
use crate::levy::{simulate_with, JumpLaw, JumpSpec, LevyModel, PathSample, SimOptions};
use crate::par;
use crate::rng::SeedTree;
use crate::stats::mean_se_from_sums;

/// Horizon multiplier of the default truncation heuristic.
pub const DEFAULT_SAFETY_FACTOR: f64 = 8.0;

/// Default number of bins for non-lattice grids.
pub const DEFAULT_BINS: usize = 512;

/// Closed-form potential densities used as oracles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AnalyticDensity {
    /// Pure drift `b`: density `1/b` on `[0, ∞)`.
    Flat { drift: f64 },
    /// Brownian motion with drift `mean` and variance `var`:
    /// `u(y) = 1/μ` for `y >= 0`, `e^{2μy/σ²}/μ` for `y < 0`.
    DriftedBm { mean: f64, var: f64 },
    /// Point masses `mass` at `n * span`, `n >= 0`.
    Lattice { span: f64, mass: f64 },
}

impl AnalyticDensity {
    /// `U([a, b))`.
    pub fn mass_on(&self, a: f64, b: f64) -> f64 {
        match *self {
            AnalyticDensity::Flat { drift } => (b.max(0.0) - a.max(0.0)).max(0.0) / drift,
            AnalyticDensity::DriftedBm { mean, var } => {
                let pos = (b.max(0.0) - a.max(0.0)).max(0.0) / mean;
                let k = 2.0 * mean / var;
                let neg = if a < 0.0 {
                    ((k * b.min(0.0)).exp() - (k * a).exp()) / (k * mean)
                } else {
                    0.0
                };
                pos + neg
            }
            AnalyticDensity::Lattice { span, mass } => {
                // lattice points n*span in [a, b), n >= 0
                let first = (a / span).ceil().max(0.0);
                let last = (b / span).ceil() - 1.0;
                if last < first {
                    0.0
                } else {
                    (last - first + 1.0) * mass
                }
            }
        }
    }

    /// Density `u(y)`; `None` for atomic measures.
    pub fn density(&self, y: f64) -> Option<f64> {
        match *self {
            AnalyticDensity::Flat { drift } => Some(if y >= 0.0 { 1.0 / drift } else { 0.0 }),
            AnalyticDensity::DriftedBm { mean, var } => Some(if y >= 0.0 {
                1.0 / mean
            } else {
                (2.0 * mean * y / var).exp() / mean
            }),
            AnalyticDensity::Lattice { .. } => None,
        }
    }

    /// `P(σ^x < ∞)` implied by the closed form.
    pub fn hitting_probability(&self, x: f64) -> f64 {
        match *self {
            AnalyticDensity::Flat { .. } => {
                if x >= 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            AnalyticDensity::DriftedBm { mean, var } => {
                if x >= 0.0 {
                    1.0
                } else {
                    (2.0 * mean * x / var).exp()
                }
            }
            AnalyticDensity::Lattice { span, .. } => {
                let k = x / span;
                if x >= 0.0 && (k - k.round()).abs() < 1e-12 * k.abs().max(1.0) {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialMeta {
    pub model_id: String,
    pub paths: usize,
    pub horizon: f64,
    pub seed: u64,
    /// Fraction of paths that ended below the grid maximum.
    pub unfinished_fraction: f64,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialMeasure {
    /// Bin edges `y_0 < ... < y_m`; bins are `[y_i, y_{i+1})`.
    pub edges: Vec<f64>,
    pub masses: Vec<f64>,
    pub stderr: Vec<f64>,
    /// Location of the single atom in each bin, for lattice grids.
    pub atoms: Option<Vec<f64>>,
    pub analytic: Option<AnalyticDensity>,
    pub meta: PotentialMeta,
}

impl PotentialMeasure {
    pub fn bins(&self) -> usize {
        self.masses.len()
    }

    pub fn lo(&self) -> f64 {
        self.edges[0]
    }

    pub fn hi(&self) -> f64 {
        *self.edges.last().unwrap()
    }

    pub fn width(&self, i: usize) -> f64 {
        self.edges[i + 1] - self.edges[i]
    }

    /// Index of the bin containing `y`.
    pub fn bin_of(&self, y: f64) -> Option<usize> {
        if y < self.lo() || y >= self.hi() {
            return None;
        }
        Some(self.edges.partition_point(|&e| e <= y) - 1)
    }

    pub fn is_atomic(&self) -> bool {
        self.atoms.is_some()
    }

    /// `U([0, y])` as a cumulative sum of bin masses (bins entirely below `y`
    /// plus the containing bin pro rata, or exactly for atoms).
    pub fn cumulative_from(&self, origin: f64, y: f64) -> f64 {
        let mut s = 0.0;
        for i in 0..self.bins() {
            let (a, b) = (self.edges[i], self.edges[i + 1]);
            if b <= origin {
                continue;
            }
            if a > y {
                break;
            }
            match &self.atoms {
                Some(atoms) => {
                    if atoms[i] >= origin && atoms[i] <= y {
                        s += self.masses[i];
                    }
                }
                None => {
                    let lo = a.max(origin);
                    let hi = b.min(y);
                    if hi > lo {
                        s += self.masses[i] * (hi - lo) / (b - a);
                    }
                }
            }
        }
        s
    }

    /// Proxy for `u(y)`: mass over width of the containing bin (or the atom mass).
    pub fn density_proxy(&self, y: f64) -> Option<f64> {
        let i = self.bin_of(y)?;
        Some(if self.is_atomic() { self.masses[i] } else { self.masses[i] / self.width(i) })
    }

    /// CSV with `#` metadata lines followed by `bin_lo,bin_hi,mass,stderr`.
    pub fn to_csv(&self, extra_meta: &[(&str, String)]) -> String {
        let mut out = String::new();
        let m = &self.meta;
        let _ = writeln!(out, "# model={}", m.model_id);
        let _ = writeln!(out, "# paths={}", m.paths);
        let _ = writeln!(out, "# horizon={}", m.horizon);
        let _ = writeln!(out, "# seed={}", m.seed);
        for (k, v) in extra_meta {
            let _ = writeln!(out, "# {k}={v}");
        }
        for w in &m.warnings {
            let _ = writeln!(out, "# warning={w}");
        }
        out.push_str("bin_lo,bin_hi,mass,stderr\n");
        for i in 0..self.bins() {
            let _ = writeln!(out, "{},{},{},{}", self.edges[i], self.edges[i + 1], self.masses[i], self.stderr[i]);
        }
        out
    }

    /// Parses the CSV written by [`Self::to_csv`]; metadata is read back where present.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut meta = PotentialMeta {
            model_id: String::new(),
            paths: 0,
            horizon: 0.0,
            seed: 0,
            unfinished_fraction: 0.0,
            warnings: Vec::new(),
        };
        let mut edges = Vec::new();
        let mut masses = Vec::new();
        let mut stderr = Vec::new();
        let bad = |line: &str| Error::Serialization(format!("bad potential CSV line: {line}"));
        let mut header_seen = false;
        for line in text.lines() {
            if let Some(rest) = line.strip_prefix('#') {
                if let Some((k, v)) = rest.trim().split_once('=') {
                    match k {
                        "model" => meta.model_id = v.to_string(),
                        "paths" => meta.paths = v.parse().map_err(|_| bad(line))?,
                        "horizon" => meta.horizon = v.parse().map_err(|_| bad(line))?,
                        "seed" => meta.seed = v.parse().map_err(|_| bad(line))?,
                        "warning" => meta.warnings.push(v.to_string()),
                        _ => {}
                    }
                }
                continue;
            }
            if !header_seen {
                if line.trim() != "bin_lo,bin_hi,mass,stderr" {
                    return Err(bad(line));
                }
                header_seen = true;
                continue;
            }
            let cols: Vec<f64> = line
                .split(',')
                .map(|c| c.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| bad(line))?;
            if cols.len() != 4 {
                return Err(bad(line));
            }
            if let Some(&last) = edges.last() {
                if last != cols[0] {
                    return Err(bad(line));
                }
            } else {
                edges.push(cols[0]);
            }
            edges.push(cols[1]);
            masses.push(cols[2]);
            stderr.push(cols[3]);
        }
        if masses.is_empty() {
            return Err(Error::Serialization("potential CSV has no bins".into()));
        }
        Ok(Self { edges, masses, stderr, atoms: None, analytic: None, meta })
    }
}

/// Validates bin edges.
pub fn check_grid(edges: &[f64]) -> Result<()> {
    if edges.len() < 2 {
        return Err(invalid_arg("grid needs at least one bin"));
    }
    if !edges.iter().all(|e| e.is_finite()) || edges.windows(2).any(|w| w[0] >= w[1]) {
        return Err(invalid_arg("grid edges must be finite and strictly increasing"));
    }
    Ok(())
}

/// `n` equal bins on `[lo, hi]`.
pub fn uniform_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect()
}

/// Default grid: bins of width `α` centred on lattice points for lattice
/// models, otherwise [`DEFAULT_BINS`] equal bins.
pub fn default_grid(model: &LevyModel, lo: f64, hi: f64) -> Vec<f64> {
    match model.lattice_span() {
        Some(span) => {
            let first = (lo / span).round() as i64;
            let last = (hi / span).round() as i64;
            (first..=last + 1).map(|k| (k as f64 - 0.5) * span).collect()
        }
        None => uniform_grid(lo, hi, DEFAULT_BINS),
    }
}

/// `T = (grid_max - grid_min) / E[ξ_1] * safety`.
pub fn default_horizon(model: &LevyModel, edges: &[f64], safety: f64) -> f64 {
    let span = edges.last().unwrap() - edges[0];
    let mean = model.mean();
    if mean.is_finite() {
        span / mean * safety
    } else {
        span * safety
    }
}

fn lattice_atoms(model: &LevyModel, edges: &[f64]) -> Option<Vec<f64>> {
    let span = model.lattice_span()?;
    let mut atoms = Vec::with_capacity(edges.len() - 1);
    for w in edges.windows(2) {
        let first = (w[0] / span).ceil();
        let last = (w[1] / span).ceil() - 1.0;
        if first != last {
            return None;
        }
        atoms.push(first * span);
    }
    Some(atoms)
}

/// Adds the time `path` spends in each bin during `[0, t_max]` to `out`.
pub fn accumulate_occupation(path: &PathSample, edges: &[f64], t_max: f64, out: &mut [f64]) {
    let lo = edges[0];
    let hi = *edges.last().unwrap();
    let bin = |y: f64| -> Option<usize> {
        if y < lo || y >= hi {
            None
        } else {
            Some(edges.partition_point(|&e| e <= y) - 1)
        }
    };
    for (t0, t1, v0, v1) in path.pieces() {
        if t0 >= t_max {
            break;
        }
        let t1c = t1.min(t_max);
        let dt = t1c - t0;
        if dt <= 0.0 {
            continue;
        }
        if !path.exact || path.slope == 0.0 {
            // grid cells take their left-endpoint value
            let _ = v1;
            if let Some(i) = bin(v0) {
                out[i] += dt;
            }
            continue;
        }
        let slope = path.slope;
        let end = v0 + slope * dt;
        let (ya, yb) = if slope > 0.0 { (v0, end) } else { (end, v0) };
        if yb <= lo || ya >= hi {
            continue;
        }
        let mut i = bin(ya.max(lo)).unwrap_or(0);
        while i < out.len() && edges[i] < yb {
            let a = edges[i].max(ya);
            let b = edges[i + 1].min(yb);
            if b > a {
                out[i] += (b - a) / slope.abs();
            }
            i += 1;
        }
    }
}

/// Monte Carlo estimate of `U` on the bins `edges`.
pub fn estimate_potential(
    model: &LevyModel,
    edges: &[f64],
    paths: usize,
    horizon: f64,
    step: Option<f64>,
    seed: u64,
) -> Result<PotentialMeasure> {
    check_grid(edges)?;
    if paths == 0 {
        return Err(invalid_arg("need at least one path"));
    }
    let m = edges.len() - 1;
    let grid_max = *edges.last().unwrap();
    let tree = SeedTree::new(seed);
    let opts = SimOptions { step, stop_above: Some(grid_max) };
    struct Partial {
        sum: Vec<f64>,
        sum_sq: Vec<f64>,
        unfinished: usize,
    }
    let partials = par::map_chunks(paths, par::CHUNK, |range| -> Result<Partial> {
        let mut p = Partial { sum: vec![0.0; m], sum_sq: vec![0.0; m], unfinished: 0 };
        let mut occ = vec![0.0; m];
        for i in range {
            let mut rng = tree.path(i as u64);
            let path = simulate_with(model, horizon, &opts, &mut rng)?;
            occ.iter_mut().for_each(|o| *o = 0.0);
            accumulate_occupation(&path, edges, horizon, &mut occ);
            for (k, &o) in occ.iter().enumerate() {
                if o != 0.0 {
                    p.sum[k] += o;
                    p.sum_sq[k] += o * o;
                }
            }
            if path.stopped_above.is_none() && path.final_value() < grid_max {
                p.unfinished += 1;
            }
        }
        Ok(p)
    });
    let mut sum = vec![0.0; m];
    let mut sum_sq = vec![0.0; m];
    let mut unfinished = 0;
    for p in partials {
        let p = p?;
        for k in 0..m {
            sum[k] += p.sum[k];
            sum_sq[k] += p.sum_sq[k];
        }
        unfinished += p.unfinished;
    }
    let mut masses = Vec::with_capacity(m);
    let mut stderr = Vec::with_capacity(m);
    for k in 0..m {
        let s = mean_se_from_sums(sum[k], sum_sq[k], paths);
        masses.push(s.mean);
        stderr.push(s.se);
    }
    let unfinished_fraction = unfinished as f64 / paths as f64;
    let mut warnings = Vec::new();
    if unfinished_fraction > 0.01 {
        warnings.push(format!(
            "{:.2}% of paths ended below the grid maximum {grid_max}; horizon {horizon} may be too short",
            100.0 * unfinished_fraction
        ));
    }
    Ok(PotentialMeasure {
        edges: edges.to_vec(),
        masses,
        stderr,
        atoms: lattice_atoms(model, edges),
        analytic: analytic_density(model),
        meta: PotentialMeta { model_id: model.id(), paths, horizon, seed, unfinished_fraction, warnings },
    })
}

/// Closed form for pure drift, single-atom lattice compound Poisson and
/// drifted Brownian motion.
pub fn analytic_density(model: &LevyModel) -> Option<AnalyticDensity> {
    let spec = model.spec();
    match &spec.jumps {
        JumpSpec::None if spec.gaussian_var == 0.0 => Some(AnalyticDensity::Flat { drift: spec.drift }),
        JumpSpec::None => Some(AnalyticDensity::DriftedBm { mean: spec.drift, var: spec.gaussian_var }),
        JumpSpec::CompoundPoisson { rate, law: JumpLaw::Atoms { atoms } }
            if atoms.len() == 1 && model.is_compound_poisson() && atoms[0].0 > 0.0 =>
        {
            Some(AnalyticDensity::Lattice { span: atoms[0].0, mass: 1.0 / rate })
        }
        _ => None,
    }
}

/// Exact potential measure on `edges`, or `None` when no closed form exists.
pub fn analytic_potential(model: &LevyModel, edges: &[f64]) -> Result<Option<PotentialMeasure>> {
    check_grid(edges)?;
    let Some(density) = analytic_density(model) else {
        return Ok(None);
    };
    let masses: Vec<f64> = edges.windows(2).map(|w| density.mass_on(w[0], w[1])).collect();
    // grids not aligned with the lattice keep histogram semantics
    let atoms = match density {
        AnalyticDensity::Lattice { .. } => lattice_atoms(model, edges),
        _ => None,
    };
    Ok(Some(PotentialMeasure {
        stderr: vec![0.0; masses.len()],
        edges: edges.to_vec(),
        masses,
        atoms,
        analytic: Some(density),
        meta: PotentialMeta {
            model_id: model.id(),
            paths: 0,
            horizon: f64::INFINITY,
            seed: 0,
            unfinished_fraction: 0.0,
            warnings: Vec::new(),
        },
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HittingEstimate {
    pub value: f64,
    /// Ratio before clamping to `[0, 1]`.
    pub raw: f64,
    pub warning: Option<String>,
}

/// `P(σ^x < ∞) = u(x)/u(0)`.
pub fn hitting_probability(pm: &PotentialMeasure, x: f64) -> Result<HittingEstimate> {
    if let Some(d) = pm.analytic {
        let v = d.hitting_probability(x);
        return Ok(HittingEstimate { value: v, raw: v, warning: None });
    }
    let u0 = pm
        .density_proxy(0.0)
        .ok_or_else(|| Error::Coverage("grid does not contain 0".into()))?;
    if !(u0 > 0.0) {
        return Err(invalid_arg(format!("u(0) estimate {u0} is not positive")));
    }
    let ux = pm
        .density_proxy(x)
        .ok_or_else(|| Error::Coverage(format!("grid does not contain {x}")))?;
    let raw = ux / u0;
    let warning = (raw > 1.0).then(|| format!("ratio {raw} exceeds 1 (Monte Carlo noise); clamped"));
    Ok(HittingEstimate { value: raw.clamp(0.0, 1.0), raw, warning })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioInf {
    pub value: f64,
    pub window: (f64, f64),
    pub bins_used: usize,
    pub caveat: String,
}

/// `inf_{x ∈ [K, X]} u(x)/u(0)` over the bins inside the window.
pub fn hitting_ratio_inf(pm: &PotentialMeasure, k: f64, x_max: f64) -> Result<RatioInf> {
    if !(k < x_max) {
        return Err(invalid_arg(format!("window [{k}, {x_max}] is empty")));
    }
    if k < pm.lo() || x_max > pm.hi() {
        return Err(Error::Coverage(format!("window [{k}, {x_max}] outside grid")));
    }
    let caveat = format!("finite-window proxy over [{k}, {x_max}] for a liminf at +infinity");
    if let Some(d) = pm.analytic {
        if let Some(u0) = d.density(0.0) {
            let mut best = f64::INFINITY;
            let mut n = 0;
            for i in 0..pm.bins() {
                let (a, b) = (pm.edges[i], pm.edges[i + 1]);
                if a >= k && b <= x_max {
                    best = best.min(d.mass_on(a, b) / (b - a) / u0);
                    n += 1;
                }
            }
            return Ok(RatioInf { value: best, window: (k, x_max), bins_used: n, caveat });
        }
    }
    let u0 = pm
        .density_proxy(0.0)
        .filter(|&u| u > 0.0)
        .ok_or_else(|| invalid_arg("u(0) estimate is not positive"))?;
    let mut best = f64::INFINITY;
    let mut n = 0;
    for i in 0..pm.bins() {
        let (a, b) = (pm.edges[i], pm.edges[i + 1]);
        if a >= k && b <= x_max {
            let u = if pm.is_atomic() { pm.masses[i] } else { pm.masses[i] / (b - a) };
            best = best.min(u / u0);
            n += 1;
        }
    }
    if n == 0 {
        return Err(Error::Coverage(format!("no bin lies inside [{k}, {x_max}]")));
    }
    Ok(RatioInf { value: best, window: (k, x_max), bins_used: n, caveat })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levy::{build_model, ModelSpec};

    #[test]
    fn pure_drift_unit_mass_per_bin() {
        let m = build_model(ModelSpec::pure_drift(1.0)).unwrap();
        let pm = estimate_potential(&m, &[0.0, 1.0, 2.0], 10, 5.0, None, 1).unwrap();
        assert_eq!(pm.masses, vec![1.0, 1.0]);
        assert_eq!(pm.stderr, vec![0.0, 0.0]);
        let a = analytic_potential(&m, &[0.0, 1.0, 2.0]).unwrap().unwrap();
        assert_eq!(a.masses, vec![1.0, 1.0]);
    }

    #[test]
    fn empty_grid_rejected() {
        let m = build_model(ModelSpec::pure_drift(1.0)).unwrap();
        assert!(estimate_potential(&m, &[0.0], 10, 5.0, None, 1).is_err());
        assert!(estimate_potential(&m, &[1.0, 0.0], 10, 5.0, None, 1).is_err());
    }

    #[test]
    fn subordinators_have_no_mass_below_zero() {
        let m = build_model(ModelSpec::truncated_stable(1.0, 0.5, 1.0)).unwrap();
        let grid = uniform_grid(-2.0, 4.0, 12);
        let pm = estimate_potential(&m, &grid, 200, 20.0, None, 3).unwrap();
        for i in 0..4 {
            assert_eq!(pm.masses[i], 0.0);
        }
        assert!(pm.masses[5] > 0.0);
        assert!(analytic_potential(&m, &grid).unwrap().is_none());
    }

    #[test]
    fn lattice_grid_is_atomic() {
        let m = build_model(ModelSpec::lattice_cpp(2.0, 1.0)).unwrap();
        let grid = default_grid(&m, 0.0, 10.0);
        assert_eq!(grid[0], -0.5);
        let pm = estimate_potential(&m, &grid, 500, 40.0, None, 2).unwrap();
        assert!(pm.is_atomic());
        let a = analytic_potential(&m, &grid).unwrap().unwrap();
        assert!(a.masses.iter().all(|&x| x == 0.5));
        assert_eq!(hitting_probability(&a, 3.0).unwrap().value, 1.0);
        assert_eq!(hitting_ratio_inf(&a, 1.0, 9.0).unwrap().value, 1.0);
    }

    #[test]
    fn drifted_bm_closed_form() {
        let m = build_model(ModelSpec::drifted_bm(1.0, 1.0)).unwrap();
        let a = analytic_potential(&m, &[-5.0, -4.0, 0.0, 1.0]).unwrap().unwrap();
        let expect = ((-8f64).exp() - (-10f64).exp()) / 2.0;
        assert!((a.masses[0] - expect).abs() < 1e-15);
        assert!((a.masses[2] - 1.0).abs() < 1e-15);
        let h = hitting_probability(&a, -1.0).unwrap();
        assert!((h.value - (-2f64).exp()).abs() < 1e-15);
        assert_eq!(hitting_probability(&a, 0.0).unwrap().value, 1.0);
    }

    #[test]
    fn ratio_inf_rejects_empty_window() {
        let m = build_model(ModelSpec::pure_drift(1.0)).unwrap();
        let a = analytic_potential(&m, &uniform_grid(0.0, 10.0, 10)).unwrap().unwrap();
        assert!(hitting_ratio_inf(&a, 5.0, 5.0).is_err());
        assert_eq!(hitting_ratio_inf(&a, 0.0, 10.0).unwrap().value, 1.0);
    }

    #[test]
    fn csv_round_trip() {
        let m = build_model(ModelSpec::lattice_cpp(2.0, 1.0)).unwrap();
        let pm = estimate_potential(&m, &default_grid(&m, 0.0, 5.0), 50, 20.0, None, 2).unwrap();
        let csv = pm.to_csv(&[("config_digest", "abc".into())]);
        assert!(csv.starts_with("# model="));
        assert!(csv.contains("# config_digest=abc"));
        let back = PotentialMeasure::from_csv(&csv).unwrap();
        assert_eq!(back.edges, pm.edges);
        assert_eq!(back.masses, pm.masses);
        assert_eq!(back.meta.seed, 2);
    }

    #[test]
    fn hitting_probability_from_bins_clamps() {
        let pm = PotentialMeasure {
            edges: vec![-1.0, 0.0, 1.0, 2.0],
            masses: vec![0.2, 1.0, 1.1],
            stderr: vec![0.0; 3],
            atoms: None,
            analytic: None,
            meta: PotentialMeta {
                model_id: "t".into(),
                paths: 1,
                horizon: 1.0,
                seed: 0,
                unfinished_fraction: 0.0,
                warnings: vec![],
            },
        };
        assert_eq!(hitting_probability(&pm, 0.0).unwrap().value, 1.0);
        let h = hitting_probability(&pm, 1.5).unwrap();
        assert_eq!(h.value, 1.0);
        assert!(h.warning.is_some());
        assert!((hitting_probability(&pm, -0.5).unwrap().value - 0.2).abs() < 1e-15);
        let mut zero = pm.clone();
        zero.masses[1] = 0.0;
        assert!(hitting_probability(&zero, 1.5).is_err());
    }
}
