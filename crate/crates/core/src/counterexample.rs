//! The two counterexamples to a Lebesgue-measure test: the lattice sine
//! function and the transient trap built from overshoot statistics.

use serde::{Deserialize, Serialize};

use crate::criteria::{dk_test, potential_integral, transience_probe, CriterionReport, TransienceReport};
use crate::ecdf::dkw_epsilon;
use crate::error::{invalid_arg, Error, Result};
use crate::function::{Term, TestFunction};
use crate::levy::{subordinator_overshoots, LevyModel};
use crate::par;
use crate::perpetual::{estimate_i_distribution, finiteness_diagnosis, Budget, IDistribution, Outcome, Verdict};
use crate::potential::{analytic_potential, default_grid, estimate_potential, uniform_grid};
use crate::region::{Interval, RegionSpec, Role};
use crate::rng::{domain, SeedTree};
use crate::stats::{binomial_upper, proportion_se};

/// Confidence level of every band and bound in this module is `1 - ALPHA`.
pub const ALPHA: f64 = 0.01;
/// Default safety factor of the trap construction.
pub const DEFAULT_SAFETY: f64 = 2.0;
/// Lattice points checked for `f(n α) = 0`.
pub const LATTICE_CHECK_POINTS: usize = 10_000;

/// Log-spaced strip widths, 20 per decade from `1e-9` to `1`.
pub fn default_eps_grid() -> Vec<f64> {
    (0..=180).map(|k| 10f64.powf(-9.0 + k as f64 / 20.0)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeReport {
    pub alpha: f64,
    pub model_id: String,
    pub f_id: String,
    /// `max_{0 <= n < LATTICE_CHECK_POINTS} f(n α)`.
    pub max_f_on_lattice: f64,
    pub period_integral: f64,
    pub dk: CriterionReport,
    pub potential: CriterionReport,
    pub distribution: IDistribution,
    /// `I^0_T <= 1e-9 T` on every path.
    pub all_paths_negligible: bool,
    /// The Lebesgue test says infinite while the perpetual integral vanishes.
    pub disagreement: bool,
}

/// `f(y) = 1 + sin(3π/2 + 2πy/α)` on a process living on `αℕ`.
pub fn lattice_counterexample(alpha: f64, model: &LevyModel, budget: &Budget) -> Result<LatticeReport> {
    match model.lattice_span() {
        Some(span) if (span - alpha).abs() <= 1e-12 * alpha.abs() => {}
        _ => {
            return Err(Error::InvalidModel(format!("{} does not live on the lattice {alpha}ℕ", model.id())));
        }
    }
    let f = TestFunction::lattice_sine(alpha)?;
    let max_f_on_lattice =
        (0..LATTICE_CHECK_POINTS).map(|n| f.eval(n as f64 * alpha)).fold(0.0f64, f64::max);
    let period_integral = f.integral(0.0, alpha);
    let dk = dk_test(&f, alpha)?;
    let hi = 2.0 * model.mean() * budget.horizon;
    let pm = analytic_potential(model, &default_grid(model, 0.0, hi))?
        .ok_or_else(|| Error::InvalidModel("lattice model without a closed-form potential".into()))?;
    let potential = potential_integral(&f, &pm, &RegionSpec::whole_line(), 0.0)?;
    let distribution = estimate_i_distribution(&f, model, 0.0, budget, &[])?;
    let all_paths_negligible = distribution.max <= 1e-9 * budget.horizon;
    let disagreement = dk.verdict == Outcome::Infinite && all_paths_negligible && potential.value == 0.0;
    Ok(LatticeReport {
        alpha,
        model_id: model.id(),
        f_id: f.id().to_string(),
        max_f_on_lattice,
        period_integral,
        dk,
        potential,
        distribution,
        all_paths_negligible,
        disagreement,
    })
}

/// Empirical overshoot laws at several levels on a common strip-width grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OvershootTable {
    pub model_id: String,
    pub seed: u64,
    pub paths: usize,
    pub levels: Vec<f64>,
    pub eps_grid: Vec<f64>,
    /// `strip_counts[i][k] = #{paths : 0 < O_{levels[i]} < eps_grid[k]}`.
    pub strip_counts: Vec<Vec<u64>>,
    /// `#{O = 0}` per level (creeping).
    pub zero_counts: Vec<u64>,
    pub max_overshoot: Vec<f64>,
    pub mean_overshoot: Vec<f64>,
    /// `P(O_x = 0)` for large `x` implied by the linear drift of the
    /// simulated process (`d / μ`); zero for a driftless process.
    pub creep_reference: f64,
    /// Half-width of the 99% DKW band of each CDF.
    pub dkw_band: f64,
    /// Sup-distance between the CDFs at the two largest levels.
    pub sup_distance: f64,
    /// Null standard deviation of that distance for equal sample sizes.
    pub sup_distance_se: f64,
}

impl OvershootTable {
    pub fn limit_index(&self) -> usize {
        self.levels.len() - 1
    }

    /// `P̂(O_x <= eps)` including the atom at 0.
    pub fn cdf(&self, level: usize, k: usize) -> f64 {
        (self.zero_counts[level] + self.strip_counts[level][k]) as f64 / self.paths as f64
    }

    /// `P̂(0 < O_x < eps)`.
    pub fn strip(&self, level: usize, k: usize) -> f64 {
        self.strip_counts[level][k] as f64 / self.paths as f64
    }

    pub fn zero_mass(&self, level: usize) -> f64 {
        self.zero_counts[level] as f64 / self.paths as f64
    }

    /// Clopper–Pearson upper bound of `P(0 < O_x < eps)`.
    pub fn strip_upper(&self, level: usize, k: usize, alpha: f64) -> f64 {
        binomial_upper(self.strip_counts[level][k] as usize, self.paths, alpha)
    }
}

/// Overshoot laws of a subordinator at `levels` (sorted). Each path yields
/// one overshoot per level.
///
/// The model must be a driftless subordinator with jumps at most 1 and
/// infinite activity; `allow_atoms` admits compound Poisson models, whose
/// overshoots can be degenerate.
pub fn estimate_overshoot_cdf(
    model: &LevyModel,
    levels: &[f64],
    paths: usize,
    seed: u64,
    allow_atoms: bool,
) -> Result<OvershootTable> {
    if !model.is_subordinator() || model.needs_step() {
        return Err(Error::InvalidModel(format!("{} is not a subordinator", model.id())));
    }
    if model.spec().drift != 0.0 {
        return Err(Error::InvalidModel("overshoot tables need a driftless subordinator".into()));
    }
    if !model.max_jump().is_some_and(|j| j <= 1.0) {
        return Err(Error::InvalidModel("overshoot tables need jumps of size at most 1".into()));
    }
    if model.is_compound_poisson() && !allow_atoms {
        return Err(Error::InvalidModel(
            "finite-activity jump laws can make overshoots degenerate; pass allow_atoms to proceed".into(),
        ));
    }
    if levels.len() < 2 || levels.windows(2).any(|w| w[0] >= w[1]) || !(levels[0] > 0.0) {
        return Err(invalid_arg("need at least two positive increasing levels"));
    }
    if paths < 2 {
        return Err(invalid_arg("need at least two paths"));
    }
    let eps_grid = default_eps_grid();
    let m = levels.len();
    let tree = SeedTree::new(seed);
    struct Part {
        strip: Vec<Vec<u64>>,
        zero: Vec<u64>,
        max: Vec<f64>,
        sum: Vec<f64>,
        top: Vec<[f64; 2]>,
    }
    let parts = par::map_chunks(paths, par::CHUNK, |range| -> Result<Part> {
        let mut p = Part {
            strip: vec![vec![0; eps_grid.len()]; m],
            zero: vec![0; m],
            max: vec![0.0; m],
            sum: vec![0.0; m],
            top: Vec::with_capacity(range.len()),
        };
        for i in range {
            let mut rng = tree.stream(&[domain::OVERSHOOT], i as u64);
            let o = subordinator_overshoots(model, levels, &mut rng)?;
            for (l, &v) in o.iter().enumerate() {
                if v == 0.0 {
                    p.zero[l] += 1;
                } else {
                    let first = eps_grid.partition_point(|&e| e <= v);
                    for c in &mut p.strip[l][first..] {
                        *c += 1;
                    }
                }
                p.max[l] = p.max[l].max(v);
                p.sum[l] += v;
            }
            p.top.push([o[m - 2], o[m - 1]]);
        }
        Ok(p)
    });
    let mut strip_counts = vec![vec![0u64; eps_grid.len()]; m];
    let mut zero_counts = vec![0u64; m];
    let mut max_overshoot = vec![0.0f64; m];
    let mut sums = vec![0.0; m];
    let mut a = Vec::with_capacity(paths);
    let mut b = Vec::with_capacity(paths);
    for p in parts {
        let p = p?;
        for l in 0..m {
            for (c, d) in strip_counts[l].iter_mut().zip(&p.strip[l]) {
                *c += d;
            }
            zero_counts[l] += p.zero[l];
            max_overshoot[l] = max_overshoot[l].max(p.max[l]);
            sums[l] += p.sum[l];
        }
        for t in p.top {
            a.push(t[0]);
            b.push(t[1]);
        }
    }
    let sup_distance = crate::ecdf::Ecdf::new(&a).sup_distance(&crate::ecdf::Ecdf::new(&b));
    Ok(OvershootTable {
        model_id: model.id(),
        seed,
        paths,
        levels: levels.to_vec(),
        eps_grid,
        strip_counts,
        zero_counts,
        max_overshoot,
        mean_overshoot: sums.iter().map(|s| s / paths as f64).collect(),
        creep_reference: model.linear_drift() / model.mean(),
        dkw_band: dkw_epsilon(paths, ALPHA),
        // the Kolmogorov law has standard deviation 0.2603
        sup_distance_se: 0.2603 * (2.0 / paths as f64).sqrt(),
        sup_distance,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrapConstruction {
    pub model_id: String,
    pub n_max: usize,
    pub safety: f64,
    pub x: Vec<f64>,
    pub eps: Vec<f64>,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    /// Bound `1/(2n²)` every certificate must meet.
    pub target: Vec<f64>,
    /// Certified `P(0 < O_y < ε_n)` for tabulated `y >= x_n`.
    pub certificate: Vec<f64>,
    /// Confidence level per certificate after the Bonferroni split.
    pub per_bound_alpha: f64,
    /// Bumps `f_n` as triangles on `(α_n, β_n)` with unit area.
    pub f_terms: Vec<Term>,
    pub certified_visit_bound: f64,
    /// `Σ_{n > n_max} 2/n²`, the part of the infinite construction left out.
    pub tail_bound: f64,
    pub caveats: Vec<String>,
}

impl TrapConstruction {
    pub fn f(&self) -> TestFunction {
        TestFunction::new(format!("trap(n_max={})", self.n_max), self.f_terms.clone())
            .expect("valid trap bumps")
            .with_materialized_to(self.beta[self.n_max - 1])
    }

    /// `ℝ \ E = ∪ (α_n, β_n)`.
    pub fn complement(&self) -> RegionSpec {
        let iv = self.alpha.iter().zip(&self.beta).map(|(&a, &b)| Interval::new(a, b)).collect();
        RegionSpec::explicit(iv, Role::Complement)
            .expect("disjoint trap intervals")
            .labelled(format!("complement of trap intervals, depth {}", self.n_max))
    }
}

/// `Σ_{n > n} 2/k²` via `π²/3 - Σ_{k <= n} 2/k²`.
pub fn trap_tail_bound(n: usize) -> f64 {
    let head: f64 = (1..=n).map(|k| 2.0 / (k * k) as f64).sum();
    (std::f64::consts::PI.powi(2) / 3.0 - head).max(0.0)
}

/// Smallest tabulated level from which every CDF lies within the two-sample
/// 99% DKW band of the limit proxy.
fn stationary_level(table: &OvershootTable) -> usize {
    let lim = table.limit_index();
    let band = 2.0 * table.dkw_band;
    let mut first = lim;
    for l in (0..lim).rev() {
        let close = (0..table.eps_grid.len()).all(|k| (table.cdf(l, k) - table.cdf(lim, k)).abs() <= band);
        if !close {
            break;
        }
        first = l;
    }
    first
}

/// Chooses `ε_n` and `x_n` from an overshoot table and assembles the trap.
///
/// `ε_n` is the largest grid width whose Clopper–Pearson upper bound for the
/// limit proxy is at most `1/(2·safety·n²)`, forced strictly below
/// `ε_{n-1}`. `x_n` is the first level from which the tabulated laws agree
/// with the limit proxy; the certificate is the largest upper bound of
/// `P(0 < O_y < ε_n)` over tabulated `y >= x_n` and must not exceed
/// `1/(2n²)`. Bounds are Bonferroni-adjusted over all levels and depths.
pub fn build_transient_trap(table: &OvershootTable, n_max: usize, safety: f64) -> Result<TrapConstruction> {
    if n_max == 0 {
        return Err(invalid_arg("n_max must be >= 1"));
    }
    if !(safety >= 1.0 && safety.is_finite()) {
        return Err(invalid_arg("safety factor must be >= 1"));
    }
    let lim = table.limit_index();
    let zero = table.zero_mass(lim);
    let allowed = table.creep_reference + 3.0 * proportion_se(table.creep_reference.max(1.0 / table.paths as f64), table.paths);
    if zero > allowed {
        return Err(Error::NotCertifiable(format!(
            "limit overshoot law has an atom {zero} at 0 beyond the creeping {allowed} of the small-jump drift"
        )));
    }
    let alpha_each = ALPHA / (n_max * table.levels.len()) as f64;
    let x_idx = stationary_level(table);
    let x_level = table.levels[x_idx];
    let mut x = Vec::with_capacity(n_max);
    let mut eps = Vec::with_capacity(n_max);
    let mut target = Vec::with_capacity(n_max);
    let mut certificate = Vec::with_capacity(n_max);
    let mut k_prev = table.eps_grid.len();
    for n in 1..=n_max {
        let nn = (n * n) as f64;
        let lim_target = 1.0 / (2.0 * safety * nn);
        let k = (0..k_prev).rev().find(|&k| table.strip_upper(lim, k, alpha_each) <= lim_target);
        let Some(k) = k else {
            return Err(Error::NotCertifiable(format!(
                "depth n = {n} fails: no strip width below {} has an upper bound <= {lim_target} \
                 at the limit level ({} paths)",
                table.eps_grid[k_prev.min(table.eps_grid.len() - 1)],
                table.paths
            )));
        };
        let c = (x_idx..=lim).map(|l| table.strip_upper(l, k, alpha_each)).fold(0.0f64, f64::max);
        let t = 1.0 / (2.0 * nn);
        if c > t {
            return Err(Error::NotCertifiable(format!(
                "depth n = {n} fails: certificate {c} exceeds 1/(2n²) = {t} at width {}",
                table.eps_grid[k]
            )));
        }
        k_prev = k;
        x.push(x_level);
        eps.push(table.eps_grid[k]);
        target.push(t);
        certificate.push(c);
    }
    let mut alpha = Vec::with_capacity(n_max);
    let mut beta = Vec::with_capacity(n_max);
    alpha.push(x[0]);
    for n in 0..n_max {
        if n > 0 {
            alpha.push(alpha[n - 1] + 1.0 + x[n]);
        }
        beta.push(alpha[n] + eps[n]);
    }
    let f_terms = (0..n_max).map(|n| Term::Triangle { lo: alpha[n], hi: beta[n], area: 1.0 }).collect();
    Ok(TrapConstruction {
        model_id: table.model_id.clone(),
        n_max,
        safety,
        certified_visit_bound: certificate.iter().sum(),
        x,
        eps,
        alpha,
        beta,
        target,
        certificate,
        per_bound_alpha: alpha_each,
        f_terms,
        tail_bound: trap_tail_bound(n_max),
        caveats: vec![
            format!("levels between and beyond the tabulated ones ({:?}) are assumed stationary", table.levels),
            "certificates hold for the simulated process; creeping from the small-jump drift is excluded \
             from the strip (0, eps_n)"
                .into(),
        ],
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assertion {
    pub name: String,
    pub holds: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub model_id: String,
    pub n_max: usize,
    pub paths: usize,
    pub horizon: f64,
    pub seed: u64,
    pub visit: TransienceReport,
    pub visit_bound: f64,
    pub diagnosis: Verdict,
    pub restricted_potential: CriterionReport,
    pub dk: CriterionReport,
    pub assertions: Vec<Assertion>,
    pub all_hold: bool,
}

/// Checks the four claims of the trap counterexample on simulated paths.
pub fn verify_counterexample(
    model: &LevyModel,
    trap: &TrapConstruction,
    paths: usize,
    horizon: f64,
    seed: u64,
) -> Result<VerificationReport> {
    if trap.model_id != model.id() {
        return Err(invalid_arg(format!("trap was built for {}, not {}", trap.model_id, model.id())));
    }
    let f = trap.f();
    let e = trap.complement();
    let n_max = trap.n_max;
    let visit = transience_probe(model, &e, 0.0, paths, horizon, seed, None)?;
    let visit_bound: f64 = (1..=n_max).map(|n| 2.0 / (n * n) as f64).sum();
    let visit_ok = visit.visit_fraction <= visit_bound + 3.0 * proportion_se(visit.visit_fraction, paths);
    let ladder: Vec<f64> = [0.125, 0.25, 0.5, 1.0].iter().map(|s| s * horizon).collect();
    let diagnosis = finiteness_diagnosis(&f, model, 0.0, &ladder, paths, seed, None)?;
    let top = trap.beta[n_max - 1] + 1.0;
    let pm_paths = (paths / 10).max(100);
    let grid = uniform_grid(0.0, top, 512);
    let pm = estimate_potential(model, &grid, pm_paths, horizon, None, seed)?;
    let restricted_potential = potential_integral(&f, &pm, &e, 0.0)?;
    let dk = dk_test(&f, 1.0)?;
    let assertions = vec![
        Assertion {
            name: "trap_visit_fraction".into(),
            holds: visit_ok,
            detail: format!(
                "visit fraction {} (se {}) vs bound {visit_bound}; certified per-depth sum {}",
                visit.visit_fraction,
                proportion_se(visit.visit_fraction, paths),
                trap.certified_visit_bound
            ),
        },
        Assertion {
            name: "diagnosis_finite".into(),
            holds: diagnosis.outcome == Outcome::Finite,
            detail: format!("plateau classifier: {}", diagnosis.outcome),
        },
        Assertion {
            name: "restricted_potential_zero".into(),
            holds: restricted_potential.value == 0.0,
            detail: format!("∫_E f dU = {}", restricted_potential.value),
        },
        Assertion {
            name: "dk_infinite".into(),
            holds: dk.verdict == Outcome::Infinite,
            detail: format!("Lebesgue test: {}", dk.verdict),
        },
    ];
    let all_hold = assertions.iter().all(|a| a.holds);
    Ok(VerificationReport {
        model_id: model.id(),
        n_max,
        paths,
        horizon,
        seed,
        visit,
        visit_bound,
        diagnosis,
        restricted_potential,
        dk,
        assertions,
        all_hold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levy::{build_model, ModelSpec};

    fn stable() -> LevyModel {
        build_model(ModelSpec::truncated_stable(1.0, 0.5, 1.0)).unwrap()
    }

    #[test]
    fn lattice_report_disagrees() {
        let m = build_model(ModelSpec::lattice_cpp(2.0, 1.0)).unwrap();
        let r = lattice_counterexample(1.0, &m, &Budget::new(200, 20.0, 1)).unwrap();
        assert_eq!(r.max_f_on_lattice, 0.0);
        assert!((r.period_integral - 1.0).abs() < 1e-14);
        assert_eq!(r.dk.verdict, Outcome::Infinite);
        assert!(r.all_paths_negligible && r.disagreement);
        assert!(lattice_counterexample(1.0, &stable(), &Budget::new(10, 1.0, 1)).is_err());
    }

    #[test]
    fn overshoot_table_basics() {
        let t = estimate_overshoot_cdf(&stable(), &[1.0, 5.0, 10.0], 2000, 3, false).unwrap();
        assert!(t.max_overshoot.iter().all(|&m| m <= 1.0));
        for l in 0..3 {
            assert!((0..t.eps_grid.len() - 1).all(|k| t.cdf(l, k) <= t.cdf(l, k + 1)));
            assert_eq!(t.cdf(l, t.eps_grid.len() - 1), 1.0);
        }
        assert!((t.creep_reference - 0.01).abs() < 1e-12);
        let lattice = build_model(ModelSpec::lattice_cpp(2.0, 1.0)).unwrap();
        assert!(estimate_overshoot_cdf(&lattice, &[1.0, 2.0], 10, 1, false).is_err());
        assert!(estimate_overshoot_cdf(&lattice, &[0.5, 1.5], 10, 1, true).is_ok());
    }

    #[test]
    fn trap_recursion_and_tail() {
        let t = estimate_overshoot_cdf(&stable(), &[2.0, 5.0, 10.0], 20_000, 7, false).unwrap();
        let trap = build_transient_trap(&t, 8, 2.0).unwrap();
        for n in 0..8 {
            assert_eq!(trap.beta[n], trap.alpha[n] + trap.eps[n]);
            if n > 0 {
                assert_eq!(trap.alpha[n], trap.alpha[n - 1] + 1.0 + trap.x[n]);
                assert!(trap.eps[n] < trap.eps[n - 1]);
                assert!(trap.x[n] >= trap.x[n - 1]);
                assert!(trap.alpha[n] > trap.beta[n - 1]);
            }
            assert!(trap.certificate[n] <= trap.target[n]);
        }
        let f = trap.f();
        for m in 1..=8 {
            assert!((f.integral(0.0, trap.beta[m - 1]) - m as f64).abs() < 1e-9);
        }
        assert!(trap.certified_visit_bound < std::f64::consts::PI.powi(2) / 6.0);
        assert!((trap_tail_bound(0) - std::f64::consts::PI.powi(2) / 3.0).abs() < 1e-15);
        // too few paths cannot certify deep levels
        assert!(matches!(build_transient_trap(&t, 200, 2.0), Err(Error::NotCertifiable(_))));
    }
}
