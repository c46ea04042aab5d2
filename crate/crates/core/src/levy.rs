//! Lévy process models, path simulation and first passage.
//!
//! Three families are supported: drifted Brownian motion (optionally with a
//! compound Poisson part), compound Poisson processes (possibly on a lattice)
//! and stable-like subordinators whose Lévy measure `c x^{-1-ρ} dx` is
//! restricted to `(0, r]`.

use rand::Rng;
use rand_distr::{Distribution, Exp, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SeedTree;

/// Default small-jump cutoff for truncated stable subordinators, relative to `r`.
pub const DEFAULT_SMALL_JUMP_RATIO: f64 = 1e-4;

/// Tolerance for `hit_exactly` on exact (piecewise linear) paths.
pub const EXACT_HIT_TOL: f64 = 1e-12;

/// Grid paths report a hit when the overshoot is below `GRID_HIT_FACTOR * sqrt(h)`.
pub const GRID_HIT_FACTOR: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum JumpLaw {
    /// Discrete jump law: `(value, probability)` pairs.
    Atoms { atoms: Vec<(f64, f64)> },
    Uniform { lo: f64, hi: f64 },
    Exponential { mean: f64 },
}

impl JumpLaw {
    fn validate(&self) -> Result<()> {
        match self {
            JumpLaw::Atoms { atoms } => {
                if atoms.is_empty() {
                    return Err(Error::InvalidModel("jump law has no atoms".into()));
                }
                let mut total = 0.0;
                for &(v, p) in atoms {
                    if !v.is_finite() || !(p > 0.0) || !p.is_finite() {
                        return Err(Error::InvalidModel(format!("bad atom ({v}, {p})")));
                    }
                    total += p;
                }
                if (total - 1.0).abs() > 1e-9 {
                    return Err(Error::InvalidModel(format!(
                        "atom probabilities sum to {total}, expected 1"
                    )));
                }
                Ok(())
            }
            JumpLaw::Uniform { lo, hi } => {
                if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                    return Err(Error::InvalidModel(format!("bad uniform law [{lo}, {hi}]")));
                }
                Ok(())
            }
            JumpLaw::Exponential { mean } => {
                if !(mean.is_finite() && *mean > 0.0) {
                    return Err(Error::InvalidModel(format!("bad exponential mean {mean}")));
                }
                Ok(())
            }
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            JumpLaw::Atoms { atoms } => atoms.iter().map(|(v, p)| v * p).sum(),
            JumpLaw::Uniform { lo, hi } => 0.5 * (lo + hi),
            JumpLaw::Exponential { mean } => *mean,
        }
    }

    fn is_nonnegative(&self) -> bool {
        match self {
            JumpLaw::Atoms { atoms } => atoms.iter().all(|&(v, _)| v >= 0.0),
            JumpLaw::Uniform { lo, .. } => *lo >= 0.0,
            JumpLaw::Exponential { .. } => true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum JumpSpec {
    #[default]
    None,
    CompoundPoisson { rate: f64, law: JumpLaw },
    /// Lévy measure `activity * x^{-1-index} dx` on `(0, cutoff]`.
    TruncatedStableSubordinator {
        activity: f64,
        index: f64,
        cutoff: f64,
        /// Jumps below this size are replaced by their mean drift.
        /// Defaults to `1e-4 * cutoff`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        small_jump_cutoff: Option<f64>,
    },
}

/// Unvalidated model description, as read from configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub drift: f64,
    #[serde(default)]
    pub gaussian_var: f64,
    #[serde(default)]
    pub jumps: JumpSpec,
    #[serde(default)]
    pub lattice_span: Option<f64>,
}

impl ModelSpec {
    pub fn pure_drift(drift: f64) -> Self {
        Self { name: None, drift, gaussian_var: 0.0, jumps: JumpSpec::None, lattice_span: None }
    }

    pub fn drifted_bm(drift: f64, gaussian_var: f64) -> Self {
        Self { name: None, drift, gaussian_var, jumps: JumpSpec::None, lattice_span: None }
    }

    /// Compound Poisson process with a single atom `span`, living on `span * N`.
    pub fn lattice_cpp(rate: f64, span: f64) -> Self {
        Self {
            name: None,
            drift: 0.0,
            gaussian_var: 0.0,
            jumps: JumpSpec::CompoundPoisson {
                rate,
                law: JumpLaw::Atoms { atoms: vec![(span, 1.0)] },
            },
            lattice_span: Some(span),
        }
    }

    pub fn truncated_stable(activity: f64, index: f64, cutoff: f64) -> Self {
        Self {
            name: None,
            drift: 0.0,
            gaussian_var: 0.0,
            jumps: JumpSpec::TruncatedStableSubordinator {
                activity,
                index,
                cutoff,
                small_jump_cutoff: None,
            },
            lattice_span: None,
        }
    }

    pub fn named(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }
}

/// Jump mechanism after validation, with the quantities the simulator needs.
#[derive(Debug, Clone, PartialEq)]
enum Jumps {
    None,
    Compound { rate: f64, law: SampledLaw },
    Stable(StableTail),
}

#[derive(Debug, Clone, PartialEq)]
enum SampledLaw {
    Atoms { values: Vec<f64>, cumulative: Vec<f64> },
    Uniform { lo: f64, hi: f64 },
    Exponential { mean: f64 },
}

impl SampledLaw {
    fn new(law: &JumpLaw) -> Self {
        match law {
            JumpLaw::Atoms { atoms } => {
                let mut acc = 0.0;
                let mut cumulative = Vec::with_capacity(atoms.len());
                for &(_, p) in atoms {
                    acc += p;
                    cumulative.push(acc);
                }
                if let Some(last) = cumulative.last_mut() {
                    *last = f64::INFINITY;
                }
                SampledLaw::Atoms { values: atoms.iter().map(|a| a.0).collect(), cumulative }
            }
            JumpLaw::Uniform { lo, hi } => SampledLaw::Uniform { lo: *lo, hi: *hi },
            JumpLaw::Exponential { mean } => SampledLaw::Exponential { mean: *mean },
        }
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            SampledLaw::Atoms { values, cumulative } => {
                if values.len() == 1 {
                    return values[0];
                }
                let u: f64 = rng.random();
                let i = cumulative.partition_point(|&c| c <= u);
                values[i.min(values.len() - 1)]
            }
            SampledLaw::Uniform { lo, hi } => lo + (hi - lo) * rng.random::<f64>(),
            SampledLaw::Exponential { mean } => {
                let e: f64 = rng.sample(rand_distr::Exp1);
                mean * e
            }
        }
    }
}

/// Large-jump part of a truncated stable subordinator, sampled by inverting
/// the tail of the Lévy measure on `[eps, r]`.
#[derive(Debug, Clone, PartialEq)]
struct StableTail {
    activity: f64,
    index: f64,
    cutoff: f64,
    eps: f64,
    /// Total mass of the Lévy measure on `[eps, r]`.
    rate: f64,
    /// Drift replacing the jumps below `eps`.
    small_drift: f64,
    eps_pow: f64,
    r_pow: f64,
}

impl StableTail {
    fn new(activity: f64, index: f64, cutoff: f64, eps: f64) -> Self {
        let eps_pow = eps.powf(-index);
        let r_pow = cutoff.powf(-index);
        Self {
            activity,
            index,
            cutoff,
            eps,
            rate: activity / index * (eps_pow - r_pow),
            small_drift: activity * eps.powf(1.0 - index) / (1.0 - index),
            eps_pow,
            r_pow,
        }
    }

    #[inline]
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        let y = (self.eps_pow - u * (self.eps_pow - self.r_pow)).powf(-1.0 / self.index);
        y.clamp(self.eps, self.cutoff)
    }

    fn mean(&self) -> f64 {
        self.activity * self.cutoff.powf(1.0 - self.index) / (1.0 - self.index)
    }
}

/// A validated Lévy process that drifts to +infinity.
#[derive(Debug, Clone, PartialEq)]
pub struct LevyModel {
    spec: ModelSpec,
    jumps: Jumps,
    mean: f64,
}

impl LevyModel {
    /// Validates a description and certifies drift to +infinity.
    pub fn build(spec: ModelSpec) -> Result<Self> {
        let ModelSpec { drift, gaussian_var, .. } = spec;
        if !drift.is_finite() {
            return Err(Error::InvalidModel(format!("drift {drift} is not finite")));
        }
        if !(gaussian_var >= 0.0 && gaussian_var.is_finite()) {
            return Err(Error::InvalidModel(format!("gaussian_var {gaussian_var} must be >= 0")));
        }
        let jumps = match &spec.jumps {
            JumpSpec::None => Jumps::None,
            JumpSpec::CompoundPoisson { rate, law } => {
                if !(*rate > 0.0 && rate.is_finite()) {
                    return Err(Error::InvalidModel(format!("jump rate {rate} must be > 0")));
                }
                law.validate()?;
                Jumps::Compound { rate: *rate, law: SampledLaw::new(law) }
            }
            JumpSpec::TruncatedStableSubordinator { activity, index, cutoff, small_jump_cutoff } => {
                if !(*activity > 0.0 && activity.is_finite()) {
                    return Err(Error::InvalidModel(format!("activity {activity} must be > 0")));
                }
                if !(*index > 0.0 && *index < 1.0) {
                    return Err(Error::InvalidModel(format!("stable index {index} not in (0,1)")));
                }
                if !(*cutoff > 0.0 && *cutoff <= 1.0) {
                    return Err(Error::InvalidModel(format!("cutoff {cutoff} not in (0,1]")));
                }
                let eps = small_jump_cutoff.unwrap_or(DEFAULT_SMALL_JUMP_RATIO * cutoff);
                if !(eps > 0.0 && eps < *cutoff) {
                    return Err(Error::InvalidModel(format!(
                        "small-jump cutoff {eps} not in (0, {cutoff})"
                    )));
                }
                Jumps::Stable(StableTail::new(*activity, *index, *cutoff, eps))
            }
        };
        if let Some(span) = spec.lattice_span {
            if !(span > 0.0 && span.is_finite()) {
                return Err(Error::InvalidModel(format!("lattice span {span} must be > 0")));
            }
            if gaussian_var != 0.0 || drift != 0.0 {
                return Err(Error::InvalidModel(
                    "lattice model must have zero drift and zero gaussian part".into(),
                ));
            }
            match &spec.jumps {
                JumpSpec::CompoundPoisson { law: JumpLaw::Atoms { atoms }, .. } => {
                    for &(v, _) in atoms {
                        let k = v / span;
                        if (k - k.round()).abs() > 1e-12 * k.abs().max(1.0) {
                            return Err(Error::InvalidModel(format!(
                                "atom {v} is not a multiple of lattice span {span}"
                            )));
                        }
                    }
                }
                _ => {
                    return Err(Error::InvalidModel(
                        "lattice model needs compound Poisson jumps with atoms".into(),
                    ))
                }
            }
        }

        let jump_mean = match &jumps {
            Jumps::None => 0.0,
            Jumps::Compound { rate, .. } => match &spec.jumps {
                JumpSpec::CompoundPoisson { law, .. } => rate * law.mean(),
                _ => unreachable!(),
            },
            Jumps::Stable(tail) => tail.mean(),
        };
        let mean = drift + jump_mean;
        let model = Self { spec, jumps, mean };
        if model.is_trivial() {
            return Err(Error::NotTransient("the zero process does not drift to +infinity".into()));
        }
        if !(mean > 0.0) {
            return Err(Error::NotTransient(format!(
                "E[xi_1] = {mean} <= 0: the process does not drift to +infinity"
            )));
        }
        Ok(model)
    }

    fn is_trivial(&self) -> bool {
        self.spec.drift == 0.0 && self.spec.gaussian_var == 0.0 && matches!(self.jumps, Jumps::None)
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    /// Identifier used in report metadata.
    pub fn id(&self) -> String {
        if let Some(name) = &self.spec.name {
            return name.clone();
        }
        let jumps = match &self.spec.jumps {
            JumpSpec::None => "none".to_string(),
            JumpSpec::CompoundPoisson { rate, .. } => format!("cpp(rate={rate})"),
            JumpSpec::TruncatedStableSubordinator { activity, index, cutoff, .. } => {
                format!("tss(c={activity},rho={index},r={cutoff})")
            }
        };
        format!("drift={},var={},jumps={}", self.spec.drift, self.spec.gaussian_var, jumps)
    }

    /// `E[xi_1]`; `+inf` when the jump law has infinite mean.
    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn drift(&self) -> f64 {
        self.spec.drift
    }

    pub fn gaussian_var(&self) -> f64 {
        self.spec.gaussian_var
    }

    pub fn lattice_span(&self) -> Option<f64> {
        self.spec.lattice_span
    }

    /// Nondecreasing paths: no Gaussian part, nonnegative drift and jumps.
    pub fn is_subordinator(&self) -> bool {
        if self.spec.gaussian_var != 0.0 || self.spec.drift < 0.0 {
            return false;
        }
        match &self.spec.jumps {
            JumpSpec::None => true,
            JumpSpec::CompoundPoisson { law, .. } => law.is_nonnegative(),
            JumpSpec::TruncatedStableSubordinator { .. } => true,
        }
    }

    /// Pure drift, drifted Brownian motion, or compound Poisson process with no
    /// continuous part.
    pub fn is_compound_poisson(&self) -> bool {
        matches!(self.jumps, Jumps::Compound { .. })
            && self.spec.drift == 0.0
            && self.spec.gaussian_var == 0.0
    }

    /// Paths are piecewise linear between exactly sampled jumps (no Gaussian part).
    pub fn has_exact_paths(&self) -> bool {
        self.spec.gaussian_var == 0.0
    }

    /// Whether simulation needs a time step.
    pub fn needs_step(&self) -> bool {
        self.spec.gaussian_var > 0.0
    }

    /// Slope between jumps for exact paths: drift plus small-jump compensation.
    pub fn linear_drift(&self) -> f64 {
        match &self.jumps {
            Jumps::Stable(tail) => self.spec.drift + tail.small_drift,
            _ => self.spec.drift,
        }
    }

    /// Rate of the simulated (retained) jumps.
    pub fn simulated_jump_rate(&self) -> f64 {
        match &self.jumps {
            Jumps::None => 0.0,
            Jumps::Compound { rate, .. } => *rate,
            Jumps::Stable(tail) => tail.rate,
        }
    }

    /// Largest possible jump, if bounded.
    pub fn max_jump(&self) -> Option<f64> {
        match &self.spec.jumps {
            JumpSpec::None => Some(0.0),
            JumpSpec::CompoundPoisson { law, .. } => match law {
                JumpLaw::Atoms { atoms } => {
                    Some(atoms.iter().map(|a| a.0.abs()).fold(0.0, f64::max))
                }
                JumpLaw::Uniform { lo, hi } => Some(lo.abs().max(hi.abs())),
                JumpLaw::Exponential { .. } => None,
            },
            JumpSpec::TruncatedStableSubordinator { cutoff, .. } => Some(*cutoff),
        }
    }

    #[inline]
    fn sample_jump<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match &self.jumps {
            Jumps::None => 0.0,
            Jumps::Compound { law, .. } => law.sample(rng),
            Jumps::Stable(tail) => tail.sample(rng),
        }
    }

    /// Increment `xi_{t+dt} - xi_t` (used for marginal checks).
    pub fn sample_increment<R: Rng + ?Sized>(&self, dt: f64, rng: &mut R) -> f64 {
        let mut x = self.linear_drift() * dt;
        if self.spec.gaussian_var > 0.0 {
            let z: f64 = rng.sample(StandardNormal);
            x += (self.spec.gaussian_var * dt).sqrt() * z;
        }
        let rate = self.simulated_jump_rate();
        if rate > 0.0 {
            let clock = Exp::new(rate).expect("positive rate");
            let mut t = clock.sample(rng);
            while t <= dt {
                x += self.sample_jump(rng);
                t += clock.sample(rng);
            }
        }
        x
    }
}

/// Validating constructor.
pub fn build_model(spec: ModelSpec) -> Result<LevyModel> {
    LevyModel::build(spec)
}

/// `E[xi_1]` of a validated model.
pub fn mean_of(model: &LevyModel) -> f64 {
    model.mean()
}

/// One simulated trajectory.
///
/// Exact paths are piecewise linear: on `[times[k], times[k+1])` the value is
/// `values[k] + slope * (s - times[k])`, and jumps happen only at listed
/// times. For pure compound Poisson models `slope == 0`. Grid paths list the
/// skeleton of a diffusion at the step `h`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSample {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub exact: bool,
    pub slope: f64,
    pub horizon: f64,
    /// Set when simulation of a subordinator was cut once the path exceeded
    /// this level; the path stays above it on `[end_time, horizon]`.
    pub stopped_above: Option<f64>,
    pub hit_tol: f64,
}

impl PathSample {
    pub fn end_time(&self) -> f64 {
        *self.times.last().expect("nonempty path")
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_value(&self) -> f64 {
        *self.values.last().expect("nonempty path")
    }

    /// Linear pieces `(t0, t1, v0, v1)` where `v1` is the left limit at `t1`.
    pub fn pieces(&self) -> impl Iterator<Item = (f64, f64, f64, f64)> + '_ {
        let exact = self.exact;
        let slope = self.slope;
        self.times.windows(2).zip(self.values.windows(2)).map(move |(t, v)| {
            let end = if exact { v[0] + slope * (t[1] - t[0]) } else { v[1] };
            (t[0], t[1], v[0], end)
        })
    }

    /// Value at time `t` (right-continuous for exact paths, linear interpolation on grids).
    pub fn value_at(&self, t: f64) -> f64 {
        let k = self.times.partition_point(|&s| s <= t).saturating_sub(1);
        if k + 1 >= self.times.len() {
            return self.final_value();
        }
        if self.exact {
            self.values[k] + self.slope * (t - self.times[k])
        } else {
            let (t0, t1) = (self.times[k], self.times[k + 1]);
            let w = (t - t0) / (t1 - t0);
            self.values[k] + w * (self.values[k + 1] - self.values[k])
        }
    }

    /// Supremum of the path over `[0, end_time]`.
    pub fn running_max(&self) -> f64 {
        self.pieces()
            .map(|(_, _, a, b)| a.max(b))
            .chain(std::iter::once(self.final_value()))
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SimOptions {
    /// Time step; required when the model has a Gaussian part.
    pub step: Option<f64>,
    /// Stop a subordinator path once it exceeds this level.
    pub stop_above: Option<f64>,
}

impl SimOptions {
    pub fn with_step(step: f64) -> Self {
        Self { step: Some(step), stop_above: None }
    }
}

/// Simulate one path on `[0, horizon]` from the given generator.
pub fn simulate_with<R: Rng + ?Sized>(
    model: &LevyModel,
    horizon: f64,
    opts: &SimOptions,
    rng: &mut R,
) -> Result<PathSample> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::InvalidArgument(format!("horizon {horizon} must be > 0")));
    }
    if let Some(h) = opts.step {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidArgument(format!("step {h} must be > 0")));
        }
    }
    let stop = if model.is_subordinator() { opts.stop_above } else { None };
    if model.needs_step() {
        let h = opts
            .step
            .ok_or_else(|| Error::InvalidArgument("a time step is required for diffusions".into()))?;
        Ok(simulate_grid(model, horizon, h, rng))
    } else {
        Ok(simulate_exact(model, horizon, stop, rng))
    }
}

/// Simulate one path with generator derived from `seed`.
pub fn simulate_path(model: &LevyModel, horizon: f64, step: Option<f64>, seed: u64) -> Result<PathSample> {
    let mut rng = SeedTree::new(seed).path(0);
    simulate_with(model, horizon, &SimOptions { step, stop_above: None }, &mut rng)
}

fn simulate_exact<R: Rng + ?Sized>(
    model: &LevyModel,
    horizon: f64,
    stop: Option<f64>,
    rng: &mut R,
) -> PathSample {
    let slope = model.linear_drift();
    let rate = model.simulated_jump_rate();
    let mut times = vec![0.0];
    let mut values = vec![0.0];
    let mut stopped_above = None;
    if rate > 0.0 {
        let clock = Exp::new(rate).expect("positive rate");
        let mut t = 0.0;
        let mut x = 0.0;
        loop {
            let dt = clock.sample(rng);
            if t + dt >= horizon {
                break;
            }
            t += dt;
            x += slope * dt + model.sample_jump(rng);
            times.push(t);
            values.push(x);
            if let Some(level) = stop {
                if x > level {
                    stopped_above = Some(level);
                    break;
                }
            }
        }
        if stopped_above.is_none() {
            let last_t = *times.last().unwrap();
            let last_x = *values.last().unwrap();
            times.push(horizon);
            values.push(last_x + slope * (horizon - last_t));
        }
    } else {
        times.push(horizon);
        values.push(slope * horizon);
    }
    PathSample {
        times,
        values,
        exact: true,
        slope,
        horizon,
        stopped_above,
        hit_tol: EXACT_HIT_TOL,
    }
}

fn simulate_grid<R: Rng + ?Sized>(model: &LevyModel, horizon: f64, h: f64, rng: &mut R) -> PathSample {
    let n_full = (horizon / h).floor() as usize;
    let mut times = Vec::with_capacity(n_full + 2);
    let mut values = Vec::with_capacity(n_full + 2);
    times.push(0.0);
    values.push(0.0);
    let slope = model.linear_drift();
    let sd = model.gaussian_var().sqrt();
    let rate = model.simulated_jump_rate();
    let clock = (rate > 0.0).then(|| Exp::new(rate).expect("positive rate"));
    let mut next_jump = clock.as_ref().map_or(f64::INFINITY, |c| c.sample(rng));
    let mut x = 0.0;
    let mut k = 0usize;
    loop {
        let t0 = k as f64 * h;
        let t1 = if k + 1 > n_full { horizon } else { (k + 1) as f64 * h };
        if t1 <= t0 {
            break;
        }
        let dt = t1 - t0;
        let z: f64 = rng.sample(StandardNormal);
        x += slope * dt + sd * dt.sqrt() * z;
        while next_jump <= t1 {
            x += model.sample_jump(rng);
            next_jump += clock.as_ref().map_or(f64::INFINITY, |c| c.sample(rng));
        }
        times.push(t1);
        values.push(x);
        k += 1;
        if t1 >= horizon {
            break;
        }
    }
    PathSample {
        times,
        values,
        exact: false,
        slope: 0.0,
        horizon,
        stopped_above: None,
        hit_tol: GRID_HIT_FACTOR * h.sqrt(),
    }
}

/// First passage above a level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PassageRecord {
    pub level: f64,
    /// `T^x`; `+inf` when the level was not reached before the horizon.
    #[serde(with = "crate::json::ext_f64")]
    pub passage_time: f64,
    /// `xi_{T^x} - x`; `None` when censored.
    pub overshoot: Option<f64>,
    pub hit_exactly: bool,
}

impl PassageRecord {
    pub fn censored(&self) -> bool {
        self.passage_time.is_infinite()
    }
}

/// Overshoots `xi_{T^x} - x` at increasing `levels` for a subordinator with
/// exact paths, without storing the path. A level crossed by the linear
/// drift between jumps (creeping) has overshoot 0.
pub fn subordinator_overshoots<R: Rng + ?Sized>(model: &LevyModel, levels: &[f64], rng: &mut R) -> Result<Vec<f64>> {
    if !model.is_subordinator() || model.needs_step() {
        return Err(Error::InvalidModel(format!("{} is not a subordinator with exact paths", model.id())));
    }
    debug_assert!(levels.windows(2).all(|w| w[0] <= w[1]));
    let slope = model.linear_drift();
    let rate = model.simulated_jump_rate();
    let mut out = Vec::with_capacity(levels.len());
    let mut li = 0;
    let mut x = 0.0;
    while li < levels.len() && levels[li] <= 0.0 {
        out.push(-levels[li]);
        li += 1;
    }
    if li == levels.len() {
        return Ok(out);
    }
    if rate == 0.0 {
        out.extend(levels[li..].iter().map(|_| 0.0));
        return Ok(out);
    }
    let clock = Exp::new(rate).expect("positive rate");
    while li < levels.len() {
        let dt: f64 = clock.sample(rng);
        let before = x + slope * dt;
        while li < levels.len() && before >= levels[li] {
            out.push(0.0);
            li += 1;
        }
        x += slope * dt + model.sample_jump(rng);
        while li < levels.len() && x >= levels[li] {
            out.push(x - levels[li]);
            li += 1;
        }
    }
    Ok(out)
}

/// `T^x = inf{s : xi_s >= x}` along a simulated path.
pub fn first_passage(path: &PathSample, level: f64) -> PassageRecord {
    first_passages(path, &[level])[0]
}

/// Passage records for increasing levels in a single sweep of the path.
pub fn first_passages(path: &PathSample, levels: &[f64]) -> Vec<PassageRecord> {
    debug_assert!(levels.windows(2).all(|w| w[0] <= w[1]));
    let mut out = Vec::with_capacity(levels.len());
    let mut li = 0;
    let record = |level: f64, t: f64, value: f64| PassageRecord {
        level,
        passage_time: t,
        overshoot: Some((value - level).max(0.0)),
        hit_exactly: (value - level).abs() <= path.hit_tol,
    };
    let n = path.len();
    for k in 0..n {
        let (t, v) = (path.times[k], path.values[k]);
        while li < levels.len() && v >= levels[li] {
            out.push(record(levels[li], t, v));
            li += 1;
        }
        if li == levels.len() || k + 1 == n {
            break;
        }
        if path.exact && path.slope > 0.0 {
            let end = v + path.slope * (path.times[k + 1] - t);
            while li < levels.len() && end >= levels[li] {
                let tc = t + (levels[li] - v) / path.slope;
                out.push(record(levels[li], tc, levels[li]));
                li += 1;
            }
        }
    }
    while li < levels.len() {
        out.push(PassageRecord {
            level: levels[li],
            passage_time: f64::INFINITY,
            overshoot: None,
            hit_exactly: false,
        });
        li += 1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lattice() -> LevyModel {
        LevyModel::build(ModelSpec::lattice_cpp(2.0, 1.0)).unwrap()
    }

    #[test]
    fn pure_drift_model_has_mean_one() {
        let m = build_model(ModelSpec::pure_drift(1.0)).unwrap();
        assert_eq!(mean_of(&m), 1.0);
        let m3 = build_model(ModelSpec::pure_drift(3.0)).unwrap();
        assert_eq!(mean_of(&m3), 3.0);
    }

    #[test]
    fn lattice_model_mean_is_rate_times_atom() {
        let m = lattice();
        assert_eq!(m.mean(), 2.0);
        assert!(m.is_subordinator());
        assert!(m.is_compound_poisson());
    }

    #[test]
    fn truncated_stable_mean() {
        let m = build_model(ModelSpec::truncated_stable(1.0, 0.5, 1.0)).unwrap();
        assert!((m.mean() - 2.0).abs() < 1e-12);
        // retained jumps + small-jump drift reproduce the mean
        let tail_rate = m.simulated_jump_rate();
        assert!((tail_rate - 2.0 * (100.0 - 1.0)).abs() < 1e-9);
        assert!((m.linear_drift() - 0.02).abs() < 1e-12);
    }

    #[test]
    fn rejects_negative_drift_bm() {
        let err = build_model(ModelSpec::drifted_bm(-1.0, 1.0)).unwrap_err();
        assert!(matches!(err, Error::NotTransient(_)));
        assert!(build_model(ModelSpec::drifted_bm(0.0, 1.0)).is_err());
        assert!(build_model(ModelSpec::pure_drift(0.0)).is_err());
    }

    #[test]
    fn rejects_malformed_jump_laws() {
        let mut spec = ModelSpec::lattice_cpp(2.0, 1.0);
        spec.jumps = JumpSpec::CompoundPoisson {
            rate: 2.0,
            law: JumpLaw::Atoms { atoms: vec![(1.0, 0.3)] },
        };
        assert!(matches!(build_model(spec).unwrap_err(), Error::InvalidModel(_)));
        let spec = ModelSpec {
            jumps: JumpSpec::CompoundPoisson { rate: -1.0, law: JumpLaw::Exponential { mean: 1.0 } },
            ..ModelSpec::pure_drift(0.0)
        };
        assert!(matches!(build_model(spec).unwrap_err(), Error::InvalidModel(_)));
        let mut bad_lattice = ModelSpec::lattice_cpp(2.0, 1.0);
        bad_lattice.lattice_span = Some(0.3);
        assert!(build_model(bad_lattice).is_err());
        assert!(build_model(ModelSpec::truncated_stable(1.0, 1.2, 1.0)).is_err());
        assert!(build_model(ModelSpec::truncated_stable(1.0, 0.5, 2.0)).is_err());
    }

    #[test]
    fn pure_drift_path_ends_at_horizon() {
        let m = build_model(ModelSpec::pure_drift(1.0)).unwrap();
        let p = simulate_path(&m, 5.0, None, 1).unwrap();
        assert_eq!(p.final_value(), 5.0);
        assert_eq!(p.end_time(), 5.0);
        let rec = first_passage(&p, 2.0);
        assert_eq!(rec.passage_time, 2.0);
        assert_eq!(rec.overshoot, Some(0.0));
        assert!(rec.hit_exactly);
    }

    #[test]
    fn rejects_bad_horizon_and_step() {
        let m = lattice();
        assert!(simulate_path(&m, 0.0, None, 1).is_err());
        let bm = build_model(ModelSpec::drifted_bm(1.0, 1.0)).unwrap();
        assert!(simulate_path(&bm, 1.0, None, 1).is_err());
        assert!(simulate_path(&bm, 1.0, Some(-0.1), 1).is_err());
    }

    #[test]
    fn lattice_values_are_integers_and_overshoot_is_ceiling_gap() {
        let m = lattice();
        for seed in 0..20 {
            let p = simulate_path(&m, 10.0, None, seed).unwrap();
            assert!(p.values.iter().all(|v| v.fract() == 0.0));
            assert!(p.times.windows(2).all(|w| w[0] < w[1]));
            for &x in &[0.5, 2.25, 3.75] {
                let rec = first_passage(&p, x);
                if let Some(o) = rec.overshoot {
                    assert_eq!(o, x.ceil() - x);
                }
            }
        }
    }

    #[test]
    fn subordinator_paths_are_nondecreasing() {
        let m = build_model(ModelSpec::truncated_stable(1.0, 0.5, 1.0)).unwrap();
        let p = simulate_path(&m, 5.0, None, 3).unwrap();
        for (_, _, a, b) in p.pieces() {
            assert!(b >= a);
        }
        assert!(p.values.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn simulation_is_bit_reproducible() {
        let m = build_model(ModelSpec::drifted_bm(1.0, 1.0)).unwrap();
        let a = simulate_path(&m, 3.0, Some(0.01), 9).unwrap();
        let b = simulate_path(&m, 3.0, Some(0.01), 9).unwrap();
        assert_eq!(a, b);
        assert_eq!(*a.times.last().unwrap(), 3.0);
    }

    #[test]
    fn stop_above_truncates_subordinators_only() {
        let m = lattice();
        let mut rng = SeedTree::new(5).path(0);
        let opts = SimOptions { step: None, stop_above: Some(10.0) };
        let p = simulate_with(&m, 1000.0, &opts, &mut rng).unwrap();
        assert_eq!(p.stopped_above, Some(10.0));
        assert_eq!(p.final_value(), 11.0);
        let bm = build_model(ModelSpec::drifted_bm(1.0, 1.0)).unwrap();
        let opts = SimOptions { step: Some(0.1), stop_above: Some(1.0) };
        let p = simulate_with(&bm, 10.0, &opts, &mut rng).unwrap();
        assert_eq!(p.stopped_above, None);
    }

    #[test]
    fn creeping_passage_on_drifting_piece() {
        let p = PathSample {
            times: vec![0.0, 1.0, 2.0],
            values: vec![0.0, 2.0, 2.5],
            exact: true,
            slope: 0.5,
            horizon: 2.0,
            stopped_above: None,
            hit_tol: EXACT_HIT_TOL,
        };
        let recs = first_passages(&p, &[0.25, 1.0, 2.2, 3.0]);
        assert_eq!(recs[0].passage_time, 0.5);
        assert!(recs[0].hit_exactly);
        assert_eq!(recs[1].passage_time, 1.0);
        assert_eq!(recs[1].overshoot, Some(1.0));
        assert!((recs[2].passage_time - 1.4).abs() < 1e-12);
        assert!(recs[3].censored());
        assert_eq!(p.value_at(1.5), 2.25);
    }

    #[test]
    fn streaming_overshoots_match_stored_paths() {
        let m = build_model(ModelSpec::truncated_stable(1.0, 0.5, 1.0)).unwrap();
        let levels = [0.5, 2.0, 5.0, 10.0];
        for i in 0..20 {
            let mut a = SeedTree::new(5).path(i);
            let mut b = SeedTree::new(5).path(i);
            let fast = subordinator_overshoots(&m, &levels, &mut a).unwrap();
            let path = simulate_with(&m, 1e3, &SimOptions { step: None, stop_above: Some(10.0) }, &mut b).unwrap();
            let slow = first_passages(&path, &levels);
            for (o, r) in fast.iter().zip(&slow) {
                assert!((o - r.overshoot.unwrap()).abs() < 1e-9, "{o} vs {:?}", r.overshoot);
                assert!(*o <= 1.0);
            }
        }
        let bm = build_model(ModelSpec::drifted_bm(1.0, 1.0)).unwrap();
        assert!(subordinator_overshoots(&bm, &levels, &mut SeedTree::new(1).path(0)).is_err());
    }
}
