//! Experiment configuration: one TOML file per experiment.

use std::path::{Path, PathBuf};

use perpetual_core::levy::JumpSpec;
use perpetual_core::{build_model, FunctionSpec, LevyModel, ModelSpec, RegionSpec, TestFunction};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{config_err, DriverError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelConfig {
    PureDrift {
        drift: f64,
    },
    DriftedBm {
        drift: f64,
        var: f64,
    },
    LatticeCpp {
        rate: f64,
        span: f64,
    },
    TruncatedStable {
        activity: f64,
        index: f64,
        cutoff: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        small_jump_cutoff: Option<f64>,
    },
    /// Full model description as accepted by the core crate.
    Spec {
        spec: ModelSpec,
    },
}

impl ModelConfig {
    pub fn spec(&self) -> ModelSpec {
        match *self {
            ModelConfig::PureDrift { drift } => ModelSpec::pure_drift(drift),
            ModelConfig::DriftedBm { drift, var } => ModelSpec::drifted_bm(drift, var),
            ModelConfig::LatticeCpp { rate, span } => ModelSpec::lattice_cpp(rate, span),
            ModelConfig::TruncatedStable { activity, index, cutoff, small_jump_cutoff } => {
                let mut s = ModelSpec::truncated_stable(activity, index, cutoff);
                s.jumps = JumpSpec::TruncatedStableSubordinator { activity, index, cutoff, small_jump_cutoff };
                s
            }
            ModelConfig::Spec { ref spec } => spec.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FunctionConfig {
    Zero,
    Constant { value: f64 },
    ExpDecay,
    /// `(1 + y)^{-power}` on `[0, ∞)`.
    Reciprocal { power: f64 },
    Indicator { lo: f64, hi: f64 },
    LatticeSine { span: f64 },
    /// `[height, lo, hi]` triples.
    Step { id: String, steps: Vec<[f64; 3]> },
    Terms { spec: FunctionSpec },
}

impl FunctionConfig {
    pub fn build(&self) -> perpetual_core::Result<TestFunction> {
        Ok(match self {
            FunctionConfig::Zero => TestFunction::zero(),
            FunctionConfig::Constant { value } => TestFunction::constant(*value),
            FunctionConfig::ExpDecay => TestFunction::exp_decay(),
            FunctionConfig::Reciprocal { power } => TestFunction::reciprocal(*power),
            FunctionConfig::Indicator { lo, hi } => TestFunction::indicator(*lo, *hi),
            FunctionConfig::LatticeSine { span } => TestFunction::lattice_sine(*span)?,
            FunctionConfig::Step { id, steps } => {
                let s: Vec<(f64, f64, f64)> = steps.iter().map(|t| (t[0], t[1], t[2])).collect();
                TestFunction::step(id.clone(), &s)?
            }
            FunctionConfig::Terms { spec } => TestFunction::from_spec(spec)?,
        })
    }
}

/// `n + 1` equally spaced points from `lo` to `hi`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl GridConfig {
    pub fn points(&self) -> Vec<f64> {
        (0..=self.n).map(|i| self.lo + (self.hi - self.lo) * i as f64 / self.n.max(1) as f64).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    /// Paths written out in full.
    #[serde(default = "three")]
    pub dump: usize,
    /// First-passage levels summarized over all paths.
    #[serde(default)]
    pub levels: Vec<f64>,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self { dump: 3, levels: Vec::new() }
    }
}

fn three() -> usize {
    3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialConfig {
    #[serde(default)]
    pub lo: f64,
    pub hi: f64,
    /// Ignored for lattice models, which get one bin per lattice point.
    #[serde(default)]
    pub bins: Option<usize>,
    #[serde(default)]
    pub paths: Option<usize>,
    /// Defaults to the span over the mean times `safety`.
    #[serde(default)]
    pub horizon: Option<f64>,
    #[serde(default)]
    pub safety: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestKind {
    PotentialIntegral,
    Dk,
    EricksonMaller,
    Blackwell,
    KhasminskiiJ,
    Transience,
}

impl TestKind {
    pub fn needs_potential(self) -> bool {
        !matches!(self, TestKind::Dk | TestKind::Transience)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BattyConfig {
    pub a: f64,
    pub t: f64,
    pub n_outer: usize,
    #[serde(default)]
    pub n_inner: Option<usize>,
    #[serde(default)]
    pub probe_window: Option<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KhasminskiiConfig {
    pub theta: f64,
    #[serde(default)]
    pub override_gate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TestConfig {
    pub tests: Vec<TestKind>,
    /// Lower cutoff of the integral tests.
    #[serde(default)]
    pub l: f64,
    /// Starting point.
    #[serde(default)]
    pub x: f64,
    /// `E` for the potential integral and the transience probe; defaults to `(l, ∞)`.
    #[serde(default)]
    pub region: Option<RegionSpec>,
    /// Starting points over which `J` is maximized.
    #[serde(default)]
    pub j_grid: Option<GridConfig>,
    #[serde(default)]
    pub batty: Option<BattyConfig>,
    #[serde(default)]
    pub khasminskii: Option<KhasminskiiConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct DiagnoseConfig {
    #[serde(default)]
    pub x: f64,
    /// Defaults to `T/8, T/4, T/2, T`.
    #[serde(default)]
    pub ladder: Option<Vec<f64>>,
    #[serde(default)]
    pub a_grid: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    pub a: f64,
    pub q: f64,
    pub xs: GridConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CounterexampleConfig {
    LatticeSine {
        alpha: f64,
    },
    TransientTrap {
        levels: Vec<f64>,
        table_paths: usize,
        n_max: usize,
        #[serde(default = "default_safety")]
        safety: f64,
        #[serde(default)]
        allow_atoms: bool,
    },
}

fn default_safety() -> f64 {
    perpetual_core::counterexample::DEFAULT_SAFETY
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_name")]
    pub name: String,
    /// Master seed; mandatory.
    pub seed: u64,
    pub paths: usize,
    pub horizon: f64,
    /// Time step for models with a Gaussian part.
    #[serde(default)]
    pub step: Option<f64>,
    /// Output directory; not part of the digest.
    #[serde(default, skip_serializing)]
    pub out: Option<PathBuf>,
    pub model: ModelConfig,
    #[serde(default)]
    pub functions: Vec<FunctionConfig>,
    #[serde(default)]
    pub simulate: Option<SimulateConfig>,
    #[serde(default)]
    pub potential: Option<PotentialConfig>,
    #[serde(default)]
    pub test: Option<TestConfig>,
    #[serde(default)]
    pub diagnose: Option<DiagnoseConfig>,
    #[serde(default)]
    pub scan: Option<ScanConfig>,
    #[serde(default)]
    pub counterexample: Option<CounterexampleConfig>,
}

fn default_name() -> String {
    "experiment".into()
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub paths: Option<usize>,
    pub horizon: Option<f64>,
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, DriverError> {
        toml::from_str(text).map_err(|e| config_err(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, DriverError> {
        let text = std::fs::read_to_string(path).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(p) = o.paths {
            self.paths = p;
        }
        if let Some(h) = o.horizon {
            self.horizon = h;
        }
        if let Some(out) = &o.out {
            self.out = Some(out.clone());
        }
    }

    /// First 16 hex digits of the SHA-256 of the canonical JSON form.
    pub fn digest(&self) -> String {
        let canon = serde_json::to_string(self).expect("config serializes");
        hex::encode(&Sha256::digest(canon.as_bytes())[..8])
    }

    /// Structural checks that need no model.
    pub fn validate(&self) -> Result<(), DriverError> {
        if self.paths == 0 {
            return Err(config_err("paths must be >= 1"));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(config_err(format!("horizon {} must be positive and finite", self.horizon)));
        }
        if let Some(h) = self.step {
            if !(h > 0.0 && h < self.horizon) {
                return Err(config_err(format!("step {h} must lie in (0, horizon)")));
            }
        }
        let needs_f = self.test.is_some() || self.diagnose.is_some() || self.scan.is_some();
        if needs_f && self.functions.is_empty() {
            return Err(config_err("tests, diagnose and scan need at least one [[functions]] entry"));
        }
        if let Some(t) = &self.test {
            if t.tests.iter().any(|k| k.needs_potential()) && self.potential.is_none() {
                return Err(config_err("the selected tests need a [potential] section"));
            }
            if t.tests.contains(&TestKind::Transience) && t.region.is_none() {
                return Err(config_err("the transience probe needs test.region"));
            }
            if t.khasminskii.is_some() && !t.tests.contains(&TestKind::KhasminskiiJ) && self.potential.is_none() {
                return Err(config_err("test.khasminskii needs a [potential] section for J"));
            }
        }
        if let Some(p) = &self.potential {
            if !(p.hi > p.lo) {
                return Err(config_err("potential.hi must exceed potential.lo"));
            }
        }
        if let Some(d) = &self.diagnose {
            if let Some(l) = &d.ladder {
                if l.len() < 3 || l.windows(2).any(|w| w[0] >= w[1]) || l[0] <= 0.0 {
                    return Err(config_err("diagnose.ladder needs >= 3 increasing positive horizons"));
                }
            }
        }
        if let Some(s) = &self.scan {
            if s.xs.n == 0 || !(s.xs.hi >= s.xs.lo) {
                return Err(config_err("scan.xs needs n >= 1 and hi >= lo"));
            }
        }
        if let Some(CounterexampleConfig::TransientTrap { levels, table_paths, n_max, .. }) = &self.counterexample {
            if levels.len() < 2 || *table_paths < 2 || *n_max == 0 {
                return Err(config_err("transient_trap needs >= 2 levels, >= 2 table paths and n_max >= 1"));
            }
        }
        Ok(())
    }

    pub fn build_model(&self) -> Result<LevyModel, DriverError> {
        build_model(self.model.spec()).map_err(|e| DriverError::Model(e.to_string()))
    }

    pub fn build_functions(&self) -> Result<Vec<TestFunction>, DriverError> {
        self.functions
            .iter()
            .enumerate()
            .map(|(k, f)| f.build().map_err(|e| config_err(format!("functions[{k}]: {e}"))))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
seed = 7
paths = 10
horizon = 5.0
model = { kind = "lattice_cpp", rate = 2.0, span = 1.0 }
"#;

    #[test]
    fn minimal_config_parses() {
        let c = ExperimentConfig::parse(MINIMAL).unwrap();
        assert_eq!(c.seed, 7);
        c.validate().unwrap();
        assert!(c.build_model().is_ok());
    }

    #[test]
    fn seed_is_mandatory() {
        let text = MINIMAL.replace("seed = 7", "");
        assert!(matches!(ExperimentConfig::parse(&text), Err(DriverError::Config(_))));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = format!("{MINIMAL}\nbogus = 1\n");
        assert!(ExperimentConfig::parse(&text).is_err());
    }

    #[test]
    fn digest_ignores_output_directory_only() {
        let a = ExperimentConfig::parse(MINIMAL).unwrap();
        let mut b = a.clone();
        b.apply(&Overrides { out: Some("elsewhere".into()), ..Default::default() });
        assert_eq!(a.digest(), b.digest());
        b.apply(&Overrides { seed: Some(8), ..Default::default() });
        assert_ne!(a.digest(), b.digest());
    }

    #[test]
    fn bad_model_is_a_model_error() {
        let text = MINIMAL.replace("rate = 2.0", "rate = -2.0");
        let c = ExperimentConfig::parse(&text).unwrap();
        assert_eq!(c.build_model().unwrap_err().exit_code(), 3);
    }
}
