//! Pipelines behind the subcommands.

use std::path::Path;

use perpetual_core::counterexample::{
    build_transient_trap, estimate_overshoot_cdf, lattice_counterexample, verify_counterexample,
};
use perpetual_core::criteria::{
    blackwell_equivalence_check, comparison_csv, dk_test, erickson_maller_test, khasminskii_j, potential_integral,
    transience_probe, CriterionReport,
};
use perpetual_core::levy::{first_passages, simulate_with, PassageRecord, SimOptions};
use perpetual_core::perpetual::{
    batty_inequality_check, estimate_i_distribution, estimate_l_set, finiteness_diagnosis,
    khasminskii_exponential_check, Budget,
};
use perpetual_core::potential::{
    analytic_potential, default_grid, default_horizon, estimate_potential, uniform_grid, DEFAULT_BINS,
    DEFAULT_SAFETY_FACTOR,
};
use perpetual_core::stats::mean_se;
use perpetual_core::{par, Error as CoreError, LevyModel, PathSample, PotentialMeasure, RegionSpec, SeedTree, TestFunction};
use serde::Serialize;

use crate::artifacts::Artifacts;
use crate::config::{
    CounterexampleConfig, DiagnoseConfig, ExperimentConfig, GridConfig, PotentialConfig, ScanConfig, SimulateConfig,
    TestConfig, TestKind,
};
use crate::error::{config_err, DriverError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Simulate,
    Potential,
    Test,
    Diagnose,
    Counterexample,
    Scan,
    /// Every section present in the config.
    Run,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Finding {
    pub key: String,
    pub value: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub name: String,
    pub command: Command,
    pub model_id: String,
    pub artifacts: Vec<String>,
    pub findings: Vec<Finding>,
    /// Tests that do not apply to a function, with the reason.
    pub skipped: Vec<String>,
    /// Failed verification assertions; any entry makes the exit status 4.
    pub failures: Vec<String>,
}

impl Summary {
    pub fn exit_code(&self) -> i32 {
        if self.failures.is_empty() {
            0
        } else {
            4
        }
    }

    pub fn finding(&self, key: &str) -> Option<&str> {
        self.findings.iter().find(|f| f.key == key).map(|f| f.value.as_str())
    }
}

struct Ctx<'a> {
    cfg: &'a ExperimentConfig,
    model: LevyModel,
    fs: Vec<TestFunction>,
    art: Artifacts,
    pm: Option<PotentialMeasure>,
    summary: Summary,
}

impl Ctx<'_> {
    fn find(&mut self, key: impl Into<String>, value: impl ToString) {
        self.summary.findings.push(Finding { key: key.into(), value: value.to_string() });
    }

    fn budget(&self, horizon: f64) -> Budget {
        let b = Budget::new(self.cfg.paths, horizon, self.cfg.seed);
        match self.cfg.step {
            Some(h) => b.with_step(h),
            None => b,
        }
    }
}

/// Runs `command` on a validated config and writes its artifacts to `out`.
/// With `threads` set, all parallel work runs on a pool of that size.
pub fn run_experiment(
    cfg: &ExperimentConfig,
    command: Command,
    out: &Path,
    threads: Option<usize>,
) -> Result<Summary, DriverError> {
    match threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| config_err(format!("thread pool: {e}")))?;
            pool.install(|| run_inner(cfg, command, out))
        }
        None => run_inner(cfg, command, out),
    }
}

fn run_inner(cfg: &ExperimentConfig, command: Command, out: &Path) -> Result<Summary, DriverError> {
    cfg.validate()?;
    let missing = |s: &str| config_err(format!("command needs a [{s}] section"));
    match command {
        Command::Potential if cfg.potential.is_none() => return Err(missing("potential")),
        Command::Test if cfg.test.is_none() => return Err(missing("test")),
        Command::Scan if cfg.scan.is_none() => return Err(missing("scan")),
        Command::Counterexample if cfg.counterexample.is_none() => return Err(missing("counterexample")),
        Command::Diagnose if cfg.functions.is_empty() => return Err(config_err("diagnose needs [[functions]]")),
        _ => {}
    }
    let model = cfg.build_model()?;
    let fs = cfg.build_functions()?;
    let art = Artifacts::create(out, cfg.digest(), cfg.seed)?;
    let summary = Summary {
        name: cfg.name.clone(),
        command,
        model_id: model.id(),
        artifacts: Vec::new(),
        findings: Vec::new(),
        skipped: Vec::new(),
        failures: Vec::new(),
    };
    let mut ctx = Ctx { cfg, model, fs, art, pm: None, summary };
    let all = command == Command::Run;
    if command == Command::Simulate || (all && cfg.simulate.is_some()) {
        simulate(&mut ctx, &cfg.simulate.clone().unwrap_or_default())?;
    }
    let wants_pm = command == Command::Potential
        || (all && cfg.potential.is_some())
        || (command == Command::Test || all) && cfg.test.is_some() && cfg.potential.is_some();
    if wants_pm {
        potential(&mut ctx, cfg.potential.as_ref().expect("validated"))?;
    }
    if let Some(t) = cfg.test.as_ref().filter(|_| command == Command::Test || all) {
        test(&mut ctx, t)?;
    }
    if command == Command::Diagnose || (all && cfg.diagnose.is_some()) {
        diagnose(&mut ctx, &cfg.diagnose.clone().unwrap_or_default())?;
    }
    if let Some(s) = cfg.scan.as_ref().filter(|_| command == Command::Scan || all) {
        scan(&mut ctx, s)?;
    }
    if let Some(c) = cfg.counterexample.as_ref().filter(|_| command == Command::Counterexample || all) {
        counterexample(&mut ctx, c)?;
    }
    let mut summary = ctx.summary;
    summary.artifacts = ctx.art.written().to_vec();
    summary.artifacts.push("report.json".into());
    ctx.art.json("report.json", &summary)?;
    Ok(summary)
}

fn simulate(ctx: &mut Ctx, sc: &SimulateConfig) -> Result<(), DriverError> {
    let cfg = ctx.cfg;
    let tree = SeedTree::new(cfg.seed);
    let opts = SimOptions { step: cfg.step, stop_above: None };
    let model = &ctx.model;
    let rows = par::map_indices(cfg.paths, |i| -> perpetual_core::Result<(Vec<PassageRecord>, f64, Option<PathSample>)> {
        let path = simulate_with(model, cfg.horizon, &opts, &mut tree.path(i as u64))?;
        let passages = first_passages(&path, &sc.levels);
        let end = path.final_value();
        Ok((passages, end, (i < sc.dump).then_some(path)))
    });
    let rows: Vec<_> = rows.into_iter().collect::<perpetual_core::Result<_>>()?;
    let mut dump = Vec::new();
    for (i, r) in rows.iter().enumerate() {
        if let Some(p) = &r.2 {
            for (t, v) in p.times.iter().zip(&p.values) {
                dump.push(vec![i.to_string(), t.to_string(), v.to_string()]);
            }
        }
    }
    ctx.art.csv("paths.csv", &["path", "time", "value"], &dump)?;
    let mut table = Vec::new();
    for (k, &level) in sc.levels.iter().enumerate() {
        let passed: Vec<&PassageRecord> = rows.iter().map(|r| &r.0[k]).filter(|p| !p.censored()).collect();
        let n = passed.len().max(1) as f64;
        let mean_time = passed.iter().map(|p| p.passage_time).sum::<f64>() / n;
        let mean_over = passed.iter().filter_map(|p| p.overshoot).sum::<f64>() / n;
        let exact = passed.iter().filter(|p| p.hit_exactly).count() as f64 / n;
        table.push(vec![
            level.to_string(),
            (passed.len() as f64 / cfg.paths as f64).to_string(),
            mean_time.to_string(),
            mean_over.to_string(),
            exact.to_string(),
        ]);
    }
    ctx.art.csv(
        "passages.csv",
        &["level", "passed_fraction", "mean_passage_time", "mean_overshoot", "hit_exactly_fraction"],
        &table,
    )?;
    let ends: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let ms = mean_se(&ends);
    #[derive(Serialize)]
    struct SimSummary {
        model_id: String,
        paths: usize,
        horizon: f64,
        mean_final: f64,
        mean_final_se: f64,
        expected_final: f64,
    }
    let s = SimSummary {
        model_id: ctx.model.id(),
        paths: cfg.paths,
        horizon: cfg.horizon,
        mean_final: ms.mean,
        mean_final_se: ms.se,
        expected_final: ctx.model.mean() * cfg.horizon,
    };
    ctx.find("simulate.mean_final", ms.mean);
    ctx.art.json("simulate.json", &s)
}

fn potential(ctx: &mut Ctx, pc: &PotentialConfig) -> Result<(), DriverError> {
    let edges = if ctx.model.lattice_span().is_some() {
        default_grid(&ctx.model, pc.lo, pc.hi)
    } else {
        uniform_grid(pc.lo, pc.hi, pc.bins.unwrap_or(DEFAULT_BINS))
    };
    let horizon = pc
        .horizon
        .unwrap_or_else(|| default_horizon(&ctx.model, &edges, pc.safety.unwrap_or(DEFAULT_SAFETY_FACTOR)));
    let paths = pc.paths.unwrap_or(ctx.cfg.paths);
    let pm = estimate_potential(&ctx.model, &edges, paths, horizon, ctx.cfg.step, ctx.cfg.seed)?;
    let meta = ctx.art.meta();
    ctx.art.text("potential.csv", &pm.to_csv(&meta))?;
    if let Some(exact) = analytic_potential(&ctx.model, &edges)? {
        ctx.art.text("potential_analytic.csv", &exact.to_csv(&meta))?;
    }
    ctx.find("potential.total_mass", pm.masses.iter().sum::<f64>());
    for w in &pm.meta.warnings {
        ctx.summary.skipped.push(format!("potential: {w}"));
    }
    ctx.pm = Some(pm);
    Ok(())
}

/// Inapplicable tests are recorded and skipped; other errors abort.
fn applicable<T>(ctx: &mut Ctx, label: String, r: perpetual_core::Result<T>) -> Result<Option<T>, DriverError> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(e @ (CoreError::InvalidArgument(_) | CoreError::NotCertifiable(_) | CoreError::Coverage(_))) => {
            ctx.summary.skipped.push(format!("{label}: {e}"));
            Ok(None)
        }
        Err(e) => Err(e.into()),
    }
}

fn test(ctx: &mut Ctx, tc: &TestConfig) -> Result<(), DriverError> {
    let cfg = ctx.cfg;
    let region = tc.region.clone().unwrap_or_else(|| RegionSpec::above(tc.l));
    let j_grid = tc.j_grid.clone().unwrap_or(GridConfig { lo: tc.x - 2.0, hi: tc.x + 2.0, n: 40 }).points();
    let mut reports: Vec<CriterionReport> = Vec::new();
    let mut blackwell = Vec::new();
    let mut js = Vec::new();
    let mut probes = Vec::new();
    let mut battys = Vec::new();
    let mut mgfs = Vec::new();
    let fs = ctx.fs.clone();
    for (k, f) in fs.iter().enumerate() {
        let mut j_value = None;
        for &kind in &tc.tests {
            let label = format!("f{k}.{}", kind_name(kind));
            let pm = ctx.pm.as_ref();
            match kind {
                TestKind::PotentialIntegral => {
                    let r = potential_integral(f, pm.expect("validated"), &region, tc.x);
                    if let Some(r) = applicable(ctx, label.clone(), r)? {
                        ctx.find(label, r.verdict);
                        reports.push(r);
                    }
                }
                TestKind::Dk => {
                    let r = dk_test(f, tc.l)?;
                    ctx.find(label, r.verdict);
                    reports.push(r);
                }
                TestKind::EricksonMaller => {
                    let r = erickson_maller_test(f, pm.expect("validated"), tc.l);
                    if let Some(r) = applicable(ctx, label.clone(), r)? {
                        ctx.find(label, r.verdict);
                        reports.push(r);
                    }
                }
                TestKind::Blackwell => {
                    let r = blackwell_equivalence_check(f, pm.expect("validated"), tc.l);
                    if let Some(r) = applicable(ctx, label.clone(), r)? {
                        ctx.find(label, r.verdicts_agree);
                        blackwell.push(r);
                    }
                }
                TestKind::KhasminskiiJ => {
                    let r = khasminskii_j(f, pm.expect("validated"), &j_grid);
                    if let Some(r) = applicable(ctx, label.clone(), r)? {
                        ctx.find(label, r.j);
                        j_value = Some(r.j);
                        js.push(r);
                    }
                }
                TestKind::Transience => {
                    let e = tc.region.as_ref().expect("validated");
                    let r = transience_probe(&ctx.model, e, tc.x, cfg.paths, cfg.horizon, cfg.seed, cfg.step)?;
                    ctx.find(label, r.p_stay_hat);
                    probes.push(r);
                }
            }
        }
        if let Some(b) = &tc.batty {
            let window = b.probe_window.map(|w| (w[0], w[1]));
            let r = batty_inequality_check(
                f, &ctx.model, tc.x, b.a, b.t, b.n_outer, b.n_inner, cfg.seed, cfg.step, window,
            );
            if let Some(r) = applicable(ctx, format!("f{k}.batty"), r)? {
                ctx.find(format!("f{k}.batty"), r.holds);
                if !r.holds {
                    ctx.summary.failures.push(format!("f{k}.batty: lhs {} > rhs {}", r.lhs, r.rhs));
                }
                battys.push(r);
            }
        }
        if let Some(kc) = &tc.khasminskii {
            if j_value.is_none() {
                if let Some(pm) = ctx.pm.as_ref() {
                    j_value = khasminskii_j(f, pm, &j_grid).ok().map(|r| r.j);
                }
            }
            let r = khasminskii_exponential_check(
                f, &ctx.model, tc.x, kc.theta, &ctx.budget(cfg.horizon), j_value, kc.override_gate,
            );
            if let Some(r) = applicable(ctx, format!("f{k}.khasminskii_mgf"), r)? {
                ctx.find(format!("f{k}.khasminskii_mgf"), r.empirical_mgf);
                mgfs.push(r);
            }
        }
    }
    let meta = ctx.art.meta();
    ctx.art.json("criteria.json", &reports)?;
    ctx.art.text("comparison.csv", &comparison_csv(&reports, &meta))?;
    if !blackwell.is_empty() {
        ctx.art.json("blackwell.json", &blackwell)?;
    }
    if !js.is_empty() {
        ctx.art.json("khasminskii_j.json", &js)?;
    }
    if !probes.is_empty() {
        ctx.art.json("transience.json", &probes)?;
    }
    if !battys.is_empty() {
        ctx.art.json("batty.json", &battys)?;
    }
    if !mgfs.is_empty() {
        ctx.art.json("khasminskii_mgf.json", &mgfs)?;
    }
    Ok(())
}

fn kind_name(k: TestKind) -> &'static str {
    match k {
        TestKind::PotentialIntegral => "potential_integral",
        TestKind::Dk => "dk",
        TestKind::EricksonMaller => "erickson_maller",
        TestKind::Blackwell => "blackwell",
        TestKind::KhasminskiiJ => "khasminskii_j",
        TestKind::Transience => "transience",
    }
}

fn diagnose(ctx: &mut Ctx, dc: &DiagnoseConfig) -> Result<(), DriverError> {
    let cfg = ctx.cfg;
    let t = cfg.horizon;
    let ladder = dc.ladder.clone().unwrap_or_else(|| vec![t / 8.0, t / 4.0, t / 2.0, t]);
    let top = *ladder.last().unwrap();
    let fs = ctx.fs.clone();
    for (k, f) in fs.iter().enumerate() {
        let v = finiteness_diagnosis(f, &ctx.model, dc.x, &ladder, cfg.paths, cfg.seed, cfg.step)?;
        let meta = ctx.art.meta();
        ctx.art.text(&format!("ladder_f{k}.csv"), &v.ladder_csv(&meta))?;
        ctx.find(format!("f{k}.diagnosis"), v.outcome);
        if let Some(last) = v.ladder.last() {
            ctx.find(format!("f{k}.censored_fraction"), last.censored_fraction);
        }
        ctx.art.json(&format!("diagnosis_f{k}.json"), &v)?;
        let d = estimate_i_distribution(f, &ctx.model, dc.x, &ctx.budget(top), &dc.a_grid)?;
        ctx.art.json(&format!("distribution_f{k}.json"), &d)?;
    }
    Ok(())
}

fn scan(ctx: &mut Ctx, sc: &ScanConfig) -> Result<(), DriverError> {
    let xs = sc.xs.points();
    let budget = ctx.budget(ctx.cfg.horizon);
    let fs = ctx.fs.clone();
    for (k, f) in fs.iter().enumerate() {
        let l = estimate_l_set(f, &ctx.model, sc.a, sc.q, &xs, &budget)?;
        let meta = ctx.art.meta();
        ctx.art.text(&format!("lset_f{k}.csv"), &l.to_csv(&meta))?;
        if let Some(th) = l.threshold {
            ctx.find(format!("f{k}.lset_threshold"), th);
        }
        ctx.art.json(&format!("lset_f{k}.json"), &l)?;
    }
    Ok(())
}

fn counterexample(ctx: &mut Ctx, cc: &CounterexampleConfig) -> Result<(), DriverError> {
    let cfg = ctx.cfg;
    match cc {
        CounterexampleConfig::LatticeSine { alpha } => {
            let r = lattice_counterexample(*alpha, &ctx.model, &ctx.budget(cfg.horizon))?;
            ctx.find("lattice_sine.dk", r.dk.verdict);
            ctx.find("lattice_sine.potential_integral", r.potential.value);
            ctx.find("lattice_sine.max_i", r.distribution.max);
            ctx.find("lattice_sine.disagreement", r.disagreement);
            if !r.disagreement {
                ctx.summary.failures.push("lattice sine: the Lebesgue test and the paths agree".into());
            }
            ctx.art.json("lattice_sine.json", &r)?;
        }
        CounterexampleConfig::TransientTrap { levels, table_paths, n_max, safety, allow_atoms } => {
            let table = estimate_overshoot_cdf(&ctx.model, levels, *table_paths, cfg.seed, *allow_atoms)?;
            ctx.find("overshoot.sup_distance", table.sup_distance);
            let mut header = vec!["eps".to_string()];
            header.extend(table.levels.iter().map(|l| format!("cdf_at_{l}")));
            let rows: Vec<Vec<String>> = (0..table.eps_grid.len())
                .map(|k| {
                    let mut r = vec![table.eps_grid[k].to_string()];
                    r.extend((0..table.levels.len()).map(|l| table.cdf(l, k).to_string()));
                    r
                })
                .collect();
            let h: Vec<&str> = header.iter().map(String::as_str).collect();
            ctx.art.csv("overshoot_cdf.csv", &h, &rows)?;
            ctx.art.json("overshoot.json", &table)?;
            let trap = match build_transient_trap(&table, *n_max, *safety) {
                Ok(t) => t,
                Err(CoreError::NotCertifiable(msg)) => {
                    ctx.summary.failures.push(format!("trap: {msg}"));
                    return Ok(());
                }
                Err(e) => return Err(e.into()),
            };
            let rows: Vec<Vec<String>> = (0..trap.n_max)
                .map(|n| {
                    [n as f64 + 1.0, trap.x[n], trap.eps[n], trap.alpha[n], trap.beta[n], trap.certificate[n], trap.target[n]]
                        .iter()
                        .map(f64::to_string)
                        .collect()
                })
                .collect();
            ctx.art.csv("trap.csv", &["n", "x", "eps", "alpha", "beta", "certificate", "target"], &rows)?;
            ctx.art.json("trap.json", &trap)?;
            ctx.find("trap.certified_visit_bound", trap.certified_visit_bound);
            let v = verify_counterexample(&ctx.model, &trap, cfg.paths, cfg.horizon, cfg.seed)?;
            for a in &v.assertions {
                ctx.find(format!("trap.{}", a.name), a.holds);
                if !a.holds {
                    ctx.summary.failures.push(format!("trap.{}: {}", a.name, a.detail));
                }
            }
            ctx.art.json("verification.json", &v)?;
        }
    }
    Ok(())
}
