//! Config-driven experiment runner: build an environment and an optimizer
//! schedule from a structured-text config, run every seed through the
//! optimizer against a brute-force oracle, write one CSV per seed plus an
//! aggregate report, and return the aggregate for programmatic use.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::Deserialize;

use crate::config::{OptimizerConfig, Tolerances};
use crate::environment::{catalog, Environment, LossSign, OracleReport};
use crate::error::{Error, Result};
use crate::ledger::RegretLedger;
use crate::optimizer::{minimize_convex_pr, minimize_pr};
use crate::report::write_run_csv;
use crate::rng::SeededRng;
use crate::slope::{fit_slope, SlopeFit};
use crate::vector::Vector;

/// Environment selection: a catalog name plus the parameters that name
/// accepts. Options that do not apply to the named environment are rejected
/// rather than ignored.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvSpec {
    pub name: String,
    /// Feature value for the square-map label environment.
    pub x: Option<f64>,
    /// Loss sign for the square-map label environment: "positive" or
    /// "negative".
    pub sign: Option<String>,
    pub intercept: Option<f64>,
    pub slope: Option<f64>,
    pub sigma: Option<f64>,
    /// Growth constant for the uniform-support environment.
    pub c: Option<f64>,
    pub lo: Option<f64>,
    pub hi: Option<f64>,
}

impl EnvSpec {
    pub fn named(name: &str) -> EnvSpec {
        EnvSpec {
            name: name.to_string(),
            x: None,
            sign: None,
            intercept: None,
            slope: None,
            sigma: None,
            c: None,
            lo: None,
            hi: None,
        }
    }

    fn reject_unused(&self, allowed: &[&str]) -> Result<()> {
        let set = |name: &str| -> bool {
            match name {
                "x" => self.x.is_some(),
                "sign" => self.sign.is_some(),
                "intercept" => self.intercept.is_some(),
                "slope" => self.slope.is_some(),
                "sigma" => self.sigma.is_some(),
                "c" => self.c.is_some(),
                "lo" => self.lo.is_some(),
                "hi" => self.hi.is_some(),
                _ => false,
            }
        };
        for name in ["x", "sign", "intercept", "slope", "sigma", "c", "lo", "hi"] {
            if set(name) && !allowed.contains(&name) {
                return Err(Error::Config(format!(
                    "option '{name}' does not apply to environment '{}'",
                    self.name
                )));
            }
        }
        Ok(())
    }

    pub fn build(&self) -> Result<Environment> {
        match self.name.as_str() {
            "example1_square" => {
                self.reject_unused(&["x", "sign"])?;
                let sign = match self.sign.as_deref() {
                    None | Some("positive") => LossSign::Positive,
                    Some("negative") => LossSign::Negative,
                    Some(other) => {
                        return Err(Error::Config(format!(
                            "sign must be 'positive' or 'negative', got '{other}'"
                        )))
                    }
                };
                catalog::example1_square(sign, self.x.unwrap_or(1.0))
            }
            "example1_square_paper_sign" => {
                self.reject_unused(&["x"])?;
                catalog::example1_square(LossSign::Negative, self.x.unwrap_or(1.0))
            }
            "gaussian_affine" => {
                self.reject_unused(&["intercept", "slope", "sigma"])?;
                catalog::gaussian_affine(
                    self.intercept.unwrap_or(0.3),
                    self.slope.unwrap_or(0.0),
                    self.sigma.unwrap_or(0.1),
                )
            }
            "poisson_exp" => {
                self.reject_unused(&[])?;
                catalog::poisson_exp()
            }
            "uniform_exp" => {
                self.reject_unused(&["c", "lo", "hi"])?;
                catalog::uniform_exp_with(
                    self.c.unwrap_or(catalog::UNIFORM_EXP_C),
                    self.lo.unwrap_or(0.4),
                    self.hi.unwrap_or(0.6),
                )
            }
            other => Err(Error::Config(format!("unknown environment '{other}'"))),
        }
    }
}

/// Fixed-budget schedule request (the self-consistent alternative to
/// explicit tolerances).
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BudgetSpec {
    pub n: u64,
    pub n_kl: usize,
    pub p: f64,
    pub p_lm: f64,
    pub p_kl: f64,
}

/// Manual overrides applied after the schedule is derived. Horizon
/// overrides recompute their step size from the schedule formula; explicit
/// step-size overrides are applied last and win.
#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    pub t: Option<usize>,
    pub s: Option<usize>,
    pub n_kl: Option<usize>,
    pub delta: Option<f64>,
    pub delta_lm: Option<f64>,
    pub eta: Option<f64>,
    pub eta_lm: Option<f64>,
}

/// Optimizer selection: `kind` is "convex" (single-level, needs `t`) or
/// "two_level" (needs exactly one of `tolerances` / `budget`, plus optional
/// `overrides`).
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerSpec {
    pub kind: String,
    pub t: Option<usize>,
    pub tolerances: Option<Tolerances>,
    pub budget: Option<BudgetSpec>,
    pub overrides: Option<Overrides>,
}

/// A validated, runnable optimizer selection.
#[derive(Debug, Clone, PartialEq)]
pub enum OptimizerChoice {
    Convex { t: usize },
    TwoLevel { cfg: OptimizerConfig },
}

impl OptimizerChoice {
    pub fn kind(&self) -> &'static str {
        match self {
            OptimizerChoice::Convex { .. } => "convex",
            OptimizerChoice::TwoLevel { .. } => "two_level",
        }
    }

    /// Samples the headline identity charges to the optimizer.
    pub fn paper_n(&self) -> u64 {
        match self {
            OptimizerChoice::Convex { t } => 2 * *t as u64,
            OptimizerChoice::TwoLevel { cfg } => cfg.paper_n(),
        }
    }

    /// Every sample the run deploys.
    pub fn total_n(&self) -> u64 {
        match self {
            OptimizerChoice::Convex { t } => 2 * *t as u64,
            OptimizerChoice::TwoLevel { cfg } => cfg.total_n(),
        }
    }
}

impl OptimizerSpec {
    pub fn build(&self, env: &Environment) -> Result<OptimizerChoice> {
        match self.kind.as_str() {
            "convex" => {
                if self.tolerances.is_some() || self.budget.is_some() || self.overrides.is_some()
                {
                    return Err(Error::Config(
                        "the convex optimizer takes only a horizon 't'".into(),
                    ));
                }
                let t = self
                    .t
                    .ok_or_else(|| Error::Config("the convex optimizer needs 't'".into()))?;
                Ok(OptimizerChoice::Convex { t })
            }
            "two_level" => {
                if self.t.is_some() {
                    return Err(Error::Config(
                        "'t' at the top level is for the convex optimizer; \
                         use overrides.t for the two-level schedule"
                            .into(),
                    ));
                }
                let d_theta = env.theta_space().dim();
                let d_phi = env.phi_space().dim();
                let mut cfg = match (&self.tolerances, &self.budget) {
                    (Some(tol), None) => {
                        OptimizerConfig::from_tolerances(env.family(), d_theta, d_phi, *tol)?
                    }
                    (None, Some(b)) => OptimizerConfig::budgeted(
                        d_theta, d_phi, b.n, b.n_kl, b.p, b.p_lm, b.p_kl,
                    )?,
                    _ => {
                        return Err(Error::Config(
                            "the two-level optimizer needs exactly one of \
                             'tolerances' or 'budget'"
                                .into(),
                        ))
                    }
                };
                if let Some(ov) = self.overrides {
                    if let Some(t) = ov.t {
                        cfg = cfg.with_t(t)?;
                    }
                    if let Some(s) = ov.s {
                        cfg = cfg.with_s(s)?;
                    }
                    if let Some(n_kl) = ov.n_kl {
                        cfg = cfg.with_n_kl(n_kl)?;
                    }
                    if let Some(delta) = ov.delta {
                        cfg = cfg.with_delta(delta)?;
                    }
                    if let Some(delta_lm) = ov.delta_lm {
                        cfg = cfg.with_delta_lm(delta_lm)?;
                    }
                    if let Some(eta) = ov.eta {
                        cfg = cfg.with_eta(eta)?;
                    }
                    if let Some(eta_lm) = ov.eta_lm {
                        cfg = cfg.with_eta_lm(eta_lm)?;
                    }
                }
                Ok(OptimizerChoice::TwoLevel { cfg })
            }
            other => Err(Error::Config(format!(
                "unknown optimizer kind '{other}' (expected 'convex' or 'two_level')"
            ))),
        }
    }
}

/// Run-level knobs: seeds, output location, and reporting parameters.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    pub seeds: Vec<u64>,
    pub output_dir: PathBuf,
    /// Emit every stride-th CSV row (default 1: every sample).
    pub csv_stride: Option<u64>,
    /// Brute-force oracle grid resolution (default 1e-5).
    pub oracle_resolution: Option<f64>,
    /// Trailing fraction of the regret series used for the slope fit
    /// (default 0.8).
    pub slope_window: Option<f64>,
    /// A seed succeeds on risk when PR(theta_bar) - PR_opt <= this
    /// (default 0.1, in normalized loss units).
    pub success_gap: Option<f64>,
    /// A seed succeeds on distance when |theta_bar - theta_opt| <= this
    /// (default 0.05).
    pub success_dist: Option<f64>,
    /// Seed-level parallelism (default 1; each seed's run stays sequential).
    pub workers: Option<usize>,
}

/// A full experiment: environment, optimizer, and run parameters.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub environment: EnvSpec,
    pub optimizer: OptimizerSpec,
    pub run: RunSpec,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(format!("parsing experiment config: {e}")))
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }
}

/// What one seed produced.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedSummary {
    pub seed: u64,
    pub final_regret: f64,
    /// Log-log tail fit of the regret curve; absent when too few positive
    /// regret points exist to identify a slope.
    pub slope: Option<SlopeFit>,
    pub theta_bar: Vector,
    pub pr_theta_bar: f64,
    /// PR(theta_bar) - PR_opt.
    pub gap: f64,
    pub dist_to_opt: f64,
    pub lm_warnings: usize,
    pub total_samples: u64,
    pub csv: PathBuf,
}

/// Everything an experiment run reports.
#[derive(Debug, Clone)]
pub struct AggregateReport {
    pub environment: String,
    pub choice: OptimizerChoice,
    pub oracle: OracleReport,
    pub seeds: Vec<SeedSummary>,
    pub median_slope: Option<f64>,
    pub success_rate_gap: f64,
    pub success_rate_dist: f64,
    pub paper_n: u64,
    pub total_n: u64,
    pub csv_stride: u64,
    pub slope_window: f64,
    pub success_gap: f64,
    pub success_dist: f64,
    pub oracle_resolution: f64,
    pub wall_secs: f64,
}

/// Resolve the effective seed list: a `PERF_SEED` override (comma-separated
/// 64-bit integers) replaces the config's seeds entirely.
pub fn resolve_seeds(config_seeds: &[u64], override_var: Option<&str>) -> Result<Vec<u64>> {
    let seeds = match override_var {
        Some(text) => text
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<u64>()
                    .map_err(|e| Error::Config(format!("PERF_SEED entry '{s}': {e}")))
            })
            .collect::<Result<Vec<u64>>>()?,
        None => config_seeds.to_vec(),
    };
    if seeds.is_empty() {
        return Err(Error::Config("no seeds to run".into()));
    }
    Ok(seeds)
}

fn median(mut xs: Vec<f64>) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    xs.sort_by(|a, b| a.total_cmp(b));
    let mid = xs.len() / 2;
    Some(if xs.len() % 2 == 1 { xs[mid] } else { (xs[mid - 1] + xs[mid]) / 2.0 })
}

fn run_one_seed(
    cfg: &ExperimentConfig,
    choice: &OptimizerChoice,
    oracle: &OracleReport,
    seed: u64,
    stride: u64,
    window: f64,
) -> Result<SeedSummary> {
    let mut env = cfg.environment.build()?;
    let mut rng = SeededRng::new(seed, 0);
    let (theta_bar, mut ledger, lm_warnings) = match choice {
        OptimizerChoice::Convex { t } => {
            let mut ledger = RegretLedger::new();
            let theta_bar = minimize_convex_pr(&mut env, *t, &mut ledger, &mut rng)?;
            (theta_bar, ledger, 0)
        }
        OptimizerChoice::TwoLevel { cfg: opt } => {
            let result = minimize_pr(&mut env, opt, &mut rng)?;
            (result.theta_bar, result.ledger, result.lm_warnings)
        }
    };
    ledger.set_pr_opt(oracle.pr_opt);

    let csv = cfg.run.output_dir.join(format!("seed_{seed}.csv"));
    write_run_csv(&csv, &ledger, stride)?;

    let series = ledger.regret_series()?;
    let final_regret = series.last().map_or(0.0, |(_, r)| *r);
    let slope = fit_slope(&series, window).ok();

    let pr_theta_bar = env.true_pr(&theta_bar)?;
    let gap = pr_theta_bar - oracle.pr_opt;
    let dist_to_opt = theta_bar.distance(&oracle.theta_opt);
    Ok(SeedSummary {
        seed,
        final_regret,
        slope,
        theta_bar,
        pr_theta_bar,
        gap,
        dist_to_opt,
        lm_warnings,
        total_samples: ledger.total_samples(),
        csv,
    })
}

/// Run the experiment: validate, locate the optimum by brute force, run all
/// seeds (optionally in parallel), write per-seed CSVs and the aggregate
/// report file, and return the aggregate.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<AggregateReport> {
    let start = Instant::now();
    let env = cfg.environment.build()?;
    let choice = cfg.optimizer.build(&env)?;

    let stride = cfg.run.csv_stride.unwrap_or(1);
    if stride == 0 {
        return Err(Error::Config("csv_stride must be at least 1".into()));
    }
    let window = cfg.run.slope_window.unwrap_or(0.8);
    if !(window > 0.0 && window <= 1.0) {
        return Err(Error::Config("slope_window must lie in (0, 1]".into()));
    }
    let resolution = cfg.run.oracle_resolution.unwrap_or(1e-5);
    let success_gap = cfg.run.success_gap.unwrap_or(0.1);
    let success_dist = cfg.run.success_dist.unwrap_or(0.05);
    let workers = cfg.run.workers.unwrap_or(1).max(1);
    let seeds = resolve_seeds(&cfg.run.seeds, std::env::var("PERF_SEED").ok().as_deref())?;

    if env.theta_space().dim() > 3 {
        return Err(Error::Oracle(format!(
            "brute-force oracle supports up to 3 model dimensions, got {}",
            env.theta_space().dim()
        )));
    }
    let oracle = env.brute_force_opt(resolution)?;

    fs::create_dir_all(&cfg.run.output_dir)?;
    let run = |&seed: &u64| run_one_seed(cfg, &choice, &oracle, seed, stride, window);
    let summaries: Result<Vec<SeedSummary>> = if workers > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::Config(format!("building worker pool: {e}")))?;
        pool.install(|| seeds.par_iter().map(run).collect())
    } else {
        seeds.iter().map(run).collect()
    };
    let seeds = summaries?;

    let median_slope = median(seeds.iter().filter_map(|s| s.slope.map(|f| f.slope)).collect());
    let frac = |pred: &dyn Fn(&SeedSummary) -> bool| {
        seeds.iter().filter(|s| pred(s)).count() as f64 / seeds.len() as f64
    };
    let report = AggregateReport {
        environment: env.name().to_string(),
        paper_n: choice.paper_n(),
        total_n: choice.total_n(),
        choice,
        oracle,
        median_slope,
        success_rate_gap: frac(&|s| s.gap <= success_gap),
        success_rate_dist: frac(&|s| s.dist_to_opt <= success_dist),
        seeds,
        csv_stride: stride,
        slope_window: window,
        success_gap,
        success_dist,
        oracle_resolution: resolution,
        wall_secs: start.elapsed().as_secs_f64(),
    };
    write_aggregate(&cfg.run.output_dir.join("aggregate.txt"), &report)?;
    Ok(report)
}

fn fmt_vec(v: &Vector) -> String {
    let parts: Vec<String> = v.iter().map(|x| x.to_string()).collect();
    format!("[{}]", parts.join(", "))
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "\"none\"".to_string(), |v| v.to_string())
}

/// Write the aggregate as structured text with a stable key order. Only the
/// trailing [timing] section varies between identical reruns.
pub fn write_aggregate(path: &Path, report: &AggregateReport) -> Result<()> {
    let mut out = String::new();
    use std::fmt::Write as _;
    let w = &mut out;
    let _ = writeln!(w, "[experiment]");
    let _ = writeln!(w, "environment = \"{}\"", report.environment);
    let _ = writeln!(w, "optimizer = \"{}\"", report.choice.kind());
    let _ = writeln!(w, "csv_stride = {}", report.csv_stride);
    let _ = writeln!(w, "slope_window = {}", report.slope_window);
    let _ = writeln!(w, "success_gap = {}", report.success_gap);
    let _ = writeln!(w, "success_dist = {}", report.success_dist);
    let _ = writeln!(w, "oracle_resolution = {}", report.oracle_resolution);
    let _ = writeln!(w);
    let _ = writeln!(w, "[schedule]");
    match &report.choice {
        OptimizerChoice::Convex { t } => {
            let _ = writeln!(w, "t = {t}");
        }
        OptimizerChoice::TwoLevel { cfg } => {
            let _ = writeln!(w, "t = {}", cfg.t);
            let _ = writeln!(w, "s = {}", cfg.s);
            let _ = writeln!(w, "n_kl = {}", cfg.n_kl);
            let _ = writeln!(w, "delta = {}", cfg.delta);
            let _ = writeln!(w, "delta_lm = {}", cfg.delta_lm);
            let _ = writeln!(w, "eta = {}", cfg.eta);
            let _ = writeln!(w, "eta_lm = {}", cfg.eta_lm);
        }
    }
    let _ = writeln!(w, "paper_n = {}", report.paper_n);
    let _ = writeln!(w, "total_n = {}", report.total_n);
    let _ = writeln!(w);
    let _ = writeln!(w, "[oracle]");
    let _ = writeln!(w, "theta_opt = {}", fmt_vec(&report.oracle.theta_opt));
    let _ = writeln!(w, "phi_opt = {}", fmt_vec(&report.oracle.phi_opt));
    let _ = writeln!(w, "pr_opt = {}", report.oracle.pr_opt);
    let _ = writeln!(w, "evaluations = {}", report.oracle.evaluations);
    let _ = writeln!(w);
    let _ = writeln!(w, "[results]");
    let _ = writeln!(w, "seeds = {}", report.seeds.len());
    let _ = writeln!(w, "median_slope = {}", fmt_opt(report.median_slope));
    let _ = writeln!(w, "success_rate_gap = {}", report.success_rate_gap);
    let _ = writeln!(w, "success_rate_dist = {}", report.success_rate_dist);
    let _ = writeln!(
        w,
        "lm_warning_total = {}",
        report.seeds.iter().map(|s| s.lm_warnings).sum::<usize>()
    );
    for s in &report.seeds {
        let _ = writeln!(w);
        let _ = writeln!(w, "[[seed_result]]");
        let _ = writeln!(w, "seed = {}", s.seed);
        let _ = writeln!(w, "final_regret = {}", s.final_regret);
        let _ = writeln!(w, "slope = {}", fmt_opt(s.slope.map(|f| f.slope)));
        let _ = writeln!(w, "r_squared = {}", fmt_opt(s.slope.map(|f| f.r_squared)));
        let _ = writeln!(w, "theta_bar = {}", fmt_vec(&s.theta_bar));
        let _ = writeln!(w, "pr_theta_bar = {}", s.pr_theta_bar);
        let _ = writeln!(w, "gap = {}", s.gap);
        let _ = writeln!(w, "dist_to_opt = {}", s.dist_to_opt);
        let _ = writeln!(w, "lm_warnings = {}", s.lm_warnings);
        let _ = writeln!(w, "total_samples = {}", s.total_samples);
        let _ = writeln!(w, "csv = \"{}\"", s.csv.file_name().unwrap_or_default().to_string_lossy());
    }
    let _ = writeln!(w);
    let _ = writeln!(w, "[timing]");
    let _ = writeln!(w, "wall_secs = {}", report.wall_secs);

    let mut file = fs::File::create(path)?;
    file.write_all(out.as_bytes())?;
    Ok(())
}
