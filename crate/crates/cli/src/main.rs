//! Batch front end for the perfzero library: run experiments from config
//! files, query the brute-force oracle, calibrate divergence estimation,
//! scan curvature diagnostics, and fit regret slopes from run CSVs.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use perfzero::environment::catalog;
use perfzero::{
    calibrate_kl, diag_convexity, diag_expfam_condition, fit_slope, n_kl_from_constant,
    run_experiment, worst_failure_rate, Axis, DistributionFamily, Error, ExperimentConfig,
    KLCalibration, OptimizerChoice, Result, SeededRng,
};

#[derive(Parser)]
#[command(
    name = "perfzero",
    version,
    about = "Two-level zeroth-order optimization for decision-dependent risk"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run an experiment described by a config file; writes one CSV per seed
    /// plus an aggregate report into the configured output directory.
    Run {
        /// Experiment config (structured text; see the repository README).
        config: PathBuf,
    },
    /// Locate the performative optimum of a catalog environment by grid
    /// search over deployed models.
    Oracle {
        /// Catalog environment name (see `envs`).
        env: String,
        /// Grid spacing per model coordinate.
        #[arg(long, default_value_t = 1e-5)]
        resolution: f64,
    },
    /// Measure the sample-size constant that makes divergence estimation
    /// meet an accuracy/confidence contract on a stress grid.
    Calibrate {
        /// Distribution family: bernoulli, gaussian, poisson, or uniform_exp.
        family: FamilyArg,
        /// Accuracy target for each divergence estimate.
        #[arg(long, default_value_t = 0.1)]
        eps: f64,
        /// Failure probability target.
        #[arg(long, default_value_t = 0.05)]
        p: f64,
        /// Monte-Carlo trials per grid point and candidate constant.
        #[arg(long, default_value_t = 2000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Gaussian noise scale (gaussian family only).
        #[arg(long, default_value_t = 0.1)]
        sigma: f64,
        /// Growth constant (uniform_exp family only).
        #[arg(long, default_value_t = catalog::UNIFORM_EXP_C)]
        c: f64,
        /// Skip the search: measure the failure rate at this constant.
        #[arg(long)]
        check: Option<f64>,
        /// Write the calibration record here as structured text.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Curvature diagnostics.
    Diag {
        #[command(subcommand)]
        what: DiagCmd,
    },
    /// Fit a log-log slope to the regret column of a run CSV.
    Slope {
        csv: PathBuf,
        /// Trailing fraction of the series to fit.
        #[arg(long, default_value_t = 0.8)]
        window: f64,
    },
    /// List the catalog environments.
    Envs,
}

#[derive(Subcommand)]
enum DiagCmd {
    /// Scan the true risk along one axis and classify its curvature.
    /// `example1_square_paper_sign` shows the dichotomy this tool exists
    /// for: nonconvex along theta, convex along phi.
    Convexity {
        env: String,
        #[arg(long, value_enum, default_value_t = AxisArg::Theta)]
        axis: AxisArg,
        /// Requested grid spacing (rounded to divide the interval evenly).
        #[arg(long, default_value_t = 0.01)]
        resolution: f64,
    },
    /// Evaluate the sufficient curvature condition for Poisson-family
    /// environments pointwise, with a direct convexity scan as cross-check.
    Expfam {
        env: String,
        #[arg(long, default_value_t = 11)]
        grid_points: usize,
        /// Monte-Carlo draws per expectation.
        #[arg(long, default_value_t = 1_000_000)]
        draws: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum AxisArg {
    Theta,
    Phi,
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    Bernoulli,
    Gaussian,
    Poisson,
    UniformExp,
}

impl FamilyArg {
    fn build(self, sigma: f64, c: f64) -> DistributionFamily {
        match self {
            FamilyArg::Bernoulli => DistributionFamily::BernoulliLabel,
            FamilyArg::Gaussian => DistributionFamily::GaussianMean { sigma },
            FamilyArg::Poisson => DistributionFamily::PoissonRate,
            FamilyArg::UniformExp => DistributionFamily::UniformExp { c },
        }
    }
}

fn fmt_slice(xs: &[f64]) -> String {
    let parts: Vec<String> = xs.iter().map(|x| format!("{x:.6}")).collect();
    format!("[{}]", parts.join(", "))
}

fn cmd_run(config: &Path) -> Result<()> {
    let cfg = ExperimentConfig::from_path(config)?;
    let report = run_experiment(&cfg)?;
    println!("environment: {}", report.environment);
    match &report.choice {
        OptimizerChoice::Convex { t } => println!("optimizer: convex, t = {t}"),
        OptimizerChoice::TwoLevel { cfg } => println!(
            "optimizer: two_level, t = {}, s = {}, n_kl = {}, delta = {:.6}, \
             delta_lm = {:.6}, eta = {:.6}, eta_lm = {:.6}",
            cfg.t, cfg.s, cfg.n_kl, cfg.delta, cfg.delta_lm, cfg.eta, cfg.eta_lm
        ),
    }
    println!("samples: paper_n = {}, total_n = {}", report.paper_n, report.total_n);
    println!(
        "oracle: theta_opt = {}, pr_opt = {:.6}",
        fmt_slice(report.oracle.theta_opt.as_slice()),
        report.oracle.pr_opt
    );
    let slope = report
        .median_slope
        .map_or_else(|| "n/a".to_string(), |s| format!("{s:.4}"));
    println!(
        "seeds: {}, median regret slope = {}, success rate (risk gap <= {}) = {:.2}, \
         success rate (distance <= {}) = {:.2}",
        report.seeds.len(),
        slope,
        report.success_gap,
        report.success_rate_gap,
        report.success_dist,
        report.success_rate_dist
    );
    let warn_total: usize = report.seeds.iter().map(|s| s.lm_warnings).sum();
    if warn_total > 0 {
        println!("warning: {warn_total} inner runs ended above the matching tolerance");
    }
    println!("wall: {:.1}s", report.wall_secs);
    println!("wrote {}", cfg.run.output_dir.join("aggregate.txt").display());
    Ok(())
}

fn cmd_oracle(env_name: &str, resolution: f64) -> Result<()> {
    let env = catalog::by_name(env_name)?;
    let report = env.brute_force_opt(resolution)?;
    println!("environment: {env_name}");
    println!("theta_opt = {}", fmt_slice(report.theta_opt.as_slice()));
    println!("phi_opt = {}", fmt_slice(report.phi_opt.as_slice()));
    println!("pr_opt = {:.8}", report.pr_opt);
    println!("evaluations = {}", report.evaluations);
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_calibrate(
    family: FamilyArg,
    eps: f64,
    p: f64,
    trials: usize,
    seed: u64,
    sigma: f64,
    c: f64,
    check: Option<f64>,
    out: Option<&Path>,
) -> Result<()> {
    let family = family.build(sigma, c);
    let grid = KLCalibration::builtin(&family)
        .ok_or_else(|| Error::Unsupported(format!("no stress grid for {family:?}")))?
        .grid;
    let mut rng = SeededRng::new(seed, 0);
    if let Some(c_cal) = check {
        let n = n_kl_from_constant(c_cal, eps, p)?;
        let (rate, idx) = worst_failure_rate(&family, &grid, n, eps, trials, &mut rng)?;
        println!("family: {}", family.name());
        println!("c_cal = {c_cal} (given)");
        println!("samples per estimate = {n}");
        println!("worst measured failure rate = {rate} (target {p}, grid point {idx})");
        return Ok(());
    }
    let cal = calibrate_kl(&family, &grid, trials, eps, p, &mut rng)?;
    println!("family: {}", family.name());
    println!("grid points: {}", cal.grid.len());
    println!("c_cal = {}", cal.c_cal);
    println!("samples per estimate = {}", cal.n()?);
    println!("worst measured failure rate = {} (target {p})", cal.measured_failure);
    if let Some(path) = out {
        cal.save(path)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn cmd_convexity(env_name: &str, axis: AxisArg, resolution: f64) -> Result<()> {
    let env = catalog::by_name(env_name)?;
    let axis = match axis {
        AxisArg::Theta => Axis::Theta,
        AxisArg::Phi => Axis::Phi,
    };
    let report = diag_convexity(&env, axis, resolution)?;
    println!("environment: {env_name}");
    println!("axis: {}", report.axis.as_str());
    println!("grid points: {} (spacing {:.6})", report.grid.len(), report.spacing);
    println!("min value = {:.6} at {:.6}", report.min_value, report.argmin);
    if report.convex {
        println!("convex: yes (all second differences within tolerance)");
    } else {
        let w = report.witness.as_ref().expect("witness accompanies a nonconvex verdict");
        println!("convex: no");
        println!(
            "witness: second difference {:.3e} at {} = {:.6}",
            w.second_difference,
            report.axis.as_str(),
            w.point
        );
    }
    Ok(())
}

fn cmd_expfam(env_name: &str, grid_points: usize, draws: u64, seed: u64) -> Result<()> {
    let env = catalog::by_name(env_name)?;
    let mut rng = SeededRng::new(seed, 0);
    let report = diag_expfam_condition(&env, grid_points, draws, &mut rng)?;
    println!("environment: {env_name}");
    println!("draws per expectation: {}", report.draws);
    println!("{:>8} {:>10} {:>12} {:>12}  ok", "theta", "rate", "lhs", "rhs");
    for pt in &report.points {
        println!(
            "{:>8.4} {:>10.4} {:>12.6} {:>12.6}  {}",
            pt.theta,
            pt.lambda,
            pt.lhs,
            pt.rhs,
            if pt.satisfied { "yes" } else { "NO" }
        );
    }
    println!("condition satisfied at every grid point: {}", report.all_satisfied);
    println!(
        "direct scan: risk convex in the natural parameter: {}",
        report.natural_param_convex
    );
    Ok(())
}

fn read_regret_series(path: &Path) -> Result<Vec<(u64, f64)>> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::Config(format!("{}: empty file", path.display())))?;
    let cols: Vec<&str> = header.split(',').collect();
    let col = |name: &str| {
        cols.iter().position(|c| *c == name).ok_or_else(|| {
            Error::Config(format!("{}: no '{name}' column in header", path.display()))
        })
    };
    let (k_idx, r_idx) = (col("k")?, col("regret")?);
    let mut series = Vec::new();
    for (i, line) in lines {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        let bad = |what: &str| {
            Error::Config(format!("{} line {}: {what}", path.display(), i + 1))
        };
        if fields.len() != cols.len() {
            return Err(bad("wrong field count"));
        }
        let k = fields[k_idx].parse::<u64>().map_err(|_| bad("bad sample index"))?;
        let r = fields[r_idx].parse::<f64>().map_err(|_| bad("bad regret value"))?;
        series.push((k, r));
    }
    Ok(series)
}

fn cmd_slope(csv: &Path, window: f64) -> Result<()> {
    let series = read_regret_series(csv)?;
    let fit = fit_slope(&series, window)?;
    println!("points: {} (of {} rows)", fit.points_used, series.len());
    println!("slope = {:.6}", fit.slope);
    println!("intercept = {:.6}", fit.intercept);
    println!("r_squared = {:.6}", fit.r_squared);
    Ok(())
}

fn cmd_envs() {
    println!("catalog environments:");
    for name in catalog::NAMES {
        println!("  {name}");
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.cmd {
        Cmd::Run { config } => cmd_run(&config),
        Cmd::Oracle { env, resolution } => cmd_oracle(&env, resolution),
        Cmd::Calibrate { family, eps, p, trials, seed, sigma, c, check, out } => {
            cmd_calibrate(family, eps, p, trials, seed, sigma, c, check, out.as_deref())
        }
        Cmd::Diag { what } => match what {
            DiagCmd::Convexity { env, axis, resolution } => cmd_convexity(&env, axis, resolution),
            DiagCmd::Expfam { env, grid_points, draws, seed } => {
                cmd_expfam(&env, grid_points, draws, seed)
            }
        },
        Cmd::Slope { csv, window } => cmd_slope(&csv, window),
        Cmd::Envs => {
            cmd_envs();
            Ok(())
        }
    }
}

/// 0 on success, 2 for configuration/validation problems, 3 for oracle or
/// calibration failures, 1 for I/O trouble.
fn exit_for(err: &Error) -> u8 {
    match err {
        Error::Oracle(_) | Error::CalibrationDiverged(_) => 3,
        Error::Io(_) => 1,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_for(&err))
        }
    }
}
