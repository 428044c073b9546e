//! The optimizers: a single-level bandit scheme for risks that are convex in
//! the model parameter, an inner loop that learns a model inducing a target
//! distribution parameter by divergence matching, and the two-level scheme
//! that composes them. All three share one two-point gradient estimator and
//! record every deployed sample in a ledger.

use crate::config::{convex_schedule, OptimizerConfig};
use crate::divergence::plug_in_kl;
use crate::environment::Environment;
use crate::error::{Error, Result};
use crate::ledger::{Level, RegretLedger};
use crate::rng::{sample_unit_sphere, SeededRng};
use crate::vector::Vector;

/// Two-point zeroth-order gradient estimate: (d / (2 delta)) (f+ - f-) u.
///
/// `delta` is the effective perturbation radius actually used to produce
/// `f_plus` and `f_minus` (after any extent scaling); `u` must be the unit
/// direction of the perturbation.
pub fn two_point_gradient(
    d: usize,
    delta: f64,
    f_plus: f64,
    f_minus: f64,
    u: &Vector,
) -> Result<Vector> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "perturbation radius must be positive, got {delta}"
        )));
    }
    if u.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, got: u.dim() });
    }
    if (u.norm() - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidParameter(format!(
            "direction must be a unit vector, got norm {}",
            u.norm()
        )));
    }
    Ok(u.scaled(d as f64 / (2.0 * delta) * (f_plus - f_minus)))
}

/// Deploy `theta` for one sample, record its loss under `level`, return it.
fn query_loss(
    env: &mut Environment,
    theta: &Vector,
    level: Level,
    ledger: &mut RegretLedger,
    rng: &mut SeededRng,
) -> Result<f64> {
    let z = env.deploy(theta, 1, rng)?;
    let loss = env.loss(&z[0], theta)?;
    ledger.record(level, theta.clone(), vec![loss]);
    Ok(loss)
}

/// One-sample point estimate of the risk at `theta`: deploy, observe one
/// sample, return its loss. Unbiased for the true risk; recorded under the
/// `estimate_pr` level.
pub fn estimate_pr(
    env: &mut Environment,
    theta: &Vector,
    ledger: &mut RegretLedger,
    rng: &mut SeededRng,
) -> Result<f64> {
    query_loss(env, theta, Level::EstimatePr, ledger, rng)
}

/// Single-level bandit optimizer for risks convex in theta (the caller's
/// responsibility, documented per environment). Runs `t_steps` projected
/// two-point steps with delta = sqrt(d/t), eta = 1/sqrt(d t), consuming
/// exactly 2 t samples, and returns the mean iterate.
pub fn minimize_convex_pr(
    env: &mut Environment,
    t_steps: usize,
    ledger: &mut RegretLedger,
    rng: &mut SeededRng,
) -> Result<Vector> {
    let space = env.theta_space().clone();
    let d = space.dim();
    let (delta, eta) = convex_schedule(d, t_steps)?;
    let r = space.min_half_extent();
    let shrunk = space.scaled_about_center(1.0 - delta)?;
    let mut theta = space.center().clone();
    let mut sum = Vector::zeros(d);
    for _ in 0..t_steps {
        let u = sample_unit_sphere(d, rng)?;
        let offset = u.scaled(delta * r);
        let f_plus = query_loss(env, &theta.plus(&offset), Level::Outer, ledger, rng)?;
        let f_minus = query_loss(env, &theta.minus(&offset), Level::Outer, ledger, rng)?;
        let g = two_point_gradient(d, delta * r, f_plus, f_minus, &u)?;
        sum = sum.plus(&theta);
        theta = space.project_shrunk(&theta.minus(&g.scaled(eta)), delta)?;
        debug_assert!(shrunk.contains(&theta, 1e-9));
    }
    Ok(sum.scaled(1.0 / t_steps as f64))
}

/// What the inner loop learned.
#[derive(Debug, Clone, PartialEq)]
pub struct LearnOutcome {
    /// Mean iterate over the inner horizon.
    pub theta_bar: Vector,
    /// Smaller of the final step's two divergence estimates: an observable
    /// proxy for how well the returned model matches the target.
    pub last_kl: f64,
    /// True when `last_kl` exceeds the configured matching tolerance; the
    /// caller proceeds anyway (failures are probabilistically expected) but
    /// can count them.
    pub warning: bool,
}

/// Learn a model that approximately induces `phi_target`: `cfg.s` projected
/// two-point steps on the estimated divergence between the target and the
/// currently induced distribution, each estimate fitted from `cfg.n_kl`
/// fresh samples. Consumes exactly 2 * cfg.n_kl * cfg.s samples, recorded
/// under the `inner` level.
///
/// The divergence objective must be convex along theta for the guarantee to
/// hold (documented per environment); `cfg.n_kl` is tied to the
/// (eps_kl, p_kl) contract when the config was derived from tolerances, and
/// is taken on faith when overridden.
pub fn learn_model(
    env: &mut Environment,
    phi_target: &Vector,
    cfg: &OptimizerConfig,
    ledger: &mut RegretLedger,
    rng: &mut SeededRng,
) -> Result<LearnOutcome> {
    cfg.validate()?;
    let space = env.theta_space().clone();
    if space.dim() != cfg.d_theta {
        return Err(Error::DimensionMismatch { expected: cfg.d_theta, got: space.dim() });
    }
    if !env.phi_space().contains(phi_target, 1e-9) {
        return Err(Error::OutsideSpace {
            dist: env.phi_space().distance_outside(phi_target),
            tol: 1e-9,
        });
    }
    // Absorb float-rounding residue from perturbed targets (mirrors the
    // deployment tolerance).
    let phi_target = &env.phi_space().project(phi_target);
    let family = env.family().clone();
    let d = space.dim();
    let r = space.min_half_extent();
    let shrunk = space.scaled_about_center(1.0 - cfg.delta_lm)?;
    let mut theta = space.center().clone();
    let mut sum = Vector::zeros(d);
    let mut last_kl = f64::INFINITY;
    for _ in 0..cfg.s {
        let u = sample_unit_sphere(d, rng)?;
        let offset = u.scaled(cfg.delta_lm * r);
        let th_plus = theta.plus(&offset);
        let th_minus = theta.minus(&offset);

        let z_plus = env.deploy(&th_plus, cfg.n_kl, rng)?;
        let losses: Result<Vec<f64>> = z_plus.iter().map(|z| env.loss(z, &th_plus)).collect();
        ledger.record(Level::Inner, th_plus.clone(), losses?);
        let kl_plus = plug_in_kl(&family, phi_target, &z_plus)?.value;

        let z_minus = env.deploy(&th_minus, cfg.n_kl, rng)?;
        let losses: Result<Vec<f64>> = z_minus.iter().map(|z| env.loss(z, &th_minus)).collect();
        ledger.record(Level::Inner, th_minus.clone(), losses?);
        let kl_minus = plug_in_kl(&family, phi_target, &z_minus)?.value;

        let g = two_point_gradient(d, cfg.delta_lm * r, kl_plus, kl_minus, &u)?;
        sum = sum.plus(&theta);
        theta = space.project_shrunk(&theta.minus(&g.scaled(cfg.eta_lm)), cfg.delta_lm)?;
        debug_assert!(shrunk.contains(&theta, 1e-9));
        last_kl = kl_plus.min(kl_minus);
    }
    let theta_bar = sum.scaled(1.0 / cfg.s as f64);
    let warning = !(last_kl <= cfg.tol.eps_lm);
    Ok(LearnOutcome { theta_bar, last_kl, warning })
}

/// Per-outer-step diagnostics of a two-level run.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceStep {
    /// Iterate before this step's update.
    pub phi: Vector,
    /// Norm of the two-point gradient estimate.
    pub grad_norm: f64,
    /// Final divergence estimates reported by the two inner runs.
    pub kl_plus: f64,
    pub kl_minus: f64,
    pub warn_plus: bool,
    pub warn_minus: bool,
}

/// Everything a two-level run produces.
#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    /// Model learned at the averaged distribution parameter.
    pub theta_bar: Vector,
    /// Mean of the outer iterates.
    pub phi_bar: Vector,
    pub ledger: RegretLedger,
    pub trace: Vec<TraceStep>,
    /// The headline identity 2 (2 n_kl s + 1) t.
    pub paper_n: u64,
    /// `paper_n` plus the final inner run's samples; equals the ledger total.
    pub total_n: u64,
    /// Inner runs (out of 2t + 1) that ended above the matching tolerance.
    pub lm_warnings: usize,
}

/// Two-level bandit optimizer for risks that are convex in the distribution
/// parameter (the reparameterized risk; caller's responsibility, documented
/// per environment). Each of `cfg.t` outer steps learns models at a
/// symmetric pair of perturbed targets, queries one loss sample at each, and
/// takes a projected two-point step; a final inner run at the averaged
/// target produces the returned model.
pub fn minimize_pr(
    env: &mut Environment,
    cfg: &OptimizerConfig,
    rng: &mut SeededRng,
) -> Result<RunResult> {
    cfg.validate()?;
    let space = env.phi_space().clone();
    if space.dim() != cfg.d_phi {
        return Err(Error::DimensionMismatch { expected: cfg.d_phi, got: space.dim() });
    }
    let d = space.dim();
    let r = space.min_half_extent();
    let shrunk = space.scaled_about_center(1.0 - cfg.delta)?;
    let mut ledger = RegretLedger::new();
    let mut phi = space.center().clone();
    let mut sum = Vector::zeros(d);
    let mut trace = Vec::with_capacity(cfg.t);
    let mut lm_warnings = 0usize;
    for _ in 0..cfg.t {
        let u = sample_unit_sphere(d, rng)?;
        let offset = u.scaled(cfg.delta * r);
        let phi_plus = phi.plus(&offset);
        let phi_minus = phi.minus(&offset);

        let out_plus = learn_model(env, &phi_plus, cfg, &mut ledger, rng)?;
        let f_plus = query_loss(env, &out_plus.theta_bar, Level::EstimatePr, &mut ledger, rng)?;
        let out_minus = learn_model(env, &phi_minus, cfg, &mut ledger, rng)?;
        let f_minus = query_loss(env, &out_minus.theta_bar, Level::EstimatePr, &mut ledger, rng)?;

        let g = two_point_gradient(d, cfg.delta * r, f_plus, f_minus, &u)?;
        lm_warnings += usize::from(out_plus.warning) + usize::from(out_minus.warning);
        trace.push(TraceStep {
            phi: phi.clone(),
            grad_norm: g.norm(),
            kl_plus: out_plus.last_kl,
            kl_minus: out_minus.last_kl,
            warn_plus: out_plus.warning,
            warn_minus: out_minus.warning,
        });
        sum = sum.plus(&phi);
        phi = space.project_shrunk(&phi.minus(&g.scaled(cfg.eta)), cfg.delta)?;
        debug_assert!(shrunk.contains(&phi, 1e-9));
    }
    let phi_bar = sum.scaled(1.0 / cfg.t as f64);
    let final_run = learn_model(env, &phi_bar, cfg, &mut ledger, rng)?;
    lm_warnings += usize::from(final_run.warning);

    let paper_n = cfg.paper_n();
    let total_n = cfg.total_n();
    assert_eq!(
        ledger.total_samples(),
        total_n,
        "ledger total must match the sample-count identity"
    );
    Ok(RunResult {
        theta_bar: final_run.theta_bar,
        phi_bar,
        ledger,
        trace,
        paper_n,
        total_n,
        lm_warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Tolerances;
    use crate::environment::{catalog, LossSign};
    use crate::family::DistributionFamily;
    use crate::ledger::compute_regret;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn sc(x: f64) -> Vector {
        Vector::scalar(x).unwrap()
    }

    /// Base config with feasible tolerances, meant to be overridden.
    fn small_cfg(family: &DistributionFamily) -> OptimizerConfig {
        let tol = Tolerances {
            eps: 0.5,
            p: 0.1,
            eps_lm: 0.05,
            p_lm: 0.1,
            eps_kl: 0.002,
            p_kl: 0.1,
        };
        OptimizerConfig::from_tolerances(family, 1, 1, tol).unwrap()
    }

    #[test]
    fn two_point_gradient_matches_hand_values() {
        let g = two_point_gradient(1, 0.1, 1.2, 0.8, &sc(1.0)).unwrap();
        assert_abs_diff_eq!(g.as_scalar().unwrap(), 2.0, epsilon = 1e-15);

        // Symmetric cancellation.
        let g = two_point_gradient(3, 0.2, 0.7, 0.7, &Vector::new(vec![1.0, 0.0, 0.0]).unwrap())
            .unwrap();
        assert!(g.iter().all(|v| *v == 0.0));

        assert!(two_point_gradient(1, 0.0, 1.0, 0.0, &sc(1.0)).is_err());
        assert!(two_point_gradient(1, -0.1, 1.0, 0.0, &sc(1.0)).is_err());
        assert!(two_point_gradient(1, 0.1, 1.0, 0.0, &sc(0.9)).is_err()); // not unit
        assert!(two_point_gradient(2, 0.1, 1.0, 0.0, &sc(1.0)).is_err()); // dim mismatch
    }

    #[test]
    fn two_point_gradient_is_unbiased_for_linear_functions() {
        // f(x) = a . x sampled at theta +/- delta u: the estimator mean over
        // sphere directions is exactly a (smoothing a linear function leaves
        // its gradient unchanged). CLT band 3 d ||a|| / sqrt(n).
        let a = Vector::new(vec![0.5, -0.2, 0.1]).unwrap();
        let d = 3;
        let delta = 0.05;
        let n = 100_000;
        let mut rng = SeededRng::new(7, 0);
        let mut mean = Vector::zeros(d);
        for _ in 0..n {
            let u = sample_unit_sphere(d, &mut rng).unwrap();
            let x = u.scaled(delta);
            let f_plus = a.dot(&x);
            let f_minus = a.dot(&x.scaled(-1.0));
            let g = two_point_gradient(d, delta, f_plus, f_minus, &u).unwrap();
            mean = mean.plus(&g);
        }
        mean = mean.scaled(1.0 / n as f64);
        let band = 3.0 * d as f64 * a.norm() / (n as f64).sqrt();
        assert!(
            mean.distance(&a) <= band,
            "mean {mean} vs true {a}, band {band}"
        );
    }

    #[test]
    fn point_risk_estimates_are_recorded_and_unbiased() {
        let mut env = catalog::example1_square(LossSign::Positive, 1.0).unwrap();
        let mut ledger = RegretLedger::new();
        let mut rng = SeededRng::new(11, 0);

        // Degenerate deployments: phi = 0 and phi = 1 give deterministic
        // perfect fits.
        for _ in 0..10 {
            assert_eq!(estimate_pr(&mut env, &sc(0.0), &mut ledger, &mut rng).unwrap(), 0.0);
            assert_eq!(estimate_pr(&mut env, &sc(1.0), &mut ledger, &mut rng).unwrap(), 0.0);
        }
        assert_eq!(ledger.total_samples(), 20);
        assert_eq!(ledger.samples_at_level(Level::EstimatePr), 20);

        // Interior point: mean of many one-sample estimates near the true
        // risk 0.25 (3 sigma of the Bernoulli loss mixture is under 0.006
        // at 10^5 calls).
        let n = 100_000;
        let mut acc = 0.0;
        for _ in 0..n {
            acc += estimate_pr(&mut env, &sc(0.5), &mut ledger, &mut rng).unwrap();
        }
        let mean = acc / n as f64;
        assert!((mean - 0.25).abs() <= 0.006, "mean {mean}");
        assert_eq!(env.samples_drawn(), 20 + n);
    }

    #[test]
    fn convex_optimizer_ignores_a_flat_objective() {
        // Identity-map Gaussian location: the induced noise distribution
        // around theta never changes, so the risk is constant and regret is
        // pure noise around zero.
        let mut env = catalog::gaussian_affine(0.0, 1.0, 0.1).unwrap();
        let pr_opt = env.true_pr(&sc(0.5)).unwrap();
        assert_abs_diff_eq!(pr_opt, 0.01, epsilon = 1e-12);
        let mut ledger = RegretLedger::with_pr_opt(pr_opt);
        let mut rng = SeededRng::new(12, 0);
        let t = 10_000;
        let theta_bar = minimize_convex_pr(&mut env, t, &mut ledger, &mut rng).unwrap();
        assert!(env.theta_space().contains(&theta_bar, 0.0));
        assert_eq!(ledger.total_samples(), 2 * t as u64);
        assert_eq!(ledger.samples_at_level(Level::Outer), 2 * t as u64);
        // Loss std is sqrt(2) sigma^2 = 1.4e-2; a 4-sigma band on R_N.
        let band = 4.0 * 2f64.sqrt() * 0.01 * (2.0 * t as f64).sqrt();
        let r_n = ledger.final_regret().unwrap();
        assert!(r_n.abs() <= band, "R_N = {r_n}, band {band}");
    }

    #[test]
    fn convex_optimizer_finds_a_quadratic_minimum() {
        // Flat map at 0.3: risk is (theta - 0.3)^2 + sigma^2, minimized at
        // 0.3.
        let mut env = catalog::gaussian_affine(0.3, 0.0, 0.1).unwrap();
        let mut ledger = RegretLedger::new();
        let mut rng = SeededRng::new(13, 0);
        let theta_bar = minimize_convex_pr(&mut env, 10_000, &mut ledger, &mut rng).unwrap();
        let err = (theta_bar.as_scalar().unwrap() - 0.3).abs();
        assert!(err <= 0.05, "theta_bar {theta_bar}, error {err}");
    }

    #[test]
    fn convex_optimizer_rejects_degenerate_horizons() {
        let mut env = catalog::gaussian_affine(0.3, 0.0, 0.1).unwrap();
        let mut ledger = RegretLedger::new();
        let mut rng = SeededRng::new(14, 0);
        assert!(minimize_convex_pr(&mut env, 0, &mut ledger, &mut rng).is_err());
        // t = d would give delta = 1.
        assert!(minimize_convex_pr(&mut env, 1, &mut ledger, &mut rng).is_err());
    }

    #[test]
    fn learn_model_matches_an_interior_target() {
        // Identity map: success is measurable directly through phi_of. The
        // divergence expression's minimum sits 1/c = 0.02 below the target,
        // so the matched point lands near 0.53; the 0.05 tolerance absorbs
        // that systematic offset.
        let mut env = catalog::uniform_exp().unwrap();
        let cfg = small_cfg(env.family())
            .with_s(1500)
            .unwrap()
            .with_n_kl(50)
            .unwrap()
            .with_delta_lm(0.1)
            .unwrap()
            .with_eta_lm(5e-4)
            .unwrap();
        let mut ledger = RegretLedger::new();
        let mut rng = SeededRng::new(15, 0);
        let out = learn_model(&mut env, &sc(0.55), &cfg, &mut ledger, &mut rng).unwrap();
        let phi = env.phi_of(&out.theta_bar).unwrap();
        let err = (phi.as_scalar().unwrap() - 0.55).abs();
        assert!(err <= 0.05, "phi(theta_bar) = {phi}, error {err}");
        assert_eq!(ledger.total_samples(), cfg.inner_run_n());
        assert_eq!(ledger.samples_at_level(Level::Inner), cfg.inner_run_n());
        assert_eq!(env.samples_drawn(), cfg.inner_run_n());
    }

    #[test]
    fn learn_model_stays_put_when_already_matched() {
        // Target the parameter induced by the center and start there. The
        // iterate settles a hair below the start (the expression's minimum
        // is offset by -1/c) but stays within a few hundredths.
        let mut env = catalog::uniform_exp().unwrap();
        let cfg = small_cfg(env.family())
            .with_s(800)
            .unwrap()
            .with_n_kl(50)
            .unwrap()
            .with_delta_lm(0.1)
            .unwrap()
            .with_eta_lm(5e-4)
            .unwrap();
        let target = env.phi_of(env.theta_space().center()).unwrap();
        let mut ledger = RegretLedger::new();
        let mut rng = SeededRng::new(16, 0);
        let out = learn_model(&mut env, &target, &cfg, &mut ledger, &mut rng).unwrap();
        let drift = out.theta_bar.distance(env.theta_space().center());
        assert!(drift <= 0.03, "drifted {drift}");
        assert!(out.last_kl <= cfg.tol.eps_lm, "last estimate {}", out.last_kl);
        assert!(!out.warning);
    }

    #[test]
    fn learn_model_rejects_targets_outside_the_space() {
        let mut env = catalog::uniform_exp().unwrap();
        let cfg = small_cfg(env.family()).with_s(5).unwrap().with_n_kl(5).unwrap();
        let mut ledger = RegretLedger::new();
        let mut rng = SeededRng::new(17, 0);
        assert!(matches!(
            learn_model(&mut env, &sc(1.5), &cfg, &mut ledger, &mut rng),
            Err(Error::OutsideSpace { .. })
        ));
    }

    #[test]
    fn two_level_run_matches_the_sample_identity_and_trace_contract() {
        let mut env = catalog::example1_square(LossSign::Negative, 1.0).unwrap();
        let cfg = small_cfg(env.family())
            .with_t(3)
            .unwrap()
            .with_s(5)
            .unwrap()
            .with_n_kl(10)
            .unwrap();
        let mut rng = SeededRng::new(18, 0);
        let result = minimize_pr(&mut env, &cfg, &mut rng).unwrap();
        assert_eq!(result.paper_n, 606);
        assert_eq!(result.total_n, 706);
        assert_eq!(result.ledger.total_samples(), 706);
        assert_eq!(env.samples_drawn(), 706);
        assert_eq!(result.trace.len(), 3);
        assert!(env.theta_space().contains(&result.theta_bar, 1e-12));
        assert!(env.phi_space().contains(&result.phi_bar, 1e-12));
        // 6 estimate_pr samples (two per outer step), 700 inner.
        assert_eq!(result.ledger.samples_at_level(Level::EstimatePr), 6);
        assert_eq!(result.ledger.samples_at_level(Level::Inner), 700);
    }

    #[test]
    fn identical_seeds_reproduce_runs_bit_for_bit() {
        let cfg = {
            let env = catalog::example1_square(LossSign::Negative, 1.0).unwrap();
            small_cfg(env.family())
                .with_t(4)
                .unwrap()
                .with_s(6)
                .unwrap()
                .with_n_kl(8)
                .unwrap()
        };
        let run = |seed: u64| {
            let mut env = catalog::example1_square(LossSign::Negative, 1.0).unwrap();
            let mut rng = SeededRng::new(seed, 0);
            minimize_pr(&mut env, &cfg, &mut rng).unwrap()
        };
        let a = run(42);
        let b = run(42);
        assert_eq!(a, b);
        let c = run(43);
        assert_ne!(a.trace, c.trace);
    }

    #[test]
    fn averaged_iterate_obeys_the_regret_style_bound() {
        // On the environment whose reparameterized risk is convex, the risk
        // of the averaged target is controlled by the average of the outer
        // point estimates plus slack for perturbation width, estimator
        // noise, and inner mismatch.
        let mut env = catalog::example1_square(LossSign::Negative, 1.0).unwrap();
        let cfg = small_cfg(env.family())
            .with_t(150)
            .unwrap()
            .with_s(40)
            .unwrap()
            .with_n_kl(40)
            .unwrap()
            .with_delta(0.1)
            .unwrap()
            .with_eta(0.02)
            .unwrap()
            .with_delta_lm(0.2)
            .unwrap()
            .with_eta_lm(0.08)
            .unwrap();
        let mut rng = SeededRng::new(19, 0);
        let result = minimize_pr(&mut env, &cfg, &mut rng).unwrap();
        let oracle = env.brute_force_opt(1e-4).unwrap();

        // Reparameterized risk at the averaged target, via the exact map
        // inverse (sqrt on [0,1]).
        let phi_bar = result.phi_bar.as_scalar().unwrap();
        let inducer = sc(phi_bar.max(0.0).sqrt());
        let lhs = env.true_pr(&inducer).unwrap() - oracle.pr_opt;

        let outer_losses = result.ledger.losses_at_level(Level::EstimatePr);
        let outer_regret: f64 =
            outer_losses.iter().map(|l| l - oracle.pr_opt).sum::<f64>();
        let rhs = outer_regret / outer_losses.len() as f64 + 0.1;
        assert!(
            lhs <= rhs,
            "averaging bound violated: lhs {lhs}, outer mean excess {}",
            outer_regret / outer_losses.len() as f64
        );
        assert!(lhs >= -1e-9, "risk below the oracle optimum: {lhs}");
    }

    #[test]
    fn two_point_estimate_matches_the_central_difference_on_risk_queries() {
        // Fix the iterate and the (exact) inducing models of its two
        // perturbed targets; over resampled directions and fresh one-sample
        // risk queries, the estimator mean equals the central finite
        // difference of the reparameterized risk.
        let mut env = catalog::example1_square(LossSign::Negative, 1.0).unwrap();
        let phi_t = 0.55;
        let delta_eff = 0.05;
        let th = |phi: f64| sc(phi.sqrt());
        let fd = (env.true_pr(&th(phi_t + delta_eff)).unwrap()
            - env.true_pr(&th(phi_t - delta_eff)).unwrap())
            / (2.0 * delta_eff);

        let mut rng = SeededRng::new(20, 0);
        let mut ledger = RegretLedger::new();
        let n = 200_000;
        let (mut mean, mut m2) = (0.0, 0.0);
        for i in 0..n {
            let u = sample_unit_sphere(1, &mut rng).unwrap();
            let phi_plus = phi_t + delta_eff * u.as_scalar().unwrap();
            let phi_minus = phi_t - delta_eff * u.as_scalar().unwrap();
            let f_plus = estimate_pr(&mut env, &th(phi_plus), &mut ledger, &mut rng).unwrap();
            let f_minus = estimate_pr(&mut env, &th(phi_minus), &mut ledger, &mut rng).unwrap();
            let g = two_point_gradient(1, delta_eff, f_plus, f_minus, &u)
                .unwrap()
                .as_scalar()
                .unwrap();
            let delta = g - mean;
            mean += delta / (i + 1) as f64;
            m2 += delta * (g - mean);
        }
        let se = (m2 / (n as f64 - 1.0)).sqrt() / (n as f64).sqrt();
        assert!(
            (mean - fd).abs() <= 3.0 * se,
            "estimator mean {mean}, central difference {fd}, 3se {}",
            3.0 * se
        );
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]

        // The 2(2 n_kl s + 1) t + 2 n_kl s identity holds exactly for any
        // horizon triple.
        #[test]
        fn sample_accounting_is_exact(t in 1usize..4, s in 1usize..5, n_kl in 1usize..6) {
            let mut env = catalog::example1_square(LossSign::Positive, 1.0).unwrap();
            let cfg = small_cfg(env.family())
                .with_t(t).unwrap()
                .with_s(s).unwrap()
                .with_n_kl(n_kl).unwrap();
            let mut rng = SeededRng::new(100 + t as u64, 0);
            let result = minimize_pr(&mut env, &cfg, &mut rng).unwrap();
            let expected = 2 * (2 * n_kl as u64 * s as u64 + 1) * t as u64
                + 2 * n_kl as u64 * s as u64;
            prop_assert_eq!(result.total_n, expected);
            prop_assert_eq!(env.samples_drawn(), expected);
            prop_assert_eq!(result.ledger.total_samples(), expected);

            // Regret series is well-formed once an optimum is supplied.
            let mut ledger = result.ledger;
            ledger.set_pr_opt(0.0);
            let series = compute_regret(&ledger).unwrap();
            prop_assert_eq!(series.len() as u64, expected);
            prop_assert!(series.windows(2).all(|w| w[1].0 == w[0].0 + 1));
        }
    }
}
