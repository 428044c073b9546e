//! Divergence between induced distributions: closed forms per family, a
//! plug-in estimator over deployment samples, and the calibration record that
//! ties the estimator's sample size to an accuracy/confidence contract.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::DistributionFamily;
use crate::rng::SeededRng;
use crate::vector::Vector;

/// Closed-form divergence KL(phi1 || phi2) between two members of the same
/// family.
///
/// For the uniform-support family this is the working expression
/// exp(c (phi2 - phi1)) * c * (phi2 - phi1): a pseudo-divergence (it differs
/// from the textbook uniform-vs-uniform KL, which is a log support ratio and
/// infinite on support mismatch). It is zero only at phi1 = phi2 but goes
/// negative for phi2 < phi1; matching drives its magnitude to zero from
/// either side, which is all the model-matching optimizer needs.
pub fn kl_closed_form(family: &DistributionFamily, phi1: &Vector, phi2: &Vector) -> Result<f64> {
    if phi1.dim() != phi2.dim() {
        return Err(Error::DimensionMismatch { expected: phi1.dim(), got: phi2.dim() });
    }
    match family {
        DistributionFamily::BernoulliLabel => {
            let p = phi1.as_scalar()?;
            let q = phi2.as_scalar()?;
            for v in [p, q] {
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::InvalidParameter(format!(
                        "bernoulli parameter {v} outside [0, 1]"
                    )));
                }
            }
            if p == q {
                return Ok(0.0);
            }
            // Support mismatch: the reference distribution puts zero mass on
            // an outcome the first one hits.
            if (q == 0.0 && p > 0.0) || (q == 1.0 && p < 1.0) {
                return Ok(f64::INFINITY);
            }
            let term = |a: f64, b: f64| if a == 0.0 { 0.0 } else { a * (a / b).ln() };
            Ok(term(p, q) + term(1.0 - p, 1.0 - q))
        }
        DistributionFamily::GaussianMean { sigma } => {
            let d2: f64 = phi1.minus(phi2).iter().map(|v| v * v).sum();
            Ok(d2 / (2.0 * sigma * sigma))
        }
        DistributionFamily::PoissonRate => {
            let a = phi1.as_scalar()?;
            let b = phi2.as_scalar()?;
            if a <= 0.0 || b <= 0.0 {
                return Err(Error::InvalidParameter("poisson rates must be positive".into()));
            }
            Ok(b - a + a * (a / b).ln())
        }
        DistributionFamily::UniformExp { c } => {
            let a = phi1.as_scalar()?;
            let b = phi2.as_scalar()?;
            let gap = b - a;
            Ok((c * gap).exp() * c * gap)
        }
    }
}

/// Core sample-size rule: ceil(c_cal * ln(2 / p) / eps^2).
pub fn n_kl_from_constant(c_cal: f64, eps: f64, p: f64) -> Result<usize> {
    if !(c_cal > 0.0 && c_cal.is_finite()) {
        return Err(Error::InvalidParameter("calibration constant must be positive".into()));
    }
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidParameter("divergence tolerance must be positive".into()));
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidParameter("failure probability must lie in (0, 1)".into()));
    }
    let raw = c_cal * (2.0 / p).ln() / (eps * eps);
    if !raw.is_finite() || raw > 1e12 {
        return Err(Error::InfeasibleConfig(format!(
            "divergence estimation would need {raw:.3e} samples"
        )));
    }
    Ok((raw.ceil() as usize).max(1))
}

/// Samples required for |estimate - truth| <= eps with probability >= 1 - p,
/// using the family's calibrated constant.
pub fn n_kl(family: &DistributionFamily, eps: f64, p: f64) -> Result<usize> {
    let cal = KLCalibration::builtin(family)
        .ok_or_else(|| Error::CalibrationMissing(family.name().into()))?;
    n_kl_from_constant(cal.c_cal, eps, p)
}

/// Result of one plug-in divergence estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct KLEstimate {
    /// Closed-form divergence of the target against the estimated parameter,
    /// KL(target || phi_hat).
    pub value: f64,
    /// Target parameter the estimate was taken against.
    pub target: Vector,
    /// Maximum-likelihood parameter of the sampled distribution, clamped
    /// away from closed range edges by 1 / (2n).
    pub phi_hat: Vector,
    /// Samples consumed.
    pub n: usize,
    /// Whether the interior clamp moved the raw estimate.
    pub clamped: bool,
}

/// Plug-in divergence estimate without a sample-size contract: fit the family
/// parameter by maximum likelihood, clamp it into the interior by 1/(2n), and
/// evaluate KL(phi_target || phi_hat) in closed form. Optimizer loops call
/// this directly; their configuration fixes the sample size up front.
pub fn plug_in_kl(
    family: &DistributionFamily,
    phi_target: &Vector,
    samples: &[Vector],
) -> Result<KLEstimate> {
    if samples.is_empty() {
        return Err(Error::InsufficientSamples { needed: 1, got: 0 });
    }
    let n = samples.len();
    let raw = family.mle(samples)?;
    let phi_hat = family.clamp_phi(&raw, 1.0 / (2.0 * n as f64));
    let clamped = phi_hat != raw;
    let value = kl_closed_form(family, phi_target, &phi_hat)?;
    Ok(KLEstimate { value, target: phi_target.clone(), phi_hat, n, clamped })
}

/// Contract-checked divergence estimate: requires at least
/// n_kl(family, eps_kl, p_kl) samples, then returns the plug-in estimate,
/// which at the calibrated size satisfies |estimate - truth| <= eps_kl with
/// probability >= 1 - p_kl over the calibration grid.
pub fn estimate_kl(
    family: &DistributionFamily,
    phi_target: &Vector,
    samples: &[Vector],
    eps_kl: f64,
    p_kl: f64,
) -> Result<KLEstimate> {
    let needed = n_kl(family, eps_kl, p_kl)?;
    if samples.len() < needed {
        return Err(Error::InsufficientSamples { needed, got: samples.len() });
    }
    plug_in_kl(family, phi_target, samples)
}

/// Worst-case empirical failure rate of the plug-in estimator over a grid of
/// (true phi, target phi) pairs: for each pair, the fraction of trials where
/// |KL(target || MLE of n draws at phi) - KL(target || phi)| > eps. Returns
/// the worst rate and the index of the pair attaining it.
pub fn worst_failure_rate(
    family: &DistributionFamily,
    grid: &[(Vector, Vector)],
    n: usize,
    eps: f64,
    trials: usize,
    rng: &mut SeededRng,
) -> Result<(f64, usize)> {
    if grid.is_empty() || trials == 0 || n == 0 {
        return Err(Error::InvalidParameter("calibration needs a grid, trials, and n > 0".into()));
    }
    let mut worst = (0.0f64, 0usize);
    for (idx, (phi_true, target)) in grid.iter().enumerate() {
        family.check_phi(phi_true)?;
        let truth = kl_closed_form(family, target, phi_true)?;
        let mut failures = 0usize;
        let mut samples = Vec::with_capacity(n);
        for _ in 0..trials {
            samples.clear();
            for _ in 0..n {
                samples.push(family.sample(phi_true, rng)?);
            }
            let est = plug_in_kl(family, target, &samples)?;
            if (est.value - truth).abs() > eps {
                failures += 1;
            }
        }
        let rate = failures as f64 / trials as f64;
        if rate > worst.0 {
            worst = (rate, idx);
        }
    }
    Ok(worst)
}

/// A frozen calibration: the constant c_cal was measured so that
/// n_kl_from_constant(c_cal, eps, p) samples keep the worst-case failure rate
/// over `grid` at or below p across `trials` repetitions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KLCalibration {
    pub family: DistributionFamily,
    pub c_cal: f64,
    pub eps: f64,
    pub p: f64,
    pub trials: usize,
    pub grid: Vec<(Vector, Vector)>,
    /// Worst-case failure rate observed at the calibrated sample size.
    pub measured_failure: f64,
}

impl KLCalibration {
    pub fn n(&self) -> Result<usize> {
        n_kl_from_constant(self.c_cal, self.eps, self.p)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = toml::to_string_pretty(self)
            .map_err(|e| Error::Config(format!("serializing calibration: {e}")))?;
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        toml::from_str(&text).map_err(|e| Error::Config(format!("parsing calibration: {e}")))
    }

    /// Constants measured with the CLI's `calibrate` bisection at
    /// (eps 0.1, p 0.05, 2000 trials) and then padded by 1.5x so they
    /// transfer to stricter contracts and fresh grids with margin;
    /// `measured_failure` is the worst grid rate re-measured at the stored
    /// (padded) constant, seed 11. Spot checks at (eps 0.05, p 0.05) and
    /// (eps 0.02, p 0.1) stayed below half the target rate for every family.
    /// Grids cover the local parameter pairs the optimizers actually compare
    /// (a target against nearby induced parameters); wide-separation pairs
    /// would need larger constants but never arise in the inner loop.
    pub fn builtin(family: &DistributionFamily) -> Option<KLCalibration> {
        let pair = |a: f64, b: f64| (Vector::from_raw(vec![a]), Vector::from_raw(vec![b]));
        match family {
            DistributionFamily::BernoulliLabel => Some(KLCalibration {
                family: family.clone(),
                c_cal: 4.196939017614934,
                eps: 0.1,
                p: 0.05,
                trials: 2000,
                grid: vec![
                    pair(0.1, 0.3),
                    pair(0.25, 0.25),
                    pair(0.3, 0.7),
                    pair(0.5, 0.2),
                    pair(0.7, 0.5),
                    pair(0.9, 0.6),
                    pair(0.05, 0.4),
                    pair(0.95, 0.6),
                ],
                measured_failure: 0.0185,
            }),
            DistributionFamily::GaussianMean { sigma } => {
                // Pairs separated by up to one sigma.
                let s = *sigma;
                Some(KLCalibration {
                    family: family.clone(),
                    c_cal: 1.61814119663568,
                    eps: 0.1,
                    p: 0.05,
                    trials: 2000,
                    grid: vec![
                        pair(0.0, s),
                        pair(0.3, 0.3),
                        pair(0.3, 0.3 + 0.5 * s),
                        pair(0.5, 0.5 - s),
                        pair(1.0, 1.0 - 0.25 * s),
                    ],
                    measured_failure: 0.017,
                })
            }
            DistributionFamily::PoissonRate => Some(KLCalibration {
                family: family.clone(),
                c_cal: 0.33288309234872273,
                eps: 0.1,
                p: 0.05,
                trials: 2000,
                grid: vec![
                    pair(1.0, 1.2),
                    pair(1.5, 1.5),
                    pair(1.5, 2.0),
                    pair(2.0, 1.6),
                    pair(3.0, 2.5),
                ],
                measured_failure: 0.016,
            }),
            DistributionFamily::UniformExp { c } => {
                // Local pairs only: the expression's exponential growth makes
                // wide-separation contracts vacuous, and the inner loop only
                // compares a target against nearby induced parameters.
                let gaps = [-0.02, -0.01, 0.0, 0.01, 0.02];
                let mut grid = Vec::new();
                for center in [0.45, 0.5, 0.55] {
                    for g in gaps {
                        grid.push(pair(center, center + g));
                    }
                }
                let _ = c;
                Some(KLCalibration {
                    family: family.clone(),
                    c_cal: 0.6585945601399873,
                    eps: 0.1,
                    p: 0.05,
                    trials: 2000,
                    grid,
                    measured_failure: 0.0125,
                })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn sc(x: f64) -> Vector {
        Vector::scalar(x).unwrap()
    }

    #[test]
    fn bernoulli_kl_matches_hand_values() {
        let fam = DistributionFamily::BernoulliLabel;
        // 0.5 ln(0.5/0.25) + 0.5 ln(0.5/0.75) = 0.5 ln(4/3) + 0.5 ln 2 ... =
        // 0.143841 evaluated directly.
        assert_abs_diff_eq!(
            kl_closed_form(&fam, &sc(0.5), &sc(0.25)).unwrap(),
            0.14384103622589045,
            epsilon = 1e-15
        );
        assert_eq!(kl_closed_form(&fam, &sc(0.3), &sc(0.3)).unwrap(), 0.0);
        // Zero-probability reference outcomes blow up.
        assert!(kl_closed_form(&fam, &sc(0.5), &sc(0.0)).unwrap().is_infinite());
        assert!(kl_closed_form(&fam, &sc(0.5), &sc(1.0)).unwrap().is_infinite());
        // 0 ln 0 = 0 conventions.
        assert!(kl_closed_form(&fam, &sc(0.0), &sc(0.3)).unwrap().is_finite());
        assert_eq!(kl_closed_form(&fam, &sc(0.0), &sc(0.0)).unwrap(), 0.0);
        assert!(kl_closed_form(&fam, &sc(1.1), &sc(0.5)).is_err());
    }

    #[test]
    fn gaussian_and_poisson_kl_match_hand_values() {
        let gauss = DistributionFamily::GaussianMean { sigma: 1.0 };
        assert_abs_diff_eq!(kl_closed_form(&gauss, &sc(0.0), &sc(2.0)).unwrap(), 2.0);
        let gauss_small = DistributionFamily::GaussianMean { sigma: 0.1 };
        // (0.3)^2 / (2 * 0.01) = 4.5
        assert_abs_diff_eq!(
            kl_closed_form(&gauss_small, &sc(0.5), &sc(0.2)).unwrap(),
            4.5,
            epsilon = 1e-12
        );

        let pois = DistributionFamily::PoissonRate;
        // 1 - 2 + 2 ln 2
        assert_abs_diff_eq!(
            kl_closed_form(&pois, &sc(2.0), &sc(1.0)).unwrap(),
            -1.0 + 2.0 * std::f64::consts::LN_2,
            epsilon = 1e-15
        );
        assert!(kl_closed_form(&pois, &sc(0.0), &sc(1.0)).is_err());
    }

    #[test]
    fn uniform_exp_expression_signs() {
        let fam = DistributionFamily::UniformExp { c: 2.0 };
        // exp(2 * -0.2) * 2 * -0.2 = -0.4 e^{-0.4}
        assert_abs_diff_eq!(
            kl_closed_form(&fam, &sc(0.5), &sc(0.3)).unwrap(),
            -0.4 * (-0.4f64).exp(),
            epsilon = 1e-15
        );
        assert_eq!(kl_closed_form(&fam, &sc(0.4), &sc(0.4)).unwrap(), 0.0);
        assert!(kl_closed_form(&fam, &sc(0.3), &sc(0.5)).unwrap() > 0.0);
    }

    #[test]
    fn uniform_exp_expression_is_convex_in_theta_above_the_constant_bound() {
        // Identity map, target phi = 0.9 on theta in [0, 1]: the expression
        // g(theta) = KL(0.9 || theta) has second central differences
        // >= -1e-6 once c >= 2 / max|theta - 0.9| = 2 / 0.9.
        let c = 2.0 / 0.9;
        let fam = DistributionFamily::UniformExp { c };
        let target = sc(0.9);
        let g = |t: f64| kl_closed_form(&fam, &target, &sc(t)).unwrap();
        let h = 0.01;
        for i in 1..=99 {
            let t = i as f64 / 100.0;
            let second = g(t + h) - 2.0 * g(t) + g(t - h);
            assert!(second >= -1e-6, "theta={t}: second difference {second}");
        }
    }

    #[test]
    fn sample_size_rule_matches_hand_values() {
        // ln(40) / 0.01 = 368.88... -> 369
        assert_eq!(n_kl_from_constant(1.0, 0.1, 0.05).unwrap(), 369);
        // ln(2 / (2 e^{-2})) = 2 -> ceil(2 / 1) = 2
        assert_eq!(n_kl_from_constant(1.0, 1.0, 2.0 / std::f64::consts::E.powi(2)).unwrap(), 2);
        assert!(n_kl_from_constant(1.0, 0.0, 0.05).is_err());
        assert!(n_kl_from_constant(1.0, 0.1, 1.5).is_err());
        // Astronomically many samples.
        assert!(n_kl_from_constant(1.0, 1e-9, 0.05).is_err());

        // Family-resolved form uses the calibrated constant:
        // ceil(4.196939017614934 * ln(40) / 0.01) = 1549.
        let bern = DistributionFamily::BernoulliLabel;
        assert_eq!(n_kl(&bern, 0.1, 0.05).unwrap(), 1549);
    }

    #[test]
    fn plug_in_estimate_is_closed_form_at_the_mle() {
        // 40 zeros and 60 ones, target 0.25: MLE 0.6 (interior, unclamped),
        // estimate = KL(0.25 || 0.6).
        let fam = DistributionFamily::BernoulliLabel;
        let mut samples = vec![sc(0.0); 40];
        samples.extend(vec![sc(1.0); 60]);
        let est = plug_in_kl(&fam, &sc(0.25), &samples).unwrap();
        assert_eq!(est.n, 100);
        assert!(!est.clamped);
        assert_abs_diff_eq!(est.phi_hat.as_scalar().unwrap(), 0.6, epsilon = 1e-15);
        let expected = 0.25 * (0.25f64 / 0.6).ln() + 0.75 * (0.75f64 / 0.4).ln();
        assert_abs_diff_eq!(est.value, expected, epsilon = 1e-15);

        // All-ones sample: clamp forces an interior MLE and a finite value.
        let ones = vec![sc(1.0); 20];
        let est = plug_in_kl(&fam, &sc(0.25), &ones).unwrap();
        assert!(est.clamped);
        assert_abs_diff_eq!(est.phi_hat.as_scalar().unwrap(), 1.0 - 1.0 / 40.0);
        assert!(est.value.is_finite());
    }

    #[test]
    fn contract_checked_estimate_enforces_the_sample_floor() {
        let fam = DistributionFamily::BernoulliLabel;
        let samples: Vec<Vector> = (0..100).map(|i| sc((i % 2) as f64)).collect();
        // n_kl(0.1, 0.05) = 1549 > 100.
        match estimate_kl(&fam, &sc(0.5), &samples, 0.1, 0.05) {
            Err(Error::InsufficientSamples { needed: 1549, got: 100 }) => {}
            other => panic!("expected insufficient samples, got {other:?}"),
        }
        // Loose tolerance: 100 samples suffice.
        let est = estimate_kl(&fam, &sc(0.5), &samples, 1.0, 0.5).unwrap();
        assert_abs_diff_eq!(est.value, 0.0);

        // Uncalibrated-family path is impossible: every family ships one.
        let uni = DistributionFamily::UniformExp { c: 2.0 };
        assert!(n_kl(&uni, 0.1, 0.05).is_ok());
    }

    #[test]
    fn estimate_vanishes_at_the_target_with_many_samples() {
        let fam = DistributionFamily::GaussianMean { sigma: 0.1 };
        let phi = sc(0.3);
        let mut rng = SeededRng::new(24, 0);
        let samples: Vec<Vector> =
            (0..20_000).map(|_| fam.sample(&phi, &mut rng).unwrap()).collect();
        let est = plug_in_kl(&fam, &phi, &samples).unwrap();
        // KL ~ (mean error)^2 / (2 sigma^2); mean error ~ sigma/sqrt(n).
        assert!(est.value < 5e-4, "estimate {est:?}");
    }

    #[test]
    fn estimator_error_decays_like_root_n() {
        // Mean |estimate - truth| at n in {100, 1000, 10^4, 10^5} should fit
        // a log-log slope near -1/2.
        let fam = DistributionFamily::BernoulliLabel;
        let phi = sc(0.4);
        let target = sc(0.7);
        let truth = kl_closed_form(&fam, &target, &phi).unwrap();
        let mut rng = SeededRng::new(22, 0);
        let ns = [100usize, 1000, 10_000, 100_000];
        let trials = 60;
        let mut mean_errs = Vec::new();
        for &n in &ns {
            let margin = 1.0 / (2.0 * n as f64);
            let mut acc = 0.0;
            for _ in 0..trials {
                let mut ones = 0usize;
                for _ in 0..n {
                    ones += (rng.uniform() < 0.4) as usize;
                }
                let hat = (ones as f64 / n as f64).clamp(margin, 1.0 - margin);
                acc += (kl_closed_form(&fam, &target, &sc(hat)).unwrap() - truth).abs();
            }
            mean_errs.push(acc / trials as f64);
        }
        let xs: Vec<f64> = ns.iter().map(|n| (*n as f64).ln()).collect();
        let ys: Vec<f64> = mean_errs.iter().map(|e| e.ln()).collect();
        let xm = xs.iter().sum::<f64>() / xs.len() as f64;
        let ym = ys.iter().sum::<f64>() / ys.len() as f64;
        let slope = xs
            .iter()
            .zip(&ys)
            .map(|(x, y)| (x - xm) * (y - ym))
            .sum::<f64>()
            / xs.iter().map(|x| (x - xm) * (x - xm)).sum::<f64>();
        assert!(
            (-0.6..=-0.4).contains(&slope),
            "error decay slope {slope}, errors {mean_errs:?}"
        );
    }

    #[test]
    fn calibration_round_trips_through_toml() {
        let cal = KLCalibration::builtin(&DistributionFamily::BernoulliLabel).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cal.toml");
        cal.save(&path).unwrap();
        let back = KLCalibration::load(&path).unwrap();
        assert_eq!(cal, back);
        assert_eq!(cal.n().unwrap(), 1549);
    }

    #[test]
    fn builtin_calibrations_cover_all_families() {
        for fam in [
            DistributionFamily::BernoulliLabel,
            DistributionFamily::GaussianMean { sigma: 0.1 },
            DistributionFamily::PoissonRate,
            DistributionFamily::UniformExp { c: 50.0 },
        ] {
            let cal = KLCalibration::builtin(&fam).unwrap();
            assert!(!cal.grid.is_empty());
            assert!(cal.n().unwrap() >= 2);
        }
    }

    #[test]
    fn worst_failure_rate_improves_with_samples() {
        let fam = DistributionFamily::BernoulliLabel;
        let grid = vec![(sc(0.4), sc(0.7)), (sc(0.5), sc(0.5))];
        let mut rng = SeededRng::new(23, 0);
        let (coarse, _) = worst_failure_rate(&fam, &grid, 10, 0.1, 200, &mut rng).unwrap();
        let mut rng = SeededRng::new(23, 1);
        let (fine, _) = worst_failure_rate(&fam, &grid, 369, 0.1, 200, &mut rng).unwrap();
        assert!(fine <= coarse, "fine {fine} vs coarse {coarse}");
        assert!(fine <= 0.05, "calibrated failure rate {fine}");
    }

    #[test]
    fn divergence_is_lipschitz_in_theta_for_the_square_map_interior() {
        // g(theta) = KL(phi_target || theta^2) on theta in [0.1, 0.9]:
        // measure the largest difference quotient on a coarse grid, then a
        // 10x finer grid must stay within 10% of it.
        let fam = DistributionFamily::BernoulliLabel;
        let target = sc(0.45);
        let quotients = |pts: usize| -> f64 {
            let (lo, hi) = (0.1, 0.9);
            let mut worst = 0.0f64;
            let mut prev: Option<(f64, f64)> = None;
            for i in 0..=pts {
                let t = lo + (hi - lo) * i as f64 / pts as f64;
                let v = kl_closed_form(&fam, &target, &sc(t * t)).unwrap();
                if let Some((pt, pv)) = prev {
                    worst = worst.max(((v - pv) / (t - pt)).abs());
                }
                prev = Some((t, v));
            }
            worst
        };
        let coarse = quotients(50);
        let fine = quotients(500);
        assert!(fine.is_finite() && coarse.is_finite());
        assert!(fine <= coarse * 1.10, "fine {fine} vs coarse {coarse}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(128))]

        // Pinsker-type inequality for the Bernoulli family: total variation
        // |p - q| is bounded by sqrt(KL / 2) on the open square.
        #[test]
        fn bernoulli_pinsker_bound(p in 0.001f64..0.999, q in 0.001f64..0.999) {
            let fam = DistributionFamily::BernoulliLabel;
            let kl = kl_closed_form(&fam, &sc(p), &sc(q)).unwrap();
            let tv = (p - q).abs();
            prop_assert!(tv <= (kl / 2.0).sqrt() + 1e-12);
        }

        // Nonnegativity and identity-of-indiscernibles for true divergences.
        #[test]
        fn true_divergences_are_nonnegative(a in 0.01f64..0.99, b in 0.01f64..0.99) {
            for fam in [
                DistributionFamily::BernoulliLabel,
                DistributionFamily::GaussianMean { sigma: 0.3 },
                DistributionFamily::PoissonRate,
            ] {
                // Poisson rates must be strictly positive; shift its inputs.
                let shift = if matches!(fam, DistributionFamily::PoissonRate) { 1.0 } else { 0.0 };
                let kl = kl_closed_form(&fam, &sc(a + shift), &sc(b + shift)).unwrap();
                prop_assert!(kl >= 0.0);
                let self_kl = kl_closed_form(&fam, &sc(a + shift), &sc(a + shift)).unwrap();
                prop_assert!(self_kl.abs() < 1e-14);
            }
        }
    }
}
