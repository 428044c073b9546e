//! Monte-Carlo calibration of the divergence estimator's sample-complexity
//! constant: find the smallest c_cal whose implied sample size keeps the
//! worst-case empirical failure rate at or below the contract probability.

use crate::divergence::{n_kl_from_constant, worst_failure_rate, KLCalibration};
use crate::error::{Error, Result};
use crate::family::DistributionFamily;
use crate::rng::SeededRng;
use crate::vector::Vector;

/// Give up after this many doublings of the constant.
pub const MAX_DOUBLINGS: usize = 30;
/// Hard cap on the per-estimate sample size the search will simulate; a
/// contract that still fails here (e.g. an infinite true divergence on the
/// grid) is treated as divergent rather than ground through.
pub const MAX_CALIBRATION_N: usize = 10_000_000;
const BISECTION_STEPS: usize = 6;

/// Calibrate c_cal for `family` at the (eps, p) contract over a grid of
/// (true parameter, target parameter) pairs, `trials` Monte-Carlo trials per
/// pair per evaluation.
///
/// The search doubles or halves the constant until the pass/fail boundary is
/// bracketed, then narrows the bracket geometrically to a few percent. The
/// returned calibration records the failure rate measured at the final
/// constant. Deterministic for a fixed `rng` seed.
pub fn calibrate_kl(
    family: &DistributionFamily,
    grid: &[(Vector, Vector)],
    trials: usize,
    eps: f64,
    p: f64,
    rng: &mut SeededRng,
) -> Result<KLCalibration> {
    if grid.is_empty() || trials == 0 {
        return Err(Error::InvalidParameter("calibration needs a grid and trials".into()));
    }
    if !(eps > 0.0) || !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidParameter(
            "calibration needs eps > 0 and p in (0, 1)".into(),
        ));
    }

    let measure = |c: f64, rng: &mut SeededRng| -> Result<f64> {
        let n = n_kl_from_constant(c, eps, p)?;
        if n > MAX_CALIBRATION_N {
            return Err(Error::CalibrationDiverged(format!(
                "per-estimate sample size {n} exceeds the calibration cap {MAX_CALIBRATION_N}"
            )));
        }
        Ok(worst_failure_rate(family, grid, n, eps, trials, rng)?.0)
    };

    let mut c = 1.0;
    let mut rate = measure(c, rng)?;
    let (mut bad, mut good, mut good_rate);
    if rate <= p {
        // Passing already: walk down to bracket the boundary from below.
        (good, good_rate) = (c, rate);
        loop {
            c /= 2.0;
            rate = measure(c, rng)?;
            if rate > p {
                bad = c;
                break;
            }
            (good, good_rate) = (c, rate);
            if good < 2f64.powi(-(MAX_DOUBLINGS as i32)) {
                // Even a vanishing constant passes (huge eps): done.
                return Ok(finish(family, good, eps, p, trials, grid, good_rate));
            }
        }
    } else {
        // Failing: walk up until the contract first holds.
        let mut doublings = 0;
        loop {
            bad = c;
            c *= 2.0;
            doublings += 1;
            if doublings > MAX_DOUBLINGS {
                return Err(Error::CalibrationDiverged(format!(
                    "failure rate still {rate:.4} > {p} after {MAX_DOUBLINGS} doublings"
                )));
            }
            rate = measure(c, rng)?;
            if rate <= p {
                (good, good_rate) = (c, rate);
                break;
            }
        }
    }

    // Geometric bisection tightens the bracket to ~2% of the constant.
    for _ in 0..BISECTION_STEPS {
        let mid = (bad * good).sqrt();
        let rate = measure(mid, rng)?;
        if rate <= p {
            (good, good_rate) = (mid, rate);
        } else {
            bad = mid;
        }
    }
    Ok(finish(family, good, eps, p, trials, grid, good_rate))
}

fn finish(
    family: &DistributionFamily,
    c_cal: f64,
    eps: f64,
    p: f64,
    trials: usize,
    grid: &[(Vector, Vector)],
    measured_failure: f64,
) -> KLCalibration {
    KLCalibration {
        family: family.clone(),
        c_cal,
        eps,
        p,
        trials,
        grid: grid.to_vec(),
        measured_failure,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair(a: f64, b: f64) -> (Vector, Vector) {
        (Vector::scalar(a).unwrap(), Vector::scalar(b).unwrap())
    }

    #[test]
    fn bernoulli_search_finds_a_passing_constant() {
        let family = DistributionFamily::BernoulliLabel;
        let grid = [pair(0.2, 0.3), pair(0.5, 0.5), pair(0.8, 0.6)];
        let mut rng = SeededRng::new(31, 0);
        let cal = calibrate_kl(&family, &grid, 400, 0.1, 0.1, &mut rng).unwrap();
        assert!(cal.c_cal > 0.0);
        assert!(cal.measured_failure <= 0.1, "failure {}", cal.measured_failure);
        assert!(cal.n().unwrap() >= 1);
    }

    #[test]
    fn huge_tolerance_needs_a_single_sample() {
        let family = DistributionFamily::BernoulliLabel;
        let grid = [pair(0.4, 0.5)];
        let mut rng = SeededRng::new(32, 0);
        let cal = calibrate_kl(&family, &grid, 50, 1e6, 0.05, &mut rng).unwrap();
        assert_eq!(cal.n().unwrap(), 1);
        assert_eq!(cal.measured_failure, 0.0);
    }

    #[test]
    fn same_seed_reproduces_the_constant() {
        let family = DistributionFamily::BernoulliLabel;
        let grid = [pair(0.3, 0.4), pair(0.6, 0.6)];
        let a = calibrate_kl(&family, &grid, 200, 0.1, 0.1, &mut SeededRng::new(33, 0)).unwrap();
        let b = calibrate_kl(&family, &grid, 200, 0.1, 0.1, &mut SeededRng::new(33, 0)).unwrap();
        assert_eq!(a.c_cal, b.c_cal);
        assert_eq!(a.measured_failure, b.measured_failure);
    }

    #[test]
    fn unreachable_contract_diverges() {
        // Sampling at the support endpoint makes the true divergence from an
        // interior target infinite, so every estimate misses by infinity and
        // no sample size can pass; the search must stop at its cap.
        let family = DistributionFamily::BernoulliLabel;
        let grid = [pair(1.0, 0.5)];
        let mut rng = SeededRng::new(34, 0);
        let err = calibrate_kl(&family, &grid, 2, 0.1, 0.05, &mut rng).unwrap_err();
        assert!(matches!(err, Error::CalibrationDiverged(_)), "got {err:?}");
    }

    #[test]
    fn invalid_arguments_are_rejected() {
        let family = DistributionFamily::BernoulliLabel;
        let mut rng = SeededRng::new(35, 0);
        assert!(calibrate_kl(&family, &[], 100, 0.1, 0.05, &mut rng).is_err());
        assert!(calibrate_kl(&family, &[pair(0.5, 0.5)], 0, 0.1, 0.05, &mut rng).is_err());
        assert!(calibrate_kl(&family, &[pair(0.5, 0.5)], 10, -1.0, 0.05, &mut rng).is_err());
    }
}
