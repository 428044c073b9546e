//! Numerical diagnostics: convexity classification of the risk along either
//! parameter axis, and the exponential-family curvature condition that is
//! sufficient for the reparameterized risk to be convex in the natural
//! distribution parameter.

use crate::environment::Environment;
use crate::error::{Error, Result};
use crate::family::DistributionFamily;
use crate::rng::SeededRng;
use crate::vector::Vector;

/// Default grid spacing for convexity scans.
pub const DEFAULT_CONVEXITY_RESOLUTION: f64 = 0.01;
/// Default Monte-Carlo draws per grid point for the curvature condition.
pub const DEFAULT_EXPFAM_DRAWS: u64 = 1_000_000;
/// Second differences above this (negative) floor count as convex.
pub const CONVEXITY_TOL: f64 = 1e-6;

/// Which one-dimensional parameter axis a convexity scan walks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Theta,
    Phi,
}

impl Axis {
    pub fn as_str(self) -> &'static str {
        match self {
            Axis::Theta => "theta",
            Axis::Phi => "phi",
        }
    }
}

/// The grid point whose centered second difference is most negative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvexityWitness {
    pub point: f64,
    pub second_difference: f64,
}

/// Outcome of a convexity scan along one axis.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexityReport {
    pub axis: Axis,
    /// Actual spacing used (the requested resolution rounded so the grid
    /// divides the interval evenly).
    pub spacing: f64,
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    /// Centered second differences `v[i+1] - 2 v[i] + v[i-1]`, one per
    /// interior grid point, in raw (un-rescaled) units.
    pub second_differences: Vec<f64>,
    pub min_value: f64,
    pub argmin: f64,
    pub convex: bool,
    /// Present exactly when `convex` is false.
    pub witness: Option<ConvexityWitness>,
}

/// Centered second differences of a uniformly spaced series.
pub fn second_differences(values: &[f64]) -> Vec<f64> {
    values.windows(3).map(|w| w[2] - 2.0 * w[1] + w[0]).collect()
}

fn uniform_grid(lo: f64, hi: f64, resolution: f64) -> Result<(Vec<f64>, f64)> {
    if !(resolution > 0.0 && resolution.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "grid resolution must be positive, got {resolution}"
        )));
    }
    let span = hi - lo;
    let cells = (span / resolution).round().max(3.0) as usize;
    let h = span / cells as f64;
    let grid = (0..=cells).map(|i| lo + h * i as f64).collect();
    Ok((grid, h))
}

fn classify(axis: Axis, spacing: f64, grid: Vec<f64>, values: Vec<f64>) -> ConvexityReport {
    let d2 = second_differences(&values);
    let (mut min_value, mut argmin) = (f64::INFINITY, grid[0]);
    for (x, v) in grid.iter().zip(&values) {
        if *v < min_value {
            min_value = *v;
            argmin = *x;
        }
    }
    let mut witness: Option<ConvexityWitness> = None;
    for (i, d) in d2.iter().enumerate() {
        if *d < -CONVEXITY_TOL && witness.is_none_or(|w| *d < w.second_difference) {
            witness = Some(ConvexityWitness { point: grid[i + 1], second_difference: *d });
        }
    }
    ConvexityReport {
        axis,
        spacing,
        grid,
        values,
        second_differences: d2,
        min_value,
        argmin,
        convex: witness.is_none(),
        witness,
    }
}

/// Scan the risk along `axis` and classify it convex or nonconvex by the
/// sign of its centered second differences (tolerance [`CONVEXITY_TOL`] on
/// the raw differences; risk values are order-one after normalization, so
/// genuine curvature at the default 0.01 spacing sits orders of magnitude
/// above the tolerance).
///
/// Along `theta` the scanned function is the performative risk itself.
/// Along `phi` it is the reparameterized risk: at each grid parameter the
/// best (lowest-risk) model among the map's preimages is charged. Grid
/// points outside the map's image are trimmed from the ends of the scan.
pub fn diag_convexity(
    env: &Environment,
    axis: Axis,
    resolution: f64,
) -> Result<ConvexityReport> {
    let space = match axis {
        Axis::Theta => env.theta_space(),
        Axis::Phi => env.phi_space(),
    };
    if space.dim() != 1 {
        return Err(Error::Unsupported(format!(
            "convexity scan needs a one-dimensional {} space, got dimension {}",
            axis.as_str(),
            space.dim()
        )));
    }
    let lo = space.lower()[0];
    let hi = space.upper()[0];
    let (grid, h) = uniform_grid(lo, hi, resolution)?;

    match axis {
        Axis::Theta => {
            let values: Result<Vec<f64>> =
                grid.iter().map(|t| env.true_pr(&Vector::scalar(*t)?)).collect();
            Ok(classify(axis, h, grid, values?))
        }
        Axis::Phi => {
            // Reparameterized risk where defined; trim grid ends without a
            // preimage (the image of an interval under a continuous map is
            // an interval, so definedness is contiguous).
            let mut kept: Vec<(f64, f64)> = Vec::with_capacity(grid.len());
            for &phi in &grid {
                let pre = env.map_preimages_1d(phi)?;
                let mut best: Option<f64> = None;
                for theta in pre {
                    let v = env.pr_at_phi(
                        &Vector::scalar(phi)?,
                        &Vector::scalar(theta)?,
                        true,
                    )?;
                    best = Some(best.map_or(v, |b: f64| b.min(v)));
                }
                if let Some(v) = best {
                    kept.push((phi, v));
                }
            }
            if kept.len() < 3 {
                return Err(Error::Oracle(format!(
                    "only {} grid points of {} lie in the map's image; \
                     cannot form second differences",
                    kept.len(),
                    grid.len()
                )));
            }
            for pair in kept.windows(2) {
                if (pair[1].0 - pair[0].0 - h).abs() > 1e-9 * h.max(1.0) {
                    return Err(Error::Oracle(
                        "map image is not contiguous on the grid".into(),
                    ));
                }
            }
            let (grid, values) = kept.into_iter().unzip();
            Ok(classify(axis, h, grid, values))
        }
    }
}

/// One grid point of the exponential-family curvature check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpfamPoint {
    pub theta: f64,
    /// Induced rate at `theta`.
    pub lambda: f64,
    /// lambda * E[loss]: the log-partition curvature term.
    pub lhs: f64,
    /// (2 / phi'(theta)) * E[d loss/d theta * (z - lambda)], with phi the
    /// natural parameter log(lambda), so phi' = lambda'/lambda.
    pub rhs: f64,
    pub satisfied: bool,
}

/// Outcome of the curvature-condition scan for a Poisson-family environment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpfamReport {
    pub points: Vec<ExpfamPoint>,
    pub all_satisfied: bool,
    /// Direct scan of the risk on a grid uniform in the natural parameter:
    /// true when its second differences clear the convexity tolerance. The
    /// condition is sufficient, not necessary, so `all_satisfied` implies
    /// this but not conversely.
    pub natural_param_convex: bool,
    pub draws: u64,
}

/// Evaluate the sufficient condition for the risk to be convex in the
/// natural distribution parameter, pointwise on a `grid_points`-point model
/// grid: lambda * E[loss] <= (2/phi') * E[loss' * (z - lambda)]. The
/// expectations are Monte-Carlo means over `draws` fresh samples per side;
/// the rate, its derivative, and the loss derivative are analytic.
pub fn diag_expfam_condition(
    env: &Environment,
    grid_points: usize,
    draws: u64,
    rng: &mut SeededRng,
) -> Result<ExpfamReport> {
    if !matches!(env.family(), DistributionFamily::PoissonRate) {
        return Err(Error::Unsupported(format!(
            "the curvature condition scan covers the Poisson family; environment '{}' uses {:?}",
            env.name(),
            env.family()
        )));
    }
    let space = env.theta_space();
    if space.dim() != 1 {
        return Err(Error::Unsupported(
            "the curvature condition scan needs a one-dimensional model space".into(),
        ));
    }
    if grid_points < 3 || draws == 0 {
        return Err(Error::InvalidParameter(
            "curvature scan needs at least 3 grid points and 1 draw".into(),
        ));
    }
    let lo = space.lower()[0];
    let hi = space.upper()[0];
    let h = (hi - lo) / (grid_points - 1) as f64;

    let family = env.family().clone();
    let mut points = Vec::with_capacity(grid_points);
    for i in 0..grid_points {
        let theta_s = lo + h * i as f64;
        let theta = Vector::scalar(theta_s)?;
        let phi = env.phi_of(&theta)?;
        let lambda = phi.as_slice()[0];
        let lambda_prime = env.map_derivative_1d(theta_s)?;
        if lambda_prime == 0.0 {
            return Err(Error::Unsupported(
                "the curvature condition needs a locally invertible rate map".into(),
            ));
        }
        let phi_prime = lambda_prime / lambda;

        let mut sum_loss = 0.0;
        let mut sum_grad_dev = 0.0;
        for _ in 0..draws {
            let z = family.sample(&phi, rng)?;
            sum_loss += env.loss(&z, &theta)?;
            sum_grad_dev += env.loss_dtheta(&z, &theta)? * (z.as_slice()[0] - lambda);
        }
        let lhs = lambda * sum_loss / draws as f64;
        let rhs = 2.0 / phi_prime * (sum_grad_dev / draws as f64);
        points.push(ExpfamPoint { theta: theta_s, lambda, lhs, rhs, satisfied: lhs <= rhs });
    }
    let all_satisfied = points.iter().all(|p| p.satisfied);

    // Cross-check: scan the risk on a grid uniform in log(lambda) and test
    // its second differences directly.
    let phi_lo = env.phi_of(&Vector::scalar(lo)?)?.as_slice()[0].ln();
    let phi_hi = env.phi_of(&Vector::scalar(hi)?)?.as_slice()[0].ln();
    let (a, b) = if phi_lo <= phi_hi { (phi_lo, phi_hi) } else { (phi_hi, phi_lo) };
    let hn = (b - a) / (grid_points - 1) as f64;
    let mut values = Vec::with_capacity(grid_points);
    for i in 0..grid_points {
        let lambda = (a + hn * i as f64).exp();
        let pre = env.map_preimages_1d(lambda)?;
        let theta = *pre.first().ok_or_else(|| {
            Error::Oracle(format!("rate {lambda} has no preimage in the model space"))
        })?;
        values.push(env.true_pr(&Vector::scalar(theta)?)?);
    }
    let natural_param_convex =
        second_differences(&values).iter().all(|d| *d >= -CONVEXITY_TOL);

    Ok(ExpfamReport { points, all_satisfied, natural_param_convex, draws })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environment::{catalog, DistributionMap, LossSign, LossSpec};
    use crate::space::ParamSpace;
    use approx::assert_abs_diff_eq;

    #[test]
    fn second_differences_of_a_linear_series_vanish() {
        let values: Vec<f64> = (0..50).map(|i| 3.0 - 0.25 * i as f64).collect();
        for d in second_differences(&values) {
            assert_abs_diff_eq!(d, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn paper_sign_risk_is_nonconvex_in_theta() {
        let env = catalog::example1_square(LossSign::Negative, 1.0).unwrap();
        let report = diag_convexity(&env, Axis::Theta, 0.01).unwrap();
        assert!(!report.convex);
        let w = report.witness.unwrap();
        assert!(w.second_difference < -CONVEXITY_TOL);
        // The risk theta^2 (theta - 1) curves downward left of 1/3.
        assert!(w.point < 1.0 / 3.0, "witness at {}", w.point);
    }

    #[test]
    fn paper_sign_risk_is_convex_in_phi() {
        let env = catalog::example1_square(LossSign::Negative, 1.0).unwrap();
        let report = diag_convexity(&env, Axis::Phi, 0.01).unwrap();
        assert!(report.convex, "witness {:?}", report.witness);
        assert!(report.witness.is_none());
        // Interior minimum at phi = 4/9.
        assert_abs_diff_eq!(report.argmin, 4.0 / 9.0, epsilon = 0.02);
    }

    #[test]
    fn positive_sign_reparameterization_is_not_convex() {
        // Flipping the loss sign flips the curvature: the reparameterized
        // risk becomes concave, which the scan must detect.
        let env = catalog::example1_square(LossSign::Positive, 1.0).unwrap();
        let report = diag_convexity(&env, Axis::Phi, 0.01).unwrap();
        assert!(!report.convex);
    }

    #[test]
    fn grids_adapt_to_the_requested_resolution() {
        let env = catalog::example1_square(LossSign::Negative, 1.0).unwrap();
        let coarse = diag_convexity(&env, Axis::Theta, 0.05).unwrap();
        assert_eq!(coarse.grid.len(), 21);
        assert_abs_diff_eq!(coarse.spacing, 0.05, epsilon = 1e-12);
        assert_eq!(coarse.second_differences.len(), 19);
        assert!(diag_convexity(&env, Axis::Theta, -0.1).is_err());
    }

    #[test]
    fn expfam_condition_holds_for_the_decreasing_rate_map() {
        let env = catalog::poisson_exp().unwrap();
        let mut rng = SeededRng::new(71, 0);
        let report = diag_expfam_condition(&env, 11, 200_000, &mut rng).unwrap();
        assert!(report.all_satisfied);
        assert!(report.natural_param_convex);
        // Monte-Carlo sides must agree with the analytic expectation:
        // lhs = lambda * PR(theta).
        for p in &report.points {
            let pr = env.true_pr(&Vector::scalar(p.theta).unwrap()).unwrap();
            assert_abs_diff_eq!(p.lhs, p.lambda * pr, epsilon = 0.05 * p.lhs.abs());
        }
    }

    #[test]
    fn expfam_condition_flags_an_increasing_rate_map() {
        // With a rate that grows in theta, the correlation term changes
        // sign and the sufficient condition fails.
        let env = crate::environment::Environment::new(
            "poisson_increasing",
            DistributionFamily::PoissonRate,
            DistributionMap::affine_1d(1.5, 0.5),
            LossSpec::QuadraticLocation { scale: 0.01, offset: 0.0 },
            ParamSpace::interval(0.0, 1.0).unwrap(),
            ParamSpace::interval(1.5, 2.0).unwrap(),
            1.0,
        )
        .unwrap();
        let mut rng = SeededRng::new(72, 0);
        let report = diag_expfam_condition(&env, 9, 50_000, &mut rng).unwrap();
        assert!(!report.all_satisfied);
        assert!(report.points.iter().any(|p| !p.satisfied));
    }

    #[test]
    fn expfam_scan_rejects_other_families() {
        let env = catalog::uniform_exp().unwrap();
        let mut rng = SeededRng::new(73, 0);
        assert!(matches!(
            diag_expfam_condition(&env, 9, 1000, &mut rng),
            Err(Error::Unsupported(_))
        ));
    }
}
