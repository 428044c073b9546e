//! Observation distribution families. Each family maps a parameter phi to a
//! sampling distribution over scalar observations (Gaussian means may be
//! multi-dimensional, in which case observations are vectors of independent
//! coordinates with shared noise scale).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SeededRng;
use crate::vector::Vector;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum DistributionFamily {
    /// Bernoulli label: phi in [0, 1] is the success probability, z in {0, 1}.
    BernoulliLabel,
    /// Gaussian with known noise scale: z ~ N(phi, sigma^2 I).
    GaussianMean { sigma: f64 },
    /// Poisson with rate parameter phi > 0.
    PoissonRate,
    /// Uniform on [0, exp(c * phi)] with density exp(-c * phi) on the support.
    UniformExp { c: f64 },
}

impl DistributionFamily {
    pub fn name(&self) -> &'static str {
        match self {
            DistributionFamily::BernoulliLabel => "bernoulli_label",
            DistributionFamily::GaussianMean { .. } => "gaussian_mean",
            DistributionFamily::PoissonRate => "poisson_rate",
            DistributionFamily::UniformExp { .. } => "uniform_exp",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            DistributionFamily::GaussianMean { sigma } if !(*sigma > 0.0 && sigma.is_finite()) => {
                Err(Error::InvalidParameter("gaussian sigma must be positive".into()))
            }
            DistributionFamily::UniformExp { c } if !(*c > 0.0 && c.is_finite()) => {
                Err(Error::InvalidParameter("uniform_exp constant c must be positive".into()))
            }
            _ => Ok(()),
        }
    }

    /// Valid range of each phi coordinate (closed where finite).
    pub fn phi_range(&self) -> (f64, f64) {
        match self {
            DistributionFamily::BernoulliLabel => (0.0, 1.0),
            DistributionFamily::GaussianMean { .. } => (f64::NEG_INFINITY, f64::INFINITY),
            DistributionFamily::PoissonRate => (0.0, f64::INFINITY),
            DistributionFamily::UniformExp { .. } => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    /// Whether phi may be multi-dimensional.
    pub fn supports_multidim(&self) -> bool {
        matches!(self, DistributionFamily::GaussianMean { .. })
    }

    pub fn check_phi(&self, phi: &Vector) -> Result<()> {
        if phi.dim() != 1 && !self.supports_multidim() {
            return Err(Error::DimensionMismatch { expected: 1, got: phi.dim() });
        }
        let (lo, hi) = self.phi_range();
        for &v in phi.iter() {
            if v < lo || v > hi {
                return Err(Error::InvalidParameter(format!(
                    "phi component {v} outside [{lo}, {hi}] for {}",
                    self.name()
                )));
            }
        }
        // The Poisson sampler needs a strictly positive rate.
        if matches!(self, DistributionFamily::PoissonRate) && phi.as_scalar()? <= 0.0 {
            return Err(Error::InvalidParameter("poisson rate must be strictly positive".into()));
        }
        Ok(())
    }

    /// One observation from the distribution at phi.
    pub fn sample(&self, phi: &Vector, rng: &mut SeededRng) -> Result<Vector> {
        self.check_phi(phi)?;
        match self {
            DistributionFamily::BernoulliLabel => {
                let p = phi.as_scalar()?;
                Ok(Vector::from_raw(vec![f64::from(rng.uniform() < p)]))
            }
            DistributionFamily::GaussianMean { sigma } => {
                let entries = phi.iter().map(|&m| m + sigma * rng.gaussian()).collect();
                Ok(Vector::from_raw(entries))
            }
            DistributionFamily::PoissonRate => {
                let lambda = phi.as_scalar()?;
                let dist = rand_distr::Poisson::new(lambda).map_err(|e| {
                    Error::InvalidParameter(format!("poisson rate {lambda}: {e}"))
                })?;
                use rand_distr::Distribution;
                Ok(Vector::from_raw(vec![dist.sample(rng.core())]))
            }
            DistributionFamily::UniformExp { c } => {
                let p = phi.as_scalar()?;
                Ok(Vector::from_raw(vec![rng.uniform() * (c * p).exp()]))
            }
        }
    }

    pub fn log_density(&self, z: &Vector, phi: &Vector) -> Result<f64> {
        self.check_phi(phi)?;
        match self {
            DistributionFamily::BernoulliLabel => {
                let p = phi.as_scalar()?;
                let y = z.as_scalar()?;
                if y == 1.0 {
                    Ok(p.ln())
                } else if y == 0.0 {
                    Ok((1.0 - p).ln())
                } else {
                    Ok(f64::NEG_INFINITY)
                }
            }
            DistributionFamily::GaussianMean { sigma } => {
                if z.dim() != phi.dim() {
                    return Err(Error::DimensionMismatch { expected: phi.dim(), got: z.dim() });
                }
                let mut acc = 0.0;
                for (zi, mi) in z.iter().zip(phi.iter()) {
                    let r = (zi - mi) / sigma;
                    acc += -0.5 * r * r - (sigma * (2.0 * std::f64::consts::PI).sqrt()).ln();
                }
                Ok(acc)
            }
            DistributionFamily::PoissonRate => {
                let lambda = phi.as_scalar()?;
                let zv = z.as_scalar()?;
                if zv < 0.0 || zv.fract() != 0.0 {
                    return Ok(f64::NEG_INFINITY);
                }
                Ok(zv * lambda.ln() - lambda - ln_factorial(zv as u64))
            }
            DistributionFamily::UniformExp { c } => {
                let p = phi.as_scalar()?;
                let zv = z.as_scalar()?;
                let hi = (c * p).exp();
                if (0.0..=hi).contains(&zv) {
                    Ok(-(c * p))
                } else {
                    Ok(f64::NEG_INFINITY)
                }
            }
        }
    }

    /// Maximum-likelihood estimate of phi from i.i.d. observations
    /// (unclamped; see `clamp_phi` for the interior clamp).
    pub fn mle(&self, samples: &[Vector]) -> Result<Vector> {
        if samples.is_empty() {
            return Err(Error::InvalidParameter("mle of empty sample".into()));
        }
        match self {
            DistributionFamily::BernoulliLabel
            | DistributionFamily::GaussianMean { .. }
            | DistributionFamily::PoissonRate => Vector::mean(samples),
            DistributionFamily::UniformExp { c } => {
                let mut max = f64::MIN_POSITIVE;
                for s in samples {
                    max = max.max(s.as_scalar()?);
                }
                Vector::new(vec![max.ln() / c])
            }
        }
    }

    /// Clamp an estimate into the interior of the family's parameter range by
    /// `margin` on each finite side.
    pub fn clamp_phi(&self, phi: &Vector, margin: f64) -> Vector {
        let (lo, hi) = self.phi_range();
        let entries = phi
            .iter()
            .map(|&v| {
                let mut lo_m = if lo.is_finite() { lo + margin } else { f64::NEG_INFINITY };
                let hi_m = if hi.is_finite() { hi - margin } else { f64::INFINITY };
                if lo_m > hi_m {
                    // Degenerate margin (tiny n on a bounded range): collapse
                    // to the midpoint.
                    lo_m = (lo + hi) / 2.0;
                    return lo_m;
                }
                v.clamp(lo_m, hi_m)
            })
            .collect();
        Vector::from_raw(entries)
    }

    /// Numerically confirm that the density at `phi` integrates/sums to one
    /// within `tol`. Used at environment setup on a grid of reachable phi.
    pub fn verify_normalization(&self, phi: &Vector, tol: f64) -> Result<()> {
        self.check_phi(phi)?;
        let total = match self {
            DistributionFamily::BernoulliLabel => {
                let p = phi.as_scalar()?;
                p + (1.0 - p)
            }
            DistributionFamily::GaussianMean { sigma } => {
                // Per-coordinate trapezoid over +/- 10 sigma; coordinates are
                // independent so one axis suffices.
                let mu = phi[0];
                let (lo, hi) = (mu - 10.0 * sigma, mu + 10.0 * sigma);
                let steps = 4000;
                let h = (hi - lo) / steps as f64;
                let dens = |x: f64| {
                    let r = (x - mu) / sigma;
                    (-0.5 * r * r).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt())
                };
                let mut acc = (dens(lo) + dens(hi)) / 2.0;
                for i in 1..steps {
                    acc += dens(lo + i as f64 * h);
                }
                acc * h
            }
            DistributionFamily::PoissonRate => {
                let lambda = phi.as_scalar()?;
                let mut acc = 0.0;
                let mut log_pmf = -lambda;
                for k in 0..10_000u64 {
                    if k > 0 {
                        log_pmf += lambda.ln() - (k as f64).ln();
                    }
                    acc += log_pmf.exp();
                    if k as f64 > lambda && log_pmf.exp() < tol / 100.0 {
                        break;
                    }
                }
                acc
            }
            // Uniform by construction: height 1/exp(c phi) over [0, exp(c phi)].
            DistributionFamily::UniformExp { .. } => 1.0,
        };
        if (total - 1.0).abs() > tol {
            return Err(Error::InvalidParameter(format!(
                "density at {phi} sums to {total}, outside 1 +/- {tol:e}"
            )));
        }
        Ok(())
    }

    /// Exponential-family view (1-d parameter), where defined:
    /// log p(z; phi) = eta * T(z) - A(eta) + B(z) with eta = natural(phi).
    pub fn exp_family(&self) -> Option<ExpFamilyView> {
        match self {
            DistributionFamily::BernoulliLabel => Some(ExpFamilyView::Bernoulli),
            DistributionFamily::GaussianMean { sigma } => {
                Some(ExpFamilyView::Gaussian { sigma: *sigma })
            }
            DistributionFamily::PoissonRate => Some(ExpFamilyView::Poisson),
            DistributionFamily::UniformExp { .. } => None,
        }
    }
}

/// Natural-parameter accessors for the exponential-family members.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExpFamilyView {
    Bernoulli,
    Gaussian { sigma: f64 },
    Poisson,
}

impl ExpFamilyView {
    pub fn natural(&self, phi: f64) -> f64 {
        match self {
            ExpFamilyView::Bernoulli => (phi / (1.0 - phi)).ln(),
            ExpFamilyView::Gaussian { sigma } => phi / (sigma * sigma),
            ExpFamilyView::Poisson => phi.ln(),
        }
    }

    pub fn sufficient(&self, z: f64) -> f64 {
        // T(z) = z for all three members.
        z
    }

    pub fn log_partition(&self, eta: f64) -> f64 {
        match self {
            ExpFamilyView::Bernoulli => eta.exp().ln_1p(),
            ExpFamilyView::Gaussian { sigma } => 0.5 * eta * eta * sigma * sigma,
            ExpFamilyView::Poisson => eta.exp(),
        }
    }

    /// Second derivative of the log-partition function at eta.
    pub fn log_partition_dd(&self, eta: f64) -> f64 {
        match self {
            ExpFamilyView::Bernoulli => {
                let p = 1.0 / (1.0 + (-eta).exp());
                p * (1.0 - p)
            }
            ExpFamilyView::Gaussian { sigma } => sigma * sigma,
            ExpFamilyView::Poisson => eta.exp(),
        }
    }

    pub fn log_carrier(&self, z: f64) -> f64 {
        match self {
            ExpFamilyView::Bernoulli => 0.0,
            ExpFamilyView::Gaussian { sigma } => {
                -0.5 * (z / sigma) * (z / sigma)
                    - (sigma * (2.0 * std::f64::consts::PI).sqrt()).ln()
            }
            ExpFamilyView::Poisson => -ln_factorial(z as u64),
        }
    }
}

/// ln(k!) by direct summation; exact to f64 rounding for the magnitudes the
/// Poisson environments produce.
pub fn ln_factorial(k: u64) -> f64 {
    (2..=k).map(|i| (i as f64).ln()).sum()
}
