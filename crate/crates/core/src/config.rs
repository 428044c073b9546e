//! Step-count and step-size schedules for the optimizers. Construction
//! derives every schedule quantity from accuracy/confidence targets via the
//! algorithms' formulas; explicit overrides are available for desk-scale
//! experiments where the formula-exact horizons would be impractical.

use serde::{Deserialize, Serialize};

use crate::divergence;
use crate::error::{Error, Result};
use crate::family::DistributionFamily;

/// Accuracy/confidence targets: suboptimality `eps` with failure probability
/// `p` for the outer loop, `eps_lm`/`p_lm` for model learning, and
/// `eps_kl`/`p_kl` for each divergence estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    pub eps: f64,
    pub p: f64,
    pub eps_lm: f64,
    pub p_lm: f64,
    pub eps_kl: f64,
    pub p_kl: f64,
}

impl Tolerances {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("eps", self.eps), ("eps_lm", self.eps_lm), ("eps_kl", self.eps_kl)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} must be positive")));
            }
        }
        for (name, v) in [("p", self.p), ("p_lm", self.p_lm), ("p_kl", self.p_kl)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::InvalidParameter(format!("{name} must lie in (0, 1)")));
            }
        }
        Ok(())
    }
}

/// Full schedule for a two-level run: outer horizon `t` with perturbation
/// `delta` and step `eta`, inner horizon `s` with `delta_lm` / `eta_lm`, and
/// the per-estimate divergence sample count `n_kl`.
///
/// `delta` and `delta_lm` are dimensionless in (0, 1); at deployment they are
/// scaled by the space's minimum half-extent so perturbed points of iterates
/// kept in the (1 - delta)-shrunk set stay feasible.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimizerConfig {
    pub tol: Tolerances,
    pub d_theta: usize,
    pub d_phi: usize,
    pub t: usize,
    pub s: usize,
    pub n_kl: usize,
    pub delta: f64,
    pub delta_lm: f64,
    pub eta: f64,
    pub eta_lm: f64,
}

fn ceil_count(raw: f64, what: &str) -> Result<usize> {
    if !raw.is_finite() || raw > 1e12 {
        return Err(Error::InfeasibleConfig(format!("{what} would need {raw:.3e} steps")));
    }
    Ok((raw.ceil() as usize).max(1))
}

impl OptimizerConfig {
    /// Derive the whole schedule from tolerances:
    /// delta = sqrt(eps_lm d_phi), t = ceil(d_phi / (eps - delta)^2),
    /// eta = 1/sqrt(d_phi t) for the outer loop; delta_lm = sqrt(eps_kl
    /// d_theta), s = ceil(d_theta / (eps_lm - delta_lm)^2), eta_lm =
    /// 1/sqrt(d_theta s) for the inner loop; n_kl from the family's
    /// calibration at (eps_kl, p_kl).
    pub fn from_tolerances(
        family: &DistributionFamily,
        d_theta: usize,
        d_phi: usize,
        tol: Tolerances,
    ) -> Result<Self> {
        tol.validate()?;
        if d_theta == 0 || d_phi == 0 {
            return Err(Error::InvalidParameter("dimensions must be positive".into()));
        }
        let (dt, dp) = (d_theta as f64, d_phi as f64);

        let delta = (tol.eps_lm * dp).sqrt();
        if tol.eps <= delta {
            return Err(Error::InfeasibleConfig(format!(
                "need eps > sqrt(eps_lm * d_phi) = {delta:.6}, got eps = {}",
                tol.eps
            )));
        }
        let t = ceil_count(dp / ((tol.eps - delta) * (tol.eps - delta)), "outer loop")?;
        let eta = 1.0 / (dp * t as f64).sqrt();

        let delta_lm = (tol.eps_kl * dt).sqrt();
        if tol.eps_lm <= delta_lm {
            return Err(Error::InfeasibleConfig(format!(
                "need eps_lm > sqrt(eps_kl * d_theta) = {delta_lm:.6}, got eps_lm = {}",
                tol.eps_lm
            )));
        }
        let s = ceil_count(dt / ((tol.eps_lm - delta_lm) * (tol.eps_lm - delta_lm)), "inner loop")?;
        let eta_lm = 1.0 / (dt * s as f64).sqrt();

        let n_kl = divergence::n_kl(family, tol.eps_kl, tol.p_kl)?;

        let cfg =
            OptimizerConfig { tol, d_theta, d_phi, t, s, n_kl, delta, delta_lm, eta, eta_lm };
        cfg.validate()?;
        Ok(cfg)
    }

    /// The self-consistent schedule for a fixed sample budget: given total
    /// budget N and per-estimate size N_KL, set eps_lm = (N_KL/N)^{1/3} and
    /// eps_kl = (N_KL/N)^{2/3} / (4 d_theta), derive the inner horizon from
    /// the formulas (the guards then hold by construction), and spend the
    /// rest of the budget on outer steps: t = floor(N / (2 (2 n_kl s + 1))).
    /// The outer tolerance is back-derived as eps = sqrt(d_phi/t) + delta.
    ///
    /// n_kl here is budgeted, not calibration-derived; the implied
    /// (eps_kl, p_kl) contract is reported through `tol` for transparency.
    pub fn budgeted(
        d_theta: usize,
        d_phi: usize,
        budget_n: u64,
        n_kl: usize,
        p: f64,
        p_lm: f64,
        p_kl: f64,
    ) -> Result<Self> {
        if n_kl == 0 || budget_n as usize <= n_kl {
            return Err(Error::InvalidParameter(
                "budget must exceed the per-estimate sample count".into(),
            ));
        }
        let (dt, dp) = (d_theta as f64, d_phi as f64);
        if d_theta == 0 || d_phi == 0 {
            return Err(Error::InvalidParameter("dimensions must be positive".into()));
        }
        let ratio = n_kl as f64 / budget_n as f64;
        let eps_lm = ratio.cbrt();
        let eps_kl = ratio.cbrt() * ratio.cbrt() / (4.0 * dt);
        let delta_lm = (eps_kl * dt).sqrt(); // = eps_lm / 2 by construction
        let s = ceil_count(dt / ((eps_lm - delta_lm) * (eps_lm - delta_lm)), "inner loop")?;
        let per_outer = 2u128 * (2 * n_kl as u128 * s as u128 + 1);
        let t = (budget_n as u128 / per_outer) as usize;
        if t == 0 {
            return Err(Error::InfeasibleConfig(format!(
                "budget {budget_n} cannot afford one outer step of {per_outer} samples"
            )));
        }
        let delta = (eps_lm * dp).sqrt();
        let eps = (dp / t as f64).sqrt() + delta;
        let eta = 1.0 / (dp * t as f64).sqrt();
        let eta_lm = 1.0 / (dt * s as f64).sqrt();
        let tol = Tolerances { eps, p, eps_lm, p_lm, eps_kl, p_kl };
        tol.validate()?;
        let cfg =
            OptimizerConfig { tol, d_theta, d_phi, t, s, n_kl, delta, delta_lm, eta, eta_lm };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Override the outer horizon; `eta` is recomputed from the formula for
    /// the new horizon.
    pub fn with_t(mut self, t: usize) -> Result<Self> {
        self.t = t;
        self.eta = 1.0 / (self.d_phi as f64 * t as f64).sqrt();
        self.validate()?;
        Ok(self)
    }

    /// Override the inner horizon; `eta_lm` is recomputed.
    pub fn with_s(mut self, s: usize) -> Result<Self> {
        self.s = s;
        self.eta_lm = 1.0 / (self.d_theta as f64 * s as f64).sqrt();
        self.validate()?;
        Ok(self)
    }

    /// Override the per-estimate divergence sample count. This relaxes the
    /// (eps_kl, p_kl) contract recorded in `tol`.
    pub fn with_n_kl(mut self, n_kl: usize) -> Result<Self> {
        self.n_kl = n_kl;
        self.validate()?;
        Ok(self)
    }

    pub fn with_delta(mut self, delta: f64) -> Result<Self> {
        self.delta = delta;
        self.validate()?;
        Ok(self)
    }

    pub fn with_delta_lm(mut self, delta_lm: f64) -> Result<Self> {
        self.delta_lm = delta_lm;
        self.validate()?;
        Ok(self)
    }

    pub fn with_eta(mut self, eta: f64) -> Result<Self> {
        self.eta = eta;
        self.validate()?;
        Ok(self)
    }

    pub fn with_eta_lm(mut self, eta_lm: f64) -> Result<Self> {
        self.eta_lm = eta_lm;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        self.tol.validate()?;
        if self.d_theta == 0 || self.d_phi == 0 {
            return Err(Error::InvalidParameter("dimensions must be positive".into()));
        }
        for (name, v) in [("t", self.t), ("s", self.s), ("n_kl", self.n_kl)] {
            if v == 0 {
                return Err(Error::InvalidParameter(format!("{name} must be at least 1")));
            }
        }
        for (name, v) in [("delta", self.delta), ("delta_lm", self.delta_lm)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::InfeasibleConfig(format!(
                    "{name} must lie in (0, 1) after extent scaling, got {v}"
                )));
            }
        }
        for (name, v) in [("eta", self.eta), ("eta_lm", self.eta_lm)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} must be positive")));
            }
        }
        if self.paper_n_u128() + self.inner_run_n() as u128 > u64::MAX as u128 {
            return Err(Error::InfeasibleConfig("total sample count overflows".into()));
        }
        Ok(())
    }

    /// Samples consumed by one inner run: 2 n_kl s.
    pub fn inner_run_n(&self) -> u64 {
        2 * self.n_kl as u64 * self.s as u64
    }

    fn paper_n_u128(&self) -> u128 {
        2 * (2 * self.n_kl as u128 * self.s as u128 + 1) * self.t as u128
    }

    /// The headline sample-count identity for a two-level run:
    /// N = 2 (2 n_kl s + 1) t.
    pub fn paper_n(&self) -> u64 {
        self.paper_n_u128() as u64
    }

    /// Everything a two-level run actually deploys: `paper_n` plus the final
    /// model-learning call's 2 n_kl s samples.
    pub fn total_n(&self) -> u64 {
        self.paper_n() + self.inner_run_n()
    }
}

/// Schedule for the convex single-level optimizer: delta = sqrt(d/t),
/// eta = 1/sqrt(d t). Requires t > d so that delta < 1.
pub fn convex_schedule(d_theta: usize, t: usize) -> Result<(f64, f64)> {
    if t == 0 {
        return Err(Error::InvalidParameter("step count must be at least 1".into()));
    }
    if d_theta == 0 {
        return Err(Error::InvalidParameter("dimension must be positive".into()));
    }
    let delta = (d_theta as f64 / t as f64).sqrt();
    if delta >= 1.0 {
        return Err(Error::InfeasibleConfig(format!(
            "step count {t} must exceed dimension {d_theta} for a feasible perturbation radius"
        )));
    }
    let eta = 1.0 / (d_theta as f64 * t as f64).sqrt();
    Ok((delta, eta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn bern() -> DistributionFamily {
        DistributionFamily::BernoulliLabel
    }

    fn base_tol() -> Tolerances {
        Tolerances { eps: 0.5, p: 0.1, eps_lm: 0.04, p_lm: 0.1, eps_kl: 0.0004, p_kl: 0.05 }
    }

    #[test]
    fn derived_schedule_matches_hand_arithmetic() {
        let cfg = OptimizerConfig::from_tolerances(&bern(), 1, 1, base_tol()).unwrap();
        // delta = sqrt(0.04) = 0.2; t = ceil(1 / 0.3^2) = ceil(11.11) = 12.
        assert_abs_diff_eq!(cfg.delta, 0.2, epsilon = 1e-15);
        assert_eq!(cfg.t, 12);
        assert_abs_diff_eq!(cfg.eta, 1.0 / 12f64.sqrt(), epsilon = 1e-15);
        // delta_lm = sqrt(0.0004) = 0.02; s = ceil(1 / 0.02^2) = 2500.
        assert_abs_diff_eq!(cfg.delta_lm, 0.02, epsilon = 1e-15);
        assert_eq!(cfg.s, 2500);
        assert_abs_diff_eq!(cfg.eta_lm, 0.02, epsilon = 1e-15);
        // n_kl comes from the family calibration at (eps_kl, p_kl).
        assert_eq!(cfg.n_kl, divergence::n_kl(&bern(), 0.0004, 0.05).unwrap());
    }

    #[test]
    fn feasibility_guards_reject_bad_tolerances() {
        // eps <= sqrt(eps_lm * d_phi)
        let mut tol = base_tol();
        tol.eps = 0.2;
        assert!(matches!(
            OptimizerConfig::from_tolerances(&bern(), 1, 1, tol),
            Err(Error::InfeasibleConfig(_))
        ));
        // eps_lm <= sqrt(eps_kl * d_theta)
        let mut tol = base_tol();
        tol.eps_kl = 0.01;
        assert!(matches!(
            OptimizerConfig::from_tolerances(&bern(), 1, 1, tol),
            Err(Error::InfeasibleConfig(_))
        ));
        // delta >= 1 after dimension scaling: eps_lm * d_phi >= 1.
        let tol = Tolerances {
            eps: 2.0,
            p: 0.1,
            eps_lm: 0.5,
            p_lm: 0.1,
            eps_kl: 0.001,
            p_kl: 0.05,
        };
        assert!(matches!(
            OptimizerConfig::from_tolerances(&bern(), 1, 4, tol),
            Err(Error::InfeasibleConfig(_))
        ));
        // Nonsense probabilities.
        let mut tol = base_tol();
        tol.p_kl = 1.5;
        assert!(OptimizerConfig::from_tolerances(&bern(), 1, 1, tol).is_err());
    }

    #[test]
    fn sample_identities_match_the_headline_formula() {
        let cfg = OptimizerConfig::from_tolerances(&bern(), 1, 1, base_tol())
            .unwrap()
            .with_t(3)
            .unwrap()
            .with_s(5)
            .unwrap()
            .with_n_kl(10)
            .unwrap();
        assert_eq!(cfg.paper_n(), 606); // 2 (2*10*5 + 1) * 3
        assert_eq!(cfg.inner_run_n(), 100);
        assert_eq!(cfg.total_n(), 706);
    }

    #[test]
    fn overrides_recompute_dependent_step_sizes() {
        let cfg = OptimizerConfig::from_tolerances(&bern(), 1, 1, base_tol())
            .unwrap()
            .with_t(200)
            .unwrap();
        assert_abs_diff_eq!(cfg.eta, 1.0 / 200f64.sqrt(), epsilon = 1e-15);
        let cfg = cfg.with_eta(0.005).unwrap();
        assert_abs_diff_eq!(cfg.eta, 0.005);
        assert!(cfg.clone().with_t(0).is_err());
        assert!(cfg.clone().with_delta(1.0).is_err());
        assert!(cfg.with_delta_lm(-0.1).is_err());
    }

    #[test]
    fn budgeted_schedule_spends_the_budget() {
        let budget = 5_000_000u64;
        let cfg = OptimizerConfig::budgeted(1, 1, budget, 50, 0.1, 0.1, 0.05).unwrap();
        // eps_lm = (50/5e6)^{1/3} = 1e-5^{1/3}; delta_lm = eps_lm / 2.
        assert_abs_diff_eq!(cfg.tol.eps_lm, 1e-5f64.cbrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(cfg.delta_lm, cfg.tol.eps_lm / 2.0, epsilon = 1e-12);
        // The budget affords t full outer steps but not t + 1.
        let per_outer = 2 * (2 * cfg.n_kl as u64 * cfg.s as u64 + 1);
        assert!(cfg.paper_n() <= budget);
        assert!(cfg.paper_n() + per_outer > budget);
        // Back-derived eps satisfies the feasibility guard by construction.
        assert!(cfg.tol.eps > cfg.delta);
        // Tiny budget: cannot afford one outer step.
        assert!(matches!(
            OptimizerConfig::budgeted(1, 1, 1000, 50, 0.1, 0.1, 0.05),
            Err(Error::InfeasibleConfig(_))
        ));
    }

    #[test]
    fn convex_schedule_matches_formulas_and_guards() {
        let (delta, eta) = convex_schedule(1, 10_000).unwrap();
        assert_abs_diff_eq!(delta, 0.01, epsilon = 1e-15);
        assert_abs_diff_eq!(eta, 0.01, epsilon = 1e-15);
        assert!(convex_schedule(1, 0).is_err());
        assert!(convex_schedule(5, 5).is_err()); // delta would be 1
        assert!(convex_schedule(5, 4).is_err());
    }
}
