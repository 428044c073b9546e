//! Sample-exact accounting: every deployed sample's loss, in wall order,
//! attributed to the optimization level that asked for it. Regret is always
//! recomputed from this record, never accumulated on the side.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::vector::Vector;

/// Which loop requested a deployment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Level {
    /// The single-level convex optimizer's own queries.
    Outer,
    /// Model-learning (inner loop) deployments.
    Inner,
    /// Point risk queries (one sample per call).
    EstimatePr,
}

impl Level {
    pub fn as_str(self) -> &'static str {
        match self {
            Level::Outer => "outer",
            Level::Inner => "inner",
            Level::EstimatePr => "estimate_pr",
        }
    }
}

impl std::fmt::Display for Level {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One deployment: `losses.len()` consecutive samples drawn at `theta`,
/// occupying wall indices `start .. start + losses.len()`.
#[derive(Debug, Clone, PartialEq)]
pub struct LedgerBlock {
    pub start: u64,
    pub level: Level,
    pub theta: Vector,
    pub losses: Vec<f64>,
}

/// Append-only record of every sample a run deployed.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RegretLedger {
    blocks: Vec<LedgerBlock>,
    total: u64,
    pr_opt: Option<f64>,
}

impl RegretLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_pr_opt(pr_opt: f64) -> Self {
        RegretLedger { pr_opt: Some(pr_opt), ..Self::default() }
    }

    pub fn set_pr_opt(&mut self, pr_opt: f64) {
        self.pr_opt = Some(pr_opt);
    }

    pub fn pr_opt(&self) -> Option<f64> {
        self.pr_opt
    }

    /// Append one deployment's worth of losses.
    pub fn record(&mut self, level: Level, theta: Vector, losses: Vec<f64>) {
        if losses.is_empty() {
            return;
        }
        let start = self.total;
        self.total += losses.len() as u64;
        self.blocks.push(LedgerBlock { start, level, theta, losses });
    }

    pub fn blocks(&self) -> &[LedgerBlock] {
        &self.blocks
    }

    pub fn total_samples(&self) -> u64 {
        self.total
    }

    pub fn samples_at_level(&self, level: Level) -> u64 {
        self.blocks
            .iter()
            .filter(|b| b.level == level)
            .map(|b| b.losses.len() as u64)
            .sum()
    }

    /// All losses in wall order.
    pub fn losses(&self) -> impl Iterator<Item = f64> + '_ {
        self.blocks.iter().flat_map(|b| b.losses.iter().copied())
    }

    pub fn losses_at_level(&self, level: Level) -> Vec<f64> {
        self.blocks
            .iter()
            .filter(|b| b.level == level)
            .flat_map(|b| b.losses.iter().copied())
            .collect()
    }

    /// The full prefix regret series: R_k = (sum of first k losses) -
    /// k * pr_opt, for k = 1..=N.
    pub fn regret_series(&self) -> Result<Vec<(u64, f64)>> {
        let pr_opt = self.require_pr_opt()?;
        let mut out = Vec::with_capacity(self.total as usize);
        let mut cum = 0.0;
        for (i, loss) in self.losses().enumerate() {
            cum += loss;
            let k = (i + 1) as u64;
            out.push((k, cum - k as f64 * pr_opt));
        }
        Ok(out)
    }

    /// R_N without materializing the series.
    pub fn final_regret(&self) -> Result<f64> {
        let pr_opt = self.require_pr_opt()?;
        let cum: f64 = self.losses().sum();
        Ok(cum - self.total as f64 * pr_opt)
    }

    fn require_pr_opt(&self) -> Result<f64> {
        self.pr_opt.ok_or_else(|| {
            Error::InvalidParameter("regret needs pr_opt from an oracle report".into())
        })
    }
}

/// Prefix regret series of a completed ledger.
pub fn compute_regret(ledger: &RegretLedger) -> Result<Vec<(u64, f64)>> {
    ledger.regret_series()
}
