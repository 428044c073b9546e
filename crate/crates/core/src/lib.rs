//! Two-level zeroth-order optimization for decision-dependent risk:
//! an outer bandit search over distribution parameters drives an inner
//! divergence-matching search over model parameters, with synthetic
//! environments, calibrated divergence estimation, and a regret-accounting
//! harness for validating sublinear-regret behavior at desk scale.

pub mod calibrate;
pub mod config;
pub mod diag;
pub mod divergence;
pub mod environment;
pub mod error;
pub mod family;
pub mod ledger;
pub mod optimizer;
pub mod report;
pub mod rng;
pub mod runner;
pub mod slope;
pub mod space;
pub mod vector;

pub use calibrate::calibrate_kl;
pub use config::{convex_schedule, OptimizerConfig, Tolerances};
pub use diag::{
    diag_convexity, diag_expfam_condition, second_differences, Axis, ConvexityReport,
    ConvexityWitness, ExpfamPoint, ExpfamReport,
};
pub use divergence::{
    estimate_kl, kl_closed_form, n_kl, n_kl_from_constant, plug_in_kl, worst_failure_rate,
    KLCalibration, KLEstimate,
};
pub use ledger::{compute_regret, LedgerBlock, Level, RegretLedger};
pub use optimizer::{
    estimate_pr, learn_model, minimize_convex_pr, minimize_pr, two_point_gradient, LearnOutcome,
    RunResult, TraceStep,
};
pub use environment::{
    catalog, DistributionMap, Environment, LossSign, LossSpec, OracleReport, DEPLOY_TOL,
};
pub use error::{Error, Result};
pub use family::{DistributionFamily, ExpFamilyView};
pub use report::write_run_csv;
pub use rng::{sample_unit_sphere, SeededRng};
pub use runner::{
    run_experiment, AggregateReport, EnvSpec, ExperimentConfig, OptimizerChoice, OptimizerSpec,
    RunSpec, SeedSummary,
};
pub use slope::{fit_slope, SlopeFit};
pub use space::{ParamSpace, SpaceKind};
pub use vector::Vector;
