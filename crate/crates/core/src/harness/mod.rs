//! Scenario registry, Monte Carlo orchestration, convergence studies and report emission.
//!
//! Paths are simulated from seeds `derive_seed(master, path_id)` and may be fanned
//! out to a worker pool; results are collected in path-index order and every
//! statistic is reduced sequentially, so no emitted number depends on the worker count.

mod config;
mod output;
mod registry;
mod run;
mod stats;

use thiserror::Error;

pub use config::{BandwidthRule, ConfigFile, ScenarioConfig};
pub use output::{write_bundles_csv, write_json, write_reports_csv, REPORTS_CSV, SUMMARY_JSON};
pub use registry::{find_scenario, list_scenarios, ParamSpec, Params, Scenario, ScenarioInfo, ScenarioModel};
pub use run::{
    compare_estimators, convergence_study, envelope_table, evaluate, run_reports, run_scenario, simulate_paths,
    term_discrepancy, ConvergenceRow, ConvergenceTable, EnsembleSummary, EnvelopeTable, EstimatorComparison,
    EstimatorRow, Provenance,
};
pub use stats::{median, SampleStats};

use crate::calculus::CalculusError;
use crate::formulas::FormulaError;
use crate::localtime::LocalTimeError;
use crate::paths::PathError;
use crate::surfaces::SurfaceError;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("unknown scenario '{0}'")]
    UnknownScenario(String),
    #[error("scenario/variant incompatibility: {0}")]
    Incompatible(String),
    #[error("numerical abort: {0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl HarnessError {
    /// Process exit status: 2 configuration, 3 incompatibility, 4 numerical abort.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) | HarnessError::UnknownScenario(_) | HarnessError::Io(_) => 2,
            HarnessError::Incompatible(_) => 3,
            HarnessError::Numerical(_) => 4,
        }
    }
}

impl From<PathError> for HarnessError {
    fn from(e: PathError) -> Self {
        match e {
            PathError::NonFinite { .. } => HarnessError::Numerical(e.to_string()),
            _ => HarnessError::Config(e.to_string()),
        }
    }
}

impl From<FormulaError> for HarnessError {
    fn from(e: FormulaError) -> Self {
        match e {
            FormulaError::MissingDecomposition
            | FormulaError::JumpsNotAllowed(_)
            | FormulaError::NotLipschitz(_)
            | FormulaError::SmoothFitViolated(_) => HarnessError::Incompatible(e.to_string()),
            _ => HarnessError::Config(e.to_string()),
        }
    }
}

impl From<LocalTimeError> for HarnessError {
    fn from(e: LocalTimeError) -> Self {
        HarnessError::Config(e.to_string())
    }
}

impl From<CalculusError> for HarnessError {
    fn from(e: CalculusError) -> Self {
        HarnessError::Config(e.to_string())
    }
}

impl From<SurfaceError> for HarnessError {
    fn from(e: SurfaceError) -> Self {
        HarnessError::Config(e.to_string())
    }
}

impl From<csv::Error> for HarnessError {
    fn from(e: csv::Error) -> Self {
        HarnessError::Io(std::io::Error::other(e))
    }
}

impl From<serde_json::Error> for HarnessError {
    fn from(e: serde_json::Error) -> Self {
        HarnessError::Io(std::io::Error::other(e))
    }
}
