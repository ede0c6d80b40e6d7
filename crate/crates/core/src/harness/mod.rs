//! Benchmarking, reporting and oracle utilities.

mod compare;
pub mod fixtures;
mod gap;
mod oracle;
mod report;
mod solution;

use thiserror::Error;

use crate::instance::InstanceError;

pub use compare::{compare, parse_csv, render_csv, BenchmarkRow, CompareConfig, CompareReport, REPORT_FORMAT_VERSION};
pub use gap::{delta_gap, gap, gap_fraction, gap_percent, GAP_NOISE};
pub use oracle::{brute_force_optimum, simple_paths, OracleSolution, MAX_COMBINATIONS};
pub use report::{report_energy, EnergyReport};
pub use solution::{SolutionDoc, SOLUTION_FORMAT_VERSION};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("gap is undefined for best value {0} (must be positive)")]
    UndefinedGap(f64),
    #[error("instance too large for brute force: {combinations} routing combinations (limit {limit})")]
    TooLarge { combinations: u128, limit: u128 },
    #[error("scenario {0} has zero total demand; per-bit energy is undefined")]
    ZeroDemand(String),
    #[error("invalid solution: {0}")]
    Solution(String),
    #[error("report: {0}")]
    Report(String),
    #[error(transparent)]
    Instance(#[from] InstanceError),
}
