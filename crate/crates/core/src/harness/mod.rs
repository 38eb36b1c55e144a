//! Experiment execution: configuration, plans, per-run artifacts, suites and
//! reports.
//!
//! A run directory holds `trace.csv`, `best_weights.csv`,
//! `best_trajectory.csv` and `manifest.txt`. A suite lays runs out as
//! `out/<robot>/<direction>/<learner>/rep<k>/` and then writes aggregated
//! curves to `out/reports/`.

mod config;
mod plan;
mod report;
mod run;
mod suite;
pub mod svg;

use std::path::PathBuf;

use thiserror::Error;

pub use config::{parse_key_values, RunConfig, CONFIG_KEYS};
pub use plan::{ExperimentPlan, Learner, DEFAULT_DIRECTIONS};
pub use report::{emit_reports, load_run, scan_runs, ReportOptions, RunData};
pub use run::{
    cell_seed, learn, read_text, sha256_hex, trace_csv, write_run, LearnRequest, RunArtifacts,
    ARTIFACT_VERSION,
};
pub use suite::{run_suite, CellStatus, SuiteCell, SuiteSummary};

#[derive(Debug, Error)]
pub enum HarnessError {
    /// Bad flags, plan or config content.
    #[error("{0}")]
    Usage(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    /// A file was read but its content is unusable.
    #[error("{}: {message}", path.display())]
    Input { path: PathBuf, message: String },
    #[error("run failed: {0}")]
    Run(String),
}

impl HarnessError {
    /// Process exit code for the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Usage(_) => 2,
            HarnessError::Io { .. } | HarnessError::Input { .. } => 3,
            HarnessError::Run(_) => 4,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.into(),
            source,
        }
    }
}
