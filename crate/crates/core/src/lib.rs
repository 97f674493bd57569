//! Test smell detection and refactoring mining for keyword-driven UI test suites.
//!
//! The usual entry point is [`pipeline::analyze`] followed by [`pipeline::build_report`]
//! and [`report::emit_report`]. The modules underneath can be used on their own: parse
//! suites with [`parser`], resolve them into call trees with [`calltree::build_snapshot`],
//! run the detectors of [`smells`], and compare versions with [`evolution`].

pub mod analytics;
pub mod calltree;
pub mod catalog;
pub mod clones;
pub mod evolution;
pub mod history;
pub mod locator;
pub mod parser;
pub mod pipeline;
pub mod report;
pub mod smells;

use thiserror::Error;

pub use analytics::{knee_point, rank_similarity, summarize, DistributionSummary, KneePoint};
pub use calltree::{build_snapshot, CallTree, Snapshot, TestId};
pub use catalog::{Category, KeywordCatalog};
pub use clones::CloneType;
pub use evolution::{diff_snapshots, match_refactorings, refactoring_rates, FineGrainedChange, RefactoringAction};
pub use history::{walk_repository, ProjectHistory, VersionRecord};
pub use locator::element_count;
pub use pipeline::{analyze, build_report, Analysis, AnalysisOptions, Mode};
pub use report::{emit_report, Format, Report};
pub use smells::{detect_snapshot, DetectorConfig, SmellFinding, SmellId, TestFindings};

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Catalog(#[from] catalog::ConfigError),
    #[error(transparent)]
    History(#[from] history::HistoryError),
    #[error(transparent)]
    Snapshot(#[from] calltree::SnapshotError),
    #[error(transparent)]
    Report(#[from] report::ReportError),
}
