//! Version-to-version changes and the refactorings that removed symptoms.

mod diff;
mod lcs;
mod patterns;
mod rates;

pub use diff::{
    diff_snapshots, diff_snapshots_with, ChangeKind, DiffOptions, FineGrainedChange, NodeRef, Owner, Site,
    SnapshotDiff, DEFAULT_RENAME_THRESHOLD,
};
pub use patterns::{match_refactorings, RefactoringAction};
pub use rates::{refactoring_rates, SmellRate};
