//! Two-alternative forced-choice experiment: observers see one trivial and
//! one impossible image per trial and pick the one they think a network finds
//! harder.

mod analysis;
mod manifest;
mod session;

pub use analysis::{
    inter_subject_kappa, simulated_choices, subject_statistics, GroupStats, SubjectResponses,
    SubjectStat, SubjectStatistics,
};
pub use manifest::{build_manifest, Choice, ExperimentManifest, Side, Trial};
pub use session::{
    Ack, Experiment, LogEvent, NextTrial, ResultsDocument, Session, SessionInfo, TrialPayload,
    TrialResponse,
};
