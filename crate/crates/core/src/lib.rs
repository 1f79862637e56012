//! Automatic assessment of programming exercises.
//!
//! * [`manifest`]: the JSON exercise format and its validation.
//! * [`toylang`]: a small metered language used to run submissions.
//! * [`assembly`]: student views and payload reconstruction.
//! * [`judge`]: dynamic and static evaluation into a [`judge::Verdict`].
//! * [`gamify`]: bonus modes and leaderboards.
//! * [`stats`]: the event log and per-exercise statistics.
//! * [`service`]: registry, request handlers and the HTTP router.

pub mod assembly;
pub mod canonical;
pub mod gamify;
pub mod judge;
pub mod manifest;
pub mod service;
pub mod stats;
pub mod toylang;

pub use assembly::{present, reconstruct, Payload, StudentBundle};
pub use judge::{judge_submission, Outcome, Verdict};
pub use manifest::{parse_manifest, serialize_manifest, validate_manifest, ExerciseManifest, ExerciseType};
