//! Scoring of registration results against the recorded ground truth.
//!
//! The residual of a correction `r` applied after a distortion `d` is the
//! backward field `compose(r, d)`; its magnitude is the dense target
//! registration error in pixels.

mod drift;
mod evaluate;
mod mask;
mod similarity;
mod stats;

pub use drift::{drift_profile, DriftProfile, DEFAULT_DRIFT_WINDOW};
pub use evaluate::{error_field, evaluate, EvalOptions, MetricsRecord, SliceMetrics, METRICS_CSV, METRICS_JSON};
pub use mask::{make_mask, Mask};
pub use similarity::{similarity_suite, SimilarityScores, PSNR_CAP_DB, SSIM_WINDOW};
pub use stats::{masked_magnitudes, ErrorStats};
