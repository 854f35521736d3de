//! Phantoms, configuration, pipeline stages and report emission.
//!
//! Output layout of a pipeline run:
//!
//! ```text
//! out/original/            registered input stack
//! out/distorted/           distorted stack, record.json, ground_truth/, elastic/
//! out/<method>/            result fields, diagnostics.csv, metrics.json, metrics.csv
//! out/comparison.csv       method,statistic,value
//! out/mean_error.svg
//! out/drift.svg
//! ```

mod config;
mod phantom;
mod pipeline;
mod plots;
mod report;

pub use config::{ExternalFormat, InputSpec, MethodEntry, MethodSpec, PipelineConfig, StrategyEntry, ORACLE_TOL};
pub use phantom::{generate_phantom, PhantomKind, PhantomSpec};
pub use pipeline::{
    distort_stage, evaluate_stage, phantom_stage, register_stage, run_pipeline, PipelineReport, DISTORTED_DIR, ORIGINAL_DIR,
};
pub use plots::{drift_svg, mean_error_svg, nice_step, nice_ticks, DRIFT_SVG, MEAN_ERROR_SVG};
pub use report::{comparison_csv, write_report, COMPARISON_CSV};
