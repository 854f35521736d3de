//! Seeded serial-section cutting distortions.
//!
//! Each slice receives an independent rigid placement error, a smooth
//! elastic deformation from a clamped Gaussian control lattice, and a gamma
//! jitter on intensities. Slices may be dropped, never two in a row. Every
//! sampled quantity is kept in a [`DistortionRecord`], whose composed fields
//! are the exact ground truth of the distorted geometry.

mod apply;
mod record;
mod sample;
mod spec;

pub use apply::{distort_volume, oracle_recovery};
pub use record::{DistortionRecord, SliceDistortion, RECORD_FILE};
pub use sample::{sample_drops, sample_elastic, sample_gamma, sample_rigid};
pub use spec::{DistortionSpec, ElasticSpec, IntensitySpec};
