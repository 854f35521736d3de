//! Ground-truth evaluation of serial-section registration.
//!
//! An innately registered volume is cut into slices and every slice is
//! distorted with a seeded rigid + elastic deformation, the way physical
//! sectioning would. Because the distortion is generated, the exact
//! backward displacement field of every slice is recorded and any
//! registration result can be scored densely against it.
//!
//! Module map:
//!
//! * [`volume`], [`field`] - volumes, slices and displacement fields.
//! * [`io`] - slice-stack rasters and the raw field format.
//! * [`geometry`] - warping, field composition and inversion.
//! * [`distortion`] - seeded per-slice cutting distortions and their record.
//! * [`registration`] - baseline methods and the external-result adapter.
//! * [`metrics`] - error fields, similarity, drift and pooled statistics.
//! * [`harness`] - phantoms, configuration, pipeline stages and reports.

pub mod distortion;
pub mod error;
pub mod field;
pub mod geometry;
pub mod harness;
pub mod io;
pub mod metrics;
pub mod par;
pub mod registration;
pub mod rng;
pub mod volume;

pub use error::{Error, Result};
pub use field::{DisplacementField, FieldStack};
pub use volume::{Slice, Volume};
