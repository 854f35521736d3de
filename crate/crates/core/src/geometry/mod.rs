//! Deformation-field algebra.
//!
//! Conventions shared by every function here:
//!
//! * fields are backward maps, `warped(x) = source(x + u(x))`;
//! * pixel centres sit at integer coordinates, the domain of an axis with
//!   `n` pixels is `[0, n - 1]`;
//! * fields are sampled bilinearly with edge-clamped coordinates, images
//!   with the chosen [`Interpolation`] and a pad value outside the domain;
//! * "interior" excludes an [`INTERIOR_MARGIN`]-pixel border.

mod compose;
mod interp;
mod invert;
mod lattice;
mod rigid;
mod warp;

pub use compose::compose_fields;
pub use interp::{catmull_rom_weights, sample_field, sample_image, Interpolation, InterpolationKind};
pub use invert::{invert_field, Inversion};
pub use lattice::ControlLattice;
pub use rigid::{rigid_to_field, RigidTransform2D};
pub use warp::{warp_slice, warp_volume};

/// Border width, in pixels, excluded from interior statistics.
pub const INTERIOR_MARGIN: usize = 4;

/// Whether `(x, y)` lies at least `margin` pixels inside an `nx` x `ny` grid.
#[inline]
pub fn is_interior(x: usize, y: usize, nx: usize, ny: usize, margin: usize) -> bool {
    x >= margin && y >= margin && x + margin < nx && y + margin < ny
}
