use super::ncc::{is_flat, search, subpixel};
use super::options::RegistrationOptions;
use super::pyramid;
use crate::volume::Slice;
use crate::{Error, Result};

/// Apparent shift of the moving slice: `moving(x + t) ~ fixed(x)`.
///
/// The correction field for this estimate is the constant `(tx, ty)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TranslationEstimate {
    pub tx: f64,
    pub ty: f64,
    pub ncc: f64,
    /// False when the best shift sits on the edge of the search window.
    pub interior_peak: bool,
}

/// Translation search with default options.
pub fn register_translation(fixed: &Slice, moving: &Slice) -> Result<TranslationEstimate> {
    register_translation_with(fixed, moving, &RegistrationOptions::default())
}

pub(crate) fn default_radius(nx: usize, ny: usize, opts: &RegistrationOptions) -> usize {
    opts.search_radius_px.unwrap_or(nx.min(ny) / 4).max(1)
}

/// Exhaustive NCC at the coarsest level, +-2 px refinement per finer level,
/// then a quadratic fit of the 3x3 NCC surface around the peak.
pub fn register_translation_with(fixed: &Slice, moving: &Slice, opts: &RegistrationOptions) -> Result<TranslationEstimate> {
    if fixed.dims() != moving.dims() {
        return Err(Error::dims(fixed.dims(), moving.dims()));
    }
    let (nx, ny) = fixed.dims();
    if nx.min(ny) < pyramid::MIN_LEVEL_SIZE {
        return Err(Error::InvalidSpec(format!("translation search needs slices of at least 16 px, got {nx}x{ny}")));
    }
    if is_flat(fixed) || is_flat(moving) {
        return Err(Error::FlatImage);
    }
    let fp = pyramid::build(fixed, opts.pyramid_levels);
    let mp = pyramid::build(moving, opts.pyramid_levels);
    let radius = default_radius(nx, ny, opts);
    let top = fp.len() - 1;
    let coarse_radius = (radius as f64 / (1u64 << top) as f64).ceil() as i64;
    let mut best = search(&fp[top], &mp[top], (0, 0), coarse_radius.max(1)).ok_or(Error::FlatImage)?;
    let mut interior_peak = best.0.abs() < coarse_radius && best.1.abs() < coarse_radius;
    for l in (0..top).rev() {
        best = search(&fp[l], &mp[l], (2 * best.0, 2 * best.1), 2).ok_or(Error::FlatImage)?;
    }
    if best.0.unsigned_abs() as usize > radius || best.1.unsigned_abs() as usize > radius {
        interior_peak = false;
    }
    let (tx, ty, ncc) = subpixel(&fp[0], &mp[0], best);
    Ok(TranslationEstimate { tx, ty, ncc, interior_peak })
}
