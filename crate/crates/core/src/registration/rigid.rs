use super::ncc::{is_flat, search, subpixel};
use super::options::RegistrationOptions;
use super::pyramid;
use super::translation::default_radius;
use crate::field::DisplacementField;
use crate::geometry::{rigid_to_field, warp_slice, InterpolationKind, RigidTransform2D};
use crate::volume::Slice;
use crate::{par, Error, Result};

/// Final NCC below this flags a rigid estimate as a likely local optimum.
pub const LOW_NCC_THRESHOLD: f64 = 0.5;

const GOLDEN_ITERATIONS: usize = 24;

/// Apparent motion of the moving slice: `moving ~ T(fixed)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidEstimate {
    pub transform: RigidTransform2D,
    pub ncc: f64,
    /// Number of (angle, shift-search) evaluations performed.
    pub evaluations: usize,
}

impl RigidEstimate {
    pub fn low_similarity(&self) -> bool {
        self.ncc < LOW_NCC_THRESHOLD
    }

    /// Backward field that undoes the estimated motion.
    pub fn correction_field(&self, nx: usize, ny: usize) -> DisplacementField {
        rigid_to_field(&self.transform.inverse(), nx, ny)
    }
}

fn rotate(s: &Slice, theta: f64, center: (f64, f64)) -> Slice {
    if theta == 0.0 {
        return s.clone();
    }
    let field = rigid_to_field(&RigidTransform2D::new(theta, (0.0, 0.0), center), s.nx(), s.ny());
    warp_slice(s, &field, InterpolationKind::bilinear()).expect("dims match")
}

/// Coarse-to-fine angle grid with a shift search per angle, then
/// golden-section refinement of the angle at full resolution.
pub fn register_rigid(fixed: &Slice, moving: &Slice, opts: &RegistrationOptions) -> Result<RigidEstimate> {
    if fixed.dims() != moving.dims() {
        return Err(Error::dims(fixed.dims(), moving.dims()));
    }
    opts.validate()?;
    let (nx, ny) = fixed.dims();
    if nx.min(ny) < pyramid::MIN_LEVEL_SIZE {
        return Err(Error::InvalidSpec(format!("rigid search needs slices of at least 16 px, got {nx}x{ny}")));
    }
    if is_flat(fixed) || is_flat(moving) {
        return Err(Error::FlatImage);
    }
    let center = RigidTransform2D::image_center(nx, ny);
    let fp = pyramid::build(fixed, opts.pyramid_levels);
    let mp = pyramid::build(moving, opts.pyramid_levels);
    let top = fp.len() - 1;
    let radius = default_radius(nx, ny, opts);
    let coarse_radius = ((radius as f64 / (1u64 << top) as f64).ceil() as i64).max(1);

    let samples = opts.theta_samples;
    let theta_max = opts.theta_max_deg.to_radians();
    let clip = |c: f64, h: f64| ((c - h).max(-theta_max), (c + h).min(theta_max));
    let mut half_range = theta_max;
    let mut theta_center = 0.0;
    let mut shift = (0i64, 0i64);
    let mut evaluations = 0;
    for l in (0..=top).rev() {
        let c_l = (pyramid::to_level(center.0, l), pyramid::to_level(center.1, l));
        let (lo, hi) = clip(theta_center, half_range);
        let step = (hi - lo) / (samples - 1) as f64;
        let (search_center, r) = if l == top { ((0, 0), coarse_radius) } else { ((2 * shift.0, 2 * shift.1), 2) };
        let scored = par::map_range(samples, |k| {
            let theta = lo + step * k as f64;
            let rotated = rotate(&fp[l], theta, c_l);
            search(&rotated, &mp[l], search_center, r).map(|peak| (theta, peak))
        });
        evaluations += samples;
        let best = scored.into_iter().flatten().fold(None, |acc: Option<(f64, (i64, i64, f64))>, c| match acc {
            Some(a) if a.1 .2 >= c.1 .2 => Some(a),
            _ => Some(c),
        });
        let (theta, peak) = best.ok_or(Error::FlatImage)?;
        theta_center = theta;
        shift = (peak.0, peak.1);
        if l > 0 {
            half_range /= 2.0;
        } else {
            half_range = step;
        }
    }

    // golden-section on the angle, shift re-fitted at every probe
    let probe = |theta: f64| -> Option<(f64, f64, f64)> {
        let rotated = rotate(&fp[0], theta, center);
        search(&rotated, &mp[0], shift, 1).map(|peak| subpixel(&rotated, &mp[0], peak))
    };
    let score = |theta: f64| probe(theta).map_or(f64::NEG_INFINITY, |p| p.2);
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = clip(theta_center, half_range);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (score(c), score(d));
    evaluations += 2;
    if b > a {
        for _ in 0..GOLDEN_ITERATIONS {
            if fc >= fd {
                b = d;
                d = c;
                fd = fc;
                c = b - inv_phi * (b - a);
                fc = score(c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + inv_phi * (b - a);
                fd = score(d);
            }
            evaluations += 1;
        }
    }
    let golden = if fc >= fd { c } else { d };
    let theta = if score(golden) >= score(theta_center) { golden } else { theta_center };
    let (tx, ty, ncc) = probe(theta).ok_or(Error::FlatImage)?;
    Ok(RigidEstimate {
        transform: RigidTransform2D::new(theta, (tx, ty), center),
        ncc,
        evaluations,
    })
}
