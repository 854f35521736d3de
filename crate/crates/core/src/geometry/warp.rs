use super::interp::{sample_image, InterpolationKind};
use crate::field::{DisplacementField, FieldStack};
use crate::volume::{Slice, Volume};
use crate::{par, Error, Result};

/// `out(x) = interp(s, x + u(x))`.
pub fn warp_slice(s: &Slice, u: &DisplacementField, interp: InterpolationKind) -> Result<Slice> {
    if s.dims() != u.dims() {
        return Err(Error::dims(s.dims(), u.dims()));
    }
    let (nx, ny) = s.dims();
    let mut out = vec![0.0f32; nx * ny];
    let vectors = u.vectors();
    par::for_each_row(&mut out, nx, |y, row| {
        for (x, o) in row.iter_mut().enumerate() {
            let d = vectors[y * nx + x];
            if d == [0.0, 0.0] {
                *o = s.get(x, y);
            } else {
                let sx = x as f64 + f64::from(d[0]);
                let sy = y as f64 + f64::from(d[1]);
                *o = sample_image(s, sx, sy, interp);
            }
        }
    });
    Ok(Slice::from_raw(nx, ny, out))
}

/// Warps slice `k` of `v` by the `k`-th field of `f`; spacing and provenance carry over.
pub fn warp_volume(v: &Volume, f: &FieldStack, interp: InterpolationKind) -> Result<Volume> {
    if f.len() != v.nz() {
        return Err(Error::dims(v.nz(), f.len()));
    }
    if f.dims() != (v.nx(), v.ny()) {
        return Err(Error::dims((v.nx(), v.ny()), f.dims()));
    }
    let slices = par::try_map_range(v.nz(), |k| warp_slice(&v.slice(k), &f.fields()[k], interp))?;
    Ok(Volume::from_slices(slices, v.spacing())?.with_provenance(v.provenance().clone()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Interpolation;

    fn ramp() -> Slice {
        Slice::from_fn(4, 4, |x, _| x as f32 / 3.0)
    }

    #[test]
    fn zero_field_is_identity_for_all_kinds() {
        let img = Slice::from_fn(5, 3, |x, y| ((x * 7 + y * 3) % 11) as f32 / 10.0);
        for kind in [Interpolation::Nearest, Interpolation::Bilinear, Interpolation::Bicubic] {
            let out = warp_slice(&img, &DisplacementField::zeros(5, 3), InterpolationKind::new(kind, 0.3)).unwrap();
            assert_eq!(out, img);
        }
    }

    /// Per-pixel oracle: out(x, y) = ramp(x - 1) for x >= 1, pad for x = 0.
    #[test]
    fn ramp_shifts_right_with_pad() {
        let img = ramp();
        let out = warp_slice(&img, &DisplacementField::constant(4, 4, [-1.0, 0.0]), InterpolationKind::new(Interpolation::Bilinear, 0.2)).unwrap();
        for y in 0..4 {
            assert_eq!(out.get(0, y), 0.2);
            for x in 1..4 {
                assert_eq!(out.get(x, y), img.get(x - 1, y));
            }
        }
    }

    #[test]
    fn constant_image_half_pixel_shift() {
        let img = Slice::filled(4, 4, 0.6);
        let out = warp_slice(&img, &DisplacementField::constant(4, 4, [0.5, 0.5]), InterpolationKind::new(Interpolation::Bilinear, 0.0)).unwrap();
        for y in 0..4 {
            for x in 0..4 {
                let expect = if x == 3 || y == 3 { 0.0 } else { 0.6 };
                assert!((out.get(x, y) - expect).abs() < 1e-6, "({x},{y})");
            }
        }
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let r = warp_slice(&ramp(), &DisplacementField::zeros(3, 4), InterpolationKind::bilinear());
        assert!(matches!(r, Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn warp_volume_is_per_slice() {
        let v = Volume::from_slices(vec![ramp(), ramp(), ramp()], [1.0; 3]).unwrap();
        let f = FieldStack::new(vec![
            DisplacementField::constant(4, 4, [-1.0, 0.0]),
            DisplacementField::zeros(4, 4),
            DisplacementField::zeros(4, 4),
        ])
        .unwrap();
        let out = warp_volume(&v, &f, InterpolationKind::bilinear()).unwrap();
        assert_ne!(out.slice(0), v.slice(0));
        assert_eq!(out.slice(1), v.slice(1));
        assert_eq!(out.slice(2), v.slice(2));
    }
}
