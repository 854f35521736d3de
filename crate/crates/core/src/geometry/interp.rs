use serde::{Deserialize, Serialize};

use crate::field::DisplacementField;
use crate::volume::Slice;

/// Sample points this close outside the domain are snapped onto it, so that
/// round-off in a field never turns an edge pixel into padding.
const DOMAIN_EPS: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Interpolation {
    Nearest,
    #[default]
    Bilinear,
    /// Catmull-Rom (a = -0.5), result clamped to `[0, 1]`.
    Bicubic,
}

/// Interpolation scheme plus the intensity returned outside the domain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterpolationKind {
    pub kind: Interpolation,
    pub pad_value: f32,
}

impl InterpolationKind {
    pub fn new(kind: Interpolation, pad_value: f32) -> Self {
        assert!((0.0..=1.0).contains(&pad_value), "pad value must lie in [0, 1]");
        Self { kind, pad_value }
    }

    pub fn nearest() -> Self {
        Self::new(Interpolation::Nearest, 0.0)
    }

    pub fn bilinear() -> Self {
        Self::new(Interpolation::Bilinear, 0.0)
    }

    pub fn bicubic() -> Self {
        Self::new(Interpolation::Bicubic, 0.0)
    }
}

impl Default for InterpolationKind {
    fn default() -> Self {
        Self::bilinear()
    }
}

/// Snaps `v` into `[0, n-1]` if within tolerance; `None` when outside.
#[inline]
fn in_domain(v: f64, n: usize) -> Option<f64> {
    let hi = (n - 1) as f64;
    if v >= 0.0 && v <= hi {
        Some(v)
    } else if v > -DOMAIN_EPS && v < hi + DOMAIN_EPS {
        Some(v.clamp(0.0, hi))
    } else {
        None
    }
}

/// Splits an in-domain coordinate into a base index and a fraction so that
/// `base + 1` is always a valid index (unless the axis has one pixel).
#[inline]
fn split(v: f64, n: usize) -> (usize, f64) {
    if n == 1 {
        return (0, 0.0);
    }
    let base = (v.floor() as usize).min(n - 2);
    (base, v - base as f64)
}

#[inline]
pub fn catmull_rom_weights(t: f64) -> [f64; 4] {
    let t2 = t * t;
    let t3 = t2 * t;
    [
        0.5 * (-t3 + 2.0 * t2 - t),
        0.5 * (3.0 * t3 - 5.0 * t2 + 2.0),
        0.5 * (-3.0 * t3 + 4.0 * t2 + t),
        0.5 * (t3 - t2),
    ]
}

/// Image value at `(x, y)`; `pad_value` outside `[0, nx-1] x [0, ny-1]`.
pub fn sample_image(img: &Slice, x: f64, y: f64, interp: InterpolationKind) -> f32 {
    let (nx, ny) = img.dims();
    let (Some(x), Some(y)) = (in_domain(x, nx), in_domain(y, ny)) else {
        return interp.pad_value;
    };
    let px = img.pixels();
    match interp.kind {
        Interpolation::Nearest => {
            let xi = (x.round() as usize).min(nx - 1);
            let yi = (y.round() as usize).min(ny - 1);
            px[yi * nx + xi]
        }
        Interpolation::Bilinear => {
            let (x0, fx) = split(x, nx);
            let (y0, fy) = split(y, ny);
            let x1 = (x0 + 1).min(nx - 1);
            let y1 = (y0 + 1).min(ny - 1);
            let p00 = f64::from(px[y0 * nx + x0]);
            let p10 = f64::from(px[y0 * nx + x1]);
            let p01 = f64::from(px[y1 * nx + x0]);
            let p11 = f64::from(px[y1 * nx + x1]);
            let top = p00 * (1.0 - fx) + p10 * fx;
            let bottom = p01 * (1.0 - fx) + p11 * fx;
            (top * (1.0 - fy) + bottom * fy) as f32
        }
        Interpolation::Bicubic => {
            let (x0, fx) = split(x, nx);
            let (y0, fy) = split(y, ny);
            let wx = catmull_rom_weights(fx);
            let wy = catmull_rom_weights(fy);
            let clamp = |i: isize, n: usize| i.clamp(0, n as isize - 1) as usize;
            let mut acc = 0.0;
            for (j, wyj) in wy.iter().enumerate() {
                if *wyj == 0.0 {
                    continue;
                }
                let yy = clamp(y0 as isize + j as isize - 1, ny);
                let mut row = 0.0;
                for (i, wxi) in wx.iter().enumerate() {
                    if *wxi == 0.0 {
                        continue;
                    }
                    let xx = clamp(x0 as isize + i as isize - 1, nx);
                    row += wxi * f64::from(px[yy * nx + xx]);
                }
                acc += wyj * row;
            }
            (acc as f32).clamp(0.0, 1.0)
        }
    }
}

/// Bilinear field value at `(x, y)` with coordinates clamped to the domain.
pub fn sample_field(field: &DisplacementField, x: f64, y: f64) -> [f64; 2] {
    let (nx, ny) = field.dims();
    let x = x.clamp(0.0, (nx - 1) as f64);
    let y = y.clamp(0.0, (ny - 1) as f64);
    let (x0, fx) = split(x, nx);
    let (y0, fy) = split(y, ny);
    let x1 = (x0 + 1).min(nx - 1);
    let y1 = (y0 + 1).min(ny - 1);
    let v = field.vectors();
    let mut out = [0.0; 2];
    for (c, o) in out.iter_mut().enumerate() {
        let p00 = f64::from(v[y0 * nx + x0][c]);
        let p10 = f64::from(v[y0 * nx + x1][c]);
        let p01 = f64::from(v[y1 * nx + x0][c]);
        let p11 = f64::from(v[y1 * nx + x1][c]);
        let top = p00 * (1.0 - fx) + p10 * fx;
        let bottom = p01 * (1.0 - fx) + p11 * fx;
        *o = top * (1.0 - fy) + bottom * fy;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp() -> Slice {
        Slice::from_fn(4, 4, |x, y| (x as f32 + 4.0 * y as f32) / 15.0)
    }

    #[test]
    fn integer_points_are_exact_for_every_kind() {
        let img = ramp();
        for kind in [Interpolation::Nearest, Interpolation::Bilinear, Interpolation::Bicubic] {
            let k = InterpolationKind::new(kind, 0.0);
            for y in 0..4 {
                for x in 0..4 {
                    assert_eq!(sample_image(&img, x as f64, y as f64, k), img.get(x, y));
                }
            }
        }
    }

    #[test]
    fn outside_returns_pad() {
        let img = ramp();
        let k = InterpolationKind::new(Interpolation::Bilinear, 0.75);
        assert_eq!(sample_image(&img, -0.5, 1.0, k), 0.75);
        assert_eq!(sample_image(&img, 1.0, 3.5, k), 0.75);
        // round-off just outside snaps onto the edge
        assert_eq!(sample_image(&img, -1e-7, 0.0, k), img.get(0, 0));
    }

    #[test]
    fn bilinear_midpoint() {
        let img = ramp();
        let v = sample_image(&img, 0.5, 0.5, InterpolationKind::bilinear());
        let expect = (img.get(0, 0) + img.get(1, 0) + img.get(0, 1) + img.get(1, 1)) as f64 / 4.0;
        assert!((f64::from(v) - expect).abs() < 1e-6);
    }

    #[test]
    fn catmull_rom_partition_of_unity() {
        for i in 0..=20 {
            let w = catmull_rom_weights(i as f64 / 20.0);
            assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        assert_eq!(catmull_rom_weights(0.0), [0.0, 1.0, 0.0, 0.0]);
        assert_eq!(catmull_rom_weights(1.0), [0.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn bicubic_is_clamped() {
        let img = Slice::from_fn(4, 1, |x, _| if x < 2 { 0.0 } else { 1.0 });
        let v = sample_image(&img, 2.3, 0.0, InterpolationKind::bicubic());
        assert!((0.0..=1.0).contains(&v));
    }

    #[test]
    fn field_sampling_clamps_coordinates() {
        let f = DisplacementField::from_fn(3, 3, |x, y| [x as f32, y as f32]);
        assert_eq!(sample_field(&f, -5.0, 10.0), [0.0, 2.0]);
        assert_eq!(sample_field(&f, 1.5, 0.25), [1.5, 0.25]);
    }
}
