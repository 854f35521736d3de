use crate::volume::Slice;
use crate::{par, Error, Result};

/// Pearson correlation of two equally sized slices over all pixels.
pub fn ncc(a: &Slice, b: &Slice) -> Result<f64> {
    if a.dims() != b.dims() {
        return Err(Error::dims(a.dims(), b.dims()));
    }
    let m = Moments::over(a.pixels().iter().zip(b.pixels()).map(|(&p, &q)| (f64::from(p), f64::from(q))));
    m.correlation().ok_or(Error::FlatImage)
}

#[derive(Default)]
pub(crate) struct Moments {
    n: f64,
    sa: f64,
    sb: f64,
    saa: f64,
    sbb: f64,
    sab: f64,
}

impl Moments {
    pub(crate) fn over(pairs: impl Iterator<Item = (f64, f64)>) -> Self {
        let mut m = Moments::default();
        for (a, b) in pairs {
            m.n += 1.0;
            m.sa += a;
            m.sb += b;
            m.saa += a * a;
            m.sbb += b * b;
            m.sab += a * b;
        }
        m
    }

    pub(crate) fn correlation(&self) -> Option<f64> {
        if self.n < 2.0 {
            return None;
        }
        let va = self.saa - self.sa * self.sa / self.n;
        let vb = self.sbb - self.sb * self.sb / self.n;
        let cov = self.sab - self.sa * self.sb / self.n;
        let eps = 1e-12 * self.n;
        if va <= eps || vb <= eps {
            return None;
        }
        Some((cov / (va * vb).sqrt()).clamp(-1.0, 1.0))
    }
}

impl Moments {
    pub(crate) fn mean_a(&self) -> f64 {
        self.sa / self.n
    }
    pub(crate) fn mean_b(&self) -> f64 {
        self.sb / self.n
    }
    pub(crate) fn centered_aa(&self) -> f64 {
        self.saa - self.sa * self.sa / self.n
    }
    pub(crate) fn centered_bb(&self) -> f64 {
        self.sbb - self.sb * self.sb / self.n
    }
    pub(crate) fn centered_ab(&self) -> f64 {
        self.sab - self.sa * self.sb / self.n
    }
    pub(crate) fn count(&self) -> f64 {
        self.n
    }
}

/// Whether a slice has any intensity variation.
pub(crate) fn is_flat(s: &Slice) -> bool {
    let first = s.pixels()[0];
    s.pixels().iter().all(|&p| p == first)
}

/// NCC of `fixed(x)` against `moving(x + s)` over the overlap, or `None`
/// when the overlap is small or flat.
pub(crate) fn shift_ncc(fixed: &Slice, moving: &Slice, sx: i64, sy: i64) -> Option<f64> {
    let (nx, ny) = (fixed.nx() as i64, fixed.ny() as i64);
    let (x0, x1) = ((-sx).max(0), (nx - sx).min(nx));
    let (y0, y1) = ((-sy).max(0), (ny - sy).min(ny));
    if x1 - x0 < 2 || y1 - y0 < 2 || 4 * (x1 - x0) * (y1 - y0) < nx * ny {
        return None;
    }
    let f = fixed.pixels();
    let m = moving.pixels();
    let pairs = (y0..y1).flat_map(|y| {
        (x0..x1).map(move |x| {
            let a = f[(y * nx + x) as usize];
            let b = m[((y + sy) * nx + x + sx) as usize];
            (f64::from(a), f64::from(b))
        })
    });
    Moments::over(pairs).correlation()
}

/// Best integer shift within `radius` of `center`; ties go to the first in scan order.
pub(crate) fn search(fixed: &Slice, moving: &Slice, center: (i64, i64), radius: i64) -> Option<(i64, i64, f64)> {
    let side = (2 * radius + 1) as usize;
    let scores = par::map_range(side * side, |k| {
        let sx = center.0 - radius + (k % side) as i64;
        let sy = center.1 - radius + (k / side) as i64;
        shift_ncc(fixed, moving, sx, sy).map(|v| (sx, sy, v))
    });
    scores.into_iter().flatten().fold(None, |best: Option<(i64, i64, f64)>, c| match best {
        Some(b) if b.2 >= c.2 => Some(b),
        _ => Some(c),
    })
}

/// Sub-pixel peak from a quadratic fit to the 3x3 NCC neighbourhood of `peak`.
/// Returns `(x, y, ncc_at_peak)`.
pub(crate) fn subpixel(fixed: &Slice, moving: &Slice, peak: (i64, i64, f64)) -> (f64, f64, f64) {
    let (px, py, pv) = peak;
    let mut f = [[0.0f64; 3]; 3];
    for (j, row) in f.iter_mut().enumerate() {
        for (i, v) in row.iter_mut().enumerate() {
            let (dx, dy) = (i as i64 - 1, j as i64 - 1);
            *v = if dx == 0 && dy == 0 {
                pv
            } else {
                match shift_ncc(fixed, moving, px + dx, py + dy) {
                    Some(v) => v,
                    None => return (px as f64, py as f64, pv),
                }
            };
        }
    }
    // least-squares quadric a + b x + c y + d x^2 + e xy + g y^2 on {-1,0,1}^2
    let (mut b, mut c, mut d, mut e, mut g) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (j, row) in f.iter().enumerate() {
        for (i, &v) in row.iter().enumerate() {
            let (x, y) = (i as f64 - 1.0, j as f64 - 1.0);
            b += x * v / 6.0;
            c += y * v / 6.0;
            d += (x * x - 2.0 / 3.0) * v / 2.0;
            g += (y * y - 2.0 / 3.0) * v / 2.0;
            e += x * y * v / 4.0;
        }
    }
    let det = 4.0 * d * g - e * e;
    let (ox, oy) = if d < 0.0 && det > 0.0 {
        ((-2.0 * g * b + e * c) / det, (-2.0 * d * c + e * b) / det)
    } else {
        // separable parabolas through the centre row and column
        let para = |m: f64, z: f64, p: f64| {
            let den = m - 2.0 * z + p;
            if den < 0.0 { 0.5 * (m - p) / den } else { 0.0 }
        };
        (para(f[1][0], f[1][1], f[1][2]), para(f[0][1], f[1][1], f[2][1]))
    };
    let (ox, oy) = (ox.clamp(-1.0, 1.0), oy.clamp(-1.0, 1.0));
    let a = f.iter().flatten().sum::<f64>() / 9.0 - (d + g) * 2.0 / 3.0;
    let value = a + b * ox + c * oy + d * ox * ox + e * ox * oy + g * oy * oy;
    (px as f64 + ox, py as f64 + oy, value.max(pv).min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn texture(nx: usize, ny: usize, phase: f32) -> Slice {
        Slice::from_fn(nx, ny, |x, y| {
            let (x, y) = (x as f32 + phase, y as f32);
            0.5 + 0.2 * (x * 0.37).sin() * (y * 0.23).cos() + 0.15 * (0.11 * x + 0.29 * y).sin()
        })
    }

    #[test]
    fn ncc_identity_and_inversion() {
        let a = texture(32, 32, 0.0);
        assert!((ncc(&a, &a).unwrap() - 1.0).abs() < 1e-12);
        let inv = a.map(|p| 1.0 - p);
        assert!((ncc(&a, &inv).unwrap() + 1.0).abs() < 1e-9);
        assert!(matches!(ncc(&Slice::filled(4, 4, 0.3), &a.map(|p| p)), Err(Error::DimensionMismatch { .. })));
        assert!(matches!(ncc(&Slice::filled(4, 4, 0.3), &Slice::filled(4, 4, 0.3)), Err(Error::FlatImage)));
    }

    #[test]
    fn search_finds_integer_shift() {
        let fixed = texture(48, 40, 0.0);
        let f = |x: f32, y: f32| 0.5 + 0.2 * (x * 0.37).sin() * (y * 0.23).cos() + 0.15 * (0.11 * x + 0.29 * y).sin();
        // moving(x + 3, y - 2) = fixed(x, y)
        let moving = Slice::from_fn(48, 40, |x, y| f(x as f32 - 3.0, y as f32 + 2.0));
        let (sx, sy, v) = search(&fixed, &moving, (0, 0), 6).unwrap();
        assert_eq!((sx, sy), (3, -2));
        assert!(v > 0.999);
        let (fx, fy, _) = subpixel(&fixed, &moving, (sx, sy, v));
        assert!((fx - 3.0).abs() < 0.1 && (fy + 2.0).abs() < 0.1, "{fx} {fy}");
    }
}
