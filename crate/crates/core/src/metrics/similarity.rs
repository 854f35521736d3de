use serde::{Deserialize, Serialize};

use super::mask::Mask;
use crate::registration::ncc::Moments;
use crate::volume::Slice;
use crate::{Error, Result};

/// Reported PSNR when the images are identical over the mask.
pub const PSNR_CAP_DB: f64 = 99.0;
/// SSIM window side, px.
pub const SSIM_WINDOW: usize = 8;

const C1: f64 = 0.01 * 0.01;
const C2: f64 = 0.03 * 0.03;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimilarityScores {
    pub mse: f64,
    pub psnr_db: f64,
    /// NaN (`null` in JSON) when a masked input is flat and only reachable through `evaluate`.
    #[serde(with = "nan_as_null")]
    pub ncc: f64,
    pub ssim: f64,
}

mod nan_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() { s.serialize_f64(*v) } else { s.serialize_none() }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
    }
}

/// MSE, PSNR, Pearson NCC and mean windowed SSIM over the masked pixels.
pub fn similarity_suite(a: &Slice, b: &Slice, mask: &Mask) -> Result<SimilarityScores> {
    let s = scores(a, b, mask)?;
    if s.ncc.is_nan() {
        return Err(Error::FlatImage);
    }
    Ok(s)
}

/// As [`similarity_suite`], but an undefined NCC is reported as NaN.
pub(crate) fn scores(a: &Slice, b: &Slice, mask: &Mask) -> Result<SimilarityScores> {
    if a.dims() != b.dims() {
        return Err(Error::dims(a.dims(), b.dims()));
    }
    if mask.dims() != a.dims() {
        return Err(Error::dims(a.dims(), mask.dims()));
    }
    let pairs = || {
        a.pixels()
            .iter()
            .zip(b.pixels())
            .zip(mask.bits())
            .filter(|(_, &m)| m)
            .map(|((&p, &q), _)| (f64::from(p), f64::from(q)))
    };
    let mut n = 0usize;
    let mut se = 0.0;
    for (p, q) in pairs() {
        n += 1;
        se += (p - q) * (p - q);
    }
    if n == 0 {
        return Err(Error::EmptyMask);
    }
    let mse = se / n as f64;
    let psnr_db = if mse > 0.0 { (10.0 * (1.0 / mse).log10()).min(PSNR_CAP_DB) } else { PSNR_CAP_DB };
    let ncc = Moments::over(pairs()).correlation().unwrap_or(f64::NAN);
    let ssim = windowed_ssim(a, b, mask).unwrap_or_else(|| ssim_term(&Moments::over(pairs())));
    Ok(SimilarityScores { mse, psnr_db, ncc, ssim })
}

fn ssim_term(m: &Moments) -> f64 {
    let (ma, mb) = (m.mean_a(), m.mean_b());
    let n = m.count();
    let (va, vb, cov) = (m.centered_aa() / n, m.centered_bb() / n, m.centered_ab() / n);
    ((2.0 * ma * mb + C1) * (2.0 * cov + C2)) / ((ma * ma + mb * mb + C1) * (va + vb + C2))
}

/// Summed-area table with a zero first row and column.
fn integral(nx: usize, ny: usize, f: impl Fn(usize) -> f64) -> Vec<f64> {
    let w = nx + 1;
    let mut t = vec![0.0; w * (ny + 1)];
    for y in 0..ny {
        let mut row = 0.0;
        for x in 0..nx {
            row += f(y * nx + x);
            t[(y + 1) * w + x + 1] = t[y * w + x + 1] + row;
        }
    }
    t
}

/// Mean SSIM over all windows lying entirely inside the mask; `None` if there are none.
fn windowed_ssim(a: &Slice, b: &Slice, mask: &Mask) -> Option<f64> {
    let (nx, ny) = a.dims();
    let s = SSIM_WINDOW;
    if nx < s || ny < s {
        return None;
    }
    let (pa, pb, bits) = (a.pixels(), b.pixels(), mask.bits());
    let im = integral(nx, ny, |k| f64::from(u8::from(bits[k])));
    // masked-out pixels are zeroed so they cannot leak in through rounding
    let va = |k: usize| if bits[k] { f64::from(pa[k]) } else { 0.0 };
    let vb = |k: usize| if bits[k] { f64::from(pb[k]) } else { 0.0 };
    let ia = integral(nx, ny, va);
    let ib = integral(nx, ny, vb);
    let iaa = integral(nx, ny, |k| va(k) * va(k));
    let ibb = integral(nx, ny, |k| vb(k) * vb(k));
    let iab = integral(nx, ny, |k| va(k) * vb(k));
    let w = nx + 1;
    let window = |t: &[f64], x: usize, y: usize| t[(y + s) * w + x + s] - t[y * w + x + s] - t[(y + s) * w + x] + t[y * w + x];
    let area = (s * s) as f64;
    let mut total = 0.0;
    let mut count = 0usize;
    for y in 0..=ny - s {
        for x in 0..=nx - s {
            if window(&im, x, y) < area - 0.5 {
                continue;
            }
            let (ma, mb) = (window(&ia, x, y) / area, window(&ib, x, y) / area);
            let va = (window(&iaa, x, y) / area - ma * ma).max(0.0);
            let vb = (window(&ibb, x, y) / area - mb * mb).max(0.0);
            let cov = window(&iab, x, y) / area - ma * mb;
            total += ((2.0 * ma * mb + C1) * (2.0 * cov + C2)) / ((ma * ma + mb * mb + C1) * (va + vb + C2));
            count += 1;
        }
    }
    (count > 0).then(|| total / count as f64)
}
