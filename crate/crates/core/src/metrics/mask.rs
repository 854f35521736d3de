use crate::geometry::is_interior;
use crate::volume::Slice;

/// Per-pixel evaluation mask.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    nx: usize,
    ny: usize,
    bits: Vec<bool>,
    /// Set when thresholding left nothing and the full interior was used instead.
    pub fallback: bool,
}

impl Mask {
    /// Every pixel at least `margin` px from the border.
    pub fn interior(nx: usize, ny: usize, margin: usize) -> Self {
        let bits = (0..nx * ny).map(|k| is_interior(k % nx, k / nx, nx, ny, margin)).collect();
        Self { nx, ny, bits, fallback: false }
    }

    pub fn from_bits(nx: usize, ny: usize, bits: Vec<bool>) -> Self {
        assert_eq!(bits.len(), nx * ny, "mask size");
        Self { nx, ny, bits, fallback: false }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.nx + x]
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }
}

/// Foreground `intensity >= threshold`, eroded by `margin` px (square
/// structuring element; pixels beyond the border count as background).
/// Falls back to the interior when nothing survives.
pub fn make_mask(s: &Slice, threshold: f64, margin: usize) -> Mask {
    let (nx, ny) = s.dims();
    let fg: Vec<bool> = s.pixels().iter().map(|&p| f64::from(p) >= threshold).collect();
    let mut bits = fg.clone();
    if margin > 0 {
        // separable erosion: rows, then columns
        let mut rows = vec![false; nx * ny];
        for y in 0..ny {
            for x in 0..nx {
                rows[y * nx + x] = x >= margin && x + margin < nx && (x - margin..=x + margin).all(|i| fg[y * nx + i]);
            }
        }
        for y in 0..ny {
            for x in 0..nx {
                bits[y * nx + x] = y >= margin && y + margin < ny && (y - margin..=y + margin).all(|j| rows[j * nx + x]);
            }
        }
    }
    let mask = Mask { nx, ny, bits, fallback: false };
    if mask.is_empty() {
        Mask { fallback: true, ..Mask::interior(nx, ny, margin) }
    } else {
        mask
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_threshold_is_interior() {
        let s = Slice::from_fn(20, 16, |x, y| (x + y) as f32 / 40.0);
        let m = make_mask(&s, 0.0, 4);
        assert_eq!(m, Mask::interior(20, 16, 4));
        assert_eq!(m.count(), 12 * 8);
        assert!(!m.fallback);
    }

    #[test]
    fn black_slice_falls_back() {
        let m = make_mask(&Slice::filled(20, 20, 0.0), 0.1, 4);
        assert!(m.fallback);
        assert_eq!(m.count(), 12 * 12);
    }

    #[test]
    fn half_bright_slice() {
        // bright for x >= 10
        let s = Slice::from_fn(24, 20, |x, _| if x >= 10 { 0.9 } else { 0.1 });
        let m = make_mask(&s, 0.5, 3);
        let mut count = 0;
        for y in 0..20 {
            for x in 0..24 {
                let expect = x >= 13 && x + 3 < 24 && y >= 3 && y + 3 < 20;
                assert_eq!(m.get(x, y), expect, "({x},{y})");
                count += usize::from(expect);
            }
        }
        assert_eq!(m.count(), count);
        assert_eq!(count, 8 * 14);
    }
}
