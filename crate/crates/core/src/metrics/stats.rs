use serde::{Deserialize, Serialize};

use super::mask::Mask;
use crate::field::DisplacementField;

/// Summary of a set of error magnitudes, px.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ErrorStats {
    pub count: usize,
    pub mean: f64,
    pub rms: f64,
    pub median: f64,
    pub p95: f64,
    pub max: f64,
}

impl ErrorStats {
    /// Statistics of `values`, which must already be sorted ascending.
    pub fn from_sorted(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Self::default();
        }
        let mut sum = 0.0;
        let mut sq = 0.0;
        for &v in values {
            sum += v;
            sq += v * v;
        }
        Self {
            count: n,
            mean: sum / n as f64,
            rms: (sq / n as f64).sqrt(),
            median: quantile(values, 0.5),
            p95: quantile(values, 0.95),
            max: values[n - 1],
        }
    }

    pub fn from_unsorted(mut values: Vec<f64>) -> Self {
        values.sort_by(f64::total_cmp);
        Self::from_sorted(&values)
    }
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let t = pos - lo as f64;
    // the `t == 0` case keeps exact order statistics exact
    if t == 0.0 { sorted[lo] } else { sorted[lo] + t * (sorted[hi] - sorted[lo]) }
}

/// Magnitudes of `e` at the masked pixels, row-major order.
pub fn masked_magnitudes(e: &DisplacementField, mask: &Mask) -> Vec<f64> {
    e.magnitudes().into_iter().zip(mask.bits()).filter(|(_, &b)| b).map(|(m, _)| m).collect()
}
