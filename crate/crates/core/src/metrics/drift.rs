use serde::{Deserialize, Serialize};

pub const DEFAULT_DRIFT_WINDOW: usize = 9;

/// Slice-to-slice behaviour of the mean residual.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftProfile {
    pub window: usize,
    /// Mean residual vector of each slice, px.
    pub mean: Vec<[f64; 2]>,
    /// Running sum of `mean`.
    pub cumulative: Vec<[f64; 2]>,
    /// Centred moving average of `mean`, truncated at the ends.
    pub smoothed: Vec<[f64; 2]>,
    /// Largest norm of `smoothed`.
    pub score: f64,
}

/// Builds the profile from per-slice mean residuals. `window` must be odd.
pub fn drift_profile(mean: &[[f64; 2]], window: usize) -> DriftProfile {
    assert!(window % 2 == 1, "drift window must be odd");
    let half = window / 2;
    let mut cumulative = Vec::with_capacity(mean.len());
    let mut acc = [0.0, 0.0];
    for m in mean {
        acc = [acc[0] + m[0], acc[1] + m[1]];
        cumulative.push(acc);
    }
    let smoothed: Vec<[f64; 2]> = (0..mean.len())
        .map(|z| {
            let lo = z.saturating_sub(half);
            let hi = (z + half).min(mean.len() - 1);
            let n = (hi - lo + 1) as f64;
            let s = mean[lo..=hi].iter().fold([0.0, 0.0], |s, m| [s[0] + m[0], s[1] + m[1]]);
            [s[0] / n, s[1] / n]
        })
        .collect();
    let score = smoothed.iter().map(|s| s[0].hypot(s[1])).fold(0.0, f64::max);
    DriftProfile { window, mean: mean.to_vec(), cumulative, smoothed, score }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_errors() {
        let p = drift_profile(&[[0.0; 2]; 5], 9);
        assert_eq!(p.score, 0.0);
        assert!(p.cumulative.iter().all(|c| *c == [0.0, 0.0]));
    }

    #[test]
    fn constant_errors() {
        let p = drift_profile(&[[1.0, 0.0]; 12], 9);
        for (z, c) in p.cumulative.iter().enumerate() {
            assert_eq!(*c, [(z + 1) as f64, 0.0]);
        }
        assert!((p.score - 1.0).abs() < 1e-15);
    }

    #[test]
    fn truncated_window_at_edges() {
        let p = drift_profile(&[[3.0, 0.0], [0.0, 0.0], [0.0, 0.0]], 3);
        assert_eq!(p.smoothed[0], [1.5, 0.0]);
        assert_eq!(p.smoothed[1], [1.0, 0.0]);
        assert_eq!(p.smoothed[2], [0.0, 0.0]);
        assert_eq!(p.cumulative[0], p.mean[0]);
    }
}
