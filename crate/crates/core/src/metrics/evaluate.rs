use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::drift::{drift_profile, DriftProfile, DEFAULT_DRIFT_WINDOW};
use super::mask::make_mask;
use super::similarity::{scores, SimilarityScores};
use super::stats::{masked_magnitudes, ErrorStats};
use crate::distortion::{DistortionRecord, DistortionSpec};
use crate::field::DisplacementField;
use crate::geometry::{compose_fields, warp_slice, InterpolationKind, INTERIOR_MARGIN};
use crate::io::{create_dir, read_json, write_json};
use crate::registration::RegistrationResult;
use crate::volume::Volume;
use crate::{par, Error, Result};

pub const METRICS_JSON: &str = "metrics.json";
pub const METRICS_CSV: &str = "metrics.csv";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalOptions {
    /// Intensity threshold on the original slice; 0 keeps every pixel.
    pub mask_threshold: f64,
    /// Erosion of the mask, px.
    pub margin: usize,
    /// Odd window of the drift moving average, slices.
    pub drift_window: usize,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self { mask_threshold: 0.0, margin: INTERIOR_MARGIN, drift_window: DEFAULT_DRIFT_WINDOW }
    }
}

impl EvalOptions {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.mask_threshold) {
            return Err(Error::Config(format!("mask_threshold must lie in [0, 1], got {}", self.mask_threshold)));
        }
        if self.drift_window.is_multiple_of(2) {
            return Err(Error::Config(format!("drift_window must be odd, got {}", self.drift_window)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceMetrics {
    pub z: usize,
    pub mask_pixels: usize,
    pub mask_fallback: bool,
    pub error: ErrorStats,
    pub similarity: SimilarityScores,
    /// Mean residual vector over the mask, px.
    pub mean_residual: [f64; 2],
}

/// Full score of one registration result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub method: String,
    pub strategy: String,
    pub distortion: DistortionSpec,
    pub options: EvalOptions,
    /// Statistics over the pooled masked pixels of every slice.
    pub aggregate: ErrorStats,
    /// Per-slice similarity scores averaged over the slices where they are defined.
    pub similarity_mean: SimilarityScores,
    pub drift: DriftProfile,
    pub slices: Vec<SliceMetrics>,
}

/// Residual of correction `r` applied after distortion `d`.
pub fn error_field(d: &DisplacementField, r: &DisplacementField) -> Result<DisplacementField> {
    compose_fields(r, d)
}

/// Scores `result` against the ground truth in `record`.
///
/// `distorted` is the stack the result was computed from (surviving slices
/// only); it is corrected with the result and compared against `original`.
pub fn evaluate(
    result: &RegistrationResult,
    record: &DistortionRecord,
    original: &Volume,
    distorted: &Volume,
    opts: &EvalOptions,
) -> Result<MetricsRecord> {
    opts.validate()?;
    let surviving = record.surviving();
    if result.fields.indices() != surviving.as_slice() {
        return Err(Error::SliceSetMismatch { record: surviving, result: result.fields.indices().to_vec() });
    }
    let distorted_indices = distorted.slice_indices();
    if distorted_indices != surviving {
        return Err(Error::SliceSetMismatch { record: surviving, result: distorted_indices });
    }
    let (nx, ny) = (record.dims[0], record.dims[1]);
    if original.dims() != record.dims {
        return Err(Error::dims(record.dims, original.dims()));
    }
    if result.fields.dims() != (nx, ny) {
        return Err(Error::dims((nx, ny), result.fields.dims()));
    }
    if (distorted.nx(), distorted.ny()) != (nx, ny) {
        return Err(Error::dims((nx, ny), (distorted.nx(), distorted.ny())));
    }

    let per_slice = par::try_map_range(surviving.len(), |k| {
        let z = surviving[k];
        let eval = || -> Result<(SliceMetrics, Vec<f64>)> {
            let d = record.composed.get(z).expect("record holds every slice");
            let r = &result.fields.fields()[k];
            let e = error_field(d, r)?;
            let reference = original.slice(z);
            let mask = make_mask(&reference, opts.mask_threshold, opts.margin);
            if mask.is_empty() {
                return Err(Error::EmptyMask);
            }
            let mut mags = masked_magnitudes(&e, &mask);
            let mut m = [0.0, 0.0];
            for (v, _) in e.vectors().iter().zip(mask.bits()).filter(|(_, &b)| b) {
                m[0] += f64::from(v[0]);
                m[1] += f64::from(v[1]);
            }
            let n = mags.len() as f64;
            mags.sort_by(f64::total_cmp);
            let corrected = warp_slice(&distorted.slice(k), r, InterpolationKind::bilinear())?;
            let similarity = scores(&corrected, &reference, &mask)?;
            let metrics = SliceMetrics {
                z,
                mask_pixels: mags.len(),
                mask_fallback: mask.fallback,
                error: ErrorStats::from_sorted(&mags),
                similarity,
                mean_residual: [m[0] / n, m[1] / n],
            };
            Ok((metrics, mags))
        };
        eval().map_err(|e| e.at_slice(z))
    })?;

    let (slices, pools): (Vec<_>, Vec<_>) = per_slice.into_iter().unzip();
    let aggregate = ErrorStats::from_unsorted(pools.concat());
    let mean_of = |f: fn(&SimilarityScores) -> f64| {
        let v: Vec<f64> = slices.iter().map(|s| f(&s.similarity)).filter(|v| v.is_finite()).collect();
        if v.is_empty() { f64::NAN } else { v.iter().sum::<f64>() / v.len() as f64 }
    };
    let sim = SimilarityScores {
        mse: mean_of(|s| s.mse),
        psnr_db: mean_of(|s| s.psnr_db),
        ncc: mean_of(|s| s.ncc),
        ssim: mean_of(|s| s.ssim),
    };
    let means: Vec<[f64; 2]> = slices.iter().map(|s| s.mean_residual).collect();
    Ok(MetricsRecord {
        method: result.method.clone(),
        strategy: result.strategy.clone(),
        distortion: record.spec,
        options: *opts,
        aggregate,
        similarity_mean: sim,
        drift: drift_profile(&means, opts.drift_window),
        slices,
    })
}

impl MetricsRecord {
    /// Per-slice table in the `metrics.csv` layout.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("z,mean_px,rms_px,median_px,p95_px,max_px,mse,psnr_db,ncc,ssim,m_x_px,m_y_px\n");
        for s in &self.slices {
            let (e, q, m) = (&s.error, &s.similarity, &s.mean_residual);
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{}",
                s.z, e.mean, e.rms, e.median, e.p95, e.max, q.mse, q.psnr_db, q.ncc, q.ssim, m[0], m[1]
            );
        }
        out
    }

    /// Writes `metrics.json` and `metrics.csv` into `dir`.
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        create_dir(dir)?;
        write_json(&dir.join(METRICS_JSON), self)?;
        let path = dir.join(METRICS_CSV);
        std::fs::write(&path, self.to_csv()).map_err(|e| Error::io(&path, e))
    }

    /// Reads `metrics.json` from a directory, or the file itself.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        if path.is_dir() {
            read_json(&path.join(METRICS_JSON))
        } else {
            read_json(path)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn no_correction_leaves_distortion() {
        let d = DisplacementField::from_fn(12, 10, |x, y| [0.1 * x as f32, -0.05 * y as f32]);
        assert_eq!(error_field(&d, &DisplacementField::zeros(12, 10)).unwrap(), d);
    }

    #[test]
    fn constants_cancel() {
        let d = DisplacementField::constant(12, 10, [1.5, -2.25]);
        let r = DisplacementField::constant(12, 10, [-1.5, 2.25]);
        assert!(error_field(&d, &r).unwrap().is_zero());
    }

    #[test]
    fn options_validation() {
        EvalOptions::default().validate().unwrap();
        assert!(EvalOptions { drift_window: 4, ..Default::default() }.validate().is_err());
        assert!(EvalOptions { mask_threshold: 1.5, ..Default::default() }.validate().is_err());
    }
}
