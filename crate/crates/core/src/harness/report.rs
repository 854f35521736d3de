use std::fmt::Write as _;
use std::path::Path;

use super::plots::{drift_svg, mean_error_svg, DRIFT_SVG, MEAN_ERROR_SVG};
use crate::io::create_dir;
use crate::metrics::MetricsRecord;
use crate::{Error, Result};

pub const COMPARISON_CSV: &str = "comparison.csv";

/// Aggregate statistics in long format: `method,statistic,value`.
pub fn comparison_csv(records: &[MetricsRecord]) -> String {
    let mut out = String::from("method,statistic,value\n");
    for r in records {
        let (a, s) = (&r.aggregate, &r.similarity_mean);
        let rows = [
            ("mean_px", a.mean),
            ("rms_px", a.rms),
            ("median_px", a.median),
            ("p95_px", a.p95),
            ("max_px", a.max),
            ("drift_px", r.drift.score),
            ("mse", s.mse),
            ("psnr_db", s.psnr_db),
            ("ncc", s.ncc),
            ("ssim", s.ssim),
        ];
        for (name, v) in rows {
            let _ = writeln!(out, "{},{name},{v}", csv_field(&r.method));
        }
    }
    out
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Writes `comparison.csv` and both plots into `out`.
pub fn write_report(records: &[MetricsRecord], out: &Path) -> Result<()> {
    if records.is_empty() || records.iter().any(|r| r.slices.is_empty()) {
        return Err(Error::Config("a report needs at least one record with at least one slice".into()));
    }
    create_dir(out)?;
    for (name, text) in [
        (COMPARISON_CSV, comparison_csv(records)),
        (MEAN_ERROR_SVG, mean_error_svg(records)),
        (DRIFT_SVG, drift_svg(records)),
    ] {
        let path = out.join(name);
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}
