use serde_json::Value;

use super::record::{DistortionRecord, SliceDistortion};
use super::sample::{sample_drops, sample_elastic, sample_gamma, sample_rigid};
use super::DistortionSpec;
use crate::field::FieldStack;
use crate::geometry::{compose_fields, invert_field, rigid_to_field, warp_slice, InterpolationKind};
use crate::volume::{Slice, Volume};
use crate::{par, rng, Error, Result};

/// Distorts every slice of `v`; returns the surviving slices and the record.
///
/// The distorted volume carries the original indices of its slices under the
/// `slice_indices` provenance key.
pub fn distort_volume(v: &Volume, spec: &DistortionSpec) -> Result<(Volume, DistortionRecord)> {
    spec.validate()?;
    let (nx, ny, nz) = (v.nx(), v.ny(), v.nz());
    let dropped = sample_drops(spec, nz);

    let per_slice = par::try_map_range(nz, |z| -> Result<_> {
        let rigid = sample_rigid(spec, z, (nx, ny));
        let elastic = sample_elastic(spec, z, (nx, ny));
        let composed = compose_fields(&elastic, &rigid_to_field(&rigid, nx, ny))?;
        let gamma = sample_gamma(spec, z);
        let distorted = if dropped.binary_search(&z).is_ok() {
            None
        } else {
            let warped = warp_slice(&v.slice(z), &composed, InterpolationKind::bilinear())?;
            Some(if gamma == 1.0 { warped } else { warped.map(|p| f64::from(p).powf(gamma) as f32) })
        };
        Ok((rigid, elastic, composed, gamma, distorted))
    })?;

    let mut slices = Vec::with_capacity(nz);
    let mut elastic = Vec::with_capacity(nz);
    let mut composed = Vec::with_capacity(nz);
    let mut kept: Vec<Slice> = Vec::new();
    for (z, (rigid, e, c, gamma, d)) in per_slice.into_iter().enumerate() {
        slices.push(SliceDistortion { z, rigid, gamma, dropped: d.is_none() });
        elastic.push(e);
        composed.push(c);
        kept.extend(d);
    }
    if kept.is_empty() {
        return Err(Error::InvalidSpec("every slice was dropped".into()));
    }
    let record = DistortionRecord {
        spec: *spec,
        dims: v.dims(),
        rng_algorithm: rng::ALGORITHM.to_string(),
        slices,
        elastic: FieldStack::new(elastic)?,
        composed: FieldStack::new(composed)?,
        dropped_slices: dropped,
    };
    let mut provenance = v.provenance().clone();
    provenance.remove("source_paths");
    provenance.insert("pipeline_step".into(), "distort".into());
    provenance.insert("distortion_seed".into(), spec.seed.into());
    provenance.insert(
        "slice_indices".into(),
        Value::from(record.surviving().into_iter().map(|z| z as u64).collect::<Vec<_>>()),
    );
    let out = Volume::from_slices(kept, v.spacing())?.with_provenance(provenance);
    Ok((out, record))
}

/// Ideal correction of every surviving slice: the inverse of its ground-truth field.
pub fn oracle_recovery(record: &DistortionRecord, tol: f64) -> Result<FieldStack> {
    let surviving = record.surviving();
    let fields = par::try_map_range(surviving.len(), |k| {
        let z = surviving[k];
        let d = record.composed.get(z).expect("record holds every slice");
        invert_field(d, tol, 100).map(|inv| inv.field).map_err(|e| e.at_slice(z))
    })?;
    FieldStack::with_indices(surviving, fields)
}
