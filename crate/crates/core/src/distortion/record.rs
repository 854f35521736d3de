use std::path::Path;

use serde::{Deserialize, Serialize};

use super::DistortionSpec;
use crate::field::FieldStack;
use crate::geometry::RigidTransform2D;
use crate::io::{create_dir, load_field_stack, read_json, save_field_stack, write_json};
use crate::{Error, Result};

pub const RECORD_FILE: &str = "record.json";
const GROUND_TRUTH_DIR: &str = "ground_truth";
const ELASTIC_DIR: &str = "elastic";

/// Everything sampled for one slice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceDistortion {
    pub z: usize,
    pub rigid: RigidTransform2D,
    pub gamma: f64,
    pub dropped: bool,
}

/// Ground truth of one distortion run.
///
/// `composed` holds, for every slice including dropped ones, the backward
/// field `compose(elastic, rigid_to_field(rigid))` that maps the original
/// slice onto the distorted one.
#[derive(Debug, Clone, PartialEq)]
pub struct DistortionRecord {
    pub spec: DistortionSpec,
    pub dims: [usize; 3],
    pub rng_algorithm: String,
    pub slices: Vec<SliceDistortion>,
    pub elastic: FieldStack,
    pub composed: FieldStack,
    pub dropped_slices: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct RecordFile {
    spec: DistortionSpec,
    dims: [usize; 3],
    rng_algorithm: String,
    dropped_slices: Vec<usize>,
    slices: Vec<SliceDistortion>,
}

impl DistortionRecord {
    /// Slice indices present in the distorted stack.
    pub fn surviving(&self) -> Vec<usize> {
        (0..self.dims[2]).filter(|z| self.dropped_slices.binary_search(z).is_err()).collect()
    }

    /// Ground-truth fields of the surviving slices.
    pub fn surviving_fields(&self) -> FieldStack {
        self.composed.select(&self.surviving()).expect("record holds every slice")
    }

    /// Writes `record.json`, `ground_truth/` and `elastic/` under `dir`.
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        create_dir(dir)?;
        save_field_stack(&self.composed, dir.join(GROUND_TRUTH_DIR))?;
        save_field_stack(&self.elastic, dir.join(ELASTIC_DIR))?;
        let file = RecordFile {
            spec: self.spec,
            dims: self.dims,
            rng_algorithm: self.rng_algorithm.clone(),
            dropped_slices: self.dropped_slices.clone(),
            slices: self.slices.clone(),
        };
        write_json(&dir.join(RECORD_FILE), &file)
    }

    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let file: RecordFile = read_json(&dir.join(RECORD_FILE))?;
        let composed = load_field_stack(dir.join(GROUND_TRUTH_DIR))?;
        let elastic = load_field_stack(dir.join(ELASTIC_DIR))?;
        let [nx, ny, nz] = file.dims;
        for f in [&composed, &elastic] {
            if f.dims() != (nx, ny) || f.indices() != (0..nz).collect::<Vec<_>>().as_slice() {
                return Err(Error::HeaderMismatch(format!(
                    "record dims {:?} disagree with stored fields {:?} x {}",
                    file.dims,
                    f.dims(),
                    f.len()
                )));
            }
        }
        if file.slices.len() != nz {
            return Err(Error::HeaderMismatch(format!("{} slice entries for nz = {nz}", file.slices.len())));
        }
        Ok(Self {
            spec: file.spec,
            dims: file.dims,
            rng_algorithm: file.rng_algorithm,
            slices: file.slices,
            elastic,
            composed,
            dropped_slices: file.dropped_slices,
        })
    }
}
