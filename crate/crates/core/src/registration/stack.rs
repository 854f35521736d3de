use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::elastic::register_elastic;
use super::ncc::ncc;
use super::options::{MethodKind, RegistrationMethod, StackStrategy};
use super::rigid::register_rigid;
use super::translation::register_translation_with;
use crate::field::{DisplacementField, FieldStack};
use crate::geometry::{warp_slice, InterpolationKind};
use crate::io::{create_dir, load_field_stack, read_json, save_field_stack, write_json};
use crate::volume::{Slice, Volume};
use crate::{par, Error, Result};

pub const DIAGNOSTICS_FILE: &str = "diagnostics.csv";
const RESULT_FILE: &str = "result.json";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SliceDiagnostics {
    pub z: usize,
    /// NCC of the corrected slice against its fixed slice; NaN when undefined.
    pub similarity_final: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Correction fields for every slice of a stack, plus per-slice diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct RegistrationResult {
    pub fields: FieldStack,
    pub diagnostics: Vec<SliceDiagnostics>,
    pub method: String,
    pub strategy: String,
}

#[derive(Serialize, Deserialize)]
struct ResultHeader {
    method: String,
    strategy: String,
}

impl RegistrationResult {
    /// Writes the field stack, `diagnostics.csv` and a small `result.json`.
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        create_dir(dir)?;
        save_field_stack(&self.fields, dir)?;
        let mut csv = String::from("z,similarity_final,iterations,converged\n");
        for d in &self.diagnostics {
            let _ = writeln!(csv, "{},{},{},{}", d.z, d.similarity_final, d.iterations, d.converged);
        }
        let path = dir.join(DIAGNOSTICS_FILE);
        std::fs::write(&path, csv).map_err(|e| Error::io(&path, e))?;
        write_json(&dir.join(RESULT_FILE), &ResultHeader { method: self.method.clone(), strategy: self.strategy.clone() })
    }

    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let fields = load_field_stack(dir)?;
        let header: ResultHeader = if dir.join(RESULT_FILE).exists() {
            read_json(&dir.join(RESULT_FILE))?
        } else {
            ResultHeader { method: "external".into(), strategy: "unknown".into() }
        };
        let diagnostics = read_diagnostics(dir, fields.indices())?;
        Ok(Self { fields, diagnostics, method: header.method, strategy: header.strategy })
    }
}

/// Reads `diagnostics.csv` if present; otherwise NaN placeholders for `indices`.
pub(crate) fn read_diagnostics(dir: &Path, indices: &[usize]) -> Result<Vec<SliceDiagnostics>> {
    let path = dir.join(DIAGNOSTICS_FILE);
    if !path.exists() {
        return Ok(indices
            .iter()
            .map(|&z| SliceDiagnostics { z, similarity_final: f64::NAN, iterations: 0, converged: false })
            .collect());
    }
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let bad = |line: &str| Error::HeaderMismatch(format!("{}: bad row {line:?}", path.display()));
    text.lines()
        .skip(1)
        .filter(|l| !l.trim().is_empty())
        .map(|line| {
            let cols: Vec<&str> = line.split(',').map(str::trim).collect();
            if cols.len() != 4 {
                return Err(bad(line));
            }
            Ok(SliceDiagnostics {
                z: cols[0].parse().map_err(|_| bad(line))?,
                similarity_final: cols[1].parse().map_err(|_| bad(line))?,
                iterations: cols[2].parse().map_err(|_| bad(line))?,
                converged: cols[3].parse().map_err(|_| bad(line))?,
            })
        })
        .collect()
}

/// Registers `moving` onto `fixed`; returns the correction field and diagnostics (with `z = 0`).
pub fn register_pair(fixed: &Slice, moving: &Slice, method: &RegistrationMethod) -> Result<(DisplacementField, SliceDiagnostics)> {
    if fixed.dims() != moving.dims() {
        return Err(Error::dims(fixed.dims(), moving.dims()));
    }
    let (nx, ny) = fixed.dims();
    let opts = &method.options;
    let (field, iterations, converged) = match method.kind {
        MethodKind::Identity => (DisplacementField::zeros(nx, ny), 0, true),
        MethodKind::Translation => {
            let t = register_translation_with(fixed, moving, opts)?;
            (DisplacementField::constant(nx, ny, [t.tx as f32, t.ty as f32]), 1, t.interior_peak)
        }
        MethodKind::Rigid => {
            let r = register_rigid(fixed, moving, opts)?;
            (r.correction_field(nx, ny), r.evaluations, !r.low_similarity())
        }
        MethodKind::Elastic => {
            let e = register_elastic(fixed, moving, opts)?;
            (e.field, e.iterations, e.converged)
        }
    };
    let similarity_final = if field.is_zero() {
        ncc(fixed, moving)
    } else {
        ncc(fixed, &warp_slice(moving, &field, InterpolationKind::bilinear())?)
    }
    .unwrap_or(f64::NAN);
    Ok((field, SliceDiagnostics { z: 0, similarity_final, iterations, converged }))
}

/// Registers every slice of a (possibly gappy) stack.
///
/// Chain: the first slice keeps a zero field and each later slice is
/// registered to the corrected previous one. Fixed reference: every slice is
/// registered to the reference slice, in parallel. Fails on the first slice
/// that errors.
pub fn register_stack(v: &Volume, method: &RegistrationMethod, strategy: StackStrategy) -> Result<RegistrationResult> {
    let indices = v.slice_indices();
    if indices.len() < 2 {
        return Err(Error::InvalidSpec(format!("stack registration needs >= 2 slices, got {}", indices.len())));
    }
    if method.kind != MethodKind::Identity {
        method.options.validate()?;
    }
    let (nx, ny) = (v.nx(), v.ny());
    let slices = v.slices();
    let mut pairs: Vec<(DisplacementField, SliceDiagnostics)> = match strategy {
        StackStrategy::ChainToPrevious => {
            let mut out = Vec::with_capacity(slices.len());
            out.push((DisplacementField::zeros(nx, ny), reference_diagnostics()));
            let mut previous = slices[0].clone();
            for (k, moving) in slices.iter().enumerate().skip(1) {
                let (field, diag) = register_pair(&previous, moving, method).map_err(|e| e.at_slice(indices[k]))?;
                previous = if field.is_zero() {
                    moving.clone()
                } else {
                    warp_slice(moving, &field, InterpolationKind::bilinear())?
                };
                out.push((field, diag));
            }
            out
        }
        StackStrategy::FixedReference { reference } => {
            let r = match reference {
                None => indices.len() / 2,
                Some(z) => indices.iter().position(|&i| i == z).ok_or_else(|| {
                    Error::Config(format!("reference slice {z} is not in the stack {indices:?}"))
                })?,
            };
            par::try_map_range(slices.len(), |k| {
                if k == r {
                    Ok((DisplacementField::zeros(nx, ny), reference_diagnostics()))
                } else {
                    register_pair(&slices[r], &slices[k], method).map_err(|e| e.at_slice(indices[k]))
                }
            })?
        }
    };
    for (k, p) in pairs.iter_mut().enumerate() {
        p.1.z = indices[k];
    }
    let (fields, diagnostics): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
    Ok(RegistrationResult {
        fields: FieldStack::with_indices(indices, fields)?,
        diagnostics,
        method: method.kind.name().into(),
        strategy: strategy.name(),
    })
}

fn reference_diagnostics() -> SliceDiagnostics {
    SliceDiagnostics { z: 0, similarity_final: 1.0, iterations: 0, converged: true }
}
