use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;

use super::stack::{read_diagnostics, RegistrationResult};
use crate::field::FieldStack;
use crate::geometry::{rigid_to_field, RigidTransform2D};
use crate::io::{load_field_stack, read_json, FieldsHeader};
use crate::{Error, Result};

pub const TRANSFORMS_FILE: &str = "transforms.json";

/// Layout of an externally produced result directory.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExternalKind {
    /// Field stack in the native format (`fields.json` + `field_NNNN.bin`).
    Fields,
    /// `transforms.json` with one rigid correction per slice.
    RigidParams,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RigidEntry {
    z: usize,
    theta_rad: f64,
    tx_px: f64,
    ty_px: f64,
    cx_px: f64,
    cy_px: f64,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum TransformsFile {
    Bare(Vec<RigidEntry>),
    Wrapped {
        #[serde(default = "backward")]
        convention: String,
        #[serde(default = "pixel_center")]
        origin: String,
        transforms: Vec<RigidEntry>,
    },
}

fn backward() -> String {
    "backward".into()
}

fn pixel_center() -> String {
    "pixel_center".into()
}

fn check_convention(convention: &str, origin: &str) -> Result<()> {
    if convention != "backward" {
        return Err(Error::ConventionMismatch(format!("convention {convention:?}, expected \"backward\"")));
    }
    if origin != "pixel_center" {
        return Err(Error::ConventionMismatch(format!("origin {origin:?}, expected \"pixel_center\"")));
    }
    Ok(())
}

/// Imports a registration result produced outside this crate.
///
/// `dims` are the slice dimensions of the distorted stack and `expected` its
/// slice indices; every expected slice must be present. Rigid parameters are
/// correction transforms and become fields through [`rigid_to_field`].
pub fn import_external(dir: impl AsRef<Path>, kind: ExternalKind, dims: (usize, usize), expected: &[usize]) -> Result<RegistrationResult> {
    let dir = dir.as_ref();
    let fields = match kind {
        ExternalKind::Fields => {
            let header = FieldsHeader::read(dir)?;
            check_convention(&header.convention, &header.origin)?;
            if (header.dims[0], header.dims[1]) != dims {
                return Err(Error::dims(dims, (header.dims[0], header.dims[1])));
            }
            let stack = load_field_stack(dir)?;
            select(&stack, expected)?
        }
        ExternalKind::RigidParams => {
            let (convention, origin, entries) = match read_json::<TransformsFile>(&dir.join(TRANSFORMS_FILE))? {
                TransformsFile::Bare(t) => (backward(), pixel_center(), t),
                TransformsFile::Wrapped { convention, origin, transforms } => (convention, origin, transforms),
            };
            check_convention(&convention, &origin)?;
            let mut by_z = BTreeMap::new();
            for e in entries {
                let t = RigidTransform2D::new(e.theta_rad, (e.tx_px, e.ty_px), (e.cx_px, e.cy_px));
                if [t.theta, t.tx, t.ty, t.cx, t.cy].iter().any(|v| !v.is_finite()) {
                    return Err(Error::NonFinite(format!("transform for slice {}", e.z)));
                }
                if by_z.insert(e.z, t).is_some() {
                    return Err(Error::HeaderMismatch(format!("slice {} listed twice in {TRANSFORMS_FILE}", e.z)));
                }
            }
            let fields = expected
                .iter()
                .map(|z| by_z.get(z).map(|t| rigid_to_field(t, dims.0, dims.1)).ok_or_else(|| missing(*z, expected)))
                .collect::<Result<Vec<_>>>()?;
            FieldStack::with_indices(expected.to_vec(), fields)?
        }
    };
    let diagnostics = read_diagnostics(dir, fields.indices())?
        .into_iter()
        .filter(|d| expected.contains(&d.z))
        .collect();
    Ok(RegistrationResult {
        fields,
        diagnostics,
        method: dir.file_name().map_or_else(|| "external".into(), |n| n.to_string_lossy().into_owned()),
        strategy: "external".into(),
    })
}

fn missing(z: usize, expected: &[usize]) -> Error {
    let width = expected.iter().max().map_or(1, |m| m.to_string().len());
    Error::MissingSlice { index: format!("{z:0width$}") }
}

fn select(stack: &FieldStack, expected: &[usize]) -> Result<FieldStack> {
    if let Some(&z) = expected.iter().find(|z| stack.get(**z).is_none()) {
        return Err(missing(z, expected));
    }
    stack.select(expected)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::DisplacementField;
    use crate::io::{save_field_stack, FIELDS_SIDECAR};

    #[test]
    fn identity_transforms_give_zero_fields() {
        let dir = tempfile::tempdir().unwrap();
        let json = r#"[{"z":0,"theta_rad":0,"tx_px":0,"ty_px":0,"cx_px":15.5,"cy_px":15.5},
                      {"z":1,"theta_rad":0,"tx_px":0,"ty_px":0,"cx_px":15.5,"cy_px":15.5}]"#;
        std::fs::write(dir.path().join(TRANSFORMS_FILE), json).unwrap();
        let r = import_external(dir.path(), ExternalKind::RigidParams, (32, 32), &[0, 1]).unwrap();
        assert!(r.fields.fields().iter().all(DisplacementField::is_zero));
        let err = import_external(dir.path(), ExternalKind::RigidParams, (32, 32), &[0, 1, 2]).unwrap_err();
        assert!(matches!(err, Error::MissingSlice { .. }));
    }

    #[test]
    fn forward_convention_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let f = FieldStack::zeros(8, 8, vec![0, 1]).unwrap();
        save_field_stack(&f, dir.path()).unwrap();
        let path = dir.path().join(FIELDS_SIDECAR);
        let text = std::fs::read_to_string(&path).unwrap().replace("\"backward\"", "\"forward\"");
        std::fs::write(&path, text).unwrap();
        let err = import_external(dir.path(), ExternalKind::Fields, (8, 8), &[0, 1]).unwrap_err();
        assert!(matches!(err, Error::ConventionMismatch(_)), "{err}");

        let json = r#"{"convention":"backward","origin":"corner","transforms":[]}"#;
        std::fs::write(dir.path().join(TRANSFORMS_FILE), json).unwrap();
        let err = import_external(dir.path(), ExternalKind::RigidParams, (8, 8), &[0]).unwrap_err();
        assert!(matches!(err, Error::ConventionMismatch(_)));
    }

    #[test]
    fn fields_import_requires_every_slice() {
        let dir = tempfile::tempdir().unwrap();
        let f = FieldStack::zeros(8, 8, vec![0, 2]).unwrap();
        save_field_stack(&f, dir.path()).unwrap();
        let err = import_external(dir.path(), ExternalKind::Fields, (8, 8), &[0, 1, 2]).unwrap_err();
        assert!(matches!(err, Error::MissingSlice { ref index } if index == "1"));
        let r = import_external(dir.path(), ExternalKind::Fields, (8, 8), &[0, 2]).unwrap();
        assert_eq!(r.fields.indices(), &[0, 2]);
    }
}
