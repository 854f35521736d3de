use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{create_dir, index_width, read_json, write_json};
use crate::field::{DisplacementField, FieldStack};
use crate::{par, Error, Result};

pub const FIELDS_SIDECAR: &str = "fields.json";

const DTYPE: &str = "f32le";
const LAYOUT: &str = "row_major_xy_interleaved";

/// Contents of `fields.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldsHeader {
    pub dims: [usize; 2],
    pub nz: usize,
    pub convention: String,
    pub units: String,
    pub dtype: String,
    pub layout: String,
    #[serde(default = "pixel_center")]
    pub origin: String,
    /// Slice index of each file; defaults to `0..nz`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slice_indices: Option<Vec<usize>>,
}

fn pixel_center() -> String {
    "pixel_center".into()
}

impl FieldsHeader {
    pub fn for_stack(f: &FieldStack) -> Self {
        let (nx, ny) = f.dims();
        Self {
            dims: [nx, ny],
            nz: f.len(),
            convention: "backward".into(),
            units: "px".into(),
            dtype: DTYPE.into(),
            layout: LAYOUT.into(),
            origin: pixel_center(),
            slice_indices: Some(f.indices().to_vec()),
        }
    }

    pub fn indices(&self) -> Vec<usize> {
        self.slice_indices.clone().unwrap_or_else(|| (0..self.nz).collect())
    }

    pub fn read(dir: &Path) -> Result<Self> {
        read_json(&dir.join(FIELDS_SIDECAR))
    }
}

fn file_name(z: usize, width: usize) -> String {
    format!("field_{z:0width$}.bin")
}

fn encode(f: &DisplacementField) -> Vec<u8> {
    let mut out = Vec::with_capacity(f.vectors().len() * 8);
    for v in f.vectors() {
        out.extend_from_slice(&v[0].to_le_bytes());
        out.extend_from_slice(&v[1].to_le_bytes());
    }
    out
}

/// Writes one `field_NNNN.bin` per slice plus `fields.json`.
pub fn save_field_stack(f: &FieldStack, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    create_dir(dir)?;
    let width = index_width(*f.indices().last().unwrap_or(&0));
    par::try_map_range(f.len(), |k| {
        let path = dir.join(file_name(f.indices()[k], width));
        std::fs::write(&path, encode(&f.fields()[k])).map_err(|e| Error::io(&path, e))
    })?;
    write_json(&dir.join(FIELDS_SIDECAR), &FieldsHeader::for_stack(f))
}

/// Reads a field stack written by [`save_field_stack`] (or any producer of the same format).
pub fn load_field_stack(dir: impl AsRef<Path>) -> Result<FieldStack> {
    let dir = dir.as_ref();
    let header = FieldsHeader::read(dir)?;
    if header.dtype != DTYPE {
        return Err(Error::HeaderMismatch(format!("dtype {:?}, expected {DTYPE:?}", header.dtype)));
    }
    if header.layout != LAYOUT {
        return Err(Error::HeaderMismatch(format!("layout {:?}, expected {LAYOUT:?}", header.layout)));
    }
    if header.units != "px" {
        return Err(Error::HeaderMismatch(format!("units {:?}, expected \"px\"", header.units)));
    }
    let [nx, ny] = header.dims;
    if nx == 0 || ny == 0 || header.nz == 0 {
        return Err(Error::HeaderMismatch(format!("empty field stack {:?} x {}", header.dims, header.nz)));
    }
    let indices = header.indices();
    if indices.len() != header.nz {
        return Err(Error::HeaderMismatch(format!("nz {} but {} slice indices", header.nz, indices.len())));
    }
    let width = index_width(*indices.last().unwrap_or(&0));
    let expected = nx * ny * 8;
    let fields = par::try_map_range(indices.len(), |k| {
        let path = dir.join(file_name(indices[k], width));
        let bytes = std::fs::read(&path).map_err(|e| Error::io(&path, e))?;
        if bytes.len() % 8 != 0 {
            return Err(Error::TruncatedFile { path, expected, found: bytes.len() });
        }
        if bytes.len() != expected {
            return Err(Error::HeaderMismatch(format!(
                "{} holds {} vectors, sidecar declares {nx}x{ny}",
                path.display(),
                bytes.len() / 8
            )));
        }
        let vectors = bytes
            .chunks_exact(8)
            .map(|c| {
                [
                    f32::from_le_bytes([c[0], c[1], c[2], c[3]]),
                    f32::from_le_bytes([c[4], c[5], c[6], c[7]]),
                ]
            })
            .collect();
        DisplacementField::new(nx, ny, vectors)
    })?;
    FieldStack::with_indices(indices, fields)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_is_little_endian_interleaved() {
        let mut f = DisplacementField::zeros(2, 2);
        f.vectors_mut()[0] = [1.0, -2.0];
        let bytes = encode(&f);
        assert_eq!(&bytes[..4], &1.0f32.to_le_bytes());
        assert_eq!(&bytes[4..8], &(-2.0f32).to_le_bytes());
        assert_eq!(bytes.len(), 32);
    }
}
