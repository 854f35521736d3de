//! On-disk formats.
//!
//! * Slice stacks: one single-channel 8- or 16-bit PNG/TIFF per slice with a
//!   zero-padded numeric index, plus a `stack.json` sidecar.
//! * Field stacks: one raw little-endian `f32` file per slice, row-major,
//!   `(ux, uy)` interleaved, plus a `fields.json` sidecar.

mod fields;
mod stack;

use std::path::Path;

use serde::Serialize;

pub use fields::{load_field_stack, save_field_stack, FieldsHeader, FIELDS_SIDECAR};
pub use stack::{load_stack, save_stack, save_stack_as, RasterFormat, StackHeader, STACK_SIDECAR};

use crate::{Error, Result};

pub(crate) fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Pretty JSON with a trailing newline.
pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::json(path, e))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub(crate) fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::json(path, e))
}

/// Zero-padding width used for slice file names.
pub(crate) fn index_width(max_index: usize) -> usize {
    max_index.to_string().len().max(4)
}
