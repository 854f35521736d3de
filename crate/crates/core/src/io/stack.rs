use std::path::{Path, PathBuf};

use image::{DynamicImage, ImageBuffer, ImageReader, Luma};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::{create_dir, index_width, read_json, write_json};
use crate::volume::Volume;
use crate::{par, Error, Result};

pub const STACK_SIDECAR: &str = "stack.json";

/// Contents of `stack.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StackHeader {
    pub dims: [usize; 3],
    pub spacing_um: [f64; 3],
    pub bit_depth: u8,
    #[serde(default)]
    pub provenance: Map<String, Value>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RasterFormat {
    #[default]
    Png,
    Tiff,
}

impl RasterFormat {
    fn extension(self) -> &'static str {
        match self {
            RasterFormat::Png => "png",
            RasterFormat::Tiff => "tif",
        }
    }
}

struct IndexedFile {
    index: usize,
    width: usize,
    path: PathBuf,
}

fn is_raster(p: &Path) -> bool {
    matches!(
        p.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref(),
        Some("png" | "tif" | "tiff")
    )
}

/// Last run of ASCII digits in `s`, with its width.
fn trailing_index(s: &str) -> Option<(usize, usize)> {
    let end = s.rfind(|c: char| c.is_ascii_digit())? + 1;
    let start = s[..end].rfind(|c: char| !c.is_ascii_digit()).map_or(0, |i| i + 1);
    let digits = &s[start..end];
    digits.parse().ok().map(|i| (i, digits.len()))
}

/// Files named by a directory, a single-`*` pattern, or one literal path.
fn resolve(pattern: &Path) -> Result<Vec<IndexedFile>> {
    let (dir, matcher): (PathBuf, Box<dyn Fn(&str) -> Option<String>>) = if pattern.is_dir() {
        (pattern.to_path_buf(), Box::new(|name: &str| {
            Path::new(name).file_stem().and_then(|s| s.to_str()).map(str::to_string)
        }))
    } else {
        let name = pattern
            .file_name()
            .and_then(|n| n.to_str())
            .ok_or_else(|| Error::UnsupportedFormat(format!("bad stack pattern {}", pattern.display())))?
            .to_string();
        let dir = pattern.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new(".")).to_path_buf();
        match name.split_once('*') {
            Some((pre, post)) => {
                let (pre, post) = (pre.to_string(), post.to_string());
                (dir, Box::new(move |n: &str| {
                    (n.len() >= pre.len() + post.len() && n.starts_with(&pre) && n.ends_with(&post))
                        .then(|| n[pre.len()..n.len() - post.len()].to_string())
                }))
            }
            None => (dir, Box::new(move |n: &str| (n == name).then(|| {
                Path::new(n).file_stem().and_then(|s| s.to_str()).unwrap_or("").to_string()
            }))),
        }
    };
    let entries = std::fs::read_dir(&dir).map_err(|e| Error::io(&dir, e))?;
    let mut files = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(&dir, e))?.path();
        if !path.is_file() || !is_raster(&path) {
            continue;
        }
        let Some(name) = path.file_name().and_then(|n| n.to_str()) else { continue };
        let Some(key) = matcher(name) else { continue };
        let Some((index, width)) = trailing_index(&key) else { continue };
        files.push(IndexedFile { index, width, path });
    }
    if files.is_empty() {
        return Err(Error::UnsupportedFormat(format!("no slice images match {}", pattern.display())));
    }
    files.sort_by_key(|f| f.index);
    for w in files.windows(2) {
        if w[0].index == w[1].index {
            return Err(Error::UnsupportedFormat(format!(
                "duplicate slice index {} ({} and {})",
                w[0].index,
                w[0].path.display(),
                w[1].path.display()
            )));
        }
        if w[1].index != w[0].index + 1 {
            return Err(Error::MissingSlice { index: format!("{:0width$}", w[0].index + 1, width = w[0].width) });
        }
    }
    Ok(files)
}

fn decode(path: &Path, bit_depth_hint: Option<u8>) -> Result<(u32, u32, u8, Vec<f32>)> {
    let codec = |e| Error::Codec { path: path.to_path_buf(), source: e };
    let img = ImageReader::open(path)
        .map_err(|e| Error::io(path, e))?
        .with_guessed_format()
        .map_err(|e| Error::io(path, e))?
        .decode()
        .map_err(codec)?;
    let (w, h) = (img.width(), img.height());
    let (container, raw): (u8, Vec<u32>) = match img {
        DynamicImage::ImageLuma8(b) => (8, b.into_raw().into_iter().map(u32::from).collect()),
        DynamicImage::ImageLuma16(b) => (16, b.into_raw().into_iter().map(u32::from).collect()),
        other => {
            return Err(Error::UnsupportedFormat(format!(
                "{}: expected single-channel 8/16-bit, found {:?}",
                path.display(),
                other.color()
            )))
        }
    };
    let bits = bit_depth_hint.unwrap_or(container);
    if bits == 0 || bits > container {
        return Err(Error::UnsupportedFormat(format!(
            "bit depth hint {bits} does not fit the {container}-bit container of {}",
            path.display()
        )));
    }
    let max = (1u32 << bits) - 1;
    if let Some(v) = raw.iter().find(|&&v| v > max) {
        return Err(Error::UnsupportedFormat(format!("{}: value {v} exceeds {bits}-bit range", path.display())));
    }
    let scale = f64::from(max);
    let pixels = raw.into_iter().map(|v| (f64::from(v) / scale) as f32).collect();
    Ok((w, h, bits, pixels))
}

/// Loads a slice stack. `pattern` is a directory, a path with one `*`
/// wildcard, or a single file. A `stack.json` next to the files supplies
/// spacing and provenance.
pub fn load_stack(pattern: impl AsRef<Path>, bit_depth_hint: Option<u8>) -> Result<Volume> {
    let pattern = pattern.as_ref();
    let files = resolve(pattern)?;
    let decoded = par::try_map_range(files.len(), |k| decode(&files[k].path, bit_depth_hint))?;
    let (w, h, bits, _) = decoded[0];
    let mut voxels = Vec::with_capacity(w as usize * h as usize * files.len());
    for ((fw, fh, fbits, px), f) in decoded.into_iter().zip(&files) {
        if (fw, fh) != (w, h) {
            return Err(Error::DimensionMismatch {
                expected: format!("{w}x{h}"),
                found: format!("{fw}x{fh} in {}", f.path.display()),
            });
        }
        if fbits != bits {
            return Err(Error::UnsupportedFormat(format!("mixed bit depths ({bits} and {fbits})")));
        }
        voxels.extend(px);
    }
    let dir = files[0].path.parent().unwrap_or(Path::new("."));
    let sidecar = dir.join(STACK_SIDECAR);
    let header: Option<StackHeader> = if sidecar.is_file() { Some(read_json(&sidecar)?) } else { None };
    let dims = [w as usize, h as usize, files.len()];
    if let Some(hd) = &header {
        if hd.dims != dims {
            return Err(Error::HeaderMismatch(format!("{} declares {:?}, images give {dims:?}", sidecar.display(), hd.dims)));
        }
    }
    let spacing = header.as_ref().map_or([1.0; 3], |h| h.spacing_um);
    let mut provenance = header.map(|h| h.provenance).unwrap_or_default();
    provenance.insert(
        "source_paths".into(),
        files.iter().map(|f| Value::from(f.path.display().to_string())).collect::<Vec<_>>().into(),
    );
    provenance.insert("bit_depth".into(), bits.into());
    Ok(Volume::new(dims, spacing, voxels)?.with_provenance(provenance))
}

/// Writes `slice_NNNN.png` files plus `stack.json`.
pub fn save_stack(v: &Volume, dir: impl AsRef<Path>, bit_depth: u8) -> Result<()> {
    save_stack_as(v, dir, bit_depth, RasterFormat::Png)
}

pub fn save_stack_as(v: &Volume, dir: impl AsRef<Path>, bit_depth: u8, format: RasterFormat) -> Result<()> {
    let dir = dir.as_ref();
    if bit_depth != 8 && bit_depth != 16 {
        return Err(Error::UnsupportedFormat(format!("bit depth must be 8 or 16, got {bit_depth}")));
    }
    create_dir(dir)?;
    let (nx, ny, nz) = (v.nx() as u32, v.ny() as u32, v.nz());
    let width = index_width(nz - 1);
    let max = f64::from((1u32 << bit_depth) - 1);
    let quantize = |p: f32| (f64::from(p) * max).round();
    par::try_map_range(nz, |z| {
        let path = dir.join(format!("slice_{z:0width$}.{}", format.extension()));
        let px = v.slice_pixels(z);
        let res = if bit_depth == 8 {
            let data: Vec<u8> = px.iter().map(|&p| quantize(p) as u8).collect();
            ImageBuffer::<Luma<u8>, _>::from_raw(nx, ny, data).expect("buffer size").save(&path)
        } else {
            let data: Vec<u16> = px.iter().map(|&p| quantize(p) as u16).collect();
            ImageBuffer::<Luma<u16>, _>::from_raw(nx, ny, data).expect("buffer size").save(&path)
        };
        res.map_err(|e| Error::Codec { path, source: e })
    })?;
    let mut provenance = v.provenance().clone();
    provenance.remove("source_paths");
    provenance.remove("bit_depth");
    let header = StackHeader { dims: v.dims(), spacing_um: v.spacing(), bit_depth, provenance };
    write_json(&dir.join(STACK_SIDECAR), &header)
}
