//! Scalar volumes and their 2D slices.

use serde_json::{Map, Value};

use crate::{Error, Result};

/// One section of a stack: row-major intensities in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Slice {
    nx: usize,
    ny: usize,
    pixels: Vec<f32>,
}

impl Slice {
    pub fn new(nx: usize, ny: usize, pixels: Vec<f32>) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(Error::InvalidSpec(format!("slice dims must be positive, got {nx}x{ny}")));
        }
        if pixels.len() != nx * ny {
            return Err(Error::dims(nx * ny, pixels.len()));
        }
        if let Some(p) = pixels.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::InvalidSpec(format!("intensity {p} outside [0, 1]")));
        }
        Ok(Self { nx, ny, pixels })
    }

    pub fn filled(nx: usize, ny: usize, value: f32) -> Self {
        assert!(nx > 0 && ny > 0, "slice dims must be positive");
        assert!((0.0..=1.0).contains(&value));
        Self { nx, ny, pixels: vec![value; nx * ny] }
    }

    /// Builds a slice from `f(x, y)`, clamping into `[0, 1]`.
    pub fn from_fn(nx: usize, ny: usize, f: impl Fn(usize, usize) -> f32) -> Self {
        assert!(nx > 0 && ny > 0, "slice dims must be positive");
        let mut pixels = Vec::with_capacity(nx * ny);
        for y in 0..ny {
            for x in 0..nx {
                pixels.push(clamp_unit(f(x, y)));
            }
        }
        Self { nx, ny, pixels }
    }

    /// Wraps already-validated pixels; callers guarantee the invariants.
    pub(crate) fn from_raw(nx: usize, ny: usize, pixels: Vec<f32>) -> Self {
        debug_assert_eq!(pixels.len(), nx * ny);
        Self { nx, ny, pixels }
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    pub fn pixels(&self) -> &[f32] {
        &self.pixels
    }

    pub fn into_pixels(self) -> Vec<f32> {
        self.pixels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f32 {
        self.pixels[y * self.nx + x]
    }

    pub fn map(&self, f: impl Fn(f32) -> f32) -> Slice {
        Slice {
            nx: self.nx,
            ny: self.ny,
            pixels: self.pixels.iter().map(|&p| clamp_unit(f(p))).collect(),
        }
    }
}

#[inline]
pub(crate) fn clamp_unit(v: f32) -> f32 {
    if v.is_nan() {
        0.0
    } else {
        v.clamp(0.0, 1.0)
    }
}

/// A 3D stack of equally sized slices.
///
/// Voxels are stored slice-major (`z`, then `y`, then `x`). Spacing is in
/// micrometres. Provenance is a free-form JSON object carried through every
/// pipeline stage.
#[derive(Debug, Clone, PartialEq)]
pub struct Volume {
    dims: [usize; 3],
    spacing: [f64; 3],
    voxels: Vec<f32>,
    provenance: Map<String, Value>,
}

impl Volume {
    pub fn new(dims: [usize; 3], spacing: [f64; 3], voxels: Vec<f32>) -> Result<Self> {
        if dims.contains(&0) {
            return Err(Error::InvalidSpec(format!("volume dims must be positive, got {dims:?}")));
        }
        if spacing.iter().any(|&s| !(s.is_finite() && s > 0.0)) {
            return Err(Error::InvalidSpec(format!("spacing must be positive, got {spacing:?}")));
        }
        let count = dims[0] * dims[1] * dims[2];
        if voxels.len() != count {
            return Err(Error::dims(count, voxels.len()));
        }
        if let Some(p) = voxels.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::InvalidSpec(format!("intensity {p} outside [0, 1]")));
        }
        Ok(Self { dims, spacing, voxels, provenance: Map::new() })
    }

    /// Stacks slices in order; all must share the same dims.
    pub fn from_slices(slices: Vec<Slice>, spacing: [f64; 3]) -> Result<Self> {
        let first = slices
            .first()
            .ok_or_else(|| Error::InvalidSpec("a volume needs at least one slice".into()))?;
        let (nx, ny) = first.dims();
        let mut voxels = Vec::with_capacity(nx * ny * slices.len());
        for s in &slices {
            if s.dims() != (nx, ny) {
                return Err(Error::dims((nx, ny), s.dims()));
            }
            voxels.extend_from_slice(s.pixels());
        }
        Volume::new([nx, ny, slices.len()], spacing, voxels)
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn nx(&self) -> usize {
        self.dims[0]
    }

    pub fn ny(&self) -> usize {
        self.dims[1]
    }

    pub fn nz(&self) -> usize {
        self.dims[2]
    }

    pub fn spacing(&self) -> [f64; 3] {
        self.spacing
    }

    pub fn voxels(&self) -> &[f32] {
        &self.voxels
    }

    pub fn slice_pixels(&self, z: usize) -> &[f32] {
        let n = self.dims[0] * self.dims[1];
        &self.voxels[z * n..(z + 1) * n]
    }

    pub fn slice(&self, z: usize) -> Slice {
        Slice::from_raw(self.dims[0], self.dims[1], self.slice_pixels(z).to_vec())
    }

    pub fn slices(&self) -> Vec<Slice> {
        (0..self.nz()).map(|z| self.slice(z)).collect()
    }

    pub fn provenance(&self) -> &Map<String, Value> {
        &self.provenance
    }

    pub fn provenance_mut(&mut self) -> &mut Map<String, Value> {
        &mut self.provenance
    }

    pub fn with_provenance(mut self, provenance: Map<String, Value>) -> Self {
        self.provenance = provenance;
        self
    }

    pub fn set_provenance(&mut self, key: &str, value: impl Into<Value>) {
        self.provenance.insert(key.to_string(), value.into());
    }

    /// Original slice indices recorded under `slice_indices`, or `0..nz`.
    pub fn slice_indices(&self) -> Vec<usize> {
        self.provenance
            .get("slice_indices")
            .and_then(Value::as_array)
            .and_then(|a| a.iter().map(|v| v.as_u64().map(|i| i as usize)).collect::<Option<Vec<_>>>())
            .filter(|v| v.len() == self.nz())
            .unwrap_or_else(|| (0..self.nz()).collect())
    }
}
