//! Dense backward displacement fields.
//!
//! A field `u` warps an image by `out(x) = src(x + u(x))`, with pixel centres
//! at integer coordinates. Vectors are pixel offsets `(ux, uy)`.

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct DisplacementField {
    nx: usize,
    ny: usize,
    vectors: Vec<[f32; 2]>,
}

impl DisplacementField {
    pub fn zeros(nx: usize, ny: usize) -> Self {
        assert!(nx > 0 && ny > 0, "field dims must be positive");
        Self { nx, ny, vectors: vec![[0.0; 2]; nx * ny] }
    }

    pub fn constant(nx: usize, ny: usize, v: [f32; 2]) -> Self {
        assert!(nx > 0 && ny > 0, "field dims must be positive");
        Self { nx, ny, vectors: vec![v; nx * ny] }
    }

    pub fn new(nx: usize, ny: usize, vectors: Vec<[f32; 2]>) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(Error::InvalidSpec(format!("field dims must be positive, got {nx}x{ny}")));
        }
        if vectors.len() != nx * ny {
            return Err(Error::dims(nx * ny, vectors.len()));
        }
        if vectors.iter().flatten().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("displacement field component".into()));
        }
        Ok(Self { nx, ny, vectors })
    }

    pub fn from_fn(nx: usize, ny: usize, f: impl Fn(usize, usize) -> [f32; 2]) -> Self {
        assert!(nx > 0 && ny > 0, "field dims must be positive");
        let mut vectors = Vec::with_capacity(nx * ny);
        for y in 0..ny {
            for x in 0..nx {
                vectors.push(f(x, y));
            }
        }
        Self { nx, ny, vectors }
    }

    pub(crate) fn from_raw(nx: usize, ny: usize, vectors: Vec<[f32; 2]>) -> Self {
        debug_assert_eq!(vectors.len(), nx * ny);
        Self { nx, ny, vectors }
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

    pub fn vectors(&self) -> &[[f32; 2]] {
        &self.vectors
    }

    pub fn vectors_mut(&mut self) -> &mut [[f32; 2]] {
        &mut self.vectors
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> [f32; 2] {
        self.vectors[y * self.nx + x]
    }

    pub fn magnitudes(&self) -> Vec<f64> {
        self.vectors.iter().map(|v| norm(*v)).collect()
    }

    pub fn max_magnitude(&self) -> f64 {
        self.vectors.iter().map(|v| norm(*v)).fold(0.0, f64::max)
    }

    pub fn is_zero(&self) -> bool {
        self.vectors.iter().all(|v| v[0] == 0.0 && v[1] == 0.0)
    }

    /// Component-wise sum; used for additive parameterisations.
    pub fn add(&self, other: &DisplacementField) -> Result<DisplacementField> {
        if self.dims() != other.dims() {
            return Err(Error::dims(self.dims(), other.dims()));
        }
        let vectors = self
            .vectors
            .iter()
            .zip(&other.vectors)
            .map(|(a, b)| [a[0] + b[0], a[1] + b[1]])
            .collect();
        Ok(DisplacementField::from_raw(self.nx, self.ny, vectors))
    }
}

#[inline]
pub(crate) fn norm(v: [f32; 2]) -> f64 {
    let (x, y) = (f64::from(v[0]), f64::from(v[1]));
    (x * x + y * y).sqrt()
}

/// Per-slice fields tagged with the slice index each belongs to.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldStack {
    dims: (usize, usize),
    indices: Vec<usize>,
    fields: Vec<DisplacementField>,
}

impl FieldStack {
    /// Fields for slices `0..fields.len()`.
    pub fn new(fields: Vec<DisplacementField>) -> Result<Self> {
        let indices = (0..fields.len()).collect();
        Self::with_indices(indices, fields)
    }

    /// Fields for an explicit, strictly increasing list of slice indices.
    pub fn with_indices(indices: Vec<usize>, fields: Vec<DisplacementField>) -> Result<Self> {
        let first = fields
            .first()
            .ok_or_else(|| Error::InvalidSpec("a field stack needs at least one field".into()))?;
        let dims = first.dims();
        if indices.len() != fields.len() {
            return Err(Error::dims(fields.len(), indices.len()));
        }
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidSpec("slice indices must be strictly increasing".into()));
        }
        if let Some(f) = fields.iter().find(|f| f.dims() != dims) {
            return Err(Error::dims(dims, f.dims()));
        }
        Ok(Self { dims, indices, fields })
    }

    pub fn zeros(nx: usize, ny: usize, indices: Vec<usize>) -> Result<Self> {
        let fields = indices.iter().map(|_| DisplacementField::zeros(nx, ny)).collect();
        Self::with_indices(indices, fields)
    }

    pub fn dims(&self) -> (usize, usize) {
        self.dims
    }

    pub fn len(&self) -> usize {
        self.fields.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fields.is_empty()
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn fields(&self) -> &[DisplacementField] {
        &self.fields
    }

    pub fn into_fields(self) -> Vec<DisplacementField> {
        self.fields
    }

    /// Field for slice index `z`, if present.
    pub fn get(&self, z: usize) -> Option<&DisplacementField> {
        self.indices.binary_search(&z).ok().map(|i| &self.fields[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &DisplacementField)> {
        self.indices.iter().copied().zip(self.fields.iter())
    }

    /// Restriction to the given indices, all of which must be present.
    pub fn select(&self, indices: &[usize]) -> Result<FieldStack> {
        let fields = indices
            .iter()
            .map(|&z| {
                self.get(z).cloned().ok_or_else(|| Error::MissingSlice { index: z.to_string() })
            })
            .collect::<Result<Vec<_>>>()?;
        FieldStack::with_indices(indices.to_vec(), fields)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_finite_vectors() {
        assert!(DisplacementField::new(1, 1, vec![[f32::NAN, 0.0]]).is_err());
    }

    #[test]
    fn stack_lookup_by_index() {
        let s = FieldStack::with_indices(
            vec![0, 2],
            vec![DisplacementField::zeros(2, 2), DisplacementField::constant(2, 2, [1.0, 0.0])],
        )
        .unwrap();
        assert!(s.get(1).is_none());
        assert_eq!(s.get(2).unwrap().get(1, 1), [1.0, 0.0]);
        assert!(matches!(s.select(&[1]), Err(Error::MissingSlice { .. })));
    }

    #[test]
    fn stack_rejects_mixed_dims() {
        let r = FieldStack::new(vec![DisplacementField::zeros(2, 2), DisplacementField::zeros(3, 2)]);
        assert!(matches!(r, Err(Error::DimensionMismatch { .. })));
    }
}
