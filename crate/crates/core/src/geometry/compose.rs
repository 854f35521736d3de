use super::interp::sample_field;
use crate::field::DisplacementField;
use crate::{par, Error, Result};

/// `w(x) = u(x) + v(x + u(x))`, so that warping by `w` matches warping by
/// `v` first and by `u` second.
pub fn compose_fields(u: &DisplacementField, v: &DisplacementField) -> Result<DisplacementField> {
    if u.dims() != v.dims() {
        return Err(Error::dims(u.dims(), v.dims()));
    }
    let (nx, ny) = u.dims();
    let mut out = vec![[0.0f32; 2]; nx * ny];
    let uv = u.vectors();
    par::for_each_row(&mut out, nx, |y, row| {
        for (x, o) in row.iter_mut().enumerate() {
            let a = uv[y * nx + x];
            let (ax, ay) = (f64::from(a[0]), f64::from(a[1]));
            let b = sample_field(v, x as f64 + ax, y as f64 + ay);
            *o = [(ax + b[0]) as f32, (ay + b[1]) as f32];
        }
    });
    Ok(DisplacementField::from_raw(nx, ny, out))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_second_field_leaves_first() {
        let u = DisplacementField::from_fn(6, 5, |x, y| [x as f32 * 0.1, -(y as f32) * 0.3]);
        let w = compose_fields(&u, &DisplacementField::zeros(6, 5)).unwrap();
        assert_eq!(w, u);
    }

    #[test]
    fn constants_add() {
        let u = DisplacementField::constant(5, 5, [1.5, -2.0]);
        let v = DisplacementField::constant(5, 5, [0.25, 3.0]);
        let w = compose_fields(&u, &v).unwrap();
        assert!(w.vectors().iter().all(|p| *p == [1.75, 1.0]));
    }

    #[test]
    fn mismatched_dims() {
        let r = compose_fields(&DisplacementField::zeros(3, 3), &DisplacementField::zeros(3, 4));
        assert!(matches!(r, Err(Error::DimensionMismatch { .. })));
    }
}
