use super::interp::sample_field;
use super::{is_interior, INTERIOR_MARGIN};
use crate::field::DisplacementField;
use crate::{par, Error, Result};

/// Result of [`invert_field`].
#[derive(Debug, Clone)]
pub struct Inversion {
    pub field: DisplacementField,
    pub iterations: usize,
    /// Largest `|u(x + v(x)) + v(x)|` over the checked pixels, in px.
    pub residual: f64,
}

/// Fixed-point inverse: `v <- -u(x + v(x))` starting from `v = 0`.
///
/// Convergence is judged on interior pixels whose sample point `x + v(x)`
/// stays inside the grid; elsewhere `u` is only known through edge clamping.
pub fn invert_field(u: &DisplacementField, tol: f64, max_iter: usize) -> Result<Inversion> {
    if !(tol > 0.0) {
        return Err(Error::InvalidSpec(format!("inversion tolerance must be positive, got {tol}")));
    }
    let (nx, ny) = u.dims();
    let mut v = DisplacementField::zeros(nx, ny);
    let mut best = f64::INFINITY;
    for it in 1..=max_iter.max(1) {
        v = step(u, &v);
        let r = max_residual(u, &v);
        if !r.is_finite() {
            return Err(Error::NonFinite("field inversion residual".into()));
        }
        best = best.min(r);
        if r < tol {
            return Ok(Inversion { field: v, iterations: it, residual: r });
        }
    }
    Err(Error::NotConverged { residual: best })
}

fn step(u: &DisplacementField, v: &DisplacementField) -> DisplacementField {
    let (nx, ny) = u.dims();
    let mut out = vec![[0.0f32; 2]; nx * ny];
    let vv = v.vectors();
    par::for_each_row(&mut out, nx, |y, row| {
        for (x, o) in row.iter_mut().enumerate() {
            let p = vv[y * nx + x];
            let s = sample_field(u, x as f64 + f64::from(p[0]), y as f64 + f64::from(p[1]));
            *o = [(-s[0]) as f32, (-s[1]) as f32];
        }
    });
    DisplacementField::from_raw(nx, ny, out)
}

fn max_residual(u: &DisplacementField, v: &DisplacementField) -> f64 {
    let (nx, ny) = u.dims();
    let (xmax, ymax) = ((nx - 1) as f64, (ny - 1) as f64);
    let rows = par::map_range(ny, |y| {
        let mut worst = 0.0f64;
        for x in 0..nx {
            if !is_interior(x, y, nx, ny, INTERIOR_MARGIN) {
                continue;
            }
            let p = v.get(x, y);
            let (px, py) = (f64::from(p[0]), f64::from(p[1]));
            let (sx, sy) = (x as f64 + px, y as f64 + py);
            if !(0.0..=xmax).contains(&sx) || !(0.0..=ymax).contains(&sy) {
                continue;
            }
            let s = sample_field(u, sx, sy);
            let r = ((s[0] + px).powi(2) + (s[1] + py).powi(2)).sqrt();
            if r.is_nan() {
                return f64::NAN;
            }
            worst = worst.max(r);
        }
        worst
    });
    rows.into_iter().fold(0.0, |a, b| if b.is_nan() || a.is_nan() { f64::NAN } else { a.max(b) })
}
