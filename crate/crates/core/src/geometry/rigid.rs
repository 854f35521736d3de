use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::field::DisplacementField;
use crate::par;

/// Rotation by `theta` about `center`, followed by translation `t`.
///
/// The forward map is `y = R(theta) (x - c) + c + t` in pixel coordinates
/// (x right, y down) with `R(theta) = [[cos, sin], [-sin, cos]]`, so a
/// positive angle turns content counter-clockwise as displayed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RigidTransform2D {
    pub theta: f64,
    pub tx: f64,
    pub ty: f64,
    pub cx: f64,
    pub cy: f64,
}

/// Wraps an angle into `(-pi, pi]`.
pub(crate) fn wrap_angle(theta: f64) -> f64 {
    let mut t = theta % (2.0 * PI);
    if t <= -PI {
        t += 2.0 * PI;
    } else if t > PI {
        t -= 2.0 * PI;
    }
    t
}

impl RigidTransform2D {
    pub fn new(theta: f64, t: (f64, f64), center: (f64, f64)) -> Self {
        assert!(
            theta.is_finite() && t.0.is_finite() && t.1.is_finite() && center.0.is_finite() && center.1.is_finite(),
            "rigid transform components must be finite"
        );
        Self { theta: wrap_angle(theta), tx: t.0, ty: t.1, cx: center.0, cy: center.1 }
    }

    pub fn identity(center: (f64, f64)) -> Self {
        Self::new(0.0, (0.0, 0.0), center)
    }

    /// Centre of an `nx` x `ny` image in pixel coordinates.
    pub fn image_center(nx: usize, ny: usize) -> (f64, f64) {
        ((nx as f64 - 1.0) / 2.0, (ny as f64 - 1.0) / 2.0)
    }

    pub fn is_identity(&self) -> bool {
        self.theta == 0.0 && self.tx == 0.0 && self.ty == 0.0
    }

    pub fn apply(&self, x: f64, y: f64) -> (f64, f64) {
        let (s, c) = self.theta.sin_cos();
        let (dx, dy) = (x - self.cx, y - self.cy);
        (c * dx + s * dy + self.cx + self.tx, -s * dx + c * dy + self.cy + self.ty)
    }

    /// Inverse about the same centre.
    pub fn inverse(&self) -> Self {
        // x = R(-theta)(y - c - t) + c  =  R(-theta)(y - c) + c - R(-theta) t
        let (s, c) = self.theta.sin_cos();
        let tx = -(c * self.tx - s * self.ty);
        let ty = -(s * self.tx + c * self.ty);
        Self::new(-self.theta, (tx, ty), (self.cx, self.cy))
    }

    pub fn theta_degrees(&self) -> f64 {
        self.theta.to_degrees()
    }
}

/// Backward field rendering content moved by `t`: `u(y) = T^-1(y) - y`.
pub fn rigid_to_field(t: &RigidTransform2D, nx: usize, ny: usize) -> DisplacementField {
    assert!(nx > 0 && ny > 0, "field dims must be positive");
    let (s, c) = t.theta.sin_cos();
    let mut vectors = vec![[0.0f32; 2]; nx * ny];
    par::for_each_row(&mut vectors, nx, |y, row| {
        let yy = y as f64;
        for (x, v) in row.iter_mut().enumerate() {
            let dx = x as f64 - t.cx - t.tx;
            let dy = yy - t.cy - t.ty;
            // R(-theta) = [[cos, -sin], [sin, cos]]
            let sx = c * dx - s * dy + t.cx;
            let sy = s * dx + c * dy + t.cy;
            *v = [(sx - x as f64) as f32, (sy - yy) as f32];
        }
    });
    DisplacementField::from_raw(nx, ny, vectors)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn identity_is_zero_field() {
        let f = rigid_to_field(&RigidTransform2D::identity((3.5, 2.0)), 8, 5);
        assert!(f.is_zero());
    }

    #[test]
    fn translation_is_negated() {
        let f = rigid_to_field(&RigidTransform2D::new(0.0, (1.0, 0.0), (1.0, 1.0)), 4, 4);
        assert!(f.vectors().iter().all(|v| *v == [-1.0, 0.0]));
    }

    /// Hand enumeration of a quarter turn about (1, 1) on a 3x3 grid: the
    /// forward map sends (x, y) to (1 + (y - 1), 1 - (x - 1)), so output pixel
    /// (x, y) samples the source at (1 - (y - 1), 1 + (x - 1)).
    #[test]
    fn quarter_turn_permutes_three_by_three() {
        let f = rigid_to_field(&RigidTransform2D::new(FRAC_PI_2, (0.0, 0.0), (1.0, 1.0)), 3, 3);
        let expected_source = |x: i32, y: i32| (1 - (y - 1), 1 + (x - 1));
        for y in 0..3 {
            for x in 0..3 {
                let u = f.get(x as usize, y as usize);
                let (sx, sy) = expected_source(x, y);
                assert!((x as f32 + u[0] - sx as f32).abs() < 1e-6, "x at ({x},{y})");
                assert!((y as f32 + u[1] - sy as f32).abs() < 1e-6, "y at ({x},{y})");
            }
        }
        let u = f.get(2, 1);
        assert!((2.0 + u[0] - 1.0).abs() < 1e-6 && (1.0 + u[1] - 2.0).abs() < 1e-6);
    }

    #[test]
    fn inverse_round_trips_points() {
        let t = RigidTransform2D::new(0.3, (2.0, -1.5), (10.0, 7.0));
        let (x, y) = t.apply(3.0, 4.0);
        let (bx, by) = t.inverse().apply(x, y);
        assert!((bx - 3.0).abs() < 1e-12 && (by - 4.0).abs() < 1e-12);
    }

    #[test]
    fn angles_wrap_into_half_open_interval() {
        assert_eq!(wrap_angle(PI), PI);
        assert!((wrap_angle(-PI) - PI).abs() < 1e-15);
        assert!((wrap_angle(3.0 * PI / 2.0) + FRAC_PI_2).abs() < 1e-12);
    }
}
