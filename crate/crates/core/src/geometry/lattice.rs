use super::interp::catmull_rom_weights;
use crate::field::DisplacementField;
use crate::par;

/// Control-point lattice upsampled to a dense field with Catmull-Rom weights.
///
/// Node `k` along an axis sits at `origin + (k - 1) * spacing`, so there is
/// one margin node before the first pixel and at least one after the last.
/// Because the kernel interpolates, the dense field at a node position equals
/// that node's displacement.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlLattice {
    dims: (usize, usize),
    spacing: f64,
    origin: f64,
    shape: (usize, usize),
    nodes: Vec<[f64; 2]>,
}

/// Lattice-index basis for one coordinate: first node index and 4 weights.
#[derive(Debug, Clone, Copy)]
struct Basis {
    base: usize,
    w: [f64; 4],
}

impl ControlLattice {
    /// Zero lattice with spacing `spacing` px and origin 0 covering `nx` x `ny`.
    pub fn new(nx: usize, ny: usize, spacing: f64) -> Self {
        let shape = (Self::nodes_for(nx, spacing, 0.0), Self::nodes_for(ny, spacing, 0.0));
        Self::with_shape((nx, ny), spacing, 0.0, shape)
    }

    /// Lattice with an explicit node shape, which must cover the grid.
    pub fn with_shape(dims: (usize, usize), spacing: f64, origin: f64, shape: (usize, usize)) -> Self {
        assert!(spacing > 0.0 && spacing.is_finite(), "lattice spacing must be positive");
        assert!(origin <= 0.0 && origin > -spacing, "lattice origin must lie in (-spacing, 0]");
        assert!(
            shape.0 >= Self::nodes_for(dims.0, spacing, origin) && shape.1 >= Self::nodes_for(dims.1, spacing, origin),
            "lattice does not cover the grid"
        );
        Self { dims, spacing, origin, shape, nodes: vec![[0.0; 2]; shape.0 * shape.1] }
    }

    /// Nodes needed along an axis of `n` pixels.
    pub fn nodes_for(n: usize, spacing: f64, origin: f64) -> usize {
        let s_max = ((n as f64 - 1.0) - origin) / spacing;
        (s_max.ceil() as usize).max(1) + 3
    }

    pub fn dims(&self) -> (usize, usize) {
        self.dims
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn origin(&self) -> f64 {
        self.origin
    }

    pub fn shape(&self) -> (usize, usize) {
        self.shape
    }

    pub fn nodes(&self) -> &[[f64; 2]] {
        &self.nodes
    }

    pub fn nodes_mut(&mut self) -> &mut [[f64; 2]] {
        &mut self.nodes
    }

    pub fn node(&self, i: usize, j: usize) -> [f64; 2] {
        self.nodes[j * self.shape.0 + i]
    }

    pub fn set_node(&mut self, i: usize, j: usize, v: [f64; 2]) {
        self.nodes[j * self.shape.0 + i] = v;
    }

    /// Pixel coordinate of node index `k`.
    pub fn node_position(&self, k: usize) -> f64 {
        self.origin + (k as f64 - 1.0) * self.spacing
    }

    fn basis(&self, v: f64, count: usize) -> Basis {
        let s = (v - self.origin) / self.spacing;
        let base = (s.floor().max(0.0) as usize).min(count - 4);
        Basis { base, w: catmull_rom_weights(s - base as f64) }
    }

    fn axis_bases(&self) -> (Vec<Basis>, Vec<Basis>) {
        let bx = (0..self.dims.0).map(|x| self.basis(x as f64, self.shape.0)).collect();
        let by = (0..self.dims.1).map(|y| self.basis(y as f64, self.shape.1)).collect();
        (bx, by)
    }

    /// Dense field on the pixel grid.
    pub fn evaluate(&self) -> DisplacementField {
        let (nx, ny) = self.dims;
        let (bx, by) = self.axis_bases();
        let sx = self.shape.0;
        let mut out = vec![[0.0f32; 2]; nx * ny];
        par::for_each_row(&mut out, nx, |y, row| {
            let b = by[y];
            for (x, o) in row.iter_mut().enumerate() {
                let a = bx[x];
                let mut acc = [0.0f64; 2];
                for (j, wy) in b.w.iter().enumerate() {
                    if *wy == 0.0 {
                        continue;
                    }
                    let mut racc = [0.0f64; 2];
                    for (i, wx) in a.w.iter().enumerate() {
                        if *wx == 0.0 {
                            continue;
                        }
                        let n = self.nodes[(b.base + j) * sx + a.base + i];
                        racc[0] += wx * n[0];
                        racc[1] += wx * n[1];
                    }
                    acc[0] += wy * racc[0];
                    acc[1] += wy * racc[1];
                }
                *o = [acc[0] as f32, acc[1] as f32];
            }
        });
        DisplacementField::from_raw(nx, ny, out)
    }

    /// Transpose of [`evaluate`](Self::evaluate): maps a dense per-pixel
    /// gradient onto the nodes. Rows are reduced in order for determinism.
    pub fn scatter(&self, dense: &[[f64; 2]]) -> Vec<[f64; 2]> {
        let (nx, ny) = self.dims;
        assert_eq!(dense.len(), nx * ny);
        let (bx, by) = self.axis_bases();
        let sx = self.shape.0;
        // per-row partial sums over a 4-node-high band of the lattice
        let partial = par::map_range(ny, |y| {
            let b = by[y];
            let mut band = vec![[0.0f64; 2]; 4 * sx];
            for x in 0..nx {
                let g = dense[y * nx + x];
                if g == [0.0, 0.0] {
                    continue;
                }
                let a = bx[x];
                for (j, wy) in b.w.iter().enumerate() {
                    for (i, wx) in a.w.iter().enumerate() {
                        let w = wx * wy;
                        let cell = &mut band[j * sx + a.base + i];
                        cell[0] += w * g[0];
                        cell[1] += w * g[1];
                    }
                }
            }
            (b.base, band)
        });
        let mut out = vec![[0.0f64; 2]; self.nodes.len()];
        for (base, band) in partial {
            for j in 0..4 {
                for i in 0..sx {
                    let src = band[j * sx + i];
                    let dst = &mut out[(base + j) * sx + i];
                    dst[0] += src[0];
                    dst[1] += src[1];
                }
            }
        }
        out
    }

    /// Discrete 5-point Laplacian at nodes with all four neighbours.
    fn laplacian(&self) -> Vec<(usize, [f64; 2])> {
        let (sx, sy) = self.shape;
        let mut out = Vec::new();
        for j in 1..sy.saturating_sub(1) {
            for i in 1..sx.saturating_sub(1) {
                let c = self.node(i, j);
                let mut l = [0.0; 2];
                for n in [self.node(i - 1, j), self.node(i + 1, j), self.node(i, j - 1), self.node(i, j + 1)] {
                    l[0] += n[0];
                    l[1] += n[1];
                }
                l[0] -= 4.0 * c[0];
                l[1] -= 4.0 * c[1];
                out.push((j * sx + i, l));
            }
        }
        out
    }

    /// Sum of squared node Laplacians.
    pub fn roughness(&self) -> f64 {
        self.laplacian().iter().map(|(_, l)| l[0] * l[0] + l[1] * l[1]).sum()
    }

    /// Gradient of [`roughness`](Self::roughness) with respect to the nodes.
    pub fn roughness_gradient(&self) -> Vec<[f64; 2]> {
        let sx = self.shape.0;
        let mut g = vec![[0.0f64; 2]; self.nodes.len()];
        for (k, l) in self.laplacian() {
            let (i, j) = (k % sx, k / sx);
            let mut add = |idx: usize, w: f64| {
                g[idx][0] += 2.0 * w * l[0];
                g[idx][1] += 2.0 * w * l[1];
            };
            add(k, -4.0);
            add(j * sx + i - 1, 1.0);
            add(j * sx + i + 1, 1.0);
            add((j - 1) * sx + i, 1.0);
            add((j + 1) * sx + i, 1.0);
        }
        g
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn node_count_covers_grid_with_margin() {
        assert_eq!(ControlLattice::nodes_for(128, 64.0, 0.0), 5);
        assert_eq!(ControlLattice::nodes_for(129, 64.0, 0.0), 5);
        assert_eq!(ControlLattice::nodes_for(130, 64.0, 0.0), 6);
        assert_eq!(ControlLattice::nodes_for(1, 16.0, 0.0), 4);
    }

    #[test]
    fn dense_field_reproduces_nodes() {
        let mut l = ControlLattice::new(33, 17, 8.0);
        let (sx, sy) = l.shape();
        for j in 0..sy {
            for i in 0..sx {
                l.set_node(i, j, [(i * 3 + j) as f64 * 0.1, -(j as f64) * 0.2 + i as f64 * 0.05]);
            }
        }
        let f = l.evaluate();
        for j in 1..sy {
            for i in 1..sx {
                let (x, y) = (l.node_position(i), l.node_position(j));
                if x < 33.0 && y < 17.0 {
                    let v = f.get(x as usize, y as usize);
                    let n = l.node(i, j);
                    assert!((f64::from(v[0]) - n[0]).abs() < 1e-6 && (f64::from(v[1]) - n[1]).abs() < 1e-6);
                }
            }
        }
    }

    #[test]
    fn scatter_is_adjoint_of_evaluate() {
        let mut l = ControlLattice::with_shape((20, 14), 6.0, -0.25, (ControlLattice::nodes_for(20, 6.0, -0.25), ControlLattice::nodes_for(14, 6.0, -0.25)));
        for (k, n) in l.nodes_mut().iter_mut().enumerate() {
            *n = [((k * 7) % 5) as f64 - 2.0, ((k * 3) % 4) as f64 * 0.5];
        }
        let dense: Vec<[f64; 2]> = (0..20 * 14).map(|p| [((p * 13) % 7) as f64 - 3.0, ((p * 5) % 3) as f64]).collect();
        let f = l.evaluate();
        let lhs: f64 = f.vectors().iter().zip(&dense).map(|(a, b)| f64::from(a[0]) * b[0] + f64::from(a[1]) * b[1]).sum();
        let g = l.scatter(&dense);
        let rhs: f64 = l.nodes().iter().zip(&g).map(|(a, b)| a[0] * b[0] + a[1] * b[1]).sum();
        assert!((lhs - rhs).abs() < 1e-3 * lhs.abs().max(1.0), "{lhs} vs {rhs}");
    }

    #[test]
    fn roughness_gradient_matches_finite_differences() {
        let mut l = ControlLattice::new(30, 30, 8.0);
        for (k, n) in l.nodes_mut().iter_mut().enumerate() {
            *n = [(k as f64 * 0.7).sin(), (k as f64 * 1.3).cos()];
        }
        let g = l.roughness_gradient();
        let h = 1e-6;
        for k in [0, 5, 7, 12] {
            for c in 0..2 {
                let mut p = l.clone();
                p.nodes_mut()[k][c] += h;
                let mut m = l.clone();
                m.nodes_mut()[k][c] -= h;
                let fd = (p.roughness() - m.roughness()) / (2.0 * h);
                assert!((fd - g[k][c]).abs() < 1e-5, "node {k} comp {c}: {fd} vs {}", g[k][c]);
            }
        }
    }

    #[test]
    fn affine_nodes_have_zero_roughness() {
        let mut l = ControlLattice::new(40, 40, 10.0);
        let (sx, sy) = l.shape();
        for j in 0..sy {
            for i in 0..sx {
                l.set_node(i, j, [i as f64 * 0.5 + 1.0, j as f64 * -0.25]);
            }
        }
        assert!(l.roughness() < 1e-20);
    }
}
