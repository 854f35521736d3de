use super::ncc::{ncc, Moments};
use super::options::{RegistrationOptions, Similarity};
use super::pyramid;
use super::rigid::register_rigid;
use crate::field::DisplacementField;
use crate::geometry::{rigid_to_field, warp_slice, ControlLattice, InterpolationKind, RigidTransform2D};
use crate::volume::Slice;
use crate::{par, Error, Result};

const MAX_HALVINGS: usize = 10;

/// Result of [`register_elastic`].
#[derive(Debug, Clone)]
pub struct ElasticEstimate {
    /// Correction field: rigid initialisation plus the lattice deformation.
    pub field: DisplacementField,
    /// Rigid estimate used for initialisation (apparent motion of `moving`).
    pub rigid: RigidTransform2D,
    /// Final full-resolution control-node displacements, row-major.
    pub nodes: Vec<[f64; 2]>,
    pub lattice_shape: (usize, usize),
    /// NCC between the fixed slice and the corrected moving slice.
    pub similarity: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Energy after every accepted step, one sequence per pyramid level (coarse first).
    pub energies: Vec<Vec<f64>>,
    /// Node-Laplacian roughness of the final lattice.
    pub roughness: f64,
}

/// Rigid correction expressed in level-`l` coordinates.
fn rigid_at_level(t: &RigidTransform2D, l: usize) -> RigidTransform2D {
    let s = (1u64 << l) as f64;
    RigidTransform2D::new(t.theta, (t.tx / s, t.ty / s), (pyramid::to_level(t.cx, l), pyramid::to_level(t.cy, l)))
}

struct Level<'a> {
    fixed: &'a Slice,
    moving: &'a Slice,
    init: DisplacementField,
    lattice: ControlLattice,
    scale: f64,
    similarity: Similarity,
    lambda: f64,
}

enum Eval {
    Ok { energy: f64, grad: Vec<[f64; 2]> },
    /// Similarity undefined (e.g. the warped slice became flat).
    Undefined,
}

impl Level<'_> {
    fn evaluate(&mut self, nodes: &[[f64; 2]], want_grad: bool) -> Result<Eval> {
        for (dst, src) in self.lattice.nodes_mut().iter_mut().zip(nodes) {
            *dst = [src[0] / self.scale, src[1] / self.scale];
        }
        let ffd = self.lattice.evaluate();
        let (nx, ny) = self.fixed.dims();
        let init = self.init.vectors();
        let def = ffd.vectors();
        let mv = self.moving.pixels();
        // warped value and its spatial gradient at every pixel
        let mut samples = vec![[0.0f64; 3]; nx * ny];
        par::for_each_row(&mut samples, nx, |y, row| {
            for (x, out) in row.iter_mut().enumerate() {
                let k = y * nx + x;
                let px = x as f64 + f64::from(init[k][0]) + f64::from(def[k][0]);
                let py = y as f64 + f64::from(init[k][1]) + f64::from(def[k][1]);
                *out = bilinear_with_gradient(mv, nx, ny, px, py);
            }
        });
        let fx = self.fixed.pixels();
        let n = (nx * ny) as f64;
        let dcost: Vec<f64>;
        let cost = match self.similarity {
            Similarity::Ssd => {
                let mut c = 0.0;
                let mut d = Vec::with_capacity(samples.len());
                for (s, &f) in samples.iter().zip(fx) {
                    let r = s[0] - f64::from(f);
                    c += r * r;
                    d.push(2.0 * r);
                }
                dcost = d;
                c
            }
            Similarity::Ncc => {
                let m = Moments::over(fx.iter().zip(&samples).map(|(&f, s)| (f64::from(f), s[0])));
                let Some(rho) = m.correlation() else { return Ok(Eval::Undefined) };
                let (ma, mb) = (m.mean_a(), m.mean_b());
                let (saa, sbb) = (m.centered_aa(), m.centered_bb());
                let inv = 1.0 / (saa * sbb).sqrt();
                // d(n(1 - rho))/db_i = -n [(a_i - ma) / sqrt(saa sbb) - rho (b_i - mb) / sbb]
                dcost = fx
                    .iter()
                    .zip(&samples)
                    .map(|(&f, s)| -n * ((f64::from(f) - ma) * inv - rho * (s[0] - mb) / sbb))
                    .collect();
                n * (1.0 - rho)
            }
        };
        let roughness = self.lattice_roughness(nodes);
        let energy = cost + self.lambda * roughness;
        if !energy.is_finite() {
            return Err(Error::NonFinite(format!("elastic energy {energy}")));
        }
        if !want_grad {
            return Ok(Eval::Ok { energy, grad: Vec::new() });
        }
        let dense: Vec<[f64; 2]> = samples.iter().zip(&dcost).map(|(s, d)| [d * s[1], d * s[2]]).collect();
        let mut grad = self.lattice.scatter(&dense);
        for g in grad.iter_mut() {
            g[0] /= self.scale;
            g[1] /= self.scale;
        }
        if self.lambda > 0.0 {
            let rg = full_res_lattice(&self.lattice, nodes).roughness_gradient();
            for (g, r) in grad.iter_mut().zip(rg) {
                g[0] += self.lambda * r[0];
                g[1] += self.lambda * r[1];
            }
        }
        if grad.iter().flatten().any(|g| !g.is_finite()) {
            return Err(Error::NonFinite("elastic gradient".into()));
        }
        Ok(Eval::Ok { energy, grad })
    }

    fn lattice_roughness(&self, nodes: &[[f64; 2]]) -> f64 {
        if self.lambda == 0.0 {
            return 0.0;
        }
        full_res_lattice(&self.lattice, nodes).roughness()
    }
}

/// Lattice of the same shape holding full-resolution node values.
fn full_res_lattice(shape_of: &ControlLattice, nodes: &[[f64; 2]]) -> ControlLattice {
    let mut l = shape_of.clone();
    l.nodes_mut().copy_from_slice(nodes);
    l
}

/// Bilinear value and gradient; zero outside the domain.
#[inline]
fn bilinear_with_gradient(px: &[f32], nx: usize, ny: usize, x: f64, y: f64) -> [f64; 3] {
    let (xmax, ymax) = ((nx - 1) as f64, (ny - 1) as f64);
    if !(0.0..=xmax).contains(&x) || !(0.0..=ymax).contains(&y) {
        return [0.0; 3];
    }
    let x0 = (x.floor() as usize).min(nx.saturating_sub(2));
    let y0 = (y.floor() as usize).min(ny.saturating_sub(2));
    let (x1, y1) = ((x0 + 1).min(nx - 1), (y0 + 1).min(ny - 1));
    let (fx, fy) = (x - x0 as f64, y - y0 as f64);
    let p00 = f64::from(px[y0 * nx + x0]);
    let p10 = f64::from(px[y0 * nx + x1]);
    let p01 = f64::from(px[y1 * nx + x0]);
    let p11 = f64::from(px[y1 * nx + x1]);
    let v = (p00 * (1.0 - fx) + p10 * fx) * (1.0 - fy) + (p01 * (1.0 - fx) + p11 * fx) * fy;
    let gx = (p10 - p00) * (1.0 - fy) + (p11 - p01) * fy;
    let gy = (p01 - p00) * (1.0 - fx) + (p11 - p10) * fx;
    [v, gx, gy]
}

/// Free-form deformation on a Catmull-Rom control lattice, initialised from
/// [`register_rigid`] and refined coarse-to-fine by gradient descent on
/// `similarity cost + lambda * sum(node Laplacian^2)`.
///
/// The similarity cost is summed over pixels: `n (1 - NCC)` or the sum of
/// squared differences. Each step moves the largest node component by
/// `step` level pixels; a step that does not lower the energy is halved.
pub fn register_elastic(fixed: &Slice, moving: &Slice, opts: &RegistrationOptions) -> Result<ElasticEstimate> {
    if fixed.dims() != moving.dims() {
        return Err(Error::dims(fixed.dims(), moving.dims()));
    }
    opts.validate()?;
    let rigid = register_rigid(fixed, moving, opts)?.transform;
    let correction = rigid.inverse();
    let (nx, ny) = fixed.dims();
    let e = opts.elastic;
    let shape = (ControlLattice::nodes_for(nx, e.grid_px, 0.0), ControlLattice::nodes_for(ny, e.grid_px, 0.0));
    let mut nodes = vec![[0.0f64; 2]; shape.0 * shape.1];

    let fp = pyramid::build(fixed, opts.pyramid_levels);
    let mp = pyramid::build(moving, opts.pyramid_levels);
    let mut energies = Vec::with_capacity(fp.len());
    let mut iterations = 0;
    let mut converged = false;
    for l in (0..fp.len()).rev() {
        let scale = (1u64 << l) as f64;
        let (lx, ly) = fp[l].dims();
        let mut level = Level {
            fixed: &fp[l],
            moving: &mp[l],
            init: rigid_to_field(&rigid_at_level(&correction, l), lx, ly),
            lattice: ControlLattice::with_shape((lx, ly), e.grid_px / scale, pyramid::to_level(0.0, l), shape),
            scale,
            similarity: opts.similarity,
            lambda: e.lambda,
        };
        let (mut energy, mut grad) = match level.evaluate(&nodes, true)? {
            Eval::Ok { energy, grad } => (energy, grad),
            Eval::Undefined => return Err(Error::FlatImage),
        };
        let mut trace = vec![energy];
        let mut step = e.step;
        let mut halvings = 0;
        let mut level_iters = 0;
        converged = false;
        while level_iters < e.max_iter {
            let gmax = grad.iter().flatten().fold(0.0f64, |m, g| m.max(g.abs()));
            if gmax < e.grad_tol || gmax == 0.0 {
                converged = true;
                break;
            }
            let k = step * scale / gmax;
            let trial: Vec<[f64; 2]> = nodes.iter().zip(&grad).map(|(n, g)| [n[0] - k * g[0], n[1] - k * g[1]]).collect();
            level_iters += 1;
            match level.evaluate(&trial, true)? {
                Eval::Ok { energy: et, grad: gt } if et < energy => {
                    nodes = trial;
                    energy = et;
                    grad = gt;
                    halvings = 0;
                    trace.push(energy);
                }
                _ => {
                    step /= 2.0;
                    halvings += 1;
                    if halvings >= MAX_HALVINGS {
                        converged = true;
                        break;
                    }
                }
            }
        }
        iterations += level_iters;
        energies.push(trace);
    }

    let mut lattice = ControlLattice::new(nx, ny, e.grid_px);
    lattice.nodes_mut().copy_from_slice(&nodes);
    let field = rigid_to_field(&correction, nx, ny).add(&lattice.evaluate())?;
    let corrected = warp_slice(moving, &field, InterpolationKind::bilinear())?;
    let similarity = ncc(fixed, &corrected).unwrap_or(f64::NAN);
    Ok(ElasticEstimate {
        field,
        rigid,
        roughness: lattice.roughness(),
        nodes,
        lattice_shape: shape,
        similarity,
        iterations,
        converged,
        energies,
    })
}
