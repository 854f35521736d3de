use rand::Rng;
use rand_distr::StandardNormal;

use super::DistortionSpec;
use crate::field::DisplacementField;
use crate::geometry::{ControlLattice, RigidTransform2D};
use crate::rng::substream;

fn scaled(sigma: f64, n: f64) -> f64 {
    if sigma == 0.0 {
        0.0
    } else {
        sigma * n
    }
}

/// Rigid placement error of slice `z`, about the image centre.
pub fn sample_rigid(spec: &DistortionSpec, z: usize, dims: (usize, usize)) -> RigidTransform2D {
    let mut rng = substream(spec.seed, z as u64, "rigid");
    let theta = scaled(spec.sigma_theta_rad, rng.sample(StandardNormal));
    let tx = scaled(spec.sigma_t_px, rng.sample(StandardNormal));
    let ty = scaled(spec.sigma_t_px, rng.sample(StandardNormal));
    RigidTransform2D::new(theta, (tx, ty), RigidTransform2D::image_center(dims.0, dims.1))
}

/// Node displacements of slice `z`'s elastic lattice, before upsampling.
pub(crate) fn sample_lattice(spec: &DistortionSpec, z: usize, dims: (usize, usize)) -> ControlLattice {
    let mut lattice = ControlLattice::new(dims.0, dims.1, spec.elastic.grid_px);
    let sigma = spec.elastic.sigma_px;
    if sigma == 0.0 {
        return lattice;
    }
    let bound = spec.clamp_k * sigma;
    let mut rng = substream(spec.seed, z as u64, "elastic");
    for node in lattice.nodes_mut() {
        for c in node.iter_mut() {
            let n: f64 = rng.sample(StandardNormal);
            *c = (sigma * n).clamp(-bound, bound);
        }
    }
    lattice
}

/// Smooth elastic field of slice `z`: clamped Gaussian nodes, bicubic upsampling.
pub fn sample_elastic(spec: &DistortionSpec, z: usize, dims: (usize, usize)) -> DisplacementField {
    if spec.elastic.sigma_px == 0.0 {
        return DisplacementField::zeros(dims.0, dims.1);
    }
    sample_lattice(spec, z, dims).evaluate()
}

/// `gamma_z = exp(N(0, sigma_gamma^2))`.
pub fn sample_gamma(spec: &DistortionSpec, z: usize) -> f64 {
    if spec.intensity.sigma_gamma == 0.0 {
        return 1.0;
    }
    let n: f64 = substream(spec.seed, z as u64, "gamma").sample(StandardNormal);
    (spec.intensity.sigma_gamma * n).exp()
}

/// Sorted dropped-slice indices; the second of two adjacent drops is kept.
pub fn sample_drops(spec: &DistortionSpec, nz: usize) -> Vec<usize> {
    let mut dropped: Vec<usize> = Vec::new();
    if spec.p_drop == 0.0 {
        return dropped;
    }
    for z in 0..nz {
        let u: f64 = substream(spec.seed, z as u64, "drop").random();
        if u < spec.p_drop && dropped.last().is_none_or(|&last| last + 1 != z) {
            dropped.push(z);
        }
    }
    dropped
}
