use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::volume::{Slice, Volume};
use crate::{par, rng, Error, Result};

const TUBE_LEVEL: f64 = 0.7;
const TEXTURE_SPACING: [f64; 3] = [3.0, 3.0, 4.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhantomKind {
    #[default]
    BentTube,
    Spheres,
    CheckerNoise,
}

impl fmt::Display for PhantomKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PhantomKind::BentTube => "bent_tube",
            PhantomKind::Spheres => "spheres",
            PhantomKind::CheckerNoise => "checker_noise",
        })
    }
}

impl FromStr for PhantomKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bent_tube" => Ok(PhantomKind::BentTube),
            "spheres" => Ok(PhantomKind::Spheres),
            "checker_noise" => Ok(PhantomKind::CheckerNoise),
            other => Err(Error::Config(format!("unknown phantom kind {other:?}"))),
        }
    }
}

/// Synthetic volume description. Only the parameters of `kind` are used.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhantomSpec {
    pub kind: PhantomKind,
    pub dims: [usize; 3],
    pub seed: u64,
    // bent_tube
    pub radius_px: f64,
    pub amplitude_px: f64,
    pub period_slices: f64,
    /// Std of the tube's interior texture.
    pub texture_std: f64,
    /// Mean intensity outside the tube.
    pub background: f64,
    /// Std of a z-invariant texture outside the tube; 0 leaves it flat.
    pub background_texture: f64,
    // spheres
    pub count: usize,
    pub radius_min_px: f64,
    pub radius_max_px: f64,
    // checker_noise
    pub cell_px: usize,
    pub noise_std: f64,
}

impl Default for PhantomSpec {
    fn default() -> Self {
        Self {
            kind: PhantomKind::BentTube,
            dims: [128, 128, 64],
            seed: 0,
            radius_px: 12.0,
            amplitude_px: 10.0,
            period_slices: 64.0,
            texture_std: 0.1,
            background: 0.0,
            background_texture: 0.0,
            count: 8,
            radius_min_px: 4.0,
            radius_max_px: 10.0,
            cell_px: 8,
            noise_std: 0.02,
        }
    }
}

impl PhantomSpec {
    pub fn new(kind: PhantomKind, dims: [usize; 3], seed: u64) -> Self {
        Self { kind, dims, seed, ..Default::default() }
    }

    /// Tube axis position in slice `z`.
    pub fn tube_center(&self, z: usize) -> (f64, f64) {
        let [nx, ny, _] = self.dims;
        let phase = 2.0 * std::f64::consts::PI * z as f64 / self.period_slices;
        ((nx as f64 - 1.0) / 2.0 + self.amplitude_px * phase.sin(), (ny as f64 - 1.0) / 2.0)
    }

    pub fn validate(&self) -> Result<()> {
        let [nx, ny, nz] = self.dims;
        if nx == 0 || ny == 0 || nz == 0 {
            return Err(Error::InvalidSpec(format!("phantom dims must be positive, got {:?}", self.dims)));
        }
        let finite = [self.radius_px, self.amplitude_px, self.period_slices, self.texture_std, self.background, self.background_texture]
            .iter()
            .chain(&[self.radius_min_px, self.radius_max_px, self.noise_std])
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidSpec("phantom parameters must be finite".into()));
        }
        match self.kind {
            PhantomKind::BentTube => {
                if nx.min(ny).min(nz) < 32 {
                    return Err(Error::InvalidSpec(format!("bent_tube needs >= 32 voxels per axis, got {:?}", self.dims)));
                }
                if self.radius_px <= 0.0 || self.period_slices <= 0.0 || self.texture_std < 0.0 || self.background_texture < 0.0 {
                    return Err(Error::InvalidSpec("bent_tube radius, period and texture must be positive".into()));
                }
                if !(0.0..=1.0).contains(&self.background) {
                    return Err(Error::InvalidSpec(format!("background {} outside [0, 1]", self.background)));
                }
                let (cx, cy) = ((nx as f64 - 1.0) / 2.0, (ny as f64 - 1.0) / 2.0);
                let reach_x = self.amplitude_px.abs() + self.radius_px + 1.0;
                let reach_y = self.radius_px + 1.0;
                if reach_x > cx || reach_y > cy {
                    return Err(Error::InvalidSpec(format!(
                        "tube (radius {}, amplitude {}) leaves the {nx}x{ny} slice",
                        self.radius_px, self.amplitude_px
                    )));
                }
            }
            PhantomKind::Spheres => {
                if self.radius_min_px <= 0.0 || self.radius_max_px < self.radius_min_px {
                    return Err(Error::InvalidSpec("spheres need 0 < radius_min_px <= radius_max_px".into()));
                }
                if 2.0 * self.radius_max_px + 2.0 > nx.min(ny).min(nz) as f64 {
                    return Err(Error::InvalidSpec(format!("spheres of radius {} do not fit {:?}", self.radius_max_px, self.dims)));
                }
            }
            PhantomKind::CheckerNoise => {
                if self.cell_px == 0 || self.noise_std < 0.0 {
                    return Err(Error::InvalidSpec("checker_noise needs cell_px >= 1 and noise_std >= 0".into()));
                }
            }
        }
        Ok(())
    }
}

/// Trilinear value noise on a regular lattice of Gaussian samples.
struct ValueNoise {
    origin: [f64; 3],
    spacing: [f64; 3],
    dims: [usize; 3],
    values: Vec<f64>,
}

impl ValueNoise {
    /// Lattice covering `lo..=hi` with the given per-point std (the
    /// interpolated field has roughly `std * sqrt(8/27)`).
    fn new(lo: [f64; 3], hi: [f64; 3], spacing: [f64; 3], std: f64, seed: u64, purpose: &str) -> Self {
        let dims: [usize; 3] = std::array::from_fn(|a| ((hi[a] - lo[a]) / spacing[a]).ceil().max(0.0) as usize + 2);
        let mut r = rng::substream(seed, 0, purpose);
        let normal = Normal::new(0.0, std).expect("finite std");
        let values = (0..dims.iter().product()).map(|_| normal.sample(&mut r)).collect();
        Self { origin: lo, spacing, dims, values }
    }

    fn sample(&self, p: [f64; 3]) -> f64 {
        let mut base = [0usize; 3];
        let mut frac = [0.0; 3];
        for a in 0..3 {
            let t = ((p[a] - self.origin[a]) / self.spacing[a]).max(0.0);
            let i = (t.floor() as usize).min(self.dims[a] - 1);
            base[a] = i;
            frac[a] = if i + 1 < self.dims[a] { t - i as f64 } else { 0.0 };
        }
        let at = |i: usize, j: usize, k: usize| {
            let (i, j, k) = (i.min(self.dims[0] - 1), j.min(self.dims[1] - 1), k.min(self.dims[2] - 1));
            self.values[(k * self.dims[1] + j) * self.dims[0] + i]
        };
        let mut v = 0.0;
        for (dk, wk) in [(0, 1.0 - frac[2]), (1, frac[2])] {
            for (dj, wj) in [(0, 1.0 - frac[1]), (1, frac[1])] {
                for (di, wi) in [(0, 1.0 - frac[0]), (1, frac[0])] {
                    let w = wi * wj * wk;
                    if w != 0.0 {
                        v += w * at(base[0] + di, base[1] + dj, base[2] + dk);
                    }
                }
            }
        }
        v
    }
}

/// Lattice std giving an interpolated field of std `target`.
fn lattice_std(target: f64) -> f64 {
    target / (8.0f64 / 27.0).sqrt()
}

/// Anti-aliased coverage of a disk or ball edge: 1 px linear ramp.
#[inline]
fn coverage(radius: f64, dist: f64) -> f64 {
    (radius + 0.5 - dist).clamp(0.0, 1.0)
}

/// Generates a synthetic, innately registered volume.
pub fn generate_phantom(spec: &PhantomSpec) -> Result<Volume> {
    spec.validate()?;
    let [nx, ny, nz] = spec.dims;
    let slices = match spec.kind {
        PhantomKind::BentTube => bent_tube(spec),
        PhantomKind::Spheres => spheres(spec)?,
        PhantomKind::CheckerNoise => checker_noise(spec),
    };
    let mut v = Volume::from_slices(slices, [1.0; 3])?;
    debug_assert_eq!(v.dims(), [nx, ny, nz]);
    v.set_provenance("pipeline_step", "phantom");
    v.set_provenance("phantom", serde_json::to_value(spec).expect("spec serializes"));
    Ok(v)
}

fn bent_tube(spec: &PhantomSpec) -> Vec<Slice> {
    let [nx, ny, nz] = spec.dims;
    let r = spec.radius_px;
    let a = spec.amplitude_px.abs();
    let tube = ValueNoise::new(
        [-a - r - 2.0, -r - 2.0, 0.0],
        [a + r + 2.0, r + 2.0, nz as f64],
        TEXTURE_SPACING,
        lattice_std(spec.texture_std),
        spec.seed,
        "tube_texture",
    );
    let back = (spec.background_texture > 0.0).then(|| {
        ValueNoise::new(
            [0.0; 3],
            [nx as f64, ny as f64, 0.0],
            TEXTURE_SPACING,
            lattice_std(spec.background_texture),
            spec.seed,
            "background_texture",
        )
    });
    par::map_range(nz, |z| {
        let (cx, cy) = spec.tube_center(z);
        Slice::from_fn(nx, ny, |x, y| {
            let (dx, dy) = (x as f64 - cx, y as f64 - cy);
            let c = coverage(r, dx.hypot(dy));
            let bg = spec.background + back.as_ref().map_or(0.0, |b| b.sample([x as f64, y as f64, 0.0]));
            let fg = if c > 0.0 { TUBE_LEVEL + tube.sample([dx, dy, z as f64]) } else { 0.0 };
            (bg * (1.0 - c) + fg * c) as f32
        })
    })
}

/// Non-overlapping balls placed by rejection sampling.
pub(crate) fn sphere_layout(spec: &PhantomSpec) -> Result<Vec<([f64; 3], f64)>> {
    let [nx, ny, nz] = spec.dims;
    let mut r = rng::substream(spec.seed, 0, "spheres");
    let mut balls: Vec<([f64; 3], f64)> = Vec::with_capacity(spec.count);
    let mut attempts = 0;
    while balls.len() < spec.count {
        attempts += 1;
        if attempts > 10_000 * spec.count.max(1) {
            return Err(Error::InvalidSpec(format!("could not place {} non-overlapping spheres in {:?}", spec.count, spec.dims)));
        }
        let radius = r.random_range(spec.radius_min_px..=spec.radius_max_px);
        let lim = |n: usize| (radius + 1.0, n as f64 - 2.0 - radius);
        let c: [f64; 3] = std::array::from_fn(|a| {
            let (lo, hi) = lim([nx, ny, nz][a]);
            r.random_range(lo..=hi)
        });
        let clear = balls.iter().all(|(o, ro)| {
            let d = ((c[0] - o[0]).powi(2) + (c[1] - o[1]).powi(2) + (c[2] - o[2]).powi(2)).sqrt();
            d >= radius + ro + 2.0
        });
        if clear {
            balls.push((c, radius));
        }
    }
    Ok(balls)
}

fn spheres(spec: &PhantomSpec) -> Result<Vec<Slice>> {
    let [nx, ny, nz] = spec.dims;
    let balls = sphere_layout(spec)?;
    Ok(par::map_range(nz, |z| {
        Slice::from_fn(nx, ny, |x, y| {
            let c = balls
                .iter()
                .map(|(o, r)| {
                    let d = ((x as f64 - o[0]).powi(2) + (y as f64 - o[1]).powi(2) + (z as f64 - o[2]).powi(2)).sqrt();
                    coverage(*r, d)
                })
                .fold(0.0, f64::max);
            (0.1 + 0.8 * c) as f32
        })
    }))
}

fn checker_noise(spec: &PhantomSpec) -> Vec<Slice> {
    let [nx, ny, nz] = spec.dims;
    let cell = spec.cell_px;
    let (cx, cy) = (nx.div_ceil(cell), ny.div_ceil(cell));
    let mut r = rng::substream(spec.seed, 0, "checker");
    let cells: Vec<f64> = (0..cx * cy).map(|_| r.random_range(0.2..=0.8)).collect();
    par::map_range(nz, |z| {
        let mut noise = rng::substream(spec.seed, z as u64, "checker_noise");
        let normal = Normal::new(0.0, spec.noise_std).expect("finite std");
        let n: Vec<f64> = (0..nx * ny).map(|_| normal.sample(&mut noise)).collect();
        Slice::from_fn(nx, ny, |x, y| (cells[(y / cell) * cx + x / cell] + n[y * nx + x]) as f32)
    })
}
