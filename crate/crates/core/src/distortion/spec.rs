use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ElasticSpec {
    /// Control-node spacing in px.
    #[serde(default = "default_grid")]
    pub grid_px: f64,
    /// Standard deviation of each node displacement component, px.
    #[serde(default)]
    pub sigma_px: f64,
}

fn default_grid() -> f64 {
    64.0
}

impl Default for ElasticSpec {
    fn default() -> Self {
        Self { grid_px: default_grid(), sigma_px: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntensitySpec {
    /// Standard deviation of `ln(gamma)`.
    #[serde(default)]
    pub sigma_gamma: f64,
}

/// Per-slice distortion statistics. The same spec always yields the same
/// distortion, bit for bit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistortionSpec {
    pub seed: u64,
    #[serde(default)]
    pub sigma_theta_rad: f64,
    #[serde(default)]
    pub sigma_t_px: f64,
    #[serde(default)]
    pub elastic: ElasticSpec,
    #[serde(default)]
    pub intensity: IntensitySpec,
    #[serde(default)]
    pub p_drop: f64,
    /// Node displacements are clamped to `clamp_k * sigma_px`.
    #[serde(default = "default_clamp_k")]
    pub clamp_k: f64,
}

fn default_clamp_k() -> f64 {
    3.0
}

impl DistortionSpec {
    /// No distortion at all.
    pub fn zero(seed: u64) -> Self {
        Self {
            seed,
            sigma_theta_rad: 0.0,
            sigma_t_px: 0.0,
            elastic: ElasticSpec::default(),
            intensity: IntensitySpec::default(),
            p_drop: 0.0,
            clamp_k: default_clamp_k(),
        }
    }

    /// Default preset: 2 deg rotation, 5 px translation, 3 px elastic on a
    /// 64 px lattice, 0.05 log-gamma jitter, 2 % slice loss.
    pub fn preset(seed: u64) -> Self {
        Self {
            seed,
            sigma_theta_rad: 2f64.to_radians(),
            sigma_t_px: 5.0,
            elastic: ElasticSpec { grid_px: 64.0, sigma_px: 3.0 },
            intensity: IntensitySpec { sigma_gamma: 0.05 },
            p_drop: 0.02,
            clamp_k: default_clamp_k(),
        }
    }

    /// Rigid jitter only.
    pub fn rigid_only(seed: u64, sigma_theta_rad: f64, sigma_t_px: f64) -> Self {
        Self { sigma_theta_rad, sigma_t_px, ..Self::zero(seed) }
    }

    /// Elastic deformation only.
    pub fn elastic_only(seed: u64, grid_px: f64, sigma_px: f64) -> Self {
        Self { elastic: ElasticSpec { grid_px, sigma_px }, ..Self::zero(seed) }
    }

    pub fn validate(&self) -> Result<()> {
        let check = |name: &str, v: f64| {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidSpec(format!("{name} must be finite and >= 0, got {v}")))
            }
        };
        check("sigma_theta_rad", self.sigma_theta_rad)?;
        check("sigma_t_px", self.sigma_t_px)?;
        check("elastic.sigma_px", self.elastic.sigma_px)?;
        check("intensity.sigma_gamma", self.intensity.sigma_gamma)?;
        if !(self.elastic.grid_px.is_finite() && self.elastic.grid_px >= 4.0) {
            return Err(Error::InvalidSpec(format!("elastic.grid_px must be >= 4, got {}", self.elastic.grid_px)));
        }
        if !(0.0..=0.5).contains(&self.p_drop) {
            return Err(Error::InvalidSpec(format!("p_drop must lie in [0, 0.5], got {}", self.p_drop)));
        }
        if !(self.clamp_k.is_finite() && self.clamp_k > 0.0) {
            return Err(Error::InvalidSpec(format!("clamp_k must be positive, got {}", self.clamp_k)));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_documented_keys() {
        let text = r#"
            seed = 9
            sigma_theta_rad = 0.03
            sigma_t_px = 5.0
            p_drop = 0.02
            clamp_k = 2.5
            [elastic]
            grid_px = 32.0
            sigma_px = 3.0
            [intensity]
            sigma_gamma = 0.05
        "#;
        let s: DistortionSpec = toml::from_str(text).unwrap();
        assert_eq!(s.seed, 9);
        assert_eq!(s.elastic.grid_px, 32.0);
        assert_eq!(s.intensity.sigma_gamma, 0.05);
        assert_eq!(s.clamp_k, 2.5);
        s.validate().unwrap();
    }

    #[test]
    fn rejects_unknown_keys() {
        assert!(serde_json::from_str::<DistortionSpec>(r#"{"seed": 1, "sigma_tx": 2}"#).is_err());
    }

    #[test]
    fn validation_bounds() {
        assert!(DistortionSpec { p_drop: 0.6, ..DistortionSpec::zero(1) }.validate().is_err());
        assert!(DistortionSpec::elastic_only(1, 2.0, 1.0).validate().is_err());
        assert!(DistortionSpec::rigid_only(1, -0.1, 0.0).validate().is_err());
        DistortionSpec::preset(1).validate().unwrap();
    }
}
