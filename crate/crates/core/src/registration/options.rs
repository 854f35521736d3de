use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Similarity {
    Ssd,
    #[default]
    Ncc,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ElasticOptions {
    /// Control-node spacing, px.
    pub grid_px: f64,
    /// Weight of the node-Laplacian smoothness term.
    pub lambda: f64,
    /// Largest node move per step, in pixels of the current pyramid level.
    pub step: f64,
    /// Step budget per pyramid level.
    pub max_iter: usize,
    /// Stop when the largest gradient component falls below this.
    pub grad_tol: f64,
}

impl Default for ElasticOptions {
    fn default() -> Self {
        Self { grid_px: 32.0, lambda: 0.1, step: 0.5, max_iter: 150, grad_tol: 1e-6 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegistrationOptions {
    pub pyramid_levels: usize,
    pub similarity: Similarity,
    /// Exhaustive translation search radius at full resolution; `None` is `min(dims) / 4`.
    pub search_radius_px: Option<usize>,
    pub theta_max_deg: f64,
    pub theta_samples: usize,
    pub elastic: ElasticOptions,
}

impl Default for RegistrationOptions {
    fn default() -> Self {
        Self {
            pyramid_levels: 3,
            similarity: Similarity::Ncc,
            search_radius_px: None,
            theta_max_deg: 15.0,
            theta_samples: 33,
            elastic: ElasticOptions::default(),
        }
    }
}

impl RegistrationOptions {
    pub fn validate(&self) -> Result<()> {
        if self.pyramid_levels == 0 {
            return Err(Error::Config("pyramid_levels must be >= 1".into()));
        }
        if self.theta_samples < 3 || !(self.theta_max_deg.is_finite() && self.theta_max_deg >= 0.0) {
            return Err(Error::Config("theta search needs >= 3 samples and a finite, non-negative range".into()));
        }
        let e = &self.elastic;
        if !(e.lambda.is_finite() && e.lambda >= 0.0) {
            return Err(Error::Config(format!("elastic.lambda must be >= 0, got {}", e.lambda)));
        }
        if !(e.grid_px.is_finite() && e.grid_px >= 4.0) {
            return Err(Error::Config(format!("elastic.grid_px must be >= 4, got {}", e.grid_px)));
        }
        if !(e.step.is_finite() && e.step > 0.0) || !(e.grad_tol.is_finite() && e.grad_tol >= 0.0) {
            return Err(Error::Config("elastic.step must be > 0 and elastic.grad_tol >= 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodKind {
    Identity,
    Translation,
    Rigid,
    Elastic,
}

impl MethodKind {
    pub fn name(self) -> &'static str {
        match self {
            MethodKind::Identity => "identity",
            MethodKind::Translation => "translation",
            MethodKind::Rigid => "rigid",
            MethodKind::Elastic => "elastic",
        }
    }
}

impl fmt::Display for MethodKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MethodKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "identity" => Ok(MethodKind::Identity),
            "translation" => Ok(MethodKind::Translation),
            "rigid" => Ok(MethodKind::Rigid),
            "elastic" => Ok(MethodKind::Elastic),
            other => Err(Error::Config(format!("unknown method {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegistrationMethod {
    pub kind: MethodKind,
    #[serde(default)]
    pub options: RegistrationOptions,
}

impl RegistrationMethod {
    pub fn new(kind: MethodKind) -> Self {
        Self { kind, options: RegistrationOptions::default() }
    }

    pub fn with_options(kind: MethodKind, options: RegistrationOptions) -> Self {
        Self { kind, options }
    }
}

/// How the slices of a stack are paired.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StackStrategy {
    /// Slice k is registered to the already corrected slice k-1.
    ChainToPrevious,
    /// Every slice is registered to one reference; `None` is the middle slice.
    FixedReference { reference: Option<usize> },
}

impl StackStrategy {
    pub fn mid() -> Self {
        StackStrategy::FixedReference { reference: None }
    }

    pub fn name(&self) -> String {
        match self {
            StackStrategy::ChainToPrevious => "chain".into(),
            StackStrategy::FixedReference { reference: None } => "fixed_reference".into(),
            StackStrategy::FixedReference { reference: Some(r) } => format!("fixed_reference_{r}"),
        }
    }
}

impl FromStr for StackStrategy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "chain" | "chain_to_previous" => Ok(StackStrategy::ChainToPrevious),
            "fixed" | "fixed_reference" | "mid" => Ok(StackStrategy::mid()),
            other => other
                .strip_prefix("fixed_reference_")
                .and_then(|r| r.parse().ok())
                .map(|r| StackStrategy::FixedReference { reference: Some(r) })
                .ok_or_else(|| Error::Config(format!("unknown strategy {other:?}"))),
        }
    }
}
