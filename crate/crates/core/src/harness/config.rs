use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::phantom::PhantomSpec;
use crate::distortion::DistortionSpec;
use crate::metrics::EvalOptions;
use crate::registration::{ExternalKind, MethodKind, RegistrationMethod, RegistrationOptions, StackStrategy};
use crate::{Error, Result};

/// Tolerance used for the oracle method unless configured.
pub const ORACLE_TOL: f64 = 0.01;

/// Where the innately registered volume comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum InputSpec {
    Stack {
        path: PathBuf,
        #[serde(default)]
        bit_depth: Option<u8>,
    },
    Phantom {
        phantom: PhantomSpec,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExternalFormat {
    Fields,
    RigidParams,
}

impl From<ExternalFormat> for ExternalKind {
    fn from(f: ExternalFormat) -> Self {
        match f {
            ExternalFormat::Fields => ExternalKind::Fields,
            ExternalFormat::RigidParams => ExternalKind::RigidParams,
        }
    }
}

/// One method under test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MethodSpec {
    Identity {
        #[serde(default)]
        name: Option<String>,
    },
    Translation {
        #[serde(default)]
        name: Option<String>,
        #[serde(default)]
        options: RegistrationOptions,
    },
    Rigid {
        #[serde(default)]
        name: Option<String>,
        #[serde(default)]
        options: RegistrationOptions,
    },
    Elastic {
        #[serde(default)]
        name: Option<String>,
        #[serde(default)]
        options: RegistrationOptions,
    },
    /// Exact inverse of the recorded distortion.
    Oracle {
        #[serde(default)]
        name: Option<String>,
        #[serde(default = "oracle_tol")]
        tol: f64,
    },
    /// Result produced by another tool.
    External {
        #[serde(default)]
        name: Option<String>,
        path: PathBuf,
        format: ExternalFormat,
    },
}

fn oracle_tol() -> f64 {
    ORACLE_TOL
}

impl MethodSpec {
    pub fn builtin(kind: MethodKind, options: RegistrationOptions) -> Self {
        match kind {
            MethodKind::Identity => MethodSpec::Identity { name: None },
            MethodKind::Translation => MethodSpec::Translation { name: None, options },
            MethodKind::Rigid => MethodSpec::Rigid { name: None, options },
            MethodKind::Elastic => MethodSpec::Elastic { name: None, options },
        }
    }

    pub fn oracle() -> Self {
        MethodSpec::Oracle { name: None, tol: ORACLE_TOL }
    }

    /// Name of the method's output directory and its label in reports.
    pub fn name(&self) -> String {
        let (name, default) = match self {
            MethodSpec::Identity { name } => (name, "identity".to_string()),
            MethodSpec::Translation { name, .. } => (name, "translation".into()),
            MethodSpec::Rigid { name, .. } => (name, "rigid".into()),
            MethodSpec::Elastic { name, .. } => (name, "elastic".into()),
            MethodSpec::Oracle { name, .. } => (name, "oracle".into()),
            MethodSpec::External { name, path, .. } => {
                let stem = path.file_name().map_or("external".into(), |n| n.to_string_lossy().into_owned());
                (name, stem)
            }
        };
        name.clone().unwrap_or(default)
    }

    /// Built-in registration method, if this is one.
    pub fn registration(&self) -> Option<RegistrationMethod> {
        let (kind, options) = match self {
            MethodSpec::Identity { .. } => (MethodKind::Identity, RegistrationOptions::default()),
            MethodSpec::Translation { options, .. } => (MethodKind::Translation, *options),
            MethodSpec::Rigid { options, .. } => (MethodKind::Rigid, *options),
            MethodSpec::Elastic { options, .. } => (MethodKind::Elastic, *options),
            _ => return None,
        };
        Some(RegistrationMethod::with_options(kind, options))
    }

    /// Parses a bare method name as used on the command line.
    pub fn parse_name(s: &str) -> Result<Self> {
        match s {
            "oracle" => Ok(Self::oracle()),
            other => Ok(Self::builtin(other.parse()?, RegistrationOptions::default())),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(m) = self.registration() {
            m.options.validate()?;
        }
        if let MethodSpec::Oracle { tol, .. } = self {
            if !(tol.is_finite() && *tol > 0.0) {
                return Err(Error::Config(format!("oracle tol must be > 0, got {tol}")));
            }
        }
        let name = self.name();
        if name.is_empty() || name.contains(['/', '\\']) || name == "original" || name == "distorted" {
            return Err(Error::Config(format!("method name {name:?} is not usable as a directory name")));
        }
        Ok(())
    }
}

/// Method entries may be written as a bare name or as a table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MethodEntry {
    Name(String),
    Spec(MethodSpec),
}

impl MethodEntry {
    pub fn resolve(&self) -> Result<MethodSpec> {
        match self {
            MethodEntry::Name(n) => MethodSpec::parse_name(n),
            MethodEntry::Spec(s) => Ok(s.clone()),
        }
    }
}

/// Strategies may be written as a bare name or as a table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StrategyEntry {
    Name(String),
    Spec(StackStrategy),
}

impl StrategyEntry {
    pub fn resolve(&self) -> Result<StackStrategy> {
        match self {
            StrategyEntry::Name(n) => n.parse(),
            StrategyEntry::Spec(s) => Ok(*s),
        }
    }
}

impl Default for StrategyEntry {
    fn default() -> Self {
        StrategyEntry::Spec(StackStrategy::mid())
    }
}

/// Everything one pipeline run needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub input: InputSpec,
    pub distortion: DistortionSpec,
    pub methods: Vec<MethodEntry>,
    #[serde(default)]
    pub strategy: StrategyEntry,
    #[serde(default)]
    pub evaluation: EvalOptions,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    /// Bit depth of the stacks written by the pipeline.
    #[serde(default = "default_bits")]
    pub bit_depth: u8,
    /// Worker threads; overridden by `--threads` and `SERIREG_THREADS`.
    #[serde(default)]
    pub threads: Option<usize>,
}

fn default_out() -> PathBuf {
    PathBuf::from("serireg_out")
}

fn default_bits() -> u8 {
    16
}

impl PipelineConfig {
    pub fn new(input: InputSpec, distortion: DistortionSpec, methods: Vec<MethodSpec>, out: impl Into<PathBuf>) -> Self {
        Self {
            input,
            distortion,
            methods: methods.into_iter().map(MethodEntry::Spec).collect(),
            strategy: StrategyEntry::default(),
            evaluation: EvalOptions::default(),
            out: out.into(),
            bit_depth: default_bits(),
            threads: None,
        }
    }

    /// Reads a TOML or JSON file (by extension; TOML otherwise).
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text, path.extension().and_then(|e| e.to_str()) == Some("json"))
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    fn parse(text: &str, json: bool) -> std::result::Result<Self, String> {
        if json {
            serde_json::from_str(text).map_err(|e| e.to_string())
        } else {
            toml::from_str(text).map_err(|e| e.to_string())
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        Self::parse(text, false).map_err(Error::Config)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn strategy(&self) -> Result<StackStrategy> {
        self.strategy.resolve()
    }

    pub fn method_specs(&self) -> Result<Vec<MethodSpec>> {
        self.methods.iter().map(MethodEntry::resolve).collect()
    }

    pub fn validate(&self) -> Result<()> {
        self.distortion.validate().map_err(|e| Error::Config(e.to_string()))?;
        self.evaluation.validate()?;
        self.strategy()?;
        if self.bit_depth != 8 && self.bit_depth != 16 {
            return Err(Error::Config(format!("bit_depth must be 8 or 16, got {}", self.bit_depth)));
        }
        let methods = self.method_specs()?;
        if methods.is_empty() {
            return Err(Error::Config("at least one method is required".into()));
        }
        let mut names = Vec::new();
        for m in &methods {
            m.validate()?;
            let n = m.name();
            if names.contains(&n) {
                return Err(Error::Config(format!("method name {n:?} used twice")));
            }
            names.push(n);
        }
        if let InputSpec::Stack { path, .. } = &self.input {
            if same_dir(path, &self.out) {
                return Err(Error::Config(format!("output dir {} equals the input dir", self.out.display())));
            }
        }
        Ok(())
    }
}

fn same_dir(a: &Path, b: &Path) -> bool {
    match (a.canonicalize(), b.canonicalize()) {
        (Ok(a), Ok(b)) => a == b,
        _ => a == b,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
out = "run"
methods = ["identity", "oracle", { kind = "rigid", options = { theta_max_deg = 10.0 } }]
strategy = "chain"

[input.phantom]
kind = "bent_tube"
dims = [64, 64, 32]
seed = 3

[distortion]
seed = 11
sigma_theta_rad = 0.01
sigma_t_px = 2.0
elastic = { grid_px = 32.0, sigma_px = 1.0 }
"#;

    #[test]
    fn toml_round_trip() {
        let cfg = PipelineConfig::from_toml(SAMPLE).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.strategy().unwrap(), StackStrategy::ChainToPrevious);
        let methods = cfg.method_specs().unwrap();
        assert_eq!(methods.iter().map(MethodSpec::name).collect::<Vec<_>>(), ["identity", "oracle", "rigid"]);
        assert!(matches!(cfg.input, InputSpec::Phantom { .. }));
        let again = PipelineConfig::from_toml(&cfg.to_toml().unwrap()).unwrap();
        assert_eq!(again.method_specs().unwrap(), methods);
    }

    #[test]
    fn rejects_bad_configs() {
        let mut cfg = PipelineConfig::from_toml(SAMPLE).unwrap();
        cfg.methods.clear();
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
        let mut cfg = PipelineConfig::from_toml(SAMPLE).unwrap();
        cfg.methods.push(MethodEntry::Name("identity".into()));
        assert!(cfg.validate().is_err());
        assert!(PipelineConfig::from_toml("methods = []").is_err());
        let unknown = SAMPLE.replace("sigma_t_px", "sigma_tt_px");
        assert!(PipelineConfig::from_toml(&unknown).is_err());
    }
}
