use std::path::{Path, PathBuf};

use super::config::{InputSpec, MethodSpec, PipelineConfig};
use super::phantom::{generate_phantom, PhantomSpec};
use super::report::write_report;
use crate::distortion::{distort_volume, oracle_recovery, DistortionRecord, DistortionSpec};
use crate::io::{load_stack, save_stack};
use crate::metrics::{evaluate, EvalOptions, MetricsRecord};
use crate::registration::{import_external, register_stack, RegistrationResult, SliceDiagnostics, StackStrategy};
use crate::volume::Volume;
use crate::{par, Result};

pub const ORIGINAL_DIR: &str = "original";
pub const DISTORTED_DIR: &str = "distorted";

/// What a pipeline run produced.
#[derive(Debug, Clone)]
pub struct PipelineReport {
    pub out: PathBuf,
    pub records: Vec<MetricsRecord>,
}

/// Generates a phantom and writes it as a stack.
pub fn phantom_stage(spec: &PhantomSpec, out: &Path, bit_depth: u8) -> Result<()> {
    let v = generate_phantom(spec).map_err(|e| e.in_stage("phantom"))?;
    save_stack(&v, out, bit_depth).map_err(|e| e.in_stage("phantom"))
}

/// Distorts the stack in `input`; writes the distorted stack and its record to `out`.
pub fn distort_stage(input: &Path, spec: &DistortionSpec, out: &Path, bit_depth: u8) -> Result<()> {
    let run = || -> Result<()> {
        let original = load_stack(input, None)?;
        let (distorted, record) = distort_volume(&original, spec)?;
        save_stack(&distorted, out, bit_depth)?;
        record.save(out)
    };
    run().map_err(|e| e.in_stage("distort"))
}

/// Registers the distorted stack in `distorted` with one method; writes the result to `out`.
///
/// The oracle reads the record stored next to the distorted stack; external
/// methods are imported from their own directory.
pub fn register_stage(distorted: &Path, method: &MethodSpec, strategy: StackStrategy, out: &Path) -> Result<RegistrationResult> {
    let run = || -> Result<RegistrationResult> {
        method.validate()?;
        let v = load_stack(distorted, None)?;
        let mut result = match method {
            MethodSpec::Oracle { tol, .. } => {
                let record = DistortionRecord::load(distorted)?;
                let fields = oracle_recovery(&record, *tol)?;
                let diagnostics = fields
                    .indices()
                    .iter()
                    .map(|&z| SliceDiagnostics { z, similarity_final: f64::NAN, iterations: 0, converged: true })
                    .collect();
                RegistrationResult { fields, diagnostics, method: String::new(), strategy: "oracle".into() }
            }
            MethodSpec::External { path, format, .. } => {
                import_external(path, (*format).into(), (v.nx(), v.ny()), &v.slice_indices())?
            }
            builtin => {
                let m = builtin.registration().expect("built-in method");
                register_stack(&v, &m, strategy)?
            }
        };
        result.method = method.name();
        result.save(out)?;
        Ok(result)
    };
    run().map_err(|e| e.in_stage("register"))
}

/// Scores a saved result. `distorted` defaults to `record`, where the pipeline keeps both.
pub fn evaluate_stage(
    result: &Path,
    record: &Path,
    original: &Path,
    distorted: Option<&Path>,
    opts: &EvalOptions,
    out: &Path,
) -> Result<MetricsRecord> {
    let run = || -> Result<MetricsRecord> {
        let r = RegistrationResult::load(result)?;
        let rec = DistortionRecord::load(record)?;
        let orig = load_stack(original, None)?;
        let dist = load_stack(distorted.unwrap_or(record), None)?;
        let m = evaluate(&r, &rec, &orig, &dist, opts)?;
        m.save(out)?;
        Ok(m)
    };
    run().map_err(|e| e.in_stage("evaluate"))
}

/// Runs every stage of `cfg` under its thread setting.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<PipelineReport> {
    cfg.validate()?;
    par::with_threads(cfg.threads, || run_stages(cfg))
}

fn run_stages(cfg: &PipelineConfig) -> Result<PipelineReport> {
    let out = cfg.out.clone();
    let original_dir = out.join(ORIGINAL_DIR);
    let distorted_dir = out.join(DISTORTED_DIR);
    match &cfg.input {
        InputSpec::Phantom { phantom } => phantom_stage(phantom, &original_dir, cfg.bit_depth)?,
        InputSpec::Stack { path, bit_depth } => {
            let v: Volume = load_stack(path, *bit_depth).map_err(|e| e.in_stage("input"))?;
            save_stack(&v, &original_dir, cfg.bit_depth).map_err(|e| e.in_stage("input"))?;
        }
    }
    distort_stage(&original_dir, &cfg.distortion, &distorted_dir, cfg.bit_depth)?;
    let strategy = cfg.strategy()?;
    let mut records = Vec::new();
    for method in cfg.method_specs()? {
        let dir = out.join(method.name());
        register_stage(&distorted_dir, &method, strategy, &dir)?;
        records.push(evaluate_stage(&dir, &distorted_dir, &original_dir, None, &cfg.evaluation, &dir)?);
    }
    write_report(&records, &out).map_err(|e| e.in_stage("report"))?;
    Ok(PipelineReport { out, records })
}

