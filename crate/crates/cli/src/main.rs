//! `serireg` command-line front end.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serireg::harness::{
    distort_stage, evaluate_stage, phantom_stage, register_stage, run_pipeline, write_report, MethodSpec, PhantomKind,
    PhantomSpec, PipelineConfig,
};
use serireg::metrics::{EvalOptions, MetricsRecord};
use serireg::registration::StackStrategy;
use serireg::{par, Error, Result};

#[derive(Debug, Parser)]
#[command(name = "serireg", version, about = "Ground-truth evaluation of serial-section registration")]
struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true, env = "SERIREG_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run phantom/input, distort, register, evaluate and report in one go.
    Pipeline {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `out` from the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a synthetic phantom stack.
    Phantom {
        #[arg(long, default_value = "bent_tube")]
        kind: PhantomKind,
        /// NXxNYxNZ, e.g. 128x128x64.
        #[arg(long, default_value = "128x128x64", value_parser = parse_dims)]
        dims: [usize; 3],
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 16)]
        bit_depth: u8,
        #[arg(long)]
        out: PathBuf,
    },
    /// Distort a stack with the distortion section of a config.
    Distort {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        config: PathBuf,
        /// Overrides the distortion seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Register a distorted stack with one method.
    Register {
        #[arg(long = "in")]
        input: PathBuf,
        /// Method name, or the name of a method defined in `--config`.
        #[arg(long)]
        method: String,
        /// chain, fixed_reference or fixed_reference_<z>.
        #[arg(long)]
        strategy: Option<String>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score a registration result against the distortion record.
    Evaluate {
        #[arg(long)]
        result: PathBuf,
        #[arg(long)]
        record: PathBuf,
        #[arg(long)]
        original: PathBuf,
        /// Distorted stack; defaults to the record directory.
        #[arg(long)]
        distorted: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        eval: EvalFlags,
        #[arg(long)]
        out: PathBuf,
    },
    /// Combine metrics of several methods into comparison.csv and plots.
    Report {
        #[arg(long, num_args = 1.., required = true)]
        metrics: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
struct EvalFlags {
    #[arg(long)]
    mask_threshold: Option<f64>,
    #[arg(long)]
    margin: Option<usize>,
    #[arg(long)]
    drift_window: Option<usize>,
}

impl EvalFlags {
    fn apply(&self, mut o: EvalOptions) -> EvalOptions {
        if let Some(t) = self.mask_threshold {
            o.mask_threshold = t;
        }
        if let Some(m) = self.margin {
            o.margin = m;
        }
        if let Some(w) = self.drift_window {
            o.drift_window = w;
        }
        o
    }
}

fn parse_dims(s: &str) -> std::result::Result<[usize; 3], String> {
    let parts: Vec<&str> = s.split(['x', 'X']).collect();
    let [a, b, c] = parts.as_slice() else {
        return Err(format!("expected NXxNYxNZ, got {s:?}"));
    };
    let p = |t: &str| t.trim().parse::<usize>().map_err(|e| format!("{t:?}: {e}"));
    Ok([p(a)?, p(b)?, p(c)?])
}

fn check_bits(bits: u8) -> Result<()> {
    if bits == 8 || bits == 16 {
        Ok(())
    } else {
        Err(Error::Config(format!("bit depth must be 8 or 16, got {bits}")))
    }
}

fn find_method(cfg: Option<&PipelineConfig>, name: &str) -> Result<MethodSpec> {
    if let Some(cfg) = cfg {
        if let Some(m) = cfg.method_specs()?.into_iter().find(|m| m.name() == name) {
            return Ok(m);
        }
    }
    MethodSpec::parse_name(name)
}

fn run(cli: Cli) -> Result<()> {
    let threads = cli.threads;
    match cli.command {
        Command::Pipeline { config, out } => {
            let mut cfg = PipelineConfig::load(&config)?;
            if let Some(out) = out {
                cfg.out = out;
            }
            if threads.is_some() {
                cfg.threads = threads;
            }
            let report = run_pipeline(&cfg)?;
            for r in &report.records {
                eprintln!("{}: mean error {:.4} px, drift {:.4} px", r.method, r.aggregate.mean, r.drift.score);
            }
            Ok(())
        }
        Command::Phantom { kind, dims, seed, bit_depth, out } => {
            check_bits(bit_depth)?;
            let spec = PhantomSpec::new(kind, dims, seed);
            par::with_threads(threads, || phantom_stage(&spec, &out, bit_depth))
        }
        Command::Distort { input, config, seed, out } => {
            let cfg = PipelineConfig::load(&config)?;
            let mut spec = cfg.distortion;
            if let Some(s) = seed {
                spec.seed = s;
            }
            spec.validate().map_err(|e| Error::Config(e.to_string()))?;
            check_bits(cfg.bit_depth)?;
            par::with_threads(threads, || distort_stage(&input, &spec, &out, cfg.bit_depth))
        }
        Command::Register { input, method, strategy, config, out } => {
            let cfg = config.as_deref().map(PipelineConfig::load).transpose()?;
            let spec = find_method(cfg.as_ref(), &method)?;
            let strategy: StackStrategy = match (strategy, &cfg) {
                (Some(s), _) => s.parse()?,
                (None, Some(c)) => c.strategy()?,
                (None, None) => StackStrategy::mid(),
            };
            par::with_threads(threads, || register_stage(&input, &spec, strategy, &out)).map(|_| ())
        }
        Command::Evaluate { result, record, original, distorted, config, eval, out } => {
            let base = match config.as_deref() {
                Some(p) => PipelineConfig::load(p)?.evaluation,
                None => EvalOptions::default(),
            };
            let opts = eval.apply(base);
            opts.validate()?;
            let m = par::with_threads(threads, || {
                evaluate_stage(&result, &record, &original, distorted.as_deref(), &opts, &out)
            })?;
            eprintln!("{}: mean error {:.4} px, drift {:.4} px", m.method, m.aggregate.mean, m.drift.score);
            Ok(())
        }
        Command::Report { metrics, out } => {
            let records = metrics.iter().map(MetricsRecord::load).collect::<Result<Vec<_>>>()?;
            write_report(&records, Path::new(&out)).map_err(|e| e.in_stage("report"))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
