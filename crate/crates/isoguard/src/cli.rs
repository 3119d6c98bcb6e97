//! Command-line dispatch.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, CommandFactory, Parser, Subcommand};

use crate::config::{PipelineConfig, ResolvedConfig, RESOLVED_FILE};
use crate::error::{Error, Result, StageContext};
use crate::formats::read_json;
use crate::parallel::Runtime;
use crate::pipeline::{self as p, create_dir, render_report};
use crate::synth::{generate_kdd_like, generate_synthetic, write_synthetic, KddLikeSpec, SyntheticSpec, DATA_FILE};
use crate::tabular::{write_csv, TargetLabels, DEFAULT_TARGET};

#[derive(Debug, Parser)]
#[command(name = "isoguard", version, about = "Isolation-forest outlier removal experiments on tabular intrusion data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Args)]
struct Common {
    /// Pipeline configuration (JSON). Later stages fall back to
    /// config.resolved.json in the output directory.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Master seed; overrides the config.
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,
    /// Output (and stage input) directory; overrides the config.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Load, split and fit transforms: split.json, transforms.json.
    Ingest(Common),
    /// Recursive feature elimination: rfe.json.
    Select(Common),
    /// Fit the isolation forest and judge every row: forest.json, verdicts, scatter files.
    Detect(Common),
    /// Train all classifiers on both arms: model_<name>.json.
    Train(Common),
    /// Score both arms on the test partition: report.json, report.txt, roc_<name>.csv.
    Evaluate(Common),
    /// Every stage in order.
    Pipeline(Common),
    /// Write a synthetic dataset; --config takes generator parameters.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Args)]
struct SynthArgs {
    #[command(flatten)]
    common: Common,
    /// Generate 41-column connection records instead of Gaussian clusters.
    #[arg(long)]
    kdd_like: bool,
}

fn usage_error(message: impl Into<String>) -> Error {
    let usage = Cli::command().render_usage();
    Error::Usage(format!("{}\n\n{usage}", message.into()))
}

fn resolve(common: &Common) -> Result<ResolvedConfig> {
    let cfg = match (&common.config, &common.out) {
        (Some(path), _) => PipelineConfig::load(path)?,
        (None, Some(out)) if out.join(RESOLVED_FILE).is_file() => PipelineConfig::load(&out.join(RESOLVED_FILE))?,
        _ => return Err(usage_error("a configuration is required (--config <PATH>)")),
    };
    cfg.resolve(common.seed, common.out.as_deref()).map_err(|e| match e {
        Error::Usage(m) => usage_error(m),
        e => e,
    })
}

struct Loaded {
    cfg: ResolvedConfig,
    dir: PathBuf,
    prep: p::Prepared,
}

fn load_ingested(common: &Common) -> Result<Loaded> {
    let cfg = resolve(common)?;
    let dir = cfg.output.clone();
    let prep = p::load_prepared(&cfg, &dir).stage("ingest")?;
    Ok(Loaded { cfg, dir, prep })
}

fn run_stage(command: Command) -> Result<()> {
    match command {
        Command::Ingest(c) => {
            let cfg = resolve(&c)?;
            let dir = create_dir(&cfg.output)?;
            let prep = p::ingest(&cfg).stage("ingest")?;
            p::write_prepared(&dir, &cfg, &prep).stage("ingest")?;
            println!("ingest: {} training rows, {} test rows, {} features", prep.train.n_rows(), prep.test.n_rows(), prep.train.n_cols());
        }
        Command::Select(c) => {
            let rt = Runtime::from_env()?;
            let l = load_ingested(&c)?;
            let rfe = p::select(&rt, &l.cfg, &l.prep).stage("select")?;
            p::write_selection(&l.dir, &l.prep, &rfe).stage("select")?;
            let feats = p::features(&l.prep, &rfe)?;
            println!("select: {}", feats.ranked.join(", "));
        }
        Command::Detect(c) => {
            let rt = Runtime::from_env()?;
            let l = load_ingested(&c)?;
            let feats = selected(&l)?;
            let det = p::detect(&rt, &l.cfg, &feats).stage("detect")?;
            p::write_detection(&l.dir, &l.cfg, &l.prep, &feats, &det).stage("detect")?;
            println!("detect: {} training and {} test rows flagged", det.train_outliers(), det.test_outliers());
        }
        Command::Train(c) => {
            let rt = Runtime::from_env()?;
            let l = load_ingested(&c)?;
            let feats = selected(&l)?;
            let det = p::load_detection(&l.dir, &l.cfg, &l.prep).stage("detect")?;
            let trained = p::train(&rt, &l.cfg, &feats, &det).stage("train")?;
            p::write_models(&l.dir, &trained).stage("train")?;
            println!("train: {} original rows, {} without outliers", feats.train_y.len(), trained.kept.len());
        }
        Command::Evaluate(c) => {
            let rt = Runtime::from_env()?;
            let l = load_ingested(&c)?;
            let feats = selected(&l)?;
            let det = p::load_detection(&l.dir, &l.cfg, &l.prep).stage("detect")?;
            let trained = p::load_models(&l.dir, &feats, &det).stage("train")?;
            let eval = p::evaluate(&rt, &l.cfg, &l.prep, &feats, &det, &trained).stage("evaluate")?;
            p::write_evaluation(&l.dir, &eval).stage("evaluate")?;
            print!("{}", render_report(&eval.report));
        }
        Command::Pipeline(c) => {
            let rt = Runtime::from_env()?;
            let cfg = resolve(&c)?;
            let report = p::run_pipeline(&rt, &cfg)?;
            print!("{}", render_report(&report));
        }
        Command::Synth(s) => synth(&s)?,
    }
    Ok(())
}

fn selected(l: &Loaded) -> Result<p::Features> {
    let rfe = p::load_selection(&l.dir, &l.prep).stage("select")?;
    p::features(&l.prep, &rfe).stage("select")
}

fn synth(args: &SynthArgs) -> Result<()> {
    let out: &Path = args.common.out.as_deref().ok_or_else(|| usage_error("synth needs --out <DIR>"))?;
    if args.kdd_like {
        let mut spec: KddLikeSpec = match &args.common.config {
            Some(path) => read_json(path)?,
            None => KddLikeSpec::default(),
        };
        if let Some(seed) = args.common.seed {
            spec.seed = seed;
        }
        let ds = generate_kdd_like(&spec)?;
        create_dir(out)?;
        let path = out.join(DATA_FILE);
        write_csv(&path, &ds, DEFAULT_TARGET, &TargetLabels::default())?;
        println!("synth: {} rows written to {}", ds.n_rows(), path.display());
    } else {
        let mut spec: SyntheticSpec = match &args.common.config {
            Some(path) => read_json(path)?,
            None => SyntheticSpec::default(),
        };
        if let Some(seed) = args.common.seed {
            spec.seed = seed;
        }
        let data = generate_synthetic(&spec)?;
        let path = write_synthetic(out, &data)?;
        let injected = data.injected.iter().filter(|&&m| m).count();
        println!("synth: {} rows ({injected} injected) written to {}", data.dataset.n_rows(), path.display());
    }
    Ok(())
}

/// Parses `argv` and runs the command; returns the process exit status.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match run_stage(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
