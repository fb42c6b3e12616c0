//! Command-line workflow: generate synthetic datasets, train calibrations,
//! sweep hyperparameters, trace learning curves, and evaluate weight maps.
//!
//! Every command is seed-deterministic: rerunning with identical inputs and
//! flags produces byte-identical output files. Failures exit nonzero with a
//! single machine-readable `error[category]: ...` line on stderr.

mod config;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use fluorocal::cost::Hyperparams;
use fluorocal::io::{self, OutputMeta};
use fluorocal::optimizer::OptimizerSettings;
use fluorocal::pipeline::{
    self, baseline_single_ratio, baseline_uniform, evaluate, split, Dataset, SplitOrder, SplitSpec,
};
use fluorocal::synth::{generate_dataset, make_efficiency_field};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "fluorocal",
    about = "Fluorescence-imaging calibration against cavity-referenced spin measurements",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset with known ground truth.
    Generate(GenerateArgs),
    /// Train a per-superpixel weight map on a dataset.
    Train(TrainArgs),
    /// Train across a grid of one hyperparameter and report validation metrics.
    Sweep(SweepArgs),
    /// Trace training/validation error against training-set size.
    LearningCurve(LearningCurveArgs),
    /// Score a weight map (plus reference baselines) on a dataset.
    Evaluate(EvaluateArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// TOML world description; defaults describe the reference-scale world.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Clone)]
struct SplitArgs {
    /// Shots used for training (default: every shot not held out).
    #[arg(long)]
    train_count: Option<usize>,
    /// Shots reserved for validation (default 0); the remainder is the test set.
    #[arg(long, default_value_t = 0)]
    validation_count: usize,
    /// Shuffle shots with this seed before splitting.
    #[arg(long, conflicts_with = "in_order")]
    shuffle_seed: Option<u64>,
    /// Split in file order (the default).
    #[arg(long)]
    in_order: bool,
}

impl SplitArgs {
    fn spec(&self, total: usize) -> SplitSpec {
        SplitSpec {
            train_count: self
                .train_count
                .unwrap_or_else(|| total.saturating_sub(self.validation_count)),
            validation_count: self.validation_count,
            order: match self.shuffle_seed {
                Some(seed) => SplitOrder::Shuffled(seed),
                None => SplitOrder::InOrder,
            },
        }
    }
}

#[derive(Args, Clone)]
struct OptimizerArgs {
    #[arg(long, default_value_t = 1e-7)]
    tol_step: f64,
    #[arg(long, default_value_t = 1e-7)]
    tol_objective: f64,
    #[arg(long, default_value_t = 100_000)]
    max_iterations: usize,
    #[arg(long, default_value_t = 500_000)]
    max_evaluations: usize,
}

impl OptimizerArgs {
    fn settings(&self) -> OptimizerSettings {
        OptimizerSettings {
            tol_step: self.tol_step,
            tol_objective: self.tol_objective,
            max_iterations: self.max_iterations,
            max_evaluations: self.max_evaluations,
        }
    }
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 20.0)]
    lambda: f64,
    #[arg(long, default_value_t = 200.0)]
    cutoff: f64,
    #[command(flatten)]
    split: SplitArgs,
    #[command(flatten)]
    optimizer: OptimizerArgs,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Which hyperparameter to sweep: lambda or cutoff.
    #[arg(long)]
    axis: String,
    /// Comma-separated, strictly increasing axis values.
    #[arg(long, value_delimiter = ',', required = true)]
    values: Vec<f64>,
    /// Fixed regularization when sweeping the cutoff.
    #[arg(long, default_value_t = 20.0)]
    lambda: f64,
    /// Fixed cutoff when sweeping the regularization.
    #[arg(long, default_value_t = 200.0)]
    cutoff: f64,
    #[command(flatten)]
    split: SplitArgs,
    #[command(flatten)]
    optimizer: OptimizerArgs,
}

#[derive(Args)]
struct LearningCurveArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Comma-separated nonzero-weight sample counts to train on.
    #[arg(long, value_delimiter = ',', required = true)]
    sizes: Vec<usize>,
    #[arg(long, default_value_t = 20.0)]
    lambda: f64,
    #[arg(long, default_value_t = 200.0)]
    cutoff: f64,
    /// Seed for the shuffle that orders the training subsets.
    #[arg(long, default_value_t = 0)]
    subsample_seed: u64,
    #[command(flatten)]
    split: SplitArgs,
    #[command(flatten)]
    optimizer: OptimizerArgs,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    beta: PathBuf,
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 200.0)]
    cutoff: f64,
    /// Score every shot instead of only those below the cutoff.
    #[arg(long)]
    all_shots: bool,
    /// Dataset used to fit the single-weight baseline (default: the
    /// evaluation dataset itself).
    #[arg(long)]
    ratio_train: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate(args) => cmd_generate(args),
        Command::Train(args) => cmd_train(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::LearningCurve(args) => cmd_learning_curve(args),
        Command::Evaluate(args) => cmd_evaluate(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let category = err
                .downcast_ref::<fluorocal::Error>()
                .map(|e| e.category())
                .unwrap_or("invalid-config");
            eprintln!("error[{category}]: {err:#}");
            ExitCode::FAILURE
        }
    }
}

fn file_digest(path: &Path) -> anyhow::Result<String> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(io::digest_hex(&bytes))
}

fn cmd_generate(args: GenerateArgs) -> anyhow::Result<()> {
    let file = config::load(args.config.as_deref())?;
    let (gen_config, field_params) = config::resolve(&file, args.seed)?;
    gen_config.validate()?;

    let field = make_efficiency_field(
        &gen_config.grid,
        field_params.seed,
        field_params.amplitude,
        field_params.correlation_length,
    )?;
    let data = generate_dataset(&gen_config, &field)?;
    for warning in &data.warnings {
        eprintln!("warning: {warning}");
    }

    let digest = io::digest_hex(
        format!(
            "generate {:?} field seed={} amplitude={} correlation_length={}",
            gen_config, field_params.seed, field_params.amplitude, field_params.correlation_length
        )
        .as_bytes(),
    );
    let meta = OutputMeta {
        seed: gen_config.seed,
        config_digest: digest,
    };
    io::write_dataset(&args.out.join("dataset.csv"), &data.dataset, &meta)?;
    io::write_truths(&args.out.join("truth.csv"), &data.truths, &meta)?;
    io::write_field(&args.out.join("field.csv"), &field, &gen_config.grid, &meta)?;
    eprintln!(
        "generated {} shots ({} superpixels) into {}",
        data.dataset.len(),
        gen_config.grid.n(),
        args.out.display()
    );
    Ok(())
}

fn load_train_split(
    dataset_path: &Path,
    split_args: &SplitArgs,
) -> anyhow::Result<(Dataset, Dataset, Dataset, String)> {
    let (dataset, meta) = io::read_dataset(dataset_path)?;
    for warning in &meta.warnings {
        eprintln!("warning: {warning}");
    }
    let spec = split_args.spec(dataset.len());
    let (train_set, validation, test) = split(&dataset, &spec)?;
    let digest = file_digest(dataset_path)?;
    Ok((train_set, validation, test, digest))
}

fn write_keyed_report(
    path: &Path,
    kind: &str,
    meta: &OutputMeta,
    lines: &[String],
) -> anyhow::Result<()> {
    use std::io::Write;
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "# fluorocal {kind} v{}", io::FORMAT_VERSION)?;
    writeln!(w, "# seed: {}", meta.seed)?;
    writeln!(w, "# config_digest: {}", meta.config_digest)?;
    writeln!(w, "key,value")?;
    for line in lines {
        writeln!(w, "{line}")?;
    }
    w.flush()?;
    Ok(())
}

fn cmd_train(args: TrainArgs) -> anyhow::Result<()> {
    let (train_set, _validation, _test, data_digest) =
        load_train_split(&args.dataset, &args.split)?;
    if args.lambda == 0.0 {
        eprintln!(
            "warning: lambda = 0 disables the neighbor penalty; with fewer weighted shots than superpixels the fit is not unique"
        );
    }
    let hyper = Hyperparams::new(args.lambda, args.cutoff)?;
    let settings = args.optimizer.settings();
    let started = std::time::Instant::now();
    let (beta, report) = pipeline::train(&train_set, &hyper, &settings)?;
    let elapsed = started.elapsed();

    let meta = OutputMeta {
        seed: args.split.shuffle_seed.unwrap_or(0),
        config_digest: io::digest_hex(
            format!(
                "train data={data_digest} lambda={} cutoff={} train_count={} validation_count={} shuffle={:?} tolerances=({},{})",
                args.lambda,
                args.cutoff,
                train_set.len(),
                args.split.validation_count,
                args.split.shuffle_seed,
                args.optimizer.tol_step,
                args.optimizer.tol_objective,
            )
            .as_bytes(),
        ),
    };
    io::write_beta(&args.out.join("beta.csv"), &beta, &meta)?;

    let lines = [
        format!("m_c,{}", report.m_c),
        format!("jz_norm,{}", io::fmt_f64(report.jz_norm)),
        format!("final_cost,{}", io::fmt_f64(report.final_cost)),
        format!("iterations,{}", report.optimization.iterations),
        format!("evaluations,{}", report.optimization.evaluations),
        format!("termination,{}", report.optimization.termination.as_str()),
    ];
    write_keyed_report(&args.out.join("train_report.csv"), "train-report", &meta, &lines)?;
    eprintln!(
        "trained on {} weighted shots in {:.2?} ({} iterations, {})",
        report.m_c,
        elapsed,
        report.optimization.iterations,
        report.optimization.termination.as_str()
    );
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> anyhow::Result<()> {
    let (train_set, validation, _test, data_digest) =
        load_train_split(&args.dataset, &args.split)?;
    if validation.is_empty() {
        bail!("sweep needs a validation split (--validation-count)");
    }
    let settings = args.optimizer.settings();
    let (report, file_name) = match args.axis.as_str() {
        "lambda" => (
            pipeline::sweep_lambda(&train_set, &validation, args.cutoff, &args.values, &settings)?,
            "sweep_lambda.csv",
        ),
        "cutoff" => (
            pipeline::sweep_cutoff(&train_set, &validation, args.lambda, &args.values, &settings)?,
            "sweep_cutoff.csv",
        ),
        other => bail!("unknown sweep axis '{other}' (expected 'lambda' or 'cutoff')"),
    };
    let meta = OutputMeta {
        seed: args.split.shuffle_seed.unwrap_or(0),
        config_digest: io::digest_hex(
            format!(
                "sweep data={data_digest} axis={} values={:?} lambda={} cutoff={} shuffle={:?} validation={}",
                args.axis,
                args.values,
                args.lambda,
                args.cutoff,
                args.split.shuffle_seed,
                args.split.validation_count
            )
            .as_bytes(),
        ),
    };
    io::write_sweep(&args.out.join(file_name), &report, &meta)?;
    eprintln!("swept {} {} values", report.points.len(), args.axis);
    Ok(())
}

fn cmd_learning_curve(args: LearningCurveArgs) -> anyhow::Result<()> {
    let (train_set, validation, _test, data_digest) =
        load_train_split(&args.dataset, &args.split)?;
    if validation.is_empty() {
        bail!("learning-curve needs a validation split (--validation-count)");
    }
    let hyper = Hyperparams::new(args.lambda, args.cutoff)?;
    let settings = args.optimizer.settings();
    let report = pipeline::learning_curve(
        &train_set,
        &validation,
        &hyper,
        &args.sizes,
        args.subsample_seed,
        &settings,
    )?;
    let meta = OutputMeta {
        seed: args.subsample_seed,
        config_digest: io::digest_hex(
            format!(
                "learning-curve data={data_digest} sizes={:?} lambda={} cutoff={} shuffle={:?} validation={}",
                args.sizes,
                args.lambda,
                args.cutoff,
                args.split.shuffle_seed,
                args.split.validation_count
            )
            .as_bytes(),
        ),
    };
    io::write_sweep(&args.out.join("learning_curve.csv"), &report, &meta)?;
    eprintln!("traced {} learning-curve points", report.points.len());
    Ok(())
}

fn cmd_evaluate(args: EvaluateArgs) -> anyhow::Result<()> {
    let (beta, _) = io::read_beta(&args.beta)?;
    let (dataset, meta_in) = io::read_dataset(&args.dataset)?;
    for warning in &meta_in.warnings {
        eprintln!("warning: {warning}");
    }
    let hyper = Hyperparams::new(0.0, args.cutoff)?;
    let exclude = !args.all_shots;

    let ratio_train = match &args.ratio_train {
        Some(path) => io::read_dataset(path)?.0,
        None => dataset.clone(),
    };

    let supervised = evaluate(&beta, &dataset, exclude, &hyper)?;
    let uniform = baseline_uniform(&dataset, exclude, &hyper)?;
    let single = baseline_single_ratio(&ratio_train, &dataset, args.cutoff, exclude, &hyper)?;

    let rows = vec![
        ("no-correction".to_string(), uniform),
        ("mean-position".to_string(), single.metrics),
        ("supervised".to_string(), supervised),
    ];
    let meta = OutputMeta {
        seed: 0,
        config_digest: io::digest_hex(
            format!(
                "evaluate beta={} data={} cutoff={} all_shots={}",
                file_digest(&args.beta)?,
                file_digest(&args.dataset)?,
                args.cutoff,
                args.all_shots
            )
            .as_bytes(),
        ),
    };
    io::write_metrics_report(&args.out.join("metrics.csv"), &rows, &meta)?;
    for (label, m) in &rows {
        eprintln!(
            "{label}: delta_theta {:.1} urad over {} shots ({:.1} dB below projection noise)",
            m.delta_theta * 1e6,
            m.sample_count,
            m.db_below_qpn
        );
    }
    Ok(())
}
