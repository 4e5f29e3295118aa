//! Command-line front end. The binary only forwards to [`dispatch`].
//!
//! Exit statuses:
//!
//! | status | meaning |
//! |-------:|---------|
//! | 0 | success |
//! | 1 | `oracle-check` found a failing property |
//! | 2 | usage error (unknown flag, bad value) |
//! | 3 | invalid argument, domain or index error |
//! | 4 | I/O error |
//! | 5 | corrupt file, version mismatch or schema error |
//! | 6 | model divergence |
//! | 7 | excessive rejection in the forward simulation |
//! | 8 | degenerate variance or zero displacement |
//! | 9 | reconstruction failure |

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::backward::reconstruct;
use crate::checks::oracle_suite;
use crate::eval::{
    relative_mae, run_trial, sweep, ExperimentConfig, StopRule, StopTarget, INIT_SEED_OFFSET, SHUFFLE_SEED_OFFSET,
};
use crate::forward::{generate_batch, split_batch, RngSpec, TimeGrid};
use crate::io::{
    read_dataset, read_predictions, read_results, write_dataset, write_metrics, write_predictions, write_results,
    MetricsRow, ResultRow, RunManifest,
};
use crate::plot::{emit_svg, emit_trajectory_svg};
use crate::score::{
    build_training_pairs, read_checkpoint, train, write_checkpoint, Activation, Architecture, NormStats, ScoreModel,
    TrainConfig,
};
use crate::{Component, Error, FlowKind, Result, State, StrainConfig};

pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Maps an error to its documented exit status.
pub fn exit_status(e: &Error) -> i32 {
    match e {
        Error::Domain(_) | Error::InvalidArgument(_) | Error::IndexOutOfRange { .. } => 3,
        Error::Io(_) => 4,
        Error::Corruption { .. } | Error::VersionMismatch { .. } | Error::Schema(_) | Error::Json(_) | Error::Csv(_) => 5,
        Error::ModelDivergence(_) => 6,
        Error::ExcessiveRejection { .. } => 7,
        Error::DegenerateVariance(_) | Error::DegenerateDenominator { .. } => 8,
        Error::Reconstruction { .. } => 9,
        Error::Trial { source, .. } => exit_status(source),
    }
}

#[derive(Parser, Debug)]
#[command(name = "vortex-score", version, about = "Score-based backward reconstruction in Burgers strain fields")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate a trajectory dataset.
    Generate(GenerateArgs),
    /// Fit the score network to a dataset and write a checkpoint.
    Train(TrainArgs),
    /// Integrate a checkpoint backwards from dataset terminals.
    Reconstruct(ReconstructArgs),
    /// Relative MAE of predictions against a dataset.
    Evaluate(EvaluateArgs),
    /// One end-to-end trial for a single seed.
    Trial(Box<TrialArgs>),
    /// Repeated trials over a list of scales until the stopping rule holds.
    Sweep(Box<SweepArgs>),
    /// Run the analytic-oracle property suite.
    OracleCheck(OracleCheckArgs),
    /// Render a results table (and optionally trajectories) as SVG.
    Plot(PlotArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum KindArg {
    #[value(name = "axisymmetric3d", alias = "3d")]
    Axisymmetric3D,
    #[value(name = "planar2d", alias = "2d")]
    Planar2D,
}

impl From<KindArg> for FlowKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Axisymmetric3D => FlowKind::Axisymmetric3D,
            KindArg::Planar2D => FlowKind::Planar2D,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ActivationArg {
    Silu,
    Tanh,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum StopArg {
    Both,
    Either,
    R,
    Z,
}

impl From<StopArg> for StopTarget {
    fn from(s: StopArg) -> Self {
        match s {
            StopArg::Both => StopTarget::Both,
            StopArg::Either => StopTarget::Either,
            StopArg::R => StopTarget::ROnly,
            StopArg::Z => StopTarget::ZOnly,
        }
    }
}

#[derive(Args, Debug, Clone)]
struct FlowArgs {
    #[arg(long, value_enum, default_value = "axisymmetric3d")]
    kind: KindArg,
    /// Strain rate.
    #[arg(long, default_value_t = 1.0)]
    a: f64,
    /// Final time.
    #[arg(long = "t-end", default_value_t = 2.0)]
    t_end: f64,
    /// Number of time points including both ends.
    #[arg(long, default_value_t = 200)]
    points: usize,
    /// Trajectories per dataset.
    #[arg(long, default_value_t = 10_000)]
    samples: usize,
}

#[derive(Args, Debug, Clone)]
struct TrainingArgs {
    #[arg(long = "train-fraction", default_value_t = 0.8)]
    train_fraction: f64,
    #[arg(long, default_value_t = 200)]
    epochs: usize,
    #[arg(long, default_value_t = 20)]
    patience: usize,
    #[arg(long = "batch-size", default_value_t = 1024)]
    batch_size: usize,
    #[arg(long, default_value_t = 1e-3)]
    lr: f64,
    #[arg(long = "state-width", default_value_t = 64)]
    state_width: usize,
    #[arg(long = "embed-dim", default_value_t = 32)]
    embed_dim: usize,
    #[arg(long = "hidden-width", default_value_t = 128)]
    hidden_width: usize,
    #[arg(long = "hidden-layers", default_value_t = 3)]
    hidden_layers: usize,
    #[arg(long, value_enum, default_value = "silu")]
    activation: ActivationArg,
}

impl TrainingArgs {
    fn architecture(&self) -> Architecture {
        Architecture {
            state_width: self.state_width,
            embed_dim: self.embed_dim,
            hidden_width: self.hidden_width,
            hidden_layers: self.hidden_layers,
        }
    }

    fn activation(&self) -> Activation {
        match self.activation {
            ActivationArg::Silu => Activation::Silu,
            ActivationArg::Tanh => Activation::Tanh,
        }
    }

    fn train_config(&self, seed: u64) -> TrainConfig {
        let mut cfg = TrainConfig {
            batch_size: self.batch_size,
            max_epochs: self.epochs,
            patience: self.patience,
            seed,
            ..TrainConfig::default()
        };
        cfg.adam.learning_rate = self.lr;
        cfg
    }
}

fn experiment(flow: &FlowArgs, training: &TrainingArgs, nu: f64) -> Result<ExperimentConfig> {
    Ok(ExperimentConfig {
        strain: StrainConfig::new(flow.kind.into(), flow.a, nu)?,
        grid: TimeGrid::new(flow.t_end, flow.points)?,
        samples: flow.samples,
        train_fraction: training.train_fraction,
        architecture: training.architecture(),
        activation: training.activation(),
        train: training.train_config(0),
    })
}

#[derive(Args, Debug)]
struct GenerateArgs {
    #[command(flatten)]
    flow: FlowArgs,
    #[arg(long, default_value_t = 1.0)]
    nu: f64,
    /// Scale of the initial point `(e^{2aT} s, s)`.
    #[arg(long, default_value_t = 1.0)]
    s: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Payload path; the sidecar goes next to it.
    #[arg(long, short, default_value = "dataset.bin")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct TrainArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[command(flatten)]
    training: TrainingArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, short, default_value = "checkpoint.json")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct ReconstructArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    dataset: PathBuf,
    /// Terminals come from the trajectories after this fraction.
    #[arg(long = "train-fraction", default_value_t = 0.8)]
    train_fraction: f64,
    /// Reconstruct every trajectory in the dataset.
    #[arg(long)]
    all: bool,
    #[arg(long, short, default_value = "predictions.csv")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    #[arg(long)]
    predictions: PathBuf,
    #[arg(long)]
    dataset: PathBuf,
    /// Metrics CSV; printed to stdout when omitted.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct TrialArgs {
    /// Replay a manifest; the other experiment flags are ignored.
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[command(flatten)]
    flow: FlowArgs,
    #[command(flatten)]
    training: TrainingArgs,
    #[arg(long, default_value_t = 1.0)]
    nu: f64,
    #[arg(long, default_value_t = 1.0)]
    s: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the manifest describing this trial.
    #[arg(long = "write-manifest")]
    write_manifest: Option<PathBuf>,
    /// Metrics CSV; printed to stdout when omitted.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    /// Replay a manifest; the other experiment flags are ignored.
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[command(flatten)]
    flow: FlowArgs,
    #[command(flatten)]
    training: TrainingArgs,
    /// Viscosities, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = [1.0, 0.01])]
    nu: Vec<f64>,
    /// Scales as `lo..hi` (inclusive, unit steps) or a comma separated list.
    #[arg(long, default_value = "1..12", value_parser = parse_scales)]
    s: ScaleList,
    #[arg(long = "base-seed", default_value_t = 0)]
    base_seed: u64,
    #[arg(long = "target-rel-se", default_value_t = 0.06)]
    target_rel_se: f64,
    #[arg(long = "max-trials", default_value_t = 80)]
    max_trials: usize,
    /// Which components must meet the target before stopping.
    #[arg(long = "stop-on", value_enum, default_value = "both")]
    stop_on: StopArg,
    /// Write one manifest per viscosity, suffixed with the viscosity.
    #[arg(long = "write-manifest")]
    write_manifest: Option<PathBuf>,
    #[arg(long, short, default_value = "results.csv")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct OracleCheckArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug)]
struct PlotArgs {
    /// Results CSV produced by `sweep`.
    results: PathBuf,
    /// Defaults to the results path with an `.svg` extension.
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Also draw example trajectories from this dataset.
    #[arg(long)]
    trajectories: Option<PathBuf>,
    /// Reconstructed initial positions to overlay on the trajectories.
    #[arg(long, requires = "trajectories")]
    predictions: Option<PathBuf>,
    #[arg(long, default_value_t = 20)]
    count: usize,
    /// Defaults to `<out stem>-trajectories.svg`.
    #[arg(long = "trajectory-out", requires = "trajectories")]
    trajectory_out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScaleList(pub Vec<f64>);

/// Parses `lo..hi` (inclusive, unit steps) or `a,b,c`.
pub fn parse_scales(text: &str) -> std::result::Result<ScaleList, String> {
    let values: Vec<f64> = if let Some((lo, hi)) = text.split_once("..") {
        let lo: f64 = lo.trim().parse().map_err(|_| format!("bad range start in {text:?}"))?;
        let hi: f64 = hi.trim().parse().map_err(|_| format!("bad range end in {text:?}"))?;
        if !(lo <= hi) {
            return Err(format!("empty range {text:?}"));
        }
        let n = (hi - lo).floor() as usize;
        (0..=n).map(|i| lo + i as f64).collect()
    } else {
        text.split(',')
            .map(|v| v.trim().parse::<f64>().map_err(|_| format!("bad scale {v:?}")))
            .collect::<std::result::Result<_, _>>()?
    };
    if values.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
        return Err(format!("scales must be positive: {text:?}"));
    }
    Ok(ScaleList(values))
}

/// Parses `argv` (program name first), runs the command and returns the exit
/// status. Errors are reported on stderr.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { 0 };
        }
    };
    match run(cli.command) {
        Ok(status) => status,
        Err(e) => {
            eprintln!("error: {e}");
            exit_status(&e)
        }
    }
}

fn run(command: Command) -> Result<i32> {
    match command {
        Command::Generate(args) => generate(args),
        Command::Train(args) => train_cmd(args),
        Command::Reconstruct(args) => reconstruct_cmd(args),
        Command::Evaluate(args) => evaluate(args),
        Command::Trial(args) => trial(*args),
        Command::Sweep(args) => sweep_cmd(*args),
        Command::OracleCheck(args) => return oracle_check(args),
        Command::Plot(args) => plot(args),
    }?;
    Ok(0)
}

fn csv_sink(out: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn generate(args: GenerateArgs) -> Result<()> {
    let cfg = StrainConfig::new(args.flow.kind.into(), args.flow.a, args.nu)?;
    let grid = TimeGrid::new(args.flow.t_end, args.flow.points)?;
    let batch = generate_batch(&cfg, &grid, args.s, args.flow.samples, RngSpec::new(args.seed))?;
    let hash = write_dataset(&args.out, &batch)?;
    eprintln!(
        "wrote {} trajectories ({} attempts) to {} [sha256 {hash}]",
        batch.len(),
        batch.attempts,
        args.out.display()
    );
    Ok(())
}

fn train_cmd(args: TrainArgs) -> Result<()> {
    let (batch, hash) = read_dataset(&args.dataset)?;
    let (train_set, val_set) = split_batch(&batch, args.training.train_fraction)?;
    let train_pairs = build_training_pairs(&train_set)?;
    let val_pairs = build_training_pairs(&val_set)?;
    let norm = NormStats::from_pairs(&train_pairs)?;
    let init = ScoreModel::init(
        args.training.architecture(),
        args.training.activation(),
        norm,
        batch.grid,
        args.seed.wrapping_add(INIT_SEED_OFFSET),
    )?;
    let cfg = args.training.train_config(args.seed.wrapping_add(SHUFFLE_SEED_OFFSET));
    let (model, report) = train(&train_pairs, &val_pairs, &cfg, init)?;
    write_checkpoint(&args.out, &model, Some(hash))?;
    eprintln!(
        "trained {} epochs, best epoch {:?}, validation loss {:?}; checkpoint {}",
        report.epochs_run(),
        report.best_epoch,
        report.best_val_loss(),
        args.out.display()
    );
    Ok(())
}

fn reconstruct_cmd(args: ReconstructArgs) -> Result<()> {
    let (batch, hash) = read_dataset(&args.dataset)?;
    let checkpoint = read_checkpoint(&args.checkpoint)?;
    if let Some(trained_on) = &checkpoint.dataset_hash {
        if *trained_on != hash {
            eprintln!("warning: checkpoint was trained on a different dataset");
        }
    }
    let model = checkpoint.into_model()?;
    let first = if args.all {
        0
    } else {
        split_batch(&batch, args.train_fraction)?.0.len()
    };
    let terminals: Vec<State> = batch.trajectories[first..].iter().map(|t| t.terminal()).collect();
    let recon = reconstruct(&model, &terminals)?;
    let indices: Vec<usize> = recon.source_indices.iter().map(|i| i + first).collect();
    write_predictions(BufWriter::new(File::create(&args.out)?), &indices, &recon.predicted_x0)?;
    if recon.radial_excursions > 0 {
        eprintln!("{} reconstructions crossed r <= 0", recon.radial_excursions);
    }
    Ok(())
}

fn evaluate(args: EvaluateArgs) -> Result<()> {
    let (batch, _) = read_dataset(&args.dataset)?;
    let rows = read_predictions(BufReader::new(File::open(&args.predictions)?))?;
    if rows.is_empty() {
        return Err(Error::Schema("prediction table has no rows".into()));
    }
    let mut trajectories = Vec::with_capacity(rows.len());
    for row in &rows {
        let t = batch.trajectories.get(row.index).ok_or(Error::IndexOutOfRange {
            index: row.index,
            max: batch.len().saturating_sub(1),
        })?;
        trajectories.push(t.clone());
    }
    let predicted: Vec<State> = rows.iter().map(|r| State::new(r.r0, r.z0)).collect();
    let x0 = batch.initial_state();
    let mut metrics = Vec::new();
    for component in Component::BOTH {
        metrics.push(MetricsRow {
            flow_kind: batch.cfg.kind().as_str().to_string(),
            nu: batch.cfg.nu(),
            s: batch.scale_s,
            seed: batch.seed,
            component: component.as_str().to_string(),
            rel_mae: relative_mae(x0, &predicted, &trajectories, component)?,
        });
    }
    write_metrics(csv_sink(args.out.as_deref())?, &metrics)
}

fn trial(args: TrialArgs) -> Result<()> {
    let manifest = match &args.manifest {
        Some(path) => RunManifest::read(path)?,
        None => RunManifest::new(
            experiment(&args.flow, &args.training, args.nu)?,
            vec![args.s],
            args.seed,
            StopRule::default(),
        ),
    };
    if let Some(path) = &args.write_manifest {
        manifest.write(path)?;
    }
    let s = manifest.s_values[0];
    let out = run_trial(s, &manifest.experiment, manifest.base_seed)?;
    eprintln!(
        "s={s} seed={}: R {:.6}, Z {:.6} ({} epochs, {:.1}s)",
        manifest.base_seed,
        out.r.rel_mae,
        out.z.rel_mae,
        out.report.epochs_run(),
        out.r.runtime_secs
    );
    write_metrics(csv_sink(args.out.as_deref())?, &[(&out.r).into(), (&out.z).into()])
}

fn sweep_cmd(args: SweepArgs) -> Result<()> {
    let manifests = match &args.manifest {
        Some(path) => vec![RunManifest::read(path)?],
        None => {
            let stop = StopRule {
                target_rel_se: args.target_rel_se,
                max_trials: args.max_trials,
                target: args.stop_on.into(),
            };
            args.nu
                .iter()
                .map(|&nu| {
                    Ok(RunManifest::new(
                        experiment(&args.flow, &args.training, nu)?,
                        args.s.0.clone(),
                        args.base_seed,
                        stop,
                    ))
                })
                .collect::<Result<Vec<_>>>()?
        }
    };
    let mut rows: Vec<ResultRow> = Vec::new();
    for m in &manifests {
        if let Some(base) = &args.write_manifest {
            let mut name = base.file_stem().unwrap_or_default().to_os_string();
            name.push(format!("-nu{}.json", m.experiment.strain.nu()));
            m.write(&base.with_file_name(name))?;
        }
        let result = sweep(&m.s_values, &m.experiment, &m.stop, m.base_seed)?;
        for row in &result.rows {
            if let Err(e) = &row.outcome {
                eprintln!("nu={} s={}: {e}", result.nu, row.s);
            }
        }
        rows.extend(result.statistics().iter().map(ResultRow::from));
    }
    write_results(BufWriter::new(File::create(&args.out)?), &rows)?;
    eprintln!("wrote {} rows to {}", rows.len(), args.out.display());
    Ok(())
}

fn oracle_check(args: OracleCheckArgs) -> Result<i32> {
    let outcomes = oracle_suite(args.seed)?;
    let mut failed = 0;
    for o in &outcomes {
        println!("{} {}: {}", if o.passed { "PASS" } else { "FAIL" }, o.name, o.detail);
        failed += usize::from(!o.passed);
    }
    Ok(if failed == 0 { 0 } else { EXIT_CHECK_FAILED })
}

fn plot(args: PlotArgs) -> Result<()> {
    let rows = read_results(BufReader::new(File::open(&args.results)?))?;
    let out = args.out.clone().unwrap_or_else(|| args.results.with_extension("svg"));
    fs::write(&out, emit_svg(&rows)?)?;
    if let Some(dataset) = &args.trajectories {
        let (batch, _) = read_dataset(dataset)?;
        let svg = match &args.predictions {
            Some(p) => {
                // Draw the trajectories that have a prediction, in index order.
                let mut rows = read_predictions(BufReader::new(File::open(p)?))?;
                rows.sort_by_key(|r| r.index);
                rows.truncate(args.count);
                let mut shown = batch.clone();
                shown.trajectories = Vec::with_capacity(rows.len());
                for r in &rows {
                    shown.trajectories.push(batch.trajectories.get(r.index).cloned().ok_or(Error::IndexOutOfRange {
                        index: r.index,
                        max: batch.len().saturating_sub(1),
                    })?);
                }
                let predicted: Vec<State> = rows.iter().map(|r| State::new(r.r0, r.z0)).collect();
                emit_trajectory_svg(&shown, args.count, Some(&predicted))?
            }
            None => emit_trajectory_svg(&batch, args.count, None)?,
        };
        let target = args.trajectory_out.clone().unwrap_or_else(|| {
            let mut name = out.file_stem().unwrap_or_default().to_os_string();
            name.push("-trajectories.svg");
            out.with_file_name(name)
        });
        fs::write(target, svg)?;
    }
    Ok(())
}
