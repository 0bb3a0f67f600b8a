//! Argument parsing and command dispatch for the `beltwear` binary.
//!
//! Exit codes: 0 success, 2 I/O or data failure, 3 segmentation quality gate,
//! 4 usage or configuration error. Every command writes a `run_manifest.json`
//! next to its outputs; the manifest's timestamp is the only field that may
//! differ between reruns with equal inputs.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use beltwear::dataset::{load_onsets, synthesize_corpus, Corpus, SynthConfig};
use beltwear::decomposition::fit_pca;
use beltwear::dsp::{FeatureMethod, SpectralConfig};
use beltwear::error::{Error, Result};
use beltwear::evaluation::{
    extract_feature_set, grid_csv, grid_search, run_table, run_task, specialized_csv,
    table_csv, task_feature_set, train_specialized, write_features_csv, write_report,
    GridOptions, RunOptions, Task,
};
use beltwear::models::{train_model, ModelKind, ModelParams};
use beltwear::segmentation::{
    segment_corpus, DetectorConfig, MarkerSource, SegmentKind, SegmentedCorpus,
};
use beltwear::util::write_atomic;

/// Sample rate every ingested corpus clip must have.
const SAMPLE_RATE: u32 = 44_100;
/// Reject fraction at or above which segmentation fails the quality gate.
const REJECT_LIMIT: f64 = 0.01;

#[derive(Parser)]
#[command(
    name = "beltwear",
    version,
    about = "Acoustic classification of abrasive belt wear: corpus synthesis, \
             event segmentation, spectral features, model training and reports"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the synthetic sanding corpus with ground-truth onsets.
    Synth(SynthArgs),
    /// Detect sanding events and cut analysis and state windows.
    Segment(SegmentArgs),
    /// Extract features from segmented windows into a CSV.
    Features(FeaturesArgs),
    /// Train one model on the training repetitions and save it.
    Train(TrainArgs),
    /// Train and evaluate one task, writing a report cell.
    Eval(EvalArgs),
    /// Sweep the spectral parameter grid for one feature method.
    Grid(GridArgs),
    /// Train one specialist per machine parameter configuration.
    Specialized(SpecializedArgs),
    /// Cross all five feature methods with all five model families.
    Table(TableArgs),
    /// Project analysis-window features onto principal components.
    Pca(PcaArgs),
}

#[derive(Args)]
struct FeatureArgs {
    /// Feature method: spectrogram, mel, mfcc, imfcc, lfcc.
    #[arg(long = "feature", default_value = "mel", value_parser = parse_method)]
    feature: FeatureMethod,
    /// Analysis window length in milliseconds.
    #[arg(long = "wl", default_value_t = 64)]
    window_ms: u32,
    /// Filterbank size.
    #[arg(long = "nb", default_value_t = 64)]
    filter_count: usize,
    /// Cepstral coefficient count.
    #[arg(long = "nc", default_value_t = 40)]
    coeff_count: usize,
}

impl FeatureArgs {
    fn config(&self) -> Result<SpectralConfig> {
        SpectralConfig::new(
            self.feature,
            self.window_ms,
            self.filter_count,
            self.coeff_count,
            SAMPLE_RATE,
        )
    }
}

#[derive(Args)]
struct SplitArgs {
    /// Repetitions held out for testing, comma separated.
    #[arg(long = "test-reps", default_value = "3", value_delimiter = ',')]
    test_reps: Vec<u8>,
    /// Append feed speed, grit size and material to every feature vector.
    #[arg(long = "augment-params")]
    augment_params: bool,
}

#[derive(Args)]
struct ModelArgs {
    /// Model family: tree, forest, knn, mlp, random.
    #[arg(long = "model", default_value = "tree", value_parser = parse_model)]
    model: ModelKind,
    /// Training epochs for the MLP family.
    #[arg(long = "mlp-epochs", default_value_t = 200)]
    mlp_epochs: usize,
}

impl ModelArgs {
    fn params(&self) -> ModelParams {
        ModelParams {
            mlp_epochs: self.mlp_epochs,
            ..ModelParams::default()
        }
    }
}

#[derive(Args)]
struct SynthArgs {
    /// Output corpus directory.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Length of each generated clip in seconds.
    #[arg(long = "clip-seconds", default_value_t = 6.0)]
    clip_seconds: f64,
}

#[derive(Args)]
struct SegmentArgs {
    /// Corpus directory containing manifest.csv and wavs/.
    #[arg(long)]
    data: PathBuf,
    /// Output directory for windows and marker files.
    #[arg(long)]
    out: PathBuf,
    /// Detection threshold in noise standard deviations.
    #[arg(long, default_value_t = 6.0)]
    k: f64,
    /// Consecutive above-threshold frames required for an onset.
    #[arg(long, default_value_t = 10)]
    sustain: usize,
    /// Marker source: run the detector or trust the onsets.csv sidecar.
    #[arg(long, value_enum, default_value_t = MarkerMode::Detect)]
    markers: MarkerMode,
    /// Event length assumed when cutting from truth markers.
    #[arg(long = "event-seconds", default_value_t = 3.3)]
    event_seconds: f64,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MarkerMode {
    Detect,
    Truth,
}

#[derive(Args)]
struct FeaturesArgs {
    /// Segmented corpus directory.
    #[arg(long)]
    data: PathBuf,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    feature: FeatureArgs,
    /// Window kinds to extract, comma separated: analysis, state, pre, post.
    #[arg(long, default_value = "analysis", value_delimiter = ',', value_parser = parse_segment)]
    segments: Vec<SegmentKind>,
}

#[derive(Args)]
struct TrainArgs {
    /// Segmented corpus directory.
    #[arg(long)]
    data: PathBuf,
    /// Task: wear, machine_state, feed_speed, grit_size, material.
    #[arg(long, default_value = "wear", value_parser = parse_task)]
    task: Task,
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    feature: FeatureArgs,
    #[command(flatten)]
    split: SplitArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output model file.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    /// Segmented corpus directory.
    #[arg(long)]
    data: PathBuf,
    /// Task: wear, machine_state, feed_speed, grit_size, material.
    #[arg(long, default_value = "wear", value_parser = parse_task)]
    task: Task,
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    feature: FeatureArgs,
    #[command(flatten)]
    split: SplitArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Report directory; the cell goes to {out}/{task}/{feature}_{model}/.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct GridArgs {
    /// Segmented corpus directory.
    #[arg(long)]
    data: PathBuf,
    /// Task: wear, machine_state, feed_speed, grit_size, material.
    #[arg(long, default_value = "wear", value_parser = parse_task)]
    task: Task,
    /// Feature method whose parameter grid to sweep.
    #[arg(long, value_parser = parse_method)]
    feature: FeatureMethod,
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    split: SplitArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory for grid.csv.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SpecializedArgs {
    /// Segmented corpus directory.
    #[arg(long)]
    data: PathBuf,
    /// Task: wear, machine_state, feed_speed, grit_size, material.
    #[arg(long, default_value = "wear", value_parser = parse_task)]
    task: Task,
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    feature: FeatureArgs,
    /// Repetitions held out for testing, comma separated.
    #[arg(long = "test-reps", default_value = "3", value_delimiter = ',')]
    test_reps: Vec<u8>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory for specialized.csv.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TableArgs {
    /// Segmented corpus directory.
    #[arg(long)]
    data: PathBuf,
    /// Task: wear, machine_state, feed_speed, grit_size, material.
    #[arg(long, default_value = "wear", value_parser = parse_task)]
    task: Task,
    /// Analysis window length in milliseconds.
    #[arg(long = "wl", default_value_t = 64)]
    window_ms: u32,
    /// Filterbank size.
    #[arg(long = "nb", default_value_t = 64)]
    filter_count: usize,
    /// Cepstral coefficient count.
    #[arg(long = "nc", default_value_t = 40)]
    coeff_count: usize,
    #[command(flatten)]
    split: SplitArgs,
    /// Training epochs for the MLP column.
    #[arg(long = "mlp-epochs", default_value_t = 200)]
    mlp_epochs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory for table.csv.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PcaArgs {
    /// Segmented corpus directory.
    #[arg(long)]
    data: PathBuf,
    #[command(flatten)]
    feature: FeatureArgs,
    /// Label written to the scatter color column.
    #[arg(long = "color-by", value_enum, default_value_t = ColorKey::Wear)]
    color_by: ColorKey,
    /// Standardize each feature column before fitting.
    #[arg(long)]
    standardize: bool,
    /// Output directory for scatter.csv and variance.csv.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ColorKey {
    Wear,
    Feed,
    Grit,
    Material,
}

impl ColorKey {
    fn name(self) -> &'static str {
        match self {
            ColorKey::Wear => "wear",
            ColorKey::Feed => "feed",
            ColorKey::Grit => "grit",
            ColorKey::Material => "material",
        }
    }
}

fn parse_method(s: &str) -> std::result::Result<FeatureMethod, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_model(s: &str) -> std::result::Result<ModelKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_task(s: &str) -> std::result::Result<Task, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_segment(s: &str) -> std::result::Result<SegmentKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Parse arguments, run the chosen command, translate errors to exit codes.
pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = if err.use_stderr() { 4 } else { 0 };
            let _ = err.print();
            return code;
        }
    };
    if let Err(err) = init_threads() {
        eprintln!("error: {err}");
        return 4;
    }
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("error: {err}");
            exit_code(&err)
        }
    }
}

fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) => 4,
        Error::SegmentationQuality { .. } => 3,
        _ => 2,
    }
}

/// Cap rayon's pool when BELTWEAR_THREADS is set.
fn init_threads() -> Result<()> {
    let value = match std::env::var("BELTWEAR_THREADS") {
        Ok(v) => v,
        Err(std::env::VarError::NotPresent) => return Ok(()),
        Err(e) => return Err(Error::Config(format!("BELTWEAR_THREADS: {e}"))),
    };
    let threads: usize = value
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| {
            Error::Config(format!(
                "BELTWEAR_THREADS must be a positive integer, got {value:?}"
            ))
        })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Error::Config(format!("thread pool setup failed: {e}")))
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Synth(args) => cmd_synth(args),
        Command::Segment(args) => cmd_segment(args),
        Command::Features(args) => cmd_features(args),
        Command::Train(args) => cmd_train(args),
        Command::Eval(args) => cmd_eval(args),
        Command::Grid(args) => cmd_grid(args),
        Command::Specialized(args) => cmd_specialized(args),
        Command::Table(args) => cmd_table(args),
        Command::Pca(args) => cmd_pca(args),
    }
}

#[derive(Serialize)]
struct RunManifest {
    command: String,
    version: String,
    seed: Option<u64>,
    inputs: Vec<String>,
    outputs: Vec<String>,
    config: serde_json::Value,
    timestamp_unix: u64,
}

fn write_run_manifest(
    path: &Path,
    command: &str,
    seed: Option<u64>,
    inputs: &[&Path],
    outputs: &[&Path],
    config: serde_json::Value,
) -> Result<()> {
    let timestamp_unix = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let manifest = RunManifest {
        command: command.into(),
        version: env!("CARGO_PKG_VERSION").into(),
        seed,
        inputs: inputs.iter().map(|p| p.display().to_string()).collect(),
        outputs: outputs.iter().map(|p| p.display().to_string()).collect(),
        config,
        timestamp_unix,
    };
    let mut text = serde_json::to_string_pretty(&manifest)
        .map_err(|e| Error::Config(format!("manifest serialization failed: {e}")))?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

/// Manifest path next to a file output: `features.csv` gets
/// `features.manifest.json`.
fn sibling_manifest(out: &Path) -> PathBuf {
    out.with_extension("manifest.json")
}

fn cmd_synth(args: SynthArgs) -> Result<()> {
    let config = SynthConfig {
        seed: args.seed,
        clip_seconds: args.clip_seconds,
        sample_rate: SAMPLE_RATE,
    };
    let summary = synthesize_corpus(&config, &args.out)?;
    write_run_manifest(
        &args.out.join("run_manifest.json"),
        "synth",
        Some(args.seed),
        &[],
        &[&args.out],
        serde_json::json!({
            "clip_seconds": args.clip_seconds,
            "sample_rate": SAMPLE_RATE,
        }),
    )?;
    println!(
        "wrote {} clips to {}",
        summary.records.len(),
        summary.dir.display()
    );
    Ok(())
}

fn cmd_segment(args: SegmentArgs) -> Result<()> {
    let corpus = Corpus::open(&args.data)?;
    let onsets;
    let source = match args.markers {
        MarkerMode::Detect => MarkerSource::Detect(DetectorConfig {
            threshold_sigmas: args.k,
            sustain_frames: args.sustain,
            ..DetectorConfig::default()
        }),
        MarkerMode::Truth => {
            onsets = load_onsets(&args.data.join("onsets.csv"))?;
            MarkerSource::Truth {
                onsets: &onsets,
                event_seconds: args.event_seconds,
            }
        }
    };
    let summary = segment_corpus(&corpus, &source, &args.out)?;
    write_run_manifest(
        &args.out.join("run_manifest.json"),
        "segment",
        None,
        &[&args.data],
        &[&args.out],
        serde_json::json!({
            "k": args.k,
            "sustain": args.sustain,
            "markers": match args.markers {
                MarkerMode::Detect => "detect",
                MarkerMode::Truth => "truth",
            },
            "event_seconds": args.event_seconds,
        }),
    )?;
    println!(
        "accepted {} clips, rejected {}",
        summary.markers.len(),
        summary.rejects.len()
    );
    if summary.reject_fraction() >= REJECT_LIMIT {
        return Err(Error::SegmentationQuality {
            rejected: summary.rejects.len(),
            total: summary.markers.len() + summary.rejects.len(),
            limit_percent: REJECT_LIMIT * 100.0,
        });
    }
    Ok(())
}

fn cmd_features(args: FeaturesArgs) -> Result<()> {
    let seg = SegmentedCorpus::open(&args.data)?;
    let config = args.feature.config()?;
    let set = extract_feature_set(&seg, &config, &args.segments)?;
    write_features_csv(&set, &args.out)?;
    write_run_manifest(
        &sibling_manifest(&args.out),
        "features",
        None,
        &[&args.data],
        &[&args.out],
        feature_json(&config),
    )?;
    println!("wrote {} feature rows to {}", set.len(), args.out.display());
    Ok(())
}

fn feature_json(config: &SpectralConfig) -> serde_json::Value {
    serde_json::json!({
        "feature": config.method.to_string(),
        "window_ms": config.window_ms,
        "filter_count": config.filter_count,
        "coeff_count": config.coeff_count,
    })
}

fn cmd_train(args: TrainArgs) -> Result<()> {
    let seg = SegmentedCorpus::open(&args.data)?;
    let config = args.feature.config()?;
    let features = task_feature_set(&seg, &config, args.task, args.seed)?;
    let (train, _test) = features.split_by_repetition(&args.split.test_reps)?;
    let train_set = train.to_labeled(args.task, args.split.augment_params)?;
    let model = train_model(args.model.model, &train_set, &args.model.params(), args.seed)?;
    model.save(&args.out)?;
    write_run_manifest(
        &sibling_manifest(&args.out),
        "train",
        Some(args.seed),
        &[&args.data],
        &[&args.out],
        serde_json::json!({
            "task": args.task.to_string(),
            "model": args.model.model.to_string(),
            "feature": feature_json(&config),
            "test_reps": args.split.test_reps,
            "augment_params": args.split.augment_params,
        }),
    )?;
    println!(
        "trained {} on {} rows, saved to {}",
        args.model.model,
        train.len(),
        args.out.display()
    );
    Ok(())
}

fn cmd_eval(args: EvalArgs) -> Result<()> {
    let seg = SegmentedCorpus::open(&args.data)?;
    let opts = RunOptions {
        task: args.task,
        model: args.model.model,
        config: args.feature.config()?,
        params: args.model.params(),
        test_repetitions: args.split.test_reps.clone(),
        augment_parameters: args.split.augment_params,
        seed: args.seed,
    };
    let report = run_task(&seg, &opts)?;
    let cell = write_report(&args.out, &report)?;
    write_run_manifest(
        &cell.join("run_manifest.json"),
        "eval",
        Some(args.seed),
        &[&args.data],
        &[&cell],
        serde_json::json!({
            "task": args.task.to_string(),
            "model": args.model.model.to_string(),
            "feature": feature_json(&opts.config),
            "test_reps": args.split.test_reps,
            "augment_params": args.split.augment_params,
        }),
    )?;
    println!(
        "task={} feature={} model={} accuracy={}",
        report.task, report.method, report.model_kind, report.accuracy
    );
    Ok(())
}

fn cmd_grid(args: GridArgs) -> Result<()> {
    let seg = SegmentedCorpus::open(&args.data)?;
    let opts = GridOptions {
        task: args.task,
        model: args.model.model,
        params: args.model.params(),
        test_repetitions: args.split.test_reps.clone(),
        augment_parameters: args.split.augment_params,
        seed: args.seed,
        sample_rate: SAMPLE_RATE,
    };
    let entries = grid_search(&seg, args.feature, &opts)?;
    let csv_path = args.out.join("grid.csv");
    write_atomic(&csv_path, grid_csv(&entries).as_bytes())?;
    write_run_manifest(
        &args.out.join("run_manifest.json"),
        "grid",
        Some(args.seed),
        &[&args.data],
        &[&csv_path],
        serde_json::json!({
            "task": args.task.to_string(),
            "feature": args.feature.to_string(),
            "model": args.model.model.to_string(),
            "test_reps": args.split.test_reps,
            "augment_params": args.split.augment_params,
        }),
    )?;
    let best = &entries[0];
    match best.coeff_count {
        Some(n_c) => println!(
            "best accuracy {} at w_l={} n_b={} n_c={}",
            best.accuracy, best.window_ms, best.filter_count, n_c
        ),
        None => println!(
            "best accuracy {} at w_l={} n_b={}",
            best.accuracy, best.window_ms, best.filter_count
        ),
    }
    Ok(())
}

fn cmd_specialized(args: SpecializedArgs) -> Result<()> {
    let seg = SegmentedCorpus::open(&args.data)?;
    let config = args.feature.config()?;
    let features = task_feature_set(&seg, &config, args.task, args.seed)?;
    let result = train_specialized(
        &features,
        args.task,
        args.model.model,
        &args.model.params(),
        &args.test_reps,
        args.seed,
    )?;
    let csv_path = args.out.join("specialized.csv");
    write_atomic(&csv_path, specialized_csv(&result).as_bytes())?;
    let mean_path = args.out.join("mean_accuracy.txt");
    write_atomic(&mean_path, format!("{}\n", result.mean_accuracy).as_bytes())?;
    write_run_manifest(
        &args.out.join("run_manifest.json"),
        "specialized",
        Some(args.seed),
        &[&args.data],
        &[&csv_path, &mean_path],
        serde_json::json!({
            "task": args.task.to_string(),
            "model": args.model.model.to_string(),
            "feature": feature_json(&config),
            "test_reps": args.test_reps,
        }),
    )?;
    println!("mean specialist accuracy {}", result.mean_accuracy);
    Ok(())
}

fn cmd_table(args: TableArgs) -> Result<()> {
    let seg = SegmentedCorpus::open(&args.data)?;
    // The method here is a placeholder; run_table swaps in every method.
    let config = SpectralConfig::new(
        FeatureMethod::MelSpectrogram,
        args.window_ms,
        args.filter_count,
        args.coeff_count,
        SAMPLE_RATE,
    )?;
    let base = RunOptions {
        task: args.task,
        model: ModelKind::Tree,
        config,
        params: ModelParams {
            mlp_epochs: args.mlp_epochs,
            ..ModelParams::default()
        },
        test_repetitions: args.split.test_reps.clone(),
        augment_parameters: args.split.augment_params,
        seed: args.seed,
    };
    let cells = run_table(&seg, &base)?;
    let csv = table_csv(&cells);
    let csv_path = args.out.join("table.csv");
    write_atomic(&csv_path, csv.as_bytes())?;
    write_run_manifest(
        &args.out.join("run_manifest.json"),
        "table",
        Some(args.seed),
        &[&args.data],
        &[&csv_path],
        serde_json::json!({
            "task": args.task.to_string(),
            "window_ms": args.window_ms,
            "filter_count": args.filter_count,
            "coeff_count": args.coeff_count,
            "test_reps": args.split.test_reps,
            "augment_params": args.split.augment_params,
            "mlp_epochs": args.mlp_epochs,
        }),
    )?;
    print!("{csv}");
    Ok(())
}

fn cmd_pca(args: PcaArgs) -> Result<()> {
    let seg = SegmentedCorpus::open(&args.data)?;
    let config = args.feature.config()?;
    let set = extract_feature_set(&seg, &config, &[SegmentKind::Analysis])?;
    let mut rows: Vec<Vec<f64>> = set.rows.iter().map(|r| r.values.clone()).collect();
    if args.standardize {
        standardize_columns(&mut rows);
    }
    let model = fit_pca(&rows, 2)?;
    let scores = model.transform(&rows)?;
    let mut scatter = format!("clip_path,pc1,pc2,{}\n", args.color_by.name());
    for (row, score) in set.rows.iter().zip(&scores) {
        let label = match args.color_by {
            ColorKey::Wear => row.meta.wear_level.to_string(),
            ColorKey::Feed => row.meta.feed_speed.to_string(),
            ColorKey::Grit => row.meta.grit_size.to_string(),
            ColorKey::Material => row.meta.material.to_string(),
        };
        scatter.push_str(&format!(
            "{},{},{},{}\n",
            row.meta.clip_path, score[0], score[1], label
        ));
    }
    let scatter_path = args.out.join("scatter.csv");
    write_atomic(&scatter_path, scatter.as_bytes())?;
    let ratios = &model.explained_variance_ratio;
    let variance = format!("component,ratio\n1,{}\n2,{}\n", ratios[0], ratios[1]);
    let variance_path = args.out.join("variance.csv");
    write_atomic(&variance_path, variance.as_bytes())?;
    write_run_manifest(
        &args.out.join("run_manifest.json"),
        "pca",
        None,
        &[&args.data],
        &[&scatter_path, &variance_path],
        serde_json::json!({
            "feature": feature_json(&config),
            "color_by": args.color_by.name(),
            "standardize": args.standardize,
        }),
    )?;
    println!("explained variance: pc1={} pc2={}", ratios[0], ratios[1]);
    Ok(())
}

/// Z-score each column in place; constant columns are left centered only.
fn standardize_columns(rows: &mut [Vec<f64>]) {
    if rows.is_empty() {
        return;
    }
    let n = rows.len() as f64;
    let dim = rows[0].len();
    for j in 0..dim {
        let mean = rows.iter().map(|r| r[j]).sum::<f64>() / n;
        let var = rows.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / n;
        let std = if var > 0.0 { var.sqrt() } else { 1.0 };
        for row in rows.iter_mut() {
            row[j] = (row[j] - mean) / std;
        }
    }
}
