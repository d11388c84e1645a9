//! `hpcbench`: synthesize traces, rank counters, train and evaluate models,
//! and run the full benchmark grid.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use hpc_detect::bench::{self, emit_report, run_grid, BenchConfig, ReportFormat};
use hpc_detect::feature_rank::DEFAULT_BIN_COUNT;
use hpc_detect::io::{self, DEFAULT_LABEL_COLUMN};
use hpc_detect::metrics::{evaluate, multiclass_roc};
use hpc_detect::{
    rank_features, select_top_k, stratified_split, synth, ClassLabel, DiscretizationScheme, Error,
    GeneratorSpec, LearnerKind, TaskMode, TraceDataset, TrainedModel,
};

#[derive(Parser)]
#[command(name = "hpcbench", version, about = "Malware detection from hardware performance counter traces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a synthetic trace dataset.
    Synth(SynthArgs),
    /// Split a dataset into stratified train and test files.
    Split(SplitArgs),
    /// Rank features by information gain.
    Rank(RankArgs),
    /// Train one model and serialize it.
    Train(TrainArgs),
    /// Evaluate a serialized model on a test file.
    Eval(EvalArgs),
    /// Run the full learner x feature-count x task grid.
    Bench(BenchArgs),
}

#[derive(Args)]
struct DataArgs {
    /// CSV or ARFF dataset.
    #[arg(long)]
    data: PathBuf,
    /// Label column for CSV input.
    #[arg(long, default_value = DEFAULT_LABEL_COLUMN)]
    label_column: String,
}

impl DataArgs {
    fn load(&self) -> hpc_detect::Result<TraceDataset> {
        if is_arff(&self.data) {
            io::load_arff(&self.data)
        } else {
            io::load_csv(&self.data, &self.label_column)
        }
    }
}

#[derive(Args)]
struct SynthArgs {
    /// Generator spec (TOML); the bundled profiles when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    n_per_class: Option<usize>,
    #[arg(long)]
    separability: Option<f64>,
    /// Collapse malware kinds into a single malware label.
    #[arg(long, value_parser = parse_mode)]
    mode: Option<TaskMode>,
    /// Output file; `.arff` selects ARFF, anything else CSV.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SplitArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, default_value_t = 2020)]
    seed: u64,
    #[arg(long, default_value_t = 0.7)]
    train_fraction: f64,
    /// Directory receiving train.csv and test.csv.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RankArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, value_parser = parse_mode)]
    mode: Option<TaskMode>,
    #[arg(long, default_value_t = DEFAULT_BIN_COUNT)]
    bins: usize,
    /// Output CSV; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, value_parser = parse_learner)]
    learner: LearnerKind,
    /// Keep the top k features by information gain on this data.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, value_parser = parse_mode)]
    mode: Option<TaskMode>,
    /// Bench config whose hyperparameters and seed are used.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Model file.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    model: PathBuf,
    /// Directory for confusion matrix, ROC points and a JSON summary.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Bench config (TOML); the default grid when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Replaces the data source with this file.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long, value_parser = parse_format, default_value = "csv")]
    format: ReportFormat,
    #[arg(long)]
    out: PathBuf,
}

fn parse_mode(s: &str) -> Result<TaskMode, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_learner(s: &str) -> Result<LearnerKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_format(s: &str) -> Result<ReportFormat, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn is_arff(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("arff"))
}

fn in_mode(data: TraceDataset, mode: Option<TaskMode>) -> anyhow::Result<TraceDataset> {
    match mode {
        Some(TaskMode::Binary) => Ok(data.to_binary_view()),
        Some(TaskMode::Multiclass) if data.task_mode() == TaskMode::Binary => {
            bail!("multiclass mode needs malware kind labels")
        }
        _ => Ok(data),
    }
}

fn write_file(path: &Path, contents: &str) -> anyhow::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn cmd_synth(args: SynthArgs) -> anyhow::Result<i32> {
    let mut spec = match &args.config {
        Some(p) => GeneratorSpec::load(p)?,
        None => GeneratorSpec::default(),
    };
    if let Some(s) = args.seed {
        spec.seed = s;
    }
    if let Some(n) = args.n_per_class {
        spec.n_per_class = n;
    }
    if let Some(s) = args.separability {
        spec.separability = s;
    }
    spec.validate()?;
    let data = in_mode(synth::generate(&spec)?, args.mode)?;
    io::save_any(&data, &args.out)?;
    eprintln!("wrote {} rows to {}", data.n_rows(), args.out.display());
    Ok(bench::exit::SUCCESS)
}

fn cmd_split(args: SplitArgs) -> anyhow::Result<i32> {
    let data = args.data.load()?;
    let split = stratified_split(&data, args.train_fraction, args.seed)?;
    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    io::save_any(&split.train, args.out.join("train.csv"))?;
    io::save_any(&split.test, args.out.join("test.csv"))?;
    eprintln!("train {} rows, test {} rows", split.train.n_rows(), split.test.n_rows());
    Ok(bench::exit::SUCCESS)
}

fn cmd_rank(args: RankArgs) -> anyhow::Result<i32> {
    let data = in_mode(args.data.load()?, args.mode)?;
    let scheme = DiscretizationScheme::equal_frequency(&data, args.bins)?;
    let csv = rank_features(&data, &scheme)?.to_csv();
    match &args.out {
        Some(p) => write_file(p, &csv)?,
        None => print!("{csv}"),
    }
    Ok(bench::exit::SUCCESS)
}

fn cmd_train(args: TrainArgs) -> anyhow::Result<i32> {
    let config = match &args.config {
        Some(p) => BenchConfig::load(p)?,
        None => BenchConfig::default(),
    };
    let seed = args.seed.unwrap_or(config.seed);
    let mut data = in_mode(args.data.load()?, args.mode)?;
    if let Some(k) = args.k {
        let scheme = DiscretizationScheme::equal_frequency(&data, config.rank_bins)?;
        let ranking = rank_features(&data, &scheme)?;
        data = select_top_k(&data, &ranking, k)?;
    }
    let model = hpc_detect::train(args.learner, &config.hyperparameters, &data, seed)?;
    write_file(&args.out, &model.to_text())?;
    eprintln!(
        "trained {} on {} rows x {} features; training accuracy {:.6}",
        args.learner,
        data.n_rows(),
        data.n_features(),
        model.accuracy(&data)?
    );
    Ok(bench::exit::SUCCESS)
}

fn cmd_eval(args: EvalArgs) -> anyhow::Result<i32> {
    let text = fs::read_to_string(&args.model).with_context(|| format!("reading {}", args.model.display()))?;
    let model = TrainedModel::from_text(&text)?;
    let mut test = args.data.load()?.project(&model.feature_names)?;
    if model.class_list.contains(&ClassLabel::Malware) {
        test = test.to_binary_view();
    }
    let cm = evaluate(&model, &test)?;
    let roc = multiclass_roc(&model, &test)?;
    println!("model      {}", model.kind());
    println!("rows       {}", cm.total());
    println!("accuracy   {:.6}", cm.accuracy());
    println!("weighted auc {:.6}", roc.weighted_auc);
    for (class, series) in &roc.per_class {
        println!(
            "  {class:<9} auc {:.6}  fpr {:.6}  tpr {:.6}",
            series.auc,
            cm.false_positive_rate(*class)?,
            cm.true_positive_rate(*class)?
        );
    }
    for class in &roc.omitted {
        println!("  {class:<9} absent from test data");
    }
    print!("{}", cm.to_text());

    if let Some(dir) = &args.out {
        write_file(&dir.join("confusion.csv"), &cm.to_text())?;
        for (class, series) in &roc.per_class {
            write_file(&dir.join(format!("roc_{class}.csv")), &series.to_csv())?;
        }
        let summary = serde_json::json!({
            "model": model.kind(),
            "accuracy": cm.accuracy(),
            "confusion": cm,
            "roc": roc,
        });
        write_file(&dir.join("eval.json"), &serde_json::to_string_pretty(&summary)?)?;
    }
    Ok(bench::exit::SUCCESS)
}

fn cmd_bench(args: BenchArgs) -> anyhow::Result<i32> {
    let mut config = match &args.config {
        Some(p) => BenchConfig::load(p)?,
        None => BenchConfig::default(),
    };
    if let Some(s) = args.seed {
        config.seed = s;
    }
    if let Some(d) = args.data {
        config.data = bench::DataSource {
            path: Some(d),
            ..Default::default()
        };
    }
    let grid = run_grid(&config)?;
    let files = emit_report(&grid, args.format, &args.out)?;
    eprintln!(
        "{} cells, {} failed; {} files in {}",
        grid.cells.len(),
        grid.failed_cells(),
        files.len(),
        args.out.display()
    );
    Ok(grid.exit_code())
}

/// Config, parse and IO problems exit with 2; everything else with 1.
fn error_code(err: &anyhow::Error) -> i32 {
    let setup = err.chain().any(|cause| {
        cause.is::<std::io::Error>()
            || matches!(
                cause.downcast_ref::<Error>(),
                Some(
                    Error::Io { .. }
                        | Error::Config(_)
                        | Error::Parse { .. }
                        | Error::LabelColumnNotFound(_)
                        | Error::UnknownLabel(_)
                        | Error::ModelFormat(_)
                )
            )
    });
    if setup {
        bench::exit::CONFIG_OR_IO
    } else {
        bench::exit::PARTIAL_FAILURE
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Synth(a) => cmd_synth(a),
        Command::Split(a) => cmd_split(a),
        Command::Rank(a) => cmd_rank(a),
        Command::Train(a) => cmd_train(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Bench(a) => cmd_bench(a),
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(error_code(&e) as u8)
        }
    }
}
