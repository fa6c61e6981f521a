use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mammoeval::dataset::Severity;
use mammoeval::error::Error;
use mammoeval::fixture::{write_mock_registry, write_synthetic_fixture};
use mammoeval::image::{compute_mean_intensity, BitDepth};
use mammoeval::metrics::EvaluationConfig;
use mammoeval::pipeline::{cli_run, cli_score, cli_validate, load_dataset, Outcome, RunRequest, ScoreRequest};
use mammoeval::predictions::Granularity;
use mammoeval::registry::{load_registry, parse_param, ParamBundle, Registry};
use mammoeval::report::{build_scoreboard, ingest_reference_csv, load_results_dir, render_markdown, published_documents, ScoreboardEntry};
use mammoeval::runner::{list_devices, Device, ExecutionBackend};

/// Evaluate screening-mammography classifiers on a dataset and report
/// AUC ROC / AUC PR with bootstrap confidence intervals.
#[derive(Debug, Parser)]
#[command(name = "mammoeval", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check a metadata file against an image directory.
    Validate(ValidateArgs),
    /// Run a registered model on a dataset and evaluate its predictions.
    Run(RunArgs),
    /// Evaluate an existing prediction file.
    Score(ScoreArgs),
    /// Render a markdown scoreboard from a directory of results.
    Scoreboard(ScoreboardArgs),
    /// List registered models and variants.
    RegistryList(RegistryArgs),
    /// Write a synthetic 16-bit dataset and mock-model registry for trying the tool.
    DemoFixture(DemoArgs),
}

#[derive(Debug, Args)]
struct RegistryArgs {
    /// Directory of model descriptors (`*.toml`). Defaults to the shipped models.
    #[arg(long)]
    registry: Option<PathBuf>,
}

impl RegistryArgs {
    fn load(&self) -> Result<Registry, Error> {
        match &self.registry {
            Some(dir) => Ok(load_registry(dir)?),
            None => Ok(Registry::shipped()),
        }
    }
}

#[derive(Debug, Args)]
struct EvalArgs {
    /// Master seed for the bootstrap.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 2000)]
    replicates: usize,
    #[arg(long, default_value_t = 0.95)]
    confidence: f64,
}

impl EvalArgs {
    fn config(&self) -> EvaluationConfig {
        EvaluationConfig {
            n_replicates: self.replicates,
            confidence: self.confidence,
            master_seed: self.seed,
            ..Default::default()
        }
    }
}

#[derive(Debug, Args)]
struct ValidateArgs {
    #[arg(long)]
    metadata: PathBuf,
    #[arg(long)]
    image_dir: PathBuf,
    /// Also compute the dataset's mean pixel intensity (0-255 scale).
    #[arg(long)]
    mean_intensity: bool,
    /// Source bit depth of the images, needed for 8-bit PNGs.
    #[arg(long)]
    bit_depth: Option<u8>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum DeviceArg {
    Gpu,
    Cpu,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum BackendArg {
    Container,
    Local,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long)]
    model: String,
    #[arg(long)]
    variant: Option<String>,
    #[arg(long)]
    image_dir: PathBuf,
    #[arg(long)]
    metadata: PathBuf,
    #[arg(long)]
    output_dir: PathBuf,
    /// Defaults to gpu when one is detected, otherwise cpu.
    #[arg(long, value_enum)]
    device: Option<DeviceArg>,
    #[arg(long, value_enum, default_value = "container")]
    backend: BackendArg,
    /// Model parameter override, `key=value`. Repeatable.
    #[arg(long = "param", value_name = "KEY=VALUE")]
    params: Vec<String>,
    /// Seconds before the model is killed.
    #[arg(long, default_value_t = 86_400)]
    timeout: u64,
    /// Dataset name in results; defaults to the metadata file stem.
    #[arg(long)]
    dataset_name: Option<String>,
    #[command(flatten)]
    eval: EvalArgs,
    #[command(flatten)]
    registry: RegistryArgs,
}

#[derive(Debug, Args)]
struct ScoreArgs {
    #[arg(long)]
    predictions: PathBuf,
    #[arg(long)]
    metadata: PathBuf,
    /// `image` or `breast`.
    #[arg(long)]
    granularity: Granularity,
    #[arg(long)]
    output_dir: PathBuf,
    /// Name the results are filed under.
    #[arg(long, default_value = "external")]
    model: String,
    #[arg(long)]
    variant: Option<String>,
    #[arg(long)]
    dataset_name: Option<String>,
    #[command(flatten)]
    eval: EvalArgs,
    #[command(flatten)]
    registry: RegistryArgs,
}

#[derive(Debug, Args)]
struct ScoreboardArgs {
    /// Directory searched recursively for `results-*.json`.
    #[arg(long)]
    results_dir: PathBuf,
    /// Markdown output file; defaults to `<results-dir>/scoreboard.md`.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Include static reference results: `published` for the bundled
    /// published values, or a path to a CSV in the same format.
    #[arg(long)]
    reference: Option<String>,
    #[command(flatten)]
    registry: RegistryArgs,
}

#[derive(Debug, Args)]
struct DemoArgs {
    #[arg(long)]
    output_dir: PathBuf,
    #[arg(long, default_value_t = 40)]
    exams: usize,
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn print_outcome(out: &Outcome) {
    for w in &out.document.warnings {
        eprintln!("warning: {w}");
    }
    for e in &out.document.exclusions.entries {
        eprintln!("excluded: {e}");
    }
    println!("{} on {}", out.document.column, out.document.dataset);
    for m in &out.document.metrics {
        println!("  {:<6} {:<7} {}", m.level.as_str(), m.metric.as_str(), m.cell());
    }
    println!("results: {}", out.results_path.display());
}

fn validate(args: &ValidateArgs) -> Result<(), Error> {
    let ds = load_dataset(&args.metadata, Some(&args.image_dir), None)?;
    let report = cli_validate(&ds)?;
    for f in &report.findings {
        debug_assert_eq!(f.severity(), Severity::Warning);
        eprintln!("warning: {f}");
    }
    println!("{}: {} exams, {} images, ok", ds.name(), ds.len(), ds.total_images());
    if args.mean_intensity {
        let depth = args.bit_depth.map(BitDepth::new).transpose()?;
        let stats = compute_mean_intensity(&ds, depth)?;
        println!("mean_pixel_intensity = {:.4}", stats.mean_pixel_intensity);
    }
    Ok(())
}

fn run(args: &RunArgs) -> Result<(), Error> {
    let registry = args.registry.load()?;
    let mut overrides = ParamBundle::new();
    for p in &args.params {
        let (k, v) = parse_param(p).map_err(|e| Error::Usage(format!("--param: {e}")))?;
        overrides.insert(k, v);
    }
    let device = match args.device {
        Some(DeviceArg::Gpu) => Device::Gpu,
        Some(DeviceArg::Cpu) => Device::Cpu,
        None if list_devices().contains(Device::Gpu) => Device::Gpu,
        None => Device::Cpu,
    };
    let backend = match args.backend {
        BackendArg::Container => ExecutionBackend::Container,
        BackendArg::Local => ExecutionBackend::LocalProcess,
    };
    let out = cli_run(
        &registry,
        &RunRequest {
            model: args.model.clone(),
            variant: args.variant.clone(),
            image_dir: args.image_dir.clone(),
            metadata: args.metadata.clone(),
            output_dir: args.output_dir.clone(),
            device,
            backend,
            overrides,
            evaluation: args.eval.config(),
            timeout: Duration::from_secs(args.timeout),
            dataset_name: args.dataset_name.clone(),
        },
    )?;
    if let Some(report) = &out.validation {
        for f in &report.findings {
            eprintln!("warning: {f}");
        }
    }
    print_outcome(&out);
    Ok(())
}

fn score(args: &ScoreArgs) -> Result<(), Error> {
    let registry = args.registry.load()?;
    let out = cli_score(
        &registry,
        &ScoreRequest {
            predictions: args.predictions.clone(),
            metadata: args.metadata.clone(),
            granularity: args.granularity,
            output_dir: args.output_dir.clone(),
            evaluation: args.eval.config(),
            model: args.model.clone(),
            variant: args.variant.clone(),
            dataset_name: args.dataset_name.clone(),
        },
    )?;
    print_outcome(&out);
    Ok(())
}

fn scoreboard(args: &ScoreboardArgs) -> Result<(), Error> {
    let registry = args.registry.load()?;
    let mut entries = load_results_dir(&args.results_dir).map_err(io(&args.results_dir))?;
    match args.reference.as_deref() {
        None => {}
        Some(r) => {
            let (docs, label) = if r == "published" {
                (published_documents(&registry), "reference:published".to_string())
            } else {
                let path = Path::new(r);
                let text = std::fs::read_to_string(path).map_err(io(path))?;
                (ingest_reference_csv(&text, &registry)?, format!("reference:{r}"))
            };
            entries.extend(docs.into_iter().map(|doc| ScoreboardEntry {
                doc,
                finished_at: None,
                path: label.clone(),
            }));
        }
    }
    let md = render_markdown(&build_scoreboard(entries, &registry));
    let out = args
        .output
        .clone()
        .unwrap_or_else(|| args.results_dir.join("scoreboard.md"));
    std::fs::write(&out, &md).map_err(io(&out))?;
    print!("{md}");
    Ok(())
}

fn registry_list(args: &RegistryArgs) -> Result<(), Error> {
    let registry = args.load()?;
    for m in registry.models() {
        println!("{m}");
        let four = |v: Option<&str>| if m.requires_all_four_views(v) { ", four views" } else { "" };
        if m.variants.is_empty() {
            println!("  - (no variants) -> {:?}{}", m.column_label(None), four(None));
        }
        for v in &m.variants {
            let default = if m.default_variant.as_deref() == Some(v.name.as_str()) { " [default]" } else { "" };
            let params: Vec<String> = v.params.iter().map(|(k, v)| format!("{k}={v}")).collect();
            println!(
                "  - {}{default} -> {:?} {{{}}}{}",
                v.name,
                m.column_label(Some(&v.name)),
                params.join(", "),
                four(Some(&v.name))
            );
        }
    }
    Ok(())
}

fn demo_fixture(args: &DemoArgs) -> Result<(), Error> {
    let fx = write_synthetic_fixture(&args.output_dir, args.exams, "synthetic").map_err(io(&args.output_dir))?;
    let exe = std::env::current_exe()
        .ok()
        .and_then(|p| p.parent().map(|d| d.join("mammoeval-mock-model")))
        .unwrap_or_else(|| PathBuf::from("mammoeval-mock-model"));
    let reg = args.output_dir.join("registry");
    write_mock_registry(&reg, &exe).map_err(io(&reg))?;
    println!("images:   {}", fx.image_dir.display());
    println!("metadata: {}", fx.metadata.display());
    println!("registry: {}", reg.display());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Validate(a) => validate(a),
        Command::Run(a) => run(a),
        Command::Score(a) => score(a),
        Command::Scoreboard(a) => scoreboard(a),
        Command::RegistryList(a) => registry_list(a),
        Command::DemoFixture(a) => demo_fixture(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.family());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
