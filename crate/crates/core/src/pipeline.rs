//! The `run` and `score` commands: dataset in, results document out.

use std::path::{Path, PathBuf};
use std::time::Duration;

use crate::dataset::{parse_metadata, validate_dataset, Dataset, ValidationReport, ViewKey};
use crate::error::{io_at, Error};
use crate::metrics::{bootstrap_ci, EvaluationConfig, Metric, MetricResult};
use crate::predictions::{load_predictions, Granularity, PredictionSet};
use crate::registry::{resolve_invocation, InvocationPaths, ParamBundle, Registry};
use crate::report::{write_curves, write_results_document, ResultSource, ResultsDocument, SCHEMA_VERSION};
use crate::runner::{run_model, sha256_file, Device, ExecutionBackend, RunOptions, HARNESS_VERSION};

pub const PREDICTIONS_FILE: &str = "predictions.csv";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone)]
pub struct RunRequest {
    pub model: String,
    pub variant: Option<String>,
    pub image_dir: PathBuf,
    pub metadata: PathBuf,
    pub output_dir: PathBuf,
    pub device: Device,
    pub backend: ExecutionBackend,
    pub overrides: ParamBundle,
    pub evaluation: EvaluationConfig,
    pub timeout: Duration,
    /// Defaults to the metadata file stem.
    pub dataset_name: Option<String>,
}

#[derive(Debug, Clone)]
pub struct ScoreRequest {
    pub predictions: PathBuf,
    pub metadata: PathBuf,
    pub granularity: Granularity,
    pub output_dir: PathBuf,
    pub evaluation: EvaluationConfig,
    /// Labels the results; a registered model name picks up its column label.
    pub model: String,
    pub variant: Option<String>,
    pub dataset_name: Option<String>,
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub document: ResultsDocument,
    pub run_dir: PathBuf,
    pub results_path: PathBuf,
    pub validation: Option<ValidationReport>,
}

fn slug(s: &str) -> String {
    s.chars()
        .map(|c| if c.is_ascii_alphanumeric() || "._-".contains(c) { c } else { '_' })
        .collect()
}

/// `<model>__<variant>__<dataset>__seed<seed>`
pub fn run_dir_name(model: &str, variant: Option<&str>, dataset: &str, seed: u64) -> String {
    format!(
        "{}__{}__{}__seed{seed}",
        slug(model),
        slug(variant.unwrap_or("default")),
        slug(dataset)
    )
}

/// Loads the metadata and points it at `image_dir`, optionally renaming it.
pub fn load_dataset(metadata: &Path, image_dir: Option<&Path>, name: Option<&str>) -> Result<Dataset, Error> {
    let mut ds = parse_metadata(metadata)?;
    if let Some(dir) = image_dir {
        ds = ds.with_image_root(dir);
    }
    if let Some(n) = name {
        ds = ds.with_name(n);
    }
    Ok(ds)
}

/// Fatal findings become an error; warnings are returned.
pub fn cli_validate(dataset: &Dataset) -> Result<ValidationReport, Error> {
    let report = validate_dataset(dataset);
    if report.is_fatal() {
        let lines: Vec<String> = report.errors().map(|f| format!("  {f}")).collect();
        return Err(Error::Validation(lines.join("\n")));
    }
    Ok(report)
}

fn check_four_views(dataset: &Dataset, column: &str) -> Result<(), Error> {
    let incomplete: Vec<usize> = dataset
        .exams()
        .iter()
        .filter(|e| ViewKey::ALL.iter().any(|v| e.images(*v).is_empty()))
        .map(|e| e.exam_id())
        .collect();
    if incomplete.is_empty() {
        return Ok(());
    }
    let shown: Vec<String> = incomplete.iter().take(10).map(usize::to_string).collect();
    Err(Error::Incompatible(format!(
        "{column} needs all four views, but {} exam(s) lack at least one (first: {})",
        incomplete.len(),
        shown.join(", ")
    )))
}

/// Every applicable (level, metric) pair with its bootstrap interval.
pub fn evaluate(predictions: &PredictionSet, config: &EvaluationConfig) -> Result<Vec<MetricResult>, Error> {
    let mut out = Vec::new();
    for level in predictions.levels() {
        let samples = predictions
            .samples(level)
            .expect("levels() lists only applicable levels")?;
        for metric in Metric::ALL {
            out.push(bootstrap_ci(&samples, metric, level, config)?);
        }
    }
    Ok(out)
}

struct DocumentParts<'a> {
    source: ResultSource,
    model: &'a str,
    variant: Option<&'a str>,
    column: String,
    dataset: &'a Dataset,
    granularity: Granularity,
    evaluation: EvaluationConfig,
    manifest: Option<String>,
    predictions_path: &'a Path,
}

fn finish(parts: DocumentParts<'_>, run_dir: &Path) -> Result<(ResultsDocument, PathBuf), Error> {
    let predictions = load_predictions(parts.predictions_path, parts.dataset, parts.granularity)?;
    let metrics = evaluate(&predictions, &parts.evaluation)?;
    let document = ResultsDocument {
        schema_version: SCHEMA_VERSION,
        harness_version: HARNESS_VERSION.to_string(),
        source: parts.source,
        model: parts.model.to_string(),
        variant: parts.variant.map(str::to_string),
        column: parts.column,
        dataset: parts.dataset.name().to_string(),
        granularity: Some(parts.granularity),
        evaluation: Some(parts.evaluation),
        manifest: parts.manifest,
        predictions_sha256: Some(sha256_file(parts.predictions_path).map_err(io_at(parts.predictions_path))?),
        metrics,
        exclusions: predictions.exclusions.into(),
        warnings: predictions.warnings.iter().map(ToString::to_string).collect(),
    };
    let curves = run_dir.join("curves");
    write_curves(&curves, &document.metrics).map_err(io_at(&curves))?;
    let path = write_results_document(run_dir, &document).map_err(io_at(run_dir))?;
    Ok((document, path))
}

/// validate, run the model, parse and aggregate its output, evaluate, and
/// write the results document, curves and manifest under
/// `output_dir/<run_dir_name>/`.
pub fn cli_run(registry: &Registry, req: &RunRequest) -> Result<Outcome, Error> {
    req.evaluation.validate()?;
    let desc = registry.get(&req.model)?;
    let dataset = load_dataset(&req.metadata, Some(&req.image_dir), req.dataset_name.as_deref())?;
    let validation = cli_validate(&dataset)?;
    let variant = req.variant.as_deref().or(desc.default_variant.as_deref());
    let column = desc.column_label(variant);
    if desc.requires_all_four_views(variant) {
        check_four_views(&dataset, &column)?;
    }

    let run_dir = req
        .output_dir
        .join(run_dir_name(&desc.name, variant, dataset.name(), req.evaluation.master_seed));
    let paths = InvocationPaths {
        image_dir: req.image_dir.clone(),
        metadata: req.metadata.clone(),
        output: run_dir.join("model-output").join(PREDICTIONS_FILE),
    };
    let inv = resolve_invocation(desc, variant, &req.overrides, &paths, req.device, req.backend)?;
    let opts = RunOptions {
        timeout: req.timeout,
        master_seed: req.evaluation.master_seed,
        dataset_name: dataset.name().to_string(),
        manifest_path: run_dir.join(MANIFEST_FILE),
        log_dir: run_dir.join("logs"),
    };
    let ran = run_model(&inv, &opts)?;
    let (document, results_path) = finish(
        DocumentParts {
            source: ResultSource::Run,
            model: &desc.name,
            variant: inv.variant.as_deref(),
            column,
            dataset: &dataset,
            granularity: inv.granularity,
            evaluation: req.evaluation,
            manifest: Some(MANIFEST_FILE.to_string()),
            predictions_path: &ran.output,
        },
        &run_dir,
    )?;
    Ok(Outcome {
        document,
        run_dir,
        results_path,
        validation: Some(validation),
    })
}

/// The evaluation half of [`cli_run`] applied to an existing prediction
/// file. Images are not needed.
pub fn cli_score(registry: &Registry, req: &ScoreRequest) -> Result<Outcome, Error> {
    req.evaluation.validate()?;
    let dataset = load_dataset(&req.metadata, None, req.dataset_name.as_deref())?;
    let column = match registry.get(&req.model) {
        Ok(desc) => desc.column_label(req.variant.as_deref()),
        Err(_) => match &req.variant {
            Some(v) => format!("{} ({v})", req.model),
            None => req.model.clone(),
        },
    };
    let run_dir = req.output_dir.join(run_dir_name(
        &req.model,
        req.variant.as_deref(),
        dataset.name(),
        req.evaluation.master_seed,
    ));
    let (document, results_path) = finish(
        DocumentParts {
            source: ResultSource::Score,
            model: &req.model,
            variant: req.variant.as_deref(),
            column,
            dataset: &dataset,
            granularity: req.granularity,
            evaluation: req.evaluation,
            manifest: None,
            predictions_path: &req.predictions,
        },
        &run_dir,
    )?;
    Ok(Outcome {
        document,
        run_dir,
        results_path,
        validation: None,
    })
}
