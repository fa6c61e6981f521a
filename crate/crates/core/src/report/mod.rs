//! Per-run results documents, curve exports and the cross-run scoreboard.

mod plot;
mod reference;
mod scoreboard;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::metrics::{EvaluationConfig, Level, Metric, MetricResult};
use crate::predictions::{Exclusion, Granularity};

pub use plot::render_curve_svg;
pub use reference::{ingest_reference_csv, published_documents, ReferenceError, PUBLISHED_CSV};
pub use scoreboard::{build_scoreboard, load_results_dir, render_markdown, Column, Scoreboard, ScoreboardEntry, FIXED_DATASET_ORDER};

pub const SCHEMA_VERSION: u32 = 1;

/// Where a results document came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResultSource {
    /// A model run through the harness.
    Run,
    /// Externally produced predictions scored by the harness.
    Score,
    /// Published values entered as static data.
    Reference,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ExclusionSummary {
    pub count: usize,
    pub entries: Vec<Exclusion>,
}

impl From<Vec<Exclusion>> for ExclusionSummary {
    fn from(entries: Vec<Exclusion>) -> Self {
        ExclusionSummary {
            count: entries.len(),
            entries,
        }
    }
}

/// Metrics for one (model, variant, dataset, seed).
///
/// Contains no timestamps; those live in the run manifest it references.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultsDocument {
    pub schema_version: u32,
    pub harness_version: String,
    pub source: ResultSource,
    pub model: String,
    pub variant: Option<String>,
    /// Scoreboard column label.
    pub column: String,
    pub dataset: String,
    pub granularity: Option<Granularity>,
    pub evaluation: Option<EvaluationConfig>,
    /// Manifest path relative to the document's directory.
    pub manifest: Option<String>,
    pub predictions_sha256: Option<String>,
    pub metrics: Vec<MetricResult>,
    pub exclusions: ExclusionSummary,
    pub warnings: Vec<String>,
}

impl ResultsDocument {
    pub fn metric(&self, metric: Metric, level: Level) -> Option<&MetricResult> {
        self.metrics
            .iter()
            .find(|m| m.metric == metric && m.level == level)
    }

    pub fn master_seed(&self) -> Option<u64> {
        self.evaluation.map(|e| e.master_seed)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = serde_json::to_vec_pretty(self).expect("results document serializes");
        out.push(b'\n');
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, serde_json::Error> {
        serde_json::from_slice(bytes)
    }

    /// `results-<first 16 hex digits of the SHA-256 of the document>.json`
    pub fn file_name(&self) -> String {
        let digest = Sha256::digest(self.to_bytes());
        format!("results-{}.json", &hex::encode(digest)[..16])
    }
}

/// Writes the document under its content-addressed name, replacing any
/// other results document in `dir`.
pub fn write_results_document(dir: &Path, doc: &ResultsDocument) -> std::io::Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let name = doc.file_name();
    for entry in std::fs::read_dir(dir)? {
        let path = entry?.path();
        let file = path.file_name().and_then(|f| f.to_str()).unwrap_or_default();
        if file.starts_with("results-") && file.ends_with(".json") && file != name {
            std::fs::remove_file(&path)?;
        }
    }
    let path = dir.join(name);
    std::fs::write(&path, doc.to_bytes())?;
    Ok(path)
}

fn axis_names(metric: Metric) -> (&'static str, &'static str) {
    match metric {
        Metric::AucRoc => ("fpr", "tpr"),
        Metric::AucPr => ("recall", "precision"),
    }
}

/// Curve points as CSV with an `x,y`-style header naming the axes.
pub fn curve_csv(result: &MetricResult) -> String {
    let (x, y) = axis_names(result.metric);
    let mut out = format!("{x},{y}\n");
    for p in &result.curve {
        let _ = writeln!(out, "{},{}", p.x, p.y);
    }
    out
}

/// Writes `<level>_<metric>.csv` and `.svg` for every result. Returns the
/// written paths.
pub fn write_curves(dir: &Path, results: &[MetricResult]) -> std::io::Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for r in results {
        let stem = format!("{}_{}", r.level, r.metric.as_str().to_ascii_lowercase());
        let csv = dir.join(format!("{stem}.csv"));
        std::fs::write(&csv, curve_csv(r))?;
        let svg = dir.join(format!("{stem}.svg"));
        std::fs::write(&svg, render_curve_svg(r))?;
        written.extend([csv, svg]);
    }
    Ok(written)
}
