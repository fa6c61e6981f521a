use std::collections::BTreeMap;

use thiserror::Error;

use super::{ExclusionSummary, ResultSource, ResultsDocument, SCHEMA_VERSION};
use crate::metrics::{Level, Metric, MetricResult};
use crate::registry::Registry;

/// Published breast-level results for the five shipped models on seven
/// datasets (2,000 bootstrap replicates, 95% intervals).
pub const PUBLISHED_CSV: &str = include_str!("../../data/published.csv");

const HEADER: &str = "dataset,model,variant,metric,point,ci_low,ci_high";

#[derive(Debug, Error)]
pub enum ReferenceError {
    #[error("reference table must start with {HEADER:?}")]
    Header,
    #[error("reference table line {line}: {message}")]
    Row { line: usize, message: String },
}

/// Parses a static results table into one reference document per
/// (dataset, model, variant). An empty variant field means no variant.
pub fn ingest_reference_csv(text: &str, registry: &Registry) -> Result<Vec<ResultsDocument>, ReferenceError> {
    let mut lines = text.lines();
    if lines.next() != Some(HEADER) {
        return Err(ReferenceError::Header);
    }
    let mut grouped: BTreeMap<(String, String, Option<String>), Vec<MetricResult>> = BTreeMap::new();
    for (i, line) in lines.enumerate() {
        let line_no = i + 2;
        if line.is_empty() {
            continue;
        }
        let row_err = |message: String| ReferenceError::Row {
            line: line_no,
            message,
        };
        let f: Vec<&str> = line.split(',').collect();
        let [dataset, model, variant, metric, point, low, high] = f[..] else {
            return Err(row_err(format!("expected 7 fields, found {}", f.len())));
        };
        let metric = match metric {
            "AUC_ROC" => Metric::AucRoc,
            "AUC_PR" => Metric::AucPr,
            other => return Err(row_err(format!("unknown metric {other:?}"))),
        };
        let num = |s: &str| -> Result<f64, ReferenceError> {
            s.parse::<f64>()
                .ok()
                .filter(|v| (0.0..=1.0).contains(v))
                .ok_or_else(|| row_err(format!("{s:?} is not a value in [0, 1]")))
        };
        let (point, ci_low, ci_high) = (num(point)?, num(low)?, num(high)?);
        if ci_low > ci_high {
            return Err(row_err("ci_low exceeds ci_high".into()));
        }
        let variant = (!variant.is_empty()).then(|| variant.to_string());
        grouped
            .entry((dataset.to_string(), model.to_string(), variant))
            .or_default()
            .push(MetricResult {
                metric,
                level: Level::Breast,
                point,
                ci_low,
                ci_high,
                confidence: 0.95,
                n_samples: 0,
                n_positives: 0,
                n_replicates: 2000,
                n_skipped: 0,
                curve: Vec::new(),
            });
    }
    Ok(grouped
        .into_iter()
        .map(|((dataset, model, variant), metrics)| {
            let column = registry
                .get(&model)
                .map(|d| d.column_label(variant.as_deref()))
                .unwrap_or_else(|_| match &variant {
                    Some(v) => format!("{model} ({v})"),
                    None => model.clone(),
                });
            ResultsDocument {
                schema_version: SCHEMA_VERSION,
                harness_version: crate::runner::HARNESS_VERSION.to_string(),
                source: ResultSource::Reference,
                model,
                variant,
                column,
                dataset,
                granularity: None,
                evaluation: None,
                manifest: None,
                predictions_sha256: None,
                metrics,
                exclusions: ExclusionSummary::default(),
                warnings: Vec::new(),
            }
        })
        .collect())
}

pub fn published_documents(registry: &Registry) -> Vec<ResultsDocument> {
    ingest_reference_csv(PUBLISHED_CSV, registry).expect("bundled reference table is valid")
}
