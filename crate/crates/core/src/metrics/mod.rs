//! Non-parametric AUC ROC / AUC PR estimators, curve extraction and seeded
//! percentile bootstrap intervals.

mod auc;
mod bootstrap;
mod curve;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use auc::{auc_pr, auc_roc, ThresholdGroups};
pub use bootstrap::{bootstrap_ci, bootstrap_ci_with, quantile_linear, replicate_rng, Execution};
pub use curve::{pr_curve, roc_curve, trapezoid_area, CurvePoint};

#[derive(Debug, Error, PartialEq)]
pub enum MetricError {
    #[error("{metric} needs {required}; got {positives} positive and {negatives} negative samples")]
    DegenerateLabels {
        metric: Metric,
        required: &'static str,
        positives: usize,
        negatives: usize,
    },
    #[error("{skipped} of {replicates} bootstrap replicates were single-class (limit is 10%)")]
    TooManySkips { skipped: usize, replicates: usize },
    #[error("invalid evaluation config: {0}")]
    Config(String),
    #[error("invalid sample: {0}")]
    Sample(String),
}

/// A score with its binary ground truth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoredSample {
    score: f64,
    label: bool,
}

impl ScoredSample {
    pub fn new(score: f64, label: u8) -> Result<Self, MetricError> {
        if !score.is_finite() || !(0.0..=1.0).contains(&score) {
            return Err(MetricError::Sample(format!("score {score} is not in [0, 1]")));
        }
        if label > 1 {
            return Err(MetricError::Sample(format!("label {label} is not binary")));
        }
        Ok(ScoredSample {
            score,
            label: label == 1,
        })
    }

    pub fn score(&self) -> f64 {
        self.score
    }

    pub fn is_positive(&self) -> bool {
        self.label
    }

    pub fn label(&self) -> u8 {
        self.label as u8
    }
}

/// Builds samples from parallel score/label slices.
pub fn samples_from(scores: &[f64], labels: &[u8]) -> Result<Vec<ScoredSample>, MetricError> {
    if scores.len() != labels.len() {
        return Err(MetricError::Sample(format!(
            "{} scores but {} labels",
            scores.len(),
            labels.len()
        )));
    }
    scores
        .iter()
        .zip(labels)
        .map(|(&s, &l)| ScoredSample::new(s, l))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Metric {
    #[serde(rename = "AUC_ROC")]
    AucRoc,
    #[serde(rename = "AUC_PR")]
    AucPr,
}

impl Metric {
    pub const ALL: [Metric; 2] = [Metric::AucRoc, Metric::AucPr];

    pub fn as_str(self) -> &'static str {
        match self {
            Metric::AucRoc => "AUC_ROC",
            Metric::AucPr => "AUC_PR",
        }
    }

    /// Evaluates the metric on a full sample.
    pub fn evaluate(self, samples: &[ScoredSample]) -> Result<f64, MetricError> {
        match self {
            Metric::AucRoc => auc_roc(samples),
            Metric::AucPr => auc_pr(samples),
        }
    }

    pub fn curve(self, samples: &[ScoredSample]) -> Result<Vec<CurvePoint>, MetricError> {
        match self {
            Metric::AucRoc => roc_curve(samples),
            Metric::AucPr => pr_curve(samples),
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Breast,
    Image,
}

impl Level {
    pub fn as_str(self) -> &'static str {
        match self {
            Level::Breast => "breast",
            Level::Image => "image",
        }
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvaluationConfig {
    pub n_replicates: usize,
    pub confidence: f64,
    pub master_seed: u64,
    /// Redraws allowed for a single-class resample before the replicate is skipped.
    pub max_redraws: usize,
}

impl Default for EvaluationConfig {
    fn default() -> Self {
        EvaluationConfig {
            n_replicates: 2000,
            confidence: 0.95,
            master_seed: 0,
            max_redraws: 100,
        }
    }
}

impl EvaluationConfig {
    pub fn with_seed(master_seed: u64) -> Self {
        EvaluationConfig {
            master_seed,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<(), MetricError> {
        if self.n_replicates == 0 {
            return Err(MetricError::Config("n_replicates must be at least 1".into()));
        }
        if !(self.confidence > 0.0 && self.confidence < 1.0) {
            return Err(MetricError::Config(format!(
                "confidence must be in (0, 1), got {}",
                self.confidence
            )));
        }
        Ok(())
    }
}

/// Point estimate, bootstrap interval and curve for one metric at one level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricResult {
    pub metric: Metric,
    pub level: Level,
    pub point: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub confidence: f64,
    pub n_samples: usize,
    pub n_positives: usize,
    pub n_replicates: usize,
    pub n_skipped: usize,
    pub curve: Vec<CurvePoint>,
}

impl MetricResult {
    /// `0.857 (0.802-0.902)`
    pub fn cell(&self) -> String {
        format_cell(self.point, self.ci_low, self.ci_high)
    }
}

/// Three decimals, hyphenated interval.
pub fn format_cell(point: f64, low: f64, high: f64) -> String {
    format!("{point:.3} ({low:.3}-{high:.3})")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cell_format() {
        assert_eq!(format_cell(0.857, 0.802, 0.902), "0.857 (0.802-0.902)");
        assert_eq!(format_cell(1.0, 1.0, 1.0), "1.000 (1.000-1.000)");
        assert_eq!(format_cell(0.0, 0.0, 0.0), "0.000 (0.000-0.000)");
    }

    #[test]
    fn sample_validation() {
        assert!(ScoredSample::new(0.5, 1).is_ok());
        assert!(ScoredSample::new(1.5, 1).is_err());
        assert!(ScoredSample::new(f64::NAN, 0).is_err());
        assert!(ScoredSample::new(0.5, 2).is_err());
        assert!(samples_from(&[0.1], &[0, 1]).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(EvaluationConfig::default().validate().is_ok());
        let bad = EvaluationConfig {
            n_replicates: 0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        for c in [0.0, 1.0, -0.1, f64::NAN] {
            let bad = EvaluationConfig {
                confidence: c,
                ..Default::default()
            };
            assert!(bad.validate().is_err(), "{c}");
        }
    }

    #[test]
    fn metric_names_serialize_as_documented() {
        assert_eq!(serde_json::to_string(&Metric::AucRoc).unwrap(), "\"AUC_ROC\"");
        assert_eq!(serde_json::to_string(&Level::Breast).unwrap(), "\"breast\"");
    }
}
