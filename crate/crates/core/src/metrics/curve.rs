use serde::{Deserialize, Serialize};

use super::auc::{class_counts, ThresholdGroups};
use super::{Metric, MetricError, ScoredSample};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub x: f64,
    pub y: f64,
}

fn degenerate(metric: Metric, required: &'static str, samples: &[ScoredSample]) -> MetricError {
    let (positives, negatives) = class_counts(samples);
    MetricError::DegenerateLabels {
        metric,
        required,
        positives,
        negatives,
    }
}

/// `(FPR, TPR)` points: the origin, then one point per distinct threshold in
/// descending score order. The last point is always `(1, 1)`.
pub fn roc_curve(samples: &[ScoredSample]) -> Result<Vec<CurvePoint>, MetricError> {
    let (pos, neg) = class_counts(samples);
    if pos == 0 || neg == 0 {
        return Err(degenerate(
            Metric::AucRoc,
            "at least one positive and one negative",
            samples,
        ));
    }
    let mut points = vec![CurvePoint { x: 0.0, y: 0.0 }];
    let (mut tp, mut fp) = (0u64, 0u64);
    for (p, n) in ThresholdGroups::new(samples).counts() {
        tp += p;
        fp += n;
        points.push(CurvePoint {
            x: fp as f64 / neg as f64,
            y: tp as f64 / pos as f64,
        });
    }
    Ok(points)
}

/// `(recall, precision)` points: `(0, 1)`, then one point per distinct
/// threshold in descending score order.
pub fn pr_curve(samples: &[ScoredSample]) -> Result<Vec<CurvePoint>, MetricError> {
    let (pos, _) = class_counts(samples);
    if pos == 0 {
        return Err(degenerate(Metric::AucPr, "at least one positive", samples));
    }
    let mut points = vec![CurvePoint { x: 0.0, y: 1.0 }];
    let (mut tp, mut fp) = (0u64, 0u64);
    for (p, n) in ThresholdGroups::new(samples).counts() {
        tp += p;
        fp += n;
        points.push(CurvePoint {
            x: tp as f64 / pos as f64,
            y: tp as f64 / (tp + fp) as f64,
        });
    }
    Ok(points)
}

/// Trapezoidal area under a polyline.
pub fn trapezoid_area(points: &[CurvePoint]) -> f64 {
    points
        .windows(2)
        .map(|w| (w[1].x - w[0].x) * (w[0].y + w[1].y) / 2.0)
        .sum()
}
