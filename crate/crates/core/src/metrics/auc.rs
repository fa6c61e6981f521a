use super::{Metric, MetricError, ScoredSample};

/// Samples sorted by descending score and partitioned into runs of equal
/// score. Each run is one threshold.
#[derive(Debug, Clone)]
pub struct ThresholdGroups {
    /// Indices into the original sample, descending by score.
    order: Vec<usize>,
    /// `order[bounds[g]..bounds[g + 1]]` is group `g`.
    bounds: Vec<usize>,
    positive: Vec<bool>,
}

impl ThresholdGroups {
    pub fn new(samples: &[ScoredSample]) -> Self {
        let mut order: Vec<usize> = (0..samples.len()).collect();
        order.sort_by(|&a, &b| samples[b].score.total_cmp(&samples[a].score));
        let mut bounds = vec![0];
        for i in 1..order.len() {
            if samples[order[i]].score != samples[order[i - 1]].score {
                bounds.push(i);
            }
        }
        if !order.is_empty() {
            bounds.push(order.len());
        }
        ThresholdGroups {
            order,
            bounds,
            positive: samples.iter().map(|s| s.label).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.bounds.len().saturating_sub(1)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `(positives, negatives)` per group, each sample counted once.
    pub fn counts(&self) -> Vec<(u64, u64)> {
        self.weighted_counts(|_| 1)
    }

    /// `(positives, negatives)` per group with each sample weighted by its
    /// multiplicity, as produced by a resample with replacement.
    pub fn weighted_counts(&self, weight: impl Fn(usize) -> u64) -> Vec<(u64, u64)> {
        self.bounds
            .windows(2)
            .map(|w| {
                self.order[w[0]..w[1]].iter().fold((0, 0), |(p, n), &i| {
                    let k = weight(i);
                    if self.positive[i] {
                        (p + k, n)
                    } else {
                        (p, n + k)
                    }
                })
            })
            .collect()
    }
}

fn totals(groups: &[(u64, u64)]) -> (u64, u64) {
    groups
        .iter()
        .fold((0, 0), |(p, n), &(gp, gn)| (p + gp, n + gn))
}

/// Mann-Whitney AUC from descending threshold groups; `None` when either
/// class is absent.
pub(crate) fn roc_from_groups(groups: &[(u64, u64)]) -> Option<f64> {
    let (pos, neg) = totals(groups);
    if pos == 0 || neg == 0 {
        return None;
    }
    // twice the concordant count plus the tied count, kept in integers
    let mut doubled: u128 = 0;
    let mut pos_above: u128 = 0;
    for &(p, n) in groups {
        let (p, n) = (u128::from(p), u128::from(n));
        doubled += 2 * n * pos_above + p * n;
        pos_above += p;
    }
    Some(doubled as f64 / (2 * u128::from(pos) * u128::from(neg)) as f64)
}

/// Step-wise average precision from descending threshold groups; `None`
/// without positives.
pub(crate) fn ap_from_groups(groups: &[(u64, u64)]) -> Option<f64> {
    let (pos, _) = totals(groups);
    if pos == 0 {
        return None;
    }
    let (mut tp, mut fp) = (0u64, 0u64);
    let mut ap = 0.0;
    for &(p, n) in groups {
        tp += p;
        fp += n;
        if p > 0 {
            ap += (p as f64 / pos as f64) * (tp as f64 / (tp + fp) as f64);
        }
    }
    Some(ap)
}

pub(crate) fn class_counts(samples: &[ScoredSample]) -> (usize, usize) {
    let pos = samples.iter().filter(|s| s.label).count();
    (pos, samples.len() - pos)
}

/// Probability that a random positive outranks a random negative, ties
/// counted as one half.
pub fn auc_roc(samples: &[ScoredSample]) -> Result<f64, MetricError> {
    roc_from_groups(&ThresholdGroups::new(samples).counts()).ok_or_else(|| {
        let (positives, negatives) = class_counts(samples);
        MetricError::DegenerateLabels {
            metric: Metric::AucRoc,
            required: "at least one positive and one negative",
            positives,
            negatives,
        }
    })
}

/// Average precision: `sum_i (R_i - R_{i-1}) * P_i` over descending threshold
/// groups, tied scores forming a single group. No interpolation.
pub fn auc_pr(samples: &[ScoredSample]) -> Result<f64, MetricError> {
    ap_from_groups(&ThresholdGroups::new(samples).counts()).ok_or_else(|| {
        let (positives, negatives) = class_counts(samples);
        MetricError::DegenerateLabels {
            metric: Metric::AucPr,
            required: "at least one positive",
            positives,
            negatives,
        }
    })
}
