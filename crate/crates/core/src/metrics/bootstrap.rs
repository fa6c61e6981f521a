use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::auc::{ap_from_groups, class_counts, roc_from_groups, ThresholdGroups};
use super::{EvaluationConfig, Level, Metric, MetricError, MetricResult, ScoredSample};

/// How replicates are scheduled. Results are identical either way.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Serial,
    #[default]
    Parallel,
}

/// Generator for replicate `r`: ChaCha8 keyed by the master seed, with the
/// replicate index as the stream id. Each replicate's draws are independent
/// of every other replicate and of scheduling order.
pub fn replicate_rng(master_seed: u64, replicate: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(replicate);
    rng
}

/// Quantile by linear interpolation between order statistics
/// (`h = (n - 1) q`). `sorted` must be ascending and non-empty.
pub fn quantile_linear(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty sample");
    let h = (sorted.len() - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let frac = h - lo as f64;
    if frac == 0.0 {
        sorted[lo]
    } else {
        sorted[lo] + frac * (sorted[hi] - sorted[lo])
    }
}

fn statistic(metric: Metric, groups: &[(u64, u64)]) -> Option<f64> {
    match metric {
        Metric::AucRoc => roc_from_groups(groups),
        Metric::AucPr => ap_from_groups(groups),
    }
}

/// Runs one replicate: resample with replacement, redrawing resamples that
/// lack either class up to `max_redraws` times. `None` means skipped.
fn run_replicate(
    groups: &ThresholdGroups,
    n: usize,
    metric: Metric,
    config: &EvaluationConfig,
    replicate: u64,
) -> Option<f64> {
    let mut rng = replicate_rng(config.master_seed, replicate);
    let mut multiplicity = vec![0u64; n];
    for _ in 0..=config.max_redraws {
        multiplicity.iter_mut().for_each(|m| *m = 0);
        for _ in 0..n {
            multiplicity[rng.gen_range(0..n as u64) as usize] += 1;
        }
        let counts = groups.weighted_counts(|i| multiplicity[i]);
        let has = |class: fn(&(u64, u64)) -> u64| counts.iter().map(class).sum::<u64>() > 0;
        if has(|c| c.0) && has(|c| c.1) {
            return statistic(metric, &counts);
        }
    }
    None
}

pub fn bootstrap_ci(
    samples: &[ScoredSample],
    metric: Metric,
    level: Level,
    config: &EvaluationConfig,
) -> Result<MetricResult, MetricError> {
    bootstrap_ci_with(samples, metric, level, config, Execution::default())
}

/// Point estimate on the full sample plus a percentile bootstrap interval.
///
/// Replicate `r` draws `samples.len()` units with replacement from
/// [`replicate_rng`]`(master_seed, r)`. The interval is the linear
/// interpolation quantile pair `(alpha/2, 1 - alpha/2)` of the replicate
/// statistics. More than 10% skipped replicates is an error.
pub fn bootstrap_ci_with(
    samples: &[ScoredSample],
    metric: Metric,
    level: Level,
    config: &EvaluationConfig,
    execution: Execution,
) -> Result<MetricResult, MetricError> {
    config.validate()?;
    let (positives, negatives) = class_counts(samples);
    if positives == 0 || negatives == 0 {
        return Err(MetricError::DegenerateLabels {
            metric,
            required: "at least one positive and one negative",
            positives,
            negatives,
        });
    }
    let point = metric.evaluate(samples)?;
    let curve = metric.curve(samples)?;
    let groups = ThresholdGroups::new(samples);
    let n = samples.len();

    let run = |r: usize| run_replicate(&groups, n, metric, config, r as u64);
    let replicates: Vec<Option<f64>> = match execution {
        Execution::Serial => (0..config.n_replicates).map(run).collect(),
        Execution::Parallel => (0..config.n_replicates).into_par_iter().map(run).collect(),
    };

    let mut stats: Vec<f64> = replicates.into_iter().flatten().collect();
    let skipped = config.n_replicates - stats.len();
    if skipped * 10 > config.n_replicates || stats.is_empty() {
        return Err(MetricError::TooManySkips {
            skipped,
            replicates: config.n_replicates,
        });
    }
    stats.sort_by(f64::total_cmp);
    let alpha = 1.0 - config.confidence;
    Ok(MetricResult {
        metric,
        level,
        point,
        ci_low: quantile_linear(&stats, alpha / 2.0),
        ci_high: quantile_linear(&stats, 1.0 - alpha / 2.0),
        confidence: config.confidence,
        n_samples: n,
        n_positives: positives,
        n_replicates: config.n_replicates,
        n_skipped: skipped,
        curve,
    })
}
