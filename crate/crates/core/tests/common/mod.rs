//! Reference implementations used to check the library. They favour
//! obviousness over speed and share no code with the crate.

#![allow(dead_code)]

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Every (positive, negative) pair: 1 if the positive scores higher, 1/2 on
/// a tie.
pub fn pair_count_auc(scores: &[f64], labels: &[u8]) -> Option<f64> {
    let mut doubled: u64 = 0;
    let (mut p, mut n) = (0u64, 0u64);
    for (i, &li) in labels.iter().enumerate() {
        if li == 1 {
            p += 1;
        } else {
            n += 1;
        }
        if li != 1 {
            continue;
        }
        for (j, &lj) in labels.iter().enumerate() {
            if lj == 0 {
                doubled += match scores[i].partial_cmp(&scores[j]).unwrap() {
                    std::cmp::Ordering::Greater => 2,
                    std::cmp::Ordering::Equal => 1,
                    std::cmp::Ordering::Less => 0,
                };
            }
        }
    }
    (p > 0 && n > 0).then(|| doubled as f64 / (2 * p * n) as f64)
}

/// Walks the distinct scores from high to low and adds
/// `(recall_t - recall_prev) * precision_t` at each.
pub fn threshold_ap(scores: &[f64], labels: &[u8]) -> Option<f64> {
    let total_pos = labels.iter().filter(|&&l| l == 1).count();
    if total_pos == 0 {
        return None;
    }
    let mut thresholds: Vec<f64> = scores.to_vec();
    thresholds.sort_by(|a, b| b.partial_cmp(a).unwrap());
    thresholds.dedup();
    let mut ap = 0.0;
    let mut prev_recall = 0.0;
    for t in thresholds {
        let tp = scores.iter().zip(labels).filter(|(s, l)| **s >= t && **l == 1).count();
        let fp = scores.iter().zip(labels).filter(|(s, l)| **s >= t && **l == 0).count();
        let recall = tp as f64 / total_pos as f64;
        let precision = tp as f64 / (tp + fp) as f64;
        ap += (recall - prev_recall) * precision;
        prev_recall = recall;
    }
    Some(ap)
}

pub fn trapezoid(points: &[(f64, f64)]) -> f64 {
    points
        .windows(2)
        .map(|w| (w[1].0 - w[0].0) * (w[1].1 + w[0].1) / 2.0)
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stat {
    Roc,
    Ap,
}

fn linear_quantile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Percentile bootstrap over materialised resamples. Replicate `r` uses
/// ChaCha8 seeded with `seed` on stream `r`; resamples missing a class are
/// redrawn up to `max_redraws` times.
pub fn bootstrap_oracle(
    scores: &[f64],
    labels: &[u8],
    stat: Stat,
    replicates: usize,
    confidence: f64,
    seed: u64,
    max_redraws: usize,
) -> (f64, f64, usize) {
    let n = scores.len();
    let mut stats = Vec::new();
    let mut skipped = 0;
    for r in 0..replicates {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(r as u64);
        let mut value = None;
        for _ in 0..=max_redraws {
            let idx: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n as u64) as usize).collect();
            let s: Vec<f64> = idx.iter().map(|&i| scores[i]).collect();
            let l: Vec<u8> = idx.iter().map(|&i| labels[i]).collect();
            if l.contains(&0) && l.contains(&1) {
                value = match stat {
                    Stat::Roc => pair_count_auc(&s, &l),
                    Stat::Ap => threshold_ap(&s, &l),
                };
                break;
            }
        }
        match value {
            Some(v) => stats.push(v),
            None => skipped += 1,
        }
    }
    stats.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let alpha = 1.0 - confidence;
    (
        linear_quantile(&stats, alpha / 2.0),
        linear_quantile(&stats, 1.0 - alpha / 2.0),
        skipped,
    )
}

/// `round(v * (2^16 - 1) / (2^bits - 1))`, halves rounded up, in exact
/// rational arithmetic.
pub fn rational_rescale(v: u16, bits: u32) -> u16 {
    let max = (1i64 << bits) - 1;
    let x = BigRational::new(BigInt::from(i64::from(v) * 65535), BigInt::from(max));
    let half = BigRational::new(BigInt::from(1), BigInt::from(2));
    (x + half).floor().to_integer().to_u16().unwrap()
}

/// Random scores on a coarse grid so that ties are common, with labels
/// guaranteed to contain both classes when `n >= 2`.
pub fn tied_instance(rng: &mut impl Rng, n: usize) -> (Vec<f64>, Vec<u8>) {
    let levels = rng.gen_range(1..=n.max(2));
    let scores: Vec<f64> = (0..n)
        .map(|_| rng.gen_range(0..levels) as f64 / (levels.max(2) - 1) as f64)
        .collect();
    let mut labels: Vec<u8> = (0..n).map(|_| rng.gen_range(0..2)).collect();
    if n >= 2 {
        labels[0] = 1;
        labels[1] = 0;
    }
    (scores, labels)
}
