mod common;

use common::{bootstrap_oracle, Stat};
use mammoeval::metrics::{bootstrap_ci, samples_from, EvaluationConfig, Level, Metric};

const SCORES: [f64; 30] = [
    0.0, 0.2, 0.5, 0.7, 0.9, 0.2, 0.4, 0.6, 0.9, 0.1, 0.3, 0.6, 0.8, 0.0, 0.3, 0.5, 0.7, 1.0, 0.2, 0.4, 0.7, 0.9, 0.1,
    0.4, 0.6, 0.8, 0.1, 0.3, 0.5, 0.8,
];
const LABELS: [u8; 30] = [
    0, 0, 0, 1, 1, 0, 1, 1, 1, 0, 0, 0, 1, 0, 0, 1, 1, 1, 0, 0, 1, 1, 0, 0, 1, 1, 0, 1, 0, 1,
];

// (metric, replicates, confidence, point, low, high), seed 42, computed once
// with the materialised-resample oracle in tests/common.
const FROZEN: [(Metric, usize, f64, f64, f64, f64); 4] = [
    (Metric::AucRoc, 2000, 0.95, 0.9422222222222222, 0.8495039682539683, 0.9977678571428571),
    (Metric::AucRoc, 500, 0.90, 0.9422222222222222, 0.8684027777777779, 0.992834595959596),
    (Metric::AucPr, 2000, 0.95, 0.9384876088823457, 0.8388099667602135, 0.9963248614663257),
    (Metric::AucPr, 500, 0.90, 0.9384876088823457, 0.8591612712336396, 0.9921568627450981),
];

fn stat(m: Metric) -> Stat {
    match m {
        Metric::AucRoc => Stat::Roc,
        Metric::AucPr => Stat::Ap,
    }
}

#[test]
fn frozen_values_still_match_the_oracle() {
    for (metric, n, conf, _, low, high) in FROZEN {
        let (lo, hi, skipped) = bootstrap_oracle(&SCORES, &LABELS, stat(metric), n, conf, 42, 100);
        assert_eq!((lo, hi, skipped), (low, high, 0), "{metric} {n} {conf}");
    }
}

#[test]
fn library_reproduces_frozen_intervals() {
    let samples = samples_from(&SCORES, &LABELS).unwrap();
    for (metric, n, conf, point, low, high) in FROZEN {
        let cfg = EvaluationConfig {
            n_replicates: n,
            confidence: conf,
            master_seed: 42,
            max_redraws: 100,
        };
        let r = bootstrap_ci(&samples, metric, Level::Breast, &cfg).unwrap();
        assert!((r.point - point).abs() < 1e-12, "{metric}: point {} vs {point}", r.point);
        assert!((r.ci_low - low).abs() < 1e-12, "{metric} {n}: low {} vs {low}", r.ci_low);
        assert!((r.ci_high - high).abs() < 1e-12, "{metric} {n}: high {} vs {high}", r.ci_high);
        assert_eq!(r.n_skipped, 0);
        assert_eq!(r.n_samples, 30);
        assert_eq!(r.n_positives, 15);
    }
}

#[test]
fn other_seed_gives_other_interval() {
    let samples = samples_from(&SCORES, &LABELS).unwrap();
    let a = bootstrap_ci(&samples, Metric::AucRoc, Level::Breast, &EvaluationConfig::with_seed(42)).unwrap();
    let b = bootstrap_ci(&samples, Metric::AucRoc, Level::Breast, &EvaluationConfig::with_seed(43)).unwrap();
    assert_eq!(a.point, b.point);
    assert_ne!((a.ci_low, a.ci_high), (b.ci_low, b.ci_high));
}
