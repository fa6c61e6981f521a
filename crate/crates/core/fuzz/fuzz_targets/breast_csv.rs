#![no_main]

use libfuzzer_sys::fuzz_target;
use mammoeval::fixture::synthetic_dataset;
use mammoeval::predictions::{load_prediction_bytes, Granularity};

fuzz_target!(|data: &[u8]| {
    let ds = synthetic_dataset(3, "fuzz", std::path::Path::new("/nonexistent"));
    if let Ok(set) = load_prediction_bytes(data, &ds, Granularity::Breast) {
        assert_eq!(set.breasts.len(), 6);
    }
});
