#![no_main]

use libfuzzer_sys::fuzz_target;
use mammoeval::fixture::synthetic_dataset;
use mammoeval::predictions::{load_prediction_bytes, read_image_rows, write_image_rows, Granularity};

fuzz_target!(|data: &[u8]| {
    if let Ok(rows) = read_image_rows(data) {
        let rows: Vec<_> = rows.into_iter().map(|(_, r)| r).collect();
        let back = read_image_rows(write_image_rows(&rows, None).as_bytes()).expect("written rows parse");
        assert_eq!(back.len(), rows.len());
    }
    // the synthetic names are "<k>_<view>", e.g. 0_L-CC
    let ds = synthetic_dataset(3, "fuzz", std::path::Path::new("/nonexistent"));
    if let Ok(set) = load_prediction_bytes(data, &ds, Granularity::Image) {
        for b in &set.breasts {
            assert!((0.0..=1.0).contains(&b.score));
        }
    }
});
