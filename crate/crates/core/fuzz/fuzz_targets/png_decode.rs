#![no_main]

use libfuzzer_sys::fuzz_target;
use mammoeval::image::{decode_png, BitDepth};

fuzz_target!(|data: &[u8]| {
    for declared in [None, Some(BitDepth::EIGHT), Some(BitDepth::TWELVE), Some(BitDepth::SIXTEEN)] {
        if let Ok((meta, px)) = decode_png(data, declared) {
            assert_eq!(px.width() * px.height(), px.as_slice().len());
            assert_eq!(px.width(), meta.width as usize);
        }
    }
});
