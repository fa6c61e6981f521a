#![no_main]

use libfuzzer_sys::fuzz_target;
use mammoeval::registry::parse_param;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        if let Ok((k, v)) = parse_param(s) {
            assert_eq!(format!("{k}={v}"), s);
        }
    }
});
