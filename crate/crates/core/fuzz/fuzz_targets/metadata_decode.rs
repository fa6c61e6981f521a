#![no_main]

use libfuzzer_sys::fuzz_target;
use mammoeval::dataset::{decode_exams, encode_exams};

fuzz_target!(|data: &[u8]| {
    let Ok(exams) = decode_exams(data) else { return };
    let again = decode_exams(&encode_exams(&exams)).expect("encoded metadata decodes");
    assert_eq!(again, exams);
});
