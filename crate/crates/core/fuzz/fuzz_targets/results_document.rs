#![no_main]

use libfuzzer_sys::fuzz_target;
use mammoeval::report::ResultsDocument;

fuzz_target!(|data: &[u8]| {
    let Ok(doc) = ResultsDocument::from_bytes(data) else { return };
    let _ = doc.file_name();
    let _ = ResultsDocument::from_bytes(&doc.to_bytes());
});
