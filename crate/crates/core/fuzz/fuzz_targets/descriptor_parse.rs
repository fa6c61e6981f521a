#![no_main]

use std::path::PathBuf;

use libfuzzer_sys::fuzz_target;
use mammoeval::registry::{resolve_invocation, InvocationPaths, ModelDescriptor, ParamBundle};
use mammoeval::runner::{Device, ExecutionBackend};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(desc) = ModelDescriptor::parse(text, "fuzz.toml") else { return };
    let paths = InvocationPaths {
        image_dir: PathBuf::from("/data/images"),
        metadata: PathBuf::from("/data/metadata.json"),
        output: PathBuf::from("/out/predictions.csv"),
    };
    for backend in [ExecutionBackend::Container, ExecutionBackend::LocalProcess] {
        if let Ok(inv) = resolve_invocation(&desc, None, &ParamBundle::new(), &paths, Device::Cpu, backend) {
            assert_eq!(inv.resolve_again().expect("resolved args are placeholder free"), inv.args);
        }
    }
});
