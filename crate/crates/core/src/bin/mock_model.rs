//! Stand-in model speaking the harness's model contract:
//! `mammoeval-mock-model IMAGE_DIR METADATA OUTPUT DEVICE [options]`.
//!
//! Every listed image is decoded, so a broken image directory fails the run
//! the same way it would for a real model.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, ValueEnum};
use mammoeval::dataset::{parse_metadata, BreastSide, Dataset};
use mammoeval::image::read_png;
use mammoeval::predictions::{write_breast_rows, write_image_rows, BreastRow, Granularity, ImageRow};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Mode {
    /// Score equals the label.
    Oracle,
    /// Score equals one minus the label.
    AntiOracle,
    /// Label flipped with probability `--flip-prob`.
    Noisy,
    /// Exit with `--exit-code` after writing to stderr.
    Fail,
    /// Write only the header line.
    HeadersOnly,
    /// Exit successfully without writing anything.
    NoOutput,
    /// Sleep for an hour.
    Sleep,
}

#[derive(Debug, Parser)]
struct Args {
    image_dir: PathBuf,
    metadata: PathBuf,
    output: PathBuf,
    device: String,
    #[arg(long, value_enum, default_value = "oracle")]
    mode: Mode,
    #[arg(long, default_value = "image")]
    granularity: Granularity,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long, default_value_t = 0.2)]
    flip_prob: f64,
    #[arg(long, default_value_t = 3)]
    exit_code: u8,
}

fn load(args: &Args) -> Result<Dataset, String> {
    let ds = parse_metadata(&args.metadata)
        .map_err(|e| e.to_string())?
        .with_image_root(&args.image_dir);
    for exam in ds.exams() {
        for (_, _, short) in exam.iter_images() {
            let path = ds.resolve_image(short);
            read_png(&path, None).map_err(|e| format!("{}: {e}", path.display()))?;
        }
    }
    Ok(ds)
}

fn main() -> ExitCode {
    let args = Args::parse();
    if !["cpu", "gpu"].contains(&args.device.as_str()) {
        eprintln!("unknown device {:?}", args.device);
        return ExitCode::from(2);
    }
    match args.mode {
        Mode::Fail => {
            eprintln!("mock model failing on purpose");
            return ExitCode::from(args.exit_code);
        }
        Mode::Sleep => {
            std::thread::sleep(Duration::from_secs(3600));
            return ExitCode::SUCCESS;
        }
        Mode::NoOutput => return ExitCode::SUCCESS,
        _ => {}
    }
    let ds = match load(&args) {
        Ok(ds) => ds,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(1);
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let mut score = |label: u8| -> f64 {
        let l = f64::from(label);
        match args.mode {
            Mode::AntiOracle => 1.0 - l,
            Mode::Noisy if rng.gen_bool(args.flip_prob) => 1.0 - l,
            _ => l,
        }
    };
    let body = match (args.mode, args.granularity) {
        (Mode::HeadersOnly, g) => format!("{}\n", g.header()),
        (_, Granularity::Image) => {
            let mut rows = Vec::new();
            for exam in ds.exams() {
                for (view, _, short) in exam.iter_images() {
                    let label = exam.cancer_label().for_side(view.side());
                    rows.push(ImageRow {
                        image_index: short.to_string(),
                        malignant_pred: score(label),
                        malignant_label: label,
                    });
                }
            }
            write_image_rows(&rows, Some(4))
        }
        (_, Granularity::Breast) => {
            let rows: Vec<BreastRow> = ds
                .exams()
                .iter()
                .map(|exam| {
                    let [l, r] = BreastSide::BOTH.map(|s| score(exam.cancer_label().for_side(s)));
                    BreastRow {
                        index: exam.exam_id().to_string(),
                        left_malignant: l,
                        right_malignant: r,
                    }
                })
                .collect();
            write_breast_rows(&rows, Some(4))
        }
    };
    if let Err(e) = std::fs::write(&args.output, body) {
        eprintln!("{}: {e}", args.output.display());
        return ExitCode::from(1);
    }
    ExitCode::SUCCESS
}
