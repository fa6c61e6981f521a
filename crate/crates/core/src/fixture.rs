//! Synthetic datasets and a mock-model registry, used by the tests and the
//! `demo-fixture` command.

use std::path::{Path, PathBuf};

use crate::dataset::{serialize_metadata, CancerLabel, Dataset, Exam, HorizontalFlip, ViewKey};
use crate::image::{write_png16, Raster};

pub struct Fixture {
    pub dataset: Dataset,
    pub image_dir: PathBuf,
    pub metadata: PathBuf,
}

/// Exam `k`: left breast malignant when `k % 4 == 0`, right when
/// `k % 4 == 2`. Every exam has the four standard views, one 4x4 16-bit
/// image each, named `<k>_<view>`.
pub fn synthetic_dataset(n_exams: usize, name: &str, image_root: &Path) -> Dataset {
    let exams = (0..n_exams)
        .map(|k| {
            Exam::new(
                k,
                ViewKey::ALL.into_iter().map(|v| (v, vec![format!("{k}_{v}")])),
                CancerLabel::from_bools(k % 4 == 0, k % 4 == 2),
                if k % 2 == 0 { HorizontalFlip::No } else { HorizontalFlip::Yes },
            )
            .expect("synthetic exams are well formed")
        })
        .collect();
    Dataset::new(name, image_root, exams)
}

fn synthetic_pixels(exam: usize, view: usize) -> Raster<u16> {
    let data = (0..16u32)
        .map(|i| ((i * 4099 + exam as u32 * 131 + view as u32 * 977) % 65536) as u16)
        .collect();
    Raster::from_vec(4, 4, data).expect("16 pixels")
}

/// Writes images to `dir/images/` and metadata to `dir/<name>.json`.
pub fn write_synthetic_fixture(dir: &Path, n_exams: usize, name: &str) -> std::io::Result<Fixture> {
    let image_dir = dir.join("images");
    std::fs::create_dir_all(&image_dir)?;
    let dataset = synthetic_dataset(n_exams, name, &image_dir);
    for exam in dataset.exams() {
        for (vi, view) in ViewKey::ALL.into_iter().enumerate() {
            for short in exam.images(view) {
                write_png16(&dataset.resolve_image(short), &synthetic_pixels(exam.exam_id(), vi))?;
            }
        }
    }
    let metadata = dir.join(format!("{name}.json"));
    std::fs::write(&metadata, serialize_metadata(&dataset))?;
    Ok(Fixture {
        dataset,
        image_dir,
        metadata,
    })
}

/// Writes descriptors for the mock model into `dir` and returns `dir`.
///
/// `mock` is image-level with variants `oracle`, `anti-oracle` and `noisy`
/// (labels flipped with probability 0.2, seed 7). `mock-breast` is the same
/// at breast level, requiring all four views. `mock-fail` exits with status 3.
pub fn write_mock_registry(dir: &Path, mock_exe: &Path) -> std::io::Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let exe = toml::Value::String(mock_exe.display().to_string());
    let common = format!(
        "container_image = \"mammoeval/mock:latest\"\nlocal_entrypoint = {exe}\n\
         entrypoint_args = [\"{{IMAGE_DIR}}\", \"{{METADATA_PATH}}\", \"{{OUTPUT_PATH}}\", \"{{DEVICE}}\", \
         \"--mode\", \"{{mode}}\", \"--granularity\", \"{{granularity}}\", \"--seed\", \"{{seed}}\", \"--flip-prob\", \"{{flip_prob}}\"]\n"
    );
    let variants = "default_variant = \"oracle\"\n\
        \n[[variants]]\nname = \"oracle\"\ncolumn = \"{D} (oracle)\"\nparams = { mode = \"oracle\" }\n\
        \n[[variants]]\nname = \"anti-oracle\"\ncolumn = \"{D} (anti-oracle)\"\nparams = { mode = \"anti-oracle\" }\n\
        \n[[variants]]\nname = \"noisy\"\ncolumn = \"{D} (noisy)\"\nparams = { mode = \"noisy\" }\n";
    let descriptor = |name: &str, display: &str, position: u32, granularity: &str, four: bool| {
        format!(
            "name = \"{name}\"\ndisplay_name = \"{display}\"\nposition = {position}\ngranularity = \"{granularity}\"\n\
             requires_all_four_views = {four}\n{common}\
             default_params = {{ granularity = \"{granularity}\", seed = \"7\", flip_prob = \"0.2\" }}\n{}",
            variants.replace("{D}", display)
        )
    };
    std::fs::write(dir.join("mock.toml"), descriptor("mock", "Mock", 1, "image", false))?;
    std::fs::write(
        dir.join("mock-breast.toml"),
        descriptor("mock-breast", "Mock breast", 2, "breast", true),
    )?;
    std::fs::write(
        dir.join("mock-fail.toml"),
        format!(
            "name = \"mock-fail\"\nposition = 3\ngranularity = \"image\"\n{}",
            common
                .replace("\"{mode}\"", "\"fail\"")
                .replace("\"{granularity}\"", "\"image\"")
                .replace("\"{seed}\"", "\"0\"")
                .replace("\"{flip_prob}\"", "\"0\"")
        ),
    )?;
    Ok(dir.to_path_buf())
}
