use std::path::Path;
use std::process::{Command, Output};

use mammoeval::fixture::{write_mock_registry, write_synthetic_fixture, Fixture};

const BIN: &str = env!("CARGO_BIN_EXE_mammoeval");
const MOCK: &str = env!("CARGO_BIN_EXE_mammoeval-mock-model");

fn mammoeval(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

struct Setup {
    _dir: tempfile::TempDir,
    root: std::path::PathBuf,
    fx: Fixture,
    registry: std::path::PathBuf,
}

fn setup(exams: usize) -> Setup {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path().to_path_buf();
    let fx = write_synthetic_fixture(&root, exams, "synthetic").unwrap();
    let registry = write_mock_registry(&root.join("registry"), Path::new(MOCK)).unwrap();
    Setup {
        _dir: dir,
        root,
        fx,
        registry,
    }
}

fn run_args<'a>(s: &'a Setup, model: &'a str, out: &'a Path) -> Vec<&'a str> {
    vec![
        "run",
        "--model",
        model,
        "--image-dir",
        p(&s.fx.image_dir),
        "--metadata",
        p(&s.fx.metadata),
        "--output-dir",
        p(out),
        "--backend",
        "local",
        "--device",
        "cpu",
        "--replicates",
        "200",
        "--registry",
        p(&s.registry),
    ]
}

#[test]
fn validate_accepts_fixture() {
    let s = setup(8);
    let out = mammoeval(&["validate", "--metadata", p(&s.fx.metadata), "--image-dir", p(&s.fx.image_dir), "--mean-intensity"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("8 exams, 32 images, ok"), "{text}");
    assert!(text.contains("mean_pixel_intensity = "), "{text}");
}

#[test]
fn bad_flags_exit_2() {
    assert_eq!(code(&mammoeval(&["validate", "--no-such-flag"])), 2);
    assert_eq!(code(&mammoeval(&["frobnicate"])), 2);
    let s = setup(2);
    let out = mammoeval(&[
        "run", "--model", "mock", "--image-dir", p(&s.fx.image_dir), "--metadata", p(&s.fx.metadata),
        "--output-dir", p(&s.root), "--param", "no-equals-sign", "--registry", p(&s.registry),
    ]);
    assert_eq!(code(&out), 2, "{}", stderr(&out));
    assert!(stderr(&out).starts_with("error[usage]"), "{}", stderr(&out));
}

#[test]
fn malformed_metadata_exits_3() {
    let s = setup(2);
    std::fs::write(&s.fx.metadata, "[{").unwrap();
    let out = mammoeval(&["validate", "--metadata", p(&s.fx.metadata), "--image-dir", p(&s.fx.image_dir)]);
    assert_eq!(code(&out), 3, "{}", stderr(&out));
    assert!(stderr(&out).starts_with("error[metadata]"), "{}", stderr(&out));
}

#[test]
fn missing_image_exits_4() {
    let s = setup(2);
    std::fs::remove_file(s.fx.image_dir.join("1_R-MLO.png")).unwrap();
    let out = mammoeval(&["validate", "--metadata", p(&s.fx.metadata), "--image-dir", p(&s.fx.image_dir)]);
    assert_eq!(code(&out), 4, "{}", stderr(&out));
    assert!(stderr(&out).contains("1_R-MLO"), "{}", stderr(&out));
}

#[test]
fn incomplete_exam_is_incompatible_with_four_view_model() {
    let s = setup(4);
    let text = std::fs::read_to_string(&s.fx.metadata).unwrap();
    let text = text.replacen("\"2_L-MLO\"", "", 1);
    std::fs::write(&s.fx.metadata, text).unwrap();
    let out_dir = s.root.join("out");
    let out = mammoeval(&run_args(&s, "mock-breast", &out_dir));
    assert_eq!(code(&out), 4, "{}", stderr(&out));
    assert!(stderr(&out).starts_with("error[incompatible]"), "{}", stderr(&out));
}

#[test]
fn unknown_model_exits_5() {
    let s = setup(2);
    let out = mammoeval(&run_args(&s, "no-such-model", &s.root.join("out")));
    assert_eq!(code(&out), 5, "{}", stderr(&out));
}

#[test]
fn failing_model_exits_6() {
    let s = setup(4);
    let out = mammoeval(&run_args(&s, "mock-fail", &s.root.join("out")));
    assert_eq!(code(&out), 6, "{}", stderr(&out));
}

fn score(s: &Setup, predictions: &Path, granularity: &str) -> Output {
    mammoeval(&[
        "score",
        "--predictions",
        p(predictions),
        "--metadata",
        p(&s.fx.metadata),
        "--granularity",
        granularity,
        "--output-dir",
        p(&s.root.join("scored")),
        "--replicates",
        "200",
    ])
}

#[test]
fn wrong_header_exits_7() {
    let s = setup(2);
    let csv = s.root.join("preds.csv");
    std::fs::write(&csv, "index,left-malignant,right_malignant\n0,0.1,0.2\n1,0.3,0.4\n").unwrap();
    let out = score(&s, &csv, "breast");
    assert_eq!(code(&out), 7, "{}", stderr(&out));
}

#[test]
fn single_class_dataset_exits_8() {
    // exams 1 and 3 carry no malignant breast
    let s = setup(4);
    let text = std::fs::read_to_string(&s.fx.metadata).unwrap();
    let docs: Vec<serde_json::Value> = serde_json::from_str(&text).unwrap();
    let negatives: Vec<_> = docs.into_iter().skip(1).step_by(2).collect();
    std::fs::write(&s.fx.metadata, serde_json::to_vec(&negatives).unwrap()).unwrap();
    let csv = s.root.join("preds.csv");
    std::fs::write(&csv, "index,left_malignant,right_malignant\n0,0.1,0.2\n1,0.3,0.4\n").unwrap();
    let out = score(&s, &csv, "breast");
    assert_eq!(code(&out), 8, "{}", stderr(&out));
    assert!(stderr(&out).starts_with("error[metric]"), "{}", stderr(&out));
}

#[test]
fn corrupt_image_exits_9() {
    let s = setup(2);
    std::fs::write(s.fx.image_dir.join("0_L-CC.png"), b"not a png").unwrap();
    let out = mammoeval(&["validate", "--metadata", p(&s.fx.metadata), "--image-dir", p(&s.fx.image_dir), "--mean-intensity"]);
    assert_eq!(code(&out), 9, "{}", stderr(&out));
}

#[test]
fn missing_reference_table_exits_10() {
    let s = setup(1);
    let out = mammoeval(&["scoreboard", "--results-dir", p(&s.root), "--reference", p(&s.root.join("absent.csv"))]);
    assert_eq!(code(&out), 10, "{}", stderr(&out));
    let bad = s.root.join("bad.csv");
    std::fs::write(&bad, "dataset,model\n").unwrap();
    let out = mammoeval(&["scoreboard", "--results-dir", p(&s.root), "--reference", p(&bad)]);
    assert_eq!(code(&out), 10, "{}", stderr(&out));
}

#[test]
fn registry_list_shows_shipped_models() {
    let out = mammoeval(&["registry-list"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("GMIC (single)"), "{text}");
    assert!(text.contains("GMIC (top-5 ensemble)"), "{text}");
}

#[test]
fn empty_scoreboard_is_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let out = mammoeval(&["scoreboard", "--results-dir", p(dir.path())]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let md = std::fs::read_to_string(dir.path().join("scoreboard.md")).unwrap();
    assert_eq!(md, stdout(&out));
    let table_rows = md.lines().filter(|l| l.starts_with('|')).count();
    assert_eq!(table_rows, 2, "{md}");
    assert!(md.starts_with("| Dataset | Metric |"), "{md}");
}

#[test]
fn reference_scoreboard_shows_published_cells() {
    let dir = tempfile::tempdir().unwrap();
    let out = mammoeval(&["scoreboard", "--results-dir", p(dir.path()), "--reference", "published"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let md = stdout(&out);
    assert!(md.contains("0.918 (0.883-0.948)"), "{md}");
    assert!(md.contains("NYU Test Set"), "{md}");
}

#[test]
fn run_then_scoreboard_prefers_newest_result() {
    let s = setup(12);
    let results = s.root.join("results");
    let mut args = run_args(&s, "mock", &results);
    let first = mammoeval(&args);
    assert_eq!(code(&first), 0, "{}", stderr(&first));
    assert!(stdout(&first).contains("Mock (oracle) on synthetic"), "{}", stdout(&first));
    args.extend(["--seed", "1"]);
    let second = mammoeval(&args);
    assert_eq!(code(&second), 0, "{}", stderr(&second));

    let out = mammoeval(&["scoreboard", "--results-dir", p(&results), "--registry", p(&s.registry)]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let md = stdout(&out);
    assert!(md.contains("| synthetic | AUC ROC | 1.000 (1.000-1.000)"), "{md}");
    assert!(md.contains("superseded"), "{md}");
    assert!(md.contains("seed1"), "{md}");
}
