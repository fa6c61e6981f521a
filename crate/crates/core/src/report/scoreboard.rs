use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};

use super::ResultsDocument;
use crate::metrics::{Level, Metric};
use crate::registry::Registry;
use crate::runner::RunManifest;

/// Rows in the order of the published results table. Other datasets follow
/// alphabetically.
pub const FIXED_DATASET_ORDER: [&str; 7] = [
    "NYU Reader Study",
    "NYU Test Set",
    "INbreast",
    "DDSM",
    "CMMD",
    "OPTIMAM",
    "CSAW-CC",
];

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreboardEntry {
    pub doc: ResultsDocument,
    /// Taken from the referenced run manifest, if there is one.
    pub finished_at: Option<DateTime<Utc>>,
    /// Location relative to the results directory (or a pseudo-path for
    /// static data).
    pub path: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Column {
    pub model: String,
    pub variant: Option<String>,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scoreboard {
    pub datasets: Vec<String>,
    pub columns: Vec<Column>,
    cells: BTreeMap<(String, String), ScoreboardEntry>,
    pub footnotes: Vec<String>,
}

impl Scoreboard {
    /// Breast-level cell for (dataset, column label), `"N/A"` when absent.
    pub fn cell(&self, dataset: &str, column: &str, metric: Metric) -> String {
        self.cells
            .get(&(dataset.to_string(), column.to_string()))
            .and_then(|e| e.doc.metric(metric, Level::Breast))
            .map(|r| r.cell())
            .unwrap_or_else(|| "N/A".to_string())
    }

    pub fn entry(&self, dataset: &str, column: &str) -> Option<&ScoreboardEntry> {
        self.cells.get(&(dataset.to_string(), column.to_string()))
    }
}

fn find_results(dir: &Path, out: &mut Vec<PathBuf>) -> std::io::Result<()> {
    for entry in std::fs::read_dir(dir)? {
        let entry = entry?;
        let path = entry.path();
        if entry.file_type()?.is_dir() {
            find_results(&path, out)?;
        } else {
            let name = entry.file_name();
            let name = name.to_string_lossy();
            if name.starts_with("results-") && name.ends_with(".json") {
                out.push(path);
            }
        }
    }
    Ok(())
}

/// Collects every `results-*.json` below `dir`. Files that do not parse as
/// results documents are skipped with a warning.
pub fn load_results_dir(dir: &Path) -> std::io::Result<Vec<ScoreboardEntry>> {
    let mut paths = Vec::new();
    find_results(dir, &mut paths)?;
    paths.sort();
    let mut entries = Vec::new();
    for path in paths {
        let bytes = std::fs::read(&path)?;
        let doc = match ResultsDocument::from_bytes(&bytes) {
            Ok(doc) => doc,
            Err(e) => {
                log::warn!("skipping {}: {e}", path.display());
                continue;
            }
        };
        let finished_at = doc.manifest.as_ref().and_then(|m| {
            let manifest = path.parent().unwrap_or(dir).join(m);
            RunManifest::read(&manifest).ok().map(|m| m.finished_at)
        });
        let rel = path.strip_prefix(dir).unwrap_or(&path);
        entries.push(ScoreboardEntry {
            doc,
            finished_at,
            path: rel.to_string_lossy().replace('\\', "/"),
        });
    }
    Ok(entries)
}

fn describe(e: &ScoreboardEntry) -> String {
    let when = e
        .finished_at
        .map(|t| crate::runner::timestamp(&t))
        .unwrap_or_else(|| "no timestamp".into());
    match e.doc.master_seed() {
        Some(seed) => format!("`{}` (seed {seed}, {when})", e.path),
        None => format!("`{}` ({when})", e.path),
    }
}

/// Arranges results into a table. Where several documents share a
/// (dataset, column) cell the one with the latest manifest timestamp is
/// shown, ties broken by path, and the others are listed as footnotes.
pub fn build_scoreboard(entries: Vec<ScoreboardEntry>, registry: &Registry) -> Scoreboard {
    let mut grouped: BTreeMap<(String, String), Vec<ScoreboardEntry>> = BTreeMap::new();
    for e in entries {
        grouped
            .entry((e.doc.dataset.clone(), e.doc.column.clone()))
            .or_default()
            .push(e);
    }

    let mut columns: Vec<Column> = Vec::new();
    let present: BTreeSet<&str> = grouped.keys().map(|(_, c)| c.as_str()).collect();
    for desc in registry.models() {
        let variants: Vec<(Option<&str>, bool)> = if desc.variants.is_empty() {
            vec![(None, true)]
        } else {
            desc.variants
                .iter()
                .map(|v| (Some(v.name.as_str()), v.scoreboard))
                .collect()
        };
        for (variant, shown) in variants {
            let label = desc.column_label(variant);
            if shown || present.contains(label.as_str()) {
                columns.push(Column {
                    model: desc.name.clone(),
                    variant: variant.map(str::to_string),
                    label,
                });
            }
        }
    }
    let mut extra: BTreeMap<String, Column> = BTreeMap::new();
    for group in grouped.values() {
        let doc = &group[0].doc;
        if !columns.iter().any(|c| c.label == doc.column) {
            extra.entry(doc.column.clone()).or_insert_with(|| Column {
                model: doc.model.clone(),
                variant: doc.variant.clone(),
                label: doc.column.clone(),
            });
        }
    }
    columns.extend(extra.into_values());

    let found: BTreeSet<&str> = grouped.keys().map(|(d, _)| d.as_str()).collect();
    let mut datasets: Vec<String> = FIXED_DATASET_ORDER.iter().map(|d| d.to_string()).collect();
    datasets.extend(
        found
            .iter()
            .filter(|d| !FIXED_DATASET_ORDER.contains(d))
            .map(|d| d.to_string()),
    );

    let mut cells = BTreeMap::new();
    let mut footnotes = Vec::new();
    for (key, mut group) in grouped {
        group.sort_by(|a, b| (a.finished_at, &a.path).cmp(&(b.finished_at, &b.path)));
        let winner = group.pop().expect("groups are non-empty");
        if !group.is_empty() {
            let older: Vec<String> = group.iter().rev().map(describe).collect();
            footnotes.push(format!(
                "{} on {}: showing {}; superseded {}.",
                key.1,
                key.0,
                describe(&winner),
                older.join(", ")
            ));
        }
        cells.insert(key, winner);
    }

    Scoreboard {
        datasets,
        columns,
        cells,
        footnotes,
    }
}

fn escape(s: &str) -> String {
    s.replace('|', "\\|")
}

/// Markdown table with one AUC ROC and one AUC PR row per dataset.
/// Datasets with no results are left out; an empty scoreboard renders the
/// header only.
pub fn render_markdown(board: &Scoreboard) -> String {
    let mut out = String::from("| Dataset | Metric |");
    for c in &board.columns {
        let _ = write!(out, " {} |", escape(&c.label));
    }
    out.push_str("\n|---|---|");
    for _ in &board.columns {
        out.push_str("---|");
    }
    out.push('\n');
    for dataset in &board.datasets {
        if !board.cells.keys().any(|(d, _)| d == dataset) {
            continue;
        }
        for metric in Metric::ALL {
            let name = match metric {
                Metric::AucRoc => "AUC ROC",
                Metric::AucPr => "AUC PR",
            };
            let _ = write!(out, "| {} | {name} |", escape(dataset));
            for c in &board.columns {
                let _ = write!(out, " {} |", board.cell(dataset, &c.label, metric));
            }
            out.push('\n');
        }
    }
    if !board.footnotes.is_empty() {
        out.push('\n');
        for (i, note) in board.footnotes.iter().enumerate() {
            let _ = writeln!(out, "{}. {}", i + 1, escape(note));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::report::{published_documents, write_results_document};
    use crate::runner::{Device, ExecutionBackend, RunOutcome};

    fn entry(doc: ResultsDocument, path: &str, finished: Option<i64>) -> ScoreboardEntry {
        ScoreboardEntry {
            doc,
            finished_at: finished.map(|s| DateTime::from_timestamp(s, 0).unwrap()),
            path: path.into(),
        }
    }

    #[test]
    fn empty_board_is_header_only() {
        let board = build_scoreboard(vec![], &Registry::shipped());
        let md = render_markdown(&board);
        assert_eq!(md.lines().count(), 2);
        assert!(md.starts_with("| Dataset | Metric | End2end (DDSM) | End2end (INbreast) | Faster R-CNN | DMV-CNN | GMIC (single) | GMIC (top-5 ensemble) | GLAM |"));
    }

    #[test]
    fn published_values_render_verbatim() {
        let entries = published_documents(&Registry::shipped())
            .into_iter()
            .map(|d| entry(d, "reference", None))
            .collect();
        let board = build_scoreboard(entries, &Registry::shipped());
        assert_eq!(board.cell("NYU Reader Study", "GMIC (single)", Metric::AucRoc), "0.857 (0.802-0.902)");
        assert_eq!(board.cell("NYU Test Set", "GMIC (top-5 ensemble)", Metric::AucRoc), "0.918 (0.883-0.948)");
        assert_eq!(board.cell("DDSM", "Faster R-CNN", Metric::AucRoc), "N/A");
        let md = render_markdown(&board);
        assert!(md.contains("0.857 (0.802-0.902)"));
        assert_eq!(md.lines().count(), 2 + 14);
        assert!(board.footnotes.is_empty());
    }

    #[test]
    fn newest_result_wins() {
        let mut a = crate::report::tests::doc("m", "Private", 0.7);
        a.evaluation = Some(crate::metrics::EvaluationConfig::with_seed(1));
        let mut b = crate::report::tests::doc("m", "Private", 0.8);
        b.evaluation = Some(crate::metrics::EvaluationConfig::with_seed(2));
        let board = build_scoreboard(
            vec![entry(b.clone(), "b/results.json", Some(100)), entry(a.clone(), "a/results.json", Some(200))],
            &Registry::shipped(),
        );
        assert_eq!(board.entry("Private", "m").unwrap().path, "a/results.json");
        assert_eq!(board.footnotes.len(), 1);
        assert!(board.footnotes[0].contains("superseded `b/results.json` (seed 2"));
        assert_eq!(board.datasets.last().unwrap(), "Private");
        assert_eq!(board.columns.last().unwrap().label, "m");
    }

    #[test]
    fn loads_documents_and_manifest_times() {
        let dir = tempfile::tempdir().unwrap();
        let run = dir.path().join("run1");
        let mut d = crate::report::tests::doc("m", "Private", 0.7);
        d.manifest = Some("manifest.json".into());
        write_results_document(&run, &d).unwrap();
        let t = DateTime::from_timestamp(1_700_000_000, 0).unwrap();
        RunManifest {
            model: "m".into(),
            variant: None,
            dataset: "Private".into(),
            device: Device::Cpu,
            backend: ExecutionBackend::LocalProcess,
            container_image: "img".into(),
            args: vec![],
            started_at: t,
            finished_at: t,
            exit_status: Some(0),
            outcome: RunOutcome::Success,
            metadata_sha256: String::new(),
            output_sha256: None,
            master_seed: 0,
            harness_version: "x".into(),
        }
        .write_atomic(&run.join("manifest.json"))
        .unwrap();
        std::fs::write(dir.path().join("results-broken.json"), "{").unwrap();
        let entries = load_results_dir(dir.path()).unwrap();
        assert_eq!(entries.len(), 1);
        assert_eq!(entries[0].finished_at, Some(t));
        assert!(entries[0].path.starts_with("run1/results-"));
        let first = render_markdown(&build_scoreboard(entries, &Registry::shipped()));
        let again = render_markdown(&build_scoreboard(load_results_dir(dir.path()).unwrap(), &Registry::shipped()));
        assert_eq!(first, again);
    }
}
