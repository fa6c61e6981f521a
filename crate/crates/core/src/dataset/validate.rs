use std::collections::HashMap;
use std::fmt;
use std::path::PathBuf;

use rayon::prelude::*;
use serde::Serialize;

use super::{BreastSide, Dataset};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Warning,
    Fatal,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Finding {
    MissingImage {
        exam: usize,
        short_path: String,
        path: PathBuf,
    },
    ExamWithoutImages {
        exam: usize,
    },
    BreastWithoutImages {
        exam: usize,
        side: BreastSide,
    },
    /// The same shortened path is listed more than once in the dataset.
    DuplicateImage {
        short_path: String,
        exams: Vec<usize>,
    },
}

impl Finding {
    pub fn severity(&self) -> Severity {
        match self {
            Finding::MissingImage { .. } => Severity::Fatal,
            _ => Severity::Warning,
        }
    }
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Finding::MissingImage { exam, path, .. } => {
                write!(f, "image {} for exam {exam} does not exist", path.display())
            }
            Finding::ExamWithoutImages { exam } => write!(f, "exam {exam} has no images"),
            Finding::BreastWithoutImages { exam, side } => {
                write!(f, "{side} breast has no images for exam {exam}")
            }
            Finding::DuplicateImage { short_path, exams } => {
                write!(f, "image {short_path:?} is listed more than once (exams {exams:?})")
            }
        }
    }
}

/// Pre-flight check of a dataset against its image directory.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub findings: Vec<Finding>,
}

impl ValidationReport {
    pub fn errors(&self) -> impl Iterator<Item = &Finding> {
        self.findings
            .iter()
            .filter(|f| f.severity() == Severity::Fatal)
    }

    pub fn warnings(&self) -> impl Iterator<Item = &Finding> {
        self.findings
            .iter()
            .filter(|f| f.severity() == Severity::Warning)
    }

    pub fn is_fatal(&self) -> bool {
        self.errors().next().is_some()
    }
}

/// Checks that every referenced image exists and flags exams or breasts
/// without images. Only missing files are fatal.
pub fn validate_dataset(dataset: &Dataset) -> ValidationReport {
    let mut findings: Vec<Finding> = dataset
        .exams()
        .par_iter()
        .flat_map_iter(|exam| {
            let mut out = Vec::new();
            for (_, _, short) in exam.iter_images() {
                let path = dataset.resolve_image(short);
                if !path.is_file() {
                    out.push(Finding::MissingImage {
                        exam: exam.exam_id(),
                        short_path: short.to_string(),
                        path,
                    });
                }
            }
            if exam.total_images() == 0 {
                out.push(Finding::ExamWithoutImages {
                    exam: exam.exam_id(),
                });
            }
            for side in BreastSide::BOTH {
                if exam.image_count(side) == 0 {
                    out.push(Finding::BreastWithoutImages {
                        exam: exam.exam_id(),
                        side,
                    });
                }
            }
            out
        })
        .collect();

    let mut seen: HashMap<&str, Vec<usize>> = HashMap::new();
    for exam in dataset.exams() {
        for (_, _, short) in exam.iter_images() {
            seen.entry(short).or_default().push(exam.exam_id());
        }
    }
    let mut dups: Vec<_> = seen
        .into_iter()
        .filter(|(_, exams)| exams.len() > 1)
        .map(|(p, exams)| Finding::DuplicateImage {
            short_path: p.to_string(),
            exams,
        })
        .collect();
    dups.sort_by_cached_key(ToString::to_string);
    findings.extend(dups);

    ValidationReport { findings }
}
