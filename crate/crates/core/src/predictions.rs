//! The two prediction CSV contracts, joining predictions to ground truth, and
//! image-to-breast aggregation.
//!
//! Image-level files:
//!
//! ```text
//! image_index,malignant_pred,malignant_label
//! 0_L-CC,0.0081,1
//! ```
//!
//! Breast-level files (rows join to exams by position, the index column is
//! ignored):
//!
//! ```text
//! index,left_malignant,right_malignant
//! 0,0.0091,0.0179
//! ```
//!
//! Headers must match byte for byte. Fields are comma-separated without
//! quoting, rows end in `\n`. Labels are always taken from the dataset.

use std::collections::{BTreeMap, HashMap};
use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{BreastSide, Dataset, ViewKey};
use crate::metrics::{Level, MetricError, ScoredSample};

pub const IMAGE_HEADER: &str = "image_index,malignant_pred,malignant_label";
pub const BREAST_HEADER: &str = "index,left_malignant,right_malignant";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Granularity {
    Image,
    Breast,
}

impl Granularity {
    pub fn header(self) -> &'static str {
        match self {
            Granularity::Image => IMAGE_HEADER,
            Granularity::Breast => BREAST_HEADER,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Granularity::Image => "image",
            Granularity::Breast => "breast",
        }
    }
}

impl fmt::Display for Granularity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Granularity {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "image" | "image-level" => Ok(Granularity::Image),
            "breast" | "breast-level" => Ok(Granularity::Breast),
            other => Err(format!("unknown granularity {other:?}")),
        }
    }
}

#[derive(Debug, Error)]
pub enum PredictionError {
    #[error("expected header {expected:?}, found {found:?}")]
    Header { expected: &'static str, found: String },
    #[error("prediction file is not valid UTF-8")]
    Encoding,
    #[error("line {line}: {reason} ({value:?})")]
    BadValue {
        line: usize,
        value: String,
        reason: &'static str,
    },
    #[error("line {line}: image {image:?} is not listed in the dataset")]
    UnknownImage { line: usize, image: String },
    #[error("line {line}: image {image:?} is listed in several exams of the dataset")]
    AmbiguousImage { line: usize, image: String },
    #[error("line {line}: image {image:?} was already predicted")]
    DuplicateImage { line: usize, image: String },
    #[error("{rows} prediction rows for {exams} exams")]
    RowCountMismatch { rows: usize, exams: usize },
    #[error("cannot read predictions {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// A row of an image-level file, before joining.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageRow {
    pub image_index: String,
    pub malignant_pred: f64,
    pub malignant_label: u8,
}

/// A row of a breast-level file, before joining.
#[derive(Debug, Clone, PartialEq)]
pub struct BreastRow {
    pub index: String,
    pub left_malignant: f64,
    pub right_malignant: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImagePrediction {
    pub image_index: String,
    pub exam_id: usize,
    pub view: ViewKey,
    pub malignant_pred: f64,
    /// The label of the image's breast in the dataset.
    pub malignant_label: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BreastPrediction {
    pub exam_id: usize,
    pub side: BreastSide,
    pub score: f64,
    pub label: u8,
    pub n_images: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum Exclusion {
    /// The dataset lists no images for this breast.
    NoImages { exam_id: usize, side: BreastSide },
    /// Images exist but none of them received a prediction.
    NoPredictions { exam_id: usize, side: BreastSide },
}

impl fmt::Display for Exclusion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Exclusion::NoImages { exam_id, side } => {
                write!(f, "exam {exam_id} {side} breast excluded: no images")
            }
            Exclusion::NoPredictions { exam_id, side } => {
                write!(f, "exam {exam_id} {side} breast excluded: no image predictions")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PredictionWarning {
    /// The model's label disagrees with the dataset; the dataset wins.
    LabelMismatch {
        line: usize,
        image: String,
        model_label: u8,
        dataset_label: u8,
    },
    /// A dataset image has no prediction row.
    MissingImagePrediction { exam_id: usize, image: String },
}

impl fmt::Display for PredictionWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PredictionWarning::LabelMismatch {
                line,
                image,
                model_label,
                dataset_label,
            } => write!(
                f,
                "line {line}: model label {model_label} for {image:?} differs from dataset label {dataset_label}"
            ),
            PredictionWarning::MissingImagePrediction { exam_id, image } => {
                write!(f, "exam {exam_id}: no prediction for image {image:?}")
            }
        }
    }
}

/// Parsed model output joined to a dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionSet {
    pub granularity: Granularity,
    pub images: Option<Vec<ImagePrediction>>,
    pub breasts: Vec<BreastPrediction>,
    pub exclusions: Vec<Exclusion>,
    pub warnings: Vec<PredictionWarning>,
}

impl PredictionSet {
    /// Samples for the metric at `level`; `None` when the level does not apply.
    pub fn samples(&self, level: Level) -> Option<Result<Vec<ScoredSample>, MetricError>> {
        match level {
            Level::Breast => Some(
                self.breasts
                    .iter()
                    .map(|b| ScoredSample::new(b.score, b.label))
                    .collect(),
            ),
            Level::Image => self.images.as_ref().map(|imgs| {
                imgs.iter()
                    .map(|i| ScoredSample::new(i.malignant_pred, i.malignant_label))
                    .collect()
            }),
        }
    }

    pub fn levels(&self) -> Vec<Level> {
        match self.granularity {
            Granularity::Breast => vec![Level::Breast],
            Granularity::Image => vec![Level::Breast, Level::Image],
        }
    }
}

/// Splits a prediction file into data lines, checking the header.
/// Returns `(line number, line)` pairs; line numbers are 1-based.
fn data_lines<'a>(text: &'a str, header: &'static str) -> Result<Vec<(usize, &'a str)>, PredictionError> {
    let body = text.strip_suffix('\n').unwrap_or(text);
    let mut lines = body.split('\n');
    let first = lines.next().unwrap_or("");
    if first != header {
        return Err(PredictionError::Header {
            expected: header,
            found: first.chars().take(200).collect(),
        });
    }
    if body.len() == header.len() {
        return Ok(Vec::new());
    }
    lines
        .enumerate()
        .map(|(i, l)| {
            if l.is_empty() {
                Err(PredictionError::BadValue {
                    line: i + 2,
                    value: String::new(),
                    reason: "blank line",
                })
            } else {
                Ok((i + 2, l))
            }
        })
        .collect()
}

fn fields<const N: usize>(line: usize, l: &str) -> Result<[&str; N], PredictionError> {
    let parts: Vec<&str> = l.split(',').collect();
    parts.try_into().map_err(|_| PredictionError::BadValue {
        line,
        value: l.chars().take(200).collect(),
        reason: "wrong number of fields",
    })
}

fn probability(line: usize, field: &str) -> Result<f64, PredictionError> {
    let bad = |reason| PredictionError::BadValue {
        line,
        value: field.chars().take(200).collect(),
        reason,
    };
    let looks_decimal = !field.is_empty()
        && field
            .bytes()
            .all(|b| b.is_ascii_digit() || matches!(b, b'.' | b'-' | b'+' | b'e' | b'E'));
    if !looks_decimal {
        return Err(bad("not a decimal number"));
    }
    let v: f64 = field.parse().map_err(|_| bad("not a decimal number"))?;
    if !v.is_finite() || !(0.0..=1.0).contains(&v) {
        return Err(bad("prediction outside [0, 1]"));
    }
    Ok(v)
}

fn binary(line: usize, field: &str) -> Result<u8, PredictionError> {
    match field {
        "0" => Ok(0),
        "1" => Ok(1),
        _ => Err(PredictionError::BadValue {
            line,
            value: field.chars().take(200).collect(),
            reason: "label must be 0 or 1",
        }),
    }
}

fn utf8(bytes: &[u8]) -> Result<&str, PredictionError> {
    std::str::from_utf8(bytes).map_err(|_| PredictionError::Encoding)
}

/// Reads an image-level file without consulting a dataset. Rows are returned
/// with their 1-based line numbers.
pub fn read_image_rows(bytes: &[u8]) -> Result<Vec<(usize, ImageRow)>, PredictionError> {
    data_lines(utf8(bytes)?, IMAGE_HEADER)?
        .into_iter()
        .map(|(line, l)| {
            let [image, pred, label] = fields::<3>(line, l)?;
            if image.is_empty() {
                return Err(PredictionError::BadValue {
                    line,
                    value: String::new(),
                    reason: "empty image_index",
                });
            }
            Ok((
                line,
                ImageRow {
                    image_index: image.to_string(),
                    malignant_pred: probability(line, pred)?,
                    malignant_label: binary(line, label)?,
                },
            ))
        })
        .collect()
}

pub fn read_breast_rows(bytes: &[u8]) -> Result<Vec<BreastRow>, PredictionError> {
    data_lines(utf8(bytes)?, BREAST_HEADER)?
        .into_iter()
        .map(|(line, l)| {
            let [index, left, right] = fields::<3>(line, l)?;
            Ok(BreastRow {
                index: index.to_string(),
                left_malignant: probability(line, left)?,
                right_malignant: probability(line, right)?,
            })
        })
        .collect()
}

fn format_value(v: f64, decimals: Option<usize>) -> String {
    match decimals {
        Some(d) => format!("{v:.d$}"),
        None => format!("{v}"),
    }
}

/// Canonical image-level writer. `decimals = None` writes the shortest
/// representation that parses back to the same value.
pub fn write_image_rows(rows: &[ImageRow], decimals: Option<usize>) -> String {
    let mut out = String::from(IMAGE_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{}",
            r.image_index,
            format_value(r.malignant_pred, decimals),
            r.malignant_label
        );
    }
    out
}

pub fn write_breast_rows(rows: &[BreastRow], decimals: Option<usize>) -> String {
    let mut out = String::from(BREAST_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{}",
            r.index,
            format_value(r.left_malignant, decimals),
            format_value(r.right_malignant, decimals)
        );
    }
    out
}

/// Image-level predictions joined to the dataset, plus label warnings.
pub fn join_image_rows(
    rows: Vec<(usize, ImageRow)>,
    dataset: &Dataset,
) -> Result<(Vec<ImagePrediction>, Vec<PredictionWarning>), PredictionError> {
    let mut index: HashMap<&str, Vec<(usize, ViewKey)>> = HashMap::new();
    for exam in dataset.exams() {
        for (view, _, short) in exam.iter_images() {
            index.entry(short).or_default().push((exam.exam_id(), view));
        }
    }
    let mut seen: HashMap<String, usize> = HashMap::new();
    let mut warnings = Vec::new();
    let mut preds = Vec::with_capacity(rows.len());
    for (line, row) in rows {
        let (exam_id, view) = match index.get(row.image_index.as_str()).map(Vec::as_slice) {
            None | Some([]) => {
                return Err(PredictionError::UnknownImage {
                    line,
                    image: row.image_index,
                })
            }
            Some([one]) => *one,
            Some(_) => {
                return Err(PredictionError::AmbiguousImage {
                    line,
                    image: row.image_index,
                })
            }
        };
        if seen.insert(row.image_index.clone(), line).is_some() {
            return Err(PredictionError::DuplicateImage {
                line,
                image: row.image_index,
            });
        }
        let dataset_label = dataset.exams()[exam_id].cancer_label().for_side(view.side());
        if row.malignant_label != dataset_label {
            warnings.push(PredictionWarning::LabelMismatch {
                line,
                image: row.image_index.clone(),
                model_label: row.malignant_label,
                dataset_label,
            });
        }
        preds.push(ImagePrediction {
            image_index: row.image_index,
            exam_id,
            view,
            malignant_pred: row.malignant_pred,
            malignant_label: dataset_label,
        });
    }
    for exam in dataset.exams() {
        for (_, _, short) in exam.iter_images() {
            if !seen.contains_key(short) {
                warnings.push(PredictionWarning::MissingImagePrediction {
                    exam_id: exam.exam_id(),
                    image: short.to_string(),
                });
            }
        }
    }
    Ok((preds, warnings))
}

pub fn parse_image_csv_bytes(
    bytes: &[u8],
    dataset: &Dataset,
) -> Result<(Vec<ImagePrediction>, Vec<PredictionWarning>), PredictionError> {
    join_image_rows(read_image_rows(bytes)?, dataset)
}

fn read_file(path: &Path) -> Result<Vec<u8>, PredictionError> {
    std::fs::read(path).map_err(|source| PredictionError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn parse_image_csv(
    path: &Path,
    dataset: &Dataset,
) -> Result<(Vec<ImagePrediction>, Vec<PredictionWarning>), PredictionError> {
    parse_image_csv_bytes(&read_file(path)?, dataset)
}

/// Row `k` joins to exam `k`. Breasts the dataset lists no images for are
/// excluded.
pub fn join_breast_rows(
    rows: Vec<BreastRow>,
    dataset: &Dataset,
) -> Result<(Vec<BreastPrediction>, Vec<Exclusion>), PredictionError> {
    if rows.len() != dataset.len() {
        return Err(PredictionError::RowCountMismatch {
            rows: rows.len(),
            exams: dataset.len(),
        });
    }
    let mut preds = Vec::with_capacity(2 * rows.len());
    let mut exclusions = Vec::new();
    for (row, exam) in rows.iter().zip(dataset.exams()) {
        for side in BreastSide::BOTH {
            let n_images = exam.image_count(side);
            if n_images == 0 {
                exclusions.push(Exclusion::NoImages {
                    exam_id: exam.exam_id(),
                    side,
                });
                continue;
            }
            preds.push(BreastPrediction {
                exam_id: exam.exam_id(),
                side,
                score: match side {
                    BreastSide::Left => row.left_malignant,
                    BreastSide::Right => row.right_malignant,
                },
                label: exam.cancer_label().for_side(side),
                n_images,
            });
        }
    }
    Ok((preds, exclusions))
}

pub fn parse_breast_csv_bytes(
    bytes: &[u8],
    dataset: &Dataset,
) -> Result<(Vec<BreastPrediction>, Vec<Exclusion>), PredictionError> {
    join_breast_rows(read_breast_rows(bytes)?, dataset)
}

pub fn parse_breast_csv(
    path: &Path,
    dataset: &Dataset,
) -> Result<(Vec<BreastPrediction>, Vec<Exclusion>), PredictionError> {
    parse_breast_csv_bytes(&read_file(path)?, dataset)
}

/// Averages image predictions per breast: the flat mean over every predicted
/// image of both views. Output is in exam order, left before right; breasts
/// without any prediction are excluded.
pub fn aggregate_to_breast(preds: &[ImagePrediction], dataset: &Dataset) -> (Vec<BreastPrediction>, Vec<Exclusion>) {
    let mut by_breast: BTreeMap<(usize, BreastSide), Vec<f64>> = BTreeMap::new();
    for p in preds {
        by_breast
            .entry((p.exam_id, p.view.side()))
            .or_default()
            .push(p.malignant_pred);
    }
    let mut out = Vec::new();
    let mut exclusions = Vec::new();
    for exam in dataset.exams() {
        for side in BreastSide::BOTH {
            let key = (exam.exam_id(), side);
            match by_breast.get_mut(&key) {
                Some(scores) if !scores.is_empty() => {
                    out.push(BreastPrediction {
                        exam_id: exam.exam_id(),
                        side,
                        score: mean(scores),
                        label: exam.cancer_label().for_side(side),
                        n_images: scores.len(),
                    });
                }
                _ if exam.image_count(side) == 0 => exclusions.push(Exclusion::NoImages {
                    exam_id: exam.exam_id(),
                    side,
                }),
                _ => exclusions.push(Exclusion::NoPredictions {
                    exam_id: exam.exam_id(),
                    side,
                }),
            }
        }
    }
    (out, exclusions)
}

/// Order-independent mean: values are summed in sorted order and the result
/// is clamped to the observed range.
fn mean(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let sum: f64 = values.iter().sum();
    let m = sum / values.len() as f64;
    m.clamp(values[0], values[values.len() - 1])
}

/// Parses a prediction file under the declared granularity and joins it to
/// the dataset, aggregating image-level scores to breasts.
pub fn load_prediction_bytes(
    bytes: &[u8],
    dataset: &Dataset,
    granularity: Granularity,
) -> Result<PredictionSet, PredictionError> {
    match granularity {
        Granularity::Breast => {
            let (breasts, exclusions) = parse_breast_csv_bytes(bytes, dataset)?;
            Ok(PredictionSet {
                granularity,
                images: None,
                breasts,
                exclusions,
                warnings: Vec::new(),
            })
        }
        Granularity::Image => {
            let (images, warnings) = parse_image_csv_bytes(bytes, dataset)?;
            let (breasts, exclusions) = aggregate_to_breast(&images, dataset);
            Ok(PredictionSet {
                granularity,
                images: Some(images),
                breasts,
                exclusions,
                warnings,
            })
        }
    }
}

pub fn load_predictions(
    path: &Path,
    dataset: &Dataset,
    granularity: Granularity,
) -> Result<PredictionSet, PredictionError> {
    load_prediction_bytes(&read_file(path)?, dataset, granularity)
}
