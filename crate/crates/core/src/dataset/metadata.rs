use std::path::{Path, PathBuf};

use std::fmt;
use std::marker::PhantomData;

use serde::de::value::MapAccessDeserializer;
use serde::de::{MapAccess, Visitor};
use serde::{Deserialize, Deserializer, Serialize};
use thiserror::Error;

use super::{CancerLabel, Dataset, Exam, HorizontalFlip, ViewKey};

#[derive(Debug, Error)]
pub enum MetadataError {
    /// The document is not well-formed JSON.
    #[error("malformed metadata document at line {line}, column {column}: {message}")]
    Decode {
        line: usize,
        column: usize,
        message: String,
    },
    /// Well-formed JSON that does not follow the exam-record schema.
    #[error("metadata schema violation{}: {message}", location(.exam, .line))]
    Schema {
        exam: Option<usize>,
        line: usize,
        message: String,
    },
    #[error("cannot read metadata file {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn location(exam: &Option<usize>, line: &usize) -> String {
    match exam {
        Some(k) => format!(" in exam {k}"),
        None if *line > 0 => format!(" near line {line}"),
        None => String::new(),
    }
}

/// Derived struct impls also accept a JSON array of field values in
/// declaration order. Records here must be objects.
struct ObjectOnly<T>(PhantomData<T>);

impl<'de, T: Deserialize<'de>> Visitor<'de> for ObjectOnly<T> {
    type Value = T;

    fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("a JSON object")
    }

    fn visit_map<A: MapAccess<'de>>(self, map: A) -> Result<T, A::Error> {
        T::deserialize(MapAccessDeserializer::new(map))
    }
}

fn object<'de, D: Deserializer<'de>, T: Deserialize<'de>>(d: D) -> Result<T, D::Error> {
    d.deserialize_map(ObjectOnly(PhantomData))
}

struct Record(RawExam);

impl<'de> Deserialize<'de> for Record {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        object(d).map(Record)
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawExam {
    #[serde(rename = "L-CC")]
    l_cc: Vec<String>,
    #[serde(rename = "R-CC")]
    r_cc: Vec<String>,
    #[serde(rename = "L-MLO")]
    l_mlo: Vec<String>,
    #[serde(rename = "R-MLO")]
    r_mlo: Vec<String>,
    #[serde(deserialize_with = "object")]
    cancer_label: RawLabel,
    horizontal_flip: HorizontalFlip,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLabel {
    left_malignant: i64,
    right_malignant: i64,
}

impl RawExam {
    fn into_exam(self, exam_id: usize) -> Result<Exam, MetadataError> {
        let schema = |message: String| MetadataError::Schema {
            exam: Some(exam_id),
            line: 0,
            message,
        };
        let bit = |name: &str, v: i64| -> Result<u8, MetadataError> {
            match v {
                0 | 1 => Ok(v as u8),
                other => Err(schema(format!("{name} must be 0 or 1, got {other}"))),
            }
        };
        let label = CancerLabel::from_bools(
            bit("left_malignant", self.cancer_label.left_malignant)? == 1,
            bit("right_malignant", self.cancer_label.right_malignant)? == 1,
        );
        Exam::new(
            exam_id,
            [
                (ViewKey::LeftCc, self.l_cc),
                (ViewKey::RightCc, self.r_cc),
                (ViewKey::LeftMlo, self.l_mlo),
                (ViewKey::RightMlo, self.r_mlo),
            ],
            label,
            self.horizontal_flip,
        )
        .map_err(schema)
    }

    fn from_exam(exam: &Exam) -> Self {
        let views = |v| exam.images(v).to_vec();
        RawExam {
            l_cc: views(ViewKey::LeftCc),
            r_cc: views(ViewKey::RightCc),
            l_mlo: views(ViewKey::LeftMlo),
            r_mlo: views(ViewKey::RightMlo),
            cancer_label: RawLabel {
                left_malignant: exam.cancer_label().left_malignant().into(),
                right_malignant: exam.cancer_label().right_malignant().into(),
            },
            horizontal_flip: exam.horizontal_flip(),
        }
    }
}

/// Decodes the exam list of a metadata document. Exam ids are positional.
pub fn decode_exams(bytes: &[u8]) -> Result<Vec<Exam>, MetadataError> {
    let raw: Vec<Record> = serde_json::from_slice(bytes).map_err(|e| {
        use serde_json::error::Category;
        match e.classify() {
            Category::Data => MetadataError::Schema {
                exam: None,
                line: e.line(),
                message: e.to_string(),
            },
            Category::Syntax | Category::Eof | Category::Io => MetadataError::Decode {
                line: e.line(),
                column: e.column(),
                message: e.to_string(),
            },
        }
    })?;
    raw.into_iter()
        .enumerate()
        .map(|(i, r)| r.0.into_exam(i))
        .collect()
}

/// Encodes exams as a pretty-printed metadata document with a trailing newline.
pub fn encode_exams(exams: &[Exam]) -> Vec<u8> {
    let raw: Vec<RawExam> = exams.iter().map(RawExam::from_exam).collect();
    let mut out = serde_json::to_vec_pretty(&raw).expect("exam records always serialize");
    out.push(b'\n');
    out
}

/// Reads a metadata file. The dataset is named after the file stem and its
/// image root defaults to the directory holding the file.
pub fn parse_metadata(path: &Path) -> Result<Dataset, MetadataError> {
    let bytes = std::fs::read(path).map_err(|source| MetadataError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let exams = decode_exams(&bytes)?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".to_string());
    let root = path
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."));
    Ok(Dataset::new(name, root, exams))
}

pub fn serialize_metadata(dataset: &Dataset) -> Vec<u8> {
    encode_exams(dataset.exams())
}
