//! Exams, labels and views, and the metadata document that describes a dataset.
//!
//! A metadata document is a UTF-8 JSON array with one record per exam:
//!
//! ```json
//! [
//!   {
//!     "L-CC": ["0_L_CC"],
//!     "R-CC": ["0_R_CC"],
//!     "L-MLO": ["0_L_MLO"],
//!     "R-MLO": ["0_R_MLO"],
//!     "cancer_label": { "left_malignant": 0, "right_malignant": 0 },
//!     "horizontal_flip": "NO"
//!   }
//! ]
//! ```
//!
//! Exams are identified by their position in the array. Image paths are
//! "shortened": relative to the dataset's image directory, optionally without
//! the `.png` extension.

mod metadata;
mod validate;

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use metadata::{decode_exams, encode_exams, parse_metadata, serialize_metadata, MetadataError};
pub use validate::{validate_dataset, Finding, Severity, ValidationReport};

/// One of the four standard screening views.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ViewKey {
    #[serde(rename = "L-CC")]
    LeftCc,
    #[serde(rename = "R-CC")]
    RightCc,
    #[serde(rename = "L-MLO")]
    LeftMlo,
    #[serde(rename = "R-MLO")]
    RightMlo,
}

impl ViewKey {
    /// Document order of the view keys.
    pub const ALL: [ViewKey; 4] = [
        ViewKey::LeftCc,
        ViewKey::RightCc,
        ViewKey::LeftMlo,
        ViewKey::RightMlo,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ViewKey::LeftCc => "L-CC",
            ViewKey::RightCc => "R-CC",
            ViewKey::LeftMlo => "L-MLO",
            ViewKey::RightMlo => "R-MLO",
        }
    }

    pub fn side(self) -> BreastSide {
        match self {
            ViewKey::LeftCc | ViewKey::LeftMlo => BreastSide::Left,
            ViewKey::RightCc | ViewKey::RightMlo => BreastSide::Right,
        }
    }
}

impl fmt::Display for ViewKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ViewKey {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ViewKey::ALL
            .into_iter()
            .find(|v| v.as_str() == s)
            .ok_or_else(|| format!("unknown view key {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BreastSide {
    Left,
    Right,
}

impl BreastSide {
    pub const BOTH: [BreastSide; 2] = [BreastSide::Left, BreastSide::Right];

    pub fn views(self) -> [ViewKey; 2] {
        match self {
            BreastSide::Left => [ViewKey::LeftCc, ViewKey::LeftMlo],
            BreastSide::Right => [ViewKey::RightCc, ViewKey::RightMlo],
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            BreastSide::Left => "left",
            BreastSide::Right => "right",
        }
    }
}

impl fmt::Display for BreastSide {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Per-breast malignancy labels. Values are always 0 or 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CancerLabel {
    left_malignant: u8,
    right_malignant: u8,
}

impl CancerLabel {
    pub fn new(left_malignant: u8, right_malignant: u8) -> Option<Self> {
        (left_malignant <= 1 && right_malignant <= 1).then_some(CancerLabel {
            left_malignant,
            right_malignant,
        })
    }

    pub fn from_bools(left: bool, right: bool) -> Self {
        CancerLabel {
            left_malignant: left as u8,
            right_malignant: right as u8,
        }
    }

    pub fn left_malignant(&self) -> u8 {
        self.left_malignant
    }

    pub fn right_malignant(&self) -> u8 {
        self.right_malignant
    }

    pub fn for_side(&self, side: BreastSide) -> u8 {
        match side {
            BreastSide::Left => self.left_malignant,
            BreastSide::Right => self.right_malignant,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum HorizontalFlip {
    #[serde(rename = "YES")]
    Yes,
    #[default]
    #[serde(rename = "NO")]
    No,
}

impl HorizontalFlip {
    pub fn as_str(self) -> &'static str {
        match self {
            HorizontalFlip::Yes => "YES",
            HorizontalFlip::No => "NO",
        }
    }
}

impl FromStr for HorizontalFlip {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "YES" => Ok(HorizontalFlip::Yes),
            "NO" => Ok(HorizontalFlip::No),
            other => Err(format!("horizontal_flip must be YES or NO, got {other:?}")),
        }
    }
}

/// One screening study.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Exam {
    exam_id: usize,
    views: BTreeMap<ViewKey, Vec<String>>,
    cancer_label: CancerLabel,
    horizontal_flip: HorizontalFlip,
}

impl Exam {
    /// Builds an exam, checking that every shortened path is relative and
    /// free of `..` segments. Views absent from `views` get an empty list.
    pub fn new(
        exam_id: usize,
        views: impl IntoIterator<Item = (ViewKey, Vec<String>)>,
        cancer_label: CancerLabel,
        horizontal_flip: HorizontalFlip,
    ) -> Result<Self, String> {
        let mut map: BTreeMap<ViewKey, Vec<String>> =
            ViewKey::ALL.into_iter().map(|v| (v, Vec::new())).collect();
        for (view, paths) in views {
            for p in &paths {
                check_short_path(p)?;
            }
            map.insert(view, paths);
        }
        Ok(Exam {
            exam_id,
            views: map,
            cancer_label,
            horizontal_flip,
        })
    }

    pub fn exam_id(&self) -> usize {
        self.exam_id
    }

    pub fn views(&self) -> &BTreeMap<ViewKey, Vec<String>> {
        &self.views
    }

    pub fn images(&self, view: ViewKey) -> &[String] {
        self.views.get(&view).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn cancer_label(&self) -> CancerLabel {
        self.cancer_label
    }

    pub fn horizontal_flip(&self) -> HorizontalFlip {
        self.horizontal_flip
    }

    /// Number of images over both views of one breast.
    pub fn image_count(&self, side: BreastSide) -> usize {
        side.views().iter().map(|v| self.images(*v).len()).sum()
    }

    pub fn total_images(&self) -> usize {
        self.views.values().map(Vec::len).sum()
    }

    /// Iterates `(view, position, shortened path)` over all images in
    /// document view order.
    pub fn iter_images(&self) -> impl Iterator<Item = (ViewKey, usize, &str)> {
        ViewKey::ALL.into_iter().flat_map(move |v| {
            self.images(v)
                .iter()
                .enumerate()
                .map(move |(i, p)| (v, i, p.as_str()))
        })
    }

    pub(crate) fn with_id(mut self, exam_id: usize) -> Self {
        self.exam_id = exam_id;
        self
    }
}

fn check_short_path(p: &str) -> Result<(), String> {
    if p.is_empty() {
        return Err("image path is empty".into());
    }
    if p.starts_with('/') || p.starts_with('\\') {
        return Err(format!("image path {p:?} is absolute"));
    }
    if p.split(['/', '\\']).any(|seg| seg == "..") {
        return Err(format!("image path {p:?} contains a parent-directory segment"));
    }
    if p.contains('\0') {
        return Err(format!("image path {p:?} contains a NUL byte"));
    }
    Ok(())
}

/// An ordered list of exams plus the directory their images live in.
///
/// Exam order is authoritative: breast-level predictions are joined to exams
/// by row position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    name: String,
    image_root: PathBuf,
    exams: Vec<Exam>,
}

impl Dataset {
    /// Renumbers exams positionally.
    pub fn new(name: impl Into<String>, image_root: impl Into<PathBuf>, exams: Vec<Exam>) -> Self {
        let exams = exams
            .into_iter()
            .enumerate()
            .map(|(i, e)| e.with_id(i))
            .collect();
        Dataset {
            name: name.into(),
            image_root: image_root.into(),
            exams,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn image_root(&self) -> &Path {
        &self.image_root
    }

    pub fn exams(&self) -> &[Exam] {
        &self.exams
    }

    pub fn len(&self) -> usize {
        self.exams.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exams.is_empty()
    }

    pub fn with_image_root(mut self, root: impl Into<PathBuf>) -> Self {
        self.image_root = root.into();
        self
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Full path of a shortened image path. A `.png` extension is appended
    /// unless the shortened path already ends in one.
    pub fn resolve_image(&self, short: &str) -> PathBuf {
        resolve_image_path(&self.image_root, short)
    }

    pub fn total_images(&self) -> usize {
        self.exams.iter().map(Exam::total_images).sum()
    }
}

pub fn resolve_image_path(root: &Path, short: &str) -> PathBuf {
    let lower = short.to_ascii_lowercase();
    if lower.ends_with(".png") {
        root.join(short)
    } else {
        root.join(format!("{short}.png"))
    }
}
