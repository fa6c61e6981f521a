//! PNG intake: bit-depth checks and rescaling, horizontal flips, and the
//! dataset mean pixel intensity some models take as a configuration value.

use std::io::Cursor;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::dataset::{Dataset, HorizontalFlip};

/// Mean pixel intensities (0-255 scale) published for the End2end model's
/// configuration. Documentation constants only; the source images are not
/// available, so these cannot be re-derived here.
pub const REFERENCE_MEAN_INTENSITY: [(&str, f64); 6] = [
    ("INbreast", 44.4),
    ("DDSM", 52.18),
    ("CMMD", 18.01),
    ("NYU", 31.28),
    ("OPTIMAM", 35.15),
    ("CSAW-CC", 23.14),
];

const MAX_PNG_BYTES: usize = 512 * 1024 * 1024;

#[derive(Debug, Error)]
pub enum ImageError {
    #[error("unsupported source bit depth {0} (expected 8, 12 or 16)")]
    UnsupportedDepth(u8),
    #[error("pixel value {value} at ({row}, {col}) exceeds the declared {depth}-bit range")]
    ValueOutOfRange {
        value: u16,
        depth: u8,
        row: usize,
        col: usize,
    },
    #[error("{0}")]
    Format(String),
    #[error("8-bit image must be rescaled explicitly (declare source depth 8)")]
    NeedsRescale,
    #[error("dataset has no images")]
    EmptyDataset,
    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: Box<ImageError>,
    },
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Source bit depth of mammogram pixel data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct BitDepth(u8);

impl BitDepth {
    pub const EIGHT: BitDepth = BitDepth(8);
    pub const TWELVE: BitDepth = BitDepth(12);
    pub const SIXTEEN: BitDepth = BitDepth(16);

    pub fn new(bits: u8) -> Result<Self, ImageError> {
        match bits {
            8 | 12 | 16 => Ok(BitDepth(bits)),
            other => Err(ImageError::UnsupportedDepth(other)),
        }
    }

    pub fn bits(self) -> u8 {
        self.0
    }

    pub fn max_value(self) -> u16 {
        ((1u32 << self.0) - 1) as u16
    }
}

/// Row-major 2-D pixel array.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Raster<T> {
    width: usize,
    height: usize,
    data: Vec<T>,
}

impl<T> Raster<T> {
    pub fn from_vec(width: usize, height: usize, data: Vec<T>) -> Option<Self> {
        (width.checked_mul(height)? == data.len()).then_some(Raster {
            width,
            height,
            data,
        })
    }

    pub fn from_rows(rows: Vec<Vec<T>>) -> Option<Self> {
        let height = rows.len();
        let width = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != width) {
            return None;
        }
        let data = rows.into_iter().flatten().collect();
        Raster::from_vec(width, height, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    pub fn row(&self, r: usize) -> &[T] {
        &self.data[r * self.width..(r + 1) * self.width]
    }

    pub fn get(&self, row: usize, col: usize) -> Option<&T> {
        (row < self.height && col < self.width).then(|| &self.data[row * self.width + col])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ImageMeta {
    pub width: u32,
    pub height: u32,
    pub bit_depth: u8,
    pub channels: u8,
}

/// Linearly maps `source_depth` samples onto the full 16-bit range with
/// round-half-up: `v -> round(v * 65535 / (2^d - 1))`. 16-bit input is
/// returned unchanged.
pub fn rescale_to_16bit(pixels: &Raster<u16>, source_depth: BitDepth) -> Result<Raster<u16>, ImageError> {
    let max = source_depth.max_value();
    if let Some(i) = pixels.data.iter().position(|&v| v > max) {
        return Err(ImageError::ValueOutOfRange {
            value: pixels.data[i],
            depth: source_depth.bits(),
            row: i / pixels.width.max(1),
            col: i % pixels.width.max(1),
        });
    }
    if source_depth == BitDepth::SIXTEEN {
        return Ok(pixels.clone());
    }
    let data = pixels
        .data
        .iter()
        .map(|&v| rescale_value(v, max))
        .collect();
    Ok(Raster {
        width: pixels.width,
        height: pixels.height,
        data,
    })
}

fn rescale_value(v: u16, max: u16) -> u16 {
    let (v, max) = (u64::from(v), u64::from(max));
    // floor((2 v 65535 + max) / (2 max)) == round-half-up(v 65535 / max)
    ((2 * v * 65535 + max) / (2 * max)) as u16
}

/// Mirrors every row when `flip` is YES.
pub fn apply_horizontal_flip<T: Clone>(pixels: &Raster<T>, flip: HorizontalFlip) -> Raster<T> {
    match flip {
        HorizontalFlip::No => pixels.clone(),
        HorizontalFlip::Yes => {
            let mut data = pixels.data.clone();
            if pixels.width > 0 {
                for row in data.chunks_mut(pixels.width) {
                    row.reverse();
                }
            }
            Raster {
                width: pixels.width,
                height: pixels.height,
                data,
            }
        }
    }
}

/// Decodes a grayscale PNG into 16-bit samples.
///
/// 16-bit files are taken as-is unless `declared` says the samples only use
/// 12 bits, in which case they are range-checked and rescaled. 8-bit files
/// are rejected unless the caller declares depth 8.
pub fn decode_png(bytes: &[u8], declared: Option<BitDepth>) -> Result<(ImageMeta, Raster<u16>), ImageError> {
    let fmt = |e: png::DecodingError| ImageError::Format(e.to_string());
    let mut decoder = png::Decoder::new_with_limits(
        Cursor::new(bytes),
        png::Limits {
            bytes: MAX_PNG_BYTES,
        },
    );
    decoder.set_transformations(png::Transformations::IDENTITY);
    let mut reader = decoder.read_info().map_err(fmt)?;
    let info = reader.info();
    if info.color_type != png::ColorType::Grayscale {
        return Err(ImageError::Format(format!(
            "expected single-channel grayscale PNG, got {:?}",
            info.color_type
        )));
    }
    let file_depth = match info.bit_depth {
        png::BitDepth::Eight => BitDepth::EIGHT,
        png::BitDepth::Sixteen => BitDepth::SIXTEEN,
        other => {
            return Err(ImageError::Format(format!(
                "unsupported PNG bit depth {other:?}"
            )))
        }
    };
    let (width, height) = (info.width as usize, info.height as usize);
    let mut buf = vec![0; reader.output_buffer_size()];
    let frame = reader.next_frame(&mut buf).map_err(fmt)?;
    buf.truncate(frame.buffer_size());

    let samples: Vec<u16> = match file_depth.bits() {
        8 => buf.iter().map(|&b| u16::from(b)).collect(),
        _ => buf
            .chunks_exact(2)
            .map(|c| u16::from_be_bytes([c[0], c[1]]))
            .collect(),
    };
    let raster = Raster::from_vec(width, height, samples)
        .ok_or_else(|| ImageError::Format("PNG frame size mismatch".into()))?;

    let source = match (file_depth.bits(), declared) {
        (8, Some(d)) if d == BitDepth::EIGHT => d,
        (8, _) => return Err(ImageError::NeedsRescale),
        (_, Some(d)) if d == BitDepth::EIGHT => {
            return Err(ImageError::Format(
                "16-bit PNG declared as 8-bit source".into(),
            ))
        }
        (_, Some(d)) => d,
        (_, None) => BitDepth::SIXTEEN,
    };
    let meta = ImageMeta {
        width: width as u32,
        height: height as u32,
        bit_depth: source.bits(),
        channels: 1,
    };
    Ok((meta, rescale_to_16bit(&raster, source)?))
}

pub fn read_png(path: &Path, declared: Option<BitDepth>) -> Result<(ImageMeta, Raster<u16>), ImageError> {
    let bytes = std::fs::read(path).map_err(|source| ImageError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    decode_png(&bytes, declared).map_err(|e| ImageError::File {
        path: path.to_path_buf(),
        source: Box::new(e),
    })
}

/// Encodes a 16-bit grayscale PNG.
pub fn encode_png16(pixels: &Raster<u16>) -> Vec<u8> {
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, pixels.width as u32, pixels.height as u32);
        enc.set_color(png::ColorType::Grayscale);
        enc.set_depth(png::BitDepth::Sixteen);
        let mut writer = enc.write_header().expect("in-memory PNG header");
        let bytes: Vec<u8> = pixels.data.iter().flat_map(|v| v.to_be_bytes()).collect();
        writer.write_image_data(&bytes).expect("in-memory PNG data");
    }
    out
}

pub fn write_png16(path: &Path, pixels: &Raster<u16>) -> std::io::Result<()> {
    std::fs::write(path, encode_png16(pixels))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntensityStats {
    /// Mean over every pixel of every image, on the 0-255 scale.
    pub mean_pixel_intensity: f64,
    pub pixel_count: u64,
    /// Per-image means in dataset order (exam, then view, then position).
    pub per_image_means: Vec<f64>,
}

/// Mean pixel intensity over all pixels of all images, background included,
/// after projecting 16-bit samples onto 0-255 (`v * 255 / 65535`).
///
/// Sums are exact integers, so the result does not depend on the order in
/// which images are visited.
pub fn compute_mean_intensity(dataset: &Dataset, declared: Option<BitDepth>) -> Result<IntensityStats, ImageError> {
    let paths: Vec<PathBuf> = dataset
        .exams()
        .iter()
        .flat_map(|e| e.iter_images().map(|(_, _, p)| dataset.resolve_image(p)))
        .collect();
    if paths.is_empty() {
        return Err(ImageError::EmptyDataset);
    }
    let per_image: Vec<(u128, u64)> = paths
        .par_iter()
        .map(|p| {
            let (_, raster) = read_png(p, declared)?;
            let sum: u128 = raster.data.iter().map(|&v| u128::from(v)).sum();
            Ok((sum, raster.data.len() as u64))
        })
        .collect::<Result<_, ImageError>>()?;

    let total: u128 = per_image.iter().map(|(s, _)| s).sum();
    let count: u64 = per_image.iter().map(|(_, n)| n).sum();
    if count == 0 {
        return Err(ImageError::EmptyDataset);
    }
    Ok(IntensityStats {
        mean_pixel_intensity: scaled_mean(total, count),
        pixel_count: count,
        per_image_means: per_image
            .iter()
            .map(|&(s, n)| if n == 0 { 0.0 } else { scaled_mean(s, n) })
            .collect(),
    })
}

fn scaled_mean(sum: u128, count: u64) -> f64 {
    // sum * 255 / (65535 * count), reduced by gcd(255, 65535) = 255
    let num = sum;
    let den = 257u128 * u128::from(count);
    let whole = num / den;
    let rem = num % den;
    whole as f64 + rem as f64 / den as f64
}
