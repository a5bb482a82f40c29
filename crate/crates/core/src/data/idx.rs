//! Big-endian IDX files as distributed with MNIST.

use std::path::Path;

use ndarray::Array2;

use super::{ImageGray, LabeledDataset};
use crate::error::{Error, Result};

const IMAGE_MAGIC: u32 = 0x0000_0803;
const LABEL_MAGIC: u32 = 0x0000_0801;

fn read_u32(bytes: &[u8], at: usize, what: &str) -> Result<u32> {
    bytes
        .get(at..at + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| Error::Format(format!("{what}: header truncated at byte {}", bytes.len())))
}

fn check_magic(bytes: &[u8], expected: u32, what: &str) -> Result<()> {
    let found = read_u32(bytes, 0, what)?;
    if found != expected {
        return Err(Error::Format(format!("{what}: bad magic: expected 0x{expected:08x}, found 0x{found:08x}")));
    }
    Ok(())
}

fn payload<'a>(bytes: &'a [u8], header: usize, len: usize, what: &str) -> Result<&'a [u8]> {
    let body = &bytes[header..];
    if body.len() < len {
        return Err(Error::Format(format!("{what}: truncated payload: expected {len} bytes, found {}", body.len())));
    }
    if body.len() > len {
        return Err(Error::Format(format!("{what}: {} trailing bytes after payload", body.len() - len)));
    }
    Ok(body)
}

/// Parses an image file; pixels are scaled by 1/255.
pub fn parse_idx_images(bytes: &[u8]) -> Result<Vec<ImageGray>> {
    let what = "IDX images";
    check_magic(bytes, IMAGE_MAGIC, what)?;
    let count = read_u32(bytes, 4, what)? as usize;
    let rows = read_u32(bytes, 8, what)? as usize;
    let cols = read_u32(bytes, 12, what)? as usize;
    let size = rows * cols;
    let body = payload(bytes, 16, count * size, what)?;
    if count > 0 && size == 0 {
        return Err(Error::Format(format!("{what}: zero-sized {rows}x{cols} images")));
    }
    Ok(body
        .chunks_exact(size.max(1))
        .take(count)
        .map(|px| {
            let pixels = Array2::from_shape_fn((rows, cols), |(r, c)| f64::from(px[r * cols + c]) / 255.0);
            ImageGray::from_clamped(pixels)
        })
        .collect())
}

pub fn parse_idx_labels(bytes: &[u8]) -> Result<Vec<u8>> {
    let what = "IDX labels";
    check_magic(bytes, LABEL_MAGIC, what)?;
    let count = read_u32(bytes, 4, what)? as usize;
    Ok(payload(bytes, 8, count, what)?.to_vec())
}

/// Loads a paired image/label file set.
pub fn load_idx(images_path: impl AsRef<Path>, labels_path: impl AsRef<Path>) -> Result<LabeledDataset> {
    let images = parse_idx_images(&std::fs::read(images_path)?)?;
    let labels = parse_idx_labels(&std::fs::read(labels_path)?)?;
    if images.len() != labels.len() {
        return Err(Error::Format(format!("count mismatch: {} images but {} labels", images.len(), labels.len())));
    }
    LabeledDataset::new(images, labels)
}

/// Encodes images of equal size; pixels are rounded to the nearest 1/255.
pub fn write_idx_images(images: &[ImageGray]) -> Result<Vec<u8>> {
    let (rows, cols) = images.first().map_or((0, 0), |i| (i.rows(), i.cols()));
    let mut out = Vec::with_capacity(16 + images.len() * rows * cols);
    for v in [IMAGE_MAGIC, images.len() as u32, rows as u32, cols as u32] {
        out.extend_from_slice(&v.to_be_bytes());
    }
    for img in images {
        if (img.rows(), img.cols()) != (rows, cols) {
            return Err(Error::dims("IDX image", (rows, cols), (img.rows(), img.cols())));
        }
        out.extend(img.pixels().iter().map(|&p| (p * 255.0).round() as u8));
    }
    Ok(out)
}

pub fn write_idx_labels(labels: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + labels.len());
    out.extend_from_slice(&LABEL_MAGIC.to_be_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    out.extend_from_slice(labels);
    out
}
