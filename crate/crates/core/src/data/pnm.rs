//! Binary PGM (P5) and PPM (P6) files.

use std::io::Write;
use std::path::Path;

use ndarray::Array2;

use super::{ImageGray, RgbImage};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Pnm {
    Gray(ImageGray),
    Rgb(RgbImage),
}

impl Pnm {
    /// The image itself if gray, otherwise its luminance.
    pub fn into_gray(self) -> ImageGray {
        match self {
            Pnm::Gray(g) => g,
            Pnm::Rgb(rgb) => super::ycbcr_split(&rgb).0,
        }
    }
}

struct Header {
    magic: [u8; 2],
    cols: usize,
    rows: usize,
    maxval: usize,
    data_start: usize,
}

fn parse_header(bytes: &[u8]) -> Result<Header> {
    let magic = match bytes.get(..2) {
        Some(b"P5") => *b"P5",
        Some(b"P6") => *b"P6",
        _ => return Err(Error::Format("not a binary PGM/PPM file (expected P5 or P6)".into())),
    };
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for field in &mut fields {
        loop {
            match bytes.get(pos) {
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&b| b != b'\n') {
                        pos += 1;
                    }
                }
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                _ => break,
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        if start == pos {
            return Err(Error::Format(format!("malformed PNM header at byte {pos}")));
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Format("PNM header value out of range".into()))?;
    }
    if !bytes.get(pos).is_some_and(u8::is_ascii_whitespace) {
        return Err(Error::Format("PNM header not terminated by whitespace".into()));
    }
    let [cols, rows, maxval] = fields;
    if cols == 0 || rows == 0 {
        return Err(Error::Format(format!("PNM image has zero size {rows}x{cols}")));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(Error::Format(format!("PNM maxval {maxval} outside 1..=65535")));
    }
    Ok(Header { magic, cols, rows, maxval, data_start: pos + 1 })
}

pub fn read_pnm(bytes: &[u8]) -> Result<Pnm> {
    let h = parse_header(bytes)?;
    let planes = if &h.magic == b"P5" { 1 } else { 3 };
    let width = if h.maxval > 255 { 2 } else { 1 };
    let need = h.rows * h.cols * planes * width;
    let body = &bytes[h.data_start..];
    if body.len() < need {
        return Err(Error::Format(format!("PNM payload truncated: expected {need} bytes, found {}", body.len())));
    }
    let scale = h.maxval as f64;
    let sample = |i: usize| -> f64 {
        let v = if width == 2 { u16::from_be_bytes([body[2 * i], body[2 * i + 1]]) as f64 } else { body[i] as f64 };
        (v / scale).min(1.0)
    };
    let plane = |p: usize| Array2::from_shape_fn((h.rows, h.cols), |(r, c)| sample((r * h.cols + c) * planes + p));
    Ok(if planes == 1 {
        Pnm::Gray(ImageGray::from_clamped(plane(0)))
    } else {
        Pnm::Rgb(RgbImage::new(plane(0), plane(1), plane(2))?)
    })
}

pub fn read_pnm_file(path: impl AsRef<Path>) -> Result<Pnm> {
    let path = path.as_ref();
    let bytes = std::fs::read(path)?;
    read_pnm(&bytes).map_err(|e| match e {
        Error::Format(m) => Error::Format(format!("{}: {m}", path.display())),
        other => other,
    })
}

fn quantise(p: f64) -> u8 {
    (p.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// 8-bit P5 encoding.
pub fn write_pgm(img: &ImageGray) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.cols(), img.rows()).into_bytes();
    out.extend(img.pixels().iter().map(|&p| quantise(p)));
    out
}

pub fn write_pgm_file(img: &ImageGray, path: impl AsRef<Path>) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(&write_pgm(img))?;
    Ok(())
}

/// 8-bit P6 encoding.
pub fn write_ppm(img: &RgbImage) -> Vec<u8> {
    let (rows, cols) = img.dims();
    let mut out = format!("P6\n{cols} {rows}\n255\n").into_bytes();
    for ((r, g), b) in img.r().iter().zip(img.g()).zip(img.b()) {
        out.extend([quantise(*r), quantise(*g), quantise(*b)]);
    }
    out
}
