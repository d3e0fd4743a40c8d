//! Binary PGM (P5) grayscale images, 8 bits per pixel, row-major.

use crate::error::{Error, Result};
use crate::model::SignalGrid;

/// Maps `[lo, hi]` linearly onto `0..=255` (values outside are clamped);
/// a degenerate range maps everything to 128.
pub fn quantize(grid: &SignalGrid, lo: f64, hi: f64) -> Vec<u8> {
    grid.values()
        .iter()
        .map(|&v| {
            if hi > lo {
                (((v - lo) / (hi - lo)).clamp(0.0, 1.0) * 255.0).round() as u8
            } else {
                128
            }
        })
        .collect()
}

pub fn encode(width: usize, height: usize, pixels: &[u8]) -> Vec<u8> {
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(pixels);
    out
}

/// PGM bytes of `grid` scaled by its own minimum and maximum.
pub fn render_grayscale(grid: &SignalGrid) -> Vec<u8> {
    let (lo, hi) = grid.min_max();
    render_with_range(grid, lo, hi)
}

/// PGM bytes of `grid` with an explicit value range.
pub fn render_with_range(grid: &SignalGrid, lo: f64, hi: f64) -> Vec<u8> {
    encode(grid.cols(), grid.rows(), &quantize(grid, lo, hi))
}

/// Decoded P5 image: width, height and pixels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pgm {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
}

/// Parses a P5 image with maxval 255 (comments are not supported).
pub fn decode(bytes: &[u8]) -> Result<Pgm> {
    let bad = |msg: &str| Error::Parse(format!("PGM: {msg}"));
    let mut fields = Vec::with_capacity(4);
    let mut pos = 0;
    while fields.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(bad("truncated header"));
        }
        fields.push(std::str::from_utf8(&bytes[start..pos]).map_err(|_| bad("non-ASCII header"))?);
    }
    if fields[0] != "P5" {
        return Err(bad("not a P5 image"));
    }
    let num = |s: &str| s.parse::<usize>().map_err(|_| bad("bad header number"));
    let (width, height, maxval) = (num(fields[1])?, num(fields[2])?, num(fields[3])?);
    if maxval != 255 {
        return Err(bad("only maxval 255 is supported"));
    }
    let body = bytes.get(pos + 1..).ok_or_else(|| bad("missing pixel data"))?;
    if body.len() != width * height {
        return Err(bad("pixel count does not match header"));
    }
    Ok(Pgm {
        width,
        height,
        pixels: body.to_vec(),
    })
}
