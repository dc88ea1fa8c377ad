//! IDX files as distributed with MNIST: a big-endian u32 magic, one u32 per
//! dimension, then unsigned bytes in row-major order.

use std::path::Path;

use crate::error::{Error, Result};
use crate::neural::Matrix;

pub const IMAGES_MAGIC: u32 = 0x0000_0803;
pub const LABELS_MAGIC: u32 = 0x0000_0801;

/// `n` images of `h x w x c` pixels in [0, 1], one image per row.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageBatch {
    pub n: usize,
    pub h: usize,
    pub w: usize,
    pub c: usize,
    pub pixels: Vec<f32>,
    pub labels: Option<Vec<u8>>,
}

impl ImageBatch {
    pub fn new(n: usize, h: usize, w: usize, c: usize, pixels: Vec<f32>) -> Result<Self> {
        if pixels.len() != n * h * w * c {
            return Err(Error::size(
                format!("{n} images of {h}x{w}x{c}"),
                format!("{} pixel values", pixels.len()),
            ));
        }
        if let Some(pos) = pixels.iter().position(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::InvalidPoints(format!(
                "pixel {} of image {} is {}, outside [0, 1]",
                pos % (h * w * c),
                pos / (h * w * c),
                pixels[pos]
            )));
        }
        Ok(Self {
            n,
            h,
            w,
            c,
            pixels,
            labels: None,
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn pixel_dim(&self) -> usize {
        self.h * self.w * self.c
    }

    pub fn image(&self, i: usize) -> &[f32] {
        let d = self.pixel_dim();
        &self.pixels[i * d..(i + 1) * d]
    }

    pub fn select(&self, indices: &[usize]) -> Self {
        let mut pixels = Vec::with_capacity(indices.len() * self.pixel_dim());
        for &i in indices {
            pixels.extend_from_slice(self.image(i));
        }
        Self {
            n: indices.len(),
            h: self.h,
            w: self.w,
            c: self.c,
            pixels,
            labels: self
                .labels
                .as_ref()
                .map(|l| indices.iter().map(|&i| l[i]).collect()),
        }
    }

    pub fn to_matrix(&self) -> Matrix<f32> {
        Matrix::new(self.n, self.pixel_dim(), self.pixels.clone()).expect("consistent shape")
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        self.pixels
            .iter()
            .map(|&v| (v * 255.0).round().clamp(0.0, 255.0) as u8)
            .collect()
    }
}

fn read_u32(bytes: &[u8], offset: usize) -> Result<u32> {
    bytes
        .get(offset..offset + 4)
        .map(|b| u32::from_be_bytes(b.try_into().expect("4 bytes")))
        .ok_or(Error::TruncatedFile {
            expected: offset + 4,
            found: bytes.len(),
        })
}

fn check_magic(bytes: &[u8], expected: u32) -> Result<()> {
    let found = read_u32(bytes, 0)?;
    if found != expected {
        return Err(Error::BadMagic { found, expected });
    }
    Ok(())
}

/// Decodes an image file held in memory. Pixels are scaled by 1/255.
pub fn parse_images(bytes: &[u8]) -> Result<ImageBatch> {
    check_magic(bytes, IMAGES_MAGIC)?;
    let n = read_u32(bytes, 4)? as usize;
    let h = read_u32(bytes, 8)? as usize;
    let w = read_u32(bytes, 12)? as usize;
    let expected = 16 + n * h * w;
    if bytes.len() < expected {
        return Err(Error::TruncatedFile {
            expected,
            found: bytes.len(),
        });
    }
    let pixels = bytes[16..expected]
        .iter()
        .map(|&b| b as f32 / 255.0)
        .collect();
    ImageBatch::new(n, h, w, 1, pixels)
}

pub fn parse_labels(bytes: &[u8]) -> Result<Vec<u8>> {
    check_magic(bytes, LABELS_MAGIC)?;
    let n = read_u32(bytes, 4)? as usize;
    let expected = 8 + n;
    if bytes.len() < expected {
        return Err(Error::TruncatedFile {
            expected,
            found: bytes.len(),
        });
    }
    Ok(bytes[8..expected].to_vec())
}

/// Loads an image file and, optionally, the matching label file.
pub fn load_idx(images: impl AsRef<Path>, labels: Option<&Path>) -> Result<ImageBatch> {
    let mut batch = parse_images(&std::fs::read(images)?)?;
    if let Some(path) = labels {
        let labels = parse_labels(&std::fs::read(path)?)?;
        if labels.len() != batch.n {
            return Err(Error::CountMismatch {
                images: batch.n,
                labels: labels.len(),
            });
        }
        batch.labels = Some(labels);
    }
    Ok(batch)
}

pub fn encode_images(n: usize, h: usize, w: usize, pixels: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + pixels.len());
    for v in [IMAGES_MAGIC, n as u32, h as u32, w as u32] {
        out.extend_from_slice(&v.to_be_bytes());
    }
    out.extend_from_slice(pixels);
    out
}

pub fn encode_labels(labels: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + labels.len());
    out.extend_from_slice(&LABELS_MAGIC.to_be_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    out.extend_from_slice(labels);
    out
}
