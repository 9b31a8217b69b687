//! MNIST in the IDX container format, plus the label-shift task transform.
//!
//! Images: big-endian `u32` magic 2051, count, rows, cols, then
//! `count·rows·cols` pixel bytes. Labels: magic 2049, count, then `count`
//! bytes in 0..=9. Gzipped files are detected by their header and inflated
//! before parsing; error offsets always refer to the inflated stream.

use std::io::Read;
use std::path::Path;

use flate2::read::GzDecoder;

use crate::error::{Error, ParseErrorKind, Result};

pub const IMAGE_MAGIC: u32 = 2051;
pub const LABEL_MAGIC: u32 = 2049;
pub const SIDE: usize = 28;
pub const PIXELS: usize = SIDE * SIDE;
pub const CLASSES: usize = 10;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageSet {
    rows: usize,
    cols: usize,
    bytes: Vec<u8>,
}

impl ImageSet {
    pub fn from_bytes(count: usize, bytes: Vec<u8>) -> Result<Self> {
        if bytes.len() != count * PIXELS {
            return Err(Error::DimensionMismatch {
                context: "image payload",
                expected: count * PIXELS,
                actual: bytes.len(),
            });
        }
        Ok(ImageSet {
            rows: SIDE,
            cols: SIDE,
            bytes,
        })
    }

    pub fn len(&self) -> usize {
        self.bytes.len() / (self.rows * self.cols)
    }

    pub fn is_empty(&self) -> bool {
        self.bytes.is_empty()
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn raw(&self, index: usize) -> &[u8] {
        let n = self.rows * self.cols;
        &self.bytes[index * n..(index + 1) * n]
    }

    /// Pixels of one image scaled to [0, 1] (`byte / 255`).
    pub fn image(&self, index: usize) -> Vec<f64> {
        self.raw(index).iter().map(|&b| b as f64 / 255.0).collect()
    }

    pub fn pixel(&self, index: usize, offset: usize) -> f64 {
        self.raw(index)[offset] as f64 / 255.0
    }

    /// First `count` images.
    pub fn truncated(&self, count: usize) -> ImageSet {
        let n = self.rows * self.cols;
        ImageSet {
            rows: self.rows,
            cols: self.cols,
            bytes: self.bytes[..count.min(self.len()) * n].to_vec(),
        }
    }

    pub fn to_idx(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(16 + self.bytes.len());
        for v in [IMAGE_MAGIC, self.len() as u32, self.rows as u32, self.cols as u32] {
            out.extend_from_slice(&v.to_be_bytes());
        }
        out.extend_from_slice(&self.bytes);
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelSet {
    labels: Vec<u8>,
}

impl LabelSet {
    pub fn new(labels: Vec<u8>) -> Result<Self> {
        if let Some(pos) = labels.iter().position(|&l| l as usize >= CLASSES) {
            return Err(Error::parse(
                8 + pos,
                ParseErrorKind::LabelOutOfRange { label: labels[pos] },
            ));
        }
        Ok(LabelSet { labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn get(&self, index: usize) -> usize {
        self.labels[index] as usize
    }

    pub fn truncated(&self, count: usize) -> LabelSet {
        LabelSet {
            labels: self.labels[..count.min(self.len())].to_vec(),
        }
    }

    pub fn to_idx(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(8 + self.labels.len());
        out.extend_from_slice(&LABEL_MAGIC.to_be_bytes());
        out.extend_from_slice(&(self.labels.len() as u32).to_be_bytes());
        out.extend_from_slice(&self.labels);
        out
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let available = self.bytes.len() - self.pos;
        if available < n {
            return Err(Error::parse(
                self.pos,
                ParseErrorKind::Truncated {
                    needed: n,
                    available,
                },
            ));
        }
        let out = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32> {
        let b = self.take(4)?;
        Ok(u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn magic(&mut self, expected: u32) -> Result<()> {
        let found = self.u32()?;
        if found != expected {
            return Err(Error::parse(0, ParseErrorKind::BadMagic { expected, found }));
        }
        Ok(())
    }

    fn finish(&self) -> Result<()> {
        let extra = self.bytes.len() - self.pos;
        if extra > 0 {
            return Err(Error::parse(self.pos, ParseErrorKind::TrailingBytes { extra }));
        }
        Ok(())
    }
}

pub fn parse_idx_images(bytes: &[u8]) -> Result<ImageSet> {
    let mut c = Cursor { bytes, pos: 0 };
    c.magic(IMAGE_MAGIC)?;
    let count = c.u32()? as usize;
    let rows = c.u32()?;
    let cols = c.u32()?;
    if rows as usize != SIDE || cols as usize != SIDE {
        return Err(Error::parse(8, ParseErrorKind::BadDimensions { rows, cols }));
    }
    let payload = c.take(count * PIXELS)?;
    c.finish()?;
    ImageSet::from_bytes(count, payload.to_vec())
}

pub fn parse_idx_labels(bytes: &[u8]) -> Result<LabelSet> {
    let mut c = Cursor { bytes, pos: 0 };
    c.magic(LABEL_MAGIC)?;
    let count = c.u32()? as usize;
    let payload = c.take(count)?;
    c.finish()?;
    LabelSet::new(payload.to_vec())
}

/// Read a file, inflating it first if it is gzip-compressed.
pub fn read_maybe_gz(path: &Path) -> Result<Vec<u8>> {
    let raw = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    if raw.starts_with(&[0x1f, 0x8b]) {
        let mut out = Vec::new();
        GzDecoder::new(&raw[..])
            .read_to_end(&mut out)
            .map_err(|e| Error::io(path, e))?;
        Ok(out)
    } else {
        Ok(raw)
    }
}

pub fn load_images(path: &Path) -> Result<ImageSet> {
    parse_idx_images(&read_maybe_gz(path)?)
}

pub fn load_labels(path: &Path) -> Result<LabelSet> {
    parse_idx_labels(&read_maybe_gz(path)?)
}

/// `label ← (label + shift) mod 10`, wrapping in both directions.
pub fn shift_labels(labels: &LabelSet, shift: i64) -> LabelSet {
    LabelSet {
        labels: labels
            .labels
            .iter()
            .map(|&l| (l as i64 + shift).rem_euclid(CLASSES as i64) as u8)
            .collect(),
    }
}
