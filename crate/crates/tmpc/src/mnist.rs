//! MNIST in the IDX format.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

const IMAGES_MAGIC: u32 = 0x0000_0803;
const LABELS_MAGIC: u32 = 0x0000_0801;

/// Images as row-major bytes, one row of `rows * cols` pixels per image.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Images {
    pub count: usize,
    pub rows: usize,
    pub cols: usize,
    pub pixels: Vec<u8>,
}

impl Images {
    pub fn pixels_per_image(&self) -> usize {
        self.rows * self.cols
    }

    pub fn take(&self, n: usize) -> Images {
        let n = n.min(self.count);
        Images { count: n, pixels: self.pixels[..n * self.pixels_per_image()].to_vec(), ..*self }
    }

    /// Pixels of the images at `idx`, concatenated.
    pub fn gather(&self, idx: &[usize]) -> Vec<u8> {
        let k = self.pixels_per_image();
        idx.iter().flat_map(|&i| self.pixels[i * k..(i + 1) * k].iter().copied()).collect()
    }
}

/// A train/test split.
#[derive(Clone, Debug)]
pub struct Mnist {
    pub train_images: Images,
    pub train_labels: Vec<u8>,
    pub test_images: Images,
    pub test_labels: Vec<u8>,
}

fn be_u32(b: &[u8], at: usize) -> Result<u32> {
    b.get(at..at + 4).map(|s| u32::from_be_bytes(s.try_into().unwrap())).ok_or_else(|| Error::Format("truncated IDX header".into()))
}

pub fn parse_images(bytes: &[u8]) -> Result<Images> {
    if be_u32(bytes, 0)? != IMAGES_MAGIC {
        return Err(Error::Format("not an IDX image file".into()));
    }
    let (count, rows, cols) = (be_u32(bytes, 4)? as usize, be_u32(bytes, 8)? as usize, be_u32(bytes, 12)? as usize);
    let body = &bytes[16..];
    if body.len() != count * rows * cols {
        return Err(Error::Format(format!("IDX image body has {} bytes, header says {count}x{rows}x{cols}", body.len())));
    }
    Ok(Images { count, rows, cols, pixels: body.to_vec() })
}

pub fn parse_labels(bytes: &[u8]) -> Result<Vec<u8>> {
    if be_u32(bytes, 0)? != LABELS_MAGIC {
        return Err(Error::Format("not an IDX label file".into()));
    }
    let count = be_u32(bytes, 4)? as usize;
    let body = &bytes[8..];
    if body.len() != count {
        return Err(Error::Format(format!("IDX label body has {} bytes, header says {count}", body.len())));
    }
    if let Some(bad) = body.iter().find(|&&l| l > 9) {
        return Err(Error::Format(format!("label {bad} out of range")));
    }
    Ok(body.to_vec())
}

pub fn encode_images(img: &Images) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + img.pixels.len());
    for v in [IMAGES_MAGIC, img.count as u32, img.rows as u32, img.cols as u32] {
        out.extend_from_slice(&v.to_be_bytes());
    }
    out.extend_from_slice(&img.pixels);
    out
}

pub fn encode_labels(labels: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + labels.len());
    out.extend_from_slice(&LABELS_MAGIC.to_be_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    out.extend_from_slice(labels);
    out
}

fn read(dir: &Path, name: &str) -> Result<Vec<u8>> {
    let path = dir.join(name);
    fs::read(&path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))
}

/// Loads the four standard files from `dir`, keeping at most `train_limit`
/// and `test_limit` examples.
pub fn load_dir(dir: &Path, train_limit: Option<usize>, test_limit: Option<usize>) -> Result<Mnist> {
    let train_images = parse_images(&read(dir, "train-images-idx3-ubyte")?)?;
    let train_labels = parse_labels(&read(dir, "train-labels-idx1-ubyte")?)?;
    let test_images = parse_images(&read(dir, "t10k-images-idx3-ubyte")?)?;
    let test_labels = parse_labels(&read(dir, "t10k-labels-idx1-ubyte")?)?;
    if train_images.count != train_labels.len() || test_images.count != test_labels.len() {
        return Err(Error::Format("image and label counts differ".into()));
    }
    let cut = |img: Images, lab: Vec<u8>, lim: Option<usize>| {
        let n = lim.unwrap_or(img.count).min(img.count);
        (img.take(n), lab[..n].to_vec())
    };
    let (train_images, train_labels) = cut(train_images, train_labels, train_limit);
    let (test_images, test_labels) = cut(test_images, test_labels, test_limit);
    Ok(Mnist { train_images, train_labels, test_images, test_labels })
}
