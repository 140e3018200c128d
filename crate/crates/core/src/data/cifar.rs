//! CIFAR-10 binary batches: records of one label byte followed by the red,
//! green and blue 32x32 planes in row-major order.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::tensor::{Shape, Tensor};

pub const IMAGE_SIDE: usize = 32;
pub const PLANE_LEN: usize = IMAGE_SIDE * IMAGE_SIDE;
pub const RECORD_LEN: usize = 1 + 3 * PLANE_LEN;
pub const CLASSES: usize = 10;

pub const TRAIN_FILES: [&str; 5] =
    ["data_batch_1.bin", "data_batch_2.bin", "data_batch_3.bin", "data_batch_4.bin", "data_batch_5.bin"];
pub const TEST_FILE: &str = "test_batch.bin";

/// A 32x32x3 image with values in `[0, 1]` and a class label below 10.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledImage {
    pub pixels: Tensor<f32>,
    pub label: u8,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Split {
    Train,
    Test,
}

impl Split {
    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }
}

impl std::fmt::Display for Split {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "test" => Ok(Split::Test),
            other => Err(Error::format("split", format!("unknown split {other:?}"))),
        }
    }
}

/// Decodes a single record, transposing the planes to height x width x
/// channel and scaling by 1/255.
pub fn parse_record(record: &[u8]) -> Result<LabeledImage> {
    if record.len() != RECORD_LEN {
        return Err(Error::format("CIFAR-10 record", format!("{} bytes, expected {RECORD_LEN}", record.len())));
    }
    let label = record[0];
    if label as usize >= CLASSES {
        return Err(Error::format("CIFAR-10 record", format!("label byte {label} is not a class")));
    }
    let planes = &record[1..];
    let mut data = vec![0f32; 3 * PLANE_LEN];
    for (p, px) in data.chunks_exact_mut(3).enumerate() {
        for (c, v) in px.iter_mut().enumerate() {
            *v = f32::from(planes[c * PLANE_LEN + p]) / 255.0;
        }
    }
    let pixels = Tensor::from_vec(Shape::d3(IMAGE_SIDE, IMAGE_SIDE, 3)?, data)?;
    Ok(LabeledImage { pixels, label })
}

pub fn parse_batch(bytes: &[u8]) -> Result<Vec<LabeledImage>> {
    if !bytes.len().is_multiple_of(RECORD_LEN) {
        return Err(Error::format(
            "CIFAR-10 batch",
            format!("{} bytes is not a whole number of {RECORD_LEN}-byte records", bytes.len()),
        ));
    }
    bytes.chunks_exact(RECORD_LEN).map(parse_record).collect()
}

pub fn load_cifar10_batch(path: impl AsRef<Path>) -> Result<Vec<LabeledImage>> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_batch(&bytes)
}

/// The first `limit` records of a split in file order. Training batches are
/// read one after another only as far as needed; a missing batch file after
/// the first ends the split early.
pub fn load_split(dir: impl AsRef<Path>, split: Split, limit: Option<usize>) -> Result<Vec<LabeledImage>> {
    let dir = dir.as_ref();
    let files: &[&str] = match split {
        Split::Train => &TRAIN_FILES,
        Split::Test => &[TEST_FILE],
    };
    let limit = limit.unwrap_or(usize::MAX);
    let mut images = Vec::new();
    for (k, name) in files.iter().enumerate() {
        if images.len() >= limit {
            break;
        }
        let path = dir.join(name);
        if k > 0 && !path.exists() {
            break;
        }
        images.extend(load_cifar10_batch(path)?);
    }
    images.truncate(limit);
    if images.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok(images)
}

/// Quantizes an image back into a record, rounding half up.
pub fn encode_record(image: &LabeledImage) -> Result<Vec<u8>> {
    let dims = image.pixels.shape().dims();
    if dims != [IMAGE_SIDE, IMAGE_SIDE, 3] {
        return Err(Error::InvalidShape { dims: dims.to_vec(), reason: "CIFAR-10 images are 32x32x3" });
    }
    if image.label as usize >= CLASSES {
        return Err(Error::format("CIFAR-10 record", format!("label {} is not a class", image.label)));
    }
    let mut out = vec![0u8; RECORD_LEN];
    out[0] = image.label;
    for (p, px) in image.pixels.data().chunks_exact(3).enumerate() {
        for (c, &v) in px.iter().enumerate() {
            out[1 + c * PLANE_LEN + p] = super::quantize(f64::from(v))?;
        }
    }
    Ok(out)
}
