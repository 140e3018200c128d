//! Dataset loading, image output and metrics files.

pub mod cifar;
pub mod metrics;
pub mod ppm;
pub mod synthetic;

pub use cifar::{load_cifar10_batch, load_split, parse_batch, LabeledImage, Split};
pub use metrics::{read_metrics_csv, write_metrics_csv, MetricsRow};
pub use ppm::{decode_ppm, encode_ppm, read_ppm, write_ppm};

use crate::error::{Error, Result};

/// `floor(v * 255 + 0.5)` for `v` in `[0, 1]`.
pub fn quantize(v: f64) -> Result<u8> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::InvalidArgument(format!("pixel value {v} is outside [0, 1]")));
    }
    Ok((v * 255.0 + 0.5).floor() as u8)
}
