//! A deterministic stand-in for CIFAR-10 in the same binary format: smooth
//! colour fields overlaid with a class-specific oriented grating.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::cifar::{encode_record, LabeledImage, CLASSES, IMAGE_SIDE, TEST_FILE, TRAIN_FILES};
use crate::error::{Error, Result};
use crate::tensor::{Shape, Tensor};

const RECORDS_PER_FILE: usize = 10_000;

fn draw_image(rng: &mut ChaCha8Rng, label: u8) -> Result<LabeledImage> {
    let n = IMAGE_SIDE as f64;
    let base: [f64; 3] = std::array::from_fn(|_| rng.gen_range(0.25..0.75));
    let waves: Vec<(f64, f64, f64, [f64; 3])> = (0..3)
        .map(|_| {
            let (fx, fy) = (rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5));
            let phase = rng.gen_range(0.0..2.0 * PI);
            let amp = std::array::from_fn(|_| rng.gen_range(0.0..0.15));
            (fx, fy, phase, amp)
        })
        .collect();
    let angle = f64::from(label) * PI / CLASSES as f64;
    let (gx, gy) = (3.0 * angle.cos(), 3.0 * angle.sin());
    let grating_phase = rng.gen_range(0.0..2.0 * PI);
    let tint: [f64; 3] = std::array::from_fn(|c| 0.04 + 0.03 * ((f64::from(label) + 3.0 * c as f64) * 0.7).sin());

    let mut data = Vec::with_capacity(IMAGE_SIDE * IMAGE_SIDE * 3);
    for i in 0..IMAGE_SIDE {
        for j in 0..IMAGE_SIDE {
            let (y, x) = (i as f64 / n, j as f64 / n);
            let grating = (2.0 * PI * (gx * x + gy * y) + grating_phase).sin();
            for c in 0..3 {
                let mut v = base[c] + tint[c] * grating + rng.gen_range(-0.08..0.08);
                for (fx, fy, phase, amp) in &waves {
                    v += amp[c] * (2.0 * PI * (fx * x + fy * y) + phase).cos();
                }
                let byte = (v.clamp(0.0, 1.0) * 255.0 + 0.5).floor();
                data.push((byte / 255.0) as f32);
            }
        }
    }
    Ok(LabeledImage { pixels: Tensor::from_vec(Shape::d3(IMAGE_SIDE, IMAGE_SIDE, 3)?, data)?, label })
}

/// `n` images with uniformly drawn labels. Pixels are already quantized to
/// multiples of 1/255, so they survive a trip through the binary format.
pub fn synthetic_images(n: usize, seed: u64) -> Result<Vec<LabeledImage>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let label = rng.gen_range(0..CLASSES as u8);
            draw_image(&mut rng, label)
        })
        .collect()
}

pub fn synthetic_batch_bytes(n: usize, seed: u64) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    for img in synthetic_images(n, seed)? {
        out.extend(encode_record(&img)?);
    }
    Ok(out)
}

/// Writes a directory laid out like the CIFAR-10 binary release: training
/// records spread over `data_batch_*.bin` files of at most 10,000 records and
/// the test records in `test_batch.bin`.
pub fn write_synthetic_dataset(dir: impl AsRef<Path>, train: usize, test: usize, seed: u64) -> Result<()> {
    let dir = dir.as_ref();
    if train > RECORDS_PER_FILE * TRAIN_FILES.len() {
        return Err(Error::InvalidArgument(format!("at most 50000 training records, asked for {train}")));
    }
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let all = synthetic_batch_bytes(train, seed)?;
    let record = super::cifar::RECORD_LEN;
    for (k, name) in TRAIN_FILES.iter().enumerate() {
        let lo = (k * RECORDS_PER_FILE * record).min(all.len());
        let hi = ((k + 1) * RECORDS_PER_FILE * record).min(all.len());
        if lo == hi && k > 0 {
            break;
        }
        let path = dir.join(name);
        fs::write(&path, &all[lo..hi]).map_err(|e| Error::io(&path, e))?;
    }
    let path = dir.join(TEST_FILE);
    fs::write(&path, synthetic_batch_bytes(test, seed ^ 0x7465_7374)?).map_err(|e| Error::io(&path, e))
}
