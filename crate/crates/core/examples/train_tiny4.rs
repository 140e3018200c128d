//! Trains the four-convolution classifier with a chosen padding and prints
//! per-epoch statistics.
//!
//! ```text
//! cargo run --release --example train_tiny4 -- module all 3 [CIFAR_DIR]
//! ```
//!
//! Without a directory the run uses the synthetic CIFAR-format stand-in.

use learnpad::baseline::PadKind;
use learnpad::data::synthetic::synthetic_images;
use learnpad::data::{load_split, Split};
use learnpad::nn::{train, Placement, TrainConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let padding: PadKind = args.first().map_or(Ok(PadKind::Module), |s| s.parse())?;
    let placement: Placement = args.get(1).map_or(Ok(Placement::All), |s| s.parse())?;
    let epochs = args.get(2).map_or(Ok(3), |s| s.parse())?;
    let (train_set, test_set) = match args.get(3) {
        Some(dir) => (load_split(dir, Split::Train, Some(5000))?, load_split(dir, Split::Test, Some(1000))?),
        None => (synthetic_images(5000, 0)?, synthetic_images(1000, 1)?),
    };
    let config = TrainConfig { padding, placement, epochs, ..TrainConfig::default() };
    let (_, report) = train::<f32>(&config, &train_set, &test_set, |e| {
        println!(
            "epoch {:>2}  train loss {:.4} acc {:.4}  test loss {:.4} acc {:.4}  module mse {}  {:.1}s (padding {:.1}s)",
            e.epoch,
            e.train.loss,
            e.train.accuracy,
            e.test.loss,
            e.test.accuracy,
            e.train.module_mse_mean().map_or("-".into(), |m| format!("{m:.6}")),
            e.seconds(),
            e.pad_seconds,
        );
    })?;
    println!("last-5-epoch mean test accuracy: {:.4}", report.last5_test_accuracy());
    Ok(())
}
