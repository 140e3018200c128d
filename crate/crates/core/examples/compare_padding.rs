//! Trains the four-convolution classifier three times, once each with zero,
//! mean-interpolation and learned padding, and compares them.
//!
//! ```text
//! cargo run --release --example compare_padding -- [EPOCHS] [CIFAR_DIR]
//! ```
//!
//! Without a directory the synthetic stand-in (5000 train, 1000 test) is
//! used. Prints the last-5-epoch mean test accuracy of each run, the margin
//! of the learned padding over zero padding and its epoch-time overhead.

use learnpad::baseline::PadKind;
use learnpad::data::synthetic::synthetic_images;
use learnpad::data::{load_split, Split};
use learnpad::nn::train::overhead_ratio;
use learnpad::nn::{train, TrainConfig, TrainReport};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let epochs = args.first().map_or(Ok(5), |s| s.parse())?;
    let (train_set, test_set) = match args.get(1) {
        Some(dir) => (load_split(dir, Split::Train, Some(5000))?, load_split(dir, Split::Test, Some(1000))?),
        None => (synthetic_images(5000, 0)?, synthetic_images(1000, 1)?),
    };

    let mut reports: Vec<(PadKind, TrainReport)> = Vec::new();
    for padding in [PadKind::Zero, PadKind::MeanInterp, PadKind::Module] {
        let config = TrainConfig { padding, epochs, ..TrainConfig::default() };
        let (_, report) = train::<f32>(&config, &train_set, &test_set, |e| {
            println!("{padding:<10} epoch {:>2}  test acc {:.4}  {:.1}s", e.epoch, e.test.accuracy, e.seconds());
        })?;
        reports.push((padding, report));
    }

    println!();
    for (padding, report) in &reports {
        println!(
            "{padding:<10} last-5 test acc {:.4}  mean epoch {:.2}s  padding share {:.1}%",
            report.last5_test_accuracy(),
            report.mean_epoch_seconds(),
            100.0 * report.padding_share()
        );
    }
    let (zero, module) = (&reports[0].1, &reports[2].1);
    println!("module - zero accuracy margin: {:+.4}", module.last5_test_accuracy() - zero.last5_test_accuracy());
    println!("module / zero epoch time: {:.2}x", overhead_ratio(module, zero));
    Ok(())
}
