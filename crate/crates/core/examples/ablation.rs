//! Trains with learned padding at each named placement and writes one
//! metrics CSV per run.
//!
//! ```text
//! cargo run --release --example ablation -- [EPOCHS] [OUT_DIR] [CIFAR_DIR]
//! ```
//!
//! Placements are first, middle, last, comb (first, middle and last) and
//! all. Convolutions without a module use zero padding.

use std::path::PathBuf;

use learnpad::baseline::PadKind;
use learnpad::data::synthetic::synthetic_images;
use learnpad::data::{load_split, write_metrics_csv, Split};
use learnpad::nn::{train, Placement, TrainConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let epochs = args.first().map_or(Ok(3), |s| s.parse())?;
    let out_dir = PathBuf::from(args.get(1).map_or("ablation", String::as_str));
    let (train_set, test_set) = match args.get(2) {
        Some(dir) => (load_split(dir, Split::Train, Some(5000))?, load_split(dir, Split::Test, Some(1000))?),
        None => (synthetic_images(5000, 0)?, synthetic_images(1000, 1)?),
    };
    std::fs::create_dir_all(&out_dir)?;

    for placement in Placement::NAMED {
        let config = TrainConfig { padding: PadKind::Module, placement: placement.clone(), epochs, ..TrainConfig::default() };
        let (net, report) = train::<f32>(&config, &train_set, &test_set, |_| {})?;
        let path = out_dir.join(format!("metrics_{placement}.csv"));
        write_metrics_csv(&report.metrics_rows(), &path)?;
        println!(
            "{placement:<7} modules {}  last-5 test acc {:.4}  final module mse {}  -> {}",
            net.modules().len(),
            report.last5_test_accuracy(),
            report
                .epochs
                .last()
                .and_then(|e| e.test.module_mse_mean())
                .map_or("-".into(), |m| format!("{m:.6}")),
            path.display()
        );
    }
    Ok(())
}
