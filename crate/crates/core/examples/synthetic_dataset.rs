//! Writes a CIFAR-10-format directory of synthetic images, usable anywhere a
//! real CIFAR-10 directory is expected (for example `learnpad train --data`).
//!
//! ```text
//! cargo run --example synthetic_dataset -- OUT_DIR [TRAIN] [TEST] [SEED]
//! ```

use learnpad::data::synthetic::write_synthetic_dataset;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let dir = args.first().ok_or("usage: synthetic_dataset OUT_DIR [TRAIN] [TEST] [SEED]")?;
    let train = args.get(1).map_or(Ok(5000), |s| s.parse())?;
    let test = args.get(2).map_or(Ok(1000), |s| s.parse())?;
    let seed = args.get(3).map_or(Ok(0), |s| s.parse())?;
    write_synthetic_dataset(dir, train, test, seed)?;
    println!("wrote {train} training and {test} test records to {dir}");
    Ok(())
}
