//! Trains a padding module on its local loss alone and prints the mean
//! border-prediction MSE after every pass over a fixed batch.
//!
//! ```text
//! cargo run --release --example local_training -- [CIFAR_BATCH_FILE]
//! ```
//!
//! Filters start from a seeded uniform draw in [-0.1, 0.1] and take one SGD
//! step (learning rate 0.01) per image. Without a batch file the synthetic
//! stand-in is used.

use learnpad::data::synthetic::synthetic_images;
use learnpad::data::{load_cifar10_batch, LabeledImage};
use learnpad::padding::{FilterBank, LocalOptimizer, PaddingModule};
use learnpad::Tensor;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut pool: Vec<LabeledImage> = match std::env::args().nth(1) {
        Some(path) => load_cifar10_batch(path)?,
        None => synthetic_images(1000, 0)?,
    };
    pool.shuffle(&mut rng);
    let batch: Vec<Tensor<f64>> = pool.iter().take(64).map(|i| i.pixels.cast()).collect();

    let bank = FilterBank::uniform(3, 0.1, &mut rng)?.with_optimizer(LocalOptimizer::Sgd { lr: 0.01 });
    let mut module = PaddingModule::new(bank, 1)?;
    let initial = module.evaluate_mse(&batch)?;
    println!("pass 0: mse {initial:.6}");
    for pass in 1..=5 {
        for image in &batch {
            module.forward(image)?;
            module.local_update()?;
        }
        let mse = module.evaluate_mse(&batch)?;
        println!("pass {pass}: mse {mse:.6} ({:.3} of initial)", mse / initial);
    }
    for (c, theta) in module.filters().weights().iter().enumerate() {
        println!("channel {c}: theta = [{:.4}, {:.4}, {:.4}]", theta[0], theta[1], theta[2]);
    }
    Ok(())
}
