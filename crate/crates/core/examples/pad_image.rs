//! Pads one image with every method at sizes 1, 3 and 5 and writes each
//! result as a PPM.
//!
//! ```text
//! cargo run --example pad_image -- [INPUT.ppm] [OUT_DIR]
//! ```
//!
//! Without an input a synthetic 32x32 image is used. The `module` output
//! comes from filters fitted to the image's own borders with a few hundred
//! local SGD steps.

use std::path::PathBuf;

use learnpad::baseline::{PadKind, PadMethod};
use learnpad::data::synthetic::synthetic_images;
use learnpad::data::{read_ppm, write_ppm};
use learnpad::padding::{FilterBank, LocalOptimizer, Mode, PaddingModule};
use learnpad::Tensor;

fn fitted(image: &Tensor<f32>, size: usize) -> Result<PaddingModule<f32>, learnpad::Error> {
    let bank = FilterBank::mean(image.channels())?.with_optimizer(LocalOptimizer::Sgd { lr: 0.05 });
    let mut module = PaddingModule::new(bank, size)?;
    for _ in 0..300 {
        module.forward(image)?;
        module.local_update()?;
    }
    module.set_mode(Mode::Eval);
    Ok(module)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let image = match args.first() {
        Some(path) => read_ppm(path)?,
        None => synthetic_images(1, 7)?.remove(0).pixels,
    };
    let out_dir = PathBuf::from(args.get(1).map_or("padded", String::as_str));
    std::fs::create_dir_all(&out_dir)?;
    println!("input {}x{}x{}", image.height(), image.width(), image.channels());

    for size in [1, 3, 5] {
        let module = fitted(&image, size)?;
        for kind in PadKind::ALL {
            let padded = match kind {
                PadKind::Module => module.pad(&image)?,
                _ => PadMethod::new(kind, size)?.apply(&image)?,
            };
            let clamped = padded.data().iter().map(|v| v.clamp(0.0, 1.0)).collect();
            let padded = Tensor::from_vec(padded.shape().clone(), clamped)?;
            let path = out_dir.join(format!("{kind}_{size}.ppm"));
            write_ppm(&padded, &path)?;
            println!("{}: {}x{}", path.display(), padded.height(), padded.width());
        }
        let thetas: Vec<String> =
            module.filters().weights().iter().map(|t| format!("[{:.3}, {:.3}, {:.3}]", t[0], t[1], t[2])).collect();
        println!("size {size}: fitted filters {}", thetas.join(" "));
    }
    Ok(())
}
