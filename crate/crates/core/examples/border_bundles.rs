//! Walks through the border bundles of a 4x4 matrix: targets, neighbours,
//! predictor rows, the predictions of a filter and its local loss.
//!
//! ```text
//! cargo run --example border_bundles
//! ```

use learnpad::padding::{build_predictor, extract_neighbors, extract_target, mse, mse_grad, predict_with, Side};
use learnpad::Tensor;

fn main() -> Result<(), learnpad::Error> {
    let m = Tensor::from_rows(&[
        vec![1.0, 2.0, 3.0, 4.0],
        vec![5.0, 6.0, 7.0, 8.0],
        vec![9.0, 10.0, 11.0, 12.0],
        vec![13.0, 14.0, 15.0, 16.0],
    ])?;
    let t = extract_target(&m)?;
    let n = extract_neighbors(&m)?;
    let p = build_predictor(&n)?;
    let theta = [0.0, 1.0, 0.0];
    let o = predict_with(theta, &p);

    for side in Side::ALL {
        println!("{side:?}");
        println!("  target     {:?}", t.side(side));
        println!("  neighbours {:?}", n.side(side));
        println!("  predictor  {:?}", p.side(side));
        println!("  predicted  {:?}", o.side(side));
    }
    println!("theta {theta:?}: mse {} grad {:?}", mse(theta, &p, &t)?, mse_grad(theta, &p, &t)?);
    Ok(())
}
