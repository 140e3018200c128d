//! Finite-difference check of every analytic gradient in the crate.
//!
//! ```text
//! cargo run --example gradcheck -- 100 1e-6
//! ```

use learnpad::nn::gradcheck::standard_suites;

fn main() {
    let mut args = std::env::args().skip(1);
    let trials = args.next().and_then(|s| s.parse().ok()).unwrap_or(100);
    let tol = args.next().and_then(|s| s.parse().ok()).unwrap_or(1e-6);
    let mut ok = true;
    for report in standard_suites(trials, tol, 0) {
        println!("{report}");
        ok &= report.passed();
    }
    std::process::exit(if ok { 0 } else { 1 });
}
