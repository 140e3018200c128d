use std::path::Path;
use std::process::{Command, Output};

use learnpad::data::synthetic::{synthetic_images, write_synthetic_dataset};
use learnpad::data::{read_metrics_csv, read_ppm, write_ppm, Split};
use learnpad::padding::weights::write_weights;
use learnpad::padding::FilterBank;

fn learnpad(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_learnpad")).args(args).output().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn sample_ppm(dir: &Path) -> std::path::PathBuf {
    let path = dir.join("in.ppm");
    write_ppm(&synthetic_images(1, 0).unwrap()[0].pixels, &path).unwrap();
    path
}

#[test]
fn zero_padding_adds_a_black_ring() {
    let dir = tempfile::tempdir().unwrap();
    let input = sample_ppm(dir.path());
    let output = dir.path().join("out.ppm");
    let out = learnpad(&["pad", "--input", s(&input), "--method", "zero", "--size", "5", "--output", s(&output)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("42x42x3"));
    let padded = read_ppm(&output).unwrap();
    assert_eq!(padded.shape().dims(), [42, 42, 3]);
    assert_eq!(padded.interior(5).unwrap(), read_ppm(&input).unwrap());
    for i in 0..42 {
        for j in 0..42 {
            if !(5..37).contains(&i) || !(5..37).contains(&j) {
                assert!((0..3).all(|c| padded.at(i, j, c) == 0.0));
            }
        }
    }
}

#[test]
fn mean_weights_reproduce_meaninterp() {
    let dir = tempfile::tempdir().unwrap();
    let input = sample_ppm(dir.path());
    let weights = dir.path().join("mean.bin");
    write_weights(&[&FilterBank::<f32>::mean(3).unwrap()], &weights).unwrap();
    for size in ["1", "3"] {
        let (a, b) = (dir.path().join("a.ppm"), dir.path().join("b.ppm"));
        let run_a = learnpad(&["pad", "--input", s(&input), "--method", "module", "--size", size, "--weights", s(&weights), "--output", s(&a)]);
        let run_b = learnpad(&["pad", "--input", s(&input), "--method", "meaninterp", "--size", size, "--output", s(&b)]);
        assert_eq!((run_a.status.code(), run_b.status.code()), (Some(0), Some(0)));
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    }
}

#[test]
fn pad_usage_and_contract_errors() {
    let dir = tempfile::tempdir().unwrap();
    let input = sample_ppm(dir.path());
    let output = dir.path().join("o.ppm");
    let code = |args: &[&str]| learnpad(args).status.code();
    assert_eq!(code(&["pad", "--input", s(&input), "--method", "zero", "--size", "0", "--output", s(&output)]), Some(2));
    assert_eq!(code(&["pad", "--input", s(&input), "--method", "tiles", "--size", "1", "--output", s(&output)]), Some(2));
    assert_eq!(code(&["pad", "--input", s(&input), "--method", "zero", "--size", "1", "--output", s(&output), "--bogus"]), Some(2));
    assert_eq!(code(&["pad", "--input", s(&input), "--method", "module", "--size", "1", "--output", s(&output)]), Some(1));
    assert_eq!(code(&["pad", "--input", s(&input), "--method", "reflect", "--size", "32", "--output", s(&output)]), Some(1));
    assert_eq!(code(&["pad", "--input", "/nonexistent.ppm", "--method", "zero", "--size", "1", "--output", s(&output)]), Some(1));
    assert_eq!(code(&["frobnicate"]), Some(2));
}

#[test]
fn version_prints_the_crate_version() {
    let out = learnpad(&["version"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), format!("learnpad {}", env!("CARGO_PKG_VERSION")));
}

#[test]
fn gradcheck_passes_fails_and_repeats() {
    let pass = learnpad(&["gradcheck", "--trials", "100", "--tol", "1e-6"]);
    assert_eq!(pass.status.code(), Some(0), "{}", String::from_utf8_lossy(&pass.stdout));
    let tight = learnpad(&["gradcheck", "--trials", "100", "--tol", "1e-12"]);
    assert_eq!(tight.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&tight.stdout).contains("worst"));
    let again = learnpad(&["gradcheck", "--trials", "100", "--tol", "1e-12"]);
    assert_eq!(tight.stdout, again.stdout);
}

#[test]
fn train_writes_metrics_and_weights() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    write_synthetic_dataset(&data, 64, 32, 0).unwrap();
    let metrics = dir.path().join("m.csv");
    let weights = dir.path().join("w.bin");
    let out = learnpad(&[
        "train", "--data", s(&data), "--padding", "module", "--positions", "comb", "--epochs", "3", "--batch", "16",
        "--metrics", s(&metrics), "--save-weights", s(&weights),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("last-5-epoch mean test accuracy"));
    let rows = read_metrics_csv(&metrics).unwrap();
    let test_epochs: Vec<usize> = rows.iter().filter(|r| r.split == Split::Test).map(|r| r.epoch).collect();
    assert_eq!(test_epochs, vec![1, 2, 3]);
    let banks = learnpad::padding::weights::read_weights::<f32>(&weights).unwrap();
    assert_eq!(banks.iter().map(FilterBank::channels).collect::<Vec<_>>(), vec![3, 32, 64]);

    let input = sample_ppm(dir.path());
    let padded = dir.path().join("p.ppm");
    let pad = learnpad(&["pad", "--input", s(&input), "--method", "module", "--size", "2", "--weights", s(&weights), "--output", s(&padded)]);
    assert_eq!(pad.status.code(), Some(0), "{}", String::from_utf8_lossy(&pad.stderr));
}

#[test]
fn frozen_first_module_keeps_its_mse() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    write_synthetic_dataset(&data, 48, 16, 1).unwrap();
    let metrics = dir.path().join("m.csv");
    let out = learnpad(&[
        "train", "--data", s(&data), "--padding", "module", "--positions", "first", "--epochs", "4", "--batch", "16",
        "--freeze-after", "2", "--metrics", s(&metrics),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let mse: Vec<f64> = read_metrics_csv(&metrics)
        .unwrap()
        .iter()
        .filter(|r| r.split == Split::Test)
        .map(|r| r.module_mse_mean.unwrap())
        .collect();
    assert_eq!(mse[2], mse[3]);
    assert_ne!(mse[0], mse[2]);
}

#[test]
fn train_failures_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let missing = learnpad(&["train", "--data", s(&dir.path().join("nothing")), "--metrics", s(&dir.path().join("m.csv"))]);
    assert_eq!(missing.status.code(), Some(1));
    let data = dir.path().join("data");
    write_synthetic_dataset(&data, 16, 8, 2).unwrap();
    let diverged = learnpad(&[
        "train", "--data", s(&data), "--lr", "1e38", "--epochs", "3", "--batch", "8", "--metrics", s(&dir.path().join("m.csv")),
    ]);
    assert_eq!(diverged.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&diverged.stderr).contains("diverged"), "{}", String::from_utf8_lossy(&diverged.stderr));
    assert_eq!(learnpad(&["train"]).status.code(), Some(2));
}
