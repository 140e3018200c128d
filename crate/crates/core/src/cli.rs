//! The `learnpad` command line: `pad`, `train`, `gradcheck` and `version`.
//!
//! Exit codes are 0 on success, 1 when a command fails its contract and 2
//! for usage errors.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::baseline::{PadKind, PadMethod};
use crate::data::{load_split, read_ppm, write_metrics_csv, write_ppm, Split};
use crate::error::{Error, Result};
use crate::nn::gradcheck::standard_suites;
use crate::nn::{train, ModuleConfig, Placement, TrainConfig};
use crate::padding::weights::{read_weights, write_weights};
use crate::padding::{LocalOptimizer, Mode, PaddingModule};
use crate::tensor::Tensor;

#[derive(Debug, Parser)]
#[command(name = "learnpad", about = "Learned image padding: padding, training and gradient checks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum TrainPadding {
    Zero,
    Meaninterp,
    Module,
}

impl From<TrainPadding> for PadKind {
    fn from(p: TrainPadding) -> Self {
        match p {
            TrainPadding::Zero => PadKind::Zero,
            TrainPadding::Meaninterp => PadKind::MeanInterp,
            TrainPadding::Module => PadKind::Module,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Positions {
    All,
    First,
    Middle,
    Last,
    Comb,
}

impl From<Positions> for Placement {
    fn from(p: Positions) -> Self {
        match p {
            Positions::All => Placement::All,
            Positions::First => Placement::First,
            Positions::Middle => Placement::Middle,
            Positions::Last => Placement::Last,
            Positions::Comb => Placement::Comb,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Pad a PPM image and write the result as PPM.
    Pad {
        #[arg(long)]
        input: PathBuf,
        /// zero, reflect, replicate, meaninterp or module.
        #[arg(long)]
        method: PadKind,
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        size: u64,
        /// Module weights; required with `--method module`.
        #[arg(long)]
        weights: Option<PathBuf>,
        #[arg(long)]
        output: PathBuf,
    },
    /// Train the four-convolution classifier on CIFAR-10 binary batches.
    Train {
        /// Directory holding data_batch_*.bin and test_batch.bin.
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_enum, default_value = "zero")]
        padding: TrainPadding,
        #[arg(long, value_enum, default_value = "all")]
        positions: Positions,
        #[arg(long, default_value_t = 10)]
        epochs: usize,
        #[arg(long, default_value_t = 64, value_parser = clap::value_parser!(u64).range(1..))]
        batch: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1e-3)]
        lr: f64,
        /// Learning rate of the modules' local SGD.
        #[arg(long, default_value_t = 0.01)]
        module_lr: f64,
        /// Stop training the modules after this many epochs.
        #[arg(long)]
        freeze_after: Option<usize>,
        #[arg(long, default_value_t = 5000)]
        train_limit: usize,
        #[arg(long, default_value_t = 1000)]
        test_limit: usize,
        #[arg(long, default_value = "metrics.csv")]
        metrics: PathBuf,
        #[arg(long)]
        save_weights: Option<PathBuf>,
    },
    /// Compare analytic gradients with central finite differences.
    Gradcheck {
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Print the version.
    Version,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, S>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            let code = e.exit_code();
            let _ = if code == 0 { write!(out, "{text}") } else { write!(err, "{text}") };
            return code as u8;
        }
    };
    match execute(cli.command, out) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            1
        }
    }
}

/// Runs a parsed command. `Ok(false)` is a completed command whose check
/// failed.
pub fn execute(command: Command, out: &mut dyn Write) -> Result<bool> {
    match command {
        Command::Pad { input, method, size, weights, output } => {
            let padded = cmd_pad(&input, method, size as usize, weights.as_deref())?;
            write_ppm(&padded, &output)?;
            say(out, format_args!("{}: {}x{}x3", output.display(), padded.height(), padded.width()))?;
            Ok(true)
        }
        Command::Train {
            data,
            padding,
            positions,
            epochs,
            batch,
            seed,
            lr,
            module_lr,
            freeze_after,
            train_limit,
            test_limit,
            metrics,
            save_weights,
        } => {
            let config = TrainConfig {
                padding: padding.into(),
                placement: positions.into(),
                module: ModuleConfig { optimizer: LocalOptimizer::Sgd { lr: module_lr }, ..ModuleConfig::default() },
                epochs,
                batch: batch as usize,
                seed,
                lr,
                freeze_after,
                ..TrainConfig::default()
            };
            cmd_train(&config, &data, train_limit, test_limit, &metrics, save_weights.as_deref(), out)?;
            Ok(true)
        }
        Command::Gradcheck { trials, tol, seed } => {
            let mut ok = true;
            for report in standard_suites(trials, tol, seed) {
                say(out, format_args!("{report}"))?;
                ok &= report.passed();
            }
            Ok(ok)
        }
        Command::Version => {
            say(out, format_args!("learnpad {}", env!("CARGO_PKG_VERSION")))?;
            Ok(true)
        }
    }
}

fn say(out: &mut dyn Write, args: std::fmt::Arguments<'_>) -> Result<()> {
    writeln!(out, "{args}").map_err(|e| Error::io("<stdout>", e))
}

/// Pads an image read from `input`. Learned paddings run in single
/// precision so a weights file holding the mean filter reproduces
/// `meaninterp` exactly. The result is clamped to `[0, 1]` for output.
pub fn cmd_pad(
    input: &std::path::Path,
    method: PadKind,
    size: usize,
    weights: Option<&std::path::Path>,
) -> Result<Tensor<f32>> {
    let image = read_ppm(input)?;
    let padded = match (method, weights) {
        (PadKind::Module, None) => {
            return Err(Error::InvalidArgument("--method module needs --weights".into()));
        }
        (PadKind::Module, Some(path)) => {
            let bank = read_weights::<f32>(path)?
                .into_iter()
                .next()
                .ok_or_else(|| Error::format("weights", "file holds no filter bank"))?;
            if bank.channels() != 3 {
                return Err(Error::ShapeMismatch(format!(
                    "the first filter bank has {} channels, images have 3",
                    bank.channels()
                )));
            }
            let mut module = PaddingModule::new(bank, size)?;
            module.set_mode(Mode::Eval);
            module.pad(&image)?
        }
        (_, Some(_)) => return Err(Error::InvalidArgument("--weights only applies to --method module".into())),
        (kind, None) => PadMethod::new(kind, size)?.apply(&image)?,
    };
    let clamped = padded.data().iter().map(|v| v.clamp(0.0, 1.0)).collect();
    Tensor::from_vec(padded.shape().clone(), clamped)
}

/// Loads the first `train_limit` training and `test_limit` test records,
/// trains, writes the metrics and optionally the module weights, and prints
/// a line per epoch followed by the summary.
pub fn cmd_train(
    config: &TrainConfig,
    data: &std::path::Path,
    train_limit: usize,
    test_limit: usize,
    metrics: &std::path::Path,
    save_weights: Option<&std::path::Path>,
    out: &mut dyn Write,
) -> Result<crate::nn::TrainReport> {
    let train_set = load_split(data, Split::Train, Some(train_limit))?;
    let test_set = load_split(data, Split::Test, Some(test_limit))?;
    let mut io = Ok(());
    let (net, report) = train::<f32>(config, &train_set, &test_set, |e| {
        if io.is_ok() {
            io = say(
                out,
                format_args!(
                    "epoch {:>3}  train loss {:.4} acc {:.4}  test loss {:.4} acc {:.4}  module mse {}  {:.1}s",
                    e.epoch,
                    e.train.loss,
                    e.train.accuracy,
                    e.test.loss,
                    e.test.accuracy,
                    e.test.module_mse_mean().map_or_else(|| "-".to_string(), |m| format!("{m:.6}")),
                    e.seconds(),
                ),
            );
        }
    })?;
    io?;
    write_metrics_csv(&report.metrics_rows(), metrics)?;
    if let Some(path) = save_weights {
        let banks: Vec<_> = net.modules().into_iter().map(|m| m.filters()).collect();
        if banks.is_empty() {
            return Err(Error::InvalidArgument("--save-weights needs --padding module".into()));
        }
        write_weights(&banks, path)?;
    }
    say(out, format_args!("last-5-epoch mean test accuracy: {:.4}", report.last5_test_accuracy()))?;
    say(
        out,
        format_args!(
            "mean epoch time {:.2}s, padding share {:.1}%",
            report.mean_epoch_seconds(),
            100.0 * report.padding_share()
        ),
    )?;
    Ok(report)
}
