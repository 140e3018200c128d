use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::network::{ModuleConfig, Network, NetworkSpec, Placement};
use crate::baseline::PadKind;
use crate::data::{LabeledImage, MetricsRow, Split};
use crate::error::{Error, Result};
use crate::tensor::{Scalar, Tensor};

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub spec: NetworkSpec,
    pub padding: PadKind,
    pub placement: Placement,
    pub module: ModuleConfig,
    pub epochs: usize,
    pub batch: usize,
    pub seed: u64,
    /// Adam learning rate for the network weights.
    pub lr: f64,
    /// Freeze every module once this many epochs have finished; `Some(0)`
    /// trains with frozen modules from the start.
    pub freeze_after: Option<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            spec: NetworkSpec::tiny4(),
            padding: PadKind::Zero,
            placement: Placement::All,
            module: ModuleConfig::default(),
            epochs: 10,
            batch: 64,
            seed: 0,
            lr: 1e-3,
            freeze_after: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SplitStats {
    pub loss: f64,
    pub accuracy: f64,
    /// Mean local loss of each module over the split, in layer order.
    pub module_mse: Vec<f64>,
    pub seconds: f64,
}

impl SplitStats {
    pub fn module_mse_mean(&self) -> Option<f64> {
        (!self.module_mse.is_empty()).then(|| self.module_mse.iter().sum::<f64>() / self.module_mse.len() as f64)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpochStats {
    /// Counted from 1.
    pub epoch: usize,
    pub train: SplitStats,
    pub test: SplitStats,
    /// Portion of the epoch's wall-clock spent padding and un-padding.
    pub pad_seconds: f64,
}

impl EpochStats {
    pub fn seconds(&self) -> f64 {
        self.train.seconds + self.test.seconds
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainReport {
    pub epochs: Vec<EpochStats>,
}

impl TrainReport {
    /// Mean test accuracy over the last five epochs (or all, if fewer).
    pub fn last5_test_accuracy(&self) -> f64 {
        let tail = &self.epochs[self.epochs.len().saturating_sub(5)..];
        if tail.is_empty() {
            return 0.0;
        }
        tail.iter().map(|e| e.test.accuracy).sum::<f64>() / tail.len() as f64
    }

    /// A train row and a test row per epoch. Each row's `seconds` covers
    /// that phase only.
    pub fn metrics_rows(&self) -> Vec<MetricsRow> {
        self.epochs
            .iter()
            .flat_map(|e| {
                [(Split::Train, &e.train), (Split::Test, &e.test)].map(|(split, s)| MetricsRow {
                    epoch: e.epoch,
                    split,
                    loss: s.loss,
                    accuracy: s.accuracy,
                    module_mse_mean: s.module_mse_mean(),
                    seconds: s.seconds,
                })
            })
            .collect()
    }

    pub fn mean_epoch_seconds(&self) -> f64 {
        if self.epochs.is_empty() {
            return 0.0;
        }
        self.epochs.iter().map(EpochStats::seconds).sum::<f64>() / self.epochs.len() as f64
    }

    /// Fraction of total wall-clock spent in padding code.
    pub fn padding_share(&self) -> f64 {
        let total: f64 = self.epochs.iter().map(EpochStats::seconds).sum();
        if total == 0.0 {
            return 0.0;
        }
        self.epochs.iter().map(|e| e.pad_seconds).sum::<f64>() / total
    }
}

fn to_batch<T: Scalar>(images: &[&LabeledImage]) -> (Vec<Tensor<T>>, Vec<u8>) {
    (images.iter().map(|i| i.pixels.cast()).collect(), images.iter().map(|i| i.label).collect())
}

fn diverged(epoch: usize) -> impl Fn(Error) -> Error {
    move |e| match e {
        Error::NonFinite(_) => Error::Diverged { epoch },
        other => other,
    }
}

fn module_means(net: &mut Network<impl Scalar>) -> Vec<f64> {
    net.take_module_mse().into_iter().flatten().collect()
}

/// Evaluates `images` in order, `batch` at a time.
pub fn evaluate<T: Scalar>(net: &mut Network<T>, images: &[LabeledImage], batch: usize) -> Result<SplitStats> {
    if images.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let start = Instant::now();
    let (mut loss, mut correct) = (0.0, 0);
    for chunk in images.chunks(batch.max(1)) {
        let refs: Vec<&LabeledImage> = chunk.iter().collect();
        let (xs, ys) = to_batch::<T>(&refs);
        let out = net.evaluate(&xs, &ys)?;
        loss += out.loss * chunk.len() as f64;
        correct += out.correct;
    }
    let n = images.len() as f64;
    Ok(SplitStats {
        loss: loss / n,
        accuracy: correct as f64 / n,
        module_mse: module_means(net),
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// Trains a freshly built network with Adam, shuffling the training set
/// every epoch and evaluating the test set after it. Everything random is
/// derived from `config.seed`, so a run is reproducible bit for bit.
///
/// `on_epoch` sees each epoch's statistics as soon as they exist.
pub fn train<T: Scalar>(
    config: &TrainConfig,
    train_set: &[LabeledImage],
    test_set: &[LabeledImage],
    mut on_epoch: impl FnMut(&EpochStats),
) -> Result<(Network<T>, TrainReport)> {
    if train_set.is_empty() || test_set.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if config.batch == 0 {
        return Err(Error::InvalidArgument("batch size must be positive".into()));
    }
    let mut net = Network::<T>::build(&config.spec, config.padding, &config.placement, config.module, config.seed)?;
    net.track_module_mse(true);
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(config.seed);
    shuffle_rng.set_stream(1);
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut report = TrainReport::default();

    for epoch in 1..=config.epochs {
        if config.freeze_after.is_some_and(|n| epoch > n) {
            net.freeze_modules();
        }
        net.take_pad_time();
        let start = Instant::now();
        order.shuffle(&mut shuffle_rng);
        let (mut loss, mut correct) = (0.0, 0);
        for idx in order.chunks(config.batch) {
            let refs: Vec<&LabeledImage> = idx.iter().map(|&i| &train_set[i]).collect();
            let (xs, ys) = to_batch::<T>(&refs);
            let out = net.train_step(&xs, &ys, config.lr).map_err(diverged(epoch))?;
            loss += out.loss * idx.len() as f64;
            correct += out.correct;
        }
        let n = train_set.len() as f64;
        let train_stats = SplitStats {
            loss: loss / n,
            accuracy: correct as f64 / n,
            module_mse: module_means(&mut net),
            seconds: start.elapsed().as_secs_f64(),
        };
        let test_stats = evaluate(&mut net, test_set, config.batch).map_err(diverged(epoch))?;
        if !test_stats.loss.is_finite() {
            return Err(Error::Diverged { epoch });
        }
        let stats = EpochStats {
            epoch,
            train: train_stats,
            test: test_stats,
            pad_seconds: net.take_pad_time().as_secs_f64(),
        };
        on_epoch(&stats);
        report.epochs.push(stats);
    }
    Ok((net, report))
}

/// Ratio of mean epoch times, `with / without`.
pub fn overhead_ratio(with: &TrainReport, without: &TrainReport) -> f64 {
    with.mean_epoch_seconds() / without.mean_epoch_seconds()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::synthetic::synthetic_images;
    use crate::nn::network::LayerSpec;

    fn small() -> TrainConfig {
        use LayerSpec::*;
        TrainConfig {
            spec: NetworkSpec {
                input: (32, 32, 3),
                layers: vec![
                    Conv { kernel: 3, out_channels: 4 },
                    Relu,
                    MaxPool,
                    MaxPool,
                    Conv { kernel: 3, out_channels: 4 },
                    Relu,
                    MaxPool,
                    Flatten,
                    Dense { outputs: 10 },
                ],
            },
            padding: PadKind::Module,
            epochs: 3,
            batch: 8,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn report_has_one_entry_per_epoch() {
        let data = synthetic_images(24, 0).unwrap();
        let mut seen = Vec::new();
        let (_, report) = train::<f32>(&small(), &data[..16], &data[16..], |e| seen.push(e.epoch)).unwrap();
        assert_eq!(seen, vec![1, 2, 3]);
        let rows = report.metrics_rows();
        assert_eq!(rows.len(), 6);
        assert!(rows.iter().all(|r| (0.0..=1.0).contains(&r.accuracy) && r.module_mse_mean.is_some()));
        assert!(report.padding_share() > 0.0 && report.padding_share() < 1.0);
    }

    #[test]
    fn runs_are_deterministic() {
        let data = synthetic_images(20, 1).unwrap();
        let run = || {
            let (net, report) = train::<f32>(&small(), &data[..12], &data[12..], |_| {}).unwrap();
            let curve: Vec<(f64, f64, Option<f64>)> =
                report.metrics_rows().iter().map(|r| (r.loss, r.accuracy, r.module_mse_mean)).collect();
            (net.parameters(), curve)
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn freezing_stops_the_filters() {
        let data = synthetic_images(20, 2).unwrap();
        let mut cfg = small();
        cfg.freeze_after = Some(1);
        cfg.epochs = 1;
        let (after_one, _) = train::<f32>(&cfg, &data[..12], &data[12..], |_| {}).unwrap();
        cfg.epochs = 3;
        let (after_three, report) = train::<f32>(&cfg, &data[..12], &data[12..], |_| {}).unwrap();
        let filters = |n: &Network<f32>| n.modules().iter().map(|m| m.filters().weights().to_vec()).collect::<Vec<_>>();
        assert_eq!(filters(&after_one), filters(&after_three));
        let first_module: Vec<f64> = report.epochs.iter().map(|e| e.test.module_mse[0]).collect();
        assert_eq!(first_module[1], first_module[2]);
    }

    #[test]
    fn empty_data_and_divergence() {
        let data = synthetic_images(4, 3).unwrap();
        assert!(matches!(train::<f32>(&small(), &[], &data, |_| {}), Err(Error::EmptyDataset)));
        let cfg = TrainConfig { lr: 1e30, padding: PadKind::Zero, ..small() };
        let err = train::<f32>(&cfg, &data, &data, |_| {}).unwrap_err();
        assert!(matches!(err, Error::Diverged { .. }), "{err}");
    }

    #[test]
    fn last_five_average() {
        let stats = |acc| SplitStats { loss: 0.0, accuracy: acc, module_mse: vec![], seconds: 1.0 };
        let epochs = (1..=7)
            .map(|e| EpochStats { epoch: e, train: stats(0.0), test: stats(e as f64 / 10.0), pad_seconds: 0.0 })
            .collect();
        let report = TrainReport { epochs };
        assert!((report.last5_test_accuracy() - 0.5).abs() < 1e-12);
        assert_eq!(report.mean_epoch_seconds(), 2.0);
    }
}
