use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::adam::AdamState;
use super::conv::{Conv2d, ConvPadding};
use super::layers::{softmax_xent, Dense, Flatten, MaxPool2, Relu, XentOutput};
use crate::baseline::{mean_interp_module, PadKind};
use crate::error::{Error, Result};
use crate::padding::{FilterBank, LocalOptimizer, Mode, PaddingModule};
use crate::tensor::{Scalar, Tensor};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LayerSpec {
    /// Stride-1 "same" convolution.
    Conv { kernel: usize, out_channels: usize },
    Relu,
    /// 2x2 max pooling with stride 2.
    MaxPool,
    Flatten,
    Dense { outputs: usize },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NetworkSpec {
    /// Height, width, channels.
    pub input: (usize, usize, usize),
    pub layers: Vec<LayerSpec>,
}

impl NetworkSpec {
    /// The four-convolution desk-scale classifier for 32x32 RGB inputs:
    /// conv16, pool, conv32, pool, conv64, conv64, pool, dense128, dense10,
    /// with ReLU after every convolution and the hidden dense layer.
    pub fn tiny4() -> Self {
        use LayerSpec::*;
        let conv = |out_channels| Conv { kernel: 3, out_channels };
        NetworkSpec {
            input: (32, 32, 3),
            layers: vec![
                conv(16),
                Relu,
                MaxPool,
                conv(32),
                Relu,
                MaxPool,
                conv(64),
                Relu,
                conv(64),
                Relu,
                MaxPool,
                Flatten,
                Dense { outputs: 128 },
                Relu,
                Dense { outputs: 10 },
            ],
        }
    }

    pub fn conv_count(&self) -> usize {
        self.layers.iter().filter(|l| matches!(l, LayerSpec::Conv { .. })).count()
    }

    /// Shape after every layer; fails if consecutive layers do not compose.
    pub fn shapes(&self) -> Result<Vec<(usize, usize, usize)>> {
        let (mut h, mut w, mut c) = self.input;
        if h == 0 || w == 0 || c == 0 {
            return Err(Error::InvalidArgument("network input must be non-empty".into()));
        }
        let mut flat = false;
        let mut out = Vec::with_capacity(self.layers.len());
        for (i, layer) in self.layers.iter().enumerate() {
            let bad = |why: &str| Error::InvalidArgument(format!("layer {i} ({layer:?}): {why}"));
            match *layer {
                LayerSpec::Conv { kernel, out_channels } => {
                    if flat {
                        return Err(bad("convolution after flatten"));
                    }
                    if kernel % 2 == 0 || out_channels == 0 {
                        return Err(bad("kernel must be odd and channels positive"));
                    }
                    c = out_channels;
                }
                LayerSpec::Relu => {}
                LayerSpec::MaxPool => {
                    if flat || h < 2 || w < 2 {
                        return Err(bad("pooling needs a spatial input of at least 2x2"));
                    }
                    (h, w) = (h / 2, w / 2);
                }
                LayerSpec::Flatten => {
                    if flat {
                        return Err(bad("already flat"));
                    }
                    (h, w, c) = (1, h * w * c, 1);
                    flat = true;
                }
                LayerSpec::Dense { outputs } => {
                    if !flat || outputs == 0 {
                        return Err(bad("dense layers need a flattened input"));
                    }
                    w = outputs;
                }
            }
            out.push((h, w, c));
        }
        match self.layers.last() {
            Some(LayerSpec::Dense { .. }) => Ok(out),
            _ => Err(Error::InvalidArgument("the last layer must be dense".into())),
        }
    }

    pub fn classes(&self) -> Result<usize> {
        Ok(self.shapes()?.last().expect("validated non-empty").1)
    }
}

/// Which convolutions receive a learned padding.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub enum Placement {
    #[default]
    All,
    First,
    /// Convolution `n / 2` of `n`.
    Middle,
    Last,
    /// First, middle and last together.
    Comb,
    /// Explicit zero-based convolution ordinals.
    Custom(Vec<usize>),
}

impl Placement {
    pub const NAMED: [Placement; 5] =
        [Placement::First, Placement::Middle, Placement::Last, Placement::Comb, Placement::All];

    /// Sorted, deduplicated convolution ordinals.
    pub fn resolve(&self, convs: usize) -> Result<Vec<usize>> {
        if convs == 0 {
            return Err(Error::InvalidArgument("the network has no convolutions".into()));
        }
        let mut idx = match self {
            Placement::All => (0..convs).collect(),
            Placement::First => vec![0],
            Placement::Middle => vec![convs / 2],
            Placement::Last => vec![convs - 1],
            Placement::Comb => vec![0, convs / 2, convs - 1],
            Placement::Custom(v) => v.clone(),
        };
        idx.sort_unstable();
        idx.dedup();
        if let Some(&bad) = idx.iter().find(|&&i| i >= convs) {
            return Err(Error::IndexOutOfRange { index: bad, len: convs });
        }
        Ok(idx)
    }
}

impl fmt::Display for Placement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Placement::All => f.write_str("all"),
            Placement::First => f.write_str("first"),
            Placement::Middle => f.write_str("middle"),
            Placement::Last => f.write_str("last"),
            Placement::Comb => f.write_str("comb"),
            Placement::Custom(v) => {
                let parts: Vec<String> = v.iter().map(usize::to_string).collect();
                f.write_str(&parts.join(","))
            }
        }
    }
}

impl FromStr for Placement {
    type Err = Error;

    /// Named placements, or a comma-separated list of convolution ordinals.
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "all" => Placement::All,
            "first" => Placement::First,
            "middle" => Placement::Middle,
            "last" => Placement::Last,
            "comb" => Placement::Comb,
            other => Placement::Custom(
                other
                    .split(',')
                    .map(|p| p.trim().parse())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| Error::InvalidArgument(format!("unknown placement {other:?}")))?,
            ),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub enum ModuleInit {
    /// Every filter starts at (1/3, 1/3, 1/3).
    #[default]
    Mean,
    /// Independent uniform draws from `[-half_width, half_width]`.
    Uniform { half_width: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct ModuleConfig {
    pub init: ModuleInit,
    pub optimizer: LocalOptimizer,
}

#[derive(Clone, Debug)]
enum Layer<T> {
    Conv(Box<Conv2d<T>>),
    Relu(Relu),
    Pool(MaxPool2),
    Flatten(Flatten),
    Dense(Dense<T>),
}

/// A sequential classifier. Convolutions at the placed ordinals pad with a
/// padding module (or the frozen mean module for `MeanInterp`); the rest use
/// zero padding.
#[derive(Clone, Debug)]
pub struct Network<T> {
    spec: NetworkSpec,
    layers: Vec<Layer<T>>,
    /// Layer indices of convolutions carrying a module, and whether each
    /// module still learns.
    placed: Vec<(usize, bool)>,
    adam: AdamState<T>,
}

fn he_uniform<T: Scalar>(rng: &mut ChaCha8Rng, fan_in: usize, n: usize) -> Vec<T> {
    let bound = (6.0 / fan_in as f64).sqrt();
    (0..n).map(|_| T::of(rng.gen_range(-bound..bound))).collect()
}

impl<T: Scalar> Network<T> {
    /// Builds the network with He-uniform weights and zero biases drawn from
    /// `seed`. `padding` chooses what the placed convolutions use; zero,
    /// reflect and replicate apply to every convolution.
    pub fn build(
        spec: &NetworkSpec,
        padding: PadKind,
        placement: &Placement,
        module: ModuleConfig,
        seed: u64,
    ) -> Result<Self> {
        let shapes = spec.shapes()?;
        let placed_convs = match padding {
            PadKind::Module | PadKind::MeanInterp => placement.resolve(spec.conv_count())?,
            _ => Vec::new(),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut layers = Vec::with_capacity(spec.layers.len());
        let mut placed = Vec::new();
        let mut conv_ordinal = 0;
        let mut prev = spec.input;
        for (i, layer) in spec.layers.iter().enumerate() {
            layers.push(match *layer {
                LayerSpec::Conv { kernel, out_channels } => {
                    let ci = prev.2;
                    let weights = he_uniform(&mut rng, kernel * kernel * ci, kernel * kernel * ci * out_channels);
                    let bias = vec![T::zero(); out_channels];
                    let pad = if placed_convs.contains(&conv_ordinal) {
                        let m = match (padding, module.init) {
                            (PadKind::MeanInterp, _) => mean_interp_module(ci, kernel / 2)?,
                            (_, ModuleInit::Mean) => PaddingModule::new(
                                FilterBank::mean(ci)?.with_optimizer(module.optimizer),
                                kernel / 2,
                            )?,
                            (_, ModuleInit::Uniform { half_width }) => PaddingModule::new(
                                FilterBank::uniform(ci, half_width, &mut rng)?.with_optimizer(module.optimizer),
                                kernel / 2,
                            )?,
                        };
                        placed.push((i, padding == PadKind::Module));
                        ConvPadding::Learned(m)
                    } else if matches!(padding, PadKind::Module | PadKind::MeanInterp) {
                        ConvPadding::Fixed(PadKind::Zero)
                    } else {
                        ConvPadding::Fixed(padding)
                    };
                    conv_ordinal += 1;
                    Layer::Conv(Box::new(Conv2d::new(kernel, ci, out_channels, weights, bias, pad)?))
                }
                LayerSpec::Relu => Layer::Relu(Relu::default()),
                LayerSpec::MaxPool => Layer::Pool(MaxPool2::default()),
                LayerSpec::Flatten => Layer::Flatten(Flatten::default()),
                LayerSpec::Dense { outputs } => {
                    let inputs = prev.1;
                    let weights = he_uniform(&mut rng, inputs, inputs * outputs);
                    Layer::Dense(Dense::new(inputs, outputs, weights, vec![T::zero(); outputs])?)
                }
            });
            prev = shapes[i];
        }
        Ok(Network { spec: spec.clone(), layers, placed, adam: AdamState::default() })
    }

    pub fn spec(&self) -> &NetworkSpec {
        &self.spec
    }

    /// Padding modules in layer order.
    pub fn modules(&self) -> Vec<&PaddingModule<T>> {
        self.placed
            .iter()
            .filter_map(|&(i, _)| match &self.layers[i] {
                Layer::Conv(c) => c.module(),
                _ => None,
            })
            .collect()
    }

    fn for_each_module(&mut self, mut f: impl FnMut(&mut PaddingModule<T>, bool)) {
        for &(i, learns) in &self.placed {
            if let Layer::Conv(c) = &mut self.layers[i] {
                if let Some(m) = c.module_mut() {
                    f(m, learns);
                }
            }
        }
    }

    /// Stops every module from learning for the rest of the network's life.
    pub fn freeze_modules(&mut self) {
        for p in &mut self.placed {
            p.1 = false;
        }
        self.for_each_module(|m, _| m.freeze());
    }

    pub fn modules_learning(&self) -> bool {
        self.placed.iter().any(|p| p.1)
    }

    pub fn track_module_mse(&mut self, on: bool) {
        self.for_each_module(|m, _| m.track_mse(on));
    }

    /// Mean local loss per module since the last call, in layer order.
    pub fn take_module_mse(&mut self) -> Vec<Option<f64>> {
        let mut out = Vec::new();
        self.for_each_module(|m, _| out.push(m.take_mse()));
        out
    }

    /// Time spent padding and un-padding since the last call.
    pub fn take_pad_time(&mut self) -> Duration {
        self.layers
            .iter_mut()
            .map(|l| match l {
                Layer::Conv(c) => c.take_pad_time(),
                _ => Duration::ZERO,
            })
            .sum()
    }

    fn set_training(&mut self, training: bool) {
        self.for_each_module(|m, learns| m.set_mode(if training && learns { Mode::Train } else { Mode::Eval }));
    }

    /// Logits for a batch. With `train` set, activations are cached for
    /// [`Self::backward`] and learning modules cache their supervision.
    pub fn forward(&mut self, batch: &[Tensor<T>], train: bool) -> Result<Vec<Tensor<T>>> {
        self.set_training(train);
        let mut x = batch.to_vec();
        for layer in &mut self.layers {
            x = match layer {
                Layer::Conv(c) => c.forward(&x, train)?,
                Layer::Relu(r) => r.forward(&x, train),
                Layer::Pool(p) => p.forward(&x, train)?,
                Layer::Flatten(f) => f.forward(&x, train)?,
                Layer::Dense(d) => d.forward(&x, train)?,
            };
        }
        Ok(x)
    }

    /// Accumulates parameter gradients from the logit gradients. Learning
    /// modules take their local step on the way.
    pub fn backward(&mut self, grads: &[Tensor<T>]) -> Result<()> {
        let mut g = grads.to_vec();
        for (i, layer) in self.layers.iter_mut().enumerate().rev() {
            g = match layer {
                Layer::Conv(c) => c.backward(&g, i > 0)?,
                Layer::Relu(r) => r.backward(&g)?,
                Layer::Pool(p) => p.backward(&g)?,
                Layer::Flatten(f) => f.backward(&g)?,
                Layer::Dense(d) => d.backward(&g)?,
            };
        }
        Ok(())
    }

    pub fn zero_grad(&mut self) {
        for layer in &mut self.layers {
            match layer {
                Layer::Conv(c) => c.zero_grad(),
                Layer::Dense(d) => d.zero_grad(),
                _ => {}
            }
        }
    }

    /// One Adam step over every convolution and dense parameter.
    pub fn adam_step(&mut self, lr: f64) -> Result<()> {
        let mut params: Vec<(&mut [T], &[T])> = Vec::new();
        for layer in &mut self.layers {
            match layer {
                Layer::Conv(c) => params.extend(c.params_and_grads()),
                Layer::Dense(d) => params.extend(d.params_and_grads()),
                _ => {}
            }
        }
        self.adam.step(&mut params, lr)
    }

    /// Forward, loss, backward and optimizer step on one minibatch.
    pub fn train_step(&mut self, batch: &[Tensor<T>], labels: &[u8], lr: f64) -> Result<XentOutput<T>> {
        let logits = self.forward(batch, true)?;
        let out = softmax_xent(&logits, labels)?;
        if !out.loss.is_finite() {
            return Err(Error::NonFinite("training loss"));
        }
        self.zero_grad();
        self.backward(&out.grads)?;
        self.adam_step(lr)?;
        Ok(out)
    }

    /// Loss and correct count without touching any parameter.
    pub fn evaluate(&mut self, batch: &[Tensor<T>], labels: &[u8]) -> Result<XentOutput<T>> {
        let logits = self.forward(batch, false)?;
        softmax_xent(&logits, labels)
    }

    /// Every trainable value in a fixed order, for comparisons.
    pub fn parameters(&self) -> Vec<T> {
        let mut out = Vec::new();
        for layer in &self.layers {
            match layer {
                Layer::Conv(c) => {
                    out.extend_from_slice(c.weights());
                    out.extend_from_slice(c.bias());
                    if let Some(m) = c.module() {
                        out.extend(m.filters().weights().iter().flatten());
                    }
                }
                Layer::Dense(d) => {
                    out.extend_from_slice(d.weights());
                    out.extend_from_slice(d.bias());
                }
                _ => {}
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::Shape;

    fn small_spec() -> NetworkSpec {
        use LayerSpec::*;
        NetworkSpec {
            input: (8, 8, 2),
            layers: vec![
                Conv { kernel: 3, out_channels: 3 },
                Relu,
                MaxPool,
                Conv { kernel: 3, out_channels: 4 },
                Relu,
                Flatten,
                Dense { outputs: 3 },
            ],
        }
    }

    fn batch(n: usize, seed: u64) -> (Vec<Tensor<f64>>, Vec<u8>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let xs = (0..n)
            .map(|_| {
                Tensor::from_vec(Shape::d3(8, 8, 2).unwrap(), (0..128).map(|_| rng.gen_range(0.0..1.0)).collect())
                    .unwrap()
            })
            .collect();
        let ys = (0..n).map(|_| rng.gen_range(0..3)).collect();
        (xs, ys)
    }

    #[test]
    fn tiny4_shapes() {
        let spec = NetworkSpec::tiny4();
        assert_eq!(spec.conv_count(), 4);
        let shapes = spec.shapes().unwrap();
        assert_eq!(shapes[10], (4, 4, 64));
        assert_eq!(shapes[11], (1, 1024, 1));
        assert_eq!(spec.classes().unwrap(), 10);
    }

    #[test]
    fn bad_specs() {
        let mut spec = small_spec();
        spec.layers.pop();
        assert!(spec.shapes().is_err());
        let mut spec = small_spec();
        spec.layers.insert(0, LayerSpec::Dense { outputs: 2 });
        assert!(spec.shapes().is_err());
    }

    #[test]
    fn placements() {
        assert_eq!(Placement::First.resolve(4).unwrap(), vec![0]);
        assert_eq!(Placement::Middle.resolve(4).unwrap(), vec![2]);
        assert_eq!(Placement::Last.resolve(4).unwrap(), vec![3]);
        assert_eq!(Placement::Comb.resolve(4).unwrap(), vec![0, 2, 3]);
        assert_eq!(Placement::All.resolve(4).unwrap(), vec![0, 1, 2, 3]);
        assert!(Placement::Custom(vec![4]).resolve(4).is_err());
        assert_eq!("1,3".parse::<Placement>().unwrap(), Placement::Custom(vec![1, 3]));
        assert_eq!("comb".parse::<Placement>().unwrap(), Placement::Comb);
        assert!("sideways".parse::<Placement>().is_err());
        for p in Placement::NAMED {
            assert_eq!(p.to_string().parse::<Placement>().unwrap(), p);
        }
    }

    #[test]
    fn modules_follow_placement() {
        let spec = NetworkSpec::tiny4();
        let cfg = ModuleConfig::default();
        let net = Network::<f32>::build(&spec, PadKind::Module, &Placement::Comb, cfg, 0).unwrap();
        let channels: Vec<usize> = net.modules().iter().map(|m| m.filters().channels()).collect();
        assert_eq!(channels, vec![3, 32, 64]);
        let zero = Network::<f32>::build(&spec, PadKind::Zero, &Placement::All, cfg, 0).unwrap();
        assert!(zero.modules().is_empty());
    }

    #[test]
    fn training_reduces_loss_on_a_fixed_batch() {
        let (xs, ys) = batch(6, 1);
        let mut net =
            Network::<f64>::build(&small_spec(), PadKind::Module, &Placement::All, ModuleConfig::default(), 3).unwrap();
        let first = net.train_step(&xs, &ys, 1e-2).unwrap().loss;
        let mut last = first;
        for _ in 0..40 {
            last = net.train_step(&xs, &ys, 1e-2).unwrap().loss;
        }
        assert!(last < 0.5 * first, "{first} -> {last}");
    }

    #[test]
    fn evaluation_leaves_parameters_alone() {
        let (xs, ys) = batch(3, 2);
        let mut net =
            Network::<f64>::build(&small_spec(), PadKind::Module, &Placement::All, ModuleConfig::default(), 4).unwrap();
        let before = net.parameters();
        net.evaluate(&xs, &ys).unwrap();
        assert_eq!(before, net.parameters());
    }

    #[test]
    fn frozen_module_matches_mean_interpolation() {
        let (xs, ys) = batch(4, 5);
        let cfg = ModuleConfig::default();
        let mut module = Network::<f64>::build(&small_spec(), PadKind::Module, &Placement::All, cfg, 9).unwrap();
        module.freeze_modules();
        let mut mean = Network::<f64>::build(&small_spec(), PadKind::MeanInterp, &Placement::All, cfg, 9).unwrap();
        for _ in 0..3 {
            let a = module.train_step(&xs, &ys, 1e-2).unwrap();
            let b = mean.train_step(&xs, &ys, 1e-2).unwrap();
            assert_eq!(a.loss.to_bits(), b.loss.to_bits());
        }
        assert_eq!(module.parameters(), mean.parameters());
    }

    #[test]
    fn module_mse_is_reported_per_module() {
        let (xs, ys) = batch(2, 6);
        let mut net =
            Network::<f64>::build(&small_spec(), PadKind::Module, &Placement::All, ModuleConfig::default(), 1).unwrap();
        net.track_module_mse(true);
        net.train_step(&xs, &ys, 1e-3).unwrap();
        let mse = net.take_module_mse();
        assert_eq!(mse.len(), 2);
        assert!(mse.iter().all(|m| m.is_some_and(|v| v >= 0.0)));
    }
}
