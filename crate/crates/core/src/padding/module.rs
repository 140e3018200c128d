use crate::error::{Error, Result};
use crate::padding::bundle::{
    assemble_padded, build_predictor, extract_borders, extract_neighbors, extract_target, predict_with, BorderBundle,
    PredictorBundle,
};
use crate::padding::filters::{FilterBank, Mode};
use crate::tensor::{Scalar, Shape, Tensor};

/// Minimum spatial size for building supervision from an input.
pub const MIN_TRAIN_SIZE: usize = 4;
/// Minimum spatial size for padding alone.
pub const MIN_EVAL_SIZE: usize = 2;

/// Predictor and ground truth built from one channel of an original input.
#[derive(Clone, Debug, PartialEq)]
pub struct Supervision<T> {
    pub predictor: PredictorBundle<T>,
    pub target: BorderBundle<T>,
}

impl<T: Scalar> Supervision<T> {
    pub fn from_plane(plane: &Tensor<T>) -> Result<Self> {
        let target = extract_target(plane)?;
        let predictor = build_predictor(&extract_neighbors(plane)?)?;
        Ok(Supervision { predictor, target })
    }
}

/// Pads one channel plane by `size` rings with filter `theta`, one ring per
/// iteration, each ring predicted from the borders of the previous result.
pub fn pad_plane<T: Scalar>(theta: [T; 3], plane: &Tensor<T>, size: usize) -> Result<Tensor<T>> {
    let mut current = plane.clone();
    for _ in 0..size {
        let predictor = build_predictor(&extract_borders(&current)?)?;
        let rows = predict_with(theta, &predictor);
        current = assemble_padded(&current, &rows)?;
    }
    Ok(current)
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
struct MseMeter {
    sum: f64,
    count: u64,
}

/// The trainable padding layer.
///
/// A training-mode forward caches per-channel [`Supervision`] built from the
/// original input; the following backward takes one local optimizer step on
/// the filters and returns only the interior of the incoming gradient.
#[derive(Clone, Debug)]
pub struct PaddingModule<T> {
    filters: FilterBank<T>,
    pad_size: usize,
    cache: Option<Vec<Vec<Supervision<T>>>>,
    output_shapes: Vec<Shape>,
    meter: Option<MseMeter>,
}

impl<T: Scalar> PaddingModule<T> {
    pub fn new(filters: FilterBank<T>, pad_size: usize) -> Result<Self> {
        if pad_size == 0 {
            return Err(Error::InvalidArgument("padding size must be at least 1".into()));
        }
        Ok(PaddingModule { filters, pad_size, cache: None, output_shapes: Vec::new(), meter: None })
    }

    pub fn filters(&self) -> &FilterBank<T> {
        &self.filters
    }

    pub fn filters_mut(&mut self) -> &mut FilterBank<T> {
        &mut self.filters
    }

    pub fn pad_size(&self) -> usize {
        self.pad_size
    }

    pub fn mode(&self) -> Mode {
        self.filters.mode()
    }

    /// Switching to eval drops any pending supervision.
    pub fn set_mode(&mut self, mode: Mode) {
        self.filters.set_mode(mode);
        if mode == Mode::Eval {
            self.cache = None;
        }
    }

    pub fn freeze(&mut self) {
        self.set_mode(Mode::Eval);
    }

    /// Cached supervision per sample, then per channel.
    pub fn cache(&self) -> Option<&[Vec<Supervision<T>>]> {
        self.cache.as_deref()
    }

    /// Enables accumulation of the local loss over subsequent forward passes,
    /// in either mode. Read it back with [`Self::take_mse`].
    pub fn track_mse(&mut self, on: bool) {
        self.meter = on.then(MseMeter::default);
    }

    /// Mean local loss accumulated since the last call, then resets.
    pub fn take_mse(&mut self) -> Option<f64> {
        let meter = self.meter.as_mut()?;
        let mean = (meter.count > 0).then(|| meter.sum / meter.count as f64);
        *meter = MseMeter::default();
        mean
    }

    fn check_input(&self, m: &Tensor<T>, min: usize) -> Result<()> {
        if m.channels() != self.filters.channels() {
            return Err(Error::ShapeMismatch(format!(
                "input has {} channels, module has {} filters",
                m.channels(),
                self.filters.channels()
            )));
        }
        if m.height() < min || m.width() < min {
            return Err(Error::TooSmall { height: m.height(), width: m.width(), min });
        }
        Ok(())
    }

    /// Pads without touching any state. Works in either mode and only needs
    /// both spatial dims to be at least 2.
    pub fn pad(&self, m: &Tensor<T>) -> Result<Tensor<T>> {
        self.check_input(m, MIN_EVAL_SIZE)?;
        let planes = (0..m.channels())
            .map(|c| pad_plane(self.filters.theta(c)?, &m.channel(c)?, self.pad_size))
            .collect::<Result<Vec<_>>>()?;
        let out = if m.shape().rank() == 2 {
            planes.into_iter().next().expect("one plane")
        } else {
            Tensor::from_channels(&planes)?
        };
        if !out.is_finite() {
            return Err(Error::NonFinite("padding module forward"));
        }
        Ok(out)
    }

    fn supervise(&self, m: &Tensor<T>) -> Result<Vec<Supervision<T>>> {
        (0..m.channels()).map(|c| Supervision::from_plane(&m.channel(c)?)).collect()
    }

    fn record(&mut self, sup: &[Supervision<T>]) -> Result<()> {
        if self.meter.is_none() {
            return Ok(());
        }
        let mut sum = 0.0;
        for (c, s) in sup.iter().enumerate() {
            sum += self.filters.local_mse(&s.predictor, &s.target, c)?.as_f64();
        }
        let meter = self.meter.as_mut().expect("checked above");
        meter.sum += sum / sup.len() as f64;
        meter.count += 1;
        Ok(())
    }

    pub fn forward(&mut self, m: &Tensor<T>) -> Result<Tensor<T>> {
        let mut out = self.forward_batch(std::slice::from_ref(m))?;
        Ok(out.pop().expect("one output per input"))
    }

    /// Pads every sample. In train mode the supervision of the whole batch
    /// replaces the cache.
    pub fn forward_batch(&mut self, batch: &[Tensor<T>]) -> Result<Vec<Tensor<T>>> {
        let train = self.mode() == Mode::Train;
        let min = if train || self.meter.is_some() { MIN_TRAIN_SIZE } else { MIN_EVAL_SIZE };
        for m in batch {
            self.check_input(m, min)?;
        }
        let mut cache = Vec::with_capacity(if train { batch.len() } else { 0 });
        for m in batch {
            if train || self.meter.is_some() {
                let sup = self.supervise(m)?;
                self.record(&sup)?;
                if train {
                    cache.push(sup);
                }
            }
        }
        let outputs = batch.iter().map(|m| self.pad(m)).collect::<Result<Vec<_>>>()?;
        self.output_shapes = outputs.iter().map(|o| o.shape().clone()).collect();
        self.cache = train.then_some(cache);
        Ok(outputs)
    }

    /// Mean local loss over the cached supervision at the current filters.
    pub fn cached_mse(&self) -> Option<f64> {
        let cache = self.cache.as_ref()?;
        let mut total = 0.0;
        let mut n = 0usize;
        for sample in cache {
            for (c, s) in sample.iter().enumerate() {
                total += self.filters.local_mse(&s.predictor, &s.target, c).ok()?.as_f64();
                n += 1;
            }
        }
        (n > 0).then(|| total / n as f64)
    }

    /// Mean local loss of `inputs` at the current filters; no state changes.
    pub fn evaluate_mse(&self, inputs: &[Tensor<T>]) -> Result<f64> {
        if inputs.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let mut total = 0.0;
        let mut n = 0usize;
        for m in inputs {
            self.check_input(m, MIN_TRAIN_SIZE)?;
            for (c, s) in self.supervise(m)?.iter().enumerate() {
                total += self.filters.local_mse(&s.predictor, &s.target, c)?.as_f64();
                n += 1;
            }
        }
        Ok(total / n as f64)
    }

    /// One optimizer step per channel on the batch-averaged local gradient,
    /// then drops the cache.
    pub fn local_update(&mut self) -> Result<()> {
        let cache = self.cache.take().ok_or(Error::MissingCache)?;
        if cache.is_empty() {
            return Ok(());
        }
        let scale = T::one() / T::of(cache.len() as f64);
        let mut grads = vec![[T::zero(); 3]; self.filters.channels()];
        for sample in &cache {
            for (c, s) in sample.iter().enumerate() {
                let g = self.filters.local_mse_grad(&s.predictor, &s.target, c)?;
                for k in 0..3 {
                    grads[c][k] += g[k];
                }
            }
        }
        for g in &mut grads {
            for v in g.iter_mut() {
                *v *= scale;
            }
        }
        self.filters.step(&grads)
    }

    pub fn backward(&mut self, g: &Tensor<T>) -> Result<Tensor<T>> {
        let mut out = self.backward_batch(std::slice::from_ref(g))?;
        Ok(out.pop().expect("one gradient per input"))
    }

    /// Updates the filters (train mode) and returns the incoming gradients
    /// with the padded rings stripped off. Gradients over the padding never
    /// reach the previous layer.
    pub fn backward_batch(&mut self, grads: &[Tensor<T>]) -> Result<Vec<Tensor<T>>> {
        if !self.output_shapes.is_empty() {
            if grads.len() != self.output_shapes.len() {
                return Err(Error::ShapeMismatch(format!(
                    "{} gradients for a batch of {}",
                    grads.len(),
                    self.output_shapes.len()
                )));
            }
            for (g, shape) in grads.iter().zip(&self.output_shapes) {
                if g.shape() != shape {
                    return Err(Error::ShapeMismatch(format!(
                        "gradient {:?} for output {:?}",
                        g.shape().dims(),
                        shape.dims()
                    )));
                }
            }
        }
        if self.mode() == Mode::Train {
            self.local_update()?;
        }
        grads.iter().map(|g| g.interior(self.pad_size)).collect()
    }
}
