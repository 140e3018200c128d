use std::time::{Duration, Instant};

use crate::baseline::{BorderMap, PadKind};
use crate::error::{Error, Result};
use crate::padding::{Mode, PaddingModule};
use crate::tensor::{Scalar, Shape, Tensor};

/// How a convolution fills its border before the valid correlation.
#[derive(Clone, Debug)]
pub enum ConvPadding<T> {
    /// Zero, reflect or replicate; backward is the exact adjoint.
    Fixed(PadKind),
    /// A padding module. Backward strips the padded rings.
    Learned(PaddingModule<T>),
}

/// Stride-1 "same" convolution with an odd square kernel.
///
/// Weights are laid out `[ky][kx][cin][cout]` so the innermost loops run over
/// contiguous output channels.
#[derive(Clone, Debug)]
pub struct Conv2d<T> {
    kernel: usize,
    in_channels: usize,
    out_channels: usize,
    weights: Vec<T>,
    bias: Vec<T>,
    grad_weights: Vec<T>,
    grad_bias: Vec<T>,
    padding: ConvPadding<T>,
    padded: Vec<Tensor<T>>,
    map: Option<BorderMap>,
    pad_time: Duration,
}

impl<T: Scalar> Conv2d<T> {
    pub fn new(
        kernel: usize,
        in_channels: usize,
        out_channels: usize,
        weights: Vec<T>,
        bias: Vec<T>,
        padding: ConvPadding<T>,
    ) -> Result<Self> {
        if kernel.is_multiple_of(2) {
            return Err(Error::InvalidArgument(format!("kernel size {kernel} must be odd")));
        }
        if weights.len() != kernel * kernel * in_channels * out_channels || bias.len() != out_channels {
            return Err(Error::ShapeMismatch(format!(
                "{} weights and {} biases for a {kernel}x{kernel}x{in_channels}x{out_channels} kernel",
                weights.len(),
                bias.len()
            )));
        }
        match &padding {
            ConvPadding::Fixed(PadKind::MeanInterp | PadKind::Module) => {
                return Err(Error::InvalidArgument("learned paddings must be attached as modules".into()))
            }
            ConvPadding::Learned(m) if m.pad_size() != kernel / 2 || m.filters().channels() != in_channels => {
                return Err(Error::ShapeMismatch("padding module does not match the convolution".into()))
            }
            _ => {}
        }
        let (gw, gb) = (vec![T::zero(); weights.len()], vec![T::zero(); out_channels]);
        Ok(Conv2d {
            kernel,
            in_channels,
            out_channels,
            weights,
            bias,
            grad_weights: gw,
            grad_bias: gb,
            padding,
            padded: Vec::new(),
            map: None,
            pad_time: Duration::ZERO,
        })
    }

    pub fn kernel(&self) -> usize {
        self.kernel
    }

    pub fn in_channels(&self) -> usize {
        self.in_channels
    }

    pub fn out_channels(&self) -> usize {
        self.out_channels
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn bias(&self) -> &[T] {
        &self.bias
    }

    pub fn grad_weights(&self) -> &[T] {
        &self.grad_weights
    }

    pub fn grad_bias(&self) -> &[T] {
        &self.grad_bias
    }

    pub fn padding(&self) -> &ConvPadding<T> {
        &self.padding
    }

    pub fn module(&self) -> Option<&PaddingModule<T>> {
        match &self.padding {
            ConvPadding::Learned(m) => Some(m),
            ConvPadding::Fixed(_) => None,
        }
    }

    pub fn module_mut(&mut self) -> Option<&mut PaddingModule<T>> {
        match &mut self.padding {
            ConvPadding::Learned(m) => Some(m),
            ConvPadding::Fixed(_) => None,
        }
    }

    pub fn params_and_grads(&mut self) -> [(&mut [T], &[T]); 2] {
        [(&mut self.weights, &self.grad_weights), (&mut self.bias, &self.grad_bias)]
    }

    pub fn zero_grad(&mut self) {
        self.grad_weights.fill(T::zero());
        self.grad_bias.fill(T::zero());
    }

    /// Wall-clock time spent padding and un-padding since the last call.
    pub fn take_pad_time(&mut self) -> Duration {
        std::mem::take(&mut self.pad_time)
    }

    fn fixed_map(&mut self, kind: PadKind, h: usize, w: usize) -> Result<&BorderMap> {
        let pad = self.kernel / 2;
        let stale = self.map.as_ref().is_none_or(|m| m.size() != pad || m.apply_dims() != (h, w));
        if stale {
            self.map = Some(BorderMap::new(kind, h, w, pad)?);
        }
        Ok(self.map.as_ref().expect("just built"))
    }

    fn pad_batch(&mut self, batch: &[Tensor<T>]) -> Result<Vec<Tensor<T>>> {
        let start = Instant::now();
        let out = if self.kernel == 1 {
            batch.to_vec()
        } else {
            match self.padding {
                ConvPadding::Learned(ref mut module) => module.forward_batch(batch)?,
                ConvPadding::Fixed(kind) => {
                    let first = batch.first().ok_or(Error::EmptyDataset)?;
                    let map = self.fixed_map(kind, first.height(), first.width())?.clone();
                    batch.iter().map(|x| map.apply(x)).collect::<Result<Vec<_>>>()?
                }
            }
        };
        self.pad_time += start.elapsed();
        Ok(out)
    }

    /// Pads, then correlates. Padded inputs are kept for the backward pass
    /// when `keep` is set.
    pub fn forward(&mut self, batch: &[Tensor<T>], keep: bool) -> Result<Vec<Tensor<T>>> {
        for x in batch {
            if x.shape().rank() != 3 || x.channels() != self.in_channels {
                return Err(Error::ShapeMismatch(format!(
                    "conv expects {} input channels, got {:?}",
                    self.in_channels,
                    x.shape().dims()
                )));
            }
        }
        let padded = self.pad_batch(batch)?;
        let outputs = padded.iter().map(|xp| self.correlate(xp)).collect::<Result<Vec<_>>>()?;
        self.padded = if keep { padded } else { Vec::new() };
        Ok(outputs)
    }

    fn correlate(&self, xp: &Tensor<T>) -> Result<Tensor<T>> {
        let (k, ci, co) = (self.kernel, self.in_channels, self.out_channels);
        let (hp, wp) = (xp.height(), xp.width());
        if hp < k || wp < k {
            return Err(Error::TooSmall { height: hp, width: wp, min: k });
        }
        let (oh, ow) = (hp - k + 1, wp - k + 1);
        let x = xp.data();
        let mut out = vec![T::zero(); oh * ow * co];
        for oy in 0..oh {
            for ox in 0..ow {
                let o = &mut out[(oy * ow + ox) * co..][..co];
                o.copy_from_slice(&self.bias);
                for ky in 0..k {
                    let base = ((oy + ky) * wp + ox) * ci;
                    let patch = &x[base..base + k * ci];
                    let wk = &self.weights[ky * k * ci * co..][..k * ci * co];
                    for (&xv, wrow) in patch.iter().zip(wk.chunks_exact(co)) {
                        for (ov, &wv) in o.iter_mut().zip(wrow) {
                            *ov += xv * wv;
                        }
                    }
                }
            }
        }
        Ok(Tensor::from_raw(Shape::d3(oh, ow, co)?, out))
    }

    /// Accumulates weight and bias gradients and returns input gradients.
    /// With `need_input_grad` unset the input gradient is skipped (returns an
    /// empty vector) but a padding module still takes its local step.
    pub fn backward(&mut self, dys: &[Tensor<T>], need_input_grad: bool) -> Result<Vec<Tensor<T>>> {
        if dys.len() != self.padded.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} output gradients for {} cached inputs",
                dys.len(),
                self.padded.len()
            )));
        }
        let padded = std::mem::take(&mut self.padded);
        let mut dpadded = Vec::with_capacity(if need_input_grad { dys.len() } else { 0 });
        for (xp, dy) in padded.iter().zip(dys) {
            if let Some(dx) = self.correlate_backward(xp, dy, need_input_grad)? {
                dpadded.push(dx);
            }
        }
        let start = Instant::now();
        let result = if !need_input_grad {
            if let ConvPadding::Learned(module) = &mut self.padding {
                if module.mode() == Mode::Train {
                    module.local_update()?;
                }
            }
            Ok(Vec::new())
        } else if self.kernel == 1 {
            Ok(dpadded)
        } else {
            match &mut self.padding {
                ConvPadding::Learned(module) => module.backward_batch(&dpadded),
                ConvPadding::Fixed(_) => {
                    let map = self.map.as_ref().expect("forward built the map");
                    dpadded.iter().map(|g| map.adjoint(g)).collect()
                }
            }
        };
        self.pad_time += start.elapsed();
        result
    }

    fn correlate_backward(&mut self, xp: &Tensor<T>, dy: &Tensor<T>, need_dx: bool) -> Result<Option<Tensor<T>>> {
        let (k, ci, co) = (self.kernel, self.in_channels, self.out_channels);
        let (hp, wp) = (xp.height(), xp.width());
        let (oh, ow) = (hp - k + 1, wp - k + 1);
        if dy.shape().dims() != [oh, ow, co] {
            return Err(Error::ShapeMismatch(format!(
                "output gradient {:?}, expected {:?}",
                dy.shape().dims(),
                [oh, ow, co]
            )));
        }
        let x = xp.data();
        let mut dx = vec![T::zero(); if need_dx { x.len() } else { 0 }];
        for oy in 0..oh {
            for ox in 0..ow {
                let g = &dy.data()[(oy * ow + ox) * co..][..co];
                for (gb, &gv) in self.grad_bias.iter_mut().zip(g) {
                    *gb += gv;
                }
                for ky in 0..k {
                    let base = ((oy + ky) * wp + ox) * ci;
                    let patch = &x[base..base + k * ci];
                    let span = ky * k * ci * co..(ky + 1) * k * ci * co;
                    let gwk = &mut self.grad_weights[span.clone()];
                    for (&xv, gwrow) in patch.iter().zip(gwk.chunks_exact_mut(co)) {
                        for (gw, &gv) in gwrow.iter_mut().zip(g) {
                            *gw += xv * gv;
                        }
                    }
                    if need_dx {
                        let wk = &self.weights[span];
                        for (dxv, wrow) in dx[base..base + k * ci].iter_mut().zip(wk.chunks_exact(co)) {
                            *dxv += dot(wrow, g);
                        }
                    }
                }
            }
        }
        Ok(need_dx.then(|| Tensor::from_raw(xp.shape().clone(), dx)))
    }
}

/// Dot product with eight fixed accumulation lanes, so the summation order
/// never depends on the target's vector width.
pub(crate) fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    let mut lanes = [T::zero(); 8];
    let mut ca = a.chunks_exact(8);
    let mut cb = b.chunks_exact(8);
    for (x, y) in (&mut ca).zip(&mut cb) {
        for l in 0..8 {
            lanes[l] += x[l] * y[l];
        }
    }
    let mut tail = T::zero();
    for (&x, &y) in ca.remainder().iter().zip(cb.remainder()) {
        tail += x * y;
    }
    let quad = [lanes[0] + lanes[4], lanes[1] + lanes[5], lanes[2] + lanes[6], lanes[3] + lanes[7]];
    (quad[0] + quad[2]) + (quad[1] + quad[3]) + tail
}
