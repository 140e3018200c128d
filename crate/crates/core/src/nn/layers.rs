use crate::error::{Error, Result};
use crate::nn::conv::dot;
use crate::tensor::{Scalar, Shape, Tensor};

#[derive(Clone, Debug, Default)]
pub struct Relu {
    masks: Vec<Vec<bool>>,
}

impl Relu {
    pub fn forward<T: Scalar>(&mut self, batch: &[Tensor<T>], keep: bool) -> Vec<Tensor<T>> {
        if keep {
            self.masks = batch.iter().map(|x| x.data().iter().map(|&v| v > T::zero()).collect()).collect();
        }
        batch
            .iter()
            .map(|x| Tensor::from_raw(x.shape().clone(), x.data().iter().map(|&v| v.max(T::zero())).collect()))
            .collect()
    }

    pub fn backward<T: Scalar>(&mut self, dys: &[Tensor<T>]) -> Result<Vec<Tensor<T>>> {
        check_batch(dys.len(), self.masks.len(), "relu")?;
        let masks = std::mem::take(&mut self.masks);
        dys.iter()
            .zip(&masks)
            .map(|(dy, mask)| {
                if mask.len() != dy.data().len() {
                    return Err(Error::ShapeMismatch("relu gradient size".into()));
                }
                let data = dy.data().iter().zip(mask).map(|(&g, &on)| if on { g } else { T::zero() }).collect();
                Ok(Tensor::from_raw(dy.shape().clone(), data))
            })
            .collect()
    }
}

/// 2x2 max pooling with stride 2; odd trailing rows or columns are dropped.
/// Ties route the gradient to the first maximum in row-major order.
#[derive(Clone, Debug, Default)]
pub struct MaxPool2 {
    argmax: Vec<Vec<usize>>,
    input_shapes: Vec<Shape>,
}

impl MaxPool2 {
    pub fn forward<T: Scalar>(&mut self, batch: &[Tensor<T>], keep: bool) -> Result<Vec<Tensor<T>>> {
        let mut outputs = Vec::with_capacity(batch.len());
        let mut argmax = Vec::with_capacity(batch.len());
        for x in batch {
            let (h, w, c) = (x.height(), x.width(), x.channels());
            if h < 2 || w < 2 {
                return Err(Error::TooSmall { height: h, width: w, min: 2 });
            }
            let (oh, ow) = (h / 2, w / 2);
            let mut out = Vec::with_capacity(oh * ow * c);
            let mut idx = Vec::with_capacity(oh * ow * c);
            for oy in 0..oh {
                for ox in 0..ow {
                    for ch in 0..c {
                        let mut best = (2 * oy * w + 2 * ox) * c + ch;
                        for (dy, dx) in [(0, 1), (1, 0), (1, 1)] {
                            let k = ((2 * oy + dy) * w + 2 * ox + dx) * c + ch;
                            if x.data()[k] > x.data()[best] {
                                best = k;
                            }
                        }
                        out.push(x.data()[best]);
                        idx.push(best);
                    }
                }
            }
            outputs.push(Tensor::from_raw(Shape::d3(oh, ow, c)?, out));
            argmax.push(idx);
        }
        if keep {
            self.argmax = argmax;
            self.input_shapes = batch.iter().map(|x| x.shape().clone()).collect();
        }
        Ok(outputs)
    }

    pub fn backward<T: Scalar>(&mut self, dys: &[Tensor<T>]) -> Result<Vec<Tensor<T>>> {
        check_batch(dys.len(), self.argmax.len(), "maxpool")?;
        let argmax = std::mem::take(&mut self.argmax);
        let shapes = std::mem::take(&mut self.input_shapes);
        dys.iter()
            .zip(argmax.iter().zip(shapes))
            .map(|(dy, (idx, shape))| {
                if idx.len() != dy.data().len() {
                    return Err(Error::ShapeMismatch("maxpool gradient size".into()));
                }
                let mut dx = vec![T::zero(); shape.numel()];
                for (&k, &g) in idx.iter().zip(dy.data()) {
                    dx[k] += g;
                }
                Ok(Tensor::from_raw(shape, dx))
            })
            .collect()
    }
}

/// Reshapes any tensor into a `(1, n)` row.
#[derive(Clone, Debug, Default)]
pub struct Flatten {
    input_shapes: Vec<Shape>,
}

impl Flatten {
    pub fn forward<T: Scalar>(&mut self, batch: &[Tensor<T>], keep: bool) -> Result<Vec<Tensor<T>>> {
        if keep {
            self.input_shapes = batch.iter().map(|x| x.shape().clone()).collect();
        }
        batch
            .iter()
            .map(|x| x.clone().reshaped(Shape::d2(1, x.shape().numel())?))
            .collect()
    }

    pub fn backward<T: Scalar>(&mut self, dys: &[Tensor<T>]) -> Result<Vec<Tensor<T>>> {
        check_batch(dys.len(), self.input_shapes.len(), "flatten")?;
        let shapes = std::mem::take(&mut self.input_shapes);
        dys.iter().zip(shapes).map(|(dy, s)| dy.clone().reshaped(s)).collect()
    }
}

/// Fully connected layer; weights laid out `[in][out]`. Output is `(1, out)`.
#[derive(Clone, Debug)]
pub struct Dense<T> {
    inputs: usize,
    outputs: usize,
    weights: Vec<T>,
    bias: Vec<T>,
    grad_weights: Vec<T>,
    grad_bias: Vec<T>,
    cached: Vec<Tensor<T>>,
}

impl<T: Scalar> Dense<T> {
    pub fn new(inputs: usize, outputs: usize, weights: Vec<T>, bias: Vec<T>) -> Result<Self> {
        if weights.len() != inputs * outputs || bias.len() != outputs {
            return Err(Error::ShapeMismatch(format!(
                "{} weights and {} biases for a {inputs}x{outputs} dense layer",
                weights.len(),
                bias.len()
            )));
        }
        Ok(Dense {
            inputs,
            outputs,
            grad_weights: vec![T::zero(); weights.len()],
            grad_bias: vec![T::zero(); outputs],
            weights,
            bias,
            cached: Vec::new(),
        })
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn outputs(&self) -> usize {
        self.outputs
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

    pub fn params_and_grads(&mut self) -> [(&mut [T], &[T]); 2] {
        [(&mut self.weights, &self.grad_weights), (&mut self.bias, &self.grad_bias)]
    }

    pub fn zero_grad(&mut self) {
        self.grad_weights.fill(T::zero());
        self.grad_bias.fill(T::zero());
    }

    pub fn forward(&mut self, batch: &[Tensor<T>], keep: bool) -> Result<Vec<Tensor<T>>> {
        let mut outputs = Vec::with_capacity(batch.len());
        for x in batch {
            if x.data().len() != self.inputs {
                return Err(Error::ShapeMismatch(format!(
                    "dense layer expects {} inputs, got {}",
                    self.inputs,
                    x.data().len()
                )));
            }
            let mut y = self.bias.clone();
            for (&xv, wrow) in x.data().iter().zip(self.weights.chunks_exact(self.outputs)) {
                for (yv, &wv) in y.iter_mut().zip(wrow) {
                    *yv += xv * wv;
                }
            }
            outputs.push(Tensor::from_raw(Shape::d2(1, self.outputs)?, y));
        }
        if keep {
            self.cached = batch.to_vec();
        }
        Ok(outputs)
    }

    pub fn backward(&mut self, dys: &[Tensor<T>]) -> Result<Vec<Tensor<T>>> {
        check_batch(dys.len(), self.cached.len(), "dense")?;
        let cached = std::mem::take(&mut self.cached);
        let mut grads = Vec::with_capacity(dys.len());
        for (x, dy) in cached.iter().zip(dys) {
            let g = dy.data();
            if g.len() != self.outputs {
                return Err(Error::ShapeMismatch("dense gradient size".into()));
            }
            for (gb, &gv) in self.grad_bias.iter_mut().zip(g) {
                *gb += gv;
            }
            let mut dx = Vec::with_capacity(self.inputs);
            for ((&xv, gwrow), wrow) in x
                .data()
                .iter()
                .zip(self.grad_weights.chunks_exact_mut(self.outputs))
                .zip(self.weights.chunks_exact(self.outputs))
            {
                for (gw, &gv) in gwrow.iter_mut().zip(g) {
                    *gw += xv * gv;
                }
                dx.push(dot(wrow, g));
            }
            grads.push(Tensor::from_raw(x.shape().clone(), dx));
        }
        Ok(grads)
    }
}

/// Result of [`softmax_xent`].
#[derive(Clone, Debug)]
pub struct XentOutput<T> {
    /// Mean cross-entropy over the batch.
    pub loss: f64,
    /// Gradient of the mean loss with respect to each logit row.
    pub grads: Vec<Tensor<T>>,
    pub correct: usize,
}

/// Softmax followed by cross-entropy against integer labels.
pub fn softmax_xent<T: Scalar>(logits: &[Tensor<T>], labels: &[u8]) -> Result<XentOutput<T>> {
    if logits.len() != labels.len() || logits.is_empty() {
        return Err(Error::ShapeMismatch(format!("{} logit rows for {} labels", logits.len(), labels.len())));
    }
    let scale = T::one() / T::of(logits.len() as f64);
    let mut loss = 0.0;
    let mut correct = 0;
    let mut grads = Vec::with_capacity(logits.len());
    for (z, &label) in logits.iter().zip(labels) {
        let z = z.data();
        let label = label as usize;
        if label >= z.len() {
            return Err(Error::IndexOutOfRange { index: label, len: z.len() });
        }
        let max = z.iter().copied().fold(T::neg_infinity(), T::max);
        let exps: Vec<T> = z.iter().map(|&v| (v - max).exp()).collect();
        let total: T = exps.iter().copied().sum();
        loss += (total.ln() - (z[label] - max)).as_f64();
        let predicted = z
            .iter()
            .enumerate()
            .fold(0, |best, (k, &v)| if v > z[best] { k } else { best });
        correct += usize::from(predicted == label);
        let g = exps
            .iter()
            .enumerate()
            .map(|(k, &e)| (e / total - if k == label { T::one() } else { T::zero() }) * scale)
            .collect();
        grads.push(Tensor::from_raw(Shape::d2(1, z.len())?, g));
    }
    Ok(XentOutput { loss: loss / logits.len() as f64, grads, correct })
}

fn check_batch(got: usize, cached: usize, layer: &str) -> Result<()> {
    if got != cached {
        return Err(Error::ShapeMismatch(format!("{layer} backward got {got} gradients for {cached} cached inputs")));
    }
    Ok(())
}
