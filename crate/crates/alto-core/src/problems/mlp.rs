//! A small dense feed-forward network with hand-written batched
//! backpropagation over a flat parameter vector.
//!
//! The network is deliberately minimal: tanh hidden layers, a linear output
//! layer, and mean-squared-error loss. All parameters live in one flat
//! [`ParamVector`] (per layer: row-major weights, then biases), so optimizer
//! code can treat the model exactly like any other gradient oracle while the
//! layer partition stays available for layer-wise update rules.

use std::sync::Mutex;

use rand::Rng;

use super::{BatchGradientOracle, Dataset, GradientOracle};
use crate::error::{Error, Result};
use crate::partition::{make_layer_partition, LayerPartition};
use crate::vector::ParamVector;

/// Hidden-layer nonlinearity. Only tanh is implemented; the enum exists so
/// configs can state the choice explicitly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Activation {
    #[default]
    Tanh,
}

/// Architecture of a dense feed-forward network: `layer_dims[0]` inputs,
/// `layer_dims.last()` outputs, tanh between all but the final affine map.
#[derive(Debug, Clone)]
pub struct MlpModel {
    layer_dims: Vec<usize>,
    activation: Activation,
    /// Start offset of each layer's (weights, biases) block in the flat
    /// parameter vector; last entry is the total parameter count.
    offsets: Vec<usize>,
}

impl MlpModel {
    pub fn new(layer_dims: Vec<usize>) -> Result<Self> {
        if layer_dims.len() < 2 {
            return Err(Error::domain(
                "network needs at least an input and an output layer",
            ));
        }
        if layer_dims.iter().any(|&d| d == 0) {
            return Err(Error::domain("layer widths must be positive"));
        }
        let mut offsets = Vec::with_capacity(layer_dims.len());
        let mut acc = 0usize;
        for w in layer_dims.windows(2) {
            offsets.push(acc);
            acc += w[0] * w[1] + w[1];
        }
        offsets.push(acc);
        Ok(MlpModel {
            layer_dims,
            activation: Activation::Tanh,
            offsets,
        })
    }

    pub fn layer_dims(&self) -> &[usize] {
        &self.layer_dims
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn num_affine_layers(&self) -> usize {
        self.layer_dims.len() - 1
    }

    pub fn param_count(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    /// One block per affine layer (its weights and biases together), for
    /// layer-wise update rules.
    pub fn layer_partition(&self) -> LayerPartition {
        let sizes: Vec<usize> = self
            .layer_dims
            .windows(2)
            .map(|w| w[0] * w[1] + w[1])
            .collect();
        make_layer_partition(&sizes).expect("layer sizes are positive by construction")
    }

    /// Uniform Xavier initialization: weights drawn from
    /// `U(-sqrt(6 / (fan_in + fan_out)), +sqrt(...))`, biases zero. Draw
    /// order is layer by layer, row-major, so a seeded generator pins the
    /// parameters exactly.
    pub fn init_params<R: Rng>(&self, rng: &mut R) -> ParamVector {
        let mut theta = ParamVector::zeros(self.param_count());
        for l in 0..self.num_affine_layers() {
            let (d_in, d_out) = (self.layer_dims[l], self.layer_dims[l + 1]);
            let limit = (6.0 / (d_in + d_out) as f64).sqrt();
            let w_off = self.offsets[l];
            for w in &mut theta.as_mut_slice()[w_off..w_off + d_in * d_out] {
                *w = rng.random_range(-limit..limit);
            }
        }
        theta
    }

    /// Forward pass for a single input vector; returns the raw outputs.
    pub fn forward_one(&self, theta: &ParamVector, input: &[f64]) -> Result<Vec<f64>> {
        theta.check_dim(self.param_count())?;
        if input.len() != self.layer_dims[0] {
            return Err(Error::structural(format!(
                "input has {} entries, network expects {}",
                input.len(),
                self.layer_dims[0]
            )));
        }
        let mut a = input.to_vec();
        for l in 0..self.num_affine_layers() {
            let (d_in, d_out) = (self.layer_dims[l], self.layer_dims[l + 1]);
            let w_off = self.offsets[l];
            let b_off = w_off + d_in * d_out;
            let th = theta.as_slice();
            let mut z = vec![0.0; d_out];
            for o in 0..d_out {
                let row = &th[w_off + o * d_in..w_off + (o + 1) * d_in];
                let mut acc = th[b_off + o];
                for i in 0..d_in {
                    acc += row[i] * a[i];
                }
                z[o] = if l + 1 < self.num_affine_layers() {
                    acc.tanh()
                } else {
                    acc
                };
            }
            a = z;
        }
        Ok(a)
    }

    fn check_scalar_batch(&self, theta: &ParamVector, xs: &[f64], ys: &[f64]) -> Result<()> {
        theta.check_dim(self.param_count())?;
        if self.layer_dims[0] != 1 || *self.layer_dims.last().unwrap() != 1 {
            return Err(Error::structural(format!(
                "batched evaluation expects scalar inputs and outputs, layer dims are {:?}",
                self.layer_dims
            )));
        }
        if xs.len() != ys.len() {
            return Err(Error::structural(format!(
                "batch has {} inputs but {} targets",
                xs.len(),
                ys.len()
            )));
        }
        if xs.is_empty() {
            return Err(Error::domain("batch must not be empty"));
        }
        Ok(())
    }

    /// Batched forward pass for scalar-input models; fills `scratch.acts`
    /// with per-layer activations (`acts[0]` is the input column).
    fn forward_batch(&self, theta: &[f64], xs: &[f64], scratch: &mut MlpScratch) {
        let batch = xs.len();
        scratch.ensure(batch, &self.layer_dims);
        scratch.acts[0][..batch].copy_from_slice(xs);
        for l in 0..self.num_affine_layers() {
            let (d_in, d_out) = (self.layer_dims[l], self.layer_dims[l + 1]);
            let w_off = self.offsets[l];
            let b_off = w_off + d_in * d_out;
            let last = l + 1 == self.num_affine_layers();
            let (head, tail) = scratch.acts.split_at_mut(l + 1);
            let a_in = &head[l];
            let a_out = &mut tail[0];
            for bi in 0..batch {
                let row_in = &a_in[bi * d_in..(bi + 1) * d_in];
                let row_out = &mut a_out[bi * d_out..(bi + 1) * d_out];
                for o in 0..d_out {
                    let w_row = &theta[w_off + o * d_in..w_off + (o + 1) * d_in];
                    let mut acc = theta[b_off + o];
                    for i in 0..d_in {
                        acc += w_row[i] * row_in[i];
                    }
                    row_out[o] = if last { acc } else { acc.tanh() };
                }
            }
        }
    }

    /// Mean-squared-error loss over a batch of scalar samples.
    pub fn batch_loss(&self, theta: &ParamVector, xs: &[f64], ys: &[f64]) -> Result<f64> {
        let mut scratch = MlpScratch::default();
        self.batch_loss_with(theta, xs, ys, &mut scratch)
    }

    pub fn batch_loss_with(
        &self,
        theta: &ParamVector,
        xs: &[f64],
        ys: &[f64],
        scratch: &mut MlpScratch,
    ) -> Result<f64> {
        self.check_scalar_batch(theta, xs, ys)?;
        self.forward_batch(theta.as_slice(), xs, scratch);
        let preds = &scratch.acts[self.num_affine_layers()];
        let mut acc = 0.0;
        for (p, y) in preds[..xs.len()].iter().zip(ys) {
            let r = p - y;
            acc += r * r;
        }
        Ok(acc / xs.len() as f64)
    }

    /// Loss and gradient over a batch of scalar samples, in one fused
    /// forward/backward pass.
    pub fn batch_loss_grad(
        &self,
        theta: &ParamVector,
        xs: &[f64],
        ys: &[f64],
    ) -> Result<(f64, ParamVector)> {
        let mut scratch = MlpScratch::default();
        self.batch_loss_grad_with(theta, xs, ys, &mut scratch)
    }

    pub fn batch_loss_grad_with(
        &self,
        theta: &ParamVector,
        xs: &[f64],
        ys: &[f64],
        scratch: &mut MlpScratch,
    ) -> Result<(f64, ParamVector)> {
        self.check_scalar_batch(theta, xs, ys)?;
        let batch = xs.len();
        let th = theta.as_slice();
        self.forward_batch(th, xs, scratch);

        let n_layers = self.num_affine_layers();
        let mut grad = ParamVector::zeros(self.param_count());
        let g = grad.as_mut_slice();

        // Output residuals: d(loss)/d(pred) = 2 (pred - y) / batch.
        let mut loss = 0.0;
        {
            let preds = &scratch.acts[n_layers];
            let delta = &mut scratch.delta_a;
            let scale = 2.0 / batch as f64;
            for bi in 0..batch {
                let r = preds[bi] - ys[bi];
                loss += r * r;
                delta[bi] = scale * r;
            }
            loss /= batch as f64;
        }

        // Walk layers backwards; `delta_a` holds d(loss)/d(z) for the layer
        // being processed, `delta_b` receives the propagated residual.
        for l in (0..n_layers).rev() {
            let (d_in, d_out) = (self.layer_dims[l], self.layer_dims[l + 1]);
            let w_off = self.offsets[l];
            let b_off = w_off + d_in * d_out;
            let a_in = &scratch.acts[l];

            for bi in 0..batch {
                let d_row = &scratch.delta_a[bi * d_out..(bi + 1) * d_out];
                let a_row = &a_in[bi * d_in..(bi + 1) * d_in];
                for o in 0..d_out {
                    let d = d_row[o];
                    let gw_row = &mut g[w_off + o * d_in..w_off + (o + 1) * d_in];
                    for i in 0..d_in {
                        gw_row[i] += d * a_row[i];
                    }
                }
            }
            for bi in 0..batch {
                let d_row = &scratch.delta_a[bi * d_out..(bi + 1) * d_out];
                for o in 0..d_out {
                    g[b_off + o] += d_row[o];
                }
            }

            if l > 0 {
                let prev = &mut scratch.delta_b[..batch * d_in];
                prev.fill(0.0);
                for bi in 0..batch {
                    let d_row = &scratch.delta_a[bi * d_out..(bi + 1) * d_out];
                    let p_row = &mut prev[bi * d_in..(bi + 1) * d_in];
                    for o in 0..d_out {
                        let d = d_row[o];
                        let w_row = &th[w_off + o * d_in..w_off + (o + 1) * d_in];
                        for i in 0..d_in {
                            p_row[i] += d * w_row[i];
                        }
                    }
                }
                // tanh'(z) = 1 - tanh(z)^2, read from the stored activation.
                for (p, &a) in prev.iter_mut().zip(&a_in[..batch * d_in]) {
                    *p *= 1.0 - a * a;
                }
                std::mem::swap(&mut scratch.delta_a, &mut scratch.delta_b);
            }
        }

        Ok((loss, grad))
    }
}

/// Reusable working buffers for batched passes. Resized on demand, so one
/// scratch serves batches of any size.
#[derive(Debug, Default)]
pub struct MlpScratch {
    acts: Vec<Vec<f64>>,
    delta_a: Vec<f64>,
    delta_b: Vec<f64>,
    xs: Vec<f64>,
    ys: Vec<f64>,
}

impl MlpScratch {
    fn ensure(&mut self, batch: usize, layer_dims: &[usize]) {
        self.acts.resize(layer_dims.len(), Vec::new());
        for (buf, &d) in self.acts.iter_mut().zip(layer_dims) {
            if buf.len() < batch * d {
                buf.resize(batch * d, 0.0);
            }
        }
        let widest = batch * layer_dims.iter().copied().max().unwrap_or(1);
        if self.delta_a.len() < widest {
            self.delta_a.resize(widest, 0.0);
        }
        if self.delta_b.len() < widest {
            self.delta_b.resize(widest, 0.0);
        }
    }
}

/// A network tied to a dataset: training loss as the objective, with
/// mini-batch gradients for stochastic runs and validation loss on the side.
pub struct MlpOracle {
    model: MlpModel,
    dataset: Dataset,
    scratch: Mutex<MlpScratch>,
}

impl MlpOracle {
    pub fn new(model: MlpModel, dataset: Dataset) -> Result<Self> {
        if model.layer_dims[0] != 1 || *model.layer_dims.last().unwrap() != 1 {
            return Err(Error::structural(format!(
                "dataset-backed oracle expects a scalar-in scalar-out network, got {:?}",
                model.layer_dims
            )));
        }
        Ok(MlpOracle {
            model,
            dataset,
            scratch: Mutex::new(MlpScratch::default()),
        })
    }

    pub fn model(&self) -> &MlpModel {
        &self.model
    }

    pub fn dataset(&self) -> &Dataset {
        &self.dataset
    }

    fn gather<'a>(&self, indices: &[usize], scratch: &'a mut MlpScratch) -> (&'a [f64], &'a [f64]) {
        scratch.xs.clear();
        scratch.ys.clear();
        for &i in indices {
            scratch.xs.push(self.dataset.x(i));
            scratch.ys.push(self.dataset.y(i));
        }
        (&scratch.xs, &scratch.ys)
    }

    fn check_indices(&self, indices: &[usize]) -> Result<()> {
        if indices.is_empty() {
            return Err(Error::domain("batch must not be empty"));
        }
        if let Some(&bad) = indices.iter().find(|&&i| i >= self.dataset.len()) {
            return Err(Error::structural(format!(
                "sample index {bad} out of range for dataset of {}",
                self.dataset.len()
            )));
        }
        Ok(())
    }

    fn loss_on(&self, theta: &ParamVector, indices: &[usize]) -> Result<f64> {
        self.check_indices(indices)?;
        let mut scratch = self.scratch.lock().unwrap();
        let scratch = &mut *scratch;
        self.gather(indices, scratch);
        let (xs, ys) = (std::mem::take(&mut scratch.xs), std::mem::take(&mut scratch.ys));
        let out = self.model.batch_loss_with(theta, &xs, &ys, scratch);
        scratch.xs = xs;
        scratch.ys = ys;
        out
    }

    fn loss_grad_on(&self, theta: &ParamVector, indices: &[usize]) -> Result<(f64, ParamVector)> {
        self.check_indices(indices)?;
        let mut scratch = self.scratch.lock().unwrap();
        let scratch = &mut *scratch;
        self.gather(indices, scratch);
        let (xs, ys) = (std::mem::take(&mut scratch.xs), std::mem::take(&mut scratch.ys));
        let out = self.model.batch_loss_grad_with(theta, &xs, &ys, scratch);
        scratch.xs = xs;
        scratch.ys = ys;
        out
    }

    /// Mean-squared error on the validation split.
    pub fn val_loss(&self, theta: &ParamVector) -> Result<f64> {
        self.loss_on(theta, self.dataset.val_indices())
    }
}

impl GradientOracle for MlpOracle {
    fn dim(&self) -> usize {
        self.model.param_count()
    }

    fn eval(&self, theta: &ParamVector) -> Result<f64> {
        self.loss_on(theta, self.dataset.train_indices())
    }

    fn grad(&self, theta: &ParamVector) -> Result<ParamVector> {
        Ok(self.loss_grad_on(theta, self.dataset.train_indices())?.1)
    }

    fn eval_grad(&self, theta: &ParamVector) -> Result<(f64, ParamVector)> {
        self.loss_grad_on(theta, self.dataset.train_indices())
    }
}

impl BatchGradientOracle for MlpOracle {
    fn num_samples(&self) -> usize {
        self.dataset.train_len()
    }

    fn batch_eval_grad(&self, theta: &ParamVector, indices: &[usize]) -> Result<(f64, ParamVector)> {
        self.loss_grad_on(theta, indices)
    }
}
