//! Linear layers, batch normalisation and multi-layer perceptrons.
//!
//! Every layer exposes a training forward pass returning a cache, an
//! evaluation forward pass that never mutates state, and a backward pass
//! that accumulates parameter gradients and returns the input gradient.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::module::{join, Module, Param, TensorKind};
use super::{Matrix, Real};
use crate::error::{domain, Result};

/// y = x·W + b with W stored `in × out`.
#[derive(Debug, Clone, PartialEq)]
pub struct Linear<T> {
    pub weight: Param<T>,
    pub bias: Param<T>,
}

impl<T: Real> Linear<T> {
    /// Uniform(−a, a) weights with a = √(6 / (in + out)), zero bias.
    pub fn new<R: Rng + ?Sized>(input: usize, output: usize, rng: &mut R) -> Self {
        let a = (6.0 / (input + output) as f64).sqrt();
        let w = (0..input * output).map(|_| T::from_f64_lossy(rng.random_range(-a..a))).collect();
        Self {
            weight: Param::new(Matrix::from_vec(input, output, w)),
            bias: Param::new(Matrix::zeros(1, output)),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.weight.value.rows()
    }

    pub fn output_dim(&self) -> usize {
        self.weight.value.cols()
    }

    pub fn forward(&self, x: &Matrix<T>) -> Matrix<T> {
        let mut y = x.matmul(false, &self.weight.value, false);
        let b = self.bias.value.as_slice();
        for i in 0..y.rows() {
            for (v, &bj) in y.row_mut(i).iter_mut().zip(b) {
                *v = *v + bj;
            }
        }
        y
    }

    /// Accumulates ∂W = xᵀ·dy, ∂b = Σ dy and returns dx = dy·Wᵀ.
    pub fn backward(&mut self, x: &Matrix<T>, dy: &Matrix<T>, need_dx: bool) -> Option<Matrix<T>> {
        self.weight.grad.add_matmul(x, true, dy, false);
        let gb = self.bias.grad.as_mut_slice();
        for i in 0..dy.rows() {
            for (g, &d) in gb.iter_mut().zip(dy.row(i)) {
                *g = *g + d;
            }
        }
        need_dx.then(|| dy.matmul(false, &self.weight.value, true))
    }
}

impl<T: Real> Module<T> for Linear<T> {
    fn visit(&self, prefix: &str, f: &mut dyn FnMut(&str, TensorKind, &Matrix<T>)) {
        f(&join(prefix, "weight"), TensorKind::Param, &self.weight.value);
        f(&join(prefix, "bias"), TensorKind::Param, &self.bias.value);
    }

    fn visit_params_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut Param<T>)) {
        f(&join(prefix, "weight"), &mut self.weight);
        f(&join(prefix, "bias"), &mut self.bias);
    }

    fn visit_buffers_mut(&mut self, _: &str, _: &mut dyn FnMut(&str, &mut Matrix<T>)) {}
}

/// Per-feature batch normalisation with learnable scale and shift.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchNorm<T> {
    pub gamma: Param<T>,
    pub beta: Param<T>,
    pub running_mean: Matrix<T>,
    pub running_var: Matrix<T>,
    pub momentum: f64,
    pub eps: f64,
}

/// Saved by [`BatchNorm::forward_train`] for the backward pass.
#[derive(Debug, Clone)]
pub struct BatchNormCache<T> {
    xhat: Matrix<T>,
    inv_std: Vec<T>,
}

impl<T: Real> BatchNorm<T> {
    pub fn new(width: usize) -> Self {
        Self {
            gamma: Param::new(Matrix::from_vec(1, width, vec![T::one(); width])),
            beta: Param::new(Matrix::zeros(1, width)),
            running_mean: Matrix::zeros(1, width),
            running_var: Matrix::from_vec(1, width, vec![T::one(); width]),
            momentum: 0.1,
            eps: 1e-5,
        }
    }

    pub fn width(&self) -> usize {
        self.gamma.value.cols()
    }

    fn affine(&self, xhat: &Matrix<T>) -> Matrix<T> {
        let g = self.gamma.value.as_slice();
        let b = self.beta.value.as_slice();
        let mut y = xhat.clone();
        for i in 0..y.rows() {
            for ((v, &gj), &bj) in y.row_mut(i).iter_mut().zip(g).zip(b) {
                *v = *v * gj + bj;
            }
        }
        y
    }

    /// Normalises with batch statistics and updates the running averages.
    pub fn forward_train(&mut self, x: &Matrix<T>) -> (Matrix<T>, BatchNormCache<T>) {
        let (m, w) = x.shape();
        // statistics accumulate in f64 so large node batches stay accurate in f32
        let mut mean = vec![0.0f64; w];
        for i in 0..m {
            for (s, &v) in mean.iter_mut().zip(x.row(i)) {
                *s += v.to_f64_lossy();
            }
        }
        let inv_m = 1.0 / m.max(1) as f64;
        mean.iter_mut().for_each(|s| *s *= inv_m);
        let mut var = vec![0.0f64; w];
        for i in 0..m {
            for ((s, &v), &mu) in var.iter_mut().zip(x.row(i)).zip(&mean) {
                let d = v.to_f64_lossy() - mu;
                *s += d * d;
            }
        }
        var.iter_mut().for_each(|s| *s *= inv_m);
        let inv_std: Vec<T> = var.iter().map(|&v| T::from_f64_lossy(1.0 / (v + self.eps).sqrt())).collect();
        let mean_t: Vec<T> = mean.iter().map(|&v| T::from_f64_lossy(v)).collect();
        let mut xhat = x.clone();
        for i in 0..m {
            for ((v, &mu), &is) in xhat.row_mut(i).iter_mut().zip(&mean_t).zip(&inv_std) {
                *v = (*v - mu) * is;
            }
        }
        let mom = self.momentum;
        let unbias = if m > 1 { m as f64 / (m - 1) as f64 } else { 1.0 };
        for j in 0..w {
            let rm = self.running_mean.as_slice()[j].to_f64_lossy();
            let rv = self.running_var.as_slice()[j].to_f64_lossy();
            self.running_mean.as_mut_slice()[j] = T::from_f64_lossy((1.0 - mom) * rm + mom * mean[j]);
            self.running_var.as_mut_slice()[j] = T::from_f64_lossy((1.0 - mom) * rv + mom * var[j] * unbias);
        }
        let y = self.affine(&xhat);
        (y, BatchNormCache { xhat, inv_std })
    }

    /// Normalises with the running statistics. Pure.
    pub fn forward_eval(&self, x: &Matrix<T>) -> Matrix<T> {
        let eps = T::from_f64_lossy(self.eps);
        let inv_std: Vec<T> = self.running_var.as_slice().iter().map(|&v| (v + eps).sqrt().recip()).collect();
        let mean = self.running_mean.as_slice();
        let mut xhat = x.clone();
        for i in 0..xhat.rows() {
            for ((v, &mu), &is) in xhat.row_mut(i).iter_mut().zip(mean).zip(&inv_std) {
                *v = (*v - mu) * is;
            }
        }
        self.affine(&xhat)
    }

    pub fn backward(&mut self, cache: &BatchNormCache<T>, dy: &Matrix<T>) -> Matrix<T> {
        let (m, w) = dy.shape();
        let g = self.gamma.value.as_slice().to_vec();
        let mut sum_dy = vec![0.0f64; w];
        let mut sum_dy_xhat = vec![0.0f64; w];
        for i in 0..m {
            for (j, (&d, &xh)) in dy.row(i).iter().zip(cache.xhat.row(i)).enumerate() {
                let d = d.to_f64_lossy();
                sum_dy[j] += d;
                sum_dy_xhat[j] += d * xh.to_f64_lossy();
            }
        }
        for j in 0..w {
            let gg = &mut self.gamma.grad.as_mut_slice()[j];
            *gg = *gg + T::from_f64_lossy(sum_dy_xhat[j]);
            let gb = &mut self.beta.grad.as_mut_slice()[j];
            *gb = *gb + T::from_f64_lossy(sum_dy[j]);
        }
        // dx = γ·inv_std·(dy − mean(dy) − x̂·mean(dy·x̂))
        let inv_m = 1.0 / m as f64;
        let mean_dy: Vec<T> = sum_dy.iter().map(|&s| T::from_f64_lossy(s * inv_m)).collect();
        let mean_dyx: Vec<T> = sum_dy_xhat.iter().map(|&s| T::from_f64_lossy(s * inv_m)).collect();
        let scale: Vec<T> = g.iter().zip(&cache.inv_std).map(|(&a, &b)| a * b).collect();
        let mut dx = Matrix::zeros(m, w);
        for i in 0..m {
            let xr = cache.xhat.row(i);
            let dr = dy.row(i);
            for (j, out) in dx.row_mut(i).iter_mut().enumerate() {
                *out = scale[j] * (dr[j] - mean_dy[j] - xr[j] * mean_dyx[j]);
            }
        }
        dx
    }
}

impl<T: Real> Module<T> for BatchNorm<T> {
    fn visit(&self, prefix: &str, f: &mut dyn FnMut(&str, TensorKind, &Matrix<T>)) {
        f(&join(prefix, "gamma"), TensorKind::Param, &self.gamma.value);
        f(&join(prefix, "beta"), TensorKind::Param, &self.beta.value);
        f(&join(prefix, "running_mean"), TensorKind::Buffer, &self.running_mean);
        f(&join(prefix, "running_var"), TensorKind::Buffer, &self.running_var);
    }

    fn visit_params_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut Param<T>)) {
        f(&join(prefix, "gamma"), &mut self.gamma);
        f(&join(prefix, "beta"), &mut self.beta);
    }

    fn visit_buffers_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut Matrix<T>)) {
        f(&join(prefix, "running_mean"), &mut self.running_mean);
        f(&join(prefix, "running_var"), &mut self.running_var);
    }
}

/// Which MLP layers are followed by batch normalisation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BnMode {
    None,
    /// After every hidden layer, not after the output layer.
    Hidden,
    /// After every layer including the output layer.
    All,
}

#[derive(Debug, Clone, PartialEq)]
struct MlpLayer<T> {
    linear: Linear<T>,
    bn: Option<BatchNorm<T>>,
}

/// Linear → [batch norm] → ReLU on hidden layers; the output layer has no
/// activation.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp<T> {
    layers: Vec<MlpLayer<T>>,
}

/// Per-layer inputs and batch-norm caches of a training forward pass.
#[derive(Debug, Clone)]
pub struct MlpCache<T> {
    inputs: Vec<Matrix<T>>,
    bn: Vec<Option<BatchNormCache<T>>>,
    /// Post-activation output of each hidden layer is the next layer's
    /// input; the ReLU mask is read from it.
    output: Matrix<T>,
}

impl<T> MlpCache<T> {
    pub fn output(&self) -> &Matrix<T> {
        &self.output
    }
}

fn relu_inplace<T: Real>(m: &mut Matrix<T>) {
    m.as_mut_slice().iter_mut().for_each(|v| {
        if !(*v > T::zero()) {
            *v = T::zero();
        }
    });
}

impl<T: Real> Mlp<T> {
    /// `widths` lists the input width followed by every layer's output width.
    pub fn new<R: Rng + ?Sized>(widths: &[usize], bn: BnMode, rng: &mut R) -> Result<Self> {
        if widths.len() < 2 || widths.contains(&0) {
            return domain(format!("an MLP needs at least two positive widths, got {widths:?}"));
        }
        let last = widths.len() - 2;
        let layers = widths
            .windows(2)
            .enumerate()
            .map(|(l, w)| {
                let with_bn = match bn {
                    BnMode::None => false,
                    BnMode::Hidden => l < last,
                    BnMode::All => true,
                };
                MlpLayer {
                    linear: Linear::new(w[0], w[1], rng),
                    bn: with_bn.then(|| BatchNorm::new(w[1])),
                }
            })
            .collect();
        Ok(Self { layers })
    }

    /// Single linear layer initialised to the identity map.
    pub fn identity(width: usize) -> Self {
        let mut w = Matrix::zeros(width, width);
        for i in 0..width {
            w.set(i, i, T::one());
        }
        Self {
            layers: vec![MlpLayer {
                linear: Linear {
                    weight: Param::new(w),
                    bias: Param::new(Matrix::zeros(1, width)),
                },
                bn: None,
            }],
        }
    }

    /// Builds an MLP from explicit layers, e.g. for hand-set weights.
    pub fn from_linears(linears: Vec<Linear<T>>, bn: BnMode) -> Result<Self> {
        for pair in linears.windows(2) {
            if pair[0].output_dim() != pair[1].input_dim() {
                return domain("consecutive layer widths do not match");
            }
        }
        let last = linears.len().saturating_sub(1);
        Ok(Self {
            layers: linears
                .into_iter()
                .enumerate()
                .map(|(l, linear)| {
                    let with_bn = bn == BnMode::All || (bn == BnMode::Hidden && l < last);
                    let w = linear.output_dim();
                    MlpLayer {
                        linear,
                        bn: with_bn.then(|| BatchNorm::new(w)),
                    }
                })
                .collect(),
        })
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].linear.input_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().expect("nonempty").linear.output_dim()
    }

    pub fn widths(&self) -> Vec<usize> {
        let mut w = vec![self.input_dim()];
        w.extend(self.layers.iter().map(|l| l.linear.output_dim()));
        w
    }

    fn check_input(&self, x: &Matrix<T>) -> Result<()> {
        if x.cols() != self.input_dim() {
            return domain(format!("MLP expects width {}, got {}", self.input_dim(), x.cols()));
        }
        Ok(())
    }

    pub fn forward_train(&mut self, x: &Matrix<T>) -> Result<MlpCache<T>> {
        self.check_input(x)?;
        let last = self.layers.len() - 1;
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut bn_caches = Vec::with_capacity(self.layers.len());
        let mut h = x.clone();
        for (l, layer) in self.layers.iter_mut().enumerate() {
            let mut z = layer.linear.forward(&h);
            inputs.push(h);
            match layer.bn.as_mut() {
                Some(bn) => {
                    let (y, c) = bn.forward_train(&z);
                    z = y;
                    bn_caches.push(Some(c));
                }
                None => bn_caches.push(None),
            }
            if l < last {
                relu_inplace(&mut z);
            }
            h = z;
        }
        Ok(MlpCache {
            inputs,
            bn: bn_caches,
            output: h,
        })
    }

    pub fn forward_eval(&self, x: &Matrix<T>) -> Result<Matrix<T>> {
        self.check_input(x)?;
        let last = self.layers.len() - 1;
        let mut h = x.clone();
        for (l, layer) in self.layers.iter().enumerate() {
            let mut z = layer.linear.forward(&h);
            if let Some(bn) = &layer.bn {
                z = bn.forward_eval(&z);
            }
            if l < last {
                relu_inplace(&mut z);
            }
            h = z;
        }
        Ok(h)
    }

    /// Backpropagates `dy` through a cached forward pass. Returns the input
    /// gradient when `need_dx` is set.
    pub fn backward(&mut self, cache: &MlpCache<T>, dy: &Matrix<T>, need_dx: bool) -> Option<Matrix<T>> {
        let last = self.layers.len() - 1;
        let mut grad = dy.clone();
        for l in (0..self.layers.len()).rev() {
            if l < last {
                // output of layer l is the input of layer l + 1
                let post = &cache.inputs[l + 1];
                for (g, &y) in grad.as_mut_slice().iter_mut().zip(post.as_slice()) {
                    if !(y > T::zero()) {
                        *g = T::zero();
                    }
                }
            }
            let layer = &mut self.layers[l];
            if let (Some(bn), Some(c)) = (layer.bn.as_mut(), cache.bn[l].as_ref()) {
                grad = bn.backward(c, &grad);
            }
            let want = need_dx || l > 0;
            grad = layer.linear.backward(&cache.inputs[l], &grad, want)?;
        }
        Some(grad)
    }
}

impl<T: Real> Module<T> for Mlp<T> {
    fn visit(&self, prefix: &str, f: &mut dyn FnMut(&str, TensorKind, &Matrix<T>)) {
        for (l, layer) in self.layers.iter().enumerate() {
            layer.linear.visit(&join(prefix, &format!("{l}.linear")), f);
            if let Some(bn) = &layer.bn {
                bn.visit(&join(prefix, &format!("{l}.bn")), f);
            }
        }
    }

    fn visit_params_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut Param<T>)) {
        for (l, layer) in self.layers.iter_mut().enumerate() {
            layer.linear.visit_params_mut(&join(prefix, &format!("{l}.linear")), f);
            if let Some(bn) = layer.bn.as_mut() {
                bn.visit_params_mut(&join(prefix, &format!("{l}.bn")), f);
            }
        }
    }

    fn visit_buffers_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut Matrix<T>)) {
        for (l, layer) in self.layers.iter_mut().enumerate() {
            if let Some(bn) = layer.bn.as_mut() {
                bn.visit_buffers_mut(&join(prefix, &format!("{l}.bn")), f);
            }
        }
    }
}

/// Trainable scalar affine map y = scale·x + offset.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarAffine<T> {
    pub scale: Param<T>,
    pub offset: Param<T>,
}

impl<T: Real> ScalarAffine<T> {
    pub fn new(scale: f64, offset: f64) -> Self {
        Self {
            scale: Param::new(Matrix::from_vec(1, 1, vec![T::from_f64_lossy(scale)])),
            offset: Param::new(Matrix::from_vec(1, 1, vec![T::from_f64_lossy(offset)])),
        }
    }

    pub fn forward(&self, x: &Matrix<T>) -> Matrix<T> {
        let s = self.scale.value.as_slice()[0];
        let o = self.offset.value.as_slice()[0];
        x.map(|v| s * v + o)
    }

    pub fn backward(&mut self, x: &Matrix<T>, dy: &Matrix<T>) -> Matrix<T> {
        let s = self.scale.value.as_slice()[0];
        let mut gs = T::zero();
        let mut go = T::zero();
        for (&xi, &di) in x.as_slice().iter().zip(dy.as_slice()) {
            gs = gs + xi * di;
            go = go + di;
        }
        let g = &mut self.scale.grad.as_mut_slice()[0];
        *g = *g + gs;
        let g = &mut self.offset.grad.as_mut_slice()[0];
        *g = *g + go;
        dy.map(|d| d * s)
    }
}

impl<T: Real> Module<T> for ScalarAffine<T> {
    fn visit(&self, prefix: &str, f: &mut dyn FnMut(&str, TensorKind, &Matrix<T>)) {
        f(&join(prefix, "scale"), TensorKind::Param, &self.scale.value);
        f(&join(prefix, "offset"), TensorKind::Param, &self.offset.value);
    }

    fn visit_params_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut Param<T>)) {
        f(&join(prefix, "scale"), &mut self.scale);
        f(&join(prefix, "offset"), &mut self.offset);
    }

    fn visit_buffers_mut(&mut self, _: &str, _: &mut dyn FnMut(&str, &mut Matrix<T>)) {}
}
