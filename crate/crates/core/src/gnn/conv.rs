//! Message-passing convolution.
//!
//! For every node i the layer builds the message
//! `[x̂ᵢ] ⊕ agg₁{x̂ⱼ : j → i} ⊕ agg₂{…} ⊕ …` from optionally
//! batch-normalised node features x̂, optionally batch-normalises it and
//! feeds it through an MLP γ.

use super::aggregate::{max_backward, max_neighbors, max_row, mean_pow, mean_pow_backward, mean_pow_row};
use super::config::Aggregator;
use crate::error::{domain, Result};
use crate::graph::Adjacency;
use crate::nn::layers::BatchNormCache;
use crate::nn::module::join;
use crate::nn::{BatchNorm, Matrix, Mlp, MlpCache, Module, Param, Real, TensorKind};

/// Row block size of the evaluation pass.
const EVAL_ROWS: usize = 256;

#[derive(Debug, Clone, PartialEq)]
pub struct ConvLayer<T> {
    x_dim: usize,
    include_self: bool,
    aggregators: Vec<Aggregator>,
    input_bn: Option<BatchNorm<T>>,
    concat_bn: Option<BatchNorm<T>>,
    mlp: Mlp<T>,
}

/// Intermediate values of a training forward pass.
#[derive(Debug, Clone)]
pub struct ConvCache<T> {
    normalised: Matrix<T>,
    input_bn: Option<BatchNormCache<T>>,
    max_args: Vec<Vec<u32>>,
    concat_bn: Option<BatchNormCache<T>>,
    mlp: MlpCache<T>,
}

impl<T> ConvCache<T> {
    pub fn output(&self) -> &Matrix<T> {
        self.mlp.output()
    }
}

impl<T: Real> ConvLayer<T> {
    /// `mlp` must accept the full message width `blocks · x_dim`.
    pub fn new(x_dim: usize, include_self: bool, aggregators: Vec<Aggregator>, input_bn: bool, concat_bn: bool, mlp: Mlp<T>) -> Result<Self> {
        let blocks = usize::from(include_self) + aggregators.len();
        if blocks == 0 {
            return domain("a convolution needs at least one message block");
        }
        if mlp.input_dim() != blocks * x_dim {
            return domain(format!("γ expects width {}, message width is {}", mlp.input_dim(), blocks * x_dim));
        }
        Ok(Self {
            x_dim,
            include_self,
            aggregators,
            input_bn: input_bn.then(|| BatchNorm::new(x_dim)),
            concat_bn: concat_bn.then(|| BatchNorm::new(blocks * x_dim)),
            mlp,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.x_dim
    }

    pub fn output_dim(&self) -> usize {
        self.mlp.output_dim()
    }

    pub fn mlp(&self) -> &Mlp<T> {
        &self.mlp
    }

    fn check(&self, x: &Matrix<T>, adj: &Adjacency) -> Result<()> {
        if x.cols() != self.x_dim {
            return domain(format!("convolution expects width {}, got {}", self.x_dim, x.cols()));
        }
        if adj.node_count() != x.rows() {
            return domain(format!("graph has {} nodes, features have {} rows", adj.node_count(), x.rows()));
        }
        Ok(())
    }

    fn message(&self, a: &Matrix<T>, adj: &Adjacency) -> (Matrix<T>, Vec<Vec<u32>>) {
        let mut blocks = Vec::with_capacity(self.aggregators.len() + 1);
        let mut args = Vec::new();
        if self.include_self {
            blocks.push(a.clone());
        }
        for agg in &self.aggregators {
            match *agg {
                Aggregator::Mean { power } => blocks.push(mean_pow(a, adj, power)),
                Aggregator::Max => {
                    let (m, arg) = max_neighbors(a, adj);
                    blocks.push(m);
                    args.push(arg);
                }
            }
        }
        let refs: Vec<&Matrix<T>> = blocks.iter().collect();
        (Matrix::hcat(&refs), args)
    }

    pub fn forward_train(&mut self, x: &Matrix<T>, adj: &Adjacency) -> Result<ConvCache<T>> {
        self.check(x, adj)?;
        let (normalised, input_bn) = match self.input_bn.as_mut() {
            Some(bn) => {
                let (y, c) = bn.forward_train(x);
                (y, Some(c))
            }
            None => (x.clone(), None),
        };
        let (msg, max_args) = self.message(&normalised, adj);
        let (msg, concat_bn) = match self.concat_bn.as_mut() {
            Some(bn) => {
                let (y, c) = bn.forward_train(&msg);
                (y, Some(c))
            }
            None => (msg, None),
        };
        let mlp = self.mlp.forward_train(&msg)?;
        Ok(ConvCache {
            normalised,
            input_bn,
            max_args,
            concat_bn,
            mlp,
        })
    }

    pub fn forward_eval(&self, x: &Matrix<T>, adj: &Adjacency) -> Result<Matrix<T>> {
        self.check(x, adj)?;
        let normalised = match &self.input_bn {
            Some(bn) => bn.forward_eval(x),
            None => x.clone(),
        };
        // Rows are independent in evaluation mode; working in blocks keeps
        // the message and hidden activations in cache for long trajectories.
        let n = x.rows();
        let w = self.x_dim;
        let blocks = usize::from(self.include_self) + self.aggregators.len();
        let mut out = Matrix::zeros(n, self.output_dim());
        for start in (0..n).step_by(EVAL_ROWS) {
            let end = (start + EVAL_ROWS).min(n);
            let mut msg = Matrix::zeros(end - start, blocks * w);
            for i in start..end {
                let row = msg.row_mut(i - start);
                let mut parts = row.chunks_mut(w);
                if self.include_self {
                    parts.next().expect("self block").copy_from_slice(normalised.row(i));
                }
                for (agg, part) in self.aggregators.iter().zip(parts) {
                    match *agg {
                        Aggregator::Mean { power } => mean_pow_row(&normalised, adj, power, i, part),
                        Aggregator::Max => max_row(&normalised, adj, i, part),
                    }
                }
            }
            if let Some(bn) = &self.concat_bn {
                msg = bn.forward_eval(&msg);
            }
            let y = self.mlp.forward_eval(&msg)?;
            for i in start..end {
                out.row_mut(i).copy_from_slice(y.row(i - start));
            }
        }
        Ok(out)
    }

    /// Accumulates parameter gradients and returns ∂loss/∂x.
    pub fn backward(&mut self, cache: &ConvCache<T>, adj: &Adjacency, dout: &Matrix<T>) -> Matrix<T> {
        let mut dmsg = self.mlp.backward(&cache.mlp, dout, true).expect("input gradient requested");
        if let (Some(bn), Some(c)) = (self.concat_bn.as_mut(), cache.concat_bn.as_ref()) {
            dmsg = bn.backward(c, &dmsg);
        }
        let blocks = usize::from(self.include_self) + self.aggregators.len();
        let parts = dmsg.hsplit(&vec![self.x_dim; blocks]);
        let mut parts = parts.into_iter();
        let mut da = if self.include_self {
            parts.next().expect("self block")
        } else {
            Matrix::zeros(dmsg.rows(), self.x_dim)
        };
        let mut max_idx = 0;
        for (agg, part) in self.aggregators.iter().zip(parts) {
            match *agg {
                Aggregator::Mean { power } => mean_pow_backward(&cache.normalised, adj, power, &part, &mut da),
                Aggregator::Max => {
                    max_backward(&cache.max_args[max_idx], &part, &mut da);
                    max_idx += 1;
                }
            }
        }
        match (self.input_bn.as_mut(), cache.input_bn.as_ref()) {
            (Some(bn), Some(c)) => bn.backward(c, &da),
            _ => da,
        }
    }
}

impl<T: Real> Module<T> for ConvLayer<T> {
    fn visit(&self, prefix: &str, f: &mut dyn FnMut(&str, TensorKind, &Matrix<T>)) {
        if let Some(bn) = &self.input_bn {
            bn.visit(&join(prefix, "input_bn"), f);
        }
        if let Some(bn) = &self.concat_bn {
            bn.visit(&join(prefix, "concat_bn"), f);
        }
        self.mlp.visit(&join(prefix, "mlp"), f);
    }

    fn visit_params_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut Param<T>)) {
        if let Some(bn) = self.input_bn.as_mut() {
            bn.visit_params_mut(&join(prefix, "input_bn"), f);
        }
        if let Some(bn) = self.concat_bn.as_mut() {
            bn.visit_params_mut(&join(prefix, "concat_bn"), f);
        }
        self.mlp.visit_params_mut(&join(prefix, "mlp"), f);
    }

    fn visit_buffers_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut Matrix<T>)) {
        if let Some(bn) = self.input_bn.as_mut() {
            bn.visit_buffers_mut(&join(prefix, "input_bn"), f);
        }
        if let Some(bn) = self.concat_bn.as_mut() {
            bn.visit_buffers_mut(&join(prefix, "concat_bn"), f);
        }
        self.mlp.visit_buffers_mut(&join(prefix, "mlp"), f);
    }
}
