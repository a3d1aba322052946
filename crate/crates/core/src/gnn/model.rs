//! The encoder and the two task heads.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use super::aggregate::{max_backward, pool_max, pool_mean, pool_mean_backward};
use super::config::{GnnConfig, PoolOp, Source};
use super::conv::{ConvCache, ConvLayer};
use crate::error::{domain, Error, Result};
use crate::features::{clip_steps, feature_powers, node_features, LAYOUT_ID};
use crate::graph::{self, Adjacency, Wiring};
use crate::nn::module::join;
use crate::nn::{Checkpoint, Matrix, Mlp, MlpCache, Module, Param, Real, ScalarAffine, TensorKind};
use crate::rng::{stream, STREAM_INIT};
use crate::sim::{Model, Trajectory};

/// Location of the configuration sidecar of a checkpoint.
pub fn sidecar_path(checkpoint: &Path) -> PathBuf {
    checkpoint.with_extension("json")
}

/// Node features and wiring of one trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajGraph {
    pub features: Matrix<f64>,
    pub adjacency: Adjacency,
}

impl TrajGraph {
    /// Clips extreme steps (when `clip` is set), computes node features and
    /// wires the nodes. Random wiring is seeded by the trajectory seed.
    pub fn from_trajectory(traj: &Trajectory, wiring: Wiring, k: usize, clip: Option<f64>) -> Result<Self> {
        let features = match clip {
            Some(c) => node_features(&clip_steps(traj, c)?)?,
            None => node_features(traj)?,
        };
        let edges = graph::build(wiring, traj.len(), k, traj.seed)?;
        Ok(Self {
            features,
            adjacency: Adjacency::from_edges(&edges),
        })
    }

    pub fn node_count(&self) -> usize {
        self.features.rows()
    }
}

/// Several graphs merged into one disconnected graph.
#[derive(Debug, Clone)]
pub struct GraphBatch<T> {
    pub features: Matrix<T>,
    pub adjacency: Adjacency,
    /// Node range of graph g is `ptr[g]..ptr[g + 1]`.
    pub ptr: Vec<usize>,
}

impl<T: Real> GraphBatch<T> {
    pub fn new<'a>(graphs: impl IntoIterator<Item = &'a TrajGraph>) -> Result<Self> {
        let graphs: Vec<&TrajGraph> = graphs.into_iter().collect();
        let Some(first) = graphs.first() else {
            return domain("a batch needs at least one graph");
        };
        let width = first.features.cols();
        let mut ptr = vec![0];
        let mut data = Vec::new();
        for g in &graphs {
            if g.features.cols() != width {
                return Err(Error::Mismatch("graphs in a batch have different feature widths".into()));
            }
            if g.adjacency.node_count() != g.features.rows() {
                return domain("graph wiring and features disagree on the node count");
            }
            if let Some(v) = g.features.as_slice().iter().find(|v| !v.is_finite()) {
                return domain(format!("non-finite node feature {v}"));
            }
            data.extend(g.features.as_slice().iter().map(|&v| T::from_f64_lossy(v)));
            ptr.push(ptr.last().unwrap() + g.features.rows());
        }
        Ok(Self {
            features: Matrix::from_vec(*ptr.last().unwrap(), width, data),
            adjacency: Adjacency::concat(graphs.iter().map(|g| &g.adjacency)),
            ptr,
        })
    }

    pub fn graph_count(&self) -> usize {
        self.ptr.len() - 1
    }
}

/// Network output for a single trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub alpha_hat: f64,
    pub class_probs: [f64; 5],
    pub latent: Vec<f64>,
}

impl Prediction {
    pub fn predicted_class(&self) -> usize {
        argmax(&self.class_probs)
    }

    pub fn predicted_model(&self) -> Model {
        Model::CLASSES[self.predicted_class()]
    }

    /// α̂ restricted to the simulated exponent range, for reporting.
    pub fn alpha_clamped(&self) -> f64 {
        self.alpha_hat.clamp(0.05, 1.95)
    }
}

pub(crate) fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate() {
        if x > xs[best] {
            best = i;
        }
    }
    best
}

/// Batch outputs: α̂ (`B × 1`), class probabilities (`B × 5`), latents.
#[derive(Debug, Clone)]
pub struct BatchOutput<T> {
    pub alpha: Matrix<T>,
    pub probs: Matrix<T>,
    pub latent: Matrix<T>,
}

impl<T: Real> BatchOutput<T> {
    pub fn predictions(&self) -> Vec<Prediction> {
        (0..self.alpha.rows())
            .map(|g| {
                let mut class_probs = [0.0; 5];
                for (c, p) in class_probs.iter_mut().zip(self.probs.row(g)) {
                    *c = p.to_f64_lossy();
                }
                Prediction {
                    alpha_hat: self.alpha.get(g, 0).to_f64_lossy(),
                    class_probs,
                    latent: self.latent.row(g).iter().map(|v| v.to_f64_lossy()).collect(),
                }
            })
            .collect()
    }
}

enum PoolCache {
    Mean,
    Max(Vec<u32>),
}

/// Everything a training forward pass keeps for backpropagation.
pub struct GnnCache<T> {
    convs: Vec<ConvCache<T>>,
    pools: Vec<PoolCache>,
    projector: MlpCache<T>,
    alpha: MlpCache<T>,
    classifier: MlpCache<T>,
    node_count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gnn<T> {
    config: GnnConfig,
    convs: Vec<ConvLayer<T>>,
    projector: Mlp<T>,
    alpha_head: Mlp<T>,
    alpha_affine: Option<ScalarAffine<T>>,
    classifier: Mlp<T>,
}

fn softmax_rows<T: Real>(logits: &Matrix<T>) -> Matrix<T> {
    let mut p = logits.clone();
    for i in 0..p.rows() {
        let row = p.row_mut(i);
        let m = row.iter().fold(T::neg_infinity(), |a, &b| a.max(b));
        let mut s = T::zero();
        for v in row.iter_mut() {
            *v = (*v - m).exp();
            s = s + *v;
        }
        row.iter_mut().for_each(|v| *v = *v / s);
    }
    p
}

impl<T: Real> Gnn<T> {
    /// Randomly initialised network; weights drawn from the init stream of
    /// `seed`.
    pub fn new(config: GnnConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = stream(seed, STREAM_INIT);
        let mut convs = Vec::with_capacity(config.convs.len());
        for (i, c) in config.convs.iter().enumerate() {
            let mlp = Mlp::new(&c.widths, config.bn_mode, &mut rng)?;
            convs.push(ConvLayer::new(
                config.conv_input_width(i),
                c.include_self,
                c.aggregators.clone(),
                config.input_bn,
                config.concat_bn,
                mlp,
            )?);
        }
        let projector = Mlp::new(&config.projector, config.bn_mode, &mut rng)?;
        let alpha_head = Mlp::new(&config.alpha_head, config.bn_mode, &mut rng)?;
        let classifier = Mlp::new(&config.classifier, config.bn_mode, &mut rng)?;
        let alpha_affine = config.alpha_affine.then(|| ScalarAffine::new(0.5, 1.0));
        Ok(Self {
            config,
            convs,
            projector,
            alpha_head,
            alpha_affine,
            classifier,
        })
    }

    pub fn config(&self) -> &GnnConfig {
        &self.config
    }

    /// Snapshot with the architecture and feature layout in the header.
    pub fn to_checkpoint(&self, extra: &[(&str, String)]) -> Checkpoint {
        let mut header = BTreeMap::new();
        header.insert("architecture".to_string(), self.config.name.clone());
        header.insert("feature_layout".to_string(), LAYOUT_ID.to_string());
        header.insert("config".to_string(), serde_json::to_string(&self.config).expect("config serialises"));
        for (k, v) in extra {
            header.insert(k.to_string(), v.clone());
        }
        Checkpoint::from_module(self, header)
    }

    /// Writes the checkpoint to `path` and the configuration sidecar next
    /// to it (same name, `.json` extension).
    pub fn save(&self, path: impl AsRef<Path>, extra: &[(&str, String)]) -> Result<()> {
        let path = path.as_ref();
        self.to_checkpoint(extra).save(path)?;
        std::fs::write(sidecar_path(path), self.config.to_json())?;
        Ok(())
    }

    /// Rebuilds a network from a checkpoint, validating the sidecar
    /// configuration and feature layout against the checkpoint header.
    pub fn from_checkpoint(ck: &Checkpoint, sidecar: Option<&GnnConfig>) -> Result<Self> {
        let layout = ck.header.get("feature_layout").map(String::as_str);
        if layout != Some(LAYOUT_ID) {
            return Err(Error::Mismatch(format!(
                "checkpoint feature layout {layout:?}, this build uses {LAYOUT_ID}"
            )));
        }
        let stored = match ck.header.get("config") {
            Some(text) => Some(GnnConfig::from_json(text)?),
            None => None,
        };
        let config = match (stored, sidecar) {
            (Some(a), Some(b)) if a != *b => {
                return Err(Error::Mismatch("sidecar configuration differs from the checkpoint header".into()))
            }
            (Some(a), _) => a,
            (None, Some(b)) => b.clone(),
            (None, None) => return Err(Error::Mismatch("checkpoint carries no model configuration".into())),
        };
        let mut net = Self::new(config, 0)?;
        ck.apply_to(&mut net)?;
        Ok(net)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let ck = Checkpoint::load(path)?;
        let side = sidecar_path(path);
        let sidecar = match std::fs::read_to_string(&side) {
            Ok(text) => Some(GnnConfig::from_json(&text)?),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => None,
            Err(e) => return Err(e.into()),
        };
        Self::from_checkpoint(&ck, sidecar.as_ref())
    }

    /// Copy of the network in another float type.
    pub fn cast<U: Real>(&self) -> Gnn<U> {
        let mut out = Gnn::<U>::new(self.config.clone(), 0).expect("config already validated");
        let ck = Checkpoint::from_module(self, Default::default());
        ck.apply_to(&mut out).expect("identical architecture");
        out
    }

    fn powered(&self, batch: &GraphBatch<T>) -> Result<Matrix<T>> {
        if batch.features.cols() != self.config.feature_width() {
            return Err(Error::Mismatch(format!(
                "model expects {} node features, got {}",
                self.config.feature_width(),
                batch.features.cols()
            )));
        }
        feature_powers(&batch.features, self.config.feature_powers)
    }

    fn gather(sources: &[Source], features: &Matrix<T>, outs: &[Matrix<T>]) -> Matrix<T> {
        if let [single] = sources {
            return match single {
                Source::Features => features.clone(),
                Source::Conv(j) => outs[*j].clone(),
            };
        }
        let refs: Vec<&Matrix<T>> = sources
            .iter()
            .map(|s| match s {
                Source::Features => features,
                Source::Conv(j) => &outs[*j],
            })
            .collect();
        Matrix::hcat(&refs)
    }

    fn pool_eval(&self, nodes: &Matrix<T>, ptr: &[usize]) -> Matrix<T> {
        let blocks: Vec<Matrix<T>> = self
            .config
            .pool_ops
            .iter()
            .map(|op| match op {
                PoolOp::Mean => pool_mean(nodes, ptr),
                PoolOp::Max => pool_max(nodes, ptr).0,
            })
            .collect();
        let refs: Vec<&Matrix<T>> = blocks.iter().collect();
        Matrix::hcat(&refs)
    }

    fn heads_eval(&self, latent: Matrix<T>) -> Result<BatchOutput<T>> {
        let mut alpha = self.alpha_head.forward_eval(&latent)?;
        if let Some(a) = &self.alpha_affine {
            alpha = a.forward(&alpha);
        }
        let probs = softmax_rows(&self.classifier.forward_eval(&latent)?);
        Ok(BatchOutput { alpha, probs, latent })
    }

    /// Evaluation-mode forward pass. Pure and deterministic.
    pub fn forward_eval(&self, batch: &GraphBatch<T>) -> Result<BatchOutput<T>> {
        let x0 = self.powered(batch)?;
        let mut outs: Vec<Matrix<T>> = Vec::with_capacity(self.convs.len());
        for (conv, cfg) in self.convs.iter().zip(&self.config.convs) {
            let x = Self::gather(&cfg.sources, &x0, &outs);
            outs.push(conv.forward_eval(&x, &batch.adjacency)?);
        }
        let nodes = Self::gather(&self.config.pool_sources, &x0, &outs);
        drop(outs);
        let pooled = self.pool_eval(&nodes, &batch.ptr);
        let latent = self.projector.forward_eval(&pooled)?;
        self.heads_eval(latent)
    }

    /// Latent vectors only.
    pub fn encode(&self, batch: &GraphBatch<T>) -> Result<Matrix<T>> {
        Ok(self.forward_eval(batch)?.latent)
    }

    pub fn predict(&self, graph: &TrajGraph) -> Result<Prediction> {
        let batch = GraphBatch::new([graph])?;
        Ok(self.forward_eval(&batch)?.predictions().remove(0))
    }

    /// Training-mode forward pass: batch statistics everywhere, running
    /// statistics updated.
    pub fn forward_train(&mut self, batch: &GraphBatch<T>) -> Result<(BatchOutput<T>, GnnCache<T>)> {
        let x0 = self.powered(batch)?;
        let mut conv_caches: Vec<ConvCache<T>> = Vec::with_capacity(self.convs.len());
        let mut outs: Vec<Matrix<T>> = Vec::with_capacity(self.convs.len());
        for (conv, cfg) in self.convs.iter_mut().zip(&self.config.convs) {
            let x = Self::gather(&cfg.sources, &x0, &outs);
            let cache = conv.forward_train(&x, &batch.adjacency)?;
            outs.push(cache.output().clone());
            conv_caches.push(cache);
        }
        let nodes = Self::gather(&self.config.pool_sources, &x0, &outs);
        drop(outs);
        let mut pools = Vec::new();
        let mut blocks = Vec::new();
        for op in &self.config.pool_ops {
            match op {
                PoolOp::Mean => {
                    blocks.push(pool_mean(&nodes, &batch.ptr));
                    pools.push(PoolCache::Mean);
                }
                PoolOp::Max => {
                    let (m, arg) = pool_max(&nodes, &batch.ptr);
                    blocks.push(m);
                    pools.push(PoolCache::Max(arg));
                }
            }
        }
        drop(nodes);
        let refs: Vec<&Matrix<T>> = blocks.iter().collect();
        let pooled = Matrix::hcat(&refs);
        let projector = self.projector.forward_train(&pooled)?;
        let latent = projector.output().clone();
        let alpha = self.alpha_head.forward_train(&latent)?;
        let alpha_hat = match &self.alpha_affine {
            Some(a) => a.forward(alpha.output()),
            None => alpha.output().clone(),
        };
        let classifier = self.classifier.forward_train(&latent)?;
        let probs = softmax_rows(classifier.output());
        let out = BatchOutput {
            alpha: alpha_hat,
            probs,
            latent,
        };
        let cache = GnnCache {
            convs: conv_caches,
            pools,
            projector,
            alpha,
            classifier,
            node_count: batch.features.rows(),
        };
        Ok((out, cache))
    }

    /// Accumulates parameter gradients given ∂loss/∂α̂ and ∂loss/∂logits.
    /// A head whose gradient is `None` receives no gradient at all.
    pub fn backward(&mut self, cache: &GnnCache<T>, batch: &GraphBatch<T>, d_alpha: Option<&Matrix<T>>, d_logits: Option<&Matrix<T>>) {
        let b = batch.graph_count();
        let mut d_latent = Matrix::zeros(b, self.config.latent_dim());
        if let Some(da) = d_alpha {
            let d_raw = match self.alpha_affine.as_mut() {
                Some(a) => a.backward(cache.alpha.output(), da),
                None => da.clone(),
            };
            let g = self.alpha_head.backward(&cache.alpha, &d_raw, true).expect("input gradient");
            add_into(&mut d_latent, &g);
        }
        if let Some(dl) = d_logits {
            let g = self.classifier.backward(&cache.classifier, dl, true).expect("input gradient");
            add_into(&mut d_latent, &g);
        }
        let d_pooled = self.projector.backward(&cache.projector, &d_latent, true).expect("input gradient");

        // gradient with respect to the pooled node matrix
        let node_width: usize = self.config.pool_sources.iter().map(|&s| self.config.source_width(s)).sum();
        let mut d_nodes = Matrix::zeros(cache.node_count, node_width);
        let op_blocks = d_pooled.hsplit(&vec![node_width; self.config.pool_ops.len()]);
        for (pool, block) in cache.pools.iter().zip(&op_blocks) {
            match pool {
                PoolCache::Mean => pool_mean_backward(block, &batch.ptr, &mut d_nodes),
                PoolCache::Max(arg) => max_backward(arg, block, &mut d_nodes),
            }
        }

        let mut d_outs: Vec<Option<Matrix<T>>> = vec![None; self.convs.len()];
        let scatter = |sources: &[Source], grad: Matrix<T>, d_outs: &mut Vec<Option<Matrix<T>>>, cfg: &GnnConfig| {
            let widths: Vec<usize> = sources.iter().map(|&s| cfg.source_width(s)).collect();
            let parts = if sources.len() == 1 { vec![grad] } else { grad.hsplit(&widths) };
            for (s, part) in sources.iter().zip(parts) {
                if let Source::Conv(j) = *s {
                    match d_outs[j].as_mut() {
                        Some(acc) => add_into(acc, &part),
                        None => d_outs[j] = Some(part),
                    }
                }
            }
        };
        scatter(&self.config.pool_sources, d_nodes, &mut d_outs, &self.config);
        for i in (0..self.convs.len()).rev() {
            let Some(dout) = d_outs[i].take() else {
                continue;
            };
            let dx = self.convs[i].backward(&cache.convs[i], &batch.adjacency, &dout);
            let sources = self.config.convs[i].sources.clone();
            if sources.iter().any(|s| matches!(s, Source::Conv(_))) {
                scatter(&sources, dx, &mut d_outs, &self.config);
            }
        }
    }
}

fn add_into<T: Real>(acc: &mut Matrix<T>, g: &Matrix<T>) {
    for (a, &b) in acc.as_mut_slice().iter_mut().zip(g.as_slice()) {
        *a = *a + b;
    }
}

impl<T: Real> Module<T> for Gnn<T> {
    fn visit(&self, prefix: &str, f: &mut dyn FnMut(&str, TensorKind, &Matrix<T>)) {
        for (i, c) in self.convs.iter().enumerate() {
            c.visit(&join(prefix, &format!("conv{i}")), f);
        }
        self.projector.visit(&join(prefix, "projector"), f);
        self.alpha_head.visit(&join(prefix, "alpha_head"), f);
        if let Some(a) = &self.alpha_affine {
            a.visit(&join(prefix, "alpha_affine"), f);
        }
        self.classifier.visit(&join(prefix, "classifier"), f);
    }

    fn visit_params_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut Param<T>)) {
        for (i, c) in self.convs.iter_mut().enumerate() {
            c.visit_params_mut(&join(prefix, &format!("conv{i}")), f);
        }
        self.projector.visit_params_mut(&join(prefix, "projector"), f);
        self.alpha_head.visit_params_mut(&join(prefix, "alpha_head"), f);
        if let Some(a) = self.alpha_affine.as_mut() {
            a.visit_params_mut(&join(prefix, "alpha_affine"), f);
        }
        self.classifier.visit_params_mut(&join(prefix, "classifier"), f);
    }

    fn visit_buffers_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut Matrix<T>)) {
        for (i, c) in self.convs.iter_mut().enumerate() {
            c.visit_buffers_mut(&join(prefix, &format!("conv{i}")), f);
        }
        self.projector.visit_buffers_mut(&join(prefix, "projector"), f);
        self.alpha_head.visit_buffers_mut(&join(prefix, "alpha_head"), f);
        self.classifier.visit_buffers_mut(&join(prefix, "classifier"), f);
    }
}
