//! Architecture description and the five size presets.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::features::feature_count;
use crate::graph::{Wiring, DEFAULT_K};
use crate::nn::BnMode;

/// Permutation-invariant reduction over the in-neighbours of a node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregator {
    /// Mean of the element-wise `power` of neighbour features.
    Mean { power: usize },
    Max,
}

/// Where a layer reads its node features from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    /// Initial node features raised to powers 1..=`feature_powers`.
    Features,
    /// Output of an earlier convolution.
    Conv(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PoolOp {
    Mean,
    Max,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvConfig {
    /// Horizontally concatenated to form the layer input.
    pub sources: Vec<Source>,
    /// Whether the node's own (normalised) features lead the message.
    pub include_self: bool,
    pub aggregators: Vec<Aggregator>,
    /// MLP widths, input width first.
    pub widths: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GnnConfig {
    pub name: String,
    /// Spatial dimension of the trajectories.
    pub dim: usize,
    /// Initial features are concatenated with their powers up to this one.
    pub feature_powers: usize,
    /// Batch-normalise each convolution's input node features.
    pub input_bn: bool,
    /// Batch-normalise the concatenated message before the MLP.
    pub concat_bn: bool,
    pub convs: Vec<ConvConfig>,
    pub pool_sources: Vec<Source>,
    pub pool_ops: Vec<PoolOp>,
    /// Projector widths; its output is the latent vector.
    pub projector: Vec<usize>,
    pub alpha_head: Vec<usize>,
    /// Learnable scale and offset applied to the α head output.
    pub alpha_affine: bool,
    pub classifier: Vec<usize>,
    pub bn_mode: BnMode,
    pub wiring: Wiring,
    /// Maximum in-degree of the wiring.
    pub k: usize,
}

/// Names of the built-in presets, smallest first.
pub const PRESETS: [&str; 5] = ["tiny", "small", "medium", "large", "xlarge"];

fn conv(sources: Vec<Source>, aggregators: Vec<Aggregator>, widths: &[usize]) -> ConvConfig {
    ConvConfig {
        sources,
        include_self: true,
        aggregators,
        widths: widths.to_vec(),
    }
}

fn mean_powers(p: usize) -> Vec<Aggregator> {
    (1..=p).map(|power| Aggregator::Mean { power }).collect()
}

impl GnnConfig {
    /// Three-convolution architecture used by the presets.
    ///
    /// conv 1 sees the initial features and the neighbour means of their
    /// powers 1..=`p`; conv 2 the conv-1 output and its neighbour max; conv 3
    /// the conv-1 ⊕ conv-2 outputs and their neighbour mean. The three
    /// outputs are mean-pooled over nodes.
    fn stacked(name: &str, dim: usize, p: usize, hidden: &[usize], projector: &[usize], alpha: &[usize], classifier: &[usize]) -> Self {
        let nx = feature_count(dim);
        let c = *hidden.last().expect("nonempty");
        let with_input = |w: usize| {
            let mut v = vec![w];
            v.extend_from_slice(hidden);
            v
        };
        Self {
            name: name.to_string(),
            dim,
            feature_powers: 1,
            input_bn: true,
            concat_bn: true,
            convs: vec![
                conv(vec![Source::Features], mean_powers(p), &with_input((1 + p) * nx)),
                conv(vec![Source::Conv(0)], vec![Aggregator::Max], &with_input(2 * c)),
                conv(vec![Source::Conv(0), Source::Conv(1)], vec![Aggregator::Mean { power: 1 }], &with_input(4 * c)),
            ],
            pool_sources: vec![Source::Conv(0), Source::Conv(1), Source::Conv(2)],
            pool_ops: vec![PoolOp::Mean],
            projector: projector.to_vec(),
            alpha_head: alpha.to_vec(),
            alpha_affine: true,
            classifier: classifier.to_vec(),
            bn_mode: BnMode::All,
            wiring: Wiring::CausalGeometric,
            k: DEFAULT_K,
        }
    }

    /// One of [`PRESETS`] for three-dimensional trajectories.
    pub fn preset(name: &str) -> Result<Self> {
        Self::preset_for_dim(name, 3)
    }

    /// One of [`PRESETS`] sized for `dim`-dimensional trajectories.
    pub fn preset_for_dim(name: &str, dim: usize) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return domain(format!("dimension must be 1, 2 or 3, got {dim}"));
        }
        Ok(match name {
            "tiny" => Self::stacked(name, dim, 1, &[8], &[24, 6], &[6, 16, 1], &[6, 5]),
            "small" => Self::stacked(name, dim, 1, &[16, 16], &[48, 8], &[8, 64, 16, 1], &[8, 16, 5]),
            "medium" => Self::stacked(name, dim, 2, &[32, 32, 32], &[96, 64, 16], &[16, 128, 64, 16, 1], &[16, 16, 16, 5]),
            "large" => Self::stacked(
                name, dim,
                2,
                &[128, 64, 64],
                &[192, 128, 64, 32],
                &[32, 128, 128, 64, 16, 1],
                &[32, 64, 32, 5],
            ),
            "xlarge" => Self::stacked(
                name, dim,
                3,
                &[256, 128, 128, 128],
                &[384, 512, 256, 128, 64],
                &[64, 128, 128, 128, 64, 1],
                &[64, 128, 64, 32, 5],
            ),
            other => return domain(format!("unknown preset '{other}', expected one of {PRESETS:?}")),
        })
    }

    /// Layout with self ⊕ mean ⊕ max messages on powered features, a skip
    /// of the powered features into the last convolution and mean ⊕ max
    /// pooling. `hidden` lists the MLP widths after the input of each conv.
    pub fn mean_max(dim: usize, feature_powers: usize, hidden: &[Vec<usize>], projector: &[usize], alpha: &[usize], classifier: &[usize]) -> Result<Self> {
        if hidden.len() < 2 {
            return domain("the mean-max layout needs at least two convolutions");
        }
        let fx = feature_powers * feature_count(dim);
        let aggs = vec![Aggregator::Mean { power: 1 }, Aggregator::Max];
        let mut convs = Vec::new();
        let mut prev = fx;
        for (i, h) in hidden.iter().enumerate() {
            let sources = if i == 0 {
                vec![Source::Features]
            } else if i == hidden.len() - 1 {
                vec![Source::Conv(i - 1), Source::Features]
            } else {
                vec![Source::Conv(i - 1)]
            };
            let x_dim = if i == hidden.len() - 1 && i > 0 { prev + fx } else { prev };
            let mut widths = vec![3 * x_dim];
            widths.extend_from_slice(h);
            prev = *h.last().ok_or_else(|| Error::Domain("empty conv widths".into()))?;
            convs.push(conv(sources, aggs.clone(), &widths));
        }
        let last = hidden.len() - 1;
        let mut proj = vec![2 * prev];
        proj.extend_from_slice(projector);
        let latent = *proj.last().expect("nonempty");
        let mut a = vec![latent];
        a.extend_from_slice(alpha);
        let mut c = vec![latent];
        c.extend_from_slice(classifier);
        let cfg = Self {
            name: "mean_max".to_string(),
            dim,
            feature_powers,
            input_bn: false,
            concat_bn: false,
            convs,
            pool_sources: vec![Source::Conv(last)],
            pool_ops: vec![PoolOp::Mean, PoolOp::Max],
            projector: proj,
            alpha_head: a,
            alpha_affine: false,
            classifier: c,
            bn_mode: BnMode::Hidden,
            wiring: Wiring::CausalGeometric,
            k: DEFAULT_K,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Width of the raw per-node features.
    pub fn feature_width(&self) -> usize {
        feature_count(self.dim)
    }

    pub fn source_width(&self, source: Source) -> usize {
        match source {
            Source::Features => self.feature_powers * self.feature_width(),
            Source::Conv(i) => *self.convs[i].widths.last().expect("validated"),
        }
    }

    /// Width of the node features entering conv `i` (before aggregation).
    pub fn conv_input_width(&self, i: usize) -> usize {
        self.convs[i].sources.iter().map(|&s| self.source_width(s)).sum()
    }

    /// Number of blocks in conv `i`'s message.
    pub fn conv_blocks(&self, i: usize) -> usize {
        usize::from(self.convs[i].include_self) + self.convs[i].aggregators.len()
    }

    pub fn pool_width(&self) -> usize {
        self.pool_sources.iter().map(|&s| self.source_width(s)).sum::<usize>() * self.pool_ops.len()
    }

    pub fn latent_dim(&self) -> usize {
        *self.projector.last().expect("validated")
    }

    /// Checks that consecutive widths agree with the wiring of sources,
    /// aggregators and heads.
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Mismatch(m));
        if !(1..=3).contains(&self.dim) {
            return domain(format!("dimension must be 1, 2 or 3, got {}", self.dim));
        }
        if !(1..=3).contains(&self.feature_powers) {
            return domain("feature_powers must be 1, 2 or 3");
        }
        if self.convs.is_empty() || self.k == 0 {
            return domain("at least one convolution and k ≥ 1 are required");
        }
        for (i, c) in self.convs.iter().enumerate() {
            if c.widths.len() < 2 || c.widths.contains(&0) {
                return domain(format!("conv {i} needs an input and at least one layer width"));
            }
            if c.sources.is_empty() || self.conv_blocks(i) == 0 {
                return domain(format!("conv {i} has no input or no message blocks"));
            }
            for s in &c.sources {
                if let Source::Conv(j) = s {
                    if *j >= i {
                        return domain(format!("conv {i} reads conv {j}, which is not earlier"));
                    }
                }
            }
            for a in &c.aggregators {
                if let Aggregator::Mean { power } = a {
                    if *power == 0 {
                        return domain("aggregator powers start at 1");
                    }
                }
            }
            let want = self.conv_input_width(i) * self.conv_blocks(i);
            if c.widths[0] != want {
                return fail(format!("conv {i} input width {} but message width is {want}", c.widths[0]));
            }
        }
        for s in &self.pool_sources {
            if let Source::Conv(j) = s {
                if *j >= self.convs.len() {
                    return domain(format!("pooling reads missing conv {j}"));
                }
            }
        }
        if self.pool_sources.is_empty() || self.pool_ops.is_empty() {
            return domain("pooling needs sources and operations");
        }
        for (name, w) in [("projector", &self.projector), ("alpha_head", &self.alpha_head), ("classifier", &self.classifier)] {
            if w.len() < 2 || w.contains(&0) {
                return domain(format!("{name} needs at least two positive widths"));
            }
        }
        if self.projector[0] != self.pool_width() {
            return fail(format!("projector input {} but pooled width is {}", self.projector[0], self.pool_width()));
        }
        let latent = self.latent_dim();
        if self.alpha_head[0] != latent || self.classifier[0] != latent {
            return fail(format!("head inputs must equal the latent dimension {latent}"));
        }
        if *self.alpha_head.last().unwrap() != 1 {
            return fail("the alpha head must end in one unit".into());
        }
        if *self.classifier.last().unwrap() != crate::sim::Model::CLASSES.len() {
            return fail("the classifier must end in five units".into());
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Mismatch(format!("invalid model config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }
}
