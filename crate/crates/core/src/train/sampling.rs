//! Streamed, reproducible trajectory sampling.
//!
//! Trajectory `i` of a stream is fully determined by its derived seed: the
//! label stream of that seed draws model, α, length and noise amplitude,
//! the simulation and noise streams produce the positions.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::features::DEFAULT_CLIP;
use crate::gnn::{GnnConfig, TrajGraph};
use crate::rng::{derive_seed, stream, SeedDomain, STREAM_LABELS};
use crate::sim::{add_noise, simulate, Model, Trajectory};

/// Distribution of simulated trajectories.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplingConfig {
    pub n_min: usize,
    pub n_max: usize,
    pub noise_min: f64,
    pub noise_max: f64,
    pub dim: usize,
    pub models: Vec<Model>,
    /// Per-model α ranges replacing the defaults, as `(model, lo, hi)`.
    pub alpha_ranges: Vec<(Model, f64, f64)>,
    /// Clip steps longer than this multiple of the median step (0 disables).
    pub clip: f64,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        Self {
            n_min: 10,
            n_max: 1000,
            noise_min: 0.0,
            noise_max: 0.0,
            dim: 3,
            models: Model::CLASSES.to_vec(),
            alpha_ranges: Vec::new(),
            clip: DEFAULT_CLIP,
        }
    }
}

impl SamplingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_min < 2 || self.n_max < self.n_min {
            return domain(format!("invalid length range [{}, {}]", self.n_min, self.n_max));
        }
        if !(self.noise_min >= 0.0 && self.noise_max >= self.noise_min && self.noise_max.is_finite()) {
            return domain(format!("invalid noise range [{}, {}]", self.noise_min, self.noise_max));
        }
        if !(1..=3).contains(&self.dim) {
            return domain(format!("dimension must be 1, 2 or 3, got {}", self.dim));
        }
        if self.models.is_empty() {
            return domain("the model set is empty");
        }
        if self.models.contains(&Model::Segmented) {
            return domain("segmented trajectories cannot be sampled directly");
        }
        for &m in &self.models {
            let (lo, hi) = self.alpha_range(m);
            let (vlo, vhi) = m.alpha_range();
            if !(lo <= hi && lo >= vlo && hi <= vhi) {
                return domain(format!("α range [{lo}, {hi}] is invalid for {m}"));
            }
        }
        if !(self.clip >= 0.0) {
            return domain("clip factor must be non-negative");
        }
        Ok(())
    }

    pub fn alpha_range(&self, model: Model) -> (f64, f64) {
        self.alpha_ranges
            .iter()
            .rev()
            .find(|(m, _, _)| *m == model)
            .map(|&(_, lo, hi)| (lo, hi))
            .unwrap_or_else(|| model.alpha_range())
    }

    fn clip_factor(&self) -> Option<f64> {
        (self.clip > 0.0).then_some(self.clip)
    }

    /// Draws the labels of the trajectory with the given seed.
    pub fn draw_label(&self, seed: u64) -> Label {
        self.draw_label_for(seed, None)
    }

    /// Like [`draw_label`](Self::draw_label) with the model optionally fixed.
    pub fn draw_label_for(&self, seed: u64, model: Option<Model>) -> Label {
        let mut rng = stream(seed, STREAM_LABELS);
        let drawn = self.models[rng.random_range(0..self.models.len())];
        let model = model.unwrap_or(drawn);
        let (lo, hi) = self.alpha_range(model);
        let alpha = if hi > lo { rng.random_range(lo..=hi) } else { lo };
        let n = rng.random_range(self.n_min..=self.n_max);
        let noise = if self.noise_max > self.noise_min {
            rng.random_range(self.noise_min..=self.noise_max)
        } else {
            self.noise_min
        };
        Label {
            model,
            alpha,
            n,
            noise,
            seed,
            fraction_first: None,
        }
    }

    /// Simulates, adds noise and returns the labelled trajectory.
    pub fn trajectory(&self, label: &Label) -> Result<Trajectory> {
        let clean = simulate(label.model, label.alpha, label.n, self.dim, 1.0, label.seed)?;
        add_noise(&clean, label.noise, label.seed)
    }

    /// Clipping and features from this configuration, wiring from the
    /// model's.
    pub fn graph(&self, traj: &Trajectory, model: &GnnConfig) -> Result<TrajGraph> {
        TrajGraph::from_trajectory(traj, model.wiring, model.k, self.clip_factor())
    }

    /// Full pipeline for one seed.
    pub fn sample(&self, seed: u64, model: &GnnConfig) -> Result<Sample> {
        self.sample_labelled(self.draw_label(seed), model)
    }

    pub fn sample_labelled(&self, label: Label, model: &GnnConfig) -> Result<Sample> {
        let traj = self.trajectory(&label)?;
        Ok(Sample {
            graph: self.graph(&traj, model)?,
            label,
        })
    }
}

/// Ground truth attached to a sampled or loaded trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct Label {
    pub model: Model,
    pub alpha: f64,
    pub n: usize,
    pub noise: f64,
    pub seed: u64,
    /// Share of points from the first model of a segmented trajectory.
    pub fraction_first: Option<f64>,
}

impl Label {
    pub fn of(traj: &Trajectory) -> Self {
        Self {
            model: traj.model,
            alpha: traj.alpha,
            n: traj.len(),
            noise: traj.noise_amplitude,
            seed: traj.seed,
            fraction_first: traj.segment.map(|s| s.fraction_first),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub graph: TrajGraph,
    pub label: Label,
}

/// Worker pool for data generation. One worker runs on the calling thread.
/// Output order never depends on the worker count.
pub struct Workers {
    pool: Option<rayon::ThreadPool>,
}

impl Workers {
    pub fn new(workers: usize) -> Self {
        let pool = (workers > 1).then(|| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(workers)
                .build()
                .expect("thread pool")
        });
        Self { pool }
    }

    pub fn map<I: Sync, O: Send>(&self, items: &[I], f: impl Fn(&I) -> O + Sync + Send) -> Vec<O> {
        match &self.pool {
            Some(pool) => pool.install(|| items.par_iter().map(f).collect()),
            None => items.iter().map(f).collect(),
        }
    }
}

/// Seeds of trajectories `start..start + count` of a stream.
pub fn seeds(global_seed: u64, domain: SeedDomain, start: u64, count: usize) -> Vec<u64> {
    (start..start + count as u64).map(|i| derive_seed(global_seed, domain, i)).collect()
}

/// Training batch `batch_index`: trajectories `batch_index·B .. (batch_index+1)·B`
/// of the training stream. Identical for any worker count.
pub fn sample_batch(
    cfg: &SamplingConfig,
    model: &GnnConfig,
    global_seed: u64,
    batch_index: u64,
    batch_size: usize,
    workers: &Workers,
) -> Result<Vec<Sample>> {
    let s = seeds(global_seed, SeedDomain::Train, batch_index * batch_size as u64, batch_size);
    workers.map(&s, |&seed| cfg.sample(seed, model)).into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labels_respect_ranges() {
        let cfg = SamplingConfig::default();
        for i in 0..2000 {
            let l = cfg.draw_label(derive_seed(1, SeedDomain::Train, i));
            let (lo, hi) = l.model.alpha_range();
            assert!(l.alpha >= lo && l.alpha <= hi);
            assert!((10..=1000).contains(&l.n));
            assert_eq!(l.noise, 0.0);
        }
    }

    #[test]
    fn batches_are_reproducible_across_worker_counts() {
        let cfg = SamplingConfig {
            n_max: 60,
            ..Default::default()
        };
        let model = GnnConfig::preset("tiny").unwrap();
        let a = sample_batch(&cfg, &model, 3, 2, 8, &Workers::new(1)).unwrap();
        let b = sample_batch(&cfg, &model, 3, 2, 8, &Workers::new(3)).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.label, y.label);
            assert_eq!(x.graph, y.graph);
        }
    }

    #[test]
    fn invalid_ranges_are_rejected() {
        let mut cfg = SamplingConfig::default();
        cfg.alpha_ranges.push((Model::Ctrw, 0.5, 1.5));
        assert!(cfg.validate().is_err());
        let cfg = SamplingConfig {
            n_min: 50,
            n_max: 10,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
    }
}
