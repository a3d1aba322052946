//! Training loop with periodic validation and best-model checkpointing.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::eval::{predict_graphs, stream_samples, Metrics, Record};
use super::loss::{loss, TaskMode};
use super::sampling::{sample_batch, SamplingConfig, Workers};
use crate::error::{domain, Error, Result};
use crate::gnn::{Gnn, GnnConfig, GraphBatch, TrajGraph};
use crate::nn::{Adam, LrSchedule, Module};
use crate::rng::SeedDomain;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub sampling: SamplingConfig,
    pub batch_size: usize,
    /// Number of training trajectories.
    pub budget: u64,
    pub lr0: f64,
    /// The learning rate decays exponentially to this value at the end of
    /// the budget.
    pub lr_floor: f64,
    pub seed: u64,
    pub task: TaskMode,
    /// Validate after every this many trajectories (0 = only at the end).
    pub val_every: u64,
    /// Held-out validation trajectories (0 disables validation).
    pub val_size: usize,
    /// Train on the first batch over and over (overfitting sanity runs).
    pub repeat_batch: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            sampling: SamplingConfig::default(),
            batch_size: 128,
            budget: 500_000,
            lr0: 1e-3,
            lr_floor: 2e-4,
            seed: 0,
            task: TaskMode::Joint,
            val_every: 50_000,
            val_size: 10_000,
            repeat_batch: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        self.sampling.validate()?;
        if self.batch_size == 0 || self.budget == 0 {
            return domain("batch size and budget must be positive");
        }
        if !(self.lr0 > 0.0 && self.lr_floor > 0.0 && self.lr_floor <= self.lr0) {
            return domain(format!("invalid learning rates lr0 = {}, floor = {}", self.lr0, self.lr_floor));
        }
        Ok(())
    }

    pub fn schedule(&self) -> LrSchedule {
        LrSchedule::calibrated(self.lr0, self.lr_floor, self.budget)
    }
}

/// One line of the training log.
#[derive(Debug, Clone, PartialEq)]
pub struct LogRow {
    pub step: u64,
    pub trajs_seen: u64,
    pub lr: f64,
    pub loss: f64,
    pub val_loss: Option<f64>,
    pub val_mae: Option<f64>,
    pub val_f1: Option<f64>,
}

impl LogRow {
    pub const HEADER: &'static str = "step,trajs_seen,lr,loss,val_mae,val_f1";

    pub fn to_csv(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        format!(
            "{},{},{},{},{},{}",
            self.step,
            self.trajs_seen,
            self.lr,
            self.loss,
            opt(self.val_mae),
            opt(self.val_f1)
        )
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Network with the lowest validation loss (the last one without
    /// validation).
    pub best: Gnn<f32>,
    pub last: Gnn<f32>,
    pub log: Vec<LogRow>,
    pub best_val_loss: Option<f64>,
}

/// File names written into the output directory of a training run.
pub const BEST_CHECKPOINT: &str = "model.tgck";
pub const LAST_CHECKPOINT: &str = "last.tgck";
pub const TRAIN_LOG: &str = "train_log.csv";

struct Validation {
    loss: f64,
    metrics: Metrics,
}

/// Validation set size per generated chunk.
const VAL_CHUNK: usize = 256;

/// Scores `net` on the fixed validation stream, regenerated chunk by chunk
/// so the set never has to be held in memory.
fn validate_net(net: &Gnn<f32>, cfg: &TrainConfig, workers: &Workers) -> Result<Validation> {
    let mut records = Vec::with_capacity(cfg.val_size);
    let mut total = 0.0;
    let b = cfg.val_size as f64;
    let mut start = 0;
    while start < cfg.val_size {
        let m = VAL_CHUNK.min(cfg.val_size - start);
        let samples = stream_samples(&cfg.sampling, net.config(), cfg.seed, SeedDomain::Validation, start as u64, m, true, workers)?;
        let graphs: Vec<&TrajGraph> = samples.iter().map(|s| &s.graph).collect();
        let preds = predict_graphs(net, &graphs, VAL_CHUNK)?;
        for (s, p) in samples.iter().zip(&preds) {
            if cfg.task.regression() {
                total += (p.alpha_hat - s.label.alpha).powi(2) / b;
            }
            if cfg.task.classification() {
                let c = s.label.model.class_index().expect("sampled from the five classes");
                total -= p.class_probs[c].max(super::loss::LOG_FLOOR).ln() / b;
            }
            records.push(Record::new(&s.label, p));
        }
        start += m;
    }
    Ok(Validation {
        loss: total,
        metrics: Metrics::of(&records),
    })
}

/// Trains a fresh network. With `out_dir`, writes the best and last
/// checkpoints and the training log there. `progress` sees every log row.
pub fn train(
    cfg: &TrainConfig,
    model: &GnnConfig,
    out_dir: Option<&Path>,
    workers: &Workers,
    mut progress: impl FnMut(&LogRow),
) -> Result<TrainOutcome> {
    cfg.validate()?;
    model.validate()?;
    if model.dim != cfg.sampling.dim {
        return Err(Error::Mismatch(format!(
            "model expects d = {}, sampling produces d = {}",
            model.dim, cfg.sampling.dim
        )));
    }
    if cfg.task.classification() && cfg.sampling.models.iter().any(|m| m.class_index().is_none()) {
        return domain("classification needs every sampled model to be one of the five classes");
    }
    let mut net = Gnn::<f32>::new(model.clone(), cfg.seed)?;
    let mut adam = Adam::new();
    let schedule = cfg.schedule();

    let mut log_file = match out_dir {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            let mut f = BufWriter::new(File::create(dir.join(TRAIN_LOG))?);
            writeln!(f, "{}", LogRow::HEADER)?;
            Some(f)
        }
        None => None,
    };
    let path = |name: &str| -> Option<PathBuf> { out_dir.map(|d| d.join(name)) };

    let frozen = if cfg.repeat_batch {
        Some(sample_batch(&cfg.sampling, model, cfg.seed, 0, cfg.batch_size, workers)?)
    } else {
        None
    };

    let mut log = Vec::new();
    let mut best: Option<(f64, Gnn<f32>)> = None;
    let mut seen = 0u64;
    let mut step = 0u64;
    while seen < cfg.budget {
        let fresh;
        let samples = match &frozen {
            Some(b) => b,
            None => {
                fresh = sample_batch(&cfg.sampling, model, cfg.seed, step, cfg.batch_size, workers)?;
                &fresh
            }
        };
        let batch = GraphBatch::<f32>::new(samples.iter().map(|s| &s.graph))?;
        let alphas: Vec<f64> = samples.iter().map(|s| s.label.alpha).collect();
        let classes: Vec<Option<usize>> = samples.iter().map(|s| s.label.model.class_index()).collect();
        let lr = schedule.at(seen);

        net.zero_grad();
        let (out, cache) = net.forward_train(&batch)?;
        let value = loss(&out, &alphas, &classes, cfg.task)?;
        if !value.total.is_finite() {
            let labels: Vec<String> = samples
                .iter()
                .map(|s| format!("{}:{:.3}:N={}:seed={}", s.label.model, s.label.alpha, s.label.n, s.label.seed))
                .collect();
            return Err(Error::NonFinite(format!(
                "loss {} at step {step} (lr {lr:e}); batch labels: {}",
                value.total,
                labels.join(" ")
            )));
        }
        net.backward(&cache, &batch, value.d_alpha.as_ref(), value.d_logits.as_ref());
        drop(cache);
        adam.step(&mut net, lr);
        seen += samples.len() as u64;
        step += 1;

        let mut row = LogRow {
            step,
            trajs_seen: seen,
            lr,
            loss: value.total,
            val_loss: None,
            val_mae: None,
            val_f1: None,
        };
        let prev = seen - samples.len() as u64;
        let due = (cfg.val_every > 0 && prev / cfg.val_every != seen / cfg.val_every) || seen >= cfg.budget;
        if due && cfg.val_size > 0 {
            let v = validate_net(&net, cfg, workers)?;
            row.val_loss = Some(v.loss);
            row.val_mae = Some(v.metrics.mae);
            row.val_f1 = Some(v.metrics.f1);
            if best.as_ref().is_none_or(|(l, _)| v.loss < *l) {
                if let Some(p) = path(BEST_CHECKPOINT) {
                    net.save(&p, &header(cfg, step, seen))?;
                }
                best = Some((v.loss, net.clone()));
            }
        }
        if let Some(f) = log_file.as_mut() {
            writeln!(f, "{}", row.to_csv())?;
        }
        progress(&row);
        log.push(row);
    }
    if let Some(f) = log_file.as_mut() {
        f.flush()?;
    }
    if let Some(p) = path(LAST_CHECKPOINT) {
        net.save(&p, &header(cfg, step, seen))?;
    }
    let (best_val_loss, best_net) = match best {
        Some((l, n)) => (Some(l), n),
        None => {
            if let Some(p) = path(BEST_CHECKPOINT) {
                net.save(&p, &header(cfg, step, seen))?;
            }
            (None, net.clone())
        }
    };
    Ok(TrainOutcome {
        best: best_net,
        last: net,
        log,
        best_val_loss,
    })
}

fn header(cfg: &TrainConfig, step: u64, seen: u64) -> Vec<(&'static str, String)> {
    vec![
        ("seed", cfg.seed.to_string()),
        ("step", step.to_string()),
        ("trajs_seen", seen.to_string()),
        ("task", format!("{:?}", cfg.task)),
        ("clip", cfg.sampling.clip.to_string()),
    ]
}
