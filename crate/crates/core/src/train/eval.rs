//! Evaluation harness: overall and bucketed metrics, confusion matrices,
//! the α̂-versus-α histogram and the length × noise accuracy grid.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::sampling::{seeds, Label, Sample, SamplingConfig, Workers};
use crate::error::{domain, Result};
use crate::gnn::{Gnn, GnnConfig, GraphBatch, Prediction, TrajGraph};
use crate::nn::{Matrix, Real};
use crate::rng::{seed_domain, SeedDomain};
use crate::sim::Model;

/// One evaluated trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub true_model: Model,
    pub true_alpha: f64,
    pub pred_model: Model,
    /// Raw network output.
    pub pred_alpha: f64,
    pub n: usize,
    pub noise: f64,
}

impl Record {
    pub fn new(label: &Label, pred: &Prediction) -> Self {
        Self {
            true_model: label.model,
            true_alpha: label.alpha,
            pred_model: pred.predicted_model(),
            pred_alpha: pred.alpha_hat,
            n: label.n,
            noise: label.noise,
        }
    }

    /// Absolute error of the reported (clamped) exponent.
    pub fn abs_error(&self) -> f64 {
        (self.pred_alpha.clamp(0.05, 1.95) - self.true_alpha).abs()
    }

    pub fn correct(&self) -> bool {
        self.true_model == self.pred_model
    }
}

/// Bin edges for the bucketed breakdowns. Bin i covers [eᵢ, eᵢ₊₁); the
/// last bin also contains its right edge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Binning {
    pub length_edges: Vec<f64>,
    pub noise_edges: Vec<f64>,
    pub alpha_edges: Vec<f64>,
    /// Number of bins per axis of the α̂-versus-α histogram over [0, 2].
    pub hist_bins: usize,
}

impl Default for Binning {
    fn default() -> Self {
        Self {
            length_edges: vec![10.0, 20.0, 50.0, 100.0, 200.0, 500.0, 1000.0],
            noise_edges: vec![0.0, 0.1, 0.25, 0.5, 0.75, 1.0],
            alpha_edges: (0..=19).map(|i| 0.05 + 0.1 * i as f64).collect(),
            hist_bins: 40,
        }
    }
}

pub fn bin_index(edges: &[f64], x: f64) -> Option<usize> {
    let k = edges.len().checked_sub(1)?;
    if k == 0 || x < edges[0] || x > edges[k] {
        return None;
    }
    Some(edges.partition_point(|&e| e <= x).saturating_sub(1).min(k - 1))
}

/// Aggregate metrics over a set of records.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Metrics {
    pub count: usize,
    pub mae: f64,
    pub mse: f64,
    /// Micro-averaged F1 over records whose true model is one of the five
    /// classes.
    pub f1: f64,
}

impl Metrics {
    pub fn of<'a>(records: impl IntoIterator<Item = &'a Record>) -> Self {
        let mut m = Metrics::default();
        let (mut tp, mut classified) = (0usize, 0usize);
        let (mut abs, mut sq) = (0.0, 0.0);
        for r in records {
            m.count += 1;
            let e = r.abs_error();
            abs += e;
            sq += e * e;
            if r.true_model.class_index().is_some() {
                classified += 1;
                tp += usize::from(r.correct());
            }
        }
        if m.count > 0 {
            m.mae = abs / m.count as f64;
            m.mse = sq / m.count as f64;
        }
        if classified > 0 {
            // single-label predictions: every miss is one false positive and
            // one false negative, so micro precision = micro recall = F1
            m.f1 = tp as f64 / classified as f64;
        }
        m
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bucket {
    pub lo: f64,
    pub hi: f64,
    pub metrics: Metrics,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub overall: Metrics,
    /// `confusion[p][t]`: share of class-t trajectories predicted as class p.
    /// Columns sum to one.
    pub confusion: [[f64; 5]; 5],
    pub confusion_counts: [[u64; 5]; 5],
    pub by_length: Vec<Bucket>,
    pub by_noise: Vec<Bucket>,
    pub by_alpha: Vec<Bucket>,
    /// Accuracy per (length bin, noise bin); NaN for empty cells.
    pub length_noise_accuracy: Vec<Vec<f64>>,
    /// Counts per (true α bin, predicted α bin) over [0, 2].
    pub alpha_histogram: Vec<Vec<u64>>,
    pub binning: Binning,
    pub records: Vec<Record>,
    pub latents: Option<Matrix<f64>>,
}

fn buckets(records: &[Record], edges: &[f64], key: impl Fn(&Record) -> f64) -> Vec<Bucket> {
    let mut groups: Vec<Vec<&Record>> = vec![Vec::new(); edges.len().saturating_sub(1)];
    for r in records {
        if let Some(b) = bin_index(edges, key(r)) {
            groups[b].push(r);
        }
    }
    groups
        .into_iter()
        .enumerate()
        .map(|(i, g)| Bucket {
            lo: edges[i],
            hi: edges[i + 1],
            metrics: Metrics::of(g),
        })
        .collect()
}

impl EvalReport {
    pub fn from_records(records: Vec<Record>, binning: Binning) -> Self {
        let overall = Metrics::of(&records);
        let mut counts = [[0u64; 5]; 5];
        for r in &records {
            if let (Some(t), Some(p)) = (r.true_model.class_index(), r.pred_model.class_index()) {
                counts[p][t] += 1;
            }
        }
        let mut confusion = [[0.0; 5]; 5];
        for t in 0..5 {
            let col: u64 = (0..5).map(|p| counts[p][t]).sum();
            if col > 0 {
                for p in 0..5 {
                    confusion[p][t] = counts[p][t] as f64 / col as f64;
                }
            }
        }
        let by_length = buckets(&records, &binning.length_edges, |r| r.n as f64);
        let by_noise = buckets(&records, &binning.noise_edges, |r| r.noise);
        let by_alpha = buckets(&records, &binning.alpha_edges, |r| r.true_alpha);

        let nl = binning.length_edges.len().saturating_sub(1);
        let nn = binning.noise_edges.len().saturating_sub(1);
        let mut hits = vec![vec![(0usize, 0usize); nn]; nl];
        for r in &records {
            if let (Some(i), Some(j)) = (bin_index(&binning.length_edges, r.n as f64), bin_index(&binning.noise_edges, r.noise)) {
                hits[i][j].0 += usize::from(r.correct());
                hits[i][j].1 += 1;
            }
        }
        let length_noise_accuracy = hits
            .iter()
            .map(|row| row.iter().map(|&(c, n)| if n > 0 { c as f64 / n as f64 } else { f64::NAN }).collect())
            .collect();

        let hb = binning.hist_bins.max(1);
        let hist_edges: Vec<f64> = (0..=hb).map(|i| 2.0 * i as f64 / hb as f64).collect();
        let mut alpha_histogram = vec![vec![0u64; hb]; hb];
        for r in &records {
            if let (Some(i), Some(j)) = (bin_index(&hist_edges, r.true_alpha), bin_index(&hist_edges, r.pred_alpha.clamp(0.0, 2.0))) {
                alpha_histogram[i][j] += 1;
            }
        }
        Self {
            overall,
            confusion,
            confusion_counts: counts,
            by_length,
            by_noise,
            by_alpha,
            length_noise_accuracy,
            alpha_histogram,
            binning,
            records,
            latents: None,
        }
    }

    /// Metrics over the records accepted by `keep`.
    pub fn subset(&self, keep: impl Fn(&Record) -> bool) -> Metrics {
        Metrics::of(self.records.iter().filter(|r| keep(r)))
    }

    /// Human-readable summary.
    pub fn summary(&self) -> String {
        let mut s = format!(
            "trajectories: {}\nMAE(alpha): {:.4}\nMSE(alpha): {:.4}\nF1 (micro): {:.4}\n\nconfusion (columns = true model)\n      ",
            self.overall.count, self.overall.mae, self.overall.mse, self.overall.f1
        );
        for m in Model::CLASSES {
            s.push_str(&format!("{:>7}", m.name()));
        }
        s.push('\n');
        for (p, row) in self.confusion.iter().enumerate() {
            s.push_str(&format!("{:>6}", Model::CLASSES[p].name()));
            for v in row {
                s.push_str(&format!("{v:>7.3}"));
            }
            s.push('\n');
        }
        s.push_str("\nlength bin        count    MAE     F1\n");
        for b in &self.by_length {
            s.push_str(&format!(
                "[{:>5}, {:>5})  {:>8}  {:.3}  {:.3}\n",
                b.lo, b.hi, b.metrics.count, b.metrics.mae, b.metrics.f1
            ));
        }
        s
    }

    /// Matrix blocks as `(name, header, rows)`: the confusion matrix, metric
    /// curves by length, noise and α, the length × noise accuracy grid and
    /// the true-vs-predicted α histogram.
    pub fn blocks(&self) -> Vec<(&'static str, String, Vec<String>)> {
        let names: Vec<&str> = Model::CLASSES.iter().map(|m| m.name()).collect();
        let mut out = vec![(
            "confusion",
            format!("pred\\true,{}", names.join(",")),
            self.confusion
                .iter()
                .enumerate()
                .map(|(p, row)| format!("{},{}", names[p], join(row.iter())))
                .collect(),
        )];
        for (name, bs) in [("by_length", &self.by_length), ("by_noise", &self.by_noise), ("by_alpha", &self.by_alpha)] {
            out.push((
                name,
                "lo,hi,count,mae,mse,f1".to_string(),
                bs.iter()
                    .map(|b| format!("{},{},{},{},{},{}", b.lo, b.hi, b.metrics.count, b.metrics.mae, b.metrics.mse, b.metrics.f1))
                    .collect(),
            ));
        }
        let le = &self.binning.length_edges;
        let ne = &self.binning.noise_edges;
        out.push((
            "length_noise_accuracy",
            format!(
                "length\\noise,{}",
                ne.windows(2).map(|e| format!("{}-{}", e[0], e[1])).collect::<Vec<_>>().join(",")
            ),
            self.length_noise_accuracy
                .iter()
                .zip(le.windows(2))
                .map(|(row, e)| format!("{}-{},{}", e[0], e[1], join(row.iter())))
                .collect(),
        ));
        let hb = self.alpha_histogram.len();
        out.push((
            "alpha_histogram",
            format!("true\\pred,{}", join((0..hb).map(|j| 2.0 * (j as f64 + 0.5) / hb as f64))),
            self.alpha_histogram
                .iter()
                .enumerate()
                .map(|(i, row)| format!("{},{}", 2.0 * (i as f64 + 0.5) / hb as f64, join(row.iter())))
                .collect(),
        ));
        out
    }

    /// Machine-readable metrics: `key=value` lines followed by CSV matrix
    /// blocks delimited by `[name]` and `[end]`.
    pub fn write_metrics<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "count={}", self.overall.count)?;
        writeln!(w, "mae={}", self.overall.mae)?;
        writeln!(w, "mse={}", self.overall.mse)?;
        writeln!(w, "f1={}", self.overall.f1)?;
        for (name, header, rows) in self.blocks() {
            write_block(&mut w, name, &header, &rows)?;
        }
        Ok(())
    }

    /// `true_model,true_alpha,pred_model,pred_alpha,N,noise` lines.
    pub fn write_predictions<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "true_model,true_alpha,pred_model,pred_alpha,N,noise")?;
        for r in &self.records {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                r.true_model, r.true_alpha, r.pred_model, r.pred_alpha, r.n, r.noise
            )?;
        }
        Ok(())
    }
}

/// Writes one `[name]` … `[end]` CSV block.
pub fn write_block<W: Write>(w: &mut W, name: &str, header: &str, rows: &[String]) -> std::io::Result<()> {
    writeln!(w, "[{name}]")?;
    writeln!(w, "{header}")?;
    for r in rows {
        writeln!(w, "{r}")?;
    }
    writeln!(w, "[end]")
}

fn join<I: IntoIterator<Item = X>, X: std::fmt::Display>(it: I) -> String {
    it.into_iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

/// Description of a fresh evaluation set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub sampling: SamplingConfig,
    pub count: usize,
    pub seed: u64,
    /// Assign models round-robin so classes are exactly balanced.
    pub balanced: bool,
    /// Trajectories per forward pass.
    pub chunk: usize,
    pub keep_latent: bool,
    pub binning: Binning,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            sampling: SamplingConfig::default(),
            count: 10_000,
            seed: 1,
            balanced: true,
            chunk: 256,
            keep_latent: false,
            binning: Binning::default(),
        }
    }
}

/// Eval-mode predictions for prepared graphs, `chunk` graphs per pass.
pub fn predict_graphs<T: Real>(net: &Gnn<T>, graphs: &[&TrajGraph], chunk: usize) -> Result<Vec<Prediction>> {
    let mut out = Vec::with_capacity(graphs.len());
    for part in graphs.chunks(chunk.max(1)) {
        let batch = GraphBatch::<T>::new(part.iter().copied())?;
        out.extend(net.forward_eval(&batch)?.predictions());
    }
    Ok(out)
}

/// Samples of trajectories `start..start + count` of a stream.
#[allow(clippy::too_many_arguments)]
pub fn stream_samples(
    cfg: &SamplingConfig,
    model: &GnnConfig,
    seed: u64,
    domain: SeedDomain,
    start: u64,
    count: usize,
    balanced: bool,
    workers: &Workers,
) -> Result<Vec<Sample>> {
    let s = seeds(seed, domain, start, count);
    let idx: Vec<(usize, u64)> = s.into_iter().enumerate().collect();
    workers
        .map(&idx, |&(i, seed)| {
            let fixed = balanced.then(|| cfg.models[(start as usize + i) % cfg.models.len()]);
            cfg.sample_labelled(cfg.draw_label_for(seed, fixed), model)
        })
        .into_iter()
        .collect()
}

/// Evaluates `net` on a fresh, deterministic evaluation set.
pub fn evaluate<T: Real>(net: &Gnn<T>, cfg: &EvalConfig, workers: &Workers) -> Result<EvalReport> {
    cfg.sampling.validate()?;
    if cfg.count == 0 {
        return domain("evaluation count must be positive");
    }
    check_layout(net, &cfg.sampling)?;
    let mut records = Vec::with_capacity(cfg.count);
    let mut latents = Vec::new();
    let chunk = cfg.chunk.max(1);
    let mut start = 0;
    while start < cfg.count {
        let m = chunk.min(cfg.count - start);
        let samples = stream_samples(&cfg.sampling, net.config(), cfg.seed, SeedDomain::Eval, start as u64, m, cfg.balanced, workers)?;
        debug_assert!(samples.iter().all(|s| seed_domain(s.label.seed) == SeedDomain::Eval));
        let graphs: Vec<&TrajGraph> = samples.iter().map(|s| &s.graph).collect();
        let preds = predict_graphs(net, &graphs, chunk)?;
        for (s, p) in samples.iter().zip(&preds) {
            records.push(Record::new(&s.label, p));
            if cfg.keep_latent {
                latents.extend_from_slice(&p.latent);
            }
        }
        start += m;
    }
    let mut report = EvalReport::from_records(records, cfg.binning.clone());
    if cfg.keep_latent {
        report.latents = Some(Matrix::from_vec(cfg.count, net.config().latent_dim(), latents));
    }
    Ok(report)
}

/// Fails with a mismatch error when the sampled features cannot feed `net`.
pub fn check_layout<T: Real>(net: &Gnn<T>, sampling: &SamplingConfig) -> Result<()> {
    let cfg = net.config();
    if cfg.dim != sampling.dim {
        return Err(crate::Error::Mismatch(format!(
            "model was built for d = {}, data has d = {}",
            cfg.dim, sampling.dim
        )));
    }
    Ok(())
}
