//! Latent-space export and the probes used to read it.

use std::io::Write;

use super::eval::predict_graphs;
use super::sampling::Label;
use crate::error::Result;
use crate::gnn::{Gnn, TrajGraph};
use crate::nn::{Matrix, Real};
use crate::sim::{Model, Trajectory};

/// One latent row per trajectory with its labels.
#[derive(Debug, Clone)]
pub struct LatentExport {
    pub latents: Matrix<f64>,
    pub labels: Vec<Label>,
    /// Model name, `seg:<first>:<second>` for segmented trajectories.
    pub tags: Vec<String>,
}

pub fn model_tag(traj: &Trajectory) -> String {
    match (traj.model, traj.segment) {
        (Model::Segmented, Some(s)) => format!("seg:{}:{}", s.first, s.second),
        (m, _) => m.to_string(),
    }
}

/// Encodes every trajectory (clipping with factor `clip` when positive).
pub fn export_latent<T: Real>(net: &Gnn<T>, trajs: &[Trajectory], clip: f64) -> Result<LatentExport> {
    let cfg = net.config();
    let graphs = trajs
        .iter()
        .map(|t| TrajGraph::from_trajectory(t, cfg.wiring, cfg.k, (clip > 0.0).then_some(clip)))
        .collect::<Result<Vec<_>>>()?;
    let refs: Vec<&TrajGraph> = graphs.iter().collect();
    let preds = predict_graphs(net, &refs, 256)?;
    let dim = cfg.latent_dim();
    let data = preds.iter().flat_map(|p| p.latent.iter().copied()).collect();
    Ok(LatentExport {
        latents: Matrix::from_vec(trajs.len(), dim, data),
        labels: trajs.iter().map(Label::of).collect(),
        tags: trajs.iter().map(model_tag).collect(),
    })
}

impl LatentExport {
    /// CSV with columns `model,alpha,N,fraction_first,z0,…`.
    pub fn write<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let zs: Vec<String> = (0..self.latents.cols()).map(|i| format!("z{i}")).collect();
        writeln!(w, "model,alpha,N,fraction_first,{}", zs.join(","))?;
        for (i, (l, tag)) in self.labels.iter().zip(&self.tags).enumerate() {
            let frac = l.fraction_first.map(|f| f.to_string()).unwrap_or_default();
            let row: Vec<String> = self.latents.row(i).iter().map(|v| v.to_string()).collect();
            writeln!(w, "{},{},{},{},{}", tag, l.alpha, l.n, frac, row.join(","))?;
        }
        Ok(())
    }
}

/// Mean of the given rows.
pub fn centroid<'a>(rows: impl IntoIterator<Item = &'a [f64]>) -> Vec<f64> {
    let mut sum: Vec<f64> = Vec::new();
    let mut n = 0usize;
    for r in rows {
        if sum.is_empty() {
            sum = vec![0.0; r.len()];
        }
        sum.iter_mut().zip(r).for_each(|(s, v)| *s += v);
        n += 1;
    }
    sum.iter_mut().for_each(|s| *s /= n.max(1) as f64);
    sum
}

pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn ranks(xs: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut r = vec![0.0; xs.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && xs[idx[j + 1]] == xs[idx[i]] {
            j += 1;
        }
        // ties share the average rank
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            r[k] = avg;
        }
        i = j + 1;
    }
    r
}

/// Spearman rank correlation (Pearson correlation of average ranks).
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len(), "spearman needs paired samples");
    let (rx, ry) = (ranks(x), ranks(y));
    let n = rx.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return 0.0;
    }
    sxy / (sxx * syy).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spearman_reference() {
        assert!((spearman(&[1.0, 2.0, 3.0, 4.0], &[10.0, 20.0, 25.0, 100.0]) - 1.0).abs() < 1e-12);
        assert!((spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]) + 1.0).abs() < 1e-12);
        // ranks x = 1..5, y = (2, 1, 4, 3, 5): 1 − 6·Σd²/(n(n²−1)) = 1 − 6·4/120
        assert!((spearman(&[1.0, 2.0, 3.0, 4.0, 5.0], &[2.0, 1.0, 4.0, 3.0, 5.0]) - 0.8).abs() < 1e-12);
    }

    #[test]
    fn centroid_and_distance() {
        let rows = [vec![0.0, 2.0], vec![2.0, 4.0]];
        let c = centroid(rows.iter().map(|r| r.as_slice()));
        assert_eq!(c, vec![1.0, 3.0]);
        assert_eq!(distance(&c, &[4.0, 7.0]), 5.0);
    }
}
