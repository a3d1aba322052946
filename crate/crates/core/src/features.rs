//! Per-node feature matrices.
//!
//! Column layout for a d-dimensional trajectory of N points (node i is
//! 1-based, Δ is the step arriving at node i, node 1 has Δ = 0):
//!
//! | columns            | content                                      |
//! |--------------------|----------------------------------------------|
//! | 0                  | t_i / N                                      |
//! | 1 + k·d + j        | position j under normalisation k             |
//! | 1 + 3d + k·d + j   | Σ_{m ≤ i} \|Δx_j\| under normalisation k      |
//! | 1 + 6d + k·d + j   | Σ_{m ≤ i} Δx_j² under normalisation k         |
//!
//! Normalisation k = 0 divides displacements from r₁ by the standard
//! deviation of steps, k = 1 divides displacements from the centroid by the
//! standard deviation of positions, k = 2 divides displacements from r₁ by
//! the mean absolute step. Statistics are pooled over dimensions and guarded
//! from below by [`EPS`]. Squared-step columns use the squared scale.

use crate::error::{domain, Result};
use crate::nn::{Matrix, Real};
use crate::sim::Trajectory;

/// Identifier of the column layout, stored in checkpoints.
pub const LAYOUT_ID: &str = "trajgraph-nodefeat-v1";

/// Lower bound applied to every normalisation scale.
pub const EPS: f64 = 1e-12;

/// Default clipping factor relative to the median step norm.
pub const DEFAULT_CLIP: f64 = 10.0;

pub type NodeFeatures = Matrix<f64>;

/// Number of feature columns for a `dim`-dimensional trajectory.
pub fn feature_count(dim: usize) -> usize {
    1 + 9 * dim
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

/// Rescales every step longer than `c` times the median nonzero step norm
/// down to that length, keeping its direction, and rebuilds the positions
/// from the first point. Trajectories without any long step are returned
/// unchanged, bit for bit.
pub fn clip_steps(traj: &Trajectory, c: f64) -> Result<Trajectory> {
    if !(c > 0.0) {
        return domain(format!("clip factor must be positive, got {c}"));
    }
    let d = traj.dim();
    let steps = traj.steps();
    let norms: Vec<f64> = steps.chunks(d).map(|s| s.iter().map(|x| x * x).sum::<f64>().sqrt()).collect();
    let nonzero: Vec<f64> = norms.iter().copied().filter(|&x| x > 0.0).collect();
    if nonzero.is_empty() {
        return Ok(traj.clone());
    }
    let threshold = c * median(nonzero);
    if norms.iter().all(|&x| x <= threshold) {
        return Ok(traj.clone());
    }
    let mut out = traj.clone();
    let pos = out.positions_mut();
    for (i, (step, &norm)) in steps.chunks(d).zip(&norms).enumerate() {
        let factor = if norm > threshold { threshold / norm } else { 1.0 };
        for j in 0..d {
            pos[(i + 1) * d + j] = pos[i * d + j] + step[j] * factor;
        }
    }
    Ok(out)
}

fn pooled_std(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let n = values.clone().count();
    if n < 2 {
        return 0.0;
    }
    let mean = values.clone().sum::<f64>() / n as f64;
    let ss: f64 = values.map(|x| (x - mean) * (x - mean)).sum();
    (ss / (n - 1) as f64).sqrt()
}

/// Builds the `N × (1 + 9d)` feature matrix described in the module docs.
pub fn node_features(traj: &Trajectory) -> Result<NodeFeatures> {
    let n = traj.len();
    let d = traj.dim();
    if n < 2 {
        return domain("node features need at least two points");
    }
    let pos = traj.positions();
    let steps = traj.steps();

    let step_std = pooled_std(steps.iter().copied()).max(EPS);
    // position spread: each dimension centred on its own mean, then pooled
    let centroid: Vec<f64> = (0..d)
        .map(|j| (0..n).map(|i| pos[i * d + j]).sum::<f64>() / n as f64)
        .collect();
    let centred = (0..n * d).map(|k| pos[k] - centroid[k % d]);
    let pos_std = pooled_std(centred).max(EPS);
    let mean_abs_step = (steps.iter().map(|x| x.abs()).sum::<f64>() / steps.len() as f64).max(EPS);
    let scales = [step_std, pos_std, mean_abs_step];

    let cols = feature_count(d);
    let mut out = Matrix::zeros(n, cols);
    let mut cum_abs = vec![0.0; d];
    let mut cum_sq = vec![0.0; d];
    for i in 0..n {
        if i > 0 {
            for j in 0..d {
                let s = steps[(i - 1) * d + j];
                cum_abs[j] += s.abs();
                cum_sq[j] += s * s;
            }
        }
        let row = out.row_mut(i);
        row[0] = (i + 1) as f64 / n as f64;
        for (k, &scale) in scales.iter().enumerate() {
            for j in 0..d {
                let origin = if k == 1 { centroid[j] } else { pos[j] };
                row[1 + k * d + j] = (pos[i * d + j] - origin) / scale;
                row[1 + 3 * d + k * d + j] = cum_abs[j] / scale;
                row[1 + 6 * d + k * d + j] = cum_sq[j] / (scale * scale);
            }
        }
    }
    if !out.is_finite() {
        return Err(crate::Error::NonFinite("node features".into()));
    }
    Ok(out)
}

/// Concatenates element-wise powers 1..=`p_max` of `features` horizontally.
pub fn feature_powers<T: Real>(features: &Matrix<T>, p_max: usize) -> Result<Matrix<T>> {
    if p_max == 0 {
        return domain("p_max must be at least 1");
    }
    let (n, c) = features.shape();
    let mut out = Matrix::zeros(n, p_max * c);
    for i in 0..n {
        let src = features.row(i);
        let dst = out.row_mut(i);
        for (j, &x) in src.iter().enumerate() {
            let mut v = x;
            for p in 0..p_max {
                dst[p * c + j] = v;
                v = v * x;
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{simulate, Model};

    fn line(xs: &[f64]) -> Trajectory {
        Trajectory::from_positions(xs.to_vec(), 1, 1.0).unwrap()
    }

    #[test]
    fn clip_example() {
        let t = line(&[0.0, 1.0, 2.0, 102.0, 103.0]);
        let c = clip_steps(&t, 10.0).unwrap();
        assert_eq!(c.steps(), vec![1.0, 1.0, 10.0, 1.0]);
        assert_eq!(c.point(0), &[0.0]);
    }

    #[test]
    fn clip_leaves_brownian_alone() {
        for seed in 0..20 {
            let t = simulate(Model::Bm, 1.0, 1000, 3, 1.0, seed).unwrap();
            assert_eq!(clip_steps(&t, 10.0).unwrap(), t);
        }
    }

    #[test]
    fn clip_bounds_levy_steps() {
        for seed in 0..20 {
            let t = simulate(Model::Lw, 1.1, 500, 2, 1.0, seed).unwrap();
            let c = clip_steps(&t, 10.0).unwrap();
            let norms: Vec<f64> = c.steps().chunks(2).map(|s| s[0].hypot(s[1])).collect();
            let nonzero: Vec<f64> = norms.iter().copied().filter(|&x| x > 0.0).collect();
            let med = median(nonzero);
            assert!(norms.iter().all(|&x| x <= 10.0 * med * (1.0 + 1e-12)));
        }
    }

    #[test]
    fn clip_constant_is_identity() {
        let t = line(&[4.0; 6]);
        assert_eq!(clip_steps(&t, 10.0).unwrap(), t);
        assert!(clip_steps(&t, 0.0).is_err());
    }

    #[test]
    fn feature_count_law() {
        for d in 1..=3 {
            let t = simulate(Model::Fbm, 0.7, 50, d, 1.0, 1).unwrap();
            let f = node_features(&t).unwrap();
            assert_eq!(f.cols(), 1 + 9 * d);
            assert_eq!(f.rows(), 50);
        }
        assert_eq!(feature_count(3), 28);
    }

    #[test]
    fn constant_trajectory_features() {
        let t = Trajectory::from_positions(vec![2.5; 3 * 10], 3, 1.0).unwrap();
        let f = node_features(&t).unwrap();
        for i in 0..10 {
            assert_eq!(f.get(i, 0), (i + 1) as f64 / 10.0);
            assert!(f.row(i)[1..].iter().all(|&x| x == 0.0));
        }
    }

    #[test]
    fn unit_steps_take_eps_branch() {
        let f = node_features(&line(&[0.0, 1.0, 2.0, 3.0])).unwrap();
        assert!(f.is_finite());
        // step std is zero, so the first position column is divided by EPS
        assert_eq!(f.get(3, 1), 3.0 / EPS);
        // mean |step| is exactly 1: third normalisation leaves positions as is
        assert_eq!(f.get(3, 3), 3.0);
        // the cumulative |Δ| column under the same normalisation counts steps
        assert_eq!(f.get(3, 1 + 3 + 2), 3.0);
    }

    #[test]
    fn cumulants_are_monotone() {
        let t = simulate(Model::Ctrw, 0.4, 300, 2, 1.0, 3).unwrap();
        let f = node_features(&t).unwrap();
        for col in 1 + 3 * 2..f.cols() {
            assert_eq!(f.get(0, col), 0.0);
            for i in 1..f.rows() {
                assert!(f.get(i, col) >= f.get(i - 1, col));
            }
        }
    }

    #[test]
    fn powers() {
        let m = Matrix::from_vec(2, 2, vec![1.0, -1.0, 2.0, -2.0]);
        assert_eq!(feature_powers(&m, 1).unwrap(), m);
        let p = feature_powers(&m, 3).unwrap();
        assert_eq!(p.row(1), &[2.0, -2.0, 4.0, 4.0, 8.0, -8.0]);
        let pm = Matrix::from_vec(3, 1, vec![1.0, -1.0, 1.0]);
        let sq = feature_powers(&pm, 2).unwrap();
        assert!((0..3).all(|i| sq.get(i, 1) == 1.0));
        let f = Matrix::<f64>::zeros(5, 28);
        assert_eq!(feature_powers(&f, 3).unwrap().cols(), 84);
        assert!(feature_powers(&f, 0).is_err());
    }
}
