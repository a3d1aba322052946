//! Subdiffusive continuous-time random walk.
//!
//! Renewal process with heavy-tailed waiting times ψ(τ) ∝ τ^{−α−1} and
//! unit-variance Gaussian jumps. Waiting times are Lomax (Pareto II) with
//! scale dt, so waits shorter than one observation step stay possible.
//! The walk is observed on the uniform grid:
//! the recorded position at t_n is the position after the last jump at or
//! before t_n.

use rand::Rng;
use rand_distr::StandardNormal;

/// Pareto waiting time with survival function (τ/τ_min)^{−α}.
pub fn waiting_time<R: Rng + ?Sized>(alpha: f64, tau_min: f64, rng: &mut R) -> f64 {
    let u: f64 = 1.0 - rng.random::<f64>(); // (0, 1]
    tau_min * u.powf(-1.0 / alpha)
}

/// Lomax waiting time with survival function (1 + τ/scale)^{−α}.
pub fn lomax_waiting_time<R: Rng + ?Sized>(alpha: f64, scale: f64, rng: &mut R) -> f64 {
    waiting_time(alpha, scale, rng) - scale
}

/// Returns the observed positions and the jump times that produced them.
pub fn simulate<R: Rng + ?Sized>(alpha: f64, n: usize, dim: usize, dt: f64, rng: &mut R) -> (Vec<f64>, Vec<f64>) {
    let horizon = (n - 1) as f64 * dt;
    let mut positions = vec![0.0; n * dim];
    let mut jumps = Vec::new();
    let mut current = vec![0.0; dim];
    let mut t = lomax_waiting_time(alpha, dt, rng);
    let mut next_idx = 0usize;
    loop {
        // record grid points strictly before the next jump
        while next_idx < n && (next_idx as f64) * dt < t {
            positions[next_idx * dim..(next_idx + 1) * dim].copy_from_slice(&current);
            next_idx += 1;
        }
        if next_idx >= n || t > horizon {
            break;
        }
        jumps.push(t);
        for c in current.iter_mut() {
            let z: f64 = rng.sample(StandardNormal);
            *c += z;
        }
        t += lomax_waiting_time(alpha, dt, rng);
    }
    for i in next_idx..n {
        positions[i * dim..(i + 1) * dim].copy_from_slice(&current);
    }
    (positions, jumps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    /// Hill estimator of the survival-tail index from the `k` largest values.
    fn hill(mut xs: Vec<f64>, k: usize) -> f64 {
        xs.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let threshold = xs[k].ln();
        let mean: f64 = xs[..k].iter().map(|x| x.ln() - threshold).sum::<f64>() / k as f64;
        1.0 / mean
    }

    #[test]
    fn waiting_time_tail_exponent() {
        let mut rng = stream(3, 0);
        let waits: Vec<f64> = (0..200_000).map(|_| lomax_waiting_time(0.5, 1.0, &mut rng)).collect();
        // top 1% sits far beyond the Lomax scale, where the tail is Pareto
        let density_exponent = hill(waits, 2000) + 1.0;
        assert!((density_exponent - 1.5).abs() < 0.1, "{density_exponent}");
    }

    #[test]
    fn observed_walk_rests_and_jumps() {
        let mut rng = stream(3, 1);
        let (pos, jumps) = simulate(0.5, 1000, 1, 1.0, &mut rng);
        let zeros = pos.windows(2).filter(|w| w[0] == w[1]).count();
        assert!(zeros > 0);
        assert!(!jumps.is_empty());
        assert!(jumps.windows(2).all(|w| w[0] <= w[1]));
    }
}
