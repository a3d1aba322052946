//! Localisation noise.

use rand::Rng;
use rand_distr::StandardNormal;

use super::Trajectory;
use crate::error::{domain, Result};
use crate::rng;

/// Sample standard deviation of all per-dimension increments, pooled.
pub fn jump_size_std(traj: &Trajectory) -> f64 {
    let steps = traj.steps();
    let n = steps.len() as f64;
    if n < 2.0 {
        return 0.0;
    }
    let mean = steps.iter().sum::<f64>() / n;
    let var = steps.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1.0);
    var.sqrt()
}

/// Adds i.i.d. Gaussian noise of standard deviation
/// `amplitude × jump_size_std(traj)` to every coordinate.
pub fn add_noise(traj: &Trajectory, amplitude: f64, seed: u64) -> Result<Trajectory> {
    if !(amplitude >= 0.0 && amplitude.is_finite()) {
        return domain(format!("noise amplitude must be a finite value ≥ 0, got {amplitude}"));
    }
    let mut out = traj.clone();
    out.noise_amplitude = amplitude;
    if amplitude == 0.0 {
        return Ok(out);
    }
    let sd = amplitude * jump_size_std(traj);
    let mut rng = rng::stream(seed, rng::STREAM_NOISE);
    for x in out.positions_mut() {
        let z: f64 = rng.sample(StandardNormal);
        *x += sd * z;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{simulate, Model};

    #[test]
    fn zero_amplitude_is_identity() {
        let t = simulate(Model::Fbm, 0.7, 50, 3, 1.0, 1).unwrap();
        let n = add_noise(&t, 0.0, 99).unwrap();
        assert_eq!(t.positions(), n.positions());
        assert!(add_noise(&t, -0.1, 1).is_err());
    }

    #[test]
    fn unit_amplitude_matches_jump_std() {
        let mut ratios = Vec::new();
        let mut seed = 0;
        while ratios.len() < 100_000 {
            let t = simulate(Model::Sbm, 1.3, 101, 1, 1.0, seed).unwrap();
            let noisy = add_noise(&t, 1.0, seed + 1_000_000).unwrap();
            let s = jump_size_std(&t);
            for (a, b) in noisy.positions().iter().zip(t.positions()) {
                ratios.push((a - b) / s);
            }
            seed += 1;
        }
        let n = ratios.len() as f64;
        let mean = ratios.iter().sum::<f64>() / n;
        let sd = (ratios.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        assert!((sd - 1.0).abs() < 0.02, "{sd}");
    }

    #[test]
    fn lag_one_variance_of_noisy_brownian() {
        let a = 0.3;
        let (mut clean, mut noisy) = (0.0, 0.0);
        for seed in 0..400 {
            let t = simulate(Model::Bm, 1.0, 500, 2, 1.0, seed).unwrap();
            let s = jump_size_std(&t);
            let nt = add_noise(&t, a, seed).unwrap();
            clean += t.steps().iter().map(|x| x * x).sum::<f64>() / (s * s);
            noisy += nt.steps().iter().map(|x| x * x).sum::<f64>() / (s * s);
        }
        let ratio = noisy / clean;
        let expected = 1.0 + 2.0 * a * a;
        assert!((ratio / expected - 1.0).abs() < 0.05, "{ratio} vs {expected}");
    }
}
