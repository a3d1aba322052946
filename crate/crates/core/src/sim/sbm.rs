//! Scaled Brownian motion: independent Gaussian increments whose variance
//! integrates the diffusivity K(t) = α t^{α−1} over each step.

use rand::Rng;
use rand_distr::StandardNormal;

pub(super) fn simulate<R: Rng + ?Sized>(alpha: f64, n: usize, dim: usize, dt: f64, rng: &mut R) -> Vec<f64> {
    let mut positions = vec![0.0; n * dim];
    let sd: Vec<f64> = (1..n)
        .map(|i| {
            let t1 = (i as f64 * dt).powf(alpha);
            let t0 = ((i - 1) as f64 * dt).powf(alpha);
            (t1 - t0).sqrt()
        })
        .collect();
    for i in 1..n {
        for k in 0..dim {
            let z: f64 = rng.sample(StandardNormal);
            positions[i * dim + k] = positions[(i - 1) * dim + k] + sd[i - 1] * z;
        }
    }
    positions
}
