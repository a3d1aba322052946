//! Superdiffusive Lévy walk: constant-speed flights with Pareto durations
//! ψ(τ) ∝ τ^{−1−σ}, σ = 3 − α, uniformly random directions.

use rand::Rng;
use rand_distr::StandardNormal;

use super::ctrw::waiting_time;

fn random_direction<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> [f64; 3] {
    let mut v = [0.0; 3];
    if dim == 1 {
        v[0] = if rng.random::<bool>() { 1.0 } else { -1.0 };
        return v;
    }
    loop {
        let mut norm = 0.0;
        for c in v.iter_mut().take(dim) {
            *c = rng.sample(StandardNormal);
            norm += *c * *c;
        }
        if norm > 1e-24 {
            let inv = norm.sqrt().recip();
            v.iter_mut().take(dim).for_each(|c| *c *= inv);
            return v;
        }
    }
}

pub(super) fn simulate<R: Rng + ?Sized>(alpha: f64, n: usize, dim: usize, dt: f64, rng: &mut R) -> Vec<f64> {
    const SPEED: f64 = 1.0;
    let sigma = 3.0 - alpha;
    let mut positions = vec![0.0; n * dim];
    let mut start = [0.0; 3];
    let mut t0 = 0.0;
    let mut duration = waiting_time(sigma, dt, rng);
    let mut dir = random_direction(dim, rng);
    for i in 1..n {
        let t = i as f64 * dt;
        while t0 + duration < t {
            for k in 0..dim {
                start[k] += SPEED * duration * dir[k];
            }
            t0 += duration;
            duration = waiting_time(sigma, dt, rng);
            dir = random_direction(dim, rng);
        }
        for k in 0..dim {
            positions[i * dim + k] = start[k] + SPEED * (t - t0) * dir[k];
        }
    }
    positions
}
