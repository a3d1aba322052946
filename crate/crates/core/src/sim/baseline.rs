//! Brownian motion and the Ornstein–Uhlenbeck process.

use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

pub(super) fn brownian<R: Rng + ?Sized>(n: usize, dim: usize, dt: f64, rng: &mut R) -> Vec<f64> {
    let sd = dt.sqrt();
    let mut positions = vec![0.0; n * dim];
    for i in 1..n {
        for k in 0..dim {
            let z: f64 = rng.sample(StandardNormal);
            positions[i * dim + k] = positions[(i - 1) * dim + k] + sd * z;
        }
    }
    positions
}

/// Euler scheme X ← X(1 − δt) + √δt·ε with ε ~ N(0, 0.1·I), δt = 0.01.
pub(super) fn ornstein_uhlenbeck<R: Rng + ?Sized>(n: usize, dim: usize, rng: &mut R) -> Vec<f64> {
    const DT: f64 = 0.01;
    let eps = Normal::new(0.0, 0.1f64.sqrt()).expect("valid normal");
    let mut positions = vec![0.0; n * dim];
    for i in 1..n {
        for k in 0..dim {
            let prev = positions[(i - 1) * dim + k];
            positions[i * dim + k] = prev * (1.0 - DT) + DT.sqrt() * eps.sample(rng);
        }
    }
    positions
}
