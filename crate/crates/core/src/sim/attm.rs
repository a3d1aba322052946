//! Annealed transient time motion, regime I with γ = 1 and σ = α.
//!
//! Diffusivities are drawn from P(D) ∝ D^{σ−1} on (0, 1] and held for a
//! time τ = D^{−γ}. Between observation times the increment variance is the
//! diffusivity integrated over the step, so changes of D inside a step are
//! handled exactly.

use rand::Rng;
use rand_distr::StandardNormal;

pub(super) fn simulate<R: Rng + ?Sized>(alpha: f64, n: usize, dim: usize, dt: f64, rng: &mut R) -> Vec<f64> {
    let sigma = alpha;
    let gamma = 1.0;
    let draw = |rng: &mut R| {
        let u: f64 = 1.0 - rng.random::<f64>();
        let d = u.powf(1.0 / sigma);
        (d, d.powf(-gamma))
    };
    let mut positions = vec![0.0; n * dim];
    let (mut diff, mut hold) = draw(rng);
    let mut seg_end = hold;
    for i in 1..n {
        let t_prev = (i - 1) as f64 * dt;
        let t = i as f64 * dt;
        let mut var = 0.0;
        let mut cursor = t_prev;
        while seg_end < t {
            var += diff * (seg_end - cursor);
            cursor = seg_end;
            (diff, hold) = draw(rng);
            seg_end += hold;
        }
        var += diff * (t - cursor);
        let sd = var.sqrt();
        for k in 0..dim {
            let z: f64 = rng.sample(StandardNormal);
            positions[i * dim + k] = positions[(i - 1) * dim + k] + sd * z;
        }
    }
    positions
}
