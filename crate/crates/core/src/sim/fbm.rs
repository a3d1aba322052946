//! Fractional Brownian motion from fractional Gaussian noise.
//!
//! Increments are drawn with the unit-variance fGn autocovariance
//! γ(k) = ½(|k+1|^α − 2|k|^α + |k−1|^α). Two exact generators are provided:
//! circulant embedding (Davies–Harte, O(n log n)), used by the simulator,
//! and a dense Cholesky factor, kept as an independent reference.

use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{domain, Result};

/// Autocovariance of unit-variance fractional Gaussian noise at `lag`.
pub fn fgn_autocovariance(alpha: f64, lag: usize) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 2.0) {
        return domain(format!("fGn requires 0 < alpha < 2, got {alpha}"));
    }
    Ok(autocov(alpha, lag))
}

fn autocov(alpha: f64, lag: usize) -> f64 {
    let k = lag as f64;
    if lag == 0 {
        return 1.0;
    }
    0.5 * ((k + 1.0).powf(alpha) - 2.0 * k.powf(alpha) + (k - 1.0).powf(alpha))
}

/// Circulant-embedding sampler for `n` fGn increments.
pub struct CirculantFgn {
    n: usize,
    /// sqrt(λ_k / m) for k = 0..=n, m = 2n.
    scale: Vec<f64>,
    planner: FftPlanner<f64>,
}

impl CirculantFgn {
    pub fn new(alpha: f64, n: usize) -> Result<Self> {
        fgn_autocovariance(alpha, 0)?;
        if n == 0 {
            return domain("need at least one increment");
        }
        let m = 2 * n;
        let mut row: Vec<Complex<f64>> = (0..m)
            .map(|j| {
                let lag = if j <= n { j } else { m - j };
                Complex::new(autocov(alpha, lag), 0.0)
            })
            .collect();
        let mut planner = FftPlanner::new();
        planner.plan_fft_forward(m).process(&mut row);
        let max = row.iter().map(|c| c.re).fold(0.0, f64::max);
        let mut scale = Vec::with_capacity(n + 1);
        for c in row.iter().take(n + 1) {
            let lambda = c.re;
            if lambda < -1e-9 * max {
                return domain(format!("circulant embedding not nonnegative (λ = {lambda})"));
            }
            scale.push((lambda.max(0.0) / m as f64).sqrt());
        }
        Ok(Self { n, scale, planner })
    }

    pub fn sample<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Vec<f64> {
        let n = self.n;
        let m = 2 * n;
        let mut w = vec![Complex::new(0.0, 0.0); m];
        let z0: f64 = rng.sample(StandardNormal);
        w[0] = Complex::new(self.scale[0] * z0, 0.0);
        for k in 1..n {
            let a: f64 = rng.sample(StandardNormal);
            let b: f64 = rng.sample(StandardNormal);
            let s = self.scale[k] * std::f64::consts::FRAC_1_SQRT_2;
            w[k] = Complex::new(s * a, s * b);
            w[m - k] = w[k].conj();
        }
        let zn: f64 = rng.sample(StandardNormal);
        w[n] = Complex::new(self.scale[n] * zn, 0.0);
        self.planner.plan_fft_forward(m).process(&mut w);
        w.iter().take(n).map(|c| c.re).collect()
    }
}

/// Lower Cholesky factor of the n×n fGn covariance (row-major).
pub struct CholeskyFgn {
    n: usize,
    lower: Vec<f64>,
}

impl CholeskyFgn {
    pub fn new(alpha: f64, n: usize) -> Result<Self> {
        fgn_autocovariance(alpha, 0)?;
        let gamma: Vec<f64> = (0..n).map(|k| autocov(alpha, k)).collect();
        let mut l = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let mut s = gamma[i - j];
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                if i == j {
                    if s <= 0.0 {
                        return domain("fGn covariance is not positive definite");
                    }
                    l[i * n + i] = s.sqrt();
                } else {
                    l[i * n + j] = s / l[j * n + j];
                }
            }
        }
        Ok(Self { n, lower: l })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let z: Vec<f64> = (0..self.n).map(|_| rng.sample(StandardNormal)).collect();
        (0..self.n)
            .map(|i| {
                self.lower[i * self.n..i * self.n + i + 1]
                    .iter()
                    .zip(&z)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect()
    }
}

pub(super) fn simulate<R: Rng + ?Sized>(alpha: f64, n: usize, dim: usize, dt: f64, rng: &mut R) -> Result<Vec<f64>> {
    let mut gen = CirculantFgn::new(alpha, n - 1)?;
    let scale = dt.powf(alpha / 2.0);
    let mut positions = vec![0.0; n * dim];
    for k in 0..dim {
        let incr = gen.sample(rng);
        let mut x = 0.0;
        for (i, dx) in incr.iter().enumerate() {
            x += scale * dx;
            positions[(i + 1) * dim + k] = x;
        }
    }
    Ok(positions)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    #[test]
    fn autocovariance_examples() {
        assert_eq!(fgn_autocovariance(1.0, 0).unwrap(), 1.0);
        assert_eq!(fgn_autocovariance(1.0, 5).unwrap(), 0.0);
        // ½(2^0.5 − 2)
        let expected = 0.5 * (2f64.sqrt() - 2.0);
        assert!((fgn_autocovariance(0.5, 1).unwrap() - expected).abs() < 1e-15);
        assert!((expected + 0.29289).abs() < 1e-5);
        assert!(fgn_autocovariance(0.0, 1).is_err());
        assert!(fgn_autocovariance(2.0, 1).is_err());
        assert!(fgn_autocovariance(-1.0, 0).is_err());
    }

    #[test]
    fn circulant_and_cholesky_agree_in_distribution() {
        // Ensemble covariance of both generators at a few lags.
        let alpha = 0.6;
        let n = 16;
        let reps = 20_000;
        let mut circ = CirculantFgn::new(alpha, n).unwrap();
        let chol = CholeskyFgn::new(alpha, n).unwrap();
        let mut rng = stream(1, 0);
        let mut cov_c = [0.0; 4];
        let mut cov_l = [0.0; 4];
        for _ in 0..reps {
            let a = circ.sample(&mut rng);
            let b = chol.sample(&mut rng);
            for lag in 0..4 {
                cov_c[lag] += a[5] * a[5 + lag];
                cov_l[lag] += b[5] * b[5 + lag];
            }
        }
        for lag in 0..4 {
            let g = autocov(alpha, lag);
            let c = cov_c[lag] / reps as f64;
            let l = cov_l[lag] / reps as f64;
            // standard error of a product of unit normals is ≤ sqrt(2/reps)
            let tol = 4.0 * (2.0 / reps as f64).sqrt();
            assert!((c - g).abs() < tol, "circulant lag {lag}: {c} vs {g}");
            assert!((l - g).abs() < tol, "cholesky lag {lag}: {l} vs {g}");
        }
    }

    #[test]
    fn cholesky_reproduces_covariance_exactly() {
        let alpha = 1.3;
        let n = 12;
        let c = CholeskyFgn::new(alpha, n).unwrap();
        for i in 0..n {
            for j in 0..=i {
                let s: f64 = (0..=j).map(|k| c.lower[i * n + k] * c.lower[j * n + k]).sum();
                assert!((s - autocov(alpha, i - j)).abs() < 1e-12);
            }
        }
    }
}
