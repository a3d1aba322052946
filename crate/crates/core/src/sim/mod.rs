//! Random-walk simulators.
//!
//! Five anomalous-diffusion models (ATTM, CTRW, FBM, LW, SBM) plus Brownian
//! motion and an Ornstein–Uhlenbeck process used as out-of-training probes.
//! All generators work in unit scales (K_α = 1, v = 1); downstream features
//! normalise scale away. Positions of trajectory point n are recorded at
//! time (n − 1)·dt, i.e. the first point is the origin at t = 0.

mod attm;
mod baseline;
pub mod ctrw;
pub mod fbm;
mod levy;
pub mod msd;
mod noise;
mod sbm;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::rng;

pub use fbm::fgn_autocovariance;
pub use msd::{ensemble_msd, fit_alpha_loglog, fit_alpha_loglog_range};
pub use noise::{add_noise, jump_size_std};

/// Generating model of a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Attm,
    Ctrw,
    Fbm,
    Lw,
    Sbm,
    Bm,
    Ou,
    Segmented,
}

impl Model {
    /// The five classes the network is trained on, in class-index order.
    pub const CLASSES: [Model; 5] = [Model::Attm, Model::Ctrw, Model::Fbm, Model::Lw, Model::Sbm];

    pub fn class_index(self) -> Option<usize> {
        Self::CLASSES.iter().position(|&m| m == self)
    }

    pub fn from_class_index(i: usize) -> Option<Model> {
        Self::CLASSES.get(i).copied()
    }

    /// Inclusive range of exponents the model is simulated with.
    pub fn alpha_range(self) -> (f64, f64) {
        match self {
            Model::Attm | Model::Ctrw => (0.05, 1.0),
            Model::Lw => (1.0, 1.95),
            Model::Fbm | Model::Sbm => (0.05, 1.95),
            Model::Bm => (1.0, 1.0),
            Model::Ou | Model::Segmented => (0.05, 1.95),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Model::Attm => "attm",
            Model::Ctrw => "ctrw",
            Model::Fbm => "fbm",
            Model::Lw => "lw",
            Model::Sbm => "sbm",
            Model::Bm => "bm",
            Model::Ou => "ou",
            Model::Segmented => "segmented",
        }
    }

    fn check_alpha(self, alpha: f64) -> Result<()> {
        if !alpha.is_finite() {
            return domain(format!("alpha must be finite, got {alpha}"));
        }
        let (lo, hi) = self.alpha_range();
        if alpha < lo - 1e-12 || alpha > hi + 1e-12 {
            return domain(format!(
                "alpha {alpha} outside [{lo}, {hi}] for model {}",
                self.name()
            ));
        }
        Ok(())
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Model {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim().to_ascii_lowercase().as_str() {
            "attm" => Model::Attm,
            "ctrw" => Model::Ctrw,
            "fbm" => Model::Fbm,
            "lw" => Model::Lw,
            "sbm" => Model::Sbm,
            "bm" => Model::Bm,
            "ou" => Model::Ou,
            "segmented" => Model::Segmented,
            other => return domain(format!("unknown model '{other}'")),
        })
    }
}

/// Label of a two-model trajectory: the first `fraction_first` of the
/// points come from `first`, the rest from `second`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentLabel {
    pub first: Model,
    pub second: Model,
    pub fraction_first: f64,
}

/// A d-dimensional time series at uniform time steps together with its
/// ground-truth labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// Row-major `len × dim` positions.
    positions: Vec<f64>,
    dim: usize,
    pub dt: f64,
    pub model: Model,
    pub alpha: f64,
    pub noise_amplitude: f64,
    pub seed: u64,
    pub segment: Option<SegmentLabel>,
}

impl Trajectory {
    /// Builds a trajectory from row-major positions. Labels default to an
    /// unlabeled Brownian record and can be overwritten by the caller.
    pub fn from_positions(positions: Vec<f64>, dim: usize, dt: f64) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return domain(format!("dimension must be 1, 2 or 3, got {dim}"));
        }
        if !positions.len().is_multiple_of(dim) || positions.len() / dim < 2 {
            return domain("a trajectory needs at least two points");
        }
        if let Some(bad) = positions.iter().find(|x| !x.is_finite()) {
            return domain(format!("non-finite coordinate {bad}"));
        }
        if !(dt > 0.0) {
            return domain(format!("dt must be positive, got {dt}"));
        }
        Ok(Self {
            positions,
            dim,
            dt,
            model: Model::Bm,
            alpha: 1.0,
            noise_amplitude: 0.0,
            seed: 0,
            segment: None,
        })
    }

    pub fn len(&self) -> usize {
        self.positions.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub(crate) fn positions_mut(&mut self) -> &mut [f64] {
        &mut self.positions
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.positions[i * self.dim..(i + 1) * self.dim]
    }

    /// Row-major `(len − 1) × dim` displacements.
    pub fn steps(&self) -> Vec<f64> {
        let d = self.dim;
        (d..self.positions.len())
            .map(|k| self.positions[k] - self.positions[k - d])
            .collect()
    }

    /// Copy of the trajectory with every coordinate shifted by `offset`.
    pub fn translated(&self, offset: &[f64]) -> Self {
        let mut out = self.clone();
        for row in out.positions.chunks_mut(self.dim) {
            for (x, o) in row.iter_mut().zip(offset) {
                *x += o;
            }
        }
        out
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.positions.iter_mut().for_each(|x| *x *= s);
        out
    }
}

fn check_shape(n: usize, dim: usize, dt: f64) -> Result<()> {
    if n < 2 {
        return domain(format!("trajectory length must be at least 2, got {n}"));
    }
    if !(1..=3).contains(&dim) {
        return domain(format!("dimension must be 1, 2 or 3, got {dim}"));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return domain(format!("dt must be positive, got {dt}"));
    }
    Ok(())
}

/// Simulates a noiseless trajectory of `n` points. Identical arguments give
/// bit-identical output.
pub fn simulate(model: Model, alpha: f64, n: usize, dim: usize, dt: f64, seed: u64) -> Result<Trajectory> {
    check_shape(n, dim, dt)?;
    model.check_alpha(alpha)?;
    let mut rng = rng::stream(seed, rng::STREAM_SIMULATE);
    let positions = match model {
        Model::Fbm => fbm::simulate(alpha, n, dim, dt, &mut rng)?,
        Model::Sbm => sbm::simulate(alpha, n, dim, dt, &mut rng),
        Model::Ctrw => ctrw::simulate(alpha, n, dim, dt, &mut rng).0,
        Model::Lw => levy::simulate(alpha, n, dim, dt, &mut rng),
        Model::Attm => attm::simulate(alpha, n, dim, dt, &mut rng),
        Model::Bm => baseline::brownian(n, dim, dt, &mut rng),
        Model::Ou => baseline::ornstein_uhlenbeck(n, dim, &mut rng),
        Model::Segmented => {
            return domain("use simulate_segmented for two-model trajectories");
        }
    };
    Ok(Trajectory {
        positions,
        dim,
        dt,
        model,
        alpha,
        noise_amplitude: 0.0,
        seed,
        segment: None,
    })
}

/// Seed used for the second segment of a two-model trajectory.
pub fn second_segment_seed(seed: u64) -> u64 {
    rng::splitmix64(seed ^ 0x5E61_E47E_D000_0002)
}

/// Trajectory whose first ⌊fraction_first·n⌋ points come from `first` and
/// the remainder from `second`, continuing from the last position of the
/// first part. Both parts use the same exponent.
pub fn simulate_segmented(
    first: Model,
    second: Model,
    alpha: f64,
    n: usize,
    dim: usize,
    fraction_first: f64,
    seed: u64,
) -> Result<Trajectory> {
    if !(0.0..=1.0).contains(&fraction_first) {
        return domain(format!("fraction must lie in [0, 1], got {fraction_first}"));
    }
    check_shape(n, dim, 1.0)?;
    let n_first = ((fraction_first * n as f64).floor() as usize).min(n);
    let n_second = n - n_first;

    let mut positions = Vec::with_capacity(n * dim);
    if n_first > 0 {
        let a = simulate(first, alpha, n_first.max(2), dim, 1.0, seed)?;
        positions.extend_from_slice(&a.positions()[..n_first * dim]);
    }
    if n_second > 0 {
        // One extra point: the second walk starts where the first stopped.
        let extra = usize::from(n_first > 0);
        let b = simulate(second, alpha, (n_second + extra).max(2), dim, 1.0, second_segment_seed(seed))?;
        let offset: Vec<f64> = if n_first > 0 {
            let last = &positions[(n_first - 1) * dim..n_first * dim];
            last.iter().zip(b.point(0)).map(|(l, s)| l - s).collect()
        } else {
            vec![0.0; dim]
        };
        for i in extra..extra + n_second {
            for (k, o) in offset.iter().enumerate() {
                positions.push(b.point(i)[k] + o);
            }
        }
    }
    Ok(Trajectory {
        positions,
        dim,
        dt: 1.0,
        model: Model::Segmented,
        alpha,
        noise_amplitude: 0.0,
        seed,
        segment: Some(SegmentLabel {
            first,
            second,
            fraction_first,
        }),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn determinism() {
        for model in [Model::Attm, Model::Ctrw, Model::Fbm, Model::Lw, Model::Sbm, Model::Bm, Model::Ou] {
            let alpha = if model == Model::Lw { 1.5 } else if model == Model::Bm { 1.0 } else { 0.7 };
            let a = simulate(model, alpha, 300, 2, 1.0, 42).unwrap();
            let b = simulate(model, alpha, 300, 2, 1.0, 42).unwrap();
            assert_eq!(a.positions(), b.positions(), "{model}");
            let c = simulate(model, alpha, 300, 2, 1.0, 43).unwrap();
            assert_ne!(a.positions(), c.positions(), "{model}");
            assert!(a.positions().iter().all(|x| x.is_finite()));
            assert_eq!(a.len(), 300);
        }
    }

    #[test]
    fn invalid_pairings_are_rejected() {
        assert!(simulate(Model::Ctrw, 1.5, 100, 1, 1.0, 0).is_err());
        assert!(simulate(Model::Attm, 1.2, 100, 1, 1.0, 0).is_err());
        assert!(simulate(Model::Lw, 0.5, 100, 1, 1.0, 0).is_err());
        assert!(simulate(Model::Fbm, 2.0, 100, 1, 1.0, 0).is_err());
        assert!(simulate(Model::Bm, 0.5, 100, 1, 1.0, 0).is_err());
        assert!(simulate(Model::Fbm, 0.5, 1, 1, 1.0, 0).is_err());
        assert!(simulate(Model::Fbm, 0.5, 10, 4, 1.0, 0).is_err());
        assert!(simulate(Model::Segmented, 0.5, 10, 1, 1.0, 0).is_err());
    }

    #[test]
    fn ctrw_has_resting_periods() {
        let t = simulate(Model::Ctrw, 0.5, 1000, 1, 1.0, 11).unwrap();
        let zeros = t.steps().iter().filter(|&&s| s == 0.0).count();
        assert!(zeros > 0);
    }

    #[test]
    fn levy_walk_flights_group_steps() {
        let t = simulate(Model::Lw, 1.5, 1000, 2, 1.0, 5).unwrap();
        let steps = t.steps();
        // a step lying entirely inside one flight covers exactly SPEED · dt
        let whole = steps
            .chunks(2)
            .filter(|s| ((s[0] * s[0] + s[1] * s[1]).sqrt() - 1.0).abs() < 1e-9)
            .count();
        assert!(whole > 300, "{whole} whole-flight steps");
    }

    #[test]
    fn segmented_degenerate_fractions() {
        let full = simulate_segmented(Model::Fbm, Model::Attm, 0.5, 200, 2, 1.0, 9).unwrap();
        let pure = simulate(Model::Fbm, 0.5, 200, 2, 1.0, 9).unwrap();
        assert_eq!(full.positions(), pure.positions());

        let none = simulate_segmented(Model::Fbm, Model::Attm, 0.5, 200, 2, 0.0, 9).unwrap();
        let pure_b = simulate(Model::Attm, 0.5, 200, 2, 1.0, second_segment_seed(9)).unwrap();
        let shift: Vec<f64> = none.point(0).iter().zip(pure_b.point(0)).map(|(a, b)| a - b).collect();
        let shifted = pure_b.translated(&shift);
        for (a, b) in none.positions().iter().zip(shifted.positions()) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(simulate_segmented(Model::Fbm, Model::Attm, 0.5, 200, 2, 1.5, 9).is_err());
        assert!(simulate_segmented(Model::Fbm, Model::Attm, 0.5, 200, 2, -0.1, 9).is_err());
    }

    #[test]
    fn segmented_junction_is_continuous() {
        for seed in 0..20 {
            let t = simulate_segmented(Model::Fbm, Model::Attm, 0.5, 200, 1, 0.5, seed).unwrap();
            assert_eq!(t.len(), 200);
            let steps: Vec<f64> = t.steps().iter().map(|s| s.abs()).collect();
            let junction = steps[99];
            let max_first = steps[..99].iter().cloned().fold(0.0, f64::max);
            // the junction step is an ordinary step of the second walk
            let b = simulate(Model::Attm, 0.5, 101, 1, 1.0, second_segment_seed(seed)).unwrap();
            let b_steps: Vec<f64> = b.steps().iter().map(|s| s.abs()).collect();
            assert!((junction - b_steps[0]).abs() < 1e-12);
            let max_second = b_steps.iter().cloned().fold(0.0, f64::max);
            assert!(junction <= max_first.max(max_second));
        }
    }
}
