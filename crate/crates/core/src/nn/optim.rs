//! Adam and the exponentially decaying learning-rate schedule.

use super::module::Module;
use super::{Matrix, Real};

/// lr(t) = max(lr₀·decay^t, floor), t counted in trajectories seen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LrSchedule {
    pub lr0: f64,
    pub floor: f64,
    pub decay: f64,
}

impl LrSchedule {
    /// Decays from `lr0` to `floor` exactly over `budget` trajectories.
    pub fn calibrated(lr0: f64, floor: f64, budget: u64) -> Self {
        let decay = if budget == 0 || floor >= lr0 {
            1.0
        } else {
            (floor / lr0).powf(1.0 / budget as f64)
        };
        Self { lr0, floor, decay }
    }

    pub fn at(&self, seen: u64) -> f64 {
        (self.lr0 * self.decay.powf(seen as f64)).max(self.floor)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Adam<T> {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    step: u64,
    moments: Vec<(Matrix<T>, Matrix<T>)>,
}

impl<T: Real> Default for Adam<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Real> Adam<T> {
    pub fn new() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            moments: Vec::new(),
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// One bias-corrected update of every parameter of `module` using its
    /// accumulated gradients.
    pub fn step<M: Module<T> + ?Sized>(&mut self, module: &mut M, lr: f64) {
        self.step += 1;
        let t = self.step as f64;
        let bc1 = 1.0 - self.beta1.powf(t);
        let bc2 = 1.0 - self.beta2.powf(t);
        let (b1, b2) = (T::from_f64_lossy(self.beta1), T::from_f64_lossy(self.beta2));
        let (one_b1, one_b2) = (T::one() - b1, T::one() - b2);
        let step_size = T::from_f64_lossy(lr / bc1);
        let inv_bc2 = T::from_f64_lossy(1.0 / bc2);
        let eps = T::from_f64_lossy(self.eps);
        let lazy_init = self.moments.is_empty();
        let moments = &mut self.moments;
        let mut idx = 0;
        module.visit_params_mut("", &mut |_, p| {
            if lazy_init {
                let (r, c) = p.value.shape();
                moments.push((Matrix::zeros(r, c), Matrix::zeros(r, c)));
            }
            let (m, v) = &mut moments[idx];
            idx += 1;
            for (((w, &g), mi), vi) in p
                .value
                .as_mut_slice()
                .iter_mut()
                .zip(p.grad.as_slice())
                .zip(m.as_mut_slice())
                .zip(v.as_mut_slice())
            {
                *mi = b1 * *mi + one_b1 * g;
                *vi = b2 * *vi + one_b2 * g * g;
                let denom = (*vi * inv_bc2).sqrt() + eps;
                *w = *w - step_size * *mi / denom;
            }
        });
        assert_eq!(idx, self.moments.len(), "parameter set changed between steps");
    }
}
