//! Multi-task loss: mean squared error on α̂ plus cross-entropy on the
//! model class.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::gnn::BatchOutput;
use crate::nn::{Matrix, Real};

/// Smallest probability whose logarithm enters the cross-entropy.
pub const LOG_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskMode {
    RegressionOnly,
    ClassificationOnly,
    Joint,
}

impl TaskMode {
    pub fn regression(self) -> bool {
        self != TaskMode::ClassificationOnly
    }

    pub fn classification(self) -> bool {
        self != TaskMode::RegressionOnly
    }
}

impl std::str::FromStr for TaskMode {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "regression" | "regression_only" => Ok(TaskMode::RegressionOnly),
            "classification" | "classification_only" => Ok(TaskMode::ClassificationOnly),
            "joint" => Ok(TaskMode::Joint),
            other => domain(format!("unknown task mode '{other}'")),
        }
    }
}

/// Loss value, its parts and the gradients with respect to α̂ and logits.
#[derive(Debug, Clone)]
pub struct LossValue<T> {
    pub total: f64,
    pub mse: f64,
    pub cross_entropy: f64,
    /// Number of true-class probabilities that hit [`LOG_FLOOR`].
    pub clamped: usize,
    pub d_alpha: Option<Matrix<T>>,
    pub d_logits: Option<Matrix<T>>,
}

/// Scores a batch. `classes` holds the class index of each trajectory;
/// entries may be `None` (e.g. out-of-training models) only when the
/// classification term is off.
pub fn loss<T: Real>(out: &BatchOutput<T>, alphas: &[f64], classes: &[Option<usize>], mode: TaskMode) -> Result<LossValue<T>> {
    let b = alphas.len();
    if b == 0 || classes.len() != b || out.alpha.rows() != b {
        return domain("loss needs a nonempty batch with one label per prediction");
    }
    let inv_b = 1.0 / b as f64;
    let mut mse = 0.0;
    let mut d_alpha = Matrix::zeros(b, 1);
    for (g, &a) in alphas.iter().enumerate() {
        let e = out.alpha.get(g, 0).to_f64_lossy() - a;
        mse += e * e * inv_b;
        d_alpha.set(g, 0, T::from_f64_lossy(2.0 * e * inv_b));
    }
    let mut ce = 0.0;
    let mut clamped = 0;
    let k = out.probs.cols();
    let mut d_logits = Matrix::zeros(b, k);
    if mode.classification() {
        for (g, c) in classes.iter().enumerate() {
            let Some(c) = *c else {
                return domain("classification loss needs a class label for every trajectory");
            };
            let p = out.probs.get(g, c).to_f64_lossy();
            if p < LOG_FLOOR {
                clamped += 1;
            }
            ce -= p.max(LOG_FLOOR).ln() * inv_b;
            for j in 0..k {
                let y = if j == c { 1.0 } else { 0.0 };
                d_logits.set(g, j, T::from_f64_lossy((out.probs.get(g, j).to_f64_lossy() - y) * inv_b));
            }
        }
    }
    let total = if mode.regression() { mse } else { 0.0 } + if mode.classification() { ce } else { 0.0 };
    Ok(LossValue {
        total,
        mse,
        cross_entropy: ce,
        clamped,
        d_alpha: mode.regression().then_some(d_alpha),
        d_logits: mode.classification().then_some(d_logits),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn output(alpha: &[f64], probs: &[[f64; 5]]) -> BatchOutput<f64> {
        BatchOutput {
            alpha: Matrix::from_vec(alpha.len(), 1, alpha.to_vec()),
            probs: Matrix::from_vec(probs.len(), 5, probs.concat()),
            latent: Matrix::zeros(alpha.len(), 2),
        }
    }

    #[test]
    fn reference_values() {
        let one_hot = [[0.0, 1.0, 0.0, 0.0, 0.0], [0.0, 0.0, 0.0, 1.0, 0.0]];
        let classes = [Some(1), Some(3)];
        let perfect = loss(&output(&[0.5, 1.5], &one_hot), &[0.5, 1.5], &classes, TaskMode::Joint).unwrap();
        assert_eq!(perfect.total, 0.0);
        let uniform = [[0.2; 5], [0.2; 5]];
        let l = loss(&output(&[0.5, 1.5], &uniform), &[0.5, 1.5], &classes, TaskMode::Joint).unwrap();
        assert!((l.total - 5f64.ln()).abs() < 1e-12);
        let off = loss(&output(&[1.0, 1.0], &one_hot), &[0.5, 1.5], &classes, TaskMode::Joint).unwrap();
        assert!((off.total - 0.25).abs() < 1e-12);
    }

    #[test]
    fn modes_decompose() {
        let probs = [[0.1, 0.2, 0.3, 0.3, 0.1], [0.5, 0.1, 0.1, 0.1, 0.2]];
        let out = output(&[0.3, 1.1], &probs);
        let classes = [Some(2), Some(0)];
        let j = loss(&out, &[0.5, 1.5], &classes, TaskMode::Joint).unwrap();
        let r = loss(&out, &[0.5, 1.5], &classes, TaskMode::RegressionOnly).unwrap();
        let c = loss(&out, &[0.5, 1.5], &classes, TaskMode::ClassificationOnly).unwrap();
        assert!((j.total - r.total - c.total).abs() < 1e-15);
        assert!(r.d_logits.is_none() && c.d_alpha.is_none());
    }

    #[test]
    fn zero_probability_is_clamped() {
        let out = output(&[0.5], &[[1.0, 0.0, 0.0, 0.0, 0.0]]);
        let l = loss(&out, &[0.5], &[Some(2)], TaskMode::Joint).unwrap();
        assert_eq!(l.clamped, 1);
        assert!((l.total + LOG_FLOOR.ln()).abs() < 1e-9);
    }
}
