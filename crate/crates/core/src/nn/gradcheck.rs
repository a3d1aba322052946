//! Central finite-difference gradient oracle.

/// Outcome of comparing an analytic gradient with finite differences.
#[derive(Debug, Clone, PartialEq)]
pub struct GradCheck {
    /// max_i |g_i − ĝ_i|
    pub max_abs_diff: f64,
    /// max_i |g_i|
    pub grad_scale: f64,
    /// `max_abs_diff / (grad_scale + 1e-12)`
    pub max_rel_error: f64,
    /// Coordinate with the largest difference.
    pub worst: usize,
    pub finite_difference: Vec<f64>,
}

/// Central differences (f(x + h·eᵢ) − f(x − h·eᵢ)) / 2h for every coordinate.
pub fn finite_difference(mut f: impl FnMut(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            probe[i] = x[i] + h;
            let up = f(&probe);
            probe[i] = x[i] - h;
            let down = f(&probe);
            probe[i] = x[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Compares `analytic` against central differences of `f` at `x`. The error
/// is measured relative to the largest gradient component, so coordinates
/// whose exact gradient vanishes do not divide rounding noise by zero.
pub fn grad_check(f: impl FnMut(&[f64]) -> f64, x: &[f64], analytic: &[f64], h: f64) -> GradCheck {
    assert_eq!(x.len(), analytic.len(), "gradient length mismatch");
    let fd = finite_difference(f, x, h);
    let mut worst = 0;
    let mut max_abs_diff = 0.0f64;
    for (i, (a, n)) in analytic.iter().zip(&fd).enumerate() {
        let d = (a - n).abs();
        if d > max_abs_diff {
            max_abs_diff = d;
            worst = i;
        }
    }
    let grad_scale = analytic.iter().fold(0.0f64, |m, g| m.max(g.abs()));
    GradCheck {
        max_abs_diff,
        grad_scale,
        max_rel_error: max_abs_diff / (grad_scale + 1e-12),
        worst,
        finite_difference: fd,
    }
}
