//! Ensemble mean squared displacement and log-log exponent fits.

use super::Trajectory;
use crate::error::{domain, Result};

/// MSD measured from the first point: msd(τ) = ⟨|r(t₀+τ) − r(t₀)|²⟩ / d,
/// averaged over trajectories and dimensions, for τ = 1..N−1 where N is the
/// shortest trajectory length.
pub fn ensemble_msd(trajectories: &[Trajectory]) -> Result<(Vec<usize>, Vec<f64>)> {
    let Some(first) = trajectories.first() else {
        return domain("ensemble is empty");
    };
    let dt = first.dt;
    if trajectories.iter().any(|t| t.dt != dt) {
        return domain("trajectories must share a common dt");
    }
    let n = trajectories.iter().map(Trajectory::len).min().unwrap_or(0);
    let mut msd = vec![0.0; n - 1];
    for t in trajectories {
        let d = t.dim();
        let origin = t.point(0);
        for (lag, acc) in msd.iter_mut().enumerate() {
            let p = t.point(lag + 1);
            let sq: f64 = p.iter().zip(origin).map(|(a, b)| (a - b).powi(2)).sum();
            *acc += sq / d as f64;
        }
    }
    let count = trajectories.len() as f64;
    msd.iter_mut().for_each(|m| *m /= count);
    Ok(((1..n).collect(), msd))
}

/// Least-squares slope of log msd against log lag over lags [1, N/10].
pub fn fit_alpha_loglog(lags: &[usize], msd: &[f64]) -> Result<f64> {
    let n = lags.last().copied().unwrap_or(0) + 1;
    fit_alpha_loglog_range(lags, msd, 1, (n / 10).max(2))
}

/// Least-squares slope of log msd against log lag over lags [lo, hi].
pub fn fit_alpha_loglog_range(lags: &[usize], msd: &[f64], lo: usize, hi: usize) -> Result<f64> {
    if lags.len() != msd.len() {
        return domain("lags and msd differ in length");
    }
    let pts: Vec<(f64, f64)> = lags
        .iter()
        .zip(msd)
        .filter(|(&l, _)| l >= lo && l <= hi)
        .map(|(&l, &m)| (l as f64, m))
        .collect();
    if pts.len() < 2 {
        return domain("fewer than two lags in the fit window");
    }
    if let Some((_, m)) = pts.iter().find(|(_, m)| !(*m > 0.0)) {
        return domain(format!("cannot take the log of msd value {m}"));
    }
    let xs: Vec<f64> = pts.iter().map(|(l, _)| l.ln()).collect();
    let ys: Vec<f64> = pts.iter().map(|(_, m)| m.ln()).collect();
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    Ok(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{simulate, Model};

    fn ensemble(model: Model, alpha: f64, count: u64, n: usize, dim: usize) -> Vec<Trajectory> {
        (0..count)
            .map(|s| simulate(model, alpha, n, dim, 1.0, s).unwrap())
            .collect()
    }

    #[test]
    fn brownian_slope_is_one() {
        let (lags, msd) = ensemble_msd(&ensemble(Model::Bm, 1.0, 10_000, 100, 3)).unwrap();
        let a = fit_alpha_loglog(&lags, &msd).unwrap();
        assert!((a - 1.0).abs() < 0.05, "{a}");
    }

    #[test]
    fn fbm_superdiffusive_slope() {
        let (lags, msd) = ensemble_msd(&ensemble(Model::Fbm, 1.5, 10_000, 100, 1)).unwrap();
        let a = fit_alpha_loglog(&lags, &msd).unwrap();
        assert!((a - 1.5).abs() < 0.1, "{a}");
    }

    #[test]
    fn sbm_subdiffusive_slope() {
        let (lags, msd) = ensemble_msd(&ensemble(Model::Sbm, 0.5, 2_000, 1000, 1)).unwrap();
        let a = fit_alpha_loglog(&lags, &msd).unwrap();
        assert!((a - 0.5).abs() < 0.1, "{a}");
    }

    #[test]
    fn ou_plateaus() {
        let (lags, msd) = ensemble_msd(&ensemble(Model::Ou, 1.0, 2_000, 1000, 1)).unwrap();
        let a = fit_alpha_loglog_range(&lags, &msd, 100, 500).unwrap();
        assert!(a < 0.2, "{a}");
    }

    #[test]
    fn constant_trajectory_has_zero_msd() {
        let t = Trajectory::from_positions(vec![2.0; 50], 1, 1.0).unwrap();
        let (lags, msd) = ensemble_msd(&[t]).unwrap();
        assert!(msd.iter().all(|&m| m == 0.0));
        assert!(fit_alpha_loglog(&lags, &msd).is_err());
        assert!(ensemble_msd(&[]).is_err());
    }
}
