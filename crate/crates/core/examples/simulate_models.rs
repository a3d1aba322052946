//! Simulates every diffusion model, checks the ensemble MSD exponent and
//! writes a few noisy trajectories to a text file.
//!
//! ```text
//! cargo run --release --example simulate_models [out.txt]
//! ```

use trajgraph::io::save_trajectories;
use trajgraph::sim::{add_noise, ensemble_msd, fit_alpha_loglog, simulate, Model};

fn main() -> trajgraph::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "trajectories.txt".into());
    println!("{:<6} {:>6} {:>8}", "model", "alpha", "msd fit");
    for model in Model::CLASSES.into_iter().chain([Model::Bm]) {
        let alpha = match model {
            Model::Lw => 1.5,
            Model::Bm => 1.0,
            _ => 0.5,
        };
        let trajs = (0..500)
            .map(|seed| simulate(model, alpha, 500, 1, 1.0, seed))
            .collect::<trajgraph::Result<Vec<_>>>()?;
        let (lags, msd) = ensemble_msd(&trajs)?;
        let fit = fit_alpha_loglog(&lags, &msd)?;
        println!("{:<6} {alpha:>6.2} {fit:>8.3}", model.name());
    }

    // Localisation noise relative to the typical jump size.
    let clean: Vec<_> = (0..4).map(|s| simulate(Model::Fbm, 0.7, 200, 2, 1.0, s)).collect::<Result<_, _>>()?;
    let noisy = clean
        .iter()
        .enumerate()
        .map(|(i, t)| add_noise(t, 0.5, 1000 + i as u64))
        .collect::<trajgraph::Result<Vec<_>>>()?;
    save_trajectories(&out, &noisy)?;
    println!("wrote {} noisy fBM trajectories to {out}", noisy.len());
    Ok(())
}
