//! Projects trajectories into the latent space of a trained network and
//! reports centroid distances between models, including Brownian motion,
//! which the network never saw during training.
//!
//! ```text
//! cargo run --release --example latent_probe -- small_run/model.tgck
//! ```

use trajgraph::gnn::Gnn;
use trajgraph::sim::{simulate, Model};
use trajgraph::train::latent::distance;
use trajgraph::train::{centroid, export_latent};

fn main() -> trajgraph::Result<()> {
    let path = std::env::args().nth(1).unwrap_or_else(|| "small_run/model.tgck".into());
    let net: Gnn<f32> = Gnn::load(&path)?;
    let dim = net.config().dim;

    let mut centroids = Vec::new();
    for (model, alpha) in [(Model::Bm, 1.0), (Model::Fbm, 1.0), (Model::Sbm, 1.0), (Model::Attm, 0.5), (Model::Ctrw, 0.5), (Model::Lw, 1.5)] {
        let trajs = (0..200)
            .map(|s| simulate(model, alpha, 300, dim, 1.0, 10_000 + s))
            .collect::<trajgraph::Result<Vec<_>>>()?;
        let e = export_latent(&net, &trajs, 10.0)?;
        let rows: Vec<&[f64]> = (0..e.latents.rows()).map(|i| e.latents.row(i)).collect();
        centroids.push((model.name(), centroid(rows)));
    }
    let names: Vec<String> = centroids.iter().map(|(n, _)| format!("{n:>6}")).collect();
    println!("       {}", names.join(""));
    for (a, ca) in &centroids {
        let row: Vec<String> = centroids.iter().map(|(_, cb)| format!("{:>6.2}", distance(ca, cb))).collect();
        println!("{a:<6} {}", row.join(""));
    }
    Ok(())
}
