//! Writes unlabelled trajectories in the text format (empty label fields in
//! the header line), reads them back and predicts model and exponent.
//!
//! Without a checkpoint argument an untrained tiny network is used, which
//! only demonstrates the plumbing.
//!
//! ```text
//! cargo run --release --example infer_file [model.tgck]
//! ```

use trajgraph::gnn::{Gnn, GnnConfig, TrajGraph};
use std::fmt::Write;

use trajgraph::io::read_trajectories;
use trajgraph::sim::{simulate, Model};

fn main() -> trajgraph::Result<()> {
    let net: Gnn<f32> = match std::env::args().nth(1) {
        Some(path) => Gnn::load(path)?,
        None => Gnn::new(GnnConfig::preset("tiny")?, 0)?,
    };
    let cfg = net.config().clone();

    let sources = [(Model::Ctrw, 0.4), (Model::Lw, 1.7), (Model::Fbm, 1.0)];
    let mut text = String::new();
    for (i, (model, alpha)) in sources.iter().enumerate() {
        let t = simulate(*model, *alpha, 150 + 100 * i, cfg.dim, 1.0, i as u64)?;
        // header: model,alpha,noise,N,dim,seed
        writeln!(text, ",,,{},{},", t.len(), t.dim()).unwrap();
        for p in 0..t.len() {
            let row: Vec<String> = t.point(p).iter().map(|x| x.to_string()).collect();
            writeln!(text, "{}", row.join(",")).unwrap();
        }
    }
    let records = read_trajectories(text.as_bytes())?;

    for ((header, traj), (truth, alpha)) in records.iter().zip(sources) {
        let graph = TrajGraph::from_trajectory(traj, cfg.wiring, cfg.k, Some(10.0))?;
        let p = net.predict(&graph)?;
        println!(
            "N={:<4} labelled={} true {}({alpha})  predicted {} alpha {:.2}  p={:.2?}",
            header.n,
            header.is_labelled(),
            truth.name(),
            p.predicted_model().name(),
            p.alpha_clamped(),
            p.class_probs
        );
    }
    Ok(())
}
