//! Builds the node features and both wiring schemes for one trajectory.
//!
//! ```text
//! cargo run --release --example graph_features
//! ```

use trajgraph::features::{clip_steps, feature_count, node_features};
use trajgraph::graph::{build_causal_geometric, build_random_regular, DEFAULT_K};
use trajgraph::sim::{simulate, Model};

fn main() -> trajgraph::Result<()> {
    let traj = simulate(Model::Lw, 1.6, 300, 3, 1.0, 7)?;
    let clipped = clip_steps(&traj, 10.0)?;
    let features = node_features(&clipped)?;
    println!("features: {} nodes x {} columns (expected {})", features.rows(), features.cols(), feature_count(3));
    println!("first row: {:.3?}", features.row(0));
    println!("last row:  {:.3?}", features.row(features.rows() - 1));

    let causal = build_causal_geometric(traj.len(), DEFAULT_K)?;
    let random = build_random_regular(traj.len(), DEFAULT_K, 7)?;
    for (name, edges) in [("causal", &causal), ("random", &random)] {
        let deg = edges.in_degrees();
        println!(
            "{name}: {} edges, in-degree {}..={}, longest hop into the last node {}",
            edges.len(),
            deg.iter().min().unwrap(),
            deg.iter().max().unwrap(),
            (0..traj.len() - 1).filter_map(|s| edges.shortest_path(s, traj.len() - 1)).max().unwrap_or(0)
        );
    }
    println!("sources of node 299 (causal): {:?}", causal.edges().iter().filter(|e| e.1 == 299).map(|e| e.0).collect::<Vec<_>>());
    Ok(())
}
