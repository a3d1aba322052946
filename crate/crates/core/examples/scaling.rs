//! Times graph construction plus a forward pass of the large preset for
//! growing trajectory lengths.
//!
//! ```text
//! cargo run --release --example scaling
//! ```

use std::time::Instant;

use trajgraph::gnn::{Gnn, GnnConfig, TrajGraph};
use trajgraph::sim::{simulate, Model};

fn main() -> trajgraph::Result<()> {
    let net = Gnn::<f32>::new(GnnConfig::preset("large")?, 0)?;
    let cfg = net.config().clone();
    let mut previous: Option<f64> = None;
    for n in [100usize, 1_000, 10_000, 100_000] {
        let traj = simulate(Model::Fbm, 1.0, n, 3, 1.0, n as u64)?;
        let runs = (200_000 / n).clamp(3, 50);
        let mut times = Vec::with_capacity(runs);
        for _ in 0..runs {
            let start = Instant::now();
            let graph = TrajGraph::from_trajectory(&traj, cfg.wiring, cfg.k, Some(10.0))?;
            std::hint::black_box(net.predict(&graph)?);
            times.push(start.elapsed().as_secs_f64());
        }
        times.sort_by(f64::total_cmp);
        let median = times[runs / 2];
        let ratio = previous.map(|p| format!("x{:.1}", median / p)).unwrap_or_default();
        println!("N={n:<7} median {:>9.2} ms {ratio}", median * 1e3);
        previous = Some(median);
    }
    Ok(())
}
