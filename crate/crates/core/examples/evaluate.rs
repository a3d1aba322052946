//! Evaluates a checkpoint on a balanced simulated test set and prints the
//! summary, the confusion matrix and accuracy by trajectory length.
//!
//! ```text
//! cargo run --release --example evaluate -- small_run/model.tgck [count]
//! ```

use trajgraph::gnn::Gnn;
use trajgraph::sim::Model;
use trajgraph::train::{evaluate, EvalConfig, SamplingConfig, Workers};

fn main() -> trajgraph::Result<()> {
    let mut args = std::env::args().skip(1);
    let path = args.next().unwrap_or_else(|| "small_run/model.tgck".into());
    let count = args.next().map_or(2000, |s| s.parse().expect("count is an integer"));
    let net: Gnn<f32> = Gnn::load(&path)?;

    let sampling = SamplingConfig { dim: net.config().dim, n_max: 300, ..SamplingConfig::default() };
    let cfg = EvalConfig { sampling, count, seed: 5, ..EvalConfig::default() };
    let report = evaluate(&net, &cfg, &Workers::new(1))?;
    print!("{}", report.summary());

    println!("\nconfusion (rows predicted, columns true)");
    for (p, row) in report.confusion.iter().enumerate() {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:.2}")).collect();
        println!("{:<5} {}", Model::CLASSES[p].name(), cells.join(" "));
    }
    println!("\nby length");
    for b in &report.by_length {
        println!("N in [{:>4}, {:>4}): n={:<5} F1 {:.3}  MAE {:.3}", b.lo, b.hi, b.metrics.count, b.metrics.f1, b.metrics.mae);
    }
    Ok(())
}
