//! Trains the small preset on freshly simulated trajectories and saves
//! checkpoints into a directory.
//!
//! ```text
//! cargo run --release --example train_small [budget] [out_dir]
//! ```

use trajgraph::gnn::GnnConfig;
use trajgraph::train::{train, SamplingConfig, TrainConfig, Workers};

fn main() -> trajgraph::Result<()> {
    let mut args = std::env::args().skip(1);
    let budget: u64 = args.next().map_or(20_000, |s| s.parse().expect("budget is an integer"));
    let out = args.next().unwrap_or_else(|| "small_run".into());
    std::fs::create_dir_all(&out)?;

    let cfg = TrainConfig {
        sampling: SamplingConfig { n_max: 300, ..SamplingConfig::default() },
        batch_size: 64,
        budget,
        seed: 1,
        val_every: budget / 4,
        val_size: 1000,
        ..TrainConfig::default()
    };
    let model = GnnConfig::preset("small")?;
    let workers = Workers::new(std::thread::available_parallelism().map_or(1, |n| n.get()));
    let outcome = train(&cfg, &model, Some(out.as_ref()), &workers, |row| {
        if let (Some(mae), Some(f1)) = (row.val_mae, row.val_f1) {
            println!("{:>8} trajectories  loss {:.4}  val MAE {mae:.3}  val F1 {f1:.3}", row.trajs_seen, row.loss);
        }
    })?;
    println!("best validation loss {:?}; checkpoints in {out}/", outcome.best_val_loss);
    Ok(())
}
