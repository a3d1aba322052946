//! Compares the analytic gradient of the joint loss with central finite
//! differences for the tiny preset in double precision.
//!
//! ```text
//! cargo run --release --example gradient_check
//! ```

use trajgraph::gnn::{Gnn, GnnConfig, GraphBatch, TrajGraph};
use trajgraph::graph::Wiring;
use trajgraph::nn::{grad_check, Module};
use trajgraph::sim::{simulate, Model};
use trajgraph::train::{loss, TaskMode};

fn main() -> trajgraph::Result<()> {
    let graphs = [Model::Attm, Model::Fbm, Model::Sbm]
        .iter()
        .enumerate()
        .map(|(i, &m)| TrajGraph::from_trajectory(&simulate(m, 0.8, 12, 3, 1.0, i as u64)?, Wiring::CausalGeometric, 20, Some(10.0)))
        .collect::<trajgraph::Result<Vec<_>>>()?;
    let batch = GraphBatch::<f64>::new(&graphs)?;
    let alphas = [0.4, 0.9, 1.3];
    let classes = [Some(0), Some(2), Some(4)];

    let mut net = Gnn::<f64>::new(GnnConfig::preset("tiny")?, 3)?;
    net.zero_grad();
    let (out, cache) = net.forward_train(&batch)?;
    let value = loss(&out, &alphas, &classes, TaskMode::Joint)?;
    net.backward(&cache, &batch, value.d_alpha.as_ref(), value.d_logits.as_ref());
    println!("loss {:.6} over {} parameters", value.total, net.param_count());

    let mut probe = net.clone();
    let check = grad_check(
        |p| {
            probe.set_flat_params(p);
            let (out, _) = probe.forward_train(&batch).expect("forward");
            loss(&out, &alphas, &classes, TaskMode::Joint).expect("loss").total
        },
        &net.flat_params(),
        &net.flat_grads(),
        1e-6,
    );
    println!("max |analytic - numeric| = {:.3e}", check.max_abs_diff);
    println!("relative error           = {:.3e}", check.max_rel_error);
    Ok(())
}
