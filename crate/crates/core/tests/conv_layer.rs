use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use trajgraph::gnn::{Aggregator, ConvLayer};
use trajgraph::graph::{build_causal_geometric, Adjacency, EdgeList};
use trajgraph::nn::{BnMode, Linear, Matrix, Mlp, Param};

fn mean_max() -> Vec<Aggregator> {
    vec![Aggregator::Mean { power: 1 }, Aggregator::Max]
}

/// Plain self ⊕ mean ⊕ max convolution whose γ is one linear map.
fn conv_with(weight: Matrix<f64>) -> ConvLayer<f64> {
    let out = weight.cols();
    let linear = Linear { weight: Param::new(weight), bias: Param::new(Matrix::zeros(1, out)) };
    let x_dim = linear.input_dim() / 3;
    ConvLayer::new(x_dim, true, mean_max(), false, false, Mlp::from_linears(vec![linear], BnMode::None).unwrap()).unwrap()
}

#[test]
fn two_node_sum() {
    // γ sums self, mean and max: x′₂ = 0 + 1 + 1.
    let conv = conv_with(Matrix::from_vec(3, 1, vec![1.0; 3]));
    let adj = Adjacency::from_edges(&EdgeList::new(2, vec![(0, 1)]).unwrap());
    let x = Matrix::from_vec(2, 1, vec![1.0, 0.0]);
    let y = conv.forward_eval(&x, &adj).unwrap();
    assert_eq!(y.as_slice(), &[1.0, 2.0]);
}

#[test]
fn edgeless_graph_with_self_identity_is_identity() {
    let c = 4;
    let mut w = Matrix::zeros(3 * c, c);
    for i in 0..c {
        w.set(i, i, 1.0);
    }
    let conv = conv_with(w);
    let adj = Adjacency::from_edges(&EdgeList::new(6, Vec::new()).unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let x = Matrix::from_vec(6, c, (0..6 * c).map(|_| rng.random_range(-2.0..2.0)).collect());
    assert_eq!(conv.forward_eval(&x, &adj).unwrap(), x);
}

#[test]
fn edge_storage_order_is_irrelevant() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mlp = Mlp::<f64>::new(&[15, 8, 4], BnMode::Hidden, &mut rng).unwrap();
    let conv = ConvLayer::new(5, true, mean_max(), true, true, mlp).unwrap();
    let edges = build_causal_geometric(40, 6).unwrap();
    let x = Matrix::from_vec(40, 5, (0..200).map(|_| rng.random_range(-1.0..1.0)).collect());
    let reference = conv.forward_eval(&x, &Adjacency::from_edges(&edges)).unwrap();
    for shift in [1, 7, 33] {
        let mut order = edges.edges().to_vec();
        order.reverse();
        order.rotate_left(shift);
        let adj = Adjacency::from_edges(&EdgeList::new(40, order).unwrap());
        let y = conv.forward_eval(&x, &adj).unwrap();
        let same = y.as_slice().iter().zip(reference.as_slice()).all(|(a, b)| a.to_bits() == b.to_bits());
        assert!(same, "shift {shift}");
    }
}

#[test]
fn shape_errors_are_reported() {
    let conv = conv_with(Matrix::from_vec(3, 1, vec![1.0; 3]));
    let adj = Adjacency::from_edges(&EdgeList::new(3, vec![(0, 1)]).unwrap());
    assert!(conv.forward_eval(&Matrix::zeros(2, 1), &adj).is_err());
    assert!(conv.forward_eval(&Matrix::zeros(3, 2), &adj).is_err());
    let bad = Mlp::<f64>::identity(4);
    assert!(ConvLayer::new(2, true, mean_max(), false, false, bad).is_err());
}

#[test]
fn evaluation_matches_training_pass_without_batch_norm() {
    // Without batch norm both passes compute the same function; the
    // evaluation pass works in row blocks, so use more rows than one block.
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let n = 700;
    let aggs = vec![Aggregator::Mean { power: 1 }, Aggregator::Mean { power: 2 }, Aggregator::Max];
    let mlp = Mlp::<f64>::new(&[4 * 5, 16, 7], BnMode::None, &mut rng).unwrap();
    let mut conv = ConvLayer::new(5, true, aggs, false, false, mlp).unwrap();
    let adj = Adjacency::from_edges(&build_causal_geometric(n, 20).unwrap());
    let x = Matrix::from_vec(n, 5, (0..n * 5).map(|_| rng.random_range(-2.0..2.0)).collect());
    let eval = conv.forward_eval(&x, &adj).unwrap();
    let train = conv.forward_train(&x, &adj).unwrap();
    for (a, b) in eval.as_slice().iter().zip(train.output().as_slice()) {
        assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()), "{a} vs {b}");
    }
}
