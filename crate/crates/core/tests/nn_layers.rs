use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use trajgraph::gnn::{Aggregator, ConvLayer};
use trajgraph::graph::{build_causal_geometric, build_random_regular, Adjacency};
use trajgraph::nn::{grad_check, Adam, BatchNorm, BnMode, Linear, Matrix, Mlp, Module, Param, ScalarAffine};

fn random(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Matrix<f64> {
    Matrix::from_vec(rows, cols, (0..rows * cols).map(|_| rng.random_range(-1.5..1.5)).collect())
}

fn dot(a: &Matrix<f64>, b: &Matrix<f64>) -> f64 {
    a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| x * y).sum()
}

/// Checks parameter and input gradients of `loss = Σ c ⊙ y` for a layer.
/// `run` evaluates the layer and, given `dy`, back-propagates it and
/// returns `dx`.
fn check_layer<M: Module<f64> + Clone>(
    layer: &M,
    x: &Matrix<f64>,
    run: impl Fn(&mut M, &Matrix<f64>, Option<&Matrix<f64>>) -> (Matrix<f64>, Option<Matrix<f64>>),
) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut m = layer.clone();
    let (y, _) = run(&mut m.clone(), x, None);
    let c = random(y.rows(), y.cols(), &mut rng);

    m.zero_grad();
    let (_, dx) = run(&mut m, x, Some(&c));
    let mut analytic = m.flat_grads();
    let np = analytic.len();
    analytic.extend_from_slice(dx.expect("input gradient").as_slice());

    let mut point = layer.flat_params();
    point.extend_from_slice(x.as_slice());
    let f = |v: &[f64]| {
        let mut probe = layer.clone();
        probe.set_flat_params(&v[..np]);
        let xv = Matrix::from_vec(x.rows(), x.cols(), v[np..].to_vec());
        dot(&run(&mut probe, &xv, None).0, &c)
    };
    grad_check(f, &point, &analytic, 1e-5).max_rel_error
}

#[test]
fn identity_layer_passes_input_through() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let x = random(7, 4, &mut rng);
    let mlp = Mlp::<f64>::identity(4);
    assert_eq!(mlp.forward_eval(&x).unwrap(), x);
}

#[test]
fn relu_of_negative_input_is_zero() {
    // Hidden layer is the identity, so its ReLU sees −x directly.
    let mut w = Matrix::zeros(3, 3);
    for i in 0..3 {
        w.set(i, i, 1.0);
    }
    let hidden = Linear { weight: Param::new(w.clone()), bias: Param::new(Matrix::zeros(1, 3)) };
    let out = Linear { weight: Param::new(w), bias: Param::new(Matrix::zeros(1, 3)) };
    let mlp = Mlp::from_linears(vec![hidden, out], BnMode::None).unwrap();
    let x = Matrix::from_vec(2, 3, vec![-1.0, -0.5, -3.0, -0.1, -2.0, -7.5]);
    assert!(mlp.forward_eval(&x).unwrap().as_slice().iter().all(|&v| v == 0.0));
}

#[test]
fn batch_norm_standardises_each_feature() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut x = random(256, 5, &mut rng);
    for i in 0..256 {
        for j in 0..5 {
            x.set(i, j, 3.0 * j as f64 + (j + 1) as f64 * x.get(i, j));
        }
    }
    let mut bn = BatchNorm::<f64>::new(5);
    let (y, _) = bn.forward_train(&x);
    for j in 0..5 {
        let col: Vec<f64> = (0..256).map(|i| y.get(i, j)).collect();
        let mean = col.iter().sum::<f64>() / 256.0;
        let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 256.0;
        assert!(mean.abs() < 1e-6, "mean {mean}");
        // Population variance of x̂ is var/(var + eps) with eps = 1e-5.
        assert!((var - 1.0).abs() < 1e-4, "var {var}");
    }
}

#[test]
fn batch_norm_eval_is_pure() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut bn = BatchNorm::<f64>::new(4);
    bn.forward_train(&random(32, 4, &mut rng));
    let snapshot = bn.clone();
    let x = random(10, 4, &mut rng);
    let a = bn.forward_eval(&x);
    let b = bn.forward_eval(&x);
    assert_eq!(a, b);
    assert_eq!(bn, snapshot);
}

#[test]
fn half_squared_norm_gradient() {
    // loss = ½‖x·W‖² ⇒ ∂loss/∂W = xᵀ(x·W) for a row vector x.
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut layer = Linear::<f64>::new(4, 3, &mut rng);
    let x = random(1, 4, &mut rng);
    let y = layer.forward(&x);
    layer.backward(&x, &y, false);
    for i in 0..4 {
        for j in 0..3 {
            let expected = x.get(0, i) * y.get(0, j);
            assert!((layer.weight.grad.get(i, j) - expected).abs() < 1e-14);
        }
    }
}

#[test]
fn three_layer_mlp_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mlp = Mlp::<f64>::new(&[6, 12, 9, 4], BnMode::None, &mut rng).unwrap();
    let x = random(8, 6, &mut rng);
    let err = check_layer(&mlp, &x, |m, x, dy| {
        let cache = m.forward_train(x).unwrap();
        let y = cache.output().clone();
        (y, dy.map(|d| m.backward(&cache, d, true).unwrap()))
    });
    assert!(err < 1e-6, "relative error {err:e}");
}

#[test]
fn every_layer_type_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let x = random(12, 5, &mut rng);

    let linear = Linear::<f64>::new(5, 3, &mut rng);
    let err = check_layer(&linear, &x, |m, x, dy| {
        let y = m.forward(x);
        (y, dy.map(|d| m.backward(x, d, true).unwrap()))
    });
    assert!(err < 1e-6, "linear {err:e}");

    let mut bn = BatchNorm::<f64>::new(5);
    bn.gamma.value = random(1, 5, &mut rng);
    bn.beta.value = random(1, 5, &mut rng);
    let err = check_layer(&bn, &x, |m, x, dy| {
        let (y, cache) = m.forward_train(x);
        (y, dy.map(|d| m.backward(&cache, d)))
    });
    assert!(err < 1e-6, "batch norm {err:e}");

    for mode in [BnMode::Hidden, BnMode::All] {
        let mlp = Mlp::<f64>::new(&[5, 7, 3], mode, &mut rng).unwrap();
        let err = check_layer(&mlp, &x, |m, x, dy| {
            let cache = m.forward_train(x).unwrap();
            let y = cache.output().clone();
            (y, dy.map(|d| m.backward(&cache, d, true).unwrap()))
        });
        assert!(err < 1e-6, "mlp {mode:?} {err:e}");
    }

    let col = random(12, 1, &mut rng);
    let affine = ScalarAffine::<f64>::new(0.7, -0.2);
    let err = check_layer(&affine, &col, |m, x, dy| {
        let y = m.forward(x);
        (y, dy.map(|d| m.backward(x, d)))
    });
    assert!(err < 1e-6, "scalar affine {err:e}");
}

#[test]
fn convolution_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let causal = Adjacency::from_edges(&build_causal_geometric(12, 4).unwrap());
    let random_graph = Adjacency::from_edges(&build_random_regular(12, 3, 8).unwrap());
    let layouts = [
        (vec![Aggregator::Mean { power: 1 }, Aggregator::Mean { power: 2 }], true, true),
        (vec![Aggregator::Max], true, true),
        (vec![Aggregator::Mean { power: 1 }, Aggregator::Max], false, false),
    ];
    for adj in [&causal, &random_graph] {
        for (aggs, include_self, bn) in &layouts {
            let blocks = usize::from(*include_self) + aggs.len();
            let mlp = Mlp::<f64>::new(&[blocks * 4, 6, 3], BnMode::All, &mut rng).unwrap();
            let conv = ConvLayer::new(4, *include_self, aggs.clone(), *bn, *bn, mlp).unwrap();
            let x = random(12, 4, &mut rng);
            let err = check_layer(&conv, &x, |m, x, dy| {
                let cache = m.forward_train(x, adj).unwrap();
                let y = cache.output().clone();
                (y, dy.map(|d| m.backward(&cache, adj, d)))
            });
            assert!(err < 1e-6, "{aggs:?} self={include_self} bn={bn}: {err:e}");
        }
    }
}

#[test]
fn parameter_count_follows_layer_widths() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let widths = [10, 32, 16, 1];
    let plain = Mlp::<f32>::new(&widths, BnMode::None, &mut rng).unwrap();
    let hidden = Mlp::<f32>::new(&widths, BnMode::Hidden, &mut rng).unwrap();
    let linear: usize = widths.windows(2).map(|w| w[0] * w[1] + w[1]).sum();
    assert_eq!(plain.param_count(), linear);
    assert_eq!(hidden.param_count(), linear + 2 * (32 + 16));
}

#[test]
fn adam_with_zero_rate_keeps_parameters() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut mlp = Mlp::<f64>::new(&[3, 4, 2], BnMode::Hidden, &mut rng).unwrap();
    let x = random(6, 3, &mut rng);
    let cache = mlp.forward_train(&x).unwrap();
    let dy = cache.output().clone();
    mlp.backward(&cache, &dy, false);
    let before = mlp.flat_params();
    let mut adam = Adam::new();
    adam.step(&mut mlp, 0.0);
    assert_eq!(mlp.flat_params(), before);
}

#[test]
fn forward_output_is_finite() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mlp = Mlp::<f32>::new(&[28, 64, 64, 5], BnMode::All, &mut rng).unwrap();
    let x = random(50, 28, &mut rng).map(|v| v as f32 * 1e3);
    assert!(mlp.forward_eval(&x).unwrap().is_finite());
}
