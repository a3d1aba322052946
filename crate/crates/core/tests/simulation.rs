use proptest::prelude::*;

use trajgraph::sim::{add_noise, simulate, simulate_segmented, Model};

fn model() -> impl Strategy<Value = Model> {
    prop::sample::select(vec![Model::Attm, Model::Ctrw, Model::Fbm, Model::Lw, Model::Sbm, Model::Bm, Model::Ou])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn trajectories_are_finite_and_reproducible(m in model(), u in 0.0f64..1.0, n in 2usize..400, dim in 1usize..=3, seed in any::<u64>()) {
        let (lo, hi) = m.alpha_range();
        let alpha = lo + u * (hi - lo);
        let a = simulate(m, alpha, n, dim, 1.0, seed).unwrap();
        prop_assert_eq!(a.len(), n);
        prop_assert_eq!(a.dim(), dim);
        prop_assert!(a.positions().iter().all(|x| x.is_finite()));
        let b = simulate(m, alpha, n, dim, 1.0, seed).unwrap();
        prop_assert_eq!(a.positions(), b.positions());
    }

    #[test]
    fn out_of_range_exponents_are_rejected(m in model(), excess in 0.01f64..1.0) {
        prop_assume!(m != Model::Ou);
        let (lo, hi) = m.alpha_range();
        prop_assert!(simulate(m, hi + excess, 50, 2, 1.0, 0).is_err());
        prop_assert!(simulate(m, lo - excess, 50, 2, 1.0, 0).is_err());
    }

    #[test]
    fn noise_keeps_labels_and_length(m in model(), amp in 0.0f64..1.0, seed in any::<u64>()) {
        let alpha = m.alpha_range().0;
        let clean = simulate(m, alpha, 64, 2, 1.0, seed).unwrap();
        let noisy = add_noise(&clean, amp, seed).unwrap();
        prop_assert_eq!(noisy.len(), clean.len());
        prop_assert_eq!(noisy.model, clean.model);
        prop_assert_eq!(noisy.noise_amplitude, amp);
        prop_assert!(noisy.positions().iter().all(|x| x.is_finite()));
    }

    #[test]
    fn segmented_walks_are_continuous_in_length(fraction in 0.0f64..=1.0, seed in any::<u64>()) {
        let t = simulate_segmented(Model::Fbm, Model::Attm, 0.6, 200, 2, fraction, seed).unwrap();
        prop_assert_eq!(t.len(), 200);
        prop_assert_eq!(t.segment.unwrap().fraction_first, fraction);
        prop_assert!(t.positions().iter().all(|x| x.is_finite()));
    }
}
