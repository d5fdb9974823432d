use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use ridge_tucker::als::{update_core_exact, update_factor, tucker_loss, TuckerModel};
use ridge_tucker::kronecker::ImplicitKronecker;
use ridge_tucker::leverage::{leverage_scores, ridge_scores};
use ridge_tucker::linalg::DenseMatrix;
use ridge_tucker::missing::{exact_scores_after_removal, RowRemovalContext};
use ridge_tucker::sampler::build_augmented;
use ridge_tucker::tensor::DenseTensor;

fn matrix(max_rows: usize, max_cols: usize) -> impl Strategy<Value = DenseMatrix> {
    (1..=max_rows, 1..=max_cols).prop_flat_map(|(r, c)| {
        prop::collection::vec(-2.0f64..2.0, r * c).prop_map(move |v| DenseMatrix::new(r, c, v).unwrap())
    })
}

fn tensor(max_order: usize, max_dim: usize) -> impl Strategy<Value = DenseTensor> {
    prop::collection::vec(1..=max_dim, 1..=max_order).prop_flat_map(|shape| {
        let n: usize = shape.iter().product();
        prop::collection::vec(-1.0f64..1.0, n).prop_map(move |v| DenseTensor::new(shape.clone(), v).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ridge_scores_bounded_by_one_and_rank(a in matrix(20, 5), lambda in 0.0f64..3.0) {
        let s = ridge_scores(&a, lambda).unwrap();
        let rank = leverage_scores(&a).unwrap().l1_norm();
        for &v in &s.scores {
            prop_assert!((-1e-12..=1.0 + 1e-12).contains(&v));
        }
        prop_assert!(s.l1_norm() <= rank + 1e-9);
    }

    #[test]
    fn ridge_scores_shrink_as_lambda_grows(a in matrix(15, 4), l1 in 0.0f64..1.0, extra in 0.01f64..2.0) {
        let lo = ridge_scores(&a, l1).unwrap();
        let hi = ridge_scores(&a, l1 + extra).unwrap();
        for (x, y) in lo.scores.iter().zip(&hi.scores) {
            prop_assert!(y <= &(x + 1e-12));
        }
    }

    #[test]
    fn augmented_distribution_is_a_distribution(
        w in prop::collection::vec(0.0f64..5.0, 1..30),
        d in 1usize..6,
        frac in 0.0f64..=1.0,
    ) {
        prop_assume!(w.iter().any(|&x| x > 0.0));
        let s = build_augmented(&w, w.len(), d, frac * d as f64).unwrap();
        let total: f64 = (0..w.len() + d).map(|j| s.probability(j)).sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
        prop_assert!((0..w.len() + d).all(|j| s.probability(j) >= 0.0));
    }

    #[test]
    fn unfold_fold_round_trip(t in tensor(4, 4), mode_seed in 0usize..8) {
        let mode = mode_seed % t.order();
        let m = t.unfold(mode).unwrap();
        prop_assert_eq!(DenseTensor::fold(&m, mode, t.shape()).unwrap(), t);
    }

    #[test]
    fn tensor_bytes_round_trip(t in tensor(4, 4)) {
        prop_assert_eq!(DenseTensor::from_bytes(&t.to_bytes()).unwrap(), t);
    }

    #[test]
    fn kronecker_scores_sum_to_product_rank(seed in 0u64..1000, dims in prop::collection::vec((2usize..6, 1usize..3), 2..4)) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let factors: Vec<DenseMatrix> = dims
            .iter()
            .map(|&(i, r)| DenseMatrix::from_fn(i, r.min(i), |_, _| rand::Rng::random_range(&mut rng, -1.0..1.0)).unwrap())
            .collect();
        let rank: usize = factors.iter().map(|f| leverage_scores(f).unwrap().l1_norm().round() as usize).product();
        let k = ImplicitKronecker::new(factors).unwrap();
        let total: f64 = (0..k.nrows()).map(|i| k.factored_leverage_score(&k.split_index(i)).unwrap()).sum();
        prop_assert!((total - rank as f64).abs() < 1e-9);
    }

    #[test]
    fn removal_never_lowers_kept_scores(a in matrix(14, 3), lambda in 0.01f64..2.0, mask in prop::collection::vec(any::<bool>(), 14)) {
        let removed: Vec<usize> = (0..a.rows()).filter(|&i| mask[i]).collect();
        prop_assume!(removed.len() < a.rows());
        let ctx = RowRemovalContext::new(a, &removed, lambda).unwrap();
        let after = exact_scores_after_removal(&ctx).unwrap();
        for (b, e) in ctx.kept_scores().iter().zip(&after.scores) {
            prop_assert!(e + 1e-12 >= *b);
        }
    }

    #[test]
    fn exact_block_updates_never_raise_the_loss(seed in 0u64..10_000, lambda in 0.0f64..0.5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let shape = [5, 4, 3];
        let x = DenseTensor::from_fn(shape.to_vec(), |_| rand::Rng::random_range(&mut rng, -1.0..1.0)).unwrap();
        let mut m = TuckerModel::random_uniform(&shape, &[2, 2, 2], lambda, &mut rng).unwrap();
        let mut prev = tucker_loss(&m, &x).unwrap();
        for mode in 0..3 {
            m.factors[mode] = update_factor(&m, &x, mode).unwrap();
            let now = tucker_loss(&m, &x).unwrap();
            prop_assert!(now <= prev * (1.0 + 1e-9) + 1e-12);
            prev = now;
        }
        m.core = update_core_exact(&m, &x).unwrap();
        prop_assert!(tucker_loss(&m, &x).unwrap() <= prev * (1.0 + 1e-9) + 1e-12);
    }
}
