use proptest::prelude::*;
use schatten_core::experiments::{
    generate_low_rank, lr_complexity, mse, perturb_decomposition, tr_complexity, RankVector,
};
use schatten_core::{
    latent_lower_bound, numerical_rank, overlapped_norm, overlapped_spectral, spectral_clip, svt,
    DenseMatrix, DenseTensor, LatentDecomposition,
};

fn dims_strategy() -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(1usize..5, 2..5)
}

fn tensor_strategy() -> impl Strategy<Value = DenseTensor> {
    dims_strategy().prop_flat_map(|dims| {
        let n: usize = dims.iter().product();
        prop::collection::vec(-3.0f64..3.0, n).prop_map(move |data| DenseTensor::new(dims.clone(), data).unwrap())
    })
}

fn matrix_strategy() -> impl Strategy<Value = DenseMatrix> {
    (1usize..7, 1usize..7).prop_flat_map(|(r, c)| {
        prop::collection::vec(-2.0f64..2.0, r * c).prop_map(move |d| DenseMatrix::from_column_major(r, c, d).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn unfold_fold_roundtrip_is_bitwise(t in tensor_strategy()) {
        for k in 0..t.order() {
            let back = DenseTensor::fold(&t.unfold(k).unwrap(), k, t.dims()).unwrap();
            prop_assert_eq!(back.data(), t.data());
        }
    }

    #[test]
    fn unfolding_preserves_frobenius_norm(t in tensor_strategy()) {
        for k in 0..t.order() {
            let m = t.unfold(k).unwrap();
            prop_assert!((m.frobenius_norm() - t.frobenius_norm()).abs() <= 1e-12 * (1.0 + t.frobenius_norm()));
        }
    }

    #[test]
    fn spectral_below_frobenius_below_overlapped_s1(t in tensor_strategy()) {
        let fro = t.frobenius_norm();
        let k = t.order() as f64;
        prop_assert!(overlapped_spectral(&t).unwrap() <= fro * (1.0 + 1e-12) + 1e-12);
        prop_assert!(fro * k <= overlapped_norm(&t, 1.0, 1.0).unwrap() * (1.0 + 1e-12) + 1e-12);
        // each singleton decomposition is feasible for the latent norm
        let lb = latent_lower_bound(&t).unwrap();
        let singleton = (0..t.order())
            .map(|m| schatten_core::schatten_norm(&t.unfold(m).unwrap(), 1.0).unwrap())
            .fold(f64::INFINITY, f64::min);
        prop_assert!(fro <= lb * (1.0 + 1e-12) + 1e-12);
        prop_assert!(lb <= singleton * (1.0 + 1e-12) + 1e-12);
    }

    #[test]
    fn svt_shrinks_nuclear_norm_by_tau_per_value(m in matrix_strategy(), tau in 0.0f64..2.0) {
        let out = svt(&m, tau).unwrap();
        let before = schatten_core::schatten_norm(&m, 1.0).unwrap();
        let after = schatten_core::schatten_norm(&out, 1.0).unwrap();
        let r = numerical_rank(&out, 1e-9).unwrap_or(0) as f64;
        // every surviving value loses exactly tau; the rest vanish
        prop_assert!(after <= before + 1e-9);
        prop_assert!((before - after) >= r * tau - 1e-9);
    }

    #[test]
    fn clip_bounds_spectral_norm(m in matrix_strategy(), alpha in 0.01f64..3.0) {
        let c = spectral_clip(&m, alpha).unwrap();
        let top = schatten_core::schatten_norm(&c, f64::INFINITY).unwrap();
        prop_assert!(top <= alpha * (1.0 + 1e-10));
    }

    #[test]
    fn mse_is_symmetric_and_nonnegative(a in tensor_strategy(), shift in -1.0f64..1.0) {
        let b = DenseTensor::new(a.dims().to_vec(), a.data().iter().map(|x| x + shift).collect()).unwrap();
        let e = mse(&a, &b).unwrap();
        prop_assert!((e - mse(&b, &a).unwrap()).abs() < 1e-15);
        prop_assert!((e - shift * shift).abs() < 1e-12);
    }

    #[test]
    fn complexities_are_permutation_invariant(
        pairs in prop::collection::vec((1usize..60, 0usize..60), 2..5),
        rot in 0usize..4,
    ) {
        let dims: Vec<usize> = pairs.iter().map(|p| p.0).collect();
        let ranks: Vec<usize> = pairs.iter().map(|&(n, r)| r.min(n)).collect();
        let shift = rot % dims.len();
        let mut pd = dims.clone();
        let mut pr = ranks.clone();
        pd.rotate_left(shift);
        pr.rotate_left(shift);
        let a = tr_complexity(&dims, &RankVector::new(ranks.clone())).unwrap();
        let b = tr_complexity(&pd, &RankVector::new(pr.clone())).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * a.max(1.0));
        let a = lr_complexity(&dims, &RankVector::new(ranks)).unwrap();
        let b = lr_complexity(&pd, &RankVector::new(pr)).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * a.max(1.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn generated_tensors_have_requested_tucker_rank(
        (dims, ranks) in prop::collection::vec(2usize..7, 3).prop_flat_map(|dims| {
            let rs: Vec<_> = dims.iter().map(|&n| 1usize..=n).collect();
            (Just(dims), rs)
        }),
        seed in any::<u64>(),
    ) {
        // a core with r_k > Π_{l≠k} r_l cannot reach rank r_k in mode k
        let prod: usize = ranks.iter().product();
        let t = generate_low_rank(&dims, &RankVector::new(ranks.clone()), seed).unwrap();
        for k in 0..3 {
            let cap = ranks[k].min(prod / ranks[k]);
            prop_assert_eq!(numerical_rank(&t.unfold(k).unwrap(), 1e-8).unwrap(), cap);
        }
    }

    #[test]
    fn perturbation_preserves_sum(seed in any::<u64>(), scale in -1.0f64..1.0) {
        let dims = [5usize, 4, 4];
        let mut comps = vec![DenseTensor::zeros(&dims).unwrap(); 3];
        comps[0] = generate_low_rank(&dims, &RankVector::new(vec![2, 4, 4]), seed).unwrap();
        comps[2] = generate_low_rank(&dims, &RankVector::new(vec![5, 4, 1]), seed ^ 1).unwrap();
        let d = LatentDecomposition::new(comps).unwrap();
        let p = perturb_decomposition(&d, 2, 0, scale, seed).unwrap();
        prop_assert!(p.sum().distance(&d.sum()).unwrap() < 1e-10);
        prop_assert_eq!(p.component(1), d.component(1));
    }
}
