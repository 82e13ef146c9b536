use proptest::prelude::*;

use mellin_deconv::rng::{derive_seed, stream};
use mellin_deconv::{
    empirical_mellin, estimate_noisy, estimate_noisy_path, fit_loglog_slope, log_spaced, make_error, parseval_norm,
    sample_noisy, selection_from_norms, Complex64, EstimatorConfig, FrequencyGrid, PenaltyConfig, Sample,
    TargetDensity,
};

fn sample_strategy(max_len: usize) -> impl Strategy<Value = Sample> {
    prop::collection::vec(1e-3f64..1e3, 1..max_len).prop_map(|v| Sample::new(v).unwrap())
}

/// Nondecreasing norm sequences, as produced by a nested family of estimators.
fn norms_strategy() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..2.0, 1..60).prop_map(|inc| {
        inc.iter()
            .scan(0.0, |acc, d| {
                *acc += d;
                Some(*acc)
            })
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn contrast_is_minus_norm_plus_penalty(norms in norms_strategy(), chi in 0.01f64..5.0, gamma in 0u32..3, n in 1usize..5000) {
        let pc = PenaltyConfig::new(chi, gamma, 200).unwrap();
        let sel = selection_from_norms(&norms, &pc, n);
        prop_assert_eq!(sel.table.len(), norms.len());
        for row in &sel.table {
            prop_assert_eq!(row.contrast, -row.omega_norm_sq + row.pen);
            prop_assert_eq!(row.pen, pc.penalty(row.k, n));
        }
        let best = sel.table[sel.k_hat - 1].contrast;
        prop_assert!(sel.table.iter().all(|r| best <= r.contrast));
        prop_assert!(sel.table[..sel.k_hat - 1].iter().all(|r| best < r.contrast));
    }

    #[test]
    fn selected_cutoff_shrinks_as_chi_grows(norms in norms_strategy(), a in 0.01f64..5.0, b in 0.01f64..5.0, gamma in 0u32..3, n in 1usize..5000) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let k_lo = selection_from_norms(&norms, &PenaltyConfig::new(lo, gamma, 200).unwrap(), n).k_hat;
        let k_hi = selection_from_norms(&norms, &PenaltyConfig::new(hi, gamma, 200).unwrap(), n).k_hat;
        prop_assert!(k_hi <= k_lo, "chi {} -> {}, chi {} -> {}", lo, k_lo, hi, k_hi);
    }

    #[test]
    fn empirical_transform_is_conjugate_symmetric(s in sample_strategy(50)) {
        let grid = FrequencyGrid::new(3.0, 0.01).unwrap();
        let mv = empirical_mellin(&s, 1.0, &grid).unwrap();
        prop_assert!((mv.at(0) - Complex64::new(1.0, 0.0)).norm() <= 1e-15);
        for m in [1isize, 17, 64, 65, 300] {
            prop_assert_eq!(mv.at(-m), mv.at(m).conj());
            prop_assert!(mv.at(m).norm() <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn rescaling_rotates_the_transform(s in sample_strategy(30), c in 0.05f64..20.0) {
        // M̂[cY](t) = c^{it}·M̂[Y](t)
        let grid = FrequencyGrid::new(2.0, 0.01).unwrap();
        let base = empirical_mellin(&s, 1.0, &grid).unwrap();
        let scaled = empirical_mellin(&s.scaled(c).unwrap(), 1.0, &grid).unwrap();
        for m in [0isize, 5, 100, 200] {
            let t = grid.node(m);
            let want = Complex64::from_polar(1.0, t * c.ln()) * base.at(m);
            prop_assert!((scaled.at(m) - want).norm() < 1e-10);
        }
    }

    #[test]
    fn path_entries_match_single_estimates(seed in any::<u64>(), picks in prop::collection::btree_set(1usize..800, 1..5)) {
        let cfg = EstimatorConfig::new(1.0, FrequencyGrid::default(), log_spaced(0.05, 5.0, 17)).unwrap();
        let g = make_error("beta_1_2").unwrap();
        let s = sample_noisy(&TargetDensity::Weibull2, &g, 60, &mut stream(seed, &[])).unwrap();
        let ks: Vec<f64> = picks.into_iter().map(|m| m as f64 * 0.01).collect();
        let path = estimate_noisy_path(&s, &g, &ks, &cfg).unwrap();
        for (k, p) in ks.iter().zip(&path) {
            prop_assert_eq!(p, &estimate_noisy(&s, &g, *k, &cfg).unwrap());
        }
        prop_assert!(path.windows(2).all(|w| w[0].omega_norm_sq <= w[1].omega_norm_sq));
    }

    #[test]
    fn parseval_norm_is_nonnegative_and_nondecreasing(s in sample_strategy(40), m in 1usize..300) {
        let grid = FrequencyGrid::new(4.0, 0.01).unwrap();
        let mv = empirical_mellin(&s, 1.0, &grid).unwrap();
        let a = parseval_norm(&mv, m as f64 * 0.01).unwrap();
        let b = parseval_norm(&mv, (m + 1) as f64 * 0.01).unwrap();
        prop_assert!(a >= 0.0 && a <= b);
    }

    #[test]
    fn power_laws_have_exact_slopes(beta in 0.05f64..3.0, c in 1e-3f64..1e3, start in 10usize..1000) {
        let ns: Vec<f64> = (0..5).map(|i| (start << i) as f64).collect();
        let y: Vec<f64> = ns.iter().map(|n| c * n.powf(-beta)).collect();
        prop_assert!((fit_loglog_slope(&ns, &y).unwrap() + beta).abs() < 1e-10);
    }

    #[test]
    fn log_grids_are_increasing(lo in 1e-4f64..1.0, ratio in 1.5f64..1e4, count in 2usize..500) {
        let hi = lo * ratio;
        let xs = log_spaced(lo, hi, count);
        prop_assert_eq!(xs.len(), count);
        prop_assert_eq!(xs[0], lo);
        prop_assert_eq!(xs[count - 1], hi);
        prop_assert!(xs.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn seeds_depend_on_the_whole_path(seed in any::<u64>(), a in any::<u64>(), b in any::<u64>()) {
        prop_assert_eq!(derive_seed(seed, &[a, b]), derive_seed(seed, &[a, b]));
        prop_assume!(a != b);
        prop_assert_ne!(derive_seed(seed, &[a]), derive_seed(seed, &[b]));
        prop_assert_ne!(derive_seed(seed, &[a, b]), derive_seed(seed, &[b, a]));
    }
}
