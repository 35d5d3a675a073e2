use fairmiss::data::{Dataset, MissingMask, Sample};
use fairmiss::encode::{assign_cluster, cluster_missing_patterns, encode_affine, encode_indicators, ClusterConfig};
use fairmiss::metrics::{
    brute_force_fair_optimal, mutual_info_my, pareto_frontier, plugin_conditional_entropy, JointTable, TradeoffPoint,
};
use fairmiss::missingness::{impute_table, Theorem1Distribution};
use proptest::prelude::*;

fn dataset_strategy() -> impl Strategy<Value = Dataset> {
    (1usize..4, 2usize..30).prop_flat_map(|(d, n)| {
        proptest::collection::vec(
            (proptest::collection::vec(proptest::option::weighted(0.7, -3i32..3), d), 0u32..2, 0u8..2),
            n,
        )
        .prop_map(move |rows| {
            let samples = rows
                .into_iter()
                .map(|(x, s, y)| Sample::new(x.into_iter().map(|v| v.map(f64::from)).collect(), s, y))
                .collect();
            Dataset::new((0..d).map(|j| format!("f{j}")).collect(), samples).unwrap()
        })
    })
}

fn table_strategy() -> impl Strategy<Value = JointTable> {
    (2usize..4, 1usize..5).prop_flat_map(|(g, nx)| {
        proptest::collection::vec(0.0f64..1.0, g * nx * 2).prop_filter_map("non-zero mass", move |w| {
            let total: f64 = w.iter().sum();
            (total > 1e-3).then(|| {
                let mut t = JointTable::zeros((0..g as u32).collect(), (0..nx).map(|x| x.to_string()).collect());
                let mut k = 0;
                for gi in 0..g {
                    for x in 0..nx {
                        for y in 0..2 {
                            t.set(gi, x, y, w[k] / total);
                            k += 1;
                        }
                    }
                }
                t
            })
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn affine_prefix_is_indicator_encoding(ds in dataset_strategy()) {
        let a = encode_affine(&ds);
        let i = encode_indicators(&ds);
        prop_assert_eq!(a.take_columns(i.n_cols()), i);
    }

    #[test]
    fn encoded_columns_are_finite_and_uniquely_tagged(ds in dataset_strategy()) {
        let a = encode_affine(&ds);
        prop_assert!(a.check_finite().is_ok());
        let tags: std::collections::HashSet<String> = a.columns.iter().map(ToString::to_string).collect();
        prop_assert_eq!(tags.len(), a.n_cols());
        let n_miss = ds.missing_per_feature().iter().filter(|&&c| c > 0).count();
        let d = ds.dimension();
        prop_assert_eq!(a.n_cols(), 2 * d + n_miss * (d - 1));
    }

    #[test]
    fn zero_imputation_loses_information_only_with_the_mask(ds in dataset_strategy()) {
        let rows: Vec<(Vec<i64>, Vec<bool>, u8)> = ds
            .samples()
            .iter()
            .map(|s| {
                let x = s.features.iter().map(|v| v.unwrap_or(0.0) as i64).collect();
                (x, s.mask().0, s.label)
            })
            .collect();
        let with_mask = plugin_conditional_entropy(rows.iter().map(|(x, m, y)| (*y, (x.clone(), m.clone()))));
        let without = plugin_conditional_entropy(rows.iter().map(|(x, _, y)| (*y, x.clone())));
        prop_assert!(with_mask <= without + 1e-12);
    }

    #[test]
    fn mutual_info_of_mask_is_nonnegative(ds in dataset_strategy()) {
        prop_assert!(mutual_info_my(&ds) >= 0.0);
    }

    #[test]
    fn fair_optimum_monotone_in_epsilon(t in table_strategy(), a in 0.0f64..0.5, b in 0.0f64..0.5) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let f_lo = brute_force_fair_optimal(&t, lo).unwrap().accuracy;
        let f_hi = brute_force_fair_optimal(&t, hi).unwrap().accuracy;
        prop_assert!(f_lo <= f_hi + 1e-9);
    }

    #[test]
    fn every_pattern_routes_to_a_leaf(bits in proptest::collection::vec(any::<bool>(), 2)) {
        let part = cluster_missing_patterns(&fairmiss::missingness::gen_synthetic(0), &ClusterConfig::new(1, 1.0, 0.0)).unwrap();
        prop_assert!(assign_cluster(&part, &MissingMask(bits)) < part.n_clusters());
    }

    #[test]
    fn pareto_output_is_mutually_non_dominating(
        pts in proptest::collection::vec((0.0f64..1.0, 0.0f64..1.0), 1..60)
    ) {
        let points: Vec<TradeoffPoint> = pts.into_iter().map(|(a, d)| TradeoffPoint::new(a, d)).collect();
        let front = pareto_frontier(&points);
        for p in &front {
            prop_assert!(!front.iter().any(|q| q.dominates(p)));
        }
    }
}

#[test]
fn mask_information_vanishes_without_missingness() {
    let samples = (0..10).map(|i| Sample::new(vec![Some(f64::from(i))], 0, (i % 2) as u8)).collect();
    let ds = Dataset::new(vec!["a".into()], samples).unwrap();
    assert_eq!(mutual_info_my(&ds), 0.0);
}

#[test]
fn imputation_gap_equals_alpha_on_a_grid() {
    for alpha in [0.05, 0.1, 0.2, 0.3] {
        let table = Theorem1Distribution::symmetric(alpha, 0.5).unwrap().exact_table();
        let original = brute_force_fair_optimal(&table, 0.0).unwrap().accuracy;
        // Randomized imputations are mixtures and never beat the better
        // deterministic one.
        let best = (0..=20)
            .map(|i| brute_force_fair_optimal(&impute_table(&table, f64::from(i) / 20.0), 0.0).unwrap().accuracy)
            .fold(f64::NEG_INFINITY, f64::max);
        assert!((original - 1.0).abs() < 1e-9);
        assert!((original - best - alpha).abs() < 1e-6, "alpha={alpha}: best={best}");
    }
}

#[test]
fn missingness_visible_zero_entropy_on_construction() {
    let dist = Theorem1Distribution::symmetric(0.2, 0.5).unwrap();
    let table = dist.exact_table();
    // Weighted plug-in on the exact table: H(Y | X^, M) = 0 and H(Y | X^) > 0
    // when NA is imputed as 1.
    let full = fairmiss::metrics::conditional_entropy(&table.joint_with_label(|x| x).into_iter().map(|((x, y), p)| ((y, x), p)).collect());
    let imputed = impute_table(&table, 1.0);
    let collapsed =
        fairmiss::metrics::conditional_entropy(&imputed.joint_with_label(|x| x).into_iter().map(|((x, y), p)| ((y, x), p)).collect());
    assert!(full.abs() < 1e-12);
    assert!(collapsed > 0.1);
}
