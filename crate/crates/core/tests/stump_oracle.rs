//! Stump fitting checked against exhaustive search.

use adafair_core::dataset::{Dataset, Group, Label};
use adafair_core::engine::WeightDistribution;
use adafair_core::stump::fit_stump;
use adafair_testkit::{brute_force_stump, dyadic_weights};
use proptest::prelude::*;

fn arbitrary_dataset(
    max_rows: usize,
    max_features: usize,
) -> impl Strategy<Value = (Dataset, Vec<u32>)> {
    (2..=max_rows, 1..=max_features).prop_flat_map(|(rows, features)| {
        let columns = proptest::collection::vec(
            proptest::collection::vec(-50i32..50, rows..=rows),
            features..=features,
        );
        let labels = proptest::collection::vec(any::<bool>(), rows..=rows);
        let groups = proptest::collection::vec(any::<bool>(), rows..=rows);
        let raw_weights = proptest::collection::vec(any::<u32>(), rows..=rows);
        (columns, labels, groups, raw_weights).prop_map(|(cols, labels, groups, raw)| {
            // Integer-valued features keep midpoints exact; duplicates are
            // frequent by construction, exercising the equal-value runs.
            let columns: Vec<Vec<f64>> = cols
                .into_iter()
                .map(|c| c.into_iter().map(f64::from).collect())
                .collect();
            let labels: Vec<Label> = labels
                .into_iter()
                .map(|b| if b { Label::Positive } else { Label::Negative })
                .collect();
            let groups: Vec<Group> = groups
                .into_iter()
                .map(|b| {
                    if b {
                        Group::Protected
                    } else {
                        Group::NonProtected
                    }
                })
                .collect();
            let names = (0..columns.len()).map(|i| format!("f{i}")).collect();
            (Dataset::new(columns, labels, groups, names).unwrap(), raw)
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    /// The sweep returns exactly the brute-force winner, tie-breaks
    /// included. Dyadic weights make every error sum exact, so candidate
    /// comparisons agree bit-for-bit between the two implementations.
    #[test]
    fn sweep_matches_exhaustive_search((d, raw) in arbitrary_dataset(200, 10)) {
        let weights = dyadic_weights(&raw, 20);
        let w = WeightDistribution::new(weights.clone()).unwrap();
        let fast = fit_stump(&d, &w);
        let brute = brute_force_stump(&d, &weights);
        prop_assert_eq!(fast.feature_index, brute.feature);
        prop_assert_eq!(fast.threshold, brute.threshold);
        prop_assert_eq!(fast.polarity, brute.polarity);
        prop_assert!((fast.training_weighted_error - brute.weighted_error).abs() <= 1e-12);
    }

    /// A constant stump always achieves min(positive mass, negative mass),
    /// so the fit can never do worse.
    #[test]
    fn error_bounded_by_smaller_class_mass((d, raw) in arbitrary_dataset(80, 4)) {
        let weights = dyadic_weights(&raw, 20);
        let w = WeightDistribution::new(weights.clone()).unwrap();
        let stump = fit_stump(&d, &w);
        let positive_mass: f64 = weights
            .iter()
            .zip(d.labels())
            .filter(|(_, l)| l.is_positive())
            .map(|(w, _)| w)
            .sum();
        let bound = positive_mass.min(1.0 - positive_mass);
        prop_assert!(stump.training_weighted_error <= bound + 1e-12);
    }

    /// Strictly monotone feature transforms do not change training-row
    /// predictions: thresholds are relative to feature order only.
    #[test]
    fn monotone_transform_preserves_predictions((d, raw) in arbitrary_dataset(60, 3)) {
        let weights = dyadic_weights(&raw, 20);
        let w = WeightDistribution::new(weights).unwrap();
        let stump = fit_stump(&d, &w);
        let before = stump.predict(&d).unwrap();

        // Rescale one column by a positive affine map.
        let target = stump.feature_index;
        let columns: Vec<Vec<f64>> = (0..d.column_count())
            .map(|f| {
                let col = d.column(f).unwrap().to_vec();
                if f == target {
                    col.into_iter().map(|v| 3.0 * v + 7.0).collect()
                } else {
                    col
                }
            })
            .collect();
        let transformed = Dataset::new(
            columns,
            d.labels().to_vec(),
            d.groups().to_vec(),
            d.feature_names().to_vec(),
        )
        .unwrap();
        let refit = fit_stump(&transformed, &w);
        let after = refit.predict(&transformed).unwrap();
        prop_assert_eq!(before, after);
    }
}

#[test]
fn zero_weight_rows_still_contribute_thresholds() {
    use Label::{Negative as Neg, Positive as Pos};
    // Row 1 carries zero weight, yet its value creates the midpoints 0.5
    // and 1.5. Without it the only candidate cut would be 1.0; the fit
    // lands on 0.5 (zero error, lowest threshold among the zero-error
    // ties), which can only happen if the weightless row's geometry counts.
    let d = Dataset::new(
        vec![vec![0.0, 1.0, 2.0]],
        vec![Neg, Neg, Pos],
        vec![Group::Protected, Group::NonProtected, Group::Protected],
        vec!["x".into()],
    )
    .unwrap();
    let w = WeightDistribution::new(vec![0.5, 0.0, 0.5]).unwrap();
    let stump = fit_stump(&d, &w);
    assert_eq!(stump.training_weighted_error, 0.0);
    assert_eq!(stump.threshold, 0.5);
}
