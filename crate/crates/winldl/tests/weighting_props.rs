//! Property tests for the weighting schemes.

use ndarray::Array2;
use proptest::prelude::*;
use winldl::weighting::{
    build_weights, estimate_missing, refresh_missing_weights, MaskedDegrees, MissingEstimate,
    ObservationMask, WeightScheme,
};

/// Random masked matrix: dims, per-entry observation flags, and degrees.
fn masked_matrix() -> impl Strategy<Value = MaskedDegrees<f64>> {
    (1usize..6, 2usize..6)
        .prop_flat_map(|(n, c)| {
            let cells = prop::collection::vec((0.0f64..=1.0, prop::bool::ANY), n * c);
            (Just(n), Just(c), cells)
        })
        .prop_map(|(n, c, cells)| {
            let mut values = Array2::zeros((n, c));
            let mut observed = Array2::from_elem((n, c), false);
            for (idx, (degree, obs)) in cells.into_iter().enumerate() {
                let (i, j) = (idx / c, idx % c);
                observed[(i, j)] = obs;
                if obs {
                    values[(i, j)] = degree;
                }
            }
            MaskedDegrees::new(values, ObservationMask::new(observed)).unwrap()
        })
}

proptest! {
    /// Smaller observed degrees get strictly larger weights.
    #[test]
    fn observed_weights_decrease_in_degree(d1 in 0.0f64..1.0, d2 in 0.0f64..1.0) {
        prop_assume!(d1 < d2);
        let values = ndarray::arr2(&[[d1, d2]]);
        let masked = MaskedDegrees::new(
            values,
            ObservationMask::new(ndarray::arr2(&[[true, true]])),
        )
        .unwrap();
        let est = estimate_missing(&masked);
        let w = build_weights(&masked, &est, WeightScheme::WInLdl, 0, 50, 0).unwrap();
        prop_assert!(w.q[(0, 0)] > w.q[(0, 1)]);
    }

    /// For an equal degree argument, the observed weight dominates the
    /// missing weight, with equality only at the final iteration or degree 1.
    #[test]
    fn observed_dominates_missing(
        d in 0.0f64..=1.0,
        iter in 0usize..=50,
    ) {
        let max_iter = 50;
        let observed_w = 2.0f64.powf(1.0 - d);
        let a = 1.0 + iter as f64 / max_iter as f64;
        let missing_w = a.powf(1.0 - d);
        prop_assert!(observed_w >= missing_w);
        if iter < max_iter && d < 1.0 {
            prop_assert!(observed_w > missing_w);
        }
    }

    /// Missing weights grow with the iteration counter.
    #[test]
    fn missing_weights_grow_with_iteration(
        masked in masked_matrix(),
        iter in 0usize..50,
    ) {
        prop_assume!(masked.mask.n_missing() > 0);
        let est = estimate_missing(&masked);
        let mut w_now = build_weights(&masked, &est, WeightScheme::WInLdl, 0, 50, 0).unwrap();
        let mut w_next = w_now.clone();
        refresh_missing_weights(&mut w_now, &masked, &est, iter, 50);
        refresh_missing_weights(&mut w_next, &masked, &est, iter + 1, 50);
        for ((i, j), &obs) in masked.mask.observed.indexed_iter() {
            if !obs && est.column_means[j] < 1.0 {
                prop_assert!(w_next.q[(i, j)] >= w_now.q[(i, j)]);
            }
        }
    }

    /// Default-scheme weights stay within [1, 2].
    #[test]
    fn default_scheme_weights_bounded(masked in masked_matrix(), iter in 0usize..=50) {
        let est = estimate_missing(&masked);
        let w = build_weights(&masked, &est, WeightScheme::WInLdl, iter, 50, 0).unwrap();
        for &q in w.q.iter() {
            prop_assert!((1.0..=2.0).contains(&q), "weight {q} out of range");
        }
    }

    /// Identical inputs produce bit-identical weight matrices.
    #[test]
    fn build_is_deterministic(masked in masked_matrix(), seed in any::<u64>()) {
        for scheme in WeightScheme::ALL {
            let est = estimate_missing(&masked);
            let a = build_weights(&masked, &est, scheme, 7, 50, seed).unwrap();
            let b = build_weights(&masked, &est, scheme, 7, 50, seed).unwrap();
            let bits = |m: &winldl::Mat<f64>| -> Vec<u64> {
                m.iter().map(|v| v.to_bits()).collect()
            };
            prop_assert_eq!(bits(&a.q), bits(&b.q));
        }
    }

    /// Refresh touches missing entries only, bit-for-bit.
    #[test]
    fn refresh_preserves_observed_entries(masked in masked_matrix(), iter in 0usize..=50) {
        let est = estimate_missing(&masked);
        let mut w = build_weights(&masked, &est, WeightScheme::WInLdl, 0, 50, 0).unwrap();
        let before = w.q.clone();
        refresh_missing_weights(&mut w, &masked, &est, iter, 50);
        for ((i, j), &obs) in masked.mask.observed.indexed_iter() {
            if obs {
                prop_assert_eq!(w.q[(i, j)].to_bits(), before[(i, j)].to_bits());
            }
        }
    }
}

#[test]
fn column_mean_estimate_is_bounded_by_observed_fraction() {
    // The literal estimate divides by N, so it never exceeds the estimate
    // over observed entries.
    let values: Array2<f64> = ndarray::arr2(&[[0.9, 0.0], [0.0, 0.0], [0.3, 0.0]]);
    let observed = ndarray::arr2(&[[true, false], [false, false], [true, false]]);
    let masked = MaskedDegrees::new(values, ObservationMask::new(observed)).unwrap();
    let literal = estimate_missing(&masked);
    let over_observed = winldl::weighting::estimate_missing_over_observed(&masked);
    for (a, b) in literal.column_means.iter().zip(&over_observed.column_means) {
        assert!(a <= b || (a - b).abs() < 1e-15);
    }
    let manual = MissingEstimate {
        column_means: vec![1.2 / 3.0, 0.0],
    };
    for (a, b) in literal.column_means.iter().zip(&manual.column_means) {
        assert!((a - b).abs() < 1e-15);
    }
}
