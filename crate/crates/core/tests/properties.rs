//! Property tests for the Gaussian-mixture algebra and code constructions:
//! randomized inputs over sane parameter ranges, checking the invariants the
//! closed forms must satisfy for *every* input, not just the frozen examples.

use ldlc_core::gaussian::{
    convolve_mixtures, mixture_product, moments, periodic_extend, product, reduce, stretch,
};
use ldlc_core::{
    db_from_sigma2, sigma2_from_db, Gaussian, GaussianMixture, LatticeCode, WeightedComponent,
};
use proptest::prelude::*;

/// A bounded random mixture: k components, means in [-3, 3], variances in
/// [0.02, 2], raw (unnormalized) log weights in [-2, 0].
fn mixture_strategy(max_k: usize) -> impl Strategy<Value = GaussianMixture> {
    proptest::collection::vec((-3.0f64..3.0, 0.02f64..2.0, -2.0f64..0.0), 1..=max_k).prop_map(
        |params| {
            let comps: Vec<WeightedComponent> = params
                .into_iter()
                .map(|(m, v, lw)| WeightedComponent {
                    log_weight: lw,
                    gaussian: Gaussian::new(m, v).unwrap(),
                })
                .collect();
            GaussianMixture::new(comps).unwrap()
        },
    )
}

/// Log-sum-exp of component log weights; 0 for a normalized mixture.
fn total_log_weight(m: &GaussianMixture) -> f64 {
    let peak = m.components().iter().map(|c| c.log_weight).fold(f64::NEG_INFINITY, f64::max);
    peak + m.components().iter().map(|c| (c.log_weight - peak).exp()).sum::<f64>().ln()
}

proptest! {
    /// Pairwise Gaussian product: precisions add, the mean is the
    /// precision-weighted average, and both stay finite.
    #[test]
    fn product_precisions_add(
        m1 in -4.0f64..4.0, v1 in 0.01f64..3.0,
        m2 in -4.0f64..4.0, v2 in 0.01f64..3.0,
    ) {
        let (g, log_scale) = product(&[
            Gaussian::new(m1, v1).unwrap(),
            Gaussian::new(m2, v2).unwrap(),
        ]).unwrap();
        let prec = 1.0 / v1 + 1.0 / v2;
        prop_assert!((1.0 / g.variance - prec).abs() <= 1e-9 * prec);
        let mean = (m1 / v1 + m2 / v2) / prec;
        prop_assert!((g.mean - mean).abs() <= 1e-9 * (1.0 + mean.abs()));
        prop_assert!(log_scale.is_finite());
    }

    /// Mixture convolution adds means and variances exactly (law of the sum
    /// of independent variables), and the result stays normalized.
    #[test]
    fn convolve_adds_moments(a in mixture_strategy(4), b in mixture_strategy(4)) {
        let (ma, va) = moments(&a);
        let (mb, vb) = moments(&b);
        let c = convolve_mixtures(&a, &b, 1_000_000).unwrap();
        let (mc, vc) = moments(&c);
        prop_assert!((mc - (ma + mb)).abs() <= 1e-9 * (1.0 + (ma + mb).abs()));
        prop_assert!((vc - (va + vb)).abs() <= 1e-9 * (va + vb));
        prop_assert!(total_log_weight(&c).abs() <= 1e-9);
    }

    /// Stretching by c scales the mean by c and the variance by c².
    #[test]
    fn stretch_scales_moments(
        m in mixture_strategy(5),
        c in prop_oneof![-3.0f64..-0.1, 0.1f64..3.0],
    ) {
        let (mean, var) = moments(&m);
        let s = stretch(&m, c).unwrap();
        let (sm, sv) = moments(&s);
        prop_assert!((sm - c * mean).abs() <= 1e-9 * (1.0 + (c * mean).abs()));
        prop_assert!((sv - c * c * var).abs() <= 1e-9 * c * c * var);
        prop_assert!(total_log_weight(&s).abs() <= 1e-9);
    }

    /// Periodic extension over a window: one copy per integer, means moved
    /// by -b/c, the per-copy weight split uniform, and the result normalized.
    #[test]
    fn periodic_extension_shifts_means(
        m in mixture_strategy(3),
        c in prop_oneof![-2.0f64..-0.2, 0.2f64..2.0],
        half in 1i64..3,
    ) {
        let ints: Vec<i64> = (-half..=half).collect();
        let e = periodic_extend(&m, &ints, c).unwrap();
        prop_assert_eq!(e.len(), m.len() * ints.len());
        prop_assert!(total_log_weight(&e).abs() <= 1e-9);
        // Every output mean must be an input mean shifted by -b/c for some b
        // in the window.
        for comp in e.components() {
            let hit = m.components().iter().any(|src| {
                ints.iter().any(|&b| {
                    (comp.gaussian.mean - (src.gaussian.mean - b as f64 / c)).abs() <= 1e-9
                })
            });
            prop_assert!(hit, "mean {} has no source", comp.gaussian.mean);
        }
    }

    /// Moment-matching reduction with no weight floor preserves the overall
    /// mean and variance exactly (merges are moment-preserving; nothing is
    /// dropped).
    #[test]
    fn reduce_preserves_moments(m in mixture_strategy(12), k in 1usize..6) {
        let (mean, var) = moments(&m);
        let r = reduce(&m, k, 0.0).unwrap();
        prop_assert!(r.len() <= k.max(1));
        let (rm, rv) = moments(&r);
        prop_assert!((rm - mean).abs() <= 1e-8 * (1.0 + mean.abs()));
        prop_assert!((rv - var).abs() <= 1e-8 * var.max(1e-3));
        prop_assert!(total_log_weight(&r).abs() <= 1e-9);
    }

    /// The product of mixtures is normalized and its support shrinks: every
    /// product-component variance is no larger than the smallest input
    /// variance involved.
    #[test]
    fn mixture_product_tightens(a in mixture_strategy(4), b in mixture_strategy(4)) {
        let p = mixture_product(&[&a, &b], None, 1_000_000).unwrap();
        prop_assert_eq!(p.len(), a.len() * b.len());
        prop_assert!(total_log_weight(&p).abs() <= 1e-9);
        let max_in = a
            .components()
            .iter()
            .chain(b.components())
            .map(|c| c.gaussian.variance)
            .fold(0.0f64, f64::max);
        for comp in p.components() {
            prop_assert!(comp.gaussian.variance <= max_in + 1e-12);
        }
    }

    /// dB-from-capacity round-trips through sigma2 for any positive ceiling.
    #[test]
    fn db_sigma2_roundtrip(s2max in 0.01f64..10.0, db in -10.0f64..10.0) {
        let s2 = sigma2_from_db(s2max, db);
        let back = db_from_sigma2(s2max, s2);
        prop_assert!((back - db).abs() <= 1e-9);
    }

    /// Latin-square construction: H·G is the identity to solver precision
    /// for random sizes, sequences, and seeds.
    #[test]
    fn latin_square_inverse_consistency(
        n in 3usize..9,
        h2 in 0.3f64..0.9,
        seed in 0u64..500,
    ) {
        let code = match LatticeCode::latin_square(n, &[1.0, h2], seed) {
            Ok(c) => c,
            // Some (n, seed) draws cannot place a Latin pattern; skip them.
            Err(_) => return Ok(()),
        };
        let b: Vec<i64> = (0..n).map(|i| ((i % 3) as i64) - 1).collect();
        let x = code.encode(&b).unwrap();
        // H x must reproduce b.
        let hx = code.matrix().matvec(&x).unwrap();
        for (got, want) in hx.iter().zip(&b) {
            prop_assert!((got - *want as f64).abs() <= 1e-6);
        }
    }
}
