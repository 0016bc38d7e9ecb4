use std::sync::Arc;

use num_complex::Complex64;
use proptest::prelude::*;

use hslab::bmolab::{green_disc, mean_oscillation};
use hslab::funcspace::{gaussian, ScalarField};
use hslab::hartogs::{hyperbolic_distance, HyperbolicPoint};
use hslab::ineqlab::check_hardy;
use hslab::liouville::{capacity_ball, cutoff_build, iter_log, ModelManifold};
use hslab::quadcore::{BallSpec, QuadratureSpec};

fn disc_point() -> impl Strategy<Value = Complex64> {
    (0.0..0.95f64, 0.0..std::f64::consts::TAU).prop_map(|(r, t)| Complex64::from_polar(r, t))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn hardy_ratio_is_dilation_invariant(sigma in 0.3..3.0f64, n in 3usize..6) {
        let spec = QuadratureSpec::adaptive(1e-10, 1e-300);
        let a = check_hardy(&gaussian(n, vec![0.0; n], 1.0).unwrap(), n, &spec).unwrap();
        let b = check_hardy(&gaussian(n, vec![0.0; n], sigma).unwrap(), n, &spec).unwrap();
        let (ra, rb) = (a.lhs.value / a.rhs.value, b.lhs.value / b.rhs.value);
        prop_assert!((ra - rb).abs() < 1e-7 * ra, "{ra} vs {rb}");
        let scale = sigma.powi(n as i32 - 2);
        prop_assert!((b.lhs.value - scale * a.lhs.value).abs() < 1e-7 * b.lhs.value);
    }

    #[test]
    fn oscillation_ignores_constants(c in -50.0..50.0f64, cx in -0.5..0.5f64, r in 0.2..1.5f64) {
        let g = gaussian(3, vec![0.0; 3], 0.7).unwrap();
        let h = g.clone();
        let shifted = ScalarField::new(3, format!("gauss+{c}"), move |x| h.eval(x) + c);
        let ball = BallSpec::new(vec![cx, 0.1, 0.0], r).unwrap();
        let spec = QuadratureSpec::adaptive(1e-9, 1e-12);
        let a = mean_oscillation(&g, &ball, &spec).unwrap();
        let b = mean_oscillation(&shifted, &ball, &spec).unwrap();
        prop_assert!((a.oscillation.value - b.oscillation.value).abs() < 1e-6 * (1.0 + c.abs()));
        prop_assert!((b.mean.value - a.mean.value - c).abs() < 1e-7 * (1.0 + c.abs()));
    }

    #[test]
    fn green_function_symmetric_and_negative(z in disc_point(), w in disc_point()) {
        prop_assume!((z - w).norm() > 1e-3);
        let a = green_disc(1.0, z, w).unwrap();
        let b = green_disc(1.0, w, z).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
        prop_assert!(a < 0.0);
    }

    #[test]
    fn hyperbolic_distance_is_a_metric(a in disc_point(), b in disc_point(), c in disc_point()) {
        let p = |z| HyperbolicPoint::new(z).unwrap();
        let (ab, ba) = (hyperbolic_distance(p(a), p(b)), hyperbolic_distance(p(b), p(a)));
        prop_assert!((ab - ba).abs() <= 1e-12 * ab.max(1.0));
        let via = hyperbolic_distance(p(a), p(c)) + hyperbolic_distance(p(c), p(b));
        prop_assert!(ab <= via + 1e-9);
    }

    #[test]
    fn capacity_scales_homogeneously(n in 3usize..9, r in 0.1..10.0f64) {
        let ratio = capacity_ball(n, 2.0 * r).unwrap() / capacity_ball(n, r).unwrap();
        prop_assert!((ratio - 2f64.powi(n as i32 - 2)).abs() < 1e-12 * ratio);
    }

    #[test]
    fn cutoff_is_monotone_with_endpoints(r in 0.1..3.0f64, width in 0.05..4.0f64, log_eps in -3.0..3.0f64, n in 2usize..6) {
        let m = ModelManifold::euclidean(n).unwrap();
        let cut = cutoff_build(Arc::new(move |t| m.volume(t)), r, r + width, 10f64.powf(log_eps)).unwrap();
        prop_assert_eq!(cut.chi(r), 1.0);
        prop_assert_eq!(cut.chi(r + width), 0.0);
        let s = cut.sample(41);
        prop_assert!(s.windows(2).all(|w| w[1].1 <= w[0].1 + 1e-12));
        prop_assert!(s.iter().all(|p| p.2 <= 0.0));
        prop_assert_eq!(cut.bound, 2.0 * cut.c);
    }

    #[test]
    fn iterated_logs_nondecreasing(k in 0usize..4, a in 0.0..40.0f64, d in 0.0..5.0f64) {
        let (lo, hi) = (a.exp(), (a + d).exp());
        prop_assert!(iter_log(k, hi) >= iter_log(k, lo));
    }
}
