//! Cross-module invariants, mostly property-based: the algebraic facts the
//! closed forms rely on, checked against randomized inputs.

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use robust_stopping::ambiguity::{
    feasible_p_interval, two_point_from_p, witness_distribution, AmbiguitySpec,
};
use robust_stopping::momentbound::{mad_upper_bound, mad_worst_case, mvs_upper_bound, mvs_worst_case};
use robust_stopping::oracle::{grid_min_two_point, verify_certificate};
use robust_stopping::thresholds::{
    closed_form_bound, closed_form_thresholds, robust_thresholds_generic, two_point_step_objective,
};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    // Mean/variance of the two-point construction round-trip exactly.
    #[test]
    fn two_point_moments_round_trip(
        mu in 0.1f64..10.0,
        sigma_ratio in 0.0f64..0.999,
        p_excess in 0.0f64..0.95,
    ) {
        // Keep the lower point nonnegative: p >= sigma2/(sigma2 + mu^2).
        let sigma = mu * sigma_ratio;
        let sigma2 = sigma * sigma;
        let p_min = sigma2 / (sigma2 + mu * mu);
        let p = p_min + p_excess * (1.0 - 1e-6 - p_min);
        if p > 0.0 && p < 1.0 {
            let dist = two_point_from_p(mu, sigma, p).unwrap();
            let m = dist.moments();
            prop_assert!((m.mean - mu).abs() <= 1e-12 * mu.max(1.0));
            prop_assert!((m.variance - sigma2).abs() <= 1e-12 * (sigma2).max(1.0));
        }
    }

    // The minimum of K0 p + sqrt(p(1-p)) K1 over [y, 1-y] sits at y.
    #[test]
    fn step_objective_minimized_at_left_of_symmetric_range(
        k0 in 0.0f64..5.0,
        k1 in 0.0f64..5.0,
        y in 1e-6f64..0.5,
        zs in prop::collection::vec(0.0f64..1.0, 200),
    ) {
        let u = |p: f64| k0 * p + (p * (1.0 - p)).sqrt() * k1;
        let at_y = u(y);
        for z01 in zs {
            let z = y + z01 * (1.0 - 2.0 * y);
            prop_assert!(at_y <= u(z) + 1e-12, "u({y}) = {at_y} > u({z}) = {}", u(z));
        }
    }

    // Both bound families are nondecreasing and 1-Lipschitz in xi.
    #[test]
    fn bounds_monotone_and_lipschitz(
        mu in 0.2f64..5.0,
        frac in 0.01f64..0.99,
        upper_ratio in 1.05f64..6.0,
        x1 in 0.0f64..1.0,
        x2 in 0.0f64..1.0,
    ) {
        let upper = mu * upper_ratio;
        let (lo, hi) = (x1.min(x2), x1.max(x2));
        let sigma2 = frac * mu * (upper - mu);
        let a = mvs_upper_bound(mu, sigma2, upper, lo * upper).unwrap();
        let b = mvs_upper_bound(mu, sigma2, upper, hi * upper).unwrap();
        prop_assert!(b >= a - 1e-12);
        prop_assert!(b - a <= (hi - lo) * upper + 1e-9);

        let d = frac * 2.0 * mu * (upper - mu) / upper;
        let a = mad_upper_bound(mu, d, upper, lo * upper).unwrap();
        let b = mad_upper_bound(mu, d, upper, hi * upper).unwrap();
        prop_assert!(b >= a - 1e-12);
        prop_assert!(b - a <= (hi - lo) * upper + 1e-9);
    }

    // Witnesses are members for every valid spec kind.
    #[test]
    fn witnesses_are_members(
        mu in 0.1f64..10.0,
        frac in 0.0f64..1.0,
        upper_ratio in 1.01f64..8.0,
    ) {
        let upper = mu * upper_ratio;
        let specs = [
            AmbiguitySpec::mean_only(mu),
            AmbiguitySpec::mean_variance(mu, frac * mu * mu),
            AmbiguitySpec::two_point(mu, frac * mu * (upper - mu), upper),
            AmbiguitySpec::mean_var_support(mu, frac * mu * (upper - mu), upper),
            AmbiguitySpec::mean_mad(mu, frac * 1.99 * mu),
            AmbiguitySpec::mean_mad_support(mu, frac * 2.0 * mu * (upper - mu) / upper, upper),
        ];
        for spec in specs {
            let spec = spec.validate().unwrap();
            let w = witness_distribution(&spec);
            let m = w.moments();
            let scale = mu.max(1.0);
            prop_assert!((m.mean - mu).abs() <= 1e-12 * scale);
            if let Some(s2) = spec.sigma2 {
                prop_assert!((m.variance - s2).abs() <= 1e-12 * (s2 + scale));
            }
            if let Some(d) = spec.mad {
                prop_assert!((m.mad - d).abs() <= 1e-12 * (d + scale));
            }
            if let Some(l) = spec.support_upper {
                prop_assert!(w.support_violation(l) <= 1e-12 * l.max(1.0));
            }
        }
    }

    // Interval endpoints map to the boundary supports.
    #[test]
    fn p_interval_endpoints_hit_boundaries(
        mu in 0.1f64..10.0,
        frac in 0.01f64..1.0,
        upper_ratio in 1.05f64..8.0,
    ) {
        let upper = mu * upper_ratio;
        let sigma2 = frac * mu * (upper - mu);
        let sigma = sigma2.sqrt();
        let (p_lo, p_hi) = feasible_p_interval(mu, sigma, upper).unwrap();
        prop_assert!(p_lo <= p_hi + 1e-15);
        let at_lo = two_point_from_p(mu, sigma, p_lo).unwrap();
        prop_assert!(at_lo.min_point().abs() <= 1e-9 * upper.max(1.0));
        let at_hi = two_point_from_p(mu, sigma, p_hi).unwrap();
        prop_assert!((at_hi.max_point() - upper).abs() <= 1e-9 * upper.max(1.0));
    }

    // Every schedule is nonincreasing, pinned at T(n) = 0, T(n-1) = mu, and
    // sandwiched between mu and the asymptotic payoff.
    #[test]
    fn schedules_respect_bounds(
        mu in 0.2f64..5.0,
        frac in 0.0f64..1.0,
        upper_ratio in 1.05f64..6.0,
        n in 1usize..40,
    ) {
        let upper = mu * upper_ratio;
        let specs = [
            AmbiguitySpec::mean_only(mu),
            AmbiguitySpec::mean_variance(mu, frac * mu * mu),
            AmbiguitySpec::two_point(mu, frac * mu * (upper - mu), upper),
            AmbiguitySpec::mean_var_support(mu, frac * mu * (upper - mu), upper),
            AmbiguitySpec::mean_mad(mu, frac * 1.95 * mu),
            AmbiguitySpec::mean_mad_support(mu, frac * 2.0 * mu * (upper - mu) / upper, upper),
        ];
        for spec in specs {
            let spec = spec.validate().unwrap();
            let (schedule, _) = closed_form_thresholds(&spec, n).unwrap();
            let limit = robust_stopping::thresholds::asymptotic_payoff(&spec);
            prop_assert_eq!(schedule.value(n), 0.0);
            prop_assert!((schedule.value(n - 1) - mu).abs() <= 1e-9 * mu.max(1.0));
            for i in 0..n {
                prop_assert!(schedule.value(i) >= schedule.value(i + 1) - 1e-12);
                prop_assert!(schedule.value(i) >= mu - 1e-9 * mu.max(1.0));
                prop_assert!(schedule.value(i) <= limit + 1e-9 * limit.max(1.0));
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Seeded sweeps
// ---------------------------------------------------------------------------

/// Certificates from random tuples across all regimes pass verification.
#[test]
fn certificates_verify_on_random_tuples() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for trial in 0..300 {
        let mu: f64 = rng.gen_range(0.2..4.0);
        let upper = mu * rng.gen_range(1.1..6.0);
        let xi = rng.gen_range(0.0..=1.0) * upper;

        let sigma2 = rng.gen_range(0.001..1.0) * mu * (upper - mu);
        let spec = AmbiguitySpec::mean_var_support(mu, sigma2, upper).validate().unwrap();
        let cert = mvs_worst_case(mu, sigma2, upper, xi).unwrap();
        let check = verify_certificate(&cert, &spec, 2000);
        assert!(
            check.passes(1e-9),
            "trial {trial}: mvs cert failed at mu={mu} s2={sigma2} L={upper} xi={xi}: {check:?}"
        );

        let d = rng.gen_range(0.001..1.0) * 2.0 * mu * (upper - mu) / upper;
        let spec = AmbiguitySpec::mean_mad_support(mu, d, upper).validate().unwrap();
        let cert = mad_worst_case(mu, d, upper, xi).unwrap();
        let check = verify_certificate(&cert, &spec, 2000);
        assert!(
            check.passes(1e-9),
            "trial {trial}: mad cert failed at mu={mu} d={d} L={upper} xi={xi}: {check:?}"
        );
    }
}

/// The closed-form schedules agree with the generic recursion driven by
/// their bound oracles.
#[test]
fn closed_forms_match_generic_recursion() {
    let mut rng = ChaCha8Rng::seed_from_u64(7341);
    for _ in 0..60 {
        let mu: f64 = rng.gen_range(0.3..3.0);
        let upper = mu * rng.gen_range(1.1..5.0);
        let n = rng.gen_range(1..30);
        let specs = [
            AmbiguitySpec::mean_var_support(mu, rng.gen_range(0.0..1.0) * mu * (upper - mu), upper),
            AmbiguitySpec::two_point(mu, rng.gen_range(0.0..1.0) * mu * (upper - mu), upper),
            AmbiguitySpec::mean_mad(mu, rng.gen_range(0.0..1.95) * mu),
            AmbiguitySpec::mean_mad_support(
                mu,
                rng.gen_range(0.0..1.0) * 2.0 * mu * (upper - mu) / upper,
                upper,
            ),
        ];
        for spec in specs {
            let spec = spec.validate().unwrap();
            let (closed, _) = closed_form_thresholds(&spec, n).unwrap();
            let generic =
                robust_thresholds_generic(&spec, n, closed_form_bound(&spec)).unwrap();
            for i in 0..=n {
                assert!(
                    (closed.value(i) - generic.value(i)).abs() <= 1e-9,
                    "kind {} i={i}: closed {} vs generic {}",
                    spec.kind.name(),
                    closed.value(i),
                    generic.value(i)
                );
            }
        }
    }
}

/// Grid minimization lands on an interval endpoint (up to one grid step)
/// and reproduces the two-point closed forms through the recursion.
#[test]
fn grid_search_agrees_with_endpoint_recursions() {
    let mut rng = ChaCha8Rng::seed_from_u64(5150);
    for _ in 0..40 {
        let mu: f64 = rng.gen_range(0.3..3.0);
        let upper = mu * rng.gen_range(1.1..5.0);
        let sigma2 = rng.gen_range(0.01..0.999) * mu * (upper - mu);
        let sigma = sigma2.sqrt();
        let (p_lo, p_hi) = feasible_p_interval(mu, sigma, upper).unwrap();
        let t_next = rng.gen_range(mu..=mu + sigma2 / mu);
        let r = grid_min_two_point(t_next, mu, sigma, (p_lo, p_hi), 3001).unwrap();
        let endpoint_min = two_point_step_objective(t_next, mu, sigma, p_lo)
            .min(two_point_step_objective(t_next, mu, sigma, p_hi));
        assert!((r.best_value - endpoint_min).abs() <= 1e-12 * endpoint_min.max(1.0));
        let to_edge = (r.best_p - p_lo).abs().min((r.best_p - p_hi).abs());
        assert!(to_edge <= r.grid_step + 1e-15);
    }
}
