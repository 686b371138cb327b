use proptest::prelude::*;

use radial_control::hjb::{self, HjbStatus};
use radial_control::montecarlo::{estimate, radial_oracle, BIAS_ALLOWANCE};
use radial_control::origin::{classify_declared, classify_origin, OriginRegime};
use radial_control::quadrature::adaptive_simpson;
use radial_control::switching::build_schedule;
use radial_control::value::solve;
use radial_control::{
    Case, ControlPolicy, CostKind, Error, OriginGrowth, OriginMonotone, PointLabel, RadialCost,
    SimConfig,
};

/// Continuous piecewise cubic on `(0, radius)` with up to two knots.
fn piecewise_cubic() -> impl Strategy<Value = RadialCost> {
    (
        0.5f64..3.0,
        prop::collection::vec(0.1f64..0.9, 0..=2),
        prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 4), 3),
    )
        .prop_filter_map("needs a usable cost", |(radius, mut knots, raw)| {
            knots.sort_by(f64::total_cmp);
            knots.dedup_by(|a, b| (*a - *b).abs() < 0.05);
            let knots: Vec<f64> = knots.into_iter().map(|k| k * radius).collect();
            let mut coeffs = vec![raw[0].clone()];
            for (i, &b) in knots.iter().enumerate() {
                let prev = coeffs[i].clone();
                let mut next = raw[i + 1].clone();
                let eval = |c: &[f64]| c.iter().rev().fold(0.0, |acc, &a| acc * b + a);
                next[0] += eval(&prev) - eval(&next);
                coeffs.push(next);
            }
            if coeffs[0][1].abs() < 0.1 {
                return None;
            }
            let cost = RadialCost::polynomial(knots, coeffs, radius).ok()?;
            (derivative_sign_changes(&cost, 10_000) <= 4).then_some(cost)
        })
}

fn derivative_sign_changes(cost: &RadialCost, n: usize) -> usize {
    let radius = cost.radius();
    let signs: Vec<f64> = (1..n)
        .map(|i| cost.right_derivative(radius * i as f64 / n as f64))
        .filter(|d| *d != 0.0)
        .map(f64::signum)
        .collect();
    signs.windows(2).filter(|w| w[0] != w[1]).count()
}

/// `∫_a^b f` by quadrature split at the cost's kinks.
fn quad_f(cost: &RadialCost, a: f64, b: f64) -> f64 {
    let mut cuts = vec![a];
    cuts.extend(cost.kinks().into_iter().filter(|k| *k > a && *k < b));
    cuts.push(b);
    cuts.windows(2)
        .map(|w| adaptive_simpson(|s| cost.value(s), w[0], w[1], 1e-13))
        .sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn random_schedules_are_well_formed(cost in piecewise_cubic()) {
        let schedule = build_schedule(&cost).unwrap();
        let radius = cost.radius();
        let first = match schedule.case {
            Case::I => PointLabel::R,
            Case::II => PointLabel::S,
        };
        let mut prev = 0.0;
        for (i, p) in schedule.points.iter().enumerate() {
            let expected = if i % 2 == 0 { first } else if first == PointLabel::R { PointLabel::S } else { PointLabel::R };
            prop_assert_eq!(p.label, expected);
            prop_assert!(p.value > prev && p.value < radius);
            let s_prev = prev;
            prev = p.value;
            match p.label {
                PointLabel::R => {
                    let r = p.value;
                    let seed = if s_prev == 0.0 { 0.0 } else { s_prev * cost.value(s_prev) };
                    let g = seed + quad_f(&cost, s_prev, r) - r * cost.value(r);
                    prop_assert!(g.abs() <= 1e-8, "g(r) = {g} at r = {r}");
                    prop_assert!(cost.right_derivative(r) <= 1e-8);
                }
                PointLabel::S => {
                    let s = p.value;
                    prop_assert!(cost.right_derivative(s) >= 0.0);
                    prop_assert!(cost.right_derivative(s - 1e-7 * radius) <= 1e-5);
                }
            }
        }
        let again = build_schedule(&cost).unwrap();
        prop_assert_eq!(&schedule, &again);

        let v = solve(&cost).unwrap();
        let fit = v.check_fit();
        prop_assert!(fit.pass, "{:?}", fit.entries);
        prop_assert!(v.eval(radius).unwrap().abs() <= 1e-8);
        let report = hjb::verify(&v, &cost).unwrap();
        prop_assert_eq!(report.status, HjbStatus::Pass, "max violation {}", report.max_violation);
    }
}

fn analytic_costs() -> Vec<RadialCost> {
    vec![
        RadialCost::sinusoid(6.0).unwrap(),
        RadialCost::step_decreasing(0.5, 1.0).unwrap(),
        RadialCost::step_increasing(0.3, 1.0).unwrap(),
        RadialCost::power_law(0.5, 1.0, 1.0).unwrap(),
        RadialCost::power_law(1.5, 1.0, 2.0).unwrap(),
        RadialCost::power_law(2.5, -1.0, 1.0).unwrap(),
        RadialCost::polynomial(vec![0.4], vec![vec![1.0, -2.0, 0.5], vec![0.28, 1.6, -4.0]], 1.0).unwrap(),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn quadrature_matches_antiderivatives(u in 0.0f64..1.0, w in 0.0f64..1.0) {
        for cost in analytic_costs() {
            let radius = cost.radius();
            let (a, b) = (radius * (0.001 + 0.998 * u.min(w)), radius * (0.001 + 0.998 * u.max(w)));
            let qf = cost.integral_f_quadrature(a, b).unwrap();
            let af = cost.integral_f(a, b).unwrap();
            prop_assert!((qf - af).abs() <= 1e-9, "{:?} f on [{a}, {b}]: {qf} vs {af}", cost.kind());
            let qs = cost.integral_sf_quadrature(a, b).unwrap();
            let as_ = cost.integral_sf(a, b).unwrap();
            prop_assert!((qs - as_).abs() <= 1e-9, "{:?} sf on [{a}, {b}]: {qs} vs {as_}", cost.kind());
        }
    }

    #[test]
    fn power_law_growth_follows_thresholds(alpha in 0.05f64..3.5, positive in any::<bool>()) {
        let sign = if positive { 1.0 } else { -1.0 };
        let cost = RadialCost::power_law(alpha, sign, 1.0).unwrap();
        let expected = match (positive, alpha) {
            (_, a) if a < 1.0 => OriginGrowth::IntegrableF,
            (true, a) if a < 2.0 => OriginGrowth::IntegrableSFOnly,
            (true, _) => OriginGrowth::NonIntegrableSF,
            (false, _) => OriginGrowth::NegativeNonIntegrable,
        };
        prop_assert_eq!(cost.origin_growth(), expected);
        for g in OriginGrowth::ALL.into_iter().filter(|g| *g != expected) {
            let declared = RadialCost::with_declared(
                CostKind::PowerLaw { alpha, sign }, 1.0, 2, Some(g), None, None,
            );
            prop_assert!(matches!(declared, Err(Error::InconsistentDeclaration(_))));
        }
    }

    #[test]
    fn sinusoid_sign_changes_match_kind(radius in 0.5f64..20.0) {
        let cost = RadialCost::sinusoid(radius).unwrap();
        prop_assert_eq!(Some(derivative_sign_changes(&cost, 10_000)), cost.derivative_sign_changes());
    }

    #[test]
    fn classification_is_total(m in 0usize..2, g in 0usize..5, d in 2usize..8) {
        let monotone = [OriginMonotone::IncreasingNearZero, OriginMonotone::DecreasingNearZero][m];
        let growth = OriginGrowth::ALL[g];
        let result = classify_declared(monotone, growth, d);
        let reference = classify_declared(monotone, growth, d.min(3));
        prop_assert_eq!(result.is_ok(), reference.is_ok());
        if let (Ok(a), Ok(b)) = (result, reference) {
            prop_assert_eq!(a, b);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(30))]

    #[test]
    fn decreasing_cost_value_is_tangential_integral(
        a in -2.0f64..2.0, b in 0.1f64..3.0, c in 0.0f64..3.0, radius in 0.5f64..2.0,
    ) {
        let cost = RadialCost::polynomial(vec![], vec![vec![a, -b, 0.0, -c]], radius).unwrap();
        let v = solve(&cost).unwrap();
        prop_assert!(v.schedule().is_empty());
        for k in 0..=20 {
            let r = if k == 20 { radius } else { radius * k as f64 / 20.0 };
            let want = 2.0 * adaptive_simpson(|s| s * cost.value(s), r, radius, 1e-13);
            prop_assert!((v.eval(r).unwrap() - want).abs() <= 1e-8);
        }
    }

    #[test]
    fn increasing_cost_value_is_radial_double_integral(
        a in -2.0f64..2.0, b in 0.1f64..3.0, c in 0.0f64..3.0, radius in 0.5f64..2.0,
    ) {
        let cost = RadialCost::polynomial(vec![], vec![vec![a, b, 0.0, c]], radius).unwrap();
        let v = solve(&cost).unwrap();
        prop_assert!(v.schedule().is_empty());
        let inner = |s: f64| adaptive_simpson(|t| cost.value(t), 0.0, s, 1e-13);
        for k in 0..=20 {
            let r = if k == 20 { radius } else { radius * k as f64 / 20.0 };
            let want = 2.0 * adaptive_simpson(inner, r, radius, 1e-11);
            prop_assert!((v.eval(r).unwrap() - want).abs() <= 1e-8);
        }
    }

    #[test]
    fn finite_origin_value_is_continuous(alpha in 0.05f64..1.95, positive in any::<bool>(), d in 2usize..5) {
        let sign = if positive { 1.0 } else { -1.0 };
        let cost = RadialCost::power_law(alpha, sign, 1.0).unwrap().with_dimension(d).unwrap();
        let Ok(c) = classify_origin(&cost) else {
            return Ok(());
        };
        if c.regime == OriginRegime::FiniteEqualsV {
            let v0 = c.v0.unwrap();
            let v = solve(&cost).unwrap();
            let [a, b, c] = [1e-6, 1e-7, 1e-8].map(|r| v.eval(r).unwrap());
            // Aitken extrapolation of V(r) -> V(0) along r = 10^-k.
            let (d1, d2) = (b - a, c - b);
            let limit = if d1 == 0.0 { c } else { c + d2 * d2 / (d1 - d2) };
            prop_assert!((v0 - limit).abs() <= 1e-3 * v0.abs().max(1e-12), "v0={v0} limit={limit}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10))]

    #[test]
    fn radial_estimates_match_oracle(a in -2.0f64..2.0, b in -3.0f64..3.0, c in -3.0f64..3.0, x0 in 0.0f64..0.9) {
        let cost = RadialCost::polynomial(vec![], vec![vec![a, b, c]], 1.0).unwrap();
        let cfg = SimConfig { dt: 2.5e-4, n_paths: 20_000, seed: 7, ..SimConfig::default() };
        let est = estimate(&cost, &ControlPolicy::PureRadial, x0, &cfg).unwrap().cost;
        let oracle = radial_oracle(&cost, x0);
        let tol = 3.0 * est.std_error + BIAS_ALLOWANCE;
        prop_assert!((est.mean - oracle).abs() <= tol, "mean {} oracle {oracle} tol {tol}", est.mean);
    }
}

#[test]
fn estimates_do_not_depend_on_thread_count() {
    let cost = RadialCost::sinusoid(2.0).unwrap();
    let policy = ControlPolicy::optimal(&cost).unwrap();
    let cfg = SimConfig {
        dt: 1e-3,
        n_paths: 3000,
        seed: 42,
        ..SimConfig::default()
    };
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| estimate(&cost, &policy, 0.3, &cfg).unwrap())
    };
    let one = run(1);
    let three = run(3);
    assert_eq!(one.cost.mean.to_bits(), three.cost.mean.to_bits());
    assert_eq!(one.cost.std_error.to_bits(), three.cost.std_error.to_bits());
    assert_eq!(one.exit_time.mean.to_bits(), three.exit_time.mean.to_bits());
    let other_seed = estimate(&cost, &policy, 0.3, &SimConfig { seed: 43, ..cfg.clone() }).unwrap();
    assert_ne!(one.cost.mean, other_seed.cost.mean);
}
