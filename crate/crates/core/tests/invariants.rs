use gwlimits::asymptotics;
use gwlimits::ldp;
use gwlimits::{classify, OffspringLaw, Regime};
use proptest::prelude::*;

/// Random supercritical laws on {0..=5}.
fn supercritical() -> impl Strategy<Value = OffspringLaw> {
    prop::collection::vec(0.0f64..1.0, 6)
        .prop_filter_map("needs mean > 1 and a usable mass vector", |w| {
            let total: f64 = w.iter().sum();
            if total <= 0.0 {
                return None;
            }
            let probs: Vec<f64> = w.iter().map(|x| x / total).collect();
            let law = OffspringLaw::new(&probs).ok()?;
            (law.mean() > 1.05 && law.p(0) < 0.9).then_some(law)
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pgf_convex_and_increasing(law in supercritical()) {
        let vals: Vec<f64> = (0..=1000).map(|i| law.poly(i as f64 / 1000.0)).collect();
        for w in vals.windows(2) {
            prop_assert!(w[1] >= w[0] - 1e-15);
        }
        for w in vals.windows(3) {
            prop_assert!(w[2] - 2.0 * w[1] + w[0] >= -1e-13);
        }
        prop_assert!((vals[1000] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn iterate_semigroup(law in supercritical(), s in 0.0f64..1.0, a in 0u32..6, b in 0u32..6) {
        let lhs = law.pgf_iterate(a + b, s).unwrap();
        let rhs = law.pgf_iterate(a, law.pgf_iterate(b, s).unwrap()).unwrap();
        prop_assert!((lhs - rhs).abs() < 1e-10);
    }

    #[test]
    fn extinction_probability_is_fixed(law in supercritical()) {
        let c = classify(&law);
        prop_assert!(c.q < 1.0);
        prop_assert!((law.poly(c.q) - c.q).abs() < 1e-10);
    }

    #[test]
    fn schroeder_exponent(law in supercritical()) {
        let c = classify(&law);
        if c.regime != Regime::Boettcher {
            prop_assert!((c.gamma - c.m.powf(-c.alpha)).abs() < 1e-12);
        }
    }

    #[test]
    fn legendre_nonnegative_and_zero_at_mean(law in supercritical(), t in 0.02f64..0.98) {
        let (lo, hi) = (law.min_offspring() as f64, law.max_offspring() as f64);
        prop_assert!(ldp::legendre(&law, law.mean()).abs() < 1e-10);
        prop_assert!(ldp::legendre(&law, lo + (hi - lo) * t) >= -1e-12);
    }

    #[test]
    fn q_functional_equation(law in supercritical(), s in 0.0f64..0.9) {
        let c = classify(&law);
        prop_assume!(c.regime != Regime::Boettcher && c.gamma > 0.05);
        let q = |x| asymptotics::q_limit(&law, x, asymptotics::Q_TOLERANCE, asymptotics::Q_MAX_ITERATIONS).unwrap().value;
        let lhs = q(law.poly(s));
        let rhs = c.gamma * q(s);
        prop_assert!((lhs - rhs).abs() < 1e-7 * rhs.abs().max(1.0));
    }
}
