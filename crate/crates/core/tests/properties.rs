//! Property-based invariants on quadrature, measures, weights, and the
//! bound ordering, over randomized inputs.

use proptest::prelude::*;

use hh_bounds::bounds::{all_bounds, th_weights};
use hh_bounds::convex::ConvexFn;
use hh_bounds::karamata::{InequalityKind, InequalitySpec};
use hh_bounds::measure::{HalfOpenSpec, Interval, Measure};
use hh_bounds::quad::{self, QuadConfig};
use hh_bounds::VeeParams;

fn unit() -> Interval {
    Interval::new(0.0, 1.0).unwrap()
}

fn discrete_strategy() -> impl Strategy<Value = Measure> {
    prop::collection::vec((0.02f64..0.98, 0.05f64..1.0), 3..=8).prop_filter_map(
        "distinct atom locations",
        |pts| {
            let mut xs: Vec<f64> = pts.iter().map(|&(x, _)| x).collect();
            xs.sort_by(|l, r| l.partial_cmp(r).unwrap());
            if xs.windows(2).any(|w| w[1] - w[0] < 1e-3) {
                return None;
            }
            let total: f64 = pts.iter().map(|&(_, w)| w).sum();
            let mut pts: Vec<(f64, f64)> = pts.iter().map(|&(x, w)| (x, w / total)).collect();
            pts.sort_by(|l, r| l.0.partial_cmp(&r.0).unwrap());
            Measure::discrete(unit(), &pts).ok()
        },
    )
}

fn measure_strategy() -> impl Strategy<Value = Measure> {
    prop_oneof![
        Just(Measure::uniform(unit()).unwrap()),
        Just(Measure::beta22().unwrap()),
        (0.2f64..3.0).prop_map(|l| Measure::trunc_exp(l).unwrap()),
        discrete_strategy(),
    ]
}

fn convex_strategy() -> impl Strategy<Value = ConvexFn> {
    prop_oneof![
        Just(ConvexFn::square()),
        Just(ConvexFn::exp()),
        (1.2f64..4.0).prop_map(|p| ConvexFn::powp(p).unwrap()),
        (0.1f64..0.9).prop_map(ConvexFn::pivot_abs),
        (-1.0f64..1.0, -1.0f64..1.0, 0.1f64..0.9, 0.05f64..1.0).prop_map(|(a, b, t, gap)| {
            ConvexFn::vee(
                VeeParams {
                    alpha: a,
                    tau: a.min(b) - gap,
                    beta: b,
                    t,
                },
                unit(),
            )
            .unwrap()
        }),
        (-2.0f64..2.0, -1.0f64..1.0).prop_map(|(s, c)| ConvexFn::affine(s, c)),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Splitting the domain never changes the integral beyond tolerance.
    #[test]
    fn quadrature_additivity(split in 0.1f64..0.9, freq in 1.0f64..8.0) {
        let cfg = QuadConfig::default();
        let f = |x: f64| (freq * x).sin().exp();
        let whole = quad::integrate(f, 0.0, 1.0, &cfg).unwrap().value;
        let left = quad::integrate(f, 0.0, split, &cfg).unwrap().value;
        let right = quad::integrate(f, split, 1.0, &cfg).unwrap().value;
        prop_assert!((whole - left - right).abs() < 1e-9);
    }

    /// Stieltjes integration over a purely atomic measure is an exact sum.
    #[test]
    fn stieltjes_atomic_exact(m in discrete_strategy()) {
        let cfg = QuadConfig::default();
        let got = quad::integrate_stieltjes(
            |x| x * x + 1.0, &[], &m, 0.0, 1.0, HalfOpenSpec::CLOSED, &cfg,
        ).unwrap().value;
        let want: f64 = m.atoms().iter().map(|a| a.p * (a.x * a.x + 1.0)).sum();
        prop_assert!((got - want).abs() < 1e-13);
    }

    /// Three-point weights are a probability vector for every admissible
    /// pivot: nonnegative and summing to one.
    #[test]
    fn weights_form_probability_vector(m in measure_strategy(), t in 0.05f64..0.95) {
        let w = th_weights(&m, t).unwrap();
        prop_assert!(w.p_a >= -1e-12 && w.p_t >= -1e-12 && w.p_b >= -1e-12);
        prop_assert!((w.p_a + w.p_t + w.p_b - 1.0).abs() < 1e-10);
    }

    /// The sandwich ordering holds for every random triple.
    #[test]
    fn sandwich_ordering(m in measure_strategy(), f in convex_strategy(), t in 0.05f64..0.95) {
        let b = all_bounds(&m, &f, t).unwrap();
        prop_assert!(b.jensen_lower <= b.integral + 1e-9);
        prop_assert!(b.integral <= b.th_upper + 1e-9);
        prop_assert!(b.th_upper <= b.h_upper + 1e-9);
    }

    /// phi is nonnegative and closes at both endpoints for derived specs.
    #[test]
    fn phi_dominance_random(m in measure_strategy(), t in 0.05f64..0.95) {
        for kind in [InequalityKind::J, InequalityKind::H, InequalityKind::Th { t }] {
            let spec = InequalitySpec::derive(kind, &m).unwrap();
            prop_assert!(spec.dominance_test(101).unwrap());
        }
    }
}
