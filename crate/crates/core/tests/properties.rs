//! Property-based invariants over randomized domains.

use proptest::prelude::*;

use cutpoint_core::bifurcation::{self, CurvePoint};
use cutpoint_core::report::{parse_curve_csv, write_curve_csv};
use cutpoint_core::{ucp, CohortParam, Prevalence, Procedure};

fn continuous_procedures() -> impl Strategy<Value = Procedure> {
    prop_oneof![
        Just(Procedure::Dorfman),
        Just(Procedure::ModifiedDorfman),
        Just(Procedure::Sterrett),
        Just(Procedure::SquaredArray),
    ]
}

proptest! {
    /// The mean is the rate scaled by the cohort size, everywhere both are
    /// defined.
    #[test]
    fn mean_is_rate_times_cohort_size(
        proc in continuous_procedures(),
        n in 2.0f64..500.0,
        p in 1e-6f64..0.999,
    ) {
        prop_assume!(n > proc.c());
        let nv = CohortParam::new(n).unwrap();
        let pv = Prevalence::new(p).unwrap();
        let mean = proc.mean(nv, pv).unwrap();
        let rate = proc.rate(nv, pv).unwrap();
        let rel = (mean - rate * proc.cohort_size(n)).abs() / mean.abs().max(1e-300);
        prop_assert!(rel < 1e-12, "rel = {rel}");
    }

    /// The solved curve value is a genuine bracketed root: the rate crosses
    /// 1 from below exactly there, and the residual is tiny.
    #[test]
    fn solved_root_is_bracketed(
        proc in continuous_procedures(),
        n in 2.001f64..10_000.0,
    ) {
        prop_assume!(n > proc.c() + 1e-3);
        let p_n = bifurcation::solve_p_n(proc, n).unwrap();
        prop_assert!(p_n > 0.0 && p_n <= ucp());
        let rate_at = |p: f64| proc.rate(CohortParam::new(n).unwrap(), Prevalence::new(p).unwrap()).unwrap();
        prop_assert!((rate_at(p_n) - 1.0).abs() < bifurcation::RESIDUAL_TOL);
        if p_n + 1e-6 < 1.0 {
            prop_assert!(rate_at(p_n + 1e-6) > 1.0);
        }
        if p_n - 1e-6 > 0.0 {
            prop_assert!(rate_at(p_n - 1e-6) < 1.0);
        }
    }

    /// Curve CSV round-trips to at least 12 significant digits.
    #[test]
    fn curve_csv_round_trip(
        rows in prop::collection::vec(
            (2.0f64..1e6, 1e-12f64..0.4, -1.0f64..1.0, 0.0f64..1e-10),
            1..40,
        )
    ) {
        let curve = bifurcation::BifurcationCurve {
            procedure: "dorfman".to_string(),
            points: rows
                .iter()
                .map(|&(n, p_n, dp_dn, residual)| CurvePoint { n, p_n, dp_dn, residual })
                .collect(),
            n_domain: (2.0, 1e6),
        };
        let mut buf = Vec::new();
        write_curve_csv(&mut buf, &curve).unwrap();
        let parsed = parse_curve_csv(buf.as_slice()).unwrap();
        prop_assert_eq!(parsed.len(), curve.points.len());
        for (orig, back) in curve.points.iter().zip(&parsed) {
            prop_assert!((orig.n - back.n).abs() <= 1e-11 * orig.n.abs());
            prop_assert!((orig.p_n - back.p_n).abs() <= 1e-11 * orig.p_n.abs());
            prop_assert!((orig.dp_dn - back.dp_dn).abs() <= 1e-11 * orig.dp_dn.abs().max(1e-300));
            prop_assert!((orig.residual - back.residual).abs() <= 1e-11 * orig.residual.abs().max(1e-300));
        }
    }
}
