use lgstab::builtins::{builtin, with_param};
use lgstab::config::parse_class_expr;
use lgstab::critical::{all_critical_points, k_float, tropical_critical_points, TieMode};
use lgstab::exp_laurent::{CriticalAsymptotics, ExpLaurentPoly, ExpScalar};
use lgstab::num::{fmt_rational, parse_rational, Cx, Q};
use lgstab::stability::{destabilizes, df_intersection, extrapolate, TestConfigQuadratic};
use lgstab::surface::DivisorClass;
use proptest::prelude::*;
use std::collections::BTreeMap;

fn rational() -> impl Strategy<Value = Q> {
    (-40i64..40, 1i64..12).prop_map(|(n, d)| Q::from((n, d)))
}

fn scalar() -> impl Strategy<Value = ExpScalar> {
    prop::collection::vec((rational(), -5i32..6), 1..4).prop_map(|terms| {
        let mut s = ExpScalar::zero();
        for (r, c) in terms {
            s.add_term(Q::from(&r / 8), Cx::from_f64(f64::from(c), 0.0));
        }
        s
    })
}

fn laurent() -> impl Strategy<Value = ExpLaurentPoly> {
    prop::collection::vec(((-2i64..3, -2i64..3), scalar()), 1..5).prop_map(|monos| {
        let mut p = ExpLaurentPoly::zero();
        for (e, c) in monos {
            p.add_monomial(e, &c);
        }
        p
    })
}

fn point() -> impl Strategy<Value = (Cx, Cx)> {
    (0.3f64..2.0, -3.0f64..3.0, 0.3f64..2.0, -3.0f64..3.0).prop_map(|(r1, a1, r2, a2)| {
        (Cx::from_f64(r1 * a1.cos(), r1 * a1.sin()), Cx::from_f64(r2 * a2.cos(), r2 * a2.sin()))
    })
}

fn rel_gap(a: &Cx, b: &Cx) -> f64 {
    (a - b).abs_f64() / a.abs_f64().max(b.abs_f64()).max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn rationals_round_trip(q in rational()) {
        let text = fmt_rational(&q);
        prop_assert_eq!(parse_rational(&text), Some(q));
    }

    #[test]
    fn laurent_json_round_trip(p in laurent()) {
        let back = ExpLaurentPoly::from_json(&p.to_json()).unwrap();
        prop_assert_eq!(back, p);
    }

    #[test]
    fn evaluation_respects_products(f in laurent(), g in laurent(), pt in point(), k in 0.2f64..1.5) {
        let kf = k_float(k);
        let lhs = f.mul(&g).evaluate(&kf, (&pt.0, &pt.1)).unwrap();
        let rhs = &f.evaluate(&kf, (&pt.0, &pt.1)).unwrap() * &g.evaluate(&kf, (&pt.0, &pt.1)).unwrap();
        prop_assert!(rel_gap(&lhs, &rhs) < 1e-60);
        let sum = f.add(&g).evaluate(&kf, (&pt.0, &pt.1)).unwrap();
        let parts = &f.evaluate(&kf, (&pt.0, &pt.1)).unwrap() + &g.evaluate(&kf, (&pt.0, &pt.1)).unwrap();
        prop_assert!(rel_gap(&sum, &parts) < 1e-60);
    }

    #[test]
    fn restriction_is_multiplicative(
        f in laurent(),
        g in laurent(),
        b0 in rational(),
        b1 in rational(),
        pt in point(),
        k in 0.2f64..1.5,
    ) {
        let a = CriticalAsymptotics {
            beta: (Q::from(&b0 / 16), Q::from(&b1 / 16)),
            alpha: pt,
            leading_system: (vec![], vec![]),
            multiplicity: 1,
            family: 0,
        };
        let kf = k_float(k);
        let prod = f.mul(&g).restrict_along(&a).evaluate(&kf).unwrap();
        let split = &f.restrict_along(&a).evaluate(&kf).unwrap() * &g.restrict_along(&a).evaluate(&kf).unwrap();
        prop_assert!(rel_gap(&prod, &split) < 1e-60);
    }

    #[test]
    fn intersection_form_is_symmetric_and_bilinear(
        a in prop::collection::vec(-5i64..6, 4),
        b in prop::collection::vec(-5i64..6, 4),
        c in prop::collection::vec(-5i64..6, 4),
        t in rational(),
    ) {
        let m = builtin("blp_p2", &BTreeMap::new()).unwrap();
        let s = &m.surface;
        let (a, b, c) = (DivisorClass::from_ints(&a), DivisorClass::from_ints(&b), DivisorClass::from_ints(&c));
        prop_assert_eq!(s.intersection_number(&a, &b).unwrap(), s.intersection_number(&b, &a).unwrap());
        let lhs = s.intersection_number(&a.add(&b.scale(&t)), &c).unwrap();
        let rhs = s.intersection_number(&a, &c).unwrap() + t * s.intersection_number(&b, &c).unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn quadratic_intersection_matches_pairing(
        a in prop::collection::vec(-4i64..5, 5),
        b in prop::collection::vec(-4i64..5, 5),
    ) {
        let m = builtin("blpq_p2", &BTreeMap::new()).unwrap();
        let (a, b) = (DivisorClass::from_ints(&a), DivisorClass::from_ints(&b));
        let tc = TestConfigQuadratic::product(&a, &b);
        prop_assert_eq!(df_intersection(&m.surface, &tc).unwrap(), m.surface.intersection_number(&a, &b).unwrap());
    }

    #[test]
    fn class_expressions_are_linear(c in prop::collection::vec(-6i64..7, 4)) {
        let m = builtin("blp_p2", &BTreeMap::new()).unwrap();
        let names = ["H", "L1", "E", "L2"];
        let expr: Vec<String> = c.iter().zip(names).map(|(v, n)| format!("{v}*{n}")).collect();
        let parsed = parse_class_expr(&expr.join(" + "), &m).unwrap();
        let mut want = DivisorClass::zero(m.surface.dim());
        for (v, n) in c.iter().zip(names) {
            want = want.add(&m.class(n).unwrap().scale(&Q::from(*v)));
        }
        prop_assert_eq!(parsed, want);
    }

    #[test]
    fn verdict_is_scale_invariant(n in 1i64..40, lambda in (1i64..9, 1i64..9)) {
        let m = builtin("blp_p2", &BTreeMap::new()).unwrap();
        let s = Q::from((n, 41));
        let l = Q::from(lambda);
        for z in ["E", "H", "L1"] {
            let z = m.class(z).unwrap();
            let (base, margin) = destabilizes(&m.surface, &m.omega, &z, &s).unwrap();
            let (scaled, scaled_margin) =
                destabilizes(&m.surface, &m.omega.scale(&l), &z, &Q::from(&s * &l)).unwrap();
            prop_assert_eq!(base, scaled);
            prop_assert_eq!(margin == 0, scaled_margin == 0);
        }
    }

    #[test]
    fn extrapolation_recovers_exponential_tails(limit in -5.0f64..5.0, amp in -3.0f64..3.0, rate in 0.3f64..2.0) {
        let ks = [3.0, 5.0, 8.0];
        let values: Vec<f64> = ks.iter().map(|k| limit + amp * (-rate * k).exp()).collect();
        prop_assert!((extrapolate(&ks, &values) - limit).abs() < 1e-6);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn critical_counts_match_rays_across_chambers(n in 10i64..88, k in 2u32..6) {
        let m = with_param("blp_p2", "q", &Q::from((n, 97))).unwrap();
        let pts = all_critical_points(&m.chart.potential, f64::from(k)).unwrap();
        prop_assert_eq!(pts.len(), 4);
        prop_assert!(pts.iter().all(|p| p.nondegenerate));
        let fams = tropical_critical_points(&m.chart.potential, TieMode::Strict).unwrap();
        let branches: usize = fams.iter().map(|f| f.branches.len()).sum();
        prop_assert_eq!(branches, 4);
    }
}
