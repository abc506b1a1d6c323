//! Independently derived reference values, frozen.

use lgstab::builtins::{builtin, with_param, Model};
use lgstab::critical::{all_critical_points, k_float, validate_chamber};
use lgstab::exp_laurent::CriticalAsymptotics;
use lgstab::num::{Cx, Q};
use lgstab::stability::{destabilizes, quotient_slope_intersection, residue_pairing, tropical};
use std::collections::BTreeMap;

fn q(n: i64, d: i64) -> Q {
    Q::from((n, d))
}

fn model(name: &str) -> Model {
    builtin(name, &BTreeMap::new()).unwrap()
}

/// Self-intersections from `v_{i-1} + v_{i+1} = a_i v_i`, found by search over
/// rays sorted by angle: `D_i^2 = -a_i`.
fn fan_self_intersections(rays: &[(i64, i64)]) -> Vec<i64> {
    let mut order: Vec<usize> = (0..rays.len()).collect();
    order.sort_by(|&i, &j| {
        let a = (rays[i].1 as f64).atan2(rays[i].0 as f64);
        let b = (rays[j].1 as f64).atan2(rays[j].0 as f64);
        a.total_cmp(&b)
    });
    let n = rays.len();
    let mut out = vec![0; n];
    for (pos, &i) in order.iter().enumerate() {
        let prev = rays[order[(pos + n - 1) % n]];
        let next = rays[order[(pos + 1) % n]];
        let sum = (prev.0 + next.0, prev.1 + next.1);
        let a = (-10..=10).find(|a| (a * rays[i].0, a * rays[i].1) == sum).expect("smooth fan");
        out[i] = -a;
    }
    out
}

fn self_intersections_by_name(m: &Model) -> BTreeMap<String, Q> {
    let s = &m.surface;
    s.boundary_names.iter().zip(&s.boundary).map(|(n, d)| (n.clone(), s.intersection_number(d, d).unwrap())).collect()
}

#[test]
fn self_intersections_follow_fan_relations() {
    for name in ["p2", "blp_p2", "blpq_p2", "p1xp1_blowup", "iterated_blowup"] {
        let m = model(name);
        let fan = m.surface.fan.as_ref().unwrap();
        let oracle = fan_self_intersections(&fan.rays);
        let got = self_intersections_by_name(&m);
        for (n, want) in fan.names.iter().zip(oracle) {
            assert_eq!(got[n], Q::from(want), "{name} {n}");
        }
    }
}

#[test]
fn frozen_self_intersections() {
    let blp = self_intersections_by_name(&model("blp_p2"));
    assert_eq!(blp["E"], -1);
    let p1 = self_intersections_by_name(&model("p1xp1_blowup"));
    for (n, v) in [("H1", 0), ("H2", 0), ("L1", -1), ("L2", -1), ("E", -1)] {
        assert_eq!(p1[n], v, "{n}");
    }
    let p2 = self_intersections_by_name(&model("p2"));
    assert!(p2.values().all(|v| *v == 1));
}

#[test]
fn canonical_classes() {
    let p2 = model("p2");
    let h = p2.surface.boundary[0].clone();
    for d in &p2.surface.boundary {
        assert_eq!(p2.surface.intersection_number(&p2.surface.canonical_class(), d).unwrap(), -3);
        assert_eq!(p2.surface.intersection_number(&h, d).unwrap(), 1);
    }
    let blp = model("blp_p2");
    let e = blp.class("E").unwrap();
    assert_eq!(blp.surface.intersection_number(&blp.surface.canonical_class(), &e).unwrap(), -1);
}

#[test]
fn kahler_degrees_on_one_point_blowup() {
    let m = model("blp_p2");
    assert!(m.surface.is_kahler(&m.omega));
    let mut degrees: Vec<Q> = m.surface.boundary.iter().map(|d| m.surface.degree(&m.omega, d).unwrap()).collect();
    degrees.sort();
    assert_eq!(degrees, vec![q(1, 2), q(1, 2), q(1, 2), q(1, 1)]);
}

#[test]
fn slope_constant_of_plane() {
    let m = model("p2");
    assert_eq!(m.surface.slope_mu(&m.omega).unwrap(), 3);
}

#[test]
fn exceptional_theta_values() {
    let m = model("blp_p2");
    let idx = m.chart.theta_names.iter().position(|n| n == "E").unwrap();
    let theta = &m.chart.thetas[idx];
    let v = theta.evaluate(&k_float(2.0), (&Cx::from_f64(1.0, 0.0), &Cx::from_f64(1.0, 0.0))).unwrap();
    let (re, im) = v.to_c64();
    assert!((re - (-2.0 * std::f64::consts::PI).exp()).abs() < 1e-18 && im == 0.0);

    let along = CriticalAsymptotics {
        beta: (q(0, 1), q(0, 1)),
        alpha: (Cx::from_f64(-1.0, 0.0), Cx::from_f64(-1.0, 0.0)),
        leading_system: (vec![], vec![]),
        multiplicity: 1,
        family: 0,
    };
    let (amp, rate) = theta.restrict_along(&along).leading().unwrap();
    assert_eq!(rate, q(-1, 2));
    assert_eq!(amp.to_c64(), (1.0, 0.0));
}

#[test]
fn square_of_one_point_blowup_potential() {
    let m = model("blp_p2");
    let sq = m.chart.potential.mul(&m.chart.potential);
    let c = sq.coefficient((2, 2)).unwrap();
    let (amp, rate) = c.leading().unwrap();
    assert_eq!(rate, q(-1, 1));
    assert_eq!(amp.to_c64(), (1.0, 0.0));
    assert_eq!(c.len(), 1);
}

#[test]
fn degree_five_theta_five() {
    let delta = q(1, 10);
    let mut params = BTreeMap::new();
    params.insert("a1".to_string(), q(1, 2));
    for p in ["a2", "a3", "a4"] {
        params.insert(p.to_string(), delta.clone());
    }
    let m = builtin("dp5", &params).unwrap();
    let theta = &m.chart.thetas[4];
    assert_eq!(theta.len(), 2);
    let one = q(1, 1);
    let half = q(1, 2);
    let (a, ra) = theta.coefficient((0, -1)).unwrap().leading().unwrap();
    let (b, rb) = theta.coefficient((1, -1)).unwrap().leading().unwrap();
    assert_eq!(ra, -Q::from(&one - &delta));
    assert_eq!(rb, -Q::from(&half - &delta));
    assert_eq!(a.to_c64(), (1.0, 0.0));
    assert_eq!(b.to_c64(), (1.0, 0.0));
}

#[test]
fn margins_positive_inside_chamber() {
    let m = with_param("blp_p2", "q", &q(3, 5)).unwrap();
    let fams = tropical(&m).unwrap();
    let report = validate_chamber(&m.chart.potential, &fams).unwrap();
    assert!(!report.wall);
    assert!(report.families.iter().all(|f| f.margins.iter().all(|g| *g > 0)));
}

#[test]
fn torus_solution_count() {
    let m = model("blp_p2");
    assert_eq!(all_critical_points(&m.chart.potential, 2.0).unwrap().len(), 4);
}

#[test]
fn theta_pairings_on_one_point_blowup() {
    let m = model("blp_p2");
    let mut pts = all_critical_points(&m.chart.potential, 3.0).unwrap();
    lgstab::critical::label_points(&mut pts, &tropical(&m).unwrap());
    let theta = |n: &str| &m.chart.thetas[m.chart.theta_names.iter().position(|x| x == n).unwrap()];
    let ee = residue_pairing(theta("E"), theta("E"), &m, &pts).unwrap().to_c64();
    let he = residue_pairing(theta("H"), theta("E"), &m, &pts).unwrap().to_c64();
    assert!((ee.0 + 1.0).abs() < 1e-6 && ee.1.abs() < 1e-6);
    assert!(he.0.abs() < 1e-6 && he.1.abs() < 1e-6);
}

#[test]
fn slope_numerator_and_plane_verdict() {
    let m = model("blp_p2");
    let e = m.class("E").unwrap();
    let s = &m.surface;
    let c = q(1, 2);
    let wz = s.intersection_number(&m.omega, &e).unwrap();
    let kz = s.intersection_number(&s.canonical_class(), &e).unwrap();
    let zz = s.intersection_number(&e, &e).unwrap();
    let numerator = Q::from(3) * (Q::from(&wz * 2) - Q::from(&c * Q::from(&kz + &zz)));
    assert_eq!(numerator, 6);

    let p2 = model("p2");
    let h = p2.surface.boundary[0].clone();
    assert_eq!(quotient_slope_intersection(&p2.surface, &p2.omega, &h, &c).unwrap(), q(18, 5));
    let (destab, _) = destabilizes(&p2.surface, &p2.omega, &h, &c).unwrap();
    assert!(!destab);
}
