//! Named example surfaces with their Kähler parameters and mirror charts.

use crate::critical::TieMode;
use crate::mirror::{deg4_mirror, deg5_mirror, potential, MirrorChart, MirrorError, Positivity};
use crate::num::{fmt_rational, q, qi, Q};
use crate::surface::{build_toric_surface, DivisorClass, GeometryError, Surface};
use std::collections::BTreeMap;
use thiserror::Error;

pub const BUILTIN_NAMES: [&str; 7] = ["p2", "blp_p2", "blpq_p2", "p1xp1_blowup", "iterated_blowup", "dp5", "dp4"];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("unknown built-in surface `{0}`")]
    UnknownSurface(String),
    #[error("surface `{surface}` has no parameter `{param}`")]
    UnknownParameter { surface: String, param: String },
    #[error(transparent)]
    Mirror(#[from] MirrorError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// A polarised surface together with its mirror chart.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub name: String,
    pub surface: Surface,
    pub omega: DivisorClass,
    pub chart: MirrorChart,
    pub params: BTreeMap<String, Q>,
    pub tie_mode: TieMode,
}

impl Model {
    /// Anticanonical class strictly positive on all test curves.
    pub fn is_fano(&self) -> bool {
        self.surface.is_kahler(&self.surface.anticanonical)
    }

    pub fn is_toric(&self) -> bool {
        self.surface.is_toric()
    }

    pub fn class(&self, name: &str) -> Result<DivisorClass, GeometryError> {
        self.surface.class_by_name(name)
    }

    pub fn describe_params(&self) -> String {
        self.params.iter().map(|(k, v)| format!("{k}={}", fmt_rational(v))).collect::<Vec<_>>().join(", ")
    }
}

fn lenient(mut m: Model) -> Model {
    m.tie_mode = TieMode::Lenient;
    m
}

/// Default Kähler parameters of a built-in surface.
pub fn default_params(name: &str) -> Result<BTreeMap<String, Q>, ModelError> {
    let mut p = BTreeMap::new();
    match name {
        "p2" => {}
        "blp_p2" => {
            p.insert("q".into(), q(1, 2));
        }
        "blpq_p2" => {
            p.insert("a".into(), q(1, 3));
            p.insert("b".into(), q(1, 3));
        }
        "p1xp1_blowup" => {
            p.insert("r".into(), q(1, 2));
        }
        "iterated_blowup" => {
            p.insert("r".into(), q(4, 5));
        }
        "dp5" => {
            p.insert("a1".into(), q(1, 2));
            for i in 2..=4 {
                p.insert(format!("a{i}"), qi(0));
            }
        }
        "dp4" => {
            p.insert("delta".into(), qi(0));
        }
        other => return Err(ModelError::UnknownSurface(other.to_string())),
    }
    Ok(p)
}

fn toric_model(
    name: &str,
    rays: &[(i64, i64)],
    names: &[&str],
    extra: &[(&str, &[i64])],
    omega: Vec<Q>,
    params: BTreeMap<String, Q>,
) -> Result<Model, ModelError> {
    let mut surface = build_toric_surface(rays, names)?;
    surface.name = name.to_string();
    for (n, c) in extra {
        surface.named.push((n.to_string(), DivisorClass::from_ints(c)));
    }
    let omega = DivisorClass::new(omega);
    let chart = potential(&surface, &omega)?;
    Ok(Model { name: name.into(), surface, omega, chart, params, tie_mode: TieMode::Strict })
}

/// Builds a named example, overriding any of its default parameters.
pub fn builtin(name: &str, overrides: &BTreeMap<String, Q>) -> Result<Model, ModelError> {
    let mut params = default_params(name)?;
    for (k, v) in overrides {
        if !params.contains_key(k) {
            return Err(ModelError::UnknownParameter { surface: name.into(), param: k.clone() });
        }
        params.insert(k.clone(), v.clone());
    }
    let p = |k: &str| params[k].clone();
    match name {
        "p2" => toric_model(
            name,
            &[(1, 0), (0, 1), (-1, -1)],
            &["D1", "D2", "D3"],
            &[("H", &[1, 0, 0])],
            vec![qi(1), qi(0), qi(0)],
            params.clone(),
        ),
        "blp_p2" => toric_model(
            name,
            &[(-1, -1), (1, 0), (1, 1), (0, 1)],
            &["H", "L1", "E", "L2"],
            &[],
            vec![qi(1), qi(0), -p("q"), qi(0)],
            params.clone(),
        ),
        "blpq_p2" => toric_model(
            name,
            &[(-1, -1), (1, 0), (1, 1), (0, 1), (-1, 0)],
            &["D1", "D2", "D3", "D4", "D5"],
            &[("H", &[1, 0, 0, 0, 1]), ("E", &[0, 0, 1, 0, 0]), ("F", &[0, 0, 0, 0, 1]), ("Z", &[0, 0, 0, 1, 0])],
            vec![qi(1), qi(0), -p("a"), qi(0), Q::from(1 - p("b"))],
            params.clone(),
        )
        .map(lenient),
        "p1xp1_blowup" => toric_model(
            name,
            &[(1, 0), (1, 1), (0, 1), (-1, 0), (0, -1)],
            &["L1", "E", "L2", "H2", "H1"],
            &[],
            vec![qi(0), -p("r"), qi(0), qi(1), qi(1)],
            params.clone(),
        ),
        "iterated_blowup" => toric_model(
            name,
            &[(-1, -1), (1, 0), (1, 1), (1, 2), (0, 1)],
            &["D1", "D5", "D4", "D3", "D2"],
            &[("H", &[1, 0, 0, 0, 0]), ("E1", &[0, 0, 1, 0, 0]), ("E2", &[0, 0, 0, 1, 0])],
            vec![qi(1), qi(0), q(-1, 2), -p("r"), qi(0)],
            params.clone(),
        ),
        "dp5" => {
            let a = [p("a1"), p("a2"), p("a3"), p("a4")];
            let (surface, omega, chart) = deg5_mirror(&a, Positivity::AllowNef)?;
            Ok(Model { name: name.into(), surface, omega, chart, params, tie_mode: TieMode::Lenient })
        }
        "dp4" => {
            let (surface, omega, chart) = deg4_mirror(&p("delta"), Positivity::AllowNef)?;
            Ok(Model { name: name.into(), surface, omega, chart, params, tie_mode: TieMode::Lenient })
        }
        other => Err(ModelError::UnknownSurface(other.to_string())),
    }
}

/// A toric model from explicit rays and Kähler coefficients on the rays.
pub fn custom_toric(rays: &[(i64, i64)], names: &[String], omega: Vec<Q>) -> Result<Model, ModelError> {
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    toric_model("custom", rays, &refs, &[], omega, BTreeMap::new())
}

pub fn with_param(name: &str, param: &str, value: &Q) -> Result<Model, ModelError> {
    let mut o = BTreeMap::new();
    o.insert(param.to_string(), value.clone());
    builtin(name, &o)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_builtins_construct() {
        for n in BUILTIN_NAMES {
            let m = builtin(n, &BTreeMap::new()).unwrap();
            assert_eq!(m.chart.thetas.len(), m.surface.boundary.len(), "{n}");
        }
    }

    #[test]
    fn slope_constants() {
        let m = builtin("blp_p2", &BTreeMap::new()).unwrap();
        assert_eq!(m.surface.slope_mu(&m.omega).unwrap(), q(10, 3));
        let m = with_param("iterated_blowup", "r", &qi(1));
        assert!(m.is_err());
        let m = with_param("iterated_blowup", "r", &q(3, 4)).unwrap();
        assert!(!m.is_fano());
        let h = m.class("H").unwrap();
        let e1 = m.class("E1").unwrap();
        let e2 = m.class("E2").unwrap();
        let d2 = m.class("D2").unwrap();
        let rel = h.sub(&e1).sub(&e2.scale(&qi(2)));
        for c in &m.surface.boundary {
            assert_eq!(m.surface.intersection_number(&rel, c).unwrap(), m.surface.intersection_number(&d2, c).unwrap());
        }
    }

    #[test]
    fn anticanonical_third_on_two_point_blowup() {
        let m = builtin("blpq_p2", &BTreeMap::new()).unwrap();
        let third = m.surface.anticanonical.scale(&q(1, 3));
        for c in &m.surface.boundary {
            assert_eq!(
                m.surface.intersection_number(&third, c).unwrap(),
                m.surface.intersection_number(&m.omega, c).unwrap()
            );
        }
    }
}
