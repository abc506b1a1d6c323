//! Serializable command outputs. Every document round-trips through JSON
//! unchanged.

use crate::builtins::Model;
use crate::critical::{validate_chamber, CriticalPoint, TieMode, TropicalFamily};
use crate::num::{fmt_rational, q_to_f64, Cx, Q};
use crate::stability::{CValue, SlopeReport, StabilityReport};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DescribeReport {
    pub surface: String,
    pub params: BTreeMap<String, String>,
    pub toric: bool,
    pub rays: Option<Vec<[i64; 2]>>,
    pub basis: Vec<String>,
    pub boundary: Vec<String>,
    /// Boundary-by-boundary intersection numbers.
    pub intersection: Vec<Vec<String>>,
    /// `-K` in the surface basis.
    pub anticanonical: Vec<String>,
    pub omega: Vec<String>,
    pub omega_squared: String,
    pub kahler: bool,
    pub min_degree: (String, String),
    pub fano: bool,
    pub mu: String,
    pub potential: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyRecord {
    pub id: usize,
    pub beta: [String; 2],
    pub argmax_x: Vec<[i64; 2]>,
    pub argmax_y: Vec<[i64; 2]>,
    pub transverse: Option<[i64; 2]>,
    pub margins: Vec<String>,
    pub on_wall: bool,
    pub degenerate: bool,
    pub alphas: Vec<[CValue; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointRecord {
    pub k: f64,
    pub label: Option<[usize; 2]>,
    pub x: [String; 2],
    pub y: [String; 2],
    pub log_abs: [f64; 2],
    pub arg: [f64; 2],
    pub residual: f64,
    pub hessian: CValue,
    pub nondegenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalReport {
    pub surface: String,
    pub params: BTreeMap<String, String>,
    pub tie_mode: TieMode,
    pub wall: bool,
    pub families: Vec<FamilyRecord>,
    pub points: Vec<PointRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairingReport {
    pub surface: String,
    pub params: BTreeMap<String, String>,
    pub k: f64,
    pub names: Vec<String>,
    pub mirror: Vec<Vec<CValue>>,
    pub exact: Vec<Vec<String>>,
    pub max_deviation: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub surface: String,
    pub param: String,
    pub lo: String,
    pub hi: String,
    pub step: String,
    pub walls: Vec<String>,
    pub walls_decimal: Vec<f64>,
}

/// Any command's output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Report {
    Describe(DescribeReport),
    Critical(CriticalReport),
    Pairing(PairingReport),
    Df(StabilityReport),
    Slope(SlopeReport),
    Futaki(StabilityReport),
    Scan(ScanReport),
}

impl Report {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).unwrap_or_default()
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

pub fn params_of(model: &Model) -> BTreeMap<String, String> {
    model.params.iter().map(|(k, v)| (k.clone(), fmt_rational(v))).collect()
}

fn strings(v: &[Q]) -> Vec<String> {
    v.iter().map(fmt_rational).collect()
}

pub fn describe(model: &Model) -> Result<DescribeReport, crate::surface::GeometryError> {
    let s = &model.surface;
    let mut inter = Vec::new();
    for a in &s.boundary {
        let mut row = Vec::new();
        for b in &s.boundary {
            row.push(fmt_rational(&s.intersection_number(a, b)?));
        }
        inter.push(row);
    }
    let (curve, deg) = s.min_curve_degree(&model.omega)?;
    Ok(DescribeReport {
        surface: model.name.clone(),
        params: params_of(model),
        toric: s.is_toric(),
        rays: s.fan.as_ref().map(|f| f.rays.iter().map(|r| [r.0, r.1]).collect()),
        basis: s.basis.clone(),
        boundary: s.boundary_names.clone(),
        intersection: inter,
        anticanonical: strings(&s.anticanonical.coeffs),
        omega: strings(&model.omega.coeffs),
        omega_squared: fmt_rational(&s.intersection_number(&model.omega, &model.omega)?),
        kahler: s.is_kahler(&model.omega),
        min_degree: (curve, fmt_rational(&deg)),
        fano: model.is_fano(),
        mu: fmt_rational(&s.slope_mu(&model.omega)?),
        potential: model.chart.potential.pretty(),
    })
}

fn cv(z: &Cx) -> CValue {
    CValue::from_cx(z)
}

pub fn family_records(
    model: &Model,
    families: &[TropicalFamily],
) -> Result<(Vec<FamilyRecord>, bool), crate::critical::CriticalError> {
    let chamber = validate_chamber(&model.chart.potential, families)?;
    let recs = families
        .iter()
        .zip(&chamber.families)
        .map(|(f, m)| FamilyRecord {
            id: f.id,
            beta: [fmt_rational(&f.beta.0), fmt_rational(&f.beta.1)],
            argmax_x: f.argmax.0.iter().map(|e| [e.0, e.1]).collect(),
            argmax_y: f.argmax.1.iter().map(|e| [e.0, e.1]).collect(),
            transverse: f.transverse.as_ref().map(|(u, _)| [u.0, u.1]),
            margins: strings(&m.margins),
            on_wall: m.wall,
            degenerate: f.degenerate,
            alphas: f.branches.iter().map(|b| [cv(&b.alpha.0), cv(&b.alpha.1)]).collect(),
        })
        .collect();
    Ok((recs, chamber.wall))
}

pub fn point_record(p: &CriticalPoint) -> PointRecord {
    let (xr, xi) = p.coords.0.to_strings();
    let (yr, yi) = p.coords.1.to_strings();
    let lg = |z: &Cx| z.abs().ln().to_f64();
    PointRecord {
        k: p.k,
        label: p.label.map(|(a, b)| [a, b]),
        x: [xr, xi],
        y: [yr, yi],
        log_abs: [lg(&p.coords.0), lg(&p.coords.1)],
        arg: [p.coords.0.arg().to_f64(), p.coords.1.arg().to_f64()],
        residual: p.grad_residual,
        hessian: cv(&p.hessian_det),
        nondegenerate: p.nondegenerate,
    }
}

pub fn pairing_report(model: &Model, k: f64, mirror: &[Vec<Cx>], exact: &[Vec<Q>], tolerance: f64) -> PairingReport {
    let mut dev: f64 = 0.0;
    for (mr, er) in mirror.iter().zip(exact) {
        for (m, e) in mr.iter().zip(er) {
            let (re, im) = m.to_c64();
            dev = dev.max((re - q_to_f64(e)).abs()).max(im.abs());
        }
    }
    PairingReport {
        surface: model.name.clone(),
        params: params_of(model),
        k,
        names: model.surface.boundary_names.clone(),
        mirror: mirror.iter().map(|r| r.iter().map(cv).collect()).collect(),
        exact: exact.iter().map(|r| strings(r)).collect(),
        max_deviation: dev,
        tolerance,
        pass: dev <= tolerance,
    }
}
