//! Residue pairings, volumes, Donaldson-Futaki invariants, quotient slopes and
//! localized Futaki contributions, each computed from intersection numbers and
//! from sums over critical points of the mirror potential.

use crate::builtins::Model;
use crate::critical::{
    all_critical_points, label_points, tropical_critical_points, CriticalError, CriticalPoint, TropicalFamily,
};
use crate::exp_laurent::{CriticalAsymptotics, ExpLaurentPoly, LaurentError};
use crate::mirror::{class_theta, MirrorError};
use crate::num::{float, fmt_rational, precision, q_to_f64, sum_by_magnitude, Cx, Q};
use crate::surface::{DivisorClass, GeometryError, Surface};
use rug::Float;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

/// Relative size below which an imaginary part is dropped from reports.
pub const REAL_CUTOFF: f64 = 1e-8;
/// Relative agreement needed for several carrying branches to count as equal.
pub const EQUAL_WEIGHT_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StabilityError {
    #[error("critical point at k = {k} is degenerate")]
    DegeneratePoint { k: f64 },
    #[error("found {found} critical points at k = {k}, expected {expected}")]
    IncompleteCriticalSet { k: f64, expected: usize, found: usize },
    #[error("branch {branch} of family {family} has positive rate {gamma}; the mirror sum diverges")]
    PositiveRate { family: usize, branch: usize, gamma: String },
    #[error("leading Hessian amplitudes cancel along family {0}")]
    LeadingCancellation(usize),
    #[error("the quotient slope denominator vanishes")]
    ZeroDenominator,
    #[error("the mirror slope denominator tends to zero")]
    ZeroDenominatorLimit,
    #[error("numerator grows faster than denominator along the family")]
    DivergentRatio,
    #[error("fixed divisor weight is zero")]
    ZeroWeight,
    #[error("no tropical branch matches label {0:?}")]
    UnknownBranch((usize, usize)),
    #[error("k list must be nonempty and increasing")]
    BadKList,
    #[error(transparent)]
    Critical(#[from] CriticalError),
    #[error(transparent)]
    Mirror(#[from] MirrorError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Laurent(#[from] LaurentError),
}

/// Complex number in report form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CValue {
    pub re: f64,
    pub im: f64,
}

impl CValue {
    pub fn from_cx(z: &Cx) -> Self {
        let (re, im) = z.to_c64();
        let mag = re.hypot(im);
        if mag == 0.0 || im.abs() <= REAL_CUTOFF * mag {
            CValue { re, im: 0.0 }
        } else {
            CValue { re, im }
        }
    }

    pub fn abs(&self) -> f64 {
        self.re.hypot(self.im)
    }
}

impl std::fmt::Display for CValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.im == 0.0 {
            write!(f, "{:.12}", self.re)
        } else {
            write!(f, "{:.12}{:+.12}i", self.re, self.im)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MirrorSample {
    pub k: f64,
    pub value: CValue,
}

/// One tropical branch with its contribution data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyEntry {
    pub family: usize,
    pub branch: usize,
    pub beta: [String; 2],
    pub alpha: [CValue; 2],
    /// Leading amplitude `c` of the contribution.
    pub c: Option<CValue>,
    /// Leading rate `gamma` (units of `2 pi k`).
    pub gamma: Option<String>,
    /// `symbolic` when read off the leading data, `numeric` when fitted.
    pub method: String,
    /// Contribution at each `k`.
    pub samples: Vec<MirrorSample>,
    pub limit: CValue,
    pub carries: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub quantity: String,
    pub surface: String,
    pub params: BTreeMap<String, String>,
    pub intersection: Option<String>,
    pub mirror: Vec<MirrorSample>,
    pub limit: CValue,
    pub concentrated: bool,
    pub families: Vec<FamilyEntry>,
    pub verdict: Option<String>,
    pub notes: Vec<String>,
}

impl StabilityReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).unwrap_or_default()
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn intersection_f64(&self) -> Option<f64> {
        self.intersection.as_deref().and_then(crate::num::parse_rational).map(|v| q_to_f64(&v))
    }

    pub fn family(&self, family: usize, branch: usize) -> Option<&FamilyEntry> {
        self.families.iter().find(|f| f.family == family && f.branch == branch)
    }
}

/// Symmetric matrix `a_rs` over the surface basis for `F = sum a_rs D_r.D_s`.
#[derive(Debug, Clone, PartialEq)]
pub struct TestConfigQuadratic {
    pub a: Vec<Vec<Q>>,
}

impl TestConfigQuadratic {
    pub fn zero(n: usize) -> Self {
        TestConfigQuadratic { a: vec![vec![Q::new(); n]; n] }
    }

    /// `sym(A (x) B)`, so that the contraction is `A.B`.
    pub fn product(a: &DivisorClass, b: &DivisorClass) -> Self {
        let n = a.len();
        let mut m = vec![vec![Q::new(); n]; n];
        for i in 0..n {
            for j in 0..n {
                let t = Q::from(&a.coeffs[i] * &b.coeffs[j]) + Q::from(&a.coeffs[j] * &b.coeffs[i]);
                m[i][j] = t / 2;
            }
        }
        TestConfigQuadratic { a: m }
    }

    pub fn add(&self, other: &Self) -> Self {
        let a =
            self.a.iter().zip(&other.a).map(|(r, s)| r.iter().zip(s).map(|(x, y)| Q::from(x + y)).collect()).collect();
        TestConfigQuadratic { a }
    }

    pub fn is_zero(&self) -> bool {
        self.a.iter().flatten().all(|v| *v == 0)
    }
}

/// A torus-fixed divisor with its moment value (per unit of `omega`) and weight.
#[derive(Debug, Clone, PartialEq)]
pub struct FutakiFixedDivisor {
    pub name: String,
    pub cls: DivisorClass,
    pub moment: f64,
    pub weight: f64,
}

impl FutakiFixedDivisor {
    /// `mu / w`, the normalized moment.
    pub fn normalized(&self) -> f64 {
        self.moment / self.weight
    }
}

/// `f(p) / ((p1 p2)^2 det Hess W(p))`.
pub fn residue_contribution(f: &ExpLaurentPoly, w: &ExpLaurentPoly, p: &CriticalPoint) -> Result<Cx, StabilityError> {
    if !p.nondegenerate {
        return Err(StabilityError::DegeneratePoint { k: p.k });
    }
    let k = Float::with_val(precision(), p.k);
    let num = f.evaluate(&k, (&p.coords.0, &p.coords.1))?;
    let _ = w;
    Ok(&num / &p.hessian_det)
}

/// Critical points at `k`, labelled by tropical branch, with the Euler
/// characteristic check for toric charts.
pub fn critical_points_at(
    model: &Model,
    families: &[TropicalFamily],
    k: f64,
) -> Result<Vec<CriticalPoint>, StabilityError> {
    let mut pts = all_critical_points(&model.chart.potential, k)?;
    if let Some(fan) = &model.surface.fan {
        if pts.len() != fan.len() {
            return Err(StabilityError::IncompleteCriticalSet { k, expected: fan.len(), found: pts.len() });
        }
    }
    label_points(&mut pts, families);
    Ok(pts)
}

pub fn tropical(model: &Model) -> Result<Vec<TropicalFamily>, StabilityError> {
    Ok(tropical_critical_points(&model.chart.potential, model.tie_mode)?)
}

/// `sum_p f g / Hess` over all critical points at `k`.
pub fn residue_pairing(
    f: &ExpLaurentPoly,
    g: &ExpLaurentPoly,
    model: &Model,
    points: &[CriticalPoint],
) -> Result<Cx, StabilityError> {
    let fg = f.mul(g);
    let vals =
        points.iter().map(|p| residue_contribution(&fg, &model.chart.potential, p)).collect::<Result<Vec<_>, _>>()?;
    Ok(sum_by_magnitude(vals))
}

/// Residue pairing matrix of the boundary thetas at `k` next to the exact
/// intersection matrix of the boundary divisors.
pub fn pairing_matrix(model: &Model, k: f64) -> Result<(Vec<Vec<Cx>>, Vec<Vec<Q>>), StabilityError> {
    let points = all_points_checked(model, k)?;
    let n = model.chart.thetas.len();
    let mut mirror = vec![vec![Cx::zero(); n]; n];
    let mut exact = vec![vec![Q::new(); n]; n];
    for i in 0..n {
        for j in i..n {
            let v = residue_pairing(&model.chart.thetas[i], &model.chart.thetas[j], model, &points)?;
            mirror[i][j] = v.clone();
            mirror[j][i] = v;
            let e = model.surface.intersection_number(&model.surface.boundary[i], &model.surface.boundary[j])?;
            exact[i][j] = e.clone();
            exact[j][i] = e;
        }
    }
    Ok((mirror, exact))
}

fn all_points_checked(model: &Model, k: f64) -> Result<Vec<CriticalPoint>, StabilityError> {
    let pts = all_critical_points(&model.chart.potential, k)?;
    if let Some(fan) = &model.surface.fan {
        if pts.len() != fan.len() {
            return Err(StabilityError::IncompleteCriticalSet { k, expected: fan.len(), found: pts.len() });
        }
    }
    Ok(pts)
}

/// `theta_omega^2 / Hess` at a point.
pub fn volume_at(w: &ExpLaurentPoly, omega_theta: &ExpLaurentPoly, p: &CriticalPoint) -> Result<Cx, StabilityError> {
    residue_contribution(&omega_theta.mul(omega_theta), w, p)
}

/// Leading behaviour `c e^{2 pi k gamma}` of a contribution along a branch.
#[derive(Debug, Clone, PartialEq)]
pub struct Asymptotic {
    pub c: Cx,
    /// `None` when the numerator vanishes identically along the branch.
    pub gamma: Option<Q>,
    /// The numerator's top-rate amplitudes cancelled, so `gamma` is only an upper bound.
    pub numerator_cancelled: bool,
}

fn top_affine_rate(p: &ExpLaurentPoly, beta: &(Q, Q)) -> Option<Q> {
    p.affine_rates(beta).into_iter().map(|(_, r)| r).max()
}

/// Ratio of the leading terms of `f` and of the Hessian polynomial along `a`.
pub fn asymptotic_contribution(
    f: &ExpLaurentPoly,
    w: &ExpLaurentPoly,
    a: &CriticalAsymptotics,
) -> Result<Asymptotic, StabilityError> {
    let hess = w.hessian_polynomial();
    let h = hess.restrict_along(a);
    let h_top = top_affine_rate(&hess, &a.beta);
    let (h_amp, h_rate) = h.leading().map_err(|_| StabilityError::LeadingCancellation(a.family))?;
    if h_top.map(|t| t > h_rate).unwrap_or(false) {
        return Err(StabilityError::LeadingCancellation(a.family));
    }
    let n = f.restrict_along(a);
    if n.is_empty() {
        return Ok(Asymptotic { c: Cx::zero(), gamma: None, numerator_cancelled: !f.is_zero() });
    }
    let (n_amp, n_rate) = n.leading()?;
    let cancelled = top_affine_rate(f, &a.beta).map(|t| t > n_rate).unwrap_or(false);
    Ok(Asymptotic { c: &n_amp / &h_amp, gamma: Some(n_rate - h_rate), numerator_cancelled: cancelled })
}

/// Limit of `L + A e^{-a k}` fitted through the last three samples; the last
/// sample when no decaying exponential fits.
pub fn extrapolate(ks: &[f64], values: &[f64]) -> f64 {
    let n = values.len();
    if n == 0 {
        return 0.0;
    }
    if n < 3 {
        return values[n - 1];
    }
    let (k1, k2, k3) = (ks[n - 3], ks[n - 2], ks[n - 1]);
    let (v1, v2, v3) = (values[n - 3], values[n - 2], values[n - 1]);
    let (d1, d2) = (v2 - v1, v3 - v2);
    let scale = v1.abs().max(v2.abs()).max(v3.abs()).max(1e-300);
    if d1.abs() <= 1e-14 * scale || d2.abs() <= 1e-14 * scale {
        return v3;
    }
    let target = d2 / d1;
    if !(target > 0.0) {
        return v3;
    }
    let ratio = |a: f64| ((-a * k3).exp() - (-a * k2).exp()) / ((-a * k2).exp() - (-a * k1).exp());
    let (mut lo, mut hi) = (1e-9, 200.0 / (k3 - k1).max(1e-9));
    let (rlo, rhi) = (ratio(lo), ratio(hi));
    if !(target < rlo && target > rhi) {
        return v3;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if ratio(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let a = 0.5 * (lo + hi);
    let amp = d2 / ((-a * k3).exp() - (-a * k2).exp());
    v3 - amp * (-a * k3).exp()
}

fn extrapolate_c(ks: &[f64], values: &[CValue]) -> CValue {
    let re: Vec<f64> = values.iter().map(|v| v.re).collect();
    let im: Vec<f64> = values.iter().map(|v| v.im).collect();
    let z = CValue { re: extrapolate(ks, &re), im: extrapolate(ks, &im) };
    let mag = z.abs();
    if z.im.abs() <= REAL_CUTOFF * mag {
        CValue { re: z.re, im: 0.0 }
    } else {
        z
    }
}

fn check_k_list(ks: &[f64]) -> Result<(), StabilityError> {
    if ks.is_empty() || ks.windows(2).any(|w| !(w[1] > w[0])) || ks.iter().any(|k| !(*k > 0.0)) {
        return Err(StabilityError::BadKList);
    }
    Ok(())
}

/// Per-`k` contributions of a numerator over the labelled critical points.
struct Sampled {
    ks: Vec<f64>,
    totals: Vec<Cx>,
    /// `per_branch[(family, branch)][k index]`.
    per_branch: BTreeMap<(usize, usize), Vec<Cx>>,
    unlabelled: usize,
}

fn sample(
    model: &Model,
    families: &[TropicalFamily],
    numerators: &[&ExpLaurentPoly],
    ks: &[f64],
) -> Result<Vec<Sampled>, StabilityError> {
    let mut out: Vec<Sampled> = numerators
        .iter()
        .map(|_| Sampled { ks: ks.to_vec(), totals: vec![], per_branch: BTreeMap::new(), unlabelled: 0 })
        .collect();
    for &k in ks {
        let pts = critical_points_at(model, families, k)?;
        for (idx, f) in numerators.iter().enumerate() {
            let mut vals = Vec::with_capacity(pts.len());
            for p in &pts {
                let v = residue_contribution(f, &model.chart.potential, p)?;
                match p.label {
                    Some(l) => out[idx].per_branch.entry(l).or_default().push(v.clone()),
                    None => out[idx].unlabelled += 1,
                }
                vals.push(v);
            }
            out[idx].totals.push(sum_by_magnitude(vals));
        }
    }
    Ok(out)
}

fn branch_of(families: &[TropicalFamily], label: (usize, usize)) -> Option<&CriticalAsymptotics> {
    families.get(label.0).and_then(|f| f.branches.get(label.1))
}

/// Classifies each branch by the leading rate of its contribution.
fn classify(
    f: &ExpLaurentPoly,
    model: &Model,
    families: &[TropicalFamily],
    s: &Sampled,
) -> Result<(Vec<FamilyEntry>, bool, Vec<String>), StabilityError> {
    let mut entries = Vec::new();
    let mut notes = Vec::new();
    let total_scale = s.totals.last().map(|t| t.abs_f64()).unwrap_or(0.0).max(1.0);
    for fam in families {
        for (bi, br) in fam.branches.iter().enumerate() {
            let samples: Vec<MirrorSample> = s
                .per_branch
                .get(&(fam.id, bi))
                .map(|v| v.iter().zip(&s.ks).map(|(z, k)| MirrorSample { k: *k, value: CValue::from_cx(z) }).collect())
                .unwrap_or_default();
            let values: Vec<CValue> = samples.iter().map(|m| m.value).collect();
            let limit = extrapolate_c(&s.ks[..values.len()], &values);
            let sym = asymptotic_contribution(f, &model.chart.potential, br);
            let numeric_rate = || -> Option<f64> {
                let n = values.len();
                if n < 2 {
                    return None;
                }
                let (a, b) = (values[n - 2].abs(), values[n - 1].abs());
                if a == 0.0 || b == 0.0 {
                    return None;
                }
                Some((b / a).ln() / (2.0 * std::f64::consts::PI * (s.ks[n - 1] - s.ks[n - 2])))
            };
            let (c, gamma, method, carries) = match sym {
                Ok(Asymptotic { c, gamma: Some(g), numerator_cancelled: false }) => {
                    if g > 0 {
                        return Err(StabilityError::PositiveRate {
                            family: fam.id,
                            branch: bi,
                            gamma: fmt_rational(&g),
                        });
                    }
                    let carries = g == 0;
                    (Some(CValue::from_cx(&c)), Some(fmt_rational(&g)), "symbolic", carries)
                }
                Ok(Asymptotic { gamma: None, numerator_cancelled: false, .. }) => (None, None, "symbolic", false),
                Ok(_) | Err(StabilityError::LeadingCancellation(_)) => {
                    let last = values.last().map(|v| v.abs()).unwrap_or(0.0);
                    let rate = numeric_rate();
                    let negligible = last <= 1e-10 * total_scale;
                    let carries = !negligible && rate.map(|r| r.abs() < 0.05).unwrap_or(false);
                    if let Some(r) = rate {
                        if r > 0.05 && !negligible {
                            return Err(StabilityError::PositiveRate {
                                family: fam.id,
                                branch: bi,
                                gamma: format!("{r:.3} (fitted)"),
                            });
                        }
                    }
                    notes.push(format!(
                        "family {} branch {}: leading amplitudes cancel; rate fitted numerically",
                        fam.id, bi
                    ));
                    (if carries { Some(limit) } else { None }, rate.map(|r| format!("{r:.4}")), "numeric", carries)
                }
                Err(e) => return Err(e),
            };
            entries.push(FamilyEntry {
                family: fam.id,
                branch: bi,
                beta: [fmt_rational(&br.beta.0), fmt_rational(&br.beta.1)],
                alpha: [CValue::from_cx(&br.alpha.0), CValue::from_cx(&br.alpha.1)],
                c,
                gamma,
                method: method.into(),
                samples,
                limit,
                carries,
            });
        }
    }
    let carriers: Vec<&FamilyEntry> = entries.iter().filter(|e| e.carries).collect();
    let concentrated = if f.is_zero() || carriers.len() == 1 {
        true
    } else if carriers.len() > 1 {
        let first = carriers[0].c.unwrap_or(carriers[0].limit);
        carriers.iter().all(|e| {
            let c = e.c.unwrap_or(e.limit);
            let d = (c.re - first.re).hypot(c.im - first.im);
            d <= EQUAL_WEIGHT_TOLERANCE * first.abs().max(1e-300)
        })
    } else {
        false
    };
    if s.unlabelled > 0 {
        notes.push(format!("{} critical point samples matched no tropical branch", s.unlabelled));
    }
    Ok((entries, concentrated, notes))
}

fn check_branch_labels(model: &Model, families: &[TropicalFamily]) -> Vec<String> {
    let mut notes = Vec::new();
    if !model.is_toric() {
        notes.push("critical points outside the chart are taken to contribute 0".into());
    }
    if !model.is_fano() {
        notes
            .push("weak Fano chart: toric thetas used without lower-order corrections; agreement is asymptotic".into());
    }
    if families.iter().any(|f| f.on_wall) {
        notes.push("some tropical family lies on a wall (accepted in lenient mode)".into());
    }
    notes
}

fn params_strings(model: &Model) -> BTreeMap<String, String> {
    model.params.iter().map(|(k, v)| (k.clone(), fmt_rational(v))).collect()
}

fn mirror_samples(ks: &[f64], vals: &[Cx]) -> Vec<MirrorSample> {
    ks.iter().zip(vals).map(|(k, v)| MirrorSample { k: *k, value: CValue::from_cx(v) }).collect()
}

/// `sum_rs a_rs D_r.D_s`.
pub fn df_intersection(s: &Surface, tc: &TestConfigQuadratic) -> Result<Q, StabilityError> {
    let n = s.dim();
    if tc.a.len() != n || tc.a.iter().any(|r| r.len() != n) {
        return Err(GeometryError::BasisMismatch { expected: n, found: tc.a.len() }.into());
    }
    let mut total = Q::new();
    for r in 0..n {
        for c in 0..n {
            if tc.a[r][c] != 0 {
                total += Q::from(&tc.a[r][c] * &s.form[r][c]);
            }
        }
    }
    Ok(total)
}

/// Mirror numerator `sum a_rs theta_r theta_s` for a quadratic over the surface basis.
pub fn quadratic_theta(model: &Model, tc: &TestConfigQuadratic) -> Result<ExpLaurentPoly, StabilityError> {
    let n = model.surface.dim();
    let thetas: Vec<ExpLaurentPoly> = (0..n)
        .map(|i| class_theta(&model.surface, &model.chart, &DivisorClass::unit(n, i)))
        .collect::<Result<_, _>>()?;
    let mut f = ExpLaurentPoly::zero();
    for r in 0..n {
        for c in 0..n {
            if tc.a[r][c] != 0 {
                f = f.add(&thetas[r].mul(&thetas[c]).scale_q(&tc.a[r][c]));
            }
        }
    }
    Ok(f)
}

/// Donaldson-Futaki invariant from a quadratic in the divisor classes, both ways.
pub fn df_mirror(model: &Model, tc: &TestConfigQuadratic, ks: &[f64]) -> Result<StabilityReport, StabilityError> {
    check_k_list(ks)?;
    let exact = df_intersection(&model.surface, tc)?;
    let f = quadratic_theta(model, tc)?;
    numerator_report(model, "donaldson-futaki", &f, Some(exact), ks)
}

/// Report for the mirror sum of one numerator.
pub fn numerator_report(
    model: &Model,
    quantity: &str,
    f: &ExpLaurentPoly,
    exact: Option<Q>,
    ks: &[f64],
) -> Result<StabilityReport, StabilityError> {
    check_k_list(ks)?;
    let families = tropical(model)?;
    let sampled = sample(model, &families, &[f], ks)?.remove(0);
    let (entries, concentrated, mut notes) = classify(f, model, &families, &sampled)?;
    notes.extend(check_branch_labels(model, &families));
    let mirror = mirror_samples(ks, &sampled.totals);
    let limit = extrapolate_c(ks, &mirror.iter().map(|m| m.value).collect::<Vec<_>>());
    Ok(StabilityReport {
        quantity: quantity.into(),
        surface: model.name.clone(),
        params: params_strings(model),
        intersection: exact.map(|e| fmt_rational(&e)),
        mirror,
        limit,
        concentrated,
        families: entries,
        verdict: None,
        notes,
    })
}

/// Per-branch volumes `theta_omega^2 / Hess` and their sum against `omega^2`.
pub fn volume_report(model: &Model, ks: &[f64]) -> Result<StabilityReport, StabilityError> {
    let omega_theta = class_theta(&model.surface, &model.chart, &model.omega)?;
    let sq = model.surface.intersection_number(&model.omega, &model.omega)?;
    numerator_report(model, "volume", &omega_theta.mul(&omega_theta), Some(sq), ks)
}

/// `3(2 omega.Z - c(K.Z + Z^2)) / (2c(3 omega.Z - c Z^2))`.
pub fn quotient_slope_intersection(
    s: &Surface,
    omega: &DivisorClass,
    z: &DivisorClass,
    c: &Q,
) -> Result<Q, StabilityError> {
    let wz = s.intersection_number(omega, z)?;
    let zz = s.intersection_number(z, z)?;
    let kz = -s.intersection_number(&s.anticanonical, z)?;
    let num = Q::from(3) * (Q::from(&wz * 2) - Q::from(c * Q::from(&kz + &zz)));
    let den = Q::from(c * 2) * (Q::from(&wz * 3) - Q::from(c * &zz));
    if den == 0 {
        return Err(StabilityError::ZeroDenominator);
    }
    Ok(num / den)
}

/// Whether `Z` destabilizes, with margin `mu(X) - mu_c(O_Z)`.
pub fn destabilizes(s: &Surface, omega: &DivisorClass, z: &DivisorClass, c: &Q) -> Result<(bool, Q), StabilityError> {
    let mu = s.slope_mu(omega)?;
    let muc = quotient_slope_intersection(s, omega, z, c)?;
    let margin = mu - muc;
    Ok((margin > 0, margin))
}

pub fn verdict_line(destab: bool, margin: &Q) -> String {
    if destab {
        format!("DESTABILIZES (margin {})", fmt_rational(margin))
    } else {
        "stable against Z".into()
    }
}

/// Mirror quotient slope: numerator and denominator sums and their ratio.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeReport {
    pub z: String,
    pub s: String,
    pub mu_x: String,
    pub mu_c: String,
    pub margin: String,
    pub destabilizes: bool,
    pub verdict: String,
    /// `k mu_{sk}` from the mirror, with per-family ratios.
    pub ratio: StabilityReport,
    pub numerator: StabilityReport,
    pub denominator: StabilityReport,
}

impl SlopeReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).unwrap_or_default()
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// Limit of `d/r` restricted to one branch.
    pub fn branch_ratio(&self, family: usize, branch: usize) -> Option<f64> {
        let d = self.numerator.family(family, branch)?.limit;
        let r = self.denominator.family(family, branch)?.limit;
        if r.abs() == 0.0 {
            return None;
        }
        Some(d.re / r.re)
    }
}

/// The scaled slope numerator and denominator theta polynomials.
pub fn slope_numerators(
    model: &Model,
    z: &DivisorClass,
    s: &Q,
) -> Result<(ExpLaurentPoly, ExpLaurentPoly), StabilityError> {
    let tz = class_theta(&model.surface, &model.chart, z)?;
    let tw = class_theta(&model.surface, &model.chart, &model.omega)?;
    let w = &model.chart.potential;
    let d = tz.mul(&tw.scale_q(&Q::from(2)).add(&w.sub(&tz).scale_q(s))).scale_q(&Q::from(3));
    let r = tz.mul(&tw.scale_q(&Q::from(3)).sub(&tz.scale_q(s))).scale_q(&Q::from(s * 2u32));
    Ok((d, r))
}

pub fn quotient_slope_mirror(
    model: &Model,
    z_name: &str,
    z: &DivisorClass,
    s: &Q,
    ks: &[f64],
) -> Result<SlopeReport, StabilityError> {
    check_k_list(ks)?;
    let surface = &model.surface;
    let mu = surface.slope_mu(&model.omega)?;
    let muc = quotient_slope_intersection(surface, &model.omega, z, s)?;
    let (destab, margin) = destabilizes(surface, &model.omega, z, s)?;
    let (d, r) = slope_numerators(model, z, s)?;
    let wz = surface.intersection_number(&model.omega, z)?;
    let zz = surface.intersection_number(z, z)?;
    let kz = -surface.intersection_number(&surface.anticanonical, z)?;
    let d_exact = Q::from(3) * (Q::from(&wz * 2) - Q::from(s * Q::from(&kz + &zz)));
    let r_exact = Q::from(s * 2) * (Q::from(&wz * 3) - Q::from(s * &zz));
    let families = tropical(model)?;
    let mut sampled = sample(model, &families, &[&d, &r], ks)?;
    let rs = sampled.remove(1);
    let ds = sampled.remove(0);
    let (d_entries, d_conc, mut notes) = classify(&d, model, &families, &ds)?;
    let (r_entries, r_conc, _) = classify(&r, model, &families, &rs)?;
    notes.extend(check_branch_labels(model, &families));
    let d_samples = mirror_samples(ks, &ds.totals);
    let r_samples = mirror_samples(ks, &rs.totals);
    let mut ratio_vals = Vec::new();
    for (a, b) in ds.totals.iter().zip(&rs.totals) {
        if b.is_zero() {
            return Err(StabilityError::ZeroDenominatorLimit);
        }
        ratio_vals.push(a / b);
    }
    let ratio_samples = mirror_samples(ks, &ratio_vals);
    let ratio_limit = extrapolate_c(ks, &ratio_samples.iter().map(|m| m.value).collect::<Vec<_>>());
    let mut ratio_entries = Vec::new();
    for de in &d_entries {
        let Some(re) = r_entries.iter().find(|e| e.family == de.family && e.branch == de.branch) else { continue };
        let samples: Vec<MirrorSample> = de
            .samples
            .iter()
            .zip(&re.samples)
            .filter_map(|(a, b)| {
                let den = b.value.re * b.value.re + b.value.im * b.value.im;
                (den > 0.0).then(|| MirrorSample {
                    k: a.k,
                    value: CValue {
                        re: (a.value.re * b.value.re + a.value.im * b.value.im) / den,
                        im: (a.value.im * b.value.re - a.value.re * b.value.im) / den,
                    },
                })
            })
            .collect();
        let carries = de.carries || re.carries;
        let limit = match (de.c, re.c) {
            (Some(a), Some(b)) if carries && b.abs() > 0.0 => {
                let den = b.re * b.re + b.im * b.im;
                CValue::from_cx(&Cx::from_f64((a.re * b.re + a.im * b.im) / den, (a.im * b.re - a.re * b.im) / den))
            }
            _ if carries && re.limit.abs() > 0.0 => CValue { re: de.limit.re / re.limit.re, im: 0.0 },
            _ => CValue { re: 0.0, im: 0.0 },
        };
        ratio_entries.push(FamilyEntry {
            samples,
            limit,
            carries,
            c: None,
            gamma: None,
            method: "ratio".into(),
            ..de.clone()
        });
    }
    let concentrated = d_conc && r_conc;
    let verdict = verdict_line(destab, &margin);
    let base = |quantity: &str, exact: Q, mirror, limit, entries, conc| StabilityReport {
        quantity: quantity.into(),
        surface: model.name.clone(),
        params: params_strings(model),
        intersection: Some(fmt_rational(&exact)),
        mirror,
        limit,
        concentrated: conc,
        families: entries,
        verdict: None,
        notes: notes.clone(),
    };
    let d_limit = extrapolate_c(ks, &d_samples.iter().map(|m| m.value).collect::<Vec<_>>());
    let r_limit = extrapolate_c(ks, &r_samples.iter().map(|m| m.value).collect::<Vec<_>>());
    let mut ratio = base("k mu_c", muc.clone(), ratio_samples, ratio_limit, ratio_entries, concentrated);
    ratio.verdict = Some(verdict.clone());
    Ok(SlopeReport {
        z: z_name.into(),
        s: fmt_rational(s),
        mu_x: fmt_rational(&mu),
        mu_c: fmt_rational(&muc),
        margin: fmt_rational(&margin),
        destabilizes: destab,
        verdict,
        ratio,
        numerator: base("slope numerator", d_exact, d_samples, d_limit, d_entries, d_conc),
        denominator: base("slope denominator", r_exact, r_samples, r_limit, r_entries, r_conc),
    })
}

/// Leading ratio `f / g` along a branch.
pub fn theta_ratio_limit(
    f: &ExpLaurentPoly,
    g: &ExpLaurentPoly,
    a: &CriticalAsymptotics,
) -> Result<Cx, StabilityError> {
    let fs = f.restrict_along(a);
    let gs = g.restrict_along(a);
    let (g_amp, g_rate) = gs.leading().map_err(|_| StabilityError::DivergentRatio)?;
    if fs.is_empty() {
        return Ok(Cx::zero());
    }
    let (f_amp, f_rate) = fs.leading()?;
    if f_rate > g_rate {
        return Err(StabilityError::DivergentRatio);
    }
    if f_rate < g_rate {
        return Ok(Cx::zero());
    }
    Ok(&f_amp / &g_amp)
}

/// The summand of a fixed divisor in the localized Futaki character at scale `k`:
/// `-4 pi^2 (mu^2/w) c1.D + 4 pi mu k omega.D - 4 pi^2 (mu^2/w) D.D` with `mu = k moment`.
pub fn futaki_divisor_contribution(
    s: &Surface,
    omega: &DivisorClass,
    d: &FutakiFixedDivisor,
    k: f64,
) -> Result<f64, StabilityError> {
    if d.weight == 0.0 {
        return Err(StabilityError::ZeroWeight);
    }
    let c1d = q_to_f64(&s.intersection_number(&s.anticanonical, &d.cls)?);
    let wd = q_to_f64(&s.intersection_number(omega, &d.cls)?);
    let dd = q_to_f64(&s.intersection_number(&d.cls, &d.cls)?);
    let mu = k * d.moment;
    let pi = std::f64::consts::PI;
    let sq = mu * mu / d.weight;
    Ok(-4.0 * pi * pi * sq * c1d + 4.0 * pi * mu * k * wd - 4.0 * pi * pi * sq * dd)
}

/// Mirror numerator of a fixed divisor's summand:
/// `theta_D 4 pi mu (k theta_omega - pi (mu/w)(W + theta_D))` with `mu = k moment`,
/// divided by `k^2` so that rates stay independent of `k`.
pub fn futaki_numerator(model: &Model, d: &FutakiFixedDivisor) -> Result<ExpLaurentPoly, StabilityError> {
    if d.weight == 0.0 {
        return Err(StabilityError::ZeroWeight);
    }
    let td = class_theta(&model.surface, &model.chart, &d.cls)?;
    let tw = class_theta(&model.surface, &model.chart, &model.omega)?;
    let pi = std::f64::consts::PI;
    let c_omega = Cx::from_f64(4.0 * pi * d.moment, 0.0);
    let c_rest = Cx::from_f64(-4.0 * pi * pi * d.moment * d.normalized(), 0.0);
    let inner = tw.scale(&c_omega).add(&model.chart.potential.add(&td).scale(&c_rest));
    Ok(td.mul(&inner))
}

/// Mirror side of the localized Futaki identity: the summed contributions of
/// `D` over the branches `at_d`, divided by the contribution of `D'` at the
/// branch `at_dp`, times `mu(D') / mu(D)`.
pub fn futaki_mirror_ratio(
    model: &Model,
    d: &FutakiFixedDivisor,
    at_d: &[(usize, usize)],
    dp: &FutakiFixedDivisor,
    at_dp: (usize, usize),
    ks: &[f64],
) -> Result<StabilityReport, StabilityError> {
    check_k_list(ks)?;
    let families = tropical(model)?;
    for l in at_d.iter().chain(std::iter::once(&at_dp)) {
        if branch_of(&families, *l).is_none() {
            return Err(StabilityError::UnknownBranch(*l));
        }
    }
    let fd = futaki_numerator(model, d)?;
    let fdp = futaki_numerator(model, dp)?;
    let mut sampled = sample(model, &families, &[&fd, &fdp], ks)?;
    let sp = sampled.remove(1);
    let sd = sampled.remove(0);
    let factor = dp.moment / d.moment;
    let mut vals = Vec::new();
    for i in 0..ks.len() {
        let mut num = Vec::new();
        for l in at_d {
            let v = sd.per_branch.get(l).and_then(|v| v.get(i)).ok_or(StabilityError::UnknownBranch(*l))?;
            num.push(v.clone());
        }
        let den = sp.per_branch.get(&at_dp).and_then(|v| v.get(i)).ok_or(StabilityError::UnknownBranch(at_dp))?;
        if den.is_zero() {
            return Err(StabilityError::ZeroDenominatorLimit);
        }
        vals.push((&sum_by_magnitude(num) / den).scale(&float(factor)));
    }
    let mirror = mirror_samples(ks, &vals);
    let limit = extrapolate_c(ks, &mirror.iter().map(|m| m.value).collect::<Vec<_>>());
    let mut notes = check_branch_labels(model, &families);
    notes
        .push(format!("moments {}={} (w={}), {}={} (w={})", d.name, d.moment, d.weight, dp.name, dp.moment, dp.weight));
    Ok(StabilityReport {
        quantity: "futaki ratio".into(),
        surface: model.name.clone(),
        params: params_strings(model),
        intersection: None,
        mirror,
        limit,
        concentrated: true,
        families: vec![],
        verdict: None,
        notes,
    })
}

/// Mirror sum of a fixed divisor's summand against its intersection value, per `k`.
pub fn futaki_total(model: &Model, d: &FutakiFixedDivisor, k: f64) -> Result<(f64, Cx), StabilityError> {
    let exact = futaki_divisor_contribution(&model.surface, &model.omega, d, k)?;
    let f = futaki_numerator(model, d)?;
    let pts = all_points_checked(model, k)?;
    let vals =
        pts.iter().map(|p| residue_contribution(&f, &model.chart.potential, p)).collect::<Result<Vec<_>, _>>()?;
    Ok((exact, sum_by_magnitude(vals).scale(&float(k * k))))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn extrapolation_recovers_limit() {
        let ks: [f64; 3] = [3.0, 5.0, 8.0];
        let v: Vec<f64> = ks.iter().map(|k| 0.25 + 3.0 * (-1.7 * k).exp()).collect();
        assert!((extrapolate(&ks, &v) - 0.25).abs() < 1e-12);
        assert_eq!(extrapolate(&ks, &[1.0, 1.0, 1.0]), 1.0);
    }
}
