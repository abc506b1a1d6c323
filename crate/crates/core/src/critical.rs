//! Critical points of two-variable mirror potentials: tropical leading data as
//! `k -> infinity`, chamber validation and wall scans, Newton refinement at a
//! fixed `k`, and a resultant-based enumeration of all torus critical points.

use crate::exp_laurent::{CriticalAsymptotics, ExpLaurentPoly, Exponent, LaurentError, NumLaurent};
use crate::num::{fmt_rational, precision, solve2, with_precision, Cx, Q};
use crate::poly::{resultant_in_x, roots, BiPoly, PolyError};
use rug::Float;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use thiserror::Error;

/// Newton tolerance on the normalized gradient residual.
pub const GRADIENT_TOLERANCE: f64 = 1e-30;
/// Relative Hessian size below which a critical point counts as degenerate.
pub const DEGENERACY_THRESHOLD: f64 = 1e-20;
pub const MAX_NEWTON_ITERATIONS: usize = 200;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CriticalError {
    #[error("wall detected at beta = ({beta1}, {beta2}): {detail}")]
    WallDetected { beta1: String, beta2: String, detail: String },
    #[error("the chart has no tropical critical points")]
    NoSolutions,
    #[error("Newton iteration stalled after {iterations} steps at residual {residual:e}")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("elimination is ill conditioned: {0}")]
    IllConditioned(String),
    #[error(transparent)]
    Laurent(#[from] LaurentError),
    #[error(transparent)]
    Poly(#[from] PolyError),
}

/// How argmax sets with more than two elements that are not forced by two
/// independent rate equalities are treated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TieMode {
    /// Report a wall.
    Strict,
    /// Keep the family and solve the leading system over the full argmax sets.
    Lenient,
}

/// One `beta` solution of the tropical problem with all of its `alpha` branches.
#[derive(Debug, Clone, PartialEq)]
pub struct TropicalFamily {
    pub id: usize,
    pub beta: (Q, Q),
    pub argmax: (Vec<Exponent>, Vec<Exponent>),
    /// Extra direction `u` and its argmax set, used when the two coordinate
    /// systems only constrain a single monomial.
    pub transverse: Option<((i64, i64), Vec<Exponent>)>,
    pub branches: Vec<CriticalAsymptotics>,
    /// Two `alpha` roots merged because they agreed to `1e-10`.
    pub degenerate: bool,
    /// The argmax sets are over-determined (only possible in lenient mode).
    pub on_wall: bool,
}

impl TropicalFamily {
    pub fn multiplicity(&self) -> usize {
        self.branches.len()
    }

    /// Combinatorial fingerprint used by the wall scanner.
    pub fn signature(&self) -> String {
        let fmt = |s: &[Exponent]| s.iter().map(|(a, b)| format!("{a},{b}")).collect::<Vec<_>>().join(";");
        let extra =
            self.transverse.as_ref().map(|(u, s)| format!(" u=({},{}) {}", u.0, u.1, fmt(s))).unwrap_or_default();
        format!("[{}]/[{}]{} x{}", fmt(&self.argmax.0), fmt(&self.argmax.1), extra, self.multiplicity())
    }
}

/// A critical point at a fixed `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct CriticalPoint {
    pub k: f64,
    pub coords: (Cx, Cx),
    pub grad_residual: f64,
    /// `(xy)^2 det Hess W` at the point.
    pub hessian_det: Cx,
    pub nondegenerate: bool,
    /// `(family, branch)` labels when matched against tropical data.
    pub label: Option<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FamilyMargins {
    pub family: usize,
    pub beta: (Q, Q),
    pub argmax: (Vec<Exponent>, Vec<Exponent>),
    /// Gap between the maximal rate and the next one, per coordinate equation.
    pub margins: Vec<Q>,
    pub wall: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChamberReport {
    pub parameter: Option<(String, Q)>,
    pub families: Vec<FamilyMargins>,
    pub wall: bool,
}

#[derive(Debug, Clone)]
struct Mono {
    exp: Exponent,
    rate: Q,
    amp: Cx,
}

fn leading_monomials(w: &ExpLaurentPoly) -> Result<Vec<Mono>, CriticalError> {
    w.monomials()
        .map(|(e, s)| {
            let (amp, rate) = s.leading()?;
            Ok(Mono { exp: *e, rate, amp })
        })
        .collect()
}

fn dot(u: (i64, i64), m: Exponent) -> i64 {
    u.0 * m.0 + u.1 * m.1
}

fn affine_rate(m: &Mono, beta: &(Q, Q)) -> Q {
    Q::from(&m.rate + Q::from(&beta.0 * m.exp.0)) + Q::from(&beta.1 * m.exp.1)
}

/// Solves `d1 . beta = c1`, `d2 . beta = c2` exactly.
fn solve_rational(d1: (i64, i64), c1: &Q, d2: (i64, i64), c2: &Q) -> Option<(Q, Q)> {
    let det = d1.0 * d2.1 - d1.1 * d2.0;
    if det == 0 {
        return None;
    }
    let det = Q::from(det);
    let b1 = (Q::from(c1 * d2.1) - Q::from(c2 * d1.1)) / &det;
    let b2 = (Q::from(c2 * d1.0) - Q::from(c1 * d2.0)) / &det;
    Some((b1, b2))
}

fn pair_equation(a: &Mono, b: &Mono) -> ((i64, i64), Q) {
    ((a.exp.0 - b.exp.0, a.exp.1 - b.exp.1), Q::from(&b.rate - &a.rate))
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

fn primitive_perp(d: (i64, i64)) -> (i64, i64) {
    let g = gcd(d.0, d.1).max(1);
    (d.1 / g, -d.0 / g)
}

/// Indices in `dir`-support that attain the maximal affine rate, and the gap to
/// the next distinct rate (if any).
fn argmax(monos: &[Mono], dir: (i64, i64), beta: &(Q, Q)) -> (Vec<usize>, Option<Q>) {
    let mut rated: Vec<(usize, Q)> = monos
        .iter()
        .enumerate()
        .filter(|(_, m)| dot(dir, m.exp) != 0)
        .map(|(i, m)| (i, affine_rate(m, beta)))
        .collect();
    rated.sort_by(|a, b| b.1.cmp(&a.1));
    let Some(top) = rated.first().map(|r| r.1.clone()) else { return (vec![], None) };
    let set: Vec<usize> = rated.iter().filter(|r| r.1 == top).map(|r| r.0).collect();
    let gap = rated.iter().find(|r| r.1 != top).map(|r| Q::from(&top - &r.1));
    (set, gap)
}

/// Number of independent rate equalities imposed by a collection of tie sets.
fn tie_count(sets: &[&[usize]]) -> usize {
    let mut nodes: Vec<usize> = sets.iter().flat_map(|s| s.iter().copied()).collect();
    nodes.sort_unstable();
    nodes.dedup();
    let mut parent: Vec<usize> = (0..nodes.len()).collect();
    fn find(p: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while p[r] != r {
            r = p[r];
        }
        p[i] = r;
        r
    }
    let pos = |v: usize| nodes.binary_search(&v).unwrap_or(0);
    for s in sets {
        for w in s.windows(2) {
            let (a, b) = (pos(w[0]), pos(w[1]));
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra != rb {
                parent[ra] = rb;
            }
        }
    }
    let roots = (0..nodes.len()).filter(|&i| find(&mut parent, i) == i).count();
    nodes.len() - roots
}

fn collinear(monos: &[Mono], idx: &[usize]) -> Option<(i64, i64)> {
    let pts: Vec<Exponent> = idx.iter().map(|&i| monos[i].exp).collect();
    let base = pts[0];
    let mut dir: Option<(i64, i64)> = None;
    for p in &pts[1..] {
        let d = (p.0 - base.0, p.1 - base.1);
        match dir {
            None => dir = Some(d),
            Some(d0) => {
                if d0.0 * d.1 - d0.1 * d.0 != 0 {
                    return None;
                }
            }
        }
    }
    dir
}

fn leading_equation(monos: &[Mono], set: &[usize], dir: (i64, i64)) -> NumLaurent {
    NumLaurent {
        terms: set.iter().map(|&i| (monos[i].exp, monos[i].amp.scale_q(&Q::from(dot(dir, monos[i].exp))))).collect(),
    }
}

fn exps(monos: &[Mono], set: &[usize]) -> Vec<Exponent> {
    let mut v: Vec<Exponent> = set.iter().map(|&i| monos[i].exp).collect();
    v.sort_unstable();
    v
}

fn wall_error(beta: &(Q, Q), detail: String) -> CriticalError {
    CriticalError::WallDetected { beta1: fmt_rational(&beta.0), beta2: fmt_rational(&beta.1), detail }
}

/// Tropical critical points of `w` with their leading coefficients.
pub fn tropical_critical_points(w: &ExpLaurentPoly, mode: TieMode) -> Result<Vec<TropicalFamily>, CriticalError> {
    let monos = leading_monomials(w)?;
    let e1 = (1, 0);
    let e2 = (0, 1);
    let support =
        |dir: (i64, i64)| -> Vec<usize> { (0..monos.len()).filter(|&i| dot(dir, monos[i].exp) != 0).collect() };
    let j1 = support(e1);
    let j2 = support(e2);
    let pairs = |js: &[usize]| -> Vec<(usize, usize)> {
        let mut v = Vec::new();
        for a in 0..js.len() {
            for b in a + 1..js.len() {
                v.push((js[a], js[b]));
            }
        }
        v
    };
    let p1 = pairs(&j1);
    let p2 = pairs(&j2);
    let mut candidates: BTreeSet<(Q, Q)> = BTreeSet::new();
    let mut transverse_dirs: BTreeSet<(i64, i64)> = BTreeSet::new();
    for &(a, b) in &p1 {
        let (d1, c1) = pair_equation(&monos[a], &monos[b]);
        for &(c, d) in &p2 {
            let (d2, c2) = pair_equation(&monos[c], &monos[d]);
            match solve_rational(d1, &c1, d2, &c2) {
                Some(beta) => {
                    candidates.insert(beta);
                }
                None => {
                    // Parallel pair equations: the same line when consistent.
                    let scale = if d1.0 != 0 { Q::from((d2.0, d1.0)) } else { Q::from((d2.1, d1.1)) };
                    if Q::from(&c1 * &scale) == c2 {
                        transverse_dirs.insert(primitive_perp(d1));
                        let u = primitive_perp(d1);
                        for &(e, f) in &pairs(&support(u)) {
                            let (d3, c3) = pair_equation(&monos[e], &monos[f]);
                            if let Some(beta) = solve_rational(d1, &c1, d3, &c3) {
                                candidates.insert(beta);
                            }
                        }
                    }
                }
            }
        }
    }
    let mut families = Vec::new();
    for beta in candidates {
        let (s1, _) = argmax(&monos, e1, &beta);
        let (s2, _) = argmax(&monos, e2, &beta);
        if s1.len() < 2 || s2.len() < 2 {
            continue;
        }
        let mut all: Vec<usize> = s1.iter().chain(&s2).copied().collect();
        all.sort_unstable();
        all.dedup();
        let transverse = collinear(&monos, &all).map(primitive_perp);
        let (equations, su, ties) = match transverse {
            None => {
                let eqs = (leading_equation(&monos, &s1, e1), leading_equation(&monos, &s2, e2));
                (eqs, None, tie_count(&[&s1, &s2]))
            }
            Some(u) => {
                let (su, _) = argmax(&monos, u, &beta);
                if su.len() < 2 {
                    continue;
                }
                let eqs = (leading_equation(&monos, &s1, e1), leading_equation(&monos, &su, u));
                let t = tie_count(&[&s1, &s2, &su]);
                (eqs, Some((u, su)), t)
            }
        };
        let on_wall = ties > 2;
        let mut alphas = match solve_torus_system(&equations.0, &equations.1, precision()) {
            Ok(a) => a,
            Err(CriticalError::IllConditioned(_)) => continue,
            Err(e) => return Err(e),
        };
        if su.is_some() {
            let check = leading_equation(&monos, &s2, e2);
            alphas.retain(|(a, b)| normalized_residual(&check, a, b).map(|r| r < 1e-20).unwrap_or(false));
        }
        if alphas.is_empty() {
            continue;
        }
        if on_wall && mode == TieMode::Strict {
            return Err(wall_error(
                &beta,
                format!("{} independent rate equalities among {} tied monomials", ties, all.len()),
            ));
        }
        let mut degenerate = false;
        let mut distinct: Vec<(Cx, Cx)> = Vec::new();
        for a in alphas {
            if distinct.iter().any(|b| a.0.rel_dist(&b.0) < 1e-10 && a.1.rel_dist(&b.1) < 1e-10) {
                degenerate = true;
            } else {
                distinct.push(a);
            }
        }
        distinct.sort_by(cmp_point);
        let leading_system = (exps(&monos, &s1), exps(&monos, &s2));
        let n = distinct.len();
        let branches = distinct
            .into_iter()
            .map(|alpha| CriticalAsymptotics {
                beta: beta.clone(),
                alpha,
                leading_system: leading_system.clone(),
                multiplicity: n,
                family: 0,
            })
            .collect();
        families.push(TropicalFamily {
            id: 0,
            beta,
            argmax: leading_system,
            transverse: su.map(|(u, s)| (u, exps(&monos, &s))),
            branches,
            degenerate,
            on_wall,
        });
    }
    if families.is_empty() {
        return Err(CriticalError::NoSolutions);
    }
    for (id, f) in families.iter_mut().enumerate() {
        f.id = id;
        for b in &mut f.branches {
            b.family = id;
        }
    }
    Ok(families)
}

/// Deterministic ordering of complex points: by argument, then modulus.
fn cmp_point(a: &(Cx, Cx), b: &(Cx, Cx)) -> std::cmp::Ordering {
    let key = |p: &(Cx, Cx)| {
        let round = |v: f64| (v * 1e9).round() as i64;
        let (a0, a1) = (p.0.arg().to_f64(), p.1.arg().to_f64());
        let (m0, m1) = (p.0.abs().ln().to_f64(), p.1.abs().ln().to_f64());
        (round(a0), round(a1), round(m0), round(m1))
    };
    key(a).cmp(&key(b))
}

/// All branches of all families, in family order.
pub fn branches(families: &[TropicalFamily]) -> Vec<CriticalAsymptotics> {
    families.iter().flat_map(|f| f.branches.iter().cloned()).collect()
}

/// Strictness margins of every family's argmax conditions.
pub fn validate_chamber(w: &ExpLaurentPoly, families: &[TropicalFamily]) -> Result<ChamberReport, CriticalError> {
    let monos = leading_monomials(w)?;
    let mut out = Vec::new();
    for f in families {
        let mut margins = Vec::new();
        let mut dirs = vec![(1, 0), (0, 1)];
        if let Some((u, _)) = &f.transverse {
            dirs.push(*u);
        }
        for dir in dirs {
            let (_, gap) = argmax(&monos, dir, &f.beta);
            if let Some(g) = gap {
                margins.push(g);
            }
        }
        let wall = f.on_wall || margins.iter().any(|m| *m == 0);
        out.push(FamilyMargins { family: f.id, beta: f.beta.clone(), argmax: f.argmax.clone(), margins, wall });
    }
    let wall = out.iter().any(|f| f.wall);
    Ok(ChamberReport { parameter: None, families: out, wall })
}

/// Combinatorial signature of the tropical solution set, or `WALL`.
pub fn chamber_signature(w: &ExpLaurentPoly) -> String {
    match tropical_critical_points(w, TieMode::Strict) {
        Ok(fams) => {
            let mut sigs: Vec<String> = fams.iter().map(TropicalFamily::signature).collect();
            sigs.sort();
            sigs.join(" | ")
        }
        Err(CriticalError::WallDetected { .. }) => "WALL".into(),
        Err(e) => format!("ERROR {e}"),
    }
}

/// Parameter values in `[lo, hi]` where the chamber signature of `chart(t)`
/// changes, refined by bisection to width at most `step`.
pub fn scan_walls<F>(chart: F, lo: &Q, hi: &Q, step: &Q) -> Vec<Q>
where
    F: Fn(&Q) -> Option<ExpLaurentPoly>,
{
    let sig = |t: &Q| chart(t).map(|w| chamber_signature(&w)).unwrap_or_else(|| "INVALID".into());
    let width = Q::from(hi - lo);
    if width <= 0 || *step <= 0 {
        return vec![];
    }
    let coarse = {
        let by_step = Q::from(&width / step);
        let n = by_step.ceil().numer().to_u64().unwrap_or(u64::MAX).clamp(1, 256);
        Q::from(&width / Q::from(n))
    };
    let mut walls: Vec<Q> = Vec::new();
    let mut a = lo.clone();
    let mut sa = sig(&a);
    while a < *hi {
        let mut b = Q::from(&a + &coarse);
        if b > *hi {
            b = hi.clone();
        }
        let sb = sig(&b);
        if sb != sa {
            let (mut l, mut r) = (a.clone(), b.clone());
            let sl = sa.clone();
            while Q::from(&r - &l) > *step {
                let m = Q::from(&l + &r) / 2;
                if sig(&m) == sl {
                    l = m;
                } else {
                    r = m;
                }
            }
            let loc = Q::from(&l + &r) / 2;
            let merge = Q::from(step * 2);
            if walls.last().map(|w| Q::from(&loc - w) > merge).unwrap_or(true) {
                walls.push(loc);
            }
        }
        a = b;
        sa = sb;
    }
    walls
}

/// `max_j |F_j| / sum |terms of F_j|` for one equation.
pub fn normalized_residual(f: &NumLaurent, x: &Cx, y: &Cx) -> Result<f64, LaurentError> {
    let (v, scale) = f.evaluate_with_scale((x, y))?;
    if scale.is_zero() {
        return Ok(0.0);
    }
    Ok((v.abs() / scale).to_f64())
}

fn system_residual(f: &NumLaurent, g: &NumLaurent, p: &(Cx, Cx)) -> Result<f64, LaurentError> {
    Ok(normalized_residual(f, &p.0, &p.1)?.max(normalized_residual(g, &p.0, &p.1)?))
}

/// Damped Newton iteration on `F = G = 0` in logarithmic coordinates.
pub fn newton_log(
    f: &NumLaurent,
    g: &NumLaurent,
    seed: (Cx, Cx),
    tolerance: f64,
) -> Result<((Cx, Cx), f64), CriticalError> {
    let fx = f.log_derivative(1);
    let fy = f.log_derivative(2);
    let gx = g.log_derivative(1);
    let gy = g.log_derivative(2);
    let mut p = seed;
    let mut res = system_residual(f, g, &p)?;
    for it in 0..MAX_NEWTON_ITERATIONS {
        if res < tolerance {
            return Ok((p, res));
        }
        let pt = (&p.0, &p.1);
        let (fv, gv) = (f.evaluate(pt)?, g.evaluate(pt)?);
        let (a, b, c, d) = (fx.evaluate(pt)?, fy.evaluate(pt)?, gx.evaluate(pt)?, gy.evaluate(pt)?);
        let Some((du, dv)) = solve2(&a, &b, &c, &d, &-fv, &-gv) else {
            return Err(CriticalError::NoConvergence { iterations: it, residual: res });
        };
        let mut scale = Float::with_val(p.0.prec(), 1);
        let mut improved = false;
        for _ in 0..40 {
            let cand = (&p.0 * &du.scale(&scale).exp(), &p.1 * &dv.scale(&scale).exp());
            if let Ok(r) = system_residual(f, g, &cand) {
                if r.is_finite() && r < res {
                    p = cand;
                    res = r;
                    improved = true;
                    break;
                }
            }
            scale /= 2;
        }
        if !improved {
            if res < tolerance.sqrt() * 1e-8 {
                return Ok((p, res));
            }
            return Err(CriticalError::NoConvergence { iterations: it, residual: res });
        }
    }
    if res < tolerance {
        Ok((p, res))
    } else {
        Err(CriticalError::NoConvergence { iterations: MAX_NEWTON_ITERATIONS, residual: res })
    }
}

/// Size of the next Newton step in logarithmic coordinates. Points that only
/// solve the system in the limit towards the boundary of the torus keep moving.
pub fn newton_step_norm(f: &NumLaurent, g: &NumLaurent, p: &(Cx, Cx)) -> Result<f64, CriticalError> {
    let pt = (&p.0, &p.1);
    let (fv, gv) = (f.evaluate(pt)?, g.evaluate(pt)?);
    let a = f.log_derivative(1).evaluate(pt)?;
    let b = f.log_derivative(2).evaluate(pt)?;
    let c = g.log_derivative(1).evaluate(pt)?;
    let d = g.log_derivative(2).evaluate(pt)?;
    match solve2(&a, &b, &c, &d, &-fv, &-gv) {
        Some((du, dv)) => Ok(du.abs_f64() + dv.abs_f64()),
        None => Ok(f64::INFINITY),
    }
}

/// Largest accepted final Newton step for a converged point.
pub const STEP_TOLERANCE: f64 = 1e-12;

fn shift_to_polynomial(f: &NumLaurent, prec: u32) -> BiPoly {
    let mx = f.terms.iter().map(|(e, _)| e.0).min().unwrap_or(0);
    let my = f.terms.iter().map(|(e, _)| e.1).min().unwrap_or(0);
    BiPoly {
        terms: f.terms.iter().map(|(e, c)| (((e.0 - mx) as usize, (e.1 - my) as usize), c.with_prec(prec))).collect(),
    }
}

/// All solutions in the torus of `F = G = 0`, via the resultant in `y`.
pub fn solve_torus_system(f: &NumLaurent, g: &NumLaurent, work_prec: u32) -> Result<Vec<(Cx, Cx)>, CriticalError> {
    if f.terms.is_empty() || g.terms.is_empty() {
        return Err(CriticalError::IllConditioned("empty equation".into()));
    }
    let p0 = shift_to_polynomial(f, work_prec);
    let q0 = shift_to_polynomial(g, work_prec);
    let spread = q0.deg_y() as f64 * p0.log2_range()
        + p0.deg_y() as f64 * q0.log2_range()
        + 8.0 * (p0.deg_x() + q0.deg_x() + p0.deg_y() + q0.deg_y()) as f64;
    let guard = (spread.ceil() as u32) + 96;
    let res_prec = work_prec + 2 * guard;
    let p = p0.with_prec(res_prec);
    let q = q0.with_prec(res_prec);
    let r = resultant_in_x(&p, &q, res_prec, guard + 64);
    if r.iter().all(Cx::is_zero) {
        return Err(CriticalError::IllConditioned("resultant vanishes identically".into()));
    }
    let xs: Vec<Cx> = roots(&r)?.into_iter().filter(|x| !x.is_zero()).collect();
    let mut found: Vec<(Cx, Cx)> = Vec::new();
    for x0 in &xs {
        let mut ys = nonzero_roots(&p.coeffs_in_y(x0)).unwrap_or_default();
        ys.extend(nonzero_roots(&q.coeffs_in_y(x0)).unwrap_or_default());
        for y0 in ys {
            let seed = (x0.with_prec(work_prec), y0.with_prec(work_prec));
            let loose = system_residual(f, g, &seed).unwrap_or(f64::INFINITY);
            if !(loose < 1e-6) {
                continue;
            }
            let Ok((pt, _)) = newton_log(f, g, seed, GRADIENT_TOLERANCE) else { continue };
            if !pt.0.is_finite() || !pt.1.is_finite() || pt.0.is_zero() || pt.1.is_zero() {
                continue;
            }
            if !(newton_step_norm(f, g, &pt)? < STEP_TOLERANCE) {
                continue;
            }
            if !found.iter().any(|q| q.0.rel_dist(&pt.0) < 1e-20 && q.1.rel_dist(&pt.1) < 1e-20) {
                found.push(pt);
            }
        }
    }
    Ok(found)
}

fn nonzero_roots(coeffs: &[Cx]) -> Option<Vec<Cx>> {
    if coeffs.iter().all(Cx::is_zero) {
        return None;
    }
    roots(coeffs).ok().map(|v| v.into_iter().filter(|y| !y.is_zero()).collect())
}

/// `(xy)^2 det Hess W` and its natural magnitude at a point.
pub fn hessian_at(w: &ExpLaurentPoly, k: &Float, p: &(Cx, Cx)) -> Result<(Cx, Float), CriticalError> {
    let h = w.hessian_polynomial().at_k(k)?;
    Ok(h.evaluate_with_scale((&p.0, &p.1))?)
}

fn finish_point(
    w: &ExpLaurentPoly,
    k: &Float,
    coords: (Cx, Cx),
    residual: f64,
) -> Result<CriticalPoint, CriticalError> {
    let (h, scale) = hessian_at(w, k, &coords)?;
    let nondegenerate = !scale.is_zero() && (h.abs() / scale).to_f64() > DEGENERACY_THRESHOLD;
    Ok(CriticalPoint { k: k.to_f64(), coords, grad_residual: residual, hessian_det: h, nondegenerate, label: None })
}

pub fn k_float(k: f64) -> Float {
    Float::with_val(precision(), k)
}

/// Newton refinement of a critical point of `W` at `k` from an arbitrary seed.
pub fn refine_from(w: &ExpLaurentPoly, seed: (Cx, Cx), k: f64) -> Result<CriticalPoint, CriticalError> {
    let kf = k_float(k);
    let wk = w.at_k(&kf)?;
    let (f, g) = (wk.log_derivative(1), wk.log_derivative(2));
    let (p, res) = newton_log(&f, &g, seed, GRADIENT_TOLERANCE)?;
    if !(newton_step_norm(&f, &g, &p)? < STEP_TOLERANCE) {
        return Err(CriticalError::NoConvergence { iterations: MAX_NEWTON_ITERATIONS, residual: res });
    }
    finish_point(w, &kf, p, res)
}

/// Newton refinement of a tropical branch at `k`, seeded at `alpha e^{2 pi k beta}`.
pub fn refine_at_k(w: &ExpLaurentPoly, a: &CriticalAsymptotics, k: f64) -> Result<CriticalPoint, CriticalError> {
    let seed = a.seed(&k_float(k));
    let mut pt = refine_from(w, seed, k)?;
    pt.label = Some((a.family, 0));
    Ok(pt)
}

/// Upper bound for `|log|x_j|| / (2 pi k)` over tropical critical points: rate
/// equalities are unimodular-bounded by the spread of rates times twice the
/// largest exponent. One extra unit absorbs finite-`k` amplitude effects.
pub fn tropical_scale_bound(w: &ExpLaurentPoly) -> f64 {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut max_exp = 1i64;
    for (e, s) in w.monomials() {
        for (r, _) in s.terms() {
            let r = r.to_f64();
            lo = lo.min(r);
            hi = hi.max(r);
        }
        max_exp = max_exp.max(e.0.abs()).max(e.1.abs());
    }
    let spread = if hi >= lo { hi - lo } else { 0.0 };
    2.0 * max_exp as f64 * spread + 1.0
}

/// Largest log-distance a genuine point may move when re-polished at twice
/// the working precision.
pub const CERTIFY_DRIFT: f64 = 1e-20;

/// Re-polishes a candidate at doubled precision. Pseudo-solutions pinned at
/// the precision floor near the torus boundary drift away; genuine ones stay.
pub fn survives_higher_precision(w: &ExpLaurentPoly, k: f64, p: &(Cx, Cx)) -> bool {
    let bits = 2 * precision();
    with_precision(bits, || {
        let Ok(wk) = w.at_k(&k_float(k)) else { return false };
        let (f, g) = (wk.log_derivative(1), wk.log_derivative(2));
        let seed = (p.0.with_prec(bits), p.1.with_prec(bits));
        let Ok((q, _)) = newton_log(&f, &g, seed.clone(), GRADIENT_TOLERANCE * GRADIENT_TOLERANCE) else {
            return false;
        };
        let drift = (&q.0 / &seed.0).ln().abs_f64() + (&q.1 / &seed.1).ln().abs_f64();
        let step = newton_step_norm(&f, &g, &q).unwrap_or(f64::INFINITY);
        drift < CERTIFY_DRIFT && step < STEP_TOLERANCE
    })
}

/// Every torus critical point of `W` at `k`, found by elimination.
pub fn all_critical_points(w: &ExpLaurentPoly, k: f64) -> Result<Vec<CriticalPoint>, CriticalError> {
    let kf = k_float(k);
    let wk = w.at_k(&kf)?;
    let (f, g) = (wk.log_derivative(1), wk.log_derivative(2));
    let pts = solve_torus_system(&f, &g, precision())?;
    let bound = tropical_scale_bound(w) * 2.0 * std::f64::consts::PI * k;
    let mut out = Vec::with_capacity(pts.len());
    for p in pts {
        let scale = p.0.abs().ln().to_f64().abs().max(p.1.abs().ln().to_f64().abs());
        if scale > bound || !survives_higher_precision(w, k, &p) {
            continue;
        }
        let res = system_residual(&f, &g, &p)?;
        out.push(finish_point(w, &kf, p, res)?);
    }
    out.sort_by(|a, b| cmp_point(&a.coords, &b.coords));
    Ok(out)
}

/// Log-distance between a point and a branch seed at the point's `k`.
pub fn seed_distance(p: &CriticalPoint, a: &CriticalAsymptotics) -> f64 {
    let seed = a.seed(&k_float(p.k));
    let d0 = (&p.coords.0 / &seed.0).ln().abs_f64();
    let d1 = (&p.coords.1 / &seed.1).ln().abs_f64();
    d0 + d1
}

/// Labels points with the nearest branch, greedily and one-to-one.
pub fn label_points(points: &mut [CriticalPoint], families: &[TropicalFamily]) {
    let mut pairs: Vec<(f64, usize, (usize, usize))> = Vec::new();
    for (pi, p) in points.iter().enumerate() {
        for f in families {
            for (bi, b) in f.branches.iter().enumerate() {
                pairs.push((seed_distance(p, b), pi, (f.id, bi)));
            }
        }
    }
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
    let mut used_points = vec![false; points.len()];
    let mut used_branches: BTreeSet<(usize, usize)> = BTreeSet::new();
    for (_, pi, lbl) in pairs {
        if used_points[pi] || used_branches.contains(&lbl) {
            continue;
        }
        used_points[pi] = true;
        used_branches.insert(lbl);
        points[pi].label = Some(lbl);
    }
}
