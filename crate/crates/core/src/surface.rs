//! Exact intersection theory on smooth complete toric surfaces and on
//! blowups of the plane presented through a declared `(H, E_1, ..., E_n)` lattice.
//!
//! A toric surface uses its boundary divisors `D_i` as the (overcomplete) basis,
//! with the intersection matrix read off the fan: adjacent boundary curves meet
//! once and `D_i^2 = -a_i` where `v_{i-1} + v_{i+1} = a_i v_i`.

use crate::num::{fmt_rational, qi, Q};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("fewer than three rays ({0}); the fan is not complete")]
    DegenerateFan(usize),
    #[error("ray {index} = ({x}, {y}) is not primitive")]
    NonPrimitiveRay { index: usize, x: i64, y: i64 },
    #[error("rays {first} and {second} have determinant {det}; the fan is not smooth")]
    NonSmoothFan { first: usize, second: usize, det: i64 },
    #[error("rays are not in counterclockwise cyclic order")]
    NotCounterclockwise,
    #[error("ray {0} is repeated")]
    DuplicateRay(usize),
    #[error("{rays} rays but {names} names")]
    NameCountMismatch { rays: usize, names: usize },
    #[error("class has {found} coefficients but the surface basis has {expected}")]
    BasisMismatch { expected: usize, found: usize },
    #[error("class has zero self-intersection")]
    DegenerateClass,
    #[error("unknown divisor class name `{0}`")]
    UnknownClass(String),
    #[error("class is not a combination of the boundary divisors")]
    NotInBoundarySpan,
}

/// Cyclically ordered primitive rays of a smooth complete fan in `Z^2`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fan2D {
    pub rays: Vec<(i64, i64)>,
    pub names: Vec<String>,
}

fn det(a: (i64, i64), b: (i64, i64)) -> i64 {
    a.0 * b.1 - a.1 * b.0
}

fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.unsigned_abs(), b.unsigned_abs());
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a as i64
}

impl Fan2D {
    pub fn new(rays: Vec<(i64, i64)>, names: Vec<String>) -> Result<Self, GeometryError> {
        let n = rays.len();
        if names.len() != n {
            return Err(GeometryError::NameCountMismatch { rays: n, names: names.len() });
        }
        if n < 3 {
            return Err(GeometryError::DegenerateFan(n));
        }
        const LIMIT: i64 = 1 << 24;
        for (i, &(x, y)) in rays.iter().enumerate() {
            if x.abs() > LIMIT || y.abs() > LIMIT || gcd(x, y) != 1 {
                return Err(GeometryError::NonPrimitiveRay { index: i, x, y });
            }
            if rays[..i].contains(&(x, y)) {
                return Err(GeometryError::DuplicateRay(i));
            }
        }
        let dets: Vec<i64> = (0..n).map(|i| det(rays[i], rays[(i + 1) % n])).collect();
        if dets.iter().all(|&d| d == -1) {
            return Err(GeometryError::NotCounterclockwise);
        }
        for (i, &d) in dets.iter().enumerate() {
            if d != 1 {
                if d.abs() == 1 {
                    return Err(GeometryError::NotCounterclockwise);
                }
                return Err(GeometryError::NonSmoothFan { first: i, second: (i + 1) % n, det: d });
            }
        }
        // Positive consecutive determinants leave only the winding number to check.
        let total: f64 = (0..n)
            .map(|i| {
                let (a, b) = (rays[i], rays[(i + 1) % n]);
                let dot = (a.0 * b.0 + a.1 * b.1) as f64;
                (det(a, b) as f64).atan2(dot)
            })
            .sum();
        if (total - std::f64::consts::TAU).abs() > 1e-6 {
            return Err(GeometryError::NotCounterclockwise);
        }
        Ok(Fan2D { rays, names })
    }

    pub fn len(&self) -> usize {
        self.rays.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rays.is_empty()
    }

    /// The integer `a_i` with `v_{i-1} + v_{i+1} = a_i v_i`.
    pub fn fan_relation(&self, i: usize) -> i64 {
        let n = self.len();
        let prev = self.rays[(i + n - 1) % n];
        let next = self.rays[(i + 1) % n];
        let sum = (prev.0 + next.0, prev.1 + next.1);
        let v = self.rays[i];
        // Smoothness makes the sum an integer multiple of v.
        if v.0 != 0 {
            sum.0 / v.0
        } else {
            sum.1 / v.1
        }
    }
}

/// Rational coefficients over a surface's declared basis.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DivisorClass {
    pub coeffs: Vec<Q>,
}

impl DivisorClass {
    pub fn new(coeffs: Vec<Q>) -> Self {
        DivisorClass { coeffs }
    }

    pub fn zero(n: usize) -> Self {
        DivisorClass { coeffs: vec![Q::new(); n] }
    }

    pub fn unit(n: usize, i: usize) -> Self {
        let mut c = Self::zero(n);
        c.coeffs[i] = qi(1);
        c
    }

    pub fn from_ints(v: &[i64]) -> Self {
        DivisorClass { coeffs: v.iter().map(|&x| qi(x)).collect() }
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| *c == 0)
    }

    pub fn add(&self, other: &DivisorClass) -> DivisorClass {
        DivisorClass { coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| Q::from(a + b)).collect() }
    }

    pub fn sub(&self, other: &DivisorClass) -> DivisorClass {
        self.add(&other.scale(&qi(-1)))
    }

    pub fn scale(&self, s: &Q) -> DivisorClass {
        DivisorClass { coeffs: self.coeffs.iter().map(|a| Q::from(a * s)).collect() }
    }

    pub fn neg(&self) -> DivisorClass {
        self.scale(&qi(-1))
    }
}

impl fmt::Display for DivisorClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.coeffs.iter().map(fmt_rational).collect();
        write!(f, "[{}]", parts.join(", "))
    }
}

/// A polarisable surface: intersection form on a basis, boundary cycle, and
/// the curves used for the Kähler positivity test.
#[derive(Debug, Clone, PartialEq)]
pub struct Surface {
    pub name: String,
    pub basis: Vec<String>,
    pub form: Vec<Vec<Q>>,
    pub boundary_names: Vec<String>,
    pub boundary: Vec<DivisorClass>,
    pub fan: Option<Fan2D>,
    pub anticanonical: DivisorClass,
    pub test_curves: Vec<(String, DivisorClass)>,
    pub named: Vec<(String, DivisorClass)>,
}

/// Builds the toric surface of a smooth complete fan.
pub fn build_toric_surface(rays: &[(i64, i64)], names: &[&str]) -> Result<Surface, GeometryError> {
    let fan = Fan2D::new(rays.to_vec(), names.iter().map(|s| s.to_string()).collect())?;
    Ok(toric_surface_from_fan(fan))
}

pub fn toric_surface_from_fan(fan: Fan2D) -> Surface {
    let n = fan.len();
    let mut form = vec![vec![Q::new(); n]; n];
    for (i, row) in form.iter_mut().enumerate() {
        row[i] = qi(-fan.fan_relation(i));
        row[(i + 1) % n] = qi(1);
        row[(i + n - 1) % n] = qi(1);
    }
    let boundary: Vec<DivisorClass> = (0..n).map(|i| DivisorClass::unit(n, i)).collect();
    let anticanonical = DivisorClass::new(vec![qi(1); n]);
    let test_curves = fan.names.iter().cloned().zip(boundary.iter().cloned()).collect();
    let named = fan.names.iter().cloned().zip(boundary.iter().cloned()).collect();
    Surface {
        name: "toric".into(),
        basis: fan.names.clone(),
        form,
        boundary_names: fan.names.clone(),
        boundary,
        fan: Some(fan),
        anticanonical,
        test_curves,
        named,
    }
}

/// Blowup of the plane in `n` points with basis `H, E_1, ..., E_n`, diagonal
/// form `H^2 = 1`, `E_i^2 = -1`, and the given boundary cycle.
pub fn build_lattice_surface(
    n_points: usize,
    boundary: Vec<(String, DivisorClass)>,
    extra_curves: Vec<(String, DivisorClass)>,
) -> Result<Surface, GeometryError> {
    let dim = n_points + 1;
    let mut basis = vec!["H".to_string()];
    basis.extend((1..=n_points).map(|i| format!("E{i}")));
    let mut form = vec![vec![Q::new(); dim]; dim];
    form[0][0] = qi(1);
    for (i, row) in form.iter_mut().enumerate().skip(1) {
        row[i] = qi(-1);
    }
    for (_, c) in boundary.iter().chain(&extra_curves) {
        if c.len() != dim {
            return Err(GeometryError::BasisMismatch { expected: dim, found: c.len() });
        }
    }
    let mut anticanonical = DivisorClass::zero(dim);
    anticanonical.coeffs[0] = qi(3);
    for c in anticanonical.coeffs.iter_mut().skip(1) {
        *c = qi(-1);
    }
    let mut named: Vec<(String, DivisorClass)> =
        basis.iter().enumerate().map(|(i, b)| (b.clone(), DivisorClass::unit(dim, i))).collect();
    named.extend(boundary.iter().cloned());
    let mut test_curves = boundary.clone();
    test_curves.extend(extra_curves);
    Ok(Surface {
        name: format!("blowup of the plane in {n_points} points"),
        basis,
        form,
        boundary_names: boundary.iter().map(|(n, _)| n.clone()).collect(),
        boundary: boundary.into_iter().map(|(_, c)| c).collect(),
        fan: None,
        anticanonical,
        test_curves,
        named,
    })
}

impl Surface {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn is_toric(&self) -> bool {
        self.fan.is_some()
    }

    fn check(&self, c: &DivisorClass) -> Result<(), GeometryError> {
        if c.len() != self.dim() {
            return Err(GeometryError::BasisMismatch { expected: self.dim(), found: c.len() });
        }
        Ok(())
    }

    /// Bilinear extension of the intersection form.
    pub fn intersection_number(&self, a: &DivisorClass, b: &DivisorClass) -> Result<Q, GeometryError> {
        self.check(a)?;
        self.check(b)?;
        let mut total = Q::new();
        for (i, ai) in a.coeffs.iter().enumerate() {
            if *ai == 0 {
                continue;
            }
            for (j, bj) in b.coeffs.iter().enumerate() {
                if *bj == 0 || self.form[i][j] == 0 {
                    continue;
                }
                total += Q::from(ai * bj) * &self.form[i][j];
            }
        }
        Ok(total)
    }

    /// `K_X`, the negative of the anticanonical boundary class.
    pub fn canonical_class(&self) -> DivisorClass {
        self.anticanonical.neg()
    }

    /// `omega . C`; the `k` scaling is applied by callers.
    pub fn degree(&self, omega: &DivisorClass, curve: &DivisorClass) -> Result<Q, GeometryError> {
        self.intersection_number(omega, curve)
    }

    /// Strict positivity on every test curve (all boundary rays for toric surfaces).
    pub fn is_kahler(&self, omega: &DivisorClass) -> bool {
        self.min_curve_degree(omega).map(|(_, d)| d > 0).unwrap_or(false)
    }

    pub fn is_nef(&self, omega: &DivisorClass) -> bool {
        self.min_curve_degree(omega).map(|(_, d)| d >= 0).unwrap_or(false)
    }

    /// The test curve of smallest degree together with that degree.
    pub fn min_curve_degree(&self, omega: &DivisorClass) -> Result<(String, Q), GeometryError> {
        let mut best: Option<(String, Q)> = None;
        for (name, c) in &self.test_curves {
            let d = self.degree(omega, c)?;
            if best.as_ref().map(|(_, b)| d < *b).unwrap_or(true) {
                best = Some((name.clone(), d));
            }
        }
        best.ok_or(GeometryError::DegenerateFan(0))
    }

    /// `mu(X) = -K.omega / omega^2`.
    pub fn slope_mu(&self, omega: &DivisorClass) -> Result<Q, GeometryError> {
        let sq = self.intersection_number(omega, omega)?;
        if sq == 0 {
            return Err(GeometryError::DegenerateClass);
        }
        let num = self.intersection_number(&self.anticanonical, omega)?;
        Ok(num / sq)
    }

    pub fn class_by_name(&self, name: &str) -> Result<DivisorClass, GeometryError> {
        self.named
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, c)| c.clone())
            .ok_or_else(|| GeometryError::UnknownClass(name.to_string()))
    }

    pub fn boundary_index(&self, name: &str) -> Option<usize> {
        self.boundary_names.iter().position(|n| n == name)
    }

    /// Linear combination of named classes.
    pub fn combine(&self, terms: &[(String, Q)]) -> Result<DivisorClass, GeometryError> {
        let mut acc = DivisorClass::zero(self.dim());
        for (name, coeff) in terms {
            acc = acc.add(&self.class_by_name(name)?.scale(coeff));
        }
        Ok(acc)
    }

    /// Coefficients `w` with `sum_i w_i D_i = A` (some solution when several exist).
    pub fn boundary_coefficients(&self, a: &DivisorClass) -> Result<Vec<Q>, GeometryError> {
        self.check(a)?;
        if self.is_toric() {
            return Ok(a.coeffs.clone());
        }
        let rows = self.dim();
        let cols = self.boundary.len();
        let mut m: Vec<Vec<Q>> = (0..rows)
            .map(|r| {
                let mut row: Vec<Q> = self.boundary.iter().map(|d| d.coeffs[r].clone()).collect();
                row.push(a.coeffs[r].clone());
                row
            })
            .collect();
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..cols {
            let Some(p) = (r..rows).find(|&i| m[i][c] != 0) else { continue };
            m.swap(r, p);
            let piv = m[r][c].clone();
            for v in m[r].iter_mut() {
                *v /= &piv;
            }
            for i in 0..rows {
                if i != r && m[i][c] != 0 {
                    let f = m[i][c].clone();
                    for j in 0..=cols {
                        let t = Q::from(&f * &m[r][j]);
                        m[i][j] -= t;
                    }
                }
            }
            pivots.push((r, c));
            r += 1;
            if r == rows {
                break;
            }
        }
        if m[r..].iter().any(|row| row[cols] != 0) {
            return Err(GeometryError::NotInBoundarySpan);
        }
        let mut w = vec![Q::new(); cols];
        for (row, col) in pivots {
            w[col] = m[row][cols].clone();
        }
        Ok(w)
    }

    /// Rank of the intersection form (the Picard rank for a toric surface).
    pub fn form_rank(&self) -> usize {
        let mut m = self.form.clone();
        let n = m.len();
        let mut rank = 0;
        for c in 0..n {
            let Some(p) = (rank..n).find(|&i| m[i][c] != 0) else { continue };
            m.swap(rank, p);
            for i in 0..n {
                if i != rank && m[i][c] != 0 {
                    let f = Q::from(&m[i][c] / &m[rank][c]);
                    for j in 0..n {
                        let t = Q::from(&f * &m[rank][j]);
                        m[i][j] -= t;
                    }
                }
            }
            rank += 1;
        }
        rank
    }

    /// Formats the intersection matrix for reports.
    pub fn form_strings(&self) -> Vec<Vec<String>> {
        self.form.iter().map(|r| r.iter().map(fmt_rational).collect()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::q;

    fn blp() -> Surface {
        build_toric_surface(&[(-1, -1), (1, 0), (1, 1), (0, 1)], &["H", "L1", "E", "L2"]).unwrap()
    }

    #[test]
    fn exceptional_curve_self_intersection() {
        let s = blp();
        let e = s.class_by_name("E").unwrap();
        assert_eq!(s.intersection_number(&e, &e).unwrap(), qi(-1));
        let h = s.class_by_name("H").unwrap();
        assert_eq!(s.intersection_number(&h, &h).unwrap(), qi(1));
    }

    #[test]
    fn rejects_bad_fans() {
        assert!(matches!(build_toric_surface(&[(1, 0), (0, 1)], &["a", "b"]), Err(GeometryError::DegenerateFan(2))));
        assert!(matches!(
            build_toric_surface(&[(2, 0), (0, 1), (-1, -1)], &["a", "b", "c"]),
            Err(GeometryError::NonPrimitiveRay { .. })
        ));
        assert!(matches!(
            build_toric_surface(&[(1, 0), (1, 2), (-1, -1)], &["a", "b", "c"]),
            Err(GeometryError::NonSmoothFan { .. })
        ));
        assert!(matches!(
            build_toric_surface(&[(1, 0), (-1, -1), (0, 1)], &["a", "b", "c"]),
            Err(GeometryError::NotCounterclockwise)
        ));
    }

    #[test]
    fn kahler_and_slope() {
        let s = blp();
        let omega = s.combine(&[("H".into(), qi(1)), ("E".into(), q(-1, 2))]).unwrap();
        assert!(s.is_kahler(&omega));
        assert_eq!(s.slope_mu(&omega).unwrap(), q(10, 3));
        let bad = s.combine(&[("H".into(), qi(1)), ("E".into(), qi(-1))]).unwrap();
        assert!(!s.is_kahler(&bad));
    }

    #[test]
    fn lattice_boundary_coefficients() {
        let d = |v: &[i64]| DivisorClass::from_ints(v);
        let s = build_lattice_surface(
            4,
            vec![
                ("D1".into(), d(&[1, -1, -1, 0, 0])),
                ("D2".into(), d(&[0, 0, 1, 0, 0])),
                ("D3".into(), d(&[1, 0, -1, -1, 0])),
                ("D4".into(), d(&[0, 0, 0, 1, 0])),
                ("D5".into(), d(&[1, 0, 0, -1, -1])),
            ],
            vec![],
        )
        .unwrap();
        let omega = DivisorClass::new(vec![qi(1), q(-1, 2), qi(0), qi(0), qi(0)]);
        let w = s.boundary_coefficients(&omega).unwrap();
        assert_eq!(w, vec![q(1, 2), qi(1), q(1, 2), q(1, 2), qi(0)]);
    }
}
