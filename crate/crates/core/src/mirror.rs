//! Mirror theta functions and Landau-Ginzburg potentials.
//!
//! Toric charts come straight from the fan. The degree-5 and degree-4 del Pezzo
//! charts are fixed Laurent expressions whose coefficients are curve classes
//! `z^[C]`, turned into rates `-omega.C`.

use crate::exp_laurent::{ExpLaurentPoly, ExpScalar, Exponent};
use crate::num::{fmt_rational, Q};
use crate::surface::{build_lattice_surface, DivisorClass, GeometryError, Surface};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MirrorError {
    #[error("class is not Kähler: degree {degree} on {curve}")]
    NotKahler { curve: String, degree: String },
    #[error("no theta function named `{0}`")]
    UnknownTheta(String),
    #[error("ray index {0} out of range")]
    BadRay(usize),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Whether classes with zero degree on some test curve are accepted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Positivity {
    Strict,
    /// Nef classes, used for the boundary of a family of Kähler classes.
    AllowNef,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MirrorChart {
    pub surface_name: String,
    pub theta_names: Vec<String>,
    pub thetas: Vec<ExpLaurentPoly>,
    pub potential: ExpLaurentPoly,
    pub chart_note: String,
}

impl MirrorChart {
    pub fn from_thetas(surface_name: &str, names: Vec<String>, thetas: Vec<ExpLaurentPoly>, note: &str) -> Self {
        let potential = thetas.iter().fold(ExpLaurentPoly::zero(), |acc, t| acc.add(t));
        MirrorChart {
            surface_name: surface_name.to_string(),
            theta_names: names,
            thetas,
            potential,
            chart_note: note.to_string(),
        }
    }

    pub fn theta(&self, name: &str) -> Result<&ExpLaurentPoly, MirrorError> {
        self.theta_names
            .iter()
            .position(|n| n == name)
            .map(|i| &self.thetas[i])
            .ok_or_else(|| MirrorError::UnknownTheta(name.to_string()))
    }

    /// Sum of the thetas with the given weights (in boundary order).
    pub fn combination(&self, weights: &[Q]) -> ExpLaurentPoly {
        let mut acc = ExpLaurentPoly::zero();
        for (w, t) in weights.iter().zip(&self.thetas) {
            if *w != 0 {
                acc = acc.add(&t.scale_q(w));
            }
        }
        acc
    }
}

fn check_positive(s: &Surface, omega: &DivisorClass, positivity: Positivity) -> Result<(), MirrorError> {
    let (curve, d) = s.min_curve_degree(omega)?;
    let ok = match positivity {
        Positivity::Strict => d > 0,
        Positivity::AllowNef => d >= 0 && s.intersection_number(omega, omega)? > 0,
    };
    if ok {
        Ok(())
    } else {
        Err(MirrorError::NotKahler { curve, degree: fmt_rational(&d) })
    }
}

/// `e^{-2 pi k omega.D_i} x^{v_i}` for boundary ray `i`.
pub fn toric_theta(s: &Surface, omega: &DivisorClass, i: usize) -> Result<ExpLaurentPoly, MirrorError> {
    check_positive(s, omega, Positivity::Strict)?;
    toric_theta_unchecked(s, omega, i)
}

fn toric_theta_unchecked(s: &Surface, omega: &DivisorClass, i: usize) -> Result<ExpLaurentPoly, MirrorError> {
    let fan = s.fan.as_ref().ok_or(GeometryError::NotInBoundarySpan)?;
    let ray = *fan.rays.get(i).ok_or(MirrorError::BadRay(i))?;
    let rate = -s.degree(omega, &s.boundary[i])?;
    Ok(ExpLaurentPoly::exp_monomial(ray, rate))
}

/// The toric chart: every boundary theta and their sum.
pub fn potential(s: &Surface, omega: &DivisorClass) -> Result<MirrorChart, MirrorError> {
    check_positive(s, omega, Positivity::Strict)?;
    let n = s.boundary.len();
    let thetas = (0..n).map(|i| toric_theta_unchecked(s, omega, i)).collect::<Result<Vec<_>, _>>()?;
    Ok(MirrorChart::from_thetas(&s.name, s.boundary_names.clone(), thetas, "torus (C*)^2 with coordinates x, y"))
}

/// `sum_i w_i theta_{D_i}` where `A = sum_i w_i D_i`.
pub fn class_theta(s: &Surface, chart: &MirrorChart, a: &DivisorClass) -> Result<ExpLaurentPoly, MirrorError> {
    let w = s.boundary_coefficients(a)?;
    Ok(chart.combination(&w))
}

/// A Laurent term `z^[C] x^m` given by its exponent and curve class.
pub struct ChartTerm {
    pub exponent: Exponent,
    pub curve: Vec<i64>,
}

fn term(exponent: Exponent, curve: &[i64]) -> ChartTerm {
    ChartTerm { exponent, curve: curve.to_vec() }
}

fn build_theta(s: &Surface, omega: &DivisorClass, terms: &[ChartTerm]) -> Result<ExpLaurentPoly, MirrorError> {
    let mut out = ExpLaurentPoly::zero();
    for t in terms {
        let rate = -s.degree(omega, &DivisorClass::from_ints(&t.curve))?;
        out.add_monomial(t.exponent, &ExpScalar::exp(rate));
    }
    Ok(out)
}

fn line(n: usize, i: usize, j: usize) -> (String, DivisorClass) {
    let mut c = vec![0i64; n + 1];
    c[0] = 1;
    c[i] = -1;
    c[j] = -1;
    (format!("L{i}{j}"), DivisorClass::from_ints(&c))
}

fn exceptional(n: usize, i: usize) -> (String, DivisorClass) {
    let mut c = vec![0i64; n + 1];
    c[i] = 1;
    (format!("E{i}"), DivisorClass::from_ints(&c))
}

/// The degree-5 del Pezzo with its anticanonical pentagon of boundary curves.
pub fn deg5_surface() -> Result<Surface, GeometryError> {
    let b = |name: &str, c: &[i64]| (name.to_string(), DivisorClass::from_ints(c));
    let boundary = vec![
        b("D1", &[1, -1, -1, 0, 0]),
        b("D2", &[0, 0, 1, 0, 0]),
        b("D3", &[1, 0, -1, -1, 0]),
        b("D4", &[0, 0, 0, 1, 0]),
        b("D5", &[1, 0, 0, -1, -1]),
    ];
    let mut extra: Vec<(String, DivisorClass)> = (1..=4).map(|i| exceptional(4, i)).collect();
    for i in 1..=4 {
        for j in i + 1..=4 {
            extra.push(line(4, i, j));
        }
    }
    let mut s = build_lattice_surface(4, boundary, extra)?;
    s.name = "dp5".into();
    Ok(s)
}

/// Degree-5 chart with `x = theta_1`, `y = theta_2` and `omega = H - sum a_i E_i`.
pub fn deg5_mirror(a: &[Q; 4], positivity: Positivity) -> Result<(Surface, DivisorClass, MirrorChart), MirrorError> {
    let s = deg5_surface()?;
    let mut coeffs = vec![Q::from(1)];
    coeffs.extend(a.iter().map(|v| Q::from(-v)));
    let omega = DivisorClass::new(coeffs);
    check_positive(&s, &omega, positivity)?;
    let thetas = [
        vec![term((1, 0), &[0, 0, 0, 0, 0])],
        vec![term((0, 1), &[0, 0, 0, 0, 0])],
        vec![term((-1, 0), &[1, 0, 0, 0, -1]), term((-1, 1), &[0, 0, 1, 0, 0])],
        vec![
            term((-1, 0), &[1, 0, 0, -1, 0]),
            term((0, -1), &[2, -1, -1, -1, -1]),
            term((-1, -1), &[2, 0, -1, -1, -1]),
        ],
        vec![term((0, -1), &[1, 0, -1, 0, 0]), term((1, -1), &[1, -1, -1, 0, 0])],
    ];
    let built = thetas.iter().map(|t| build_theta(&s, &omega, t)).collect::<Result<Vec<_>, _>>()?;
    let names = (1..=5).map(|i| format!("D{i}")).collect();
    let chart = MirrorChart::from_thetas(
        "dp5",
        names,
        built,
        "dense open subset where theta_1, theta_2 are coordinates; points off the chart contribute 0",
    );
    Ok((s, omega, chart))
}

/// The degree-4 del Pezzo with a four-cycle of boundary curves.
pub fn deg4_surface() -> Result<Surface, GeometryError> {
    let b = |name: &str, c: &[i64]| (name.to_string(), DivisorClass::from_ints(c));
    let boundary = vec![
        b("D1", &[0, 1, 0, 0, 0, 0]),
        b("D2", &[1, -1, -1, 0, 0, 0]),
        b("D3", &[1, 0, 0, -1, -1, 0]),
        b("D4", &[1, -1, 0, 0, 0, -1]),
    ];
    let mut extra: Vec<(String, DivisorClass)> = (1..=5).map(|i| exceptional(5, i)).collect();
    for i in 1..=5 {
        for j in i + 1..=5 {
            extra.push(line(5, i, j));
        }
    }
    extra.push(("C".into(), DivisorClass::from_ints(&[2, -1, -1, -1, -1, -1])));
    let mut s = build_lattice_surface(5, boundary, extra)?;
    s.name = "dp4".into();
    Ok(s)
}

/// Degree-4 chart for `omega = (1 + d) H - E2/2 - E5/2 - d (E1 + E3 + E4)`.
pub fn deg4_mirror(delta: &Q, positivity: Positivity) -> Result<(Surface, DivisorClass, MirrorChart), MirrorError> {
    let s = deg4_surface()?;
    let half = Q::from((1, 2));
    let omega = DivisorClass::new(vec![
        Q::from(1 + delta),
        Q::from(-delta),
        -half.clone(),
        Q::from(-delta),
        Q::from(-delta),
        -half,
    ]);
    check_positive(&s, &omega, positivity)?;
    let thetas = [
        vec![term((-1, -2), &[0, 1, 0, 0, 0, -1]), term((0, -1), &[1, 0, 0, 0, -1, -1]), term((-1, -1), &[0; 6])],
        vec![term((0, 1), &[1, -1, 0, -1, 0, 0]), term((-1, -1), &[0, 1, 0, 0, 0, -1]), term((-1, 0), &[0; 6])],
        vec![
            term((1, 2), &[2, -2, -1, -1, 0, 0]),
            term((0, 1), &[1, -1, -1, 0, 0, 0]),
            term((1, 1), &[1, -1, 0, 0, 0, 0]),
        ],
        vec![
            term((1, 1), &[2, -1, -1, -1, -1, 0]),
            term((0, -1), &[0, 1, 0, 0, 0, 0]),
            term((1, 0), &[1, 0, 0, 0, -1, 0]),
        ],
    ];
    let built = thetas.iter().map(|t| build_theta(&s, &omega, t)).collect::<Result<Vec<_>, _>>()?;
    let names = (1..=4).map(|i| format!("D{i}")).collect();
    let chart = MirrorChart::from_thetas(
        "dp4",
        names,
        built,
        "dense open torus chart with coordinates x, y; points off the chart contribute 0",
    );
    Ok((s, omega, chart))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::{q, qi};
    use crate::surface::build_toric_surface;

    #[test]
    fn blowup_potential_rates() {
        let s = build_toric_surface(&[(-1, -1), (1, 0), (1, 1), (0, 1)], &["H", "L1", "E", "L2"]).unwrap();
        let omega = DivisorClass::new(vec![qi(1), qi(0), q(-1, 4), qi(0)]);
        let chart = potential(&s, &omega).unwrap();
        let rate = |e| chart.potential.coefficient(e).unwrap().leading().unwrap().1;
        assert_eq!(rate((-1, -1)), qi(-1));
        assert_eq!(rate((1, 0)), q(-3, 4));
        assert_eq!(rate((0, 1)), q(-3, 4));
        assert_eq!(rate((1, 1)), q(-1, 4));
    }

    #[test]
    fn not_kahler_is_rejected() {
        let s = build_toric_surface(&[(-1, -1), (1, 0), (1, 1), (0, 1)], &["H", "L1", "E", "L2"]).unwrap();
        let omega = DivisorClass::new(vec![qi(1), qi(0), qi(-1), qi(0)]);
        assert!(matches!(potential(&s, &omega), Err(MirrorError::NotKahler { .. })));
    }

    #[test]
    fn degree_five_limit_potential() {
        let (_, _, chart) = deg5_mirror(&[q(1, 2), qi(0), qi(0), qi(0)], Positivity::AllowNef).unwrap();
        let w = &chart.potential;
        let rates = |e| -> Vec<(Q, f64)> {
            w.coefficient(e).unwrap().terms().map(|(r, a)| (r.clone(), a.to_c64().0)).collect()
        };
        assert_eq!(rates((1, -1)), vec![(q(-1, 2), 1.0)]);
        assert_eq!(rates((-1, -1)), vec![(qi(-2), 1.0)]);
        assert_eq!(rates((-1, 0)), vec![(qi(-1), 2.0)]);
        assert_eq!(rates((0, -1)), vec![(q(-3, 2), 1.0), (qi(-1), 1.0)]);
        assert_eq!(rates((-1, 1)), vec![(qi(0), 1.0)]);
        assert_eq!(w.len(), 7);
        assert!(matches!(
            deg5_mirror(&[q(1, 2), qi(0), qi(0), qi(0)], Positivity::Strict),
            Err(MirrorError::NotKahler { .. })
        ));
    }

    #[test]
    fn degree_four_first_theta() {
        let (_, _, chart) = deg4_mirror(&qi(0), Positivity::AllowNef).unwrap();
        let t = chart.theta("D1").unwrap();
        assert_eq!(t.coefficient((-1, -2)).unwrap().leading().unwrap().1, q(1, 2));
        assert_eq!(t.coefficient((0, -1)).unwrap().leading().unwrap().1, q(-1, 2));
        assert_eq!(t.coefficient((-1, -1)).unwrap().leading().unwrap().1, qi(0));
        assert_eq!(chart.potential.coefficient((1, 2)).unwrap().leading().unwrap().1, q(-3, 2));
    }
}
