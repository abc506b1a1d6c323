//! Exponential sums `sum_t alpha_t e^{2 pi k beta_t}` with exact rational rates,
//! and two-variable Laurent polynomials whose coefficients are such sums.
//!
//! Rates stay symbolic in `k`; only amplitudes are floating point. When two
//! amplitudes at the same rate cancel to below `2^-64` of the larger one the term
//! is dropped, so leading-order extraction sees genuine cancellation as absence.

use crate::num::{exp_rate, fmt_rational, parse_rational, precision, sum_by_magnitude, Cx, Q};
use rug::Float;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

/// Largest `|2 pi k beta|` (in nats) that evaluation accepts.
pub const MAX_EXPONENT_NATS: f64 = 1.0e6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LaurentError {
    #[error("empty exponential sum has no leading term")]
    EmptyScalar,
    #[error("exponent 2*pi*k*{rate} at k = {k} exceeds the evaluation budget")]
    Overflow { rate: String, k: f64 },
    #[error("evaluation point has a zero coordinate")]
    ZeroCoordinate,
    #[error("malformed serialized polynomial: {0}")]
    Malformed(String),
}

fn negligible(sum: &Cx, a: &Cx, b: &Cx) -> bool {
    if sum.is_zero() {
        return true;
    }
    let scale = a.abs().max(&b.abs()).clone();
    let mut threshold = scale;
    threshold >>= 64;
    sum.abs() <= threshold
}

/// Finite sum of `alpha e^{2 pi k beta}` keyed by the rate `beta`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExpScalar {
    terms: BTreeMap<Q, Cx>,
}

impl ExpScalar {
    pub fn zero() -> Self {
        ExpScalar { terms: BTreeMap::new() }
    }

    pub fn term(rate: Q, amplitude: Cx) -> Self {
        let mut s = Self::zero();
        s.add_term(rate, amplitude);
        s
    }

    /// `e^{2 pi k rate}` with unit amplitude.
    pub fn exp(rate: Q) -> Self {
        Self::term(rate, Cx::one())
    }

    pub fn constant(c: Cx) -> Self {
        Self::term(Q::new(), c)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Q, &Cx)> {
        self.terms.iter()
    }

    pub fn add_term(&mut self, rate: Q, amplitude: Cx) {
        if amplitude.is_zero() {
            return;
        }
        match self.terms.get_mut(&rate) {
            None => {
                self.terms.insert(rate, amplitude);
            }
            Some(existing) => {
                let sum = &*existing + &amplitude;
                if negligible(&sum, existing, &amplitude) {
                    self.terms.remove(&rate);
                } else {
                    *existing = sum;
                }
            }
        }
    }

    pub fn add(&self, other: &ExpScalar) -> ExpScalar {
        let mut out = self.clone();
        for (r, a) in &other.terms {
            out.add_term(r.clone(), a.clone());
        }
        out
    }

    pub fn neg(&self) -> ExpScalar {
        ExpScalar { terms: self.terms.iter().map(|(r, a)| (r.clone(), -a)).collect() }
    }

    pub fn sub(&self, other: &ExpScalar) -> ExpScalar {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &ExpScalar) -> ExpScalar {
        let mut out = ExpScalar::zero();
        for (r1, a1) in &self.terms {
            for (r2, a2) in &other.terms {
                out.add_term(Q::from(r1 + r2), a1 * a2);
            }
        }
        out
    }

    pub fn scale(&self, c: &Cx) -> ExpScalar {
        let mut out = ExpScalar::zero();
        for (r, a) in &self.terms {
            out.add_term(r.clone(), a * c);
        }
        out
    }

    pub fn scale_q(&self, c: &Q) -> ExpScalar {
        if *c == 0 {
            return ExpScalar::zero();
        }
        ExpScalar { terms: self.terms.iter().map(|(r, a)| (r.clone(), a.scale_q(c))).collect() }
    }

    /// Multiplies every rate by `factor` (the `omega -> k omega` rescaling).
    pub fn rescale_rates(&self, factor: &Q) -> ExpScalar {
        let mut out = ExpScalar::zero();
        for (r, a) in &self.terms {
            out.add_term(Q::from(r * factor), a.clone());
        }
        out
    }

    /// Shifts every rate by `shift`, i.e. multiplies by `e^{2 pi k shift}`.
    pub fn shift_rates(&self, shift: &Q) -> ExpScalar {
        ExpScalar { terms: self.terms.iter().map(|(r, a)| (Q::from(r + shift), a.clone())).collect() }
    }

    /// Amplitude and rate of the dominant term as `k -> infinity`.
    pub fn leading(&self) -> Result<(Cx, Q), LaurentError> {
        self.terms.iter().next_back().map(|(r, a)| (a.clone(), r.clone())).ok_or(LaurentError::EmptyScalar)
    }

    pub fn max_rate(&self) -> Option<Q> {
        self.terms.keys().next_back().cloned()
    }

    /// Numeric value at a given `k`, summing terms in order of magnitude.
    pub fn evaluate(&self, k: &Float) -> Result<Cx, LaurentError> {
        let mut parts = Vec::with_capacity(self.terms.len());
        for (r, a) in &self.terms {
            let nats = 2.0 * std::f64::consts::PI * k.to_f64() * r.to_f64();
            if nats.abs() > MAX_EXPONENT_NATS {
                return Err(LaurentError::Overflow { rate: fmt_rational(r), k: k.to_f64() });
            }
            let v = a.scale(&exp_rate(r, k));
            if !v.is_finite() {
                return Err(LaurentError::Overflow { rate: fmt_rational(r), k: k.to_f64() });
            }
            parts.push(v);
        }
        Ok(sum_by_magnitude(parts))
    }
}

/// Exponent vector of a monomial `x^m1 y^m2`.
pub type Exponent = (i64, i64);

/// Laurent polynomial in two variables over [`ExpScalar`].
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExpLaurentPoly {
    monos: BTreeMap<Exponent, ExpScalar>,
}

impl ExpLaurentPoly {
    pub fn zero() -> Self {
        ExpLaurentPoly { monos: BTreeMap::new() }
    }

    pub fn monomial(exp: Exponent, coeff: ExpScalar) -> Self {
        let mut p = Self::zero();
        p.add_monomial(exp, &coeff);
        p
    }

    /// `e^{2 pi k rate} x^m` with unit amplitude.
    pub fn exp_monomial(exp: Exponent, rate: Q) -> Self {
        Self::monomial(exp, ExpScalar::exp(rate))
    }

    pub fn constant(c: ExpScalar) -> Self {
        Self::monomial((0, 0), c)
    }

    pub fn is_zero(&self) -> bool {
        self.monos.is_empty()
    }

    pub fn len(&self) -> usize {
        self.monos.len()
    }

    pub fn is_empty(&self) -> bool {
        self.monos.is_empty()
    }

    pub fn monomials(&self) -> impl Iterator<Item = (&Exponent, &ExpScalar)> {
        self.monos.iter()
    }

    pub fn coefficient(&self, exp: Exponent) -> Option<&ExpScalar> {
        self.monos.get(&exp)
    }

    pub fn add_monomial(&mut self, exp: Exponent, coeff: &ExpScalar) {
        let merged = match self.monos.get(&exp) {
            Some(existing) => existing.add(coeff),
            None => coeff.clone(),
        };
        if merged.is_zero() {
            self.monos.remove(&exp);
        } else {
            self.monos.insert(exp, merged);
        }
    }

    pub fn add(&self, other: &ExpLaurentPoly) -> ExpLaurentPoly {
        let mut out = self.clone();
        for (e, c) in &other.monos {
            out.add_monomial(*e, c);
        }
        out
    }

    pub fn sub(&self, other: &ExpLaurentPoly) -> ExpLaurentPoly {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> ExpLaurentPoly {
        ExpLaurentPoly { monos: self.monos.iter().map(|(e, c)| (*e, c.neg())).collect() }
    }

    pub fn mul(&self, other: &ExpLaurentPoly) -> ExpLaurentPoly {
        let mut out = ExpLaurentPoly::zero();
        for (e1, c1) in &self.monos {
            for (e2, c2) in &other.monos {
                out.add_monomial((e1.0 + e2.0, e1.1 + e2.1), &c1.mul(c2));
            }
        }
        out
    }

    pub fn scale(&self, c: &Cx) -> ExpLaurentPoly {
        let mut out = ExpLaurentPoly::zero();
        for (e, s) in &self.monos {
            out.add_monomial(*e, &s.scale(c));
        }
        out
    }

    pub fn scale_q(&self, c: &Q) -> ExpLaurentPoly {
        let mut out = ExpLaurentPoly::zero();
        for (e, s) in &self.monos {
            out.add_monomial(*e, &s.scale_q(c));
        }
        out
    }

    pub fn scale_scalar(&self, c: &ExpScalar) -> ExpLaurentPoly {
        let mut out = ExpLaurentPoly::zero();
        for (e, s) in &self.monos {
            out.add_monomial(*e, &s.mul(c));
        }
        out
    }

    pub fn rescale_rates(&self, factor: &Q) -> ExpLaurentPoly {
        let mut out = ExpLaurentPoly::zero();
        for (e, s) in &self.monos {
            out.add_monomial(*e, &s.rescale_rates(factor));
        }
        out
    }

    /// `x_j d/dx_j`: multiplies each monomial by its exponent on `axis` (1 or 2).
    pub fn log_derivative(&self, axis: usize) -> ExpLaurentPoly {
        let mut out = ExpLaurentPoly::zero();
        for (e, s) in &self.monos {
            let m = if axis == 1 { e.0 } else { e.1 };
            if m != 0 {
                out.add_monomial(*e, &s.scale_q(&Q::from(m)));
            }
        }
        out
    }

    /// `(xy)^2 det Hess W`, assembled from log derivatives:
    /// `(x^2 W_xx)(y^2 W_yy) - (xy W_xy)^2` with `x^2 W_xx = t1 t1 W - t1 W`.
    pub fn hessian_polynomial(&self) -> ExpLaurentPoly {
        let t1 = self.log_derivative(1);
        let t2 = self.log_derivative(2);
        let xx = t1.log_derivative(1).sub(&t1);
        let yy = t2.log_derivative(2).sub(&t2);
        let xy = t1.log_derivative(2);
        xx.mul(&yy).sub(&xy.mul(&xy))
    }

    /// Largest leading rate over all monomial coefficients.
    pub fn max_rate(&self) -> Option<Q> {
        self.monos.values().filter_map(ExpScalar::max_rate).max()
    }

    /// Numeric coefficients at a fixed `k`.
    pub fn at_k(&self, k: &Float) -> Result<NumLaurent, LaurentError> {
        let mut terms = Vec::with_capacity(self.monos.len());
        for (e, s) in &self.monos {
            let c = s.evaluate(k)?;
            if !c.is_zero() {
                terms.push((*e, c));
            }
        }
        Ok(NumLaurent { terms })
    }

    pub fn evaluate(&self, k: &Float, point: (&Cx, &Cx)) -> Result<Cx, LaurentError> {
        self.at_k(k)?.evaluate(point)
    }

    /// Substitutes `x_j = alpha_j e^{2 pi k beta_j}` symbolically.
    pub fn restrict_along(&self, a: &CriticalAsymptotics) -> ExpScalar {
        let mut out = ExpScalar::zero();
        for (e, s) in &self.monos {
            let shift = Q::from(&a.beta.0 * e.0) + Q::from(&a.beta.1 * e.1);
            let amp = &a.alpha.0.powi(e.0) * &a.alpha.1.powi(e.1);
            for (r, c) in s.terms() {
                out.add_term(Q::from(r + &shift), c * &amp);
            }
        }
        out
    }

    /// Affine rate `leading rate + <m, beta>` of each monomial.
    pub fn affine_rates(&self, beta: &(Q, Q)) -> Vec<(Exponent, Q)> {
        self.monos
            .iter()
            .filter_map(|(e, s)| s.max_rate().map(|r| (*e, r + Q::from(&beta.0 * e.0) + Q::from(&beta.1 * e.1))))
            .collect()
    }

    pub fn to_serial(&self) -> Vec<SerialMonomial> {
        self.monos
            .iter()
            .map(|(e, s)| SerialMonomial {
                exponent: [e.0, e.1],
                terms: s
                    .terms()
                    .map(|(r, a)| {
                        let (re, im) = a.to_strings();
                        SerialTerm { rate: fmt_rational(r), re, im }
                    })
                    .collect(),
            })
            .collect()
    }

    pub fn from_serial(items: &[SerialMonomial]) -> Result<Self, LaurentError> {
        let mut out = ExpLaurentPoly::zero();
        for m in items {
            let mut s = ExpScalar::zero();
            for t in &m.terms {
                let rate =
                    parse_rational(&t.rate).ok_or_else(|| LaurentError::Malformed(format!("rate `{}`", t.rate)))?;
                let amp = Cx::parse(&t.re, &t.im)
                    .ok_or_else(|| LaurentError::Malformed(format!("amplitude `{}`, `{}`", t.re, t.im)))?;
                s.add_term(rate, amp);
            }
            out.add_monomial((m.exponent[0], m.exponent[1]), &s);
        }
        Ok(out)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_serial()).unwrap_or_default()
    }

    pub fn from_json(text: &str) -> Result<Self, LaurentError> {
        let items: Vec<SerialMonomial> =
            serde_json::from_str(text).map_err(|e| LaurentError::Malformed(e.to_string()))?;
        Self::from_serial(&items)
    }

    /// Compact human-readable rendering such as `e^{2pi k(-1)}·x^-1 y^-1 + ...`.
    pub fn pretty(&self) -> String {
        if self.monos.is_empty() {
            return "0".into();
        }
        let mut parts = Vec::new();
        for (e, s) in &self.monos {
            for (r, a) in s.terms() {
                let (re, im) = a.to_c64();
                let amp =
                    if im.abs() < 1e-15 * re.abs().max(1e-300) { format!("{re}") } else { format!("({re}{im:+}i)") };
                parts.push(format!("{amp}·e^{{2πk({})}}·x^{} y^{}", fmt_rational(r), e.0, e.1));
            }
        }
        parts.join(" + ")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SerialTerm {
    pub rate: String,
    pub re: String,
    pub im: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SerialMonomial {
    pub exponent: [i64; 2],
    pub terms: Vec<SerialTerm>,
}

/// A Laurent polynomial with numeric coefficients at a fixed `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct NumLaurent {
    pub terms: Vec<(Exponent, Cx)>,
}

impl NumLaurent {
    /// Individual term values `c x^m` at a point.
    pub fn term_values(&self, point: (&Cx, &Cx)) -> Result<Vec<Cx>, LaurentError> {
        if point.0.is_zero() || point.1.is_zero() {
            return Err(LaurentError::ZeroCoordinate);
        }
        Ok(self.terms.iter().map(|(e, c)| &(c * &point.0.powi(e.0)) * &point.1.powi(e.1)).collect())
    }

    pub fn evaluate(&self, point: (&Cx, &Cx)) -> Result<Cx, LaurentError> {
        Ok(sum_by_magnitude(self.term_values(point)?))
    }

    /// Value together with the sum of term magnitudes (the natural scale).
    pub fn evaluate_with_scale(&self, point: (&Cx, &Cx)) -> Result<(Cx, Float), LaurentError> {
        let vals = self.term_values(point)?;
        let mut scale = Float::new(precision());
        for v in &vals {
            scale += v.abs();
        }
        Ok((sum_by_magnitude(vals), scale))
    }

    pub fn log_derivative(&self, axis: usize) -> NumLaurent {
        NumLaurent {
            terms: self
                .terms
                .iter()
                .filter_map(|(e, c)| {
                    let m = if axis == 1 { e.0 } else { e.1 };
                    (m != 0).then(|| (*e, c.scale_q(&Q::from(m))))
                })
                .collect(),
        }
    }
}

/// Leading data `x_j ~ alpha_j e^{2 pi k beta_j}` of one critical point.
#[derive(Debug, Clone, PartialEq)]
pub struct CriticalAsymptotics {
    pub beta: (Q, Q),
    pub alpha: (Cx, Cx),
    /// Exponents of the argmax monomials in the two critical equations.
    pub leading_system: (Vec<Exponent>, Vec<Exponent>),
    /// Number of distinct `alpha` solutions sharing this `beta`.
    pub multiplicity: usize,
    /// Index of the `beta` family this branch belongs to.
    pub family: usize,
}

impl CriticalAsymptotics {
    /// Trivial asymptotics `alpha`, `beta = 0`, used for grouping amplitudes by rate.
    pub fn at_unit(alpha: (Cx, Cx)) -> Self {
        CriticalAsymptotics {
            beta: (Q::new(), Q::new()),
            alpha,
            leading_system: (vec![], vec![]),
            multiplicity: 1,
            family: 0,
        }
    }

    /// Seed point `alpha_j e^{2 pi k beta_j}` at a given `k`.
    pub fn seed(&self, k: &Float) -> (Cx, Cx) {
        (self.alpha.0.scale(&exp_rate(&self.beta.0, k)), self.alpha.1.scale(&exp_rate(&self.beta.1, k)))
    }
}
