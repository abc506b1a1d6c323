//! Extended-precision complex scalars and exact rationals.
//!
//! Every floating value in the crate is an MPFR float whose precision is taken
//! from a per-thread default (256 bits unless changed). Binary operations run
//! at the larger of the two operand precisions.

use rug::float::Constant;
use rug::ops::Pow;
use rug::{Assign, Float, Integer, Rational};
use std::cell::Cell;
use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

/// Exact rational number.
pub type Q = Rational;

pub const DEFAULT_PRECISION: u32 = 256;
pub const MIN_PRECISION: u32 = 128;

thread_local! {
    static PRECISION: Cell<u32> = const { Cell::new(DEFAULT_PRECISION) };
}

/// Current default significand precision in bits.
pub fn precision() -> u32 {
    PRECISION.with(Cell::get)
}

/// Sets the default precision, clamped below at [`MIN_PRECISION`].
pub fn set_precision(bits: u32) {
    PRECISION.with(|p| p.set(bits.max(MIN_PRECISION)));
}

/// Runs `f` with the default precision temporarily set to `bits`.
pub fn with_precision<T>(bits: u32, f: impl FnOnce() -> T) -> T {
    struct Restore(u32);
    impl Drop for Restore {
        fn drop(&mut self) {
            PRECISION.with(|p| p.set(self.0));
        }
    }
    let _restore = Restore(precision());
    set_precision(bits);
    f()
}

pub fn float(v: impl Into<f64>) -> Float {
    Float::with_val(precision(), v.into())
}

pub fn float_q(q: &Q) -> Float {
    Float::with_val(precision(), q)
}

pub fn pi(prec: u32) -> Float {
    Float::with_val(prec, Constant::Pi)
}

/// `e^{2 pi k rate}` at the given precision.
pub fn exp_rate(rate: &Q, k: &Float) -> Float {
    let p = k.prec();
    let mut t = Float::with_val(p, rate);
    t *= k;
    t *= pi(p);
    t *= 2;
    t.exp()
}

pub fn q(n: i64, d: i64) -> Q {
    Q::from((n, d))
}

pub fn qi(n: i64) -> Q {
    Q::from(n)
}

/// Parses `"p/q"`, an integer, or a finite decimal such as `"0.35"` or `"-1e-3"` exactly.
pub fn parse_rational(text: &str) -> Option<Q> {
    let s = text.trim();
    if s.is_empty() || s.len() > 256 {
        return None;
    }
    if s.contains('/') {
        let (a, b) = s.split_once('/')?;
        let num: Integer = a.trim().parse().ok()?;
        let den: Integer = b.trim().parse().ok()?;
        if den == 0 {
            return None;
        }
        return Some(Q::from((num, den)));
    }
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().ok()?),
        None => (s, 0),
    };
    if exponent.abs() > 400 {
        return None;
    }
    let (neg, body) = match mantissa.strip_prefix('-') {
        Some(r) => (true, r),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.bytes().all(|b| b.is_ascii_digit()) || !frac_part.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let mut value = Q::from(digits.parse::<Integer>().unwrap_or_default());
    let scale = exponent - frac_part.len() as i32;
    let ten = Q::from(10);
    if scale >= 0 {
        value *= ten.pow(scale as u32);
    } else {
        value /= ten.pow((-scale) as u32);
    }
    if neg {
        value = -value;
    }
    Some(value)
}

/// Formats a rational as `"p/q"` or `"p"` when integral.
pub fn fmt_rational(v: &Q) -> String {
    if *v.denom() == 1 {
        v.numer().to_string()
    } else {
        format!("{}/{}", v.numer(), v.denom())
    }
}

pub fn q_to_f64(v: &Q) -> f64 {
    v.to_f64()
}

/// Extended-precision complex number.
#[derive(Clone, Debug, PartialEq)]
pub struct Cx {
    pub re: Float,
    pub im: Float,
}

impl Cx {
    pub fn new(re: Float, im: Float) -> Self {
        Cx { re, im }
    }

    pub fn zero() -> Self {
        Self::from_f64(0.0, 0.0)
    }

    pub fn one() -> Self {
        Self::from_f64(1.0, 0.0)
    }

    pub fn from_f64(re: f64, im: f64) -> Self {
        let p = precision();
        Cx { re: Float::with_val(p, re), im: Float::with_val(p, im) }
    }

    pub fn from_q(v: &Q) -> Self {
        let p = precision();
        Cx { re: Float::with_val(p, v), im: Float::new(p) }
    }

    pub fn from_i64(v: i64) -> Self {
        let p = precision();
        Cx { re: Float::with_val(p, v), im: Float::new(p) }
    }

    pub fn from_real(re: Float) -> Self {
        let p = re.prec();
        Cx { re, im: Float::new(p) }
    }

    /// Unit complex number `e^{i theta}`.
    pub fn cis(theta: &Float) -> Self {
        let p = theta.prec();
        let (s, c) = theta.clone().sin_cos(Float::new(p));
        Cx { re: c, im: s }
    }

    pub fn prec(&self) -> u32 {
        self.re.prec().max(self.im.prec())
    }

    pub fn with_prec(&self, bits: u32) -> Self {
        Cx { re: Float::with_val(bits, &self.re), im: Float::with_val(bits, &self.im) }
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn is_finite(&self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }

    pub fn norm_sqr(&self) -> Float {
        let p = self.prec();
        let mut a = Float::with_val(p, self.re.square_ref());
        a += Float::with_val(p, self.im.square_ref());
        a
    }

    pub fn abs(&self) -> Float {
        Float::with_val(self.prec(), self.re.hypot_ref(&self.im))
    }

    pub fn abs_f64(&self) -> f64 {
        self.abs().to_f64()
    }

    pub fn arg(&self) -> Float {
        Float::with_val(self.prec(), self.im.atan2_ref(&self.re))
    }

    pub fn conj(&self) -> Self {
        Cx { re: self.re.clone(), im: -self.im.clone() }
    }

    pub fn scale(&self, s: &Float) -> Self {
        let p = self.prec().max(s.prec());
        Cx { re: Float::with_val(p, &self.re * s), im: Float::with_val(p, &self.im * s) }
    }

    pub fn scale_q(&self, s: &Q) -> Self {
        let p = self.prec();
        Cx { re: Float::with_val(p, &self.re * s), im: Float::with_val(p, &self.im * s) }
    }

    pub fn inv(&self) -> Self {
        let n = self.norm_sqr();
        let p = self.prec();
        Cx { re: Float::with_val(p, &self.re / &n), im: -Float::with_val(p, &self.im / &n) }
    }

    /// Integer power by repeated squaring; negative exponents invert.
    pub fn powi(&self, e: i64) -> Self {
        if e < 0 {
            return self.inv().powi(-e);
        }
        let mut base = self.clone();
        let mut acc = Cx::one().with_prec(self.prec());
        let mut n = e as u64;
        while n > 0 {
            if n & 1 == 1 {
                acc = &acc * &base;
            }
            n >>= 1;
            if n > 0 {
                base = &base * &base;
            }
        }
        acc
    }

    pub fn exp(&self) -> Self {
        let p = self.prec();
        let m = Float::with_val(p, self.re.exp_ref());
        Cx::cis(&self.im).scale(&m)
    }

    /// Principal logarithm.
    pub fn ln(&self) -> Self {
        let p = self.prec();
        let r = self.abs();
        Cx { re: Float::with_val(p, r.ln_ref()), im: self.arg() }
    }

    /// Principal square root.
    pub fn sqrt(&self) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        let p = self.prec();
        let r = self.abs();
        let mut half_sum = Float::with_val(p, &r + &self.re);
        half_sum /= 2;
        let mut a = half_sum.sqrt();
        let mut half_diff = Float::with_val(p, &r - &self.re);
        half_diff /= 2;
        let mut b = half_diff.sqrt();
        if self.im.is_sign_negative() {
            b = -b;
        }
        if a.is_nan() {
            a = Float::new(p);
        }
        if b.is_nan() {
            b = Float::new(p);
        }
        Cx { re: a, im: b }
    }

    pub fn to_c64(&self) -> (f64, f64) {
        (self.re.to_f64(), self.im.to_f64())
    }

    /// Relative distance `|a - b| / max(|a|, |b|)`, zero when both vanish.
    pub fn rel_dist(&self, other: &Cx) -> f64 {
        let d = (self - other).abs();
        let m = self.abs().max(&other.abs()).clone();
        if m.is_zero() {
            0.0
        } else {
            (d / m).to_f64()
        }
    }

    /// Round-trip decimal strings for the real and imaginary parts.
    pub fn to_strings(&self) -> (String, String) {
        (float_to_string(&self.re), float_to_string(&self.im))
    }

    pub fn parse(re: &str, im: &str) -> Option<Cx> {
        Some(Cx { re: parse_float(re)?, im: parse_float(im)? })
    }
}

pub fn float_to_string(v: &Float) -> String {
    if v.is_zero() {
        return "0".into();
    }
    v.to_string_radix(10, None)
}

pub fn parse_float(s: &str) -> Option<Float> {
    let s = s.trim();
    if s.is_empty() || s.len() > 2000 {
        return None;
    }
    let parsed = Float::parse(s).ok()?;
    let v = Float::with_val(precision(), parsed);
    if v.is_finite() {
        Some(v)
    } else {
        None
    }
}

impl fmt::Display for Cx {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (re, im) = self.to_c64();
        if im >= 0.0 {
            write!(f, "{re:.12e}+{im:.12e}i")
        } else {
            write!(f, "{re:.12e}{im:.12e}i")
        }
    }
}

fn p2(a: &Cx, b: &Cx) -> u32 {
    a.prec().max(b.prec())
}

impl<'a> Add<&'a Cx> for &'a Cx {
    type Output = Cx;
    fn add(self, o: &Cx) -> Cx {
        let p = p2(self, o);
        Cx { re: Float::with_val(p, &self.re + &o.re), im: Float::with_val(p, &self.im + &o.im) }
    }
}

impl<'a> Sub<&'a Cx> for &'a Cx {
    type Output = Cx;
    fn sub(self, o: &Cx) -> Cx {
        let p = p2(self, o);
        Cx { re: Float::with_val(p, &self.re - &o.re), im: Float::with_val(p, &self.im - &o.im) }
    }
}

impl<'a> Mul<&'a Cx> for &'a Cx {
    type Output = Cx;
    fn mul(self, o: &Cx) -> Cx {
        let p = p2(self, o);
        let mut re = Float::with_val(p, &self.re * &o.re);
        re -= Float::with_val(p, &self.im * &o.im);
        let mut im = Float::with_val(p, &self.re * &o.im);
        im += Float::with_val(p, &self.im * &o.re);
        Cx { re, im }
    }
}

impl<'a> Div<&'a Cx> for &'a Cx {
    type Output = Cx;
    fn div(self, o: &Cx) -> Cx {
        // Smith's algorithm avoids needless overflow for lopsided operands.
        let p = p2(self, o);
        if o.re.clone().abs() >= o.im.clone().abs() {
            let r = Float::with_val(p, &o.im / &o.re);
            let mut den = Float::with_val(p, &o.im * &r);
            den += &o.re;
            let mut re = Float::with_val(p, &self.im * &r);
            re += &self.re;
            re /= &den;
            let mut im = Float::with_val(p, &self.re * &r);
            im = Float::with_val(p, &self.im - &im);
            im /= &den;
            Cx { re, im }
        } else {
            let r = Float::with_val(p, &o.re / &o.im);
            let mut den = Float::with_val(p, &o.re * &r);
            den += &o.im;
            let mut re = Float::with_val(p, &self.re * &r);
            re += &self.im;
            re /= &den;
            let mut im = Float::with_val(p, &self.im * &r);
            im -= &self.re;
            im /= &den;
            Cx { re, im }
        }
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr<Cx> for Cx {
            type Output = Cx;
            fn $m(self, o: Cx) -> Cx {
                (&self).$m(&o)
            }
        }
        impl<'a> $tr<&'a Cx> for Cx {
            type Output = Cx;
            fn $m(self, o: &Cx) -> Cx {
                (&self).$m(o)
            }
        }
        impl<'a> $tr<Cx> for &'a Cx {
            type Output = Cx;
            fn $m(self, o: Cx) -> Cx {
                self.$m(&o)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);
forward_owned!(Div, div);

impl Neg for Cx {
    type Output = Cx;
    fn neg(self) -> Cx {
        Cx { re: -self.re, im: -self.im }
    }
}

impl Neg for &Cx {
    type Output = Cx;
    fn neg(self) -> Cx {
        Cx { re: -self.re.clone(), im: -self.im.clone() }
    }
}

impl AddAssign<&Cx> for Cx {
    fn add_assign(&mut self, o: &Cx) {
        let p = p2(self, o);
        if self.re.prec() < p {
            self.re.set_prec(p);
            self.im.set_prec(p);
        }
        self.re += &o.re;
        self.im += &o.im;
    }
}

impl AddAssign<Cx> for Cx {
    fn add_assign(&mut self, o: Cx) {
        *self += &o;
    }
}

impl SubAssign<&Cx> for Cx {
    fn sub_assign(&mut self, o: &Cx) {
        let p = p2(self, o);
        if self.re.prec() < p {
            self.re.set_prec(p);
            self.im.set_prec(p);
        }
        self.re -= &o.re;
        self.im -= &o.im;
    }
}

impl MulAssign<&Cx> for Cx {
    fn mul_assign(&mut self, o: &Cx) {
        let r = &*self * o;
        self.assign_from(r);
    }
}

impl Cx {
    fn assign_from(&mut self, v: Cx) {
        self.re.assign(&v.re);
        self.im.assign(&v.im);
    }
}

/// Sums complex values in order of increasing magnitude, limiting the rounding
/// error contributed by large terms that cancel.
pub fn sum_by_magnitude(mut values: Vec<Cx>) -> Cx {
    if values.is_empty() {
        return Cx::zero();
    }
    values.sort_by(|a, b| a.abs().partial_cmp(&b.abs()).unwrap_or(std::cmp::Ordering::Equal));
    let p = values.iter().map(Cx::prec).max().unwrap_or_else(precision);
    let mut acc = Cx::zero().with_prec(p);
    let mut comp = Cx::zero().with_prec(p);
    for v in &values {
        // Kahan summation on each component.
        let y = v - &comp;
        let t = &acc + &y;
        comp = &(&t - &acc) - &y;
        acc = t;
    }
    acc
}

/// Complex `2x2` linear solve `[a b; c d] [u; v] = [e; f]`; `None` if singular.
pub fn solve2(a: &Cx, b: &Cx, c: &Cx, d: &Cx, e: &Cx, f: &Cx) -> Option<(Cx, Cx)> {
    let det = &(a * d) - &(b * c);
    if det.is_zero() || !det.is_finite() {
        return None;
    }
    let u = &(&(e * d) - &(b * f)) / &det;
    let v = &(&(a * f) - &(e * c)) / &det;
    Some((u, v))
}

pub fn float_pow_i(base: &Float, e: i32) -> Float {
    Float::with_val(base.prec(), base.pow(e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_rationals() {
        assert_eq!(parse_rational("3/7").unwrap(), q(3, 7));
        assert_eq!(parse_rational("-2").unwrap(), qi(-2));
        assert_eq!(parse_rational("0.35").unwrap(), q(7, 20));
        assert_eq!(parse_rational("1e-3").unwrap(), q(1, 1000));
        assert_eq!(parse_rational(" -.5 ").unwrap(), q(-1, 2));
        assert!(parse_rational("1/0").is_none());
        assert!(parse_rational("abc").is_none());
        assert!(parse_rational(".").is_none());
        assert_eq!(fmt_rational(&q(-6, 4)), "-3/2");
    }

    #[test]
    fn complex_arithmetic() {
        let a = Cx::from_f64(1.0, 2.0);
        let b = Cx::from_f64(-3.0, 0.5);
        let prod = &a * &b;
        assert_eq!(prod.to_c64(), (-4.0, -5.5));
        let back = &prod / &b;
        assert!(back.rel_dist(&a) < 1e-70);
        assert!((a.powi(-3) * a.powi(3)).rel_dist(&Cx::one()) < 1e-70);
        let s = Cx::from_f64(-4.0, 0.0).sqrt();
        assert!(s.rel_dist(&Cx::from_f64(0.0, 2.0)) < 1e-70);
        let l = Cx::from_f64(0.3, -1.2);
        assert!(l.ln().exp().rel_dist(&l) < 1e-70);
    }

    #[test]
    fn round_trip_strings() {
        let v = Cx::new(float(1.0) / float(3.0), -pi(precision()));
        let (re, im) = v.to_strings();
        assert_eq!(Cx::parse(&re, &im).unwrap(), v);
    }
}
