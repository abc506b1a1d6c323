//! Univariate root finding and bivariate elimination at extended precision.

use crate::num::{pi, Cx};
use rug::Float;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PolyError {
    #[error("polynomial is identically zero")]
    ZeroPolynomial,
    #[error("root iteration did not settle after {0} sweeps")]
    NoConvergence(usize),
}

fn zero_at(prec: u32) -> Cx {
    Cx::new(Float::new(prec), Float::new(prec))
}

fn one_at(prec: u32) -> Cx {
    Cx::new(Float::with_val(prec, 1), Float::new(prec))
}

/// Value, derivative and the magnitude bound `sum |c_i| |z|^i` by Horner's rule.
pub fn horner(coeffs: &[Cx], z: &Cx) -> (Cx, Cx, Float) {
    let prec = z.prec();
    let mut p = zero_at(prec);
    let mut dp = zero_at(prec);
    let mut bound = Float::new(prec);
    let za = z.abs();
    for c in coeffs.iter().rev() {
        dp = &(&dp * z) + &p;
        p = &(&p * z) + c;
        bound *= &za;
        bound += c.abs();
    }
    (p, dp, bound)
}

fn log_abs(c: &Cx) -> f64 {
    let a = c.abs();
    if a.is_zero() {
        f64::NEG_INFINITY
    } else {
        a.ln().to_f64()
    }
}

/// Initial guesses spread on circles whose radii come from the upper convex hull
/// of `(i, log|c_i|)`.
fn newton_polygon_seeds(coeffs: &[Cx], prec: u32) -> Vec<Cx> {
    let pts: Vec<(usize, f64)> =
        coeffs.iter().enumerate().map(|(i, c)| (i, log_abs(c))).filter(|(_, l)| l.is_finite()).collect();
    let mut hull: Vec<(usize, f64)> = Vec::new();
    for &pt in &pts {
        while hull.len() >= 2 {
            let (i1, l1) = hull[hull.len() - 2];
            let (i2, l2) = hull[hull.len() - 1];
            let cross = (i2 as f64 - i1 as f64) * (pt.1 - l1) - (l2 - l1) * (pt.0 as f64 - i1 as f64);
            if cross >= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(pt);
    }
    let two_pi = Float::with_val(prec, pi(prec) * 2u32);
    let mut seeds = Vec::new();
    for (edge, w) in hull.windows(2).enumerate() {
        let (i, li) = w[0];
        let (j, lj) = w[1];
        let n = j - i;
        let log_r = (li - lj) / n as f64;
        let r = Float::with_val(prec, log_r).exp();
        for t in 0..n {
            let mut theta = Float::with_val(prec, t as f64 / n as f64 + 0.13 + 0.37 * edge as f64);
            theta *= &two_pi;
            seeds.push(Cx::cis(&theta).scale(&r));
        }
    }
    seeds
}

/// All roots of `sum c_i z^i` (ascending coefficients) by Aberth-Ehrlich iteration
/// at the precision of the coefficients. Zero roots are included.
pub fn roots(coeffs: &[Cx]) -> Result<Vec<Cx>, PolyError> {
    let mut hi = coeffs.len();
    while hi > 0 && coeffs[hi - 1].is_zero() {
        hi -= 1;
    }
    if hi == 0 {
        return Err(PolyError::ZeroPolynomial);
    }
    let mut lo = 0;
    while coeffs[lo].is_zero() {
        lo += 1;
    }
    let prec = coeffs.iter().map(Cx::prec).max().unwrap_or(128);
    let mut out: Vec<Cx> = (0..lo).map(|_| zero_at(prec)).collect();
    let c: Vec<Cx> = coeffs[lo..hi].iter().map(|v| v.with_prec(prec)).collect();
    let deg = c.len() - 1;
    if deg == 0 {
        return Ok(out);
    }
    if deg == 1 {
        out.push(-(&c[0] / &c[1]));
        return Ok(out);
    }
    let mut z = newton_polygon_seeds(&c, prec);
    let mut done = vec![false; deg];
    let mut eps = Float::with_val(prec, 1);
    eps >>= prec.saturating_sub(6);
    let max_sweeps = 400 + 4 * prec as usize;
    for _ in 0..max_sweeps {
        let mut all = true;
        for i in 0..deg {
            if done[i] {
                continue;
            }
            let (p, dp, bound) = horner(&c, &z[i]);
            if p.abs() <= Float::with_val(prec, &bound * &eps) {
                done[i] = true;
                continue;
            }
            all = false;
            let ratio = &p / &dp;
            let mut sum = zero_at(prec);
            for j in 0..deg {
                if j != i {
                    let d = &z[i] - &z[j];
                    if !d.is_zero() {
                        sum += &d.inv();
                    }
                }
            }
            let denom = &one_at(prec) - &(&ratio * &sum);
            let step = if denom.is_zero() || !denom.is_finite() { ratio.clone() } else { &ratio / &denom };
            if step.is_finite() {
                z[i] = &z[i] - &step;
            }
        }
        if all {
            out.extend(z);
            return Ok(out);
        }
    }
    Err(PolyError::NoConvergence(max_sweeps))
}

/// Polynomial in two variables with nonnegative exponents.
#[derive(Debug, Clone, PartialEq)]
pub struct BiPoly {
    pub terms: Vec<((usize, usize), Cx)>,
}

impl BiPoly {
    pub fn deg_x(&self) -> usize {
        self.terms.iter().map(|((a, _), _)| *a).max().unwrap_or(0)
    }

    pub fn deg_y(&self) -> usize {
        self.terms.iter().map(|((_, b), _)| *b).max().unwrap_or(0)
    }

    pub fn with_prec(&self, prec: u32) -> BiPoly {
        BiPoly { terms: self.terms.iter().map(|(e, c)| (*e, c.with_prec(prec))).collect() }
    }

    /// Ascending coefficients in `y` after substituting `x = x0`, padded to `deg_y`.
    pub fn coeffs_in_y(&self, x0: &Cx) -> Vec<Cx> {
        let prec = x0.prec();
        let mut out: Vec<Cx> = (0..=self.deg_y()).map(|_| zero_at(prec)).collect();
        for ((a, b), c) in &self.terms {
            out[*b] += &(c * &x0.powi(*a as i64));
        }
        out
    }

    pub fn evaluate(&self, x: &Cx, y: &Cx) -> Cx {
        let prec = x.prec().max(y.prec());
        let mut acc = zero_at(prec);
        for ((a, b), c) in &self.terms {
            acc += &(&(c * &x.powi(*a as i64)) * &y.powi(*b as i64));
        }
        acc
    }

    /// `log2(max|c| / min|c|)` over the nonzero coefficients.
    pub fn log2_range(&self) -> f64 {
        let logs: Vec<f64> = self.terms.iter().map(|(_, c)| log_abs(c)).filter(|l| l.is_finite()).collect();
        if logs.is_empty() {
            return 0.0;
        }
        let hi = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lo = logs.iter().cloned().fold(f64::INFINITY, f64::min);
        (hi - lo) / std::f64::consts::LN_2
    }
}

/// Determinant by Gaussian elimination with partial pivoting.
pub fn determinant(mut m: Vec<Vec<Cx>>) -> Cx {
    let n = m.len();
    let prec = m.iter().flatten().map(Cx::prec).max().unwrap_or(128);
    let mut det = one_at(prec);
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&a, &b| m[a][col].abs().partial_cmp(&m[b][col].abs()).unwrap_or(std::cmp::Ordering::Equal))
            .unwrap_or(col);
        if m[pivot][col].is_zero() {
            return zero_at(prec);
        }
        if pivot != col {
            m.swap(pivot, col);
            det = -det;
        }
        det = &det * &m[col][col];
        let piv = m[col][col].clone();
        for row in col + 1..n {
            if m[row][col].is_zero() {
                continue;
            }
            let factor = &m[row][col] / &piv;
            for k in col..n {
                let t = &factor * &m[col][k];
                m[row][k] = &m[row][k] - &t;
            }
        }
    }
    det
}

/// Sylvester resultant of two univariate polynomials with the given formal degrees.
pub fn sylvester_resultant(p: &[Cx], q: &[Cx]) -> Cx {
    let m = p.len().saturating_sub(1);
    let n = q.len().saturating_sub(1);
    let size = m + n;
    if size == 0 {
        return one_at(p.first().map(Cx::prec).unwrap_or(128));
    }
    let prec = p.iter().chain(q).map(Cx::prec).max().unwrap_or(128);
    let mut rows = vec![vec![zero_at(prec); size]; size];
    for r in 0..n {
        for (i, c) in p.iter().rev().enumerate() {
            rows[r][r + i] = c.clone();
        }
    }
    for r in 0..m {
        for (i, c) in q.iter().rev().enumerate() {
            rows[n + r][r + i] = c.clone();
        }
    }
    determinant(rows)
}

/// Coefficients (ascending in `x`) of `Res_y(p, q)`, recovered from samples on
/// the unit circle. Values below `2^-(prec - guard_bits)` of the sample maximum
/// are treated as zero.
pub fn resultant_in_x(p: &BiPoly, q: &BiPoly, prec: u32, guard_bits: u32) -> Vec<Cx> {
    let p = p.with_prec(prec);
    let q = q.with_prec(prec);
    let degree = q.deg_y() * p.deg_x() + p.deg_y() * q.deg_x();
    let n = degree + 1;
    let two_pi = Float::with_val(prec, pi(prec) * 2u32);
    let nodes: Vec<Cx> = (0..n)
        .map(|j| {
            let mut t = Float::with_val(prec, j);
            t *= &two_pi;
            t /= n as u32;
            Cx::cis(&t)
        })
        .collect();
    let samples: Vec<Cx> = nodes.iter().map(|x| sylvester_resultant(&p.coeffs_in_y(x), &q.coeffs_in_y(x))).collect();
    let mut peak = Float::new(prec);
    for s in &samples {
        let a = s.abs();
        if a > peak {
            peak = a;
        }
    }
    let mut floor = peak;
    floor >>= prec.saturating_sub(guard_bits);
    let mut coeffs = Vec::with_capacity(n);
    for m in 0..n {
        let mut acc = zero_at(prec);
        for (j, s) in samples.iter().enumerate() {
            let idx = (j * m) % n;
            acc += &(s * &nodes[idx].conj());
        }
        let c = acc.scale(&Float::with_val(prec, 1.0 / n as f64));
        let c = Cx::new(Float::with_val(prec, &c.re), Float::with_val(prec, &c.im));
        coeffs.push(if c.abs() <= floor { zero_at(prec) } else { c });
    }
    coeffs
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cx(re: f64, im: f64) -> Cx {
        Cx::from_f64(re, im)
    }

    #[test]
    fn cube_roots_of_unity() {
        let r = roots(&[cx(-1.0, 0.0), cx(0.0, 0.0), cx(0.0, 0.0), cx(1.0, 0.0)]).unwrap();
        assert_eq!(r.len(), 3);
        for z in &r {
            assert!(z.powi(3).rel_dist(&Cx::one()) < 1e-60);
        }
    }

    #[test]
    fn widely_separated_roots() {
        let big = Float::with_val(256, 1e40);
        let small = Float::with_val(256, 1e-40);
        let a = Cx::from_real(big);
        let b = Cx::from_real(small);
        // (z - a)(z - b)(z + 1) = z^3 + (1 - a - b) z^2 + (ab - a - b) z + ab
        let one = Cx::one();
        let ab = &a * &b;
        let sum = &a + &b;
        let coeffs = vec![ab.clone(), &ab - &sum, &one - &sum, one];
        let mut r = roots(&coeffs).unwrap();
        r.sort_by(|x, y| x.abs().partial_cmp(&y.abs()).unwrap());
        assert!(r[0].rel_dist(&b) < 1e-50);
        assert!(r[1].rel_dist(&cx(-1.0, 0.0)) < 1e-50);
        assert!(r[2].rel_dist(&a) < 1e-50);
    }

    #[test]
    fn resultant_of_lines() {
        // p = y - x, q = y + x - 2: common root x = 1, so Res_y = 2x - 2 up to sign.
        let p = BiPoly { terms: vec![((0, 1), cx(1.0, 0.0)), ((1, 0), cx(-1.0, 0.0))] };
        let q = BiPoly { terms: vec![((0, 1), cx(1.0, 0.0)), ((1, 0), cx(1.0, 0.0)), ((0, 0), cx(-2.0, 0.0))] };
        let r = resultant_in_x(&p, &q, 256, 128);
        let rs = roots(&r).unwrap();
        assert_eq!(rs.len(), 1);
        assert!(rs[0].rel_dist(&Cx::one()) < 1e-60);
    }
}
