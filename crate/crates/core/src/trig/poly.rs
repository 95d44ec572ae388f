use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A real trigonometric polynomial `P(x) = Σ_{|k|<=D} c_k e^{2πikx}`.
///
/// Only `c_0, …, c_D` are stored and `c_{-k} = conj(c_k)` is implied, so the
/// polynomial is real by construction; `c_0` is kept real. The stored f64
/// coefficients define the polynomial exactly; evaluation error is bounded
/// by [`TrigPoly::eval_error`].
#[derive(Clone, Debug, PartialEq)]
pub struct TrigPoly {
    pub tag: String,
    coeffs: Vec<Complex64>,
}

/// Export form: `{tag, degree, coeffs: [[k, re, im], ...]}` over `-D..=D`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrigPolyJson {
    pub tag: String,
    pub degree: usize,
    pub coeffs: Vec<(i64, f64, f64)>,
}

impl TrigPoly {
    /// From non-negative-index coefficients; the imaginary part of `c_0` is dropped.
    pub fn new(tag: impl Into<String>, mut coeffs: Vec<Complex64>) -> Self {
        if coeffs.is_empty() {
            coeffs.push(Complex64::new(0.0, 0.0));
        }
        coeffs[0].im = 0.0;
        TrigPoly {
            tag: tag.into(),
            coeffs,
        }
    }

    pub fn zero(tag: impl Into<String>) -> Self {
        Self::new(tag, Vec::new())
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// `c_k` for any integer `k`.
    pub fn coeff(&self, k: i64) -> Complex64 {
        match self.coeffs.get(k.unsigned_abs() as usize) {
            None => Complex64::new(0.0, 0.0),
            Some(c) if k < 0 => c.conj(),
            Some(c) => *c,
        }
    }

    /// `c_0, …, c_D`.
    pub fn nonneg_coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn scale(&self, s: f64, tag: impl Into<String>) -> TrigPoly {
        TrigPoly::new(tag, self.coeffs.iter().map(|c| c * s).collect())
    }

    /// `Σ_k |c_k|` over all `k`, a bound for `sup |P|`.
    pub fn abs_sum(&self) -> f64 {
        let tail: f64 = self.coeffs[1..].iter().map(|c| c.norm()).sum();
        (self.coeffs[0].norm() + 2.0 * tail) * (1.0 + 1e-12)
    }

    /// `Σ_k |2πk|^r |c_k|`, a bound for `sup |P^{(r)}|`.
    pub fn derivative_bound(&self, r: i32) -> f64 {
        let s: f64 = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, c)| (2.0 * PI * k as f64).powi(r) * c.norm())
            .sum();
        2.0 * s * (1.0 + 1e-12)
    }

    /// `(P(x), P'(x))`.
    pub fn eval_with_derivative(&self, x: f64) -> (f64, f64) {
        let (s, c) = (2.0 * PI * x).sin_cos();
        let w = Complex64::new(c, s);
        let mut z = Complex64::new(1.0, 0.0);
        let mut v = 0.0;
        let mut d = 0.0;
        for (k, ck) in self.coeffs.iter().enumerate().skip(1) {
            z *= w;
            let t = ck * z;
            v += t.re;
            d -= k as f64 * t.im;
        }
        (self.coeffs[0].re + 2.0 * v, 4.0 * PI * d)
    }

    /// `P(x), P'(x), …, P^(r)(x)`.
    pub fn eval_derivs(&self, x: f64, r: usize) -> Vec<f64> {
        let (s, c) = (2.0 * PI * x).sin_cos();
        let w = Complex64::new(c, s);
        let mut z = Complex64::new(1.0, 0.0);
        let mut acc = vec![Complex64::new(0.0, 0.0); r + 1];
        for (k, ck) in self.coeffs.iter().enumerate().skip(1) {
            z *= w;
            let mut t = ck * z;
            let kf = k as f64;
            for a in acc.iter_mut() {
                *a += t;
                t *= kf;
            }
        }
        // P^(j) = 2 Re((2πi)^j Σ k^j c_k e^{2πikx}) for j >= 1
        let tau = Complex64::new(0.0, 2.0 * PI);
        let mut f = Complex64::new(1.0, 0.0);
        acc.iter()
            .enumerate()
            .map(|(j, a)| {
                let v = 2.0 * (f * a).re;
                f *= tau;
                if j == 0 {
                    self.coeffs[0].re + v
                } else {
                    v
                }
            })
            .collect()
    }

    pub fn eval(&self, x: f64) -> f64 {
        let (s, c) = (2.0 * PI * x).sin_cos();
        let w = Complex64::new(c, s);
        let mut z = Complex64::new(1.0, 0.0);
        let mut v = 0.0;
        for ck in &self.coeffs[1..] {
            z *= w;
            v += (ck * z).re;
        }
        self.coeffs[0].re + 2.0 * v
    }

    /// Bound on `|eval(x) − P(x)|` for `|x| <= 2`: the powers `w^k` drift by
    /// at most `(4k + 4)ε` and the accumulation adds `Dε` relative to `Σ|c_k|`.
    pub fn eval_error(&self) -> f64 {
        let d = self.degree() as f64;
        let s: f64 = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| c.norm() * (4.0 * k as f64 + 8.0 + 2.0 * d))
            .sum();
        4.0 * f64::EPSILON * s
    }

    /// Error bound for the derivative returned by `eval_with_derivative`.
    pub fn derivative_eval_error(&self) -> f64 {
        self.derivative_eval_error_of(1)
    }

    /// Error bound for the `r`-th derivative returned by `eval_derivs`.
    pub fn derivative_eval_error_of(&self, r: i32) -> f64 {
        let d = self.degree() as f64;
        let s: f64 = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| (2.0 * PI * k as f64).powi(r) * c.norm() * (4.0 * k as f64 + 8.0 + 2.0 * d))
            .sum();
        4.0 * f64::EPSILON * s
    }

    /// Product polynomial (degree adds up).
    pub fn product(&self, other: &TrigPoly, tag: impl Into<String>) -> TrigPoly {
        let d = (self.degree() + other.degree()) as i64;
        let (a, b) = (self.degree() as i64, other.degree() as i64);
        let coeffs = (0..=d)
            .map(|k| {
                let mut s = Complex64::new(0.0, 0.0);
                for j in (-a).max(k - b)..=a.min(k + b) {
                    s += self.coeff(j) * other.coeff(k - j);
                }
                s
            })
            .collect();
        TrigPoly::new(tag, coeffs)
    }

    pub fn to_json(&self) -> TrigPolyJson {
        let d = self.degree() as i64;
        TrigPolyJson {
            tag: self.tag.clone(),
            degree: self.degree(),
            coeffs: (-d..=d)
                .map(|k| {
                    let c = self.coeff(k);
                    (k, c.re, c.im)
                })
                .collect(),
        }
    }

    pub fn from_json(j: &TrigPolyJson) -> Result<Self> {
        let d = j.degree as i64;
        let mut coeffs = vec![Complex64::new(0.0, 0.0); j.degree + 1];
        let mut seen = vec![false; 2 * j.degree + 1];
        for &(k, re, im) in &j.coeffs {
            if k.abs() > d {
                return Err(Error::invalid(format!("coefficient index {k} exceeds degree {d}")));
            }
            seen[(k + d) as usize] = true;
            if k >= 0 {
                coeffs[k as usize] = Complex64::new(re, im);
            }
        }
        for &(k, re, im) in &j.coeffs {
            if k < 0 && coeffs[(-k) as usize] != Complex64::new(re, -im) {
                return Err(Error::invalid(format!("c_{k} is not the conjugate of c_{}", -k)));
            }
        }
        if seen.iter().any(|&s| !s) {
            return Err(Error::invalid("missing coefficients"));
        }
        if coeffs[0].im != 0.0 {
            return Err(Error::invalid("c_0 must be real"));
        }
        Ok(TrigPoly::new(j.tag.clone(), coeffs))
    }
}

/// Fejér kernel of order `m`: coefficients `1 − |k|/(m+1)`.
pub fn fejer(m: usize) -> Result<TrigPoly> {
    if m == 0 {
        return Err(Error::invalid("Fejér order must be at least 1"));
    }
    let coeffs = (0..=m)
        .map(|k| Complex64::new(1.0 - k as f64 / (m as f64 + 1.0), 0.0))
        .collect();
    Ok(TrigPoly::new("fejer", coeffs))
}

/// Fejér-smoothed indicator of the arc `[a, b]`, `0 < b − a < 1`:
/// `c_0 = b − a`, `c_k = (e^{-2πika} − e^{-2πikb})/(2πik)·(1 − |k|/(m+1))`.
pub fn smoothed_indicator(a: f64, b: f64, m: usize) -> Result<TrigPoly> {
    if !(b - a > 0.0 && b - a < 1.0) {
        return Err(Error::invalid(format!("arc [{a}, {b}] must have length in (0, 1)")));
    }
    if m == 0 {
        return Err(Error::invalid("Fejér order must be at least 1"));
    }
    let mut coeffs = vec![Complex64::new(b - a, 0.0)];
    for k in 1..=m {
        let kf = k as f64;
        let ea = Complex64::from_polar(1.0, -2.0 * PI * kf * a);
        let eb = Complex64::from_polar(1.0, -2.0 * PI * kf * b);
        let c = (ea - eb) / Complex64::new(0.0, 2.0 * PI * kf);
        coeffs.push(c * (1.0 - kf / (m as f64 + 1.0)));
    }
    Ok(TrigPoly::new("smoothed_indicator", coeffs))
}

/// Jackson kernel of order `m`: the square of the Fejér kernel, normalized
/// to mean 1. Non-negative, degree `2m`, tails `O((m·dist)^-4)`.
pub fn jackson(m: usize) -> Result<TrigPoly> {
    if m == 0 {
        return Err(Error::invalid("Jackson order must be at least 1"));
    }
    let f: Vec<f64> = (0..=m).map(|k| 1.0 - k as f64 / (m as f64 + 1.0)).collect();
    let fi = |i: i64| f.get(i.unsigned_abs() as usize).copied().unwrap_or(0.0);
    let m = m as i64;
    let norm: f64 = (-m..=m).map(|i| fi(i) * fi(i)).sum();
    let coeffs = (0..=2 * m)
        .map(|k| {
            let s: f64 = ((k - m)..=m).map(|i| fi(i) * fi(k - i)).sum();
            Complex64::new(s / norm, 0.0)
        })
        .collect();
    Ok(TrigPoly::new("jackson", coeffs))
}

/// Jackson-smoothed indicator of the arc `[a, b]`: values in `[0, 1]`.
pub fn jackson_indicator(a: f64, b: f64, m: usize) -> Result<TrigPoly> {
    if !(b - a > 0.0 && b - a < 1.0) {
        return Err(Error::invalid(format!("arc [{a}, {b}] must have length in (0, 1)")));
    }
    let j = jackson(m)?;
    let coeffs = j
        .nonneg_coeffs()
        .iter()
        .enumerate()
        .map(|(k, jk)| {
            if k == 0 {
                return Complex64::new(b - a, 0.0);
            }
            let kf = k as f64;
            let ea = Complex64::from_polar(1.0, -2.0 * PI * kf * a);
            let eb = Complex64::from_polar(1.0, -2.0 * PI * kf * b);
            (ea - eb) / Complex64::new(0.0, 2.0 * PI * kf) * jk.re
        })
        .collect();
    Ok(TrigPoly::new("jackson_indicator", coeffs))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fejer_values() {
        assert!((fejer(1).unwrap().eval(0.0) - 2.0).abs() < 1e-15);
        for m in [1, 5, 40] {
            assert!((fejer(m).unwrap().eval(0.0) - (m as f64 + 1.0)).abs() < 1e-12);
        }
        let f = fejer(3).unwrap();
        let min = (0..1024).map(|i| f.eval(i as f64 / 1024.0)).fold(f64::INFINITY, f64::min);
        assert!(min >= -1e-12);
        assert_eq!(f.coeff(0).re, 1.0);
    }

    #[test]
    fn smoothed_indicator_shape() {
        let s = smoothed_indicator(0.0, 0.5, 16).unwrap();
        assert_eq!(s.coeff(0).re, 0.5);
        let mid = s.eval(0.25);
        assert!((0.0..=1.0).contains(&mid));
        let t = smoothed_indicator(0.0, 0.2, 64).unwrap();
        assert!(t.eval(0.1) >= 0.9);
        assert!(smoothed_indicator(0.3, 0.3, 4).is_err());
        assert!(smoothed_indicator(0.0, 1.0, 4).is_err());
    }

    #[test]
    fn derivative_matches_difference_quotient() {
        let p = smoothed_indicator(-0.1, 0.2, 24).unwrap();
        for x in [0.0, 0.13, 0.77] {
            let h = 1e-6;
            let fd = (p.eval(x + h) - p.eval(x - h)) / (2.0 * h);
            let (_, d) = p.eval_with_derivative(x);
            assert!((fd - d).abs() < 1e-5 * (1.0 + d.abs()));
            let ds = p.eval_derivs(x, 3);
            assert!((ds[0] - p.eval(x)).abs() < 1e-12 && (ds[1] - d).abs() < 1e-9 * (1.0 + d.abs()));
            for j in 1..3 {
                let fd = (p.eval_derivs(x + h, j)[j] - p.eval_derivs(x - h, j)[j]) / (2.0 * h);
                assert!((fd - ds[j + 1]).abs() < 1e-5 * (1.0 + ds[j + 1].abs()), "{j}");
            }
        }
    }

    #[test]
    fn product_evaluates_pointwise() {
        let a = smoothed_indicator(0.1, 0.4, 8).unwrap();
        let b = fejer(5).unwrap();
        let ab = a.product(&b, "product");
        assert_eq!(ab.degree(), 13);
        for x in [0.0, 0.3, 0.61] {
            assert!((ab.eval(x) - a.eval(x) * b.eval(x)).abs() < 1e-12);
        }
    }

    #[test]
    fn jackson_is_squared_fejer() {
        let f = fejer(6).unwrap();
        let j = jackson(6).unwrap();
        assert_eq!(j.degree(), 12);
        assert!((j.coeff(0).re - 1.0).abs() < 1e-15);
        let scale = f.eval(0.0).powi(2) / j.eval(0.0);
        for x in [0.05, 0.3, 0.5] {
            assert!((f.eval(x).powi(2) / scale - j.eval(x)).abs() < 1e-12);
        }
        let s = jackson_indicator(-0.1, 0.1, 40).unwrap();
        assert!(s.eval(0.0) > 0.95 && s.eval(0.5).abs() < 1e-4);
    }

    #[test]
    fn json_round_trip() {
        let p = smoothed_indicator(0.0, 0.3, 6).unwrap();
        let j = p.to_json();
        assert_eq!(j.coeffs.len(), 13);
        assert_eq!(TrigPoly::from_json(&j).unwrap(), p);
        let mut bad = j.clone();
        bad.coeffs[0].2 += 1.0;
        assert!(TrigPoly::from_json(&bad).is_err());
    }
}
