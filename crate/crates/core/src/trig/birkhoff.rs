use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::poly::TrigPoly;

const UNIT: f64 = 1.0 / 18_446_744_073_709_551_616.0;
const CHUNK: usize = 2048;

/// Circle point in 64-bit fixed point: `t` stands for `t / 2^64`.
pub fn torus_from_f64(x: f64) -> u64 {
    let f = x - x.floor();
    let v = (f / UNIT).floor();
    if v >= 18_446_744_073_709_551_615.0 {
        u64::MAX
    } else {
        v as u64
    }
}

/// Representative in `[0, 1)`.
pub fn torus_to_f64(t: u64) -> f64 {
    t as f64 * UNIT
}

/// Representative in `[−1/2, 1/2)`.
pub fn torus_signed(t: u64) -> f64 {
    (t as i64) as f64 * UNIT
}

/// `ψ(x, y) = φ(x)·φ_l(y − y0)` along the rotation by `(α, θ)` on the two-torus.
/// All points are fixed-point numbers, and the sums below are sums for the
/// rotation by exactly these numbers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TorusRotation {
    pub alpha: u64,
    pub theta: u64,
    pub y0: u64,
    pub start: (u64, u64),
}

impl TorusRotation {
    pub fn new(alpha: u64, theta: u64) -> Self {
        TorusRotation {
            alpha,
            theta,
            y0: 0,
            start: (0, 0),
        }
    }

    pub fn with_y0(mut self, y0: u64) -> Self {
        self.y0 = y0;
        self
    }

    pub fn with_start(mut self, x: u64, y: u64) -> Self {
        self.start = (x, y);
        self
    }

    /// `(x_i, y_i − y0)`.
    fn point(&self, i: u64) -> (u64, u64) {
        (
            self.start.0.wrapping_add(i.wrapping_mul(self.alpha)),
            self.start.1.wrapping_add(i.wrapping_mul(self.theta)).wrapping_sub(self.y0),
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BirkhoffSum {
    pub value: f64,
    /// Bound on the floating-point error of `value`.
    pub error: f64,
}

/// Running maximum of `|S_N ψ|` over `N <= n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BirkhoffMax {
    pub max_abs: f64,
    pub argmax: u64,
    pub error: f64,
}

fn per_term_error(phi: &TrigPoly, varphi: &TrigPoly) -> f64 {
    let (a1, a2) = (phi.abs_sum(), varphi.abs_sum());
    // the point conversion to f64 moves the argument by at most 2^-54
    let e1 = phi.eval_error() + phi.derivative_bound(1) * UNIT * 1024.0;
    let e2 = varphi.eval_error() + varphi.derivative_bound(1) * UNIT * 1024.0;
    a2 * e1 + a1 * e2 + e1 * e2 + 2.0 * f64::EPSILON * a1 * a2
}

fn terms(phi: &TrigPoly, varphi: &TrigPoly, rot: &TorusRotation, n: u64) -> Vec<f64> {
    (0..n)
        .into_par_iter()
        .map(|i| {
            let (x, y) = rot.point(i);
            phi.eval(torus_to_f64(x)) * varphi.eval(torus_to_f64(y))
        })
        .collect()
}

fn chunked_sum(t: &[f64]) -> (f64, f64) {
    let partial: Vec<(f64, f64)> = t
        .par_chunks(CHUNK)
        .map(|c| c.iter().fold((0.0, 0.0), |(s, a), v| (s + v, a + v.abs())))
        .collect();
    partial.iter().fold((0.0, 0.0), |(s, a), (v, w)| (s + v, a + w))
}

/// `S_n ψ(start) = Σ_{i<n} φ(x + iα)·φ_l(y + iθ − y0)` by direct evaluation.
/// Terms are evaluated in parallel and added in fixed chunks, so the result
/// does not depend on the thread count.
pub fn birkhoff_direct(phi: &TrigPoly, varphi: &TrigPoly, rot: &TorusRotation, n: u64) -> BirkhoffSum {
    let t = terms(phi, varphi, rot, n);
    let (value, abs_total) = chunked_sum(&t);
    let depth = (CHUNK + t.len() / CHUNK + 2) as f64;
    BirkhoffSum {
        value,
        error: n as f64 * per_term_error(phi, varphi) + depth * f64::EPSILON * abs_total,
    }
}

/// `max_{N <= n} |S_N ψ(start)|` from one pass of prefix sums.
pub fn birkhoff_direct_max(phi: &TrigPoly, varphi: &TrigPoly, rot: &TorusRotation, n: u64) -> BirkhoffMax {
    let t = terms(phi, varphi, rot, n);
    let mut s = 0.0f64;
    let mut abs = 0.0f64;
    let mut best = (0.0f64, 0u64);
    for (i, v) in t.iter().enumerate() {
        s += v;
        abs += v.abs();
        if s.abs() > best.0 {
            best = (s.abs(), i as u64 + 1);
        }
    }
    BirkhoffMax {
        max_abs: best.0,
        argmax: best.1,
        error: n as f64 * per_term_error(phi, varphi) + n as f64 * f64::EPSILON * abs,
    }
}

/// `x·t mod 2` for `t` a signed fixed-point number, in `[−1, 1)`.
fn times_mod2(x: u64, t: i64) -> f64 {
    let p = (x as i128).wrapping_mul(t as i128);
    let r = p.rem_euclid(1i128 << 65);
    let r = if r >= 1i128 << 64 { r - (1i128 << 65) } else { r };
    r as f64 * UNIT
}

/// `G_n(t) = Σ_{i<n} e^{2πi·it}` and an error bound. Exact multiples of the
/// fixed-point unit that vanish are summed as `n`.
fn geometric(n: u64, t: u64) -> (Complex64, f64) {
    if n == 0 {
        return (Complex64::new(0.0, 0.0), 0.0);
    }
    if t == 0 {
        return (Complex64::new(n as f64, 0.0), 0.0);
    }
    let ts = t as i64;
    let den = (PI * ts as f64 * UNIT).sin();
    let num = (PI * times_mod2(n, ts)).sin();
    let phase = Complex64::from_polar(1.0, PI * times_mod2(n - 1, ts));
    let g = phase * (num / den);
    // without wrap-around the numerator is computed to relative accuracy
    let err = if n as f64 * (ts as f64 * UNIT).abs() < 0.5 {
        16.0 * f64::EPSILON * g.norm()
    } else {
        8.0 * f64::EPSILON * g.norm() + 4.0 * f64::EPSILON / den.abs()
    };
    (g, err)
}

/// `e^{2πi t}` for a fixed-point `t`.
fn cis(t: u64) -> Complex64 {
    Complex64::from_polar(1.0, 2.0 * PI * torus_signed(t))
}

/// `S_n ψ(start) = Σ_{k,j} c_k d_j e^{2πi(kx + j(y − y0))} G_n(kα + jθ)`, the
/// closed form of the same sum; resonant frequencies `kα + jθ ≡ 0` contribute
/// `n` times their phase.
pub fn birkhoff_fourier(phi: &TrigPoly, varphi: &TrigPoly, rot: &TorusRotation, n: u64) -> BirkhoffSum {
    let kd = phi.degree() as i64;
    let jd = varphi.degree() as i64;
    let (x0, y0) = rot.point(0);
    let rows: Vec<(Complex64, f64, f64)> = (-kd..=kd)
        .into_par_iter()
        .map(|k| {
            let ck = phi.coeff(k);
            let mut acc = Complex64::new(0.0, 0.0);
            let (mut err, mut abs) = (0.0, 0.0);
            if ck.norm() == 0.0 {
                return (acc, err, abs);
            }
            let ku = k as u64;
            for j in -jd..=jd {
                let dj = varphi.coeff(j);
                if dj.norm() == 0.0 {
                    continue;
                }
                let ju = j as u64;
                let freq = ku.wrapping_mul(rot.alpha).wrapping_add(ju.wrapping_mul(rot.theta));
                let phase = cis(ku.wrapping_mul(x0).wrapping_add(ju.wrapping_mul(y0)));
                let (g, ge) = geometric(n, freq);
                let w = ck * dj;
                let term = w * phase * g;
                acc += term;
                err += w.norm() * (ge + 8.0 * f64::EPSILON * g.norm());
                abs += term.norm();
            }
            (acc, err, abs)
        })
        .collect();
    let count = ((2 * kd + 1) * (2 * jd + 1)) as f64;
    let (sum, err, abs) = rows
        .iter()
        .fold((Complex64::new(0.0, 0.0), 0.0, 0.0), |(s, e, a), (v, f, b)| (s + v, e + f, a + b));
    BirkhoffSum {
        value: sum.re,
        error: err + 2.0 * count * f64::EPSILON * abs,
    }
}

/// `B = Σ_{|k|<=K} Σ_{0<|j|<=L} |c_k||d_j| / (2ν)`. Since `|G_n(t)| <= 1/(2‖t‖)`,
/// `B` bounds `|S_n ψ|` for every `n` once `‖kα + jθ‖ >= ν` for all those
/// `(k, j)` and `φ_l` has zero mean.
pub fn resonance_bound(phi: &TrigPoly, varphi: &TrigPoly, nu: f64) -> f64 {
    let a = phi.abs_sum();
    let d = varphi.abs_sum() - varphi.coeff(0).norm();
    (a * d.max(0.0) / (2.0 * nu)) * (1.0 + 1e-12)
}
