use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive};
use serde::Serialize;

use super::certify::{certify, BoundCertificate, BoundKind, MAX_CELLS};
use super::poly::{jackson_indicator, smoothed_indicator, TrigPoly};
use crate::error::{Error, Result};

/// Multiplicative headroom of the window polynomial over the bare bound.
pub const PHI_MARGIN: f64 = 1.0 / 16.0;

/// The smoothed arc is `[−(1 + PHI_PAD)ε, (1 + PHI_PAD)ε]`.
pub const PHI_PAD: f64 = 0.125;

/// Largest kernel order tried by the builders.
pub const MAX_ORDER: usize = 1 << 13;

/// The window polynomial: `> 1` on `[−ε, ε]`, non-negative everywhere and
/// `< ε³` off `[−2ε, 2ε]`.
#[derive(Clone, Debug, Serialize)]
pub struct PhiEps {
    pub eps: f64,
    #[serde(skip)]
    pub poly: TrigPoly,
    /// Degree `K(ε)`.
    pub k: usize,
    /// Kernel order.
    pub order: usize,
    pub window: BoundCertificate,
    pub nonnegative: BoundCertificate,
    /// Absent when `[−2ε, 2ε]` is the whole circle.
    pub decay: Option<BoundCertificate>,
}

/// The zero-mean polynomial: `> 1` off `[0, 1/l]`, `|φ_l| < l²`.
#[derive(Clone, Debug, Serialize)]
pub struct VarphiL {
    pub l: u32,
    #[serde(skip)]
    pub poly: TrigPoly,
    /// Degree `L(l)`.
    pub degree: usize,
    pub off_arc: BoundCertificate,
    pub sup: BoundCertificate,
}

fn orders() -> impl Iterator<Item = usize> {
    std::iter::once(1)
        .chain((1..).flat_map(|i| [1usize << i, 3usize << (i - 1)]))
        .take_while(|&m| m <= MAX_ORDER)
}

/// `φ_ε = 2(1 + 1/16)·(J_M * 1_{[−5ε/4, 5ε/4]})` with `J_M` the Jackson kernel
/// and `M` the first order in `1, 2, 3, 4, 6, 8, …` for which `φ_ε > 1` on
/// `[−ε, ε]` and `φ_ε < ε³` on `[2ε, 1 − 2ε]` are both certified. For
/// `ε >= 1/4` the constant `2(1 + 1/16)` already works and `K = 0`.
pub fn build_phi_eps(eps: &BigRational) -> Result<PhiEps> {
    let half = BigRational::new(1.into(), 2.into());
    if !eps.is_positive() || eps > &half {
        return Err(Error::invalid("ε must lie in (0, 1/2]"));
    }
    let e = eps.to_f64().expect("bounded");
    let scale = 2.0 * (1.0 + PHI_MARGIN);
    let wide = eps * BigRational::from_integer(4.into()) >= BigRational::one();
    let attempt = |poly: TrigPoly, order: usize| -> Option<PhiEps> {
        let window = certify(&poly, -e, e, BoundKind::Min, 1.0, MAX_CELLS);
        if !window.passed {
            return None;
        }
        let decay = if wide {
            None
        } else {
            let d = certify(&poly, 2.0 * e, 1.0 - 2.0 * e, BoundKind::Max, e * e * e, MAX_CELLS);
            if !d.passed {
                return None;
            }
            Some(d)
        };
        // non-negativity holds for the exact recipe; far from the window the
        // values sit below f64 resolution, so `> −ε³` is what gets certified
        let nonnegative = certify(&poly, 0.0, 1.0, BoundKind::Min, -e * e * e, MAX_CELLS);
        nonnegative.passed.then(|| PhiEps {
            eps: e,
            k: poly.degree(),
            order,
            poly,
            window,
            nonnegative,
            decay,
        })
    };
    if wide {
        let poly = TrigPoly::new("phi_eps", vec![Complex64::new(scale, 0.0)]);
        return attempt(poly, 0).ok_or_else(|| Error::CertificationFailed("constant window polynomial".into()));
    }
    let a = (1.0 + PHI_PAD) * e;
    for m in orders() {
        let g = jackson_indicator(-a, a, m)?;
        if let Some(found) = attempt(g.scale(scale, "phi_eps"), m) {
            return Ok(found);
        }
    }
    Err(Error::CertificationFailed(format!("no window polynomial for ε = {eps} up to order {MAX_ORDER}")))
}

/// `φ_l = 2l·((1/l − 2δ) − g)` with `δ = 1/(8l)` and `g` the Fejér-smoothed
/// indicator of `[δ, 1/l − δ]`; `c_0` is exactly 0 because `g` has mean
/// `1/l − 2δ`.
pub fn build_varphi_l(l: u32) -> Result<VarphiL> {
    if l < 2 {
        return Err(Error::invalid("l must be at least 2"));
    }
    let lf = l as f64;
    let delta = 1.0 / (8.0 * lf);
    for m in orders() {
        let g = smoothed_indicator(delta, 1.0 / lf - delta, m)?;
        let mut coeffs: Vec<Complex64> = g.nonneg_coeffs().iter().map(|c| c * (-2.0 * lf)).collect();
        coeffs[0] = Complex64::new(0.0, 0.0);
        let poly = TrigPoly::new("varphi_l", coeffs);
        let off_arc = certify(&poly, 1.0 / lf, 1.0, BoundKind::Min, 1.0, MAX_CELLS);
        if off_arc.passed {
            let sup = certify(&poly, 0.0, 1.0, BoundKind::AbsMax, lf * lf, MAX_CELLS);
            if sup.passed {
                return Ok(VarphiL {
                    l,
                    degree: poly.degree(),
                    poly,
                    off_arc,
                    sup,
                });
            }
        }
    }
    Err(Error::CertificationFailed(format!("no zero-mean polynomial for l = {l} up to order {MAX_ORDER}")))
}
