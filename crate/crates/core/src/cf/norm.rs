//! Certified enclosures of points on the circle and of the distance to the
//! nearest integer `‖x‖`.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use super::irrational::{div_ceil, div_floor, Irrational};
use crate::error::{Error, Result};

/// Refinement never asks for enclosures finer than `2^-MAX_REFINE_BITS`.
pub const MAX_REFINE_BITS: u32 = 8192;

/// Exact rational enclosure `[lower, upper] ⊂ [0, 1/2]` of a value `‖x‖`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NormInterval {
    #[serde(with = "crate::serde_rational")]
    pub lower: BigRational,
    #[serde(with = "crate::serde_rational")]
    pub upper: BigRational,
}

impl NormInterval {
    pub fn exact(v: BigRational) -> Self {
        NormInterval {
            lower: v.clone(),
            upper: v,
        }
    }

    pub fn zero() -> Self {
        Self::exact(BigRational::zero())
    }

    pub fn width(&self) -> BigRational {
        &self.upper - &self.lower
    }

    pub fn contains(&self, v: &BigRational) -> bool {
        &self.lower <= v && v <= &self.upper
    }

    /// `Some(true)` if the enclosed value is certainly `< t`, `Some(false)` if
    /// certainly `>= t`, `None` if the enclosure straddles `t`.
    pub fn below(&self, t: &BigRational) -> Option<bool> {
        if &self.upper < t {
            Some(true)
        } else if &self.lower >= t {
            Some(false)
        } else {
            None
        }
    }

    pub fn lower_f64(&self) -> f64 {
        self.lower.to_f64().unwrap_or(0.0)
    }

    pub fn upper_f64(&self) -> f64 {
        self.upper.to_f64().unwrap_or(0.5)
    }
}

impl fmt::Display for NormInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{:.12e}, {:.12e}]", self.lower_f64(), self.upper_f64())
    }
}

/// Dyadic enclosure `[lo, hi] / 2^bits` of a point of the circle, normalized
/// so that `0 <= lo < 2^bits`. `hi` may exceed `2^bits` when the enclosure
/// wraps past 1.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CircleEnclosure {
    pub lo: BigInt,
    pub hi: BigInt,
    pub bits: u32,
}

impl CircleEnclosure {
    fn scale(&self) -> BigInt {
        BigInt::one() << self.bits
    }

    pub(crate) fn from_bounds(lo: BigInt, hi: BigInt, bits: u32) -> Self {
        let s = BigInt::one() << bits;
        let f = div_floor(&lo, &s);
        let shift = &f * &s;
        CircleEnclosure {
            lo: lo - &shift,
            hi: hi - shift,
            bits,
        }
    }

    pub fn lower(&self) -> BigRational {
        BigRational::new(self.lo.clone(), self.scale())
    }

    pub fn upper(&self) -> BigRational {
        BigRational::new(self.hi.clone(), self.scale())
    }

    pub fn width(&self) -> BigRational {
        BigRational::new(&self.hi - &self.lo, self.scale())
    }

    /// Midpoint reduced to `[0, 1)`, as a float.
    pub fn mid_f64(&self) -> f64 {
        let s = self.scale();
        let mut m = (&self.lo + &self.hi) >> 1usize;
        if m >= s {
            m -= &s;
        }
        BigRational::new(m, s).to_f64().unwrap_or(0.0)
    }

    /// Exact range of `‖x‖` over the enclosure (hull of both folded branches).
    pub fn norm(&self) -> NormInterval {
        let (lo, hi) = fold_dyadic(&self.lo, &self.hi, self.bits);
        let s = self.scale();
        NormInterval {
            lower: BigRational::new(lo, s.clone()),
            upper: BigRational::new(hi, s),
        }
    }

    /// Numerators over `2^bits` of the folded range.
    pub fn norm_numerators(&self) -> (BigInt, BigInt) {
        fold_dyadic(&self.lo, &self.hi, self.bits)
    }
}

/// Range of the distance-to-nearest-multiple-of-`2^bits` over `[lo, hi]`
/// with `0 <= lo < 2^bits`.
fn fold_dyadic(lo: &BigInt, hi: &BigInt, bits: u32) -> (BigInt, BigInt) {
    let s = BigInt::one() << bits;
    let half = &s >> 1usize;
    if hi - lo >= s {
        return (BigInt::zero(), half);
    }
    let dist = |y: &BigInt| -> BigInt {
        let r = if y >= &s { y - &s } else { y.clone() };
        let other = &s - &r;
        if r < other {
            r
        } else {
            other
        }
    };
    let (dlo, dhi) = (dist(lo), dist(hi));
    let has_multiple = lo.is_zero() || hi >= &s;
    let three_half = &s + &half;
    let has_half = (lo <= &half && &half <= hi) || (lo <= &three_half && &three_half <= hi);
    let min = if has_multiple {
        BigInt::zero()
    } else {
        dlo.clone().min(dhi.clone())
    };
    let max = if has_half { half } else { dlo.max(dhi) };
    (min, max)
}

/// Smallest `bits >= 2` with `2^-bits <= tol / 4`.
pub fn bits_for_tol(tol: &BigRational) -> u32 {
    let m = div_ceil(&(tol.denom() * 4), tol.numer());
    let b = if m <= BigInt::one() {
        0
    } else {
        (m - 1u32).bits() as u32
    };
    b.max(2)
}

/// Folds a rational interval onto `‖·‖`.
pub fn fold_rational(lo: &BigRational, hi: &BigRational) -> NormInterval {
    let f = lo.floor();
    let (a, b) = (lo - &f, hi - &f);
    let half = BigRational::new(1.into(), 2.into());
    let one = BigRational::one();
    if &b - &a >= one {
        return NormInterval {
            lower: BigRational::zero(),
            upper: half,
        };
    }
    let dist = |y: &BigRational| -> BigRational {
        let r = if y >= &one { y - &one } else { y.clone() };
        let o = &one - &r;
        if r < o {
            r
        } else {
            o
        }
    };
    let three_half = &one + &half;
    let lower = if a.is_zero() || b >= one {
        BigRational::zero()
    } else {
        dist(&a).min(dist(&b))
    };
    let upper = if (a <= half && half <= b) || (a <= three_half && three_half <= b) {
        half
    } else {
        dist(&a).max(dist(&b))
    };
    NormInterval { lower, upper }
}

impl Irrational {
    /// Dyadic enclosure of `coef·α + shift (mod 1)` of width at most `tol`.
    pub fn affine_enclosure(
        &self,
        coef: &BigRational,
        shift: &BigRational,
        tol: &BigRational,
    ) -> Result<CircleEnclosure> {
        if !tol.is_positive() {
            return Err(Error::invalid("tolerance must be positive"));
        }
        let bits = bits_for_tol(tol);
        self.affine_enclosure_bits(coef, shift, bits)
    }

    /// Same as [`Irrational::affine_enclosure`] with the output resolution
    /// given directly: width at most `2^(2-bits)`.
    pub fn affine_enclosure_bits(
        &self,
        coef: &BigRational,
        shift: &BigRational,
        bits: u32,
    ) -> Result<CircleEnclosure> {
        let (a, b) = (coef.numer(), coef.denom());
        let (c, d) = (shift.numer(), shift.denom());
        let scale = BigInt::one() << bits;
        if a.is_zero() {
            let lo = div_floor(&(c * &scale), d);
            let hi = div_ceil(&(c * &scale), d);
            return Ok(CircleEnclosure::from_bounds(lo, hi, bits));
        }
        // |a| / (b q_n q_{n+1}) <= 2^(1-bits)
        let need = a.abs() << (bits.saturating_sub(1) as usize);
        let n = self.first_pair_index(|x, y| &x.q * &y.q * b >= need)?;
        let mut lo: Option<BigInt> = None;
        let mut hi: Option<BigInt> = None;
        for idx in [n, n + 1] {
            let conv = self.convergent(idx)?;
            let num = (a * &conv.p * d + c * b * &conv.q) * &scale;
            let den = b * &conv.q * d;
            let f = div_floor(&num, &den);
            let g = div_ceil(&num, &den);
            lo = Some(match lo {
                Some(v) if v <= f => v,
                _ => f,
            });
            hi = Some(match hi {
                Some(v) if v >= g => v,
                _ => g,
            });
        }
        Ok(CircleEnclosure::from_bounds(
            lo.expect("two endpoints"),
            hi.expect("two endpoints"),
            bits,
        ))
    }

    /// Enclosure of the fractional part `{kα}` of width at most `tol`.
    pub fn frac_enclosure(&self, k: &BigInt, tol: &BigRational) -> Result<CircleEnclosure> {
        self.affine_enclosure(&BigRational::from_integer(k.clone()), &BigRational::zero(), tol)
    }

    /// Enclosure of `{kα}` at resolution `bits`.
    pub fn frac_enclosure_bits(&self, k: &BigInt, bits: u32) -> Result<CircleEnclosure> {
        self.affine_enclosure_bits(&BigRational::from_integer(k.clone()), &BigRational::zero(), bits)
    }

    /// Certified enclosure of `‖kα‖` of width at most `tol`.
    pub fn circle_norm(&self, k: &BigInt, tol: &BigRational) -> Result<NormInterval> {
        if k.is_zero() {
            return Ok(NormInterval::zero());
        }
        Ok(self.frac_enclosure(k, tol)?.norm())
    }

    /// `‖kα‖` enclosure as numerators over `2^bits`.
    pub fn circle_norm_bits(&self, k: &BigInt, bits: u32) -> Result<(BigInt, BigInt)> {
        if k.is_zero() {
            return Ok((BigInt::zero(), BigInt::zero()));
        }
        Ok(self.frac_enclosure_bits(k, bits)?.norm_numerators())
    }

    /// Decides `‖kα‖ < threshold`, refining the enclosure until the strict
    /// comparison is settled.
    pub fn norm_below(
        &self,
        k: &BigInt,
        threshold: &BigRational,
        start_tol: &BigRational,
    ) -> Result<(bool, NormInterval)> {
        let mut bits = bits_for_tol(start_tol);
        loop {
            let ni = if k.is_zero() {
                NormInterval::zero()
            } else {
                self.frac_enclosure_bits(k, bits)?.norm()
            };
            if let Some(b) = ni.below(threshold) {
                return Ok((b, ni));
            }
            bits += 16;
            if bits > MAX_REFINE_BITS {
                return Err(Error::exhausted(format!(
                    "cannot decide ‖{k}·α‖ < {threshold} within 2^-{MAX_REFINE_BITS}"
                )));
            }
        }
    }

    /// Minimizer of `‖kα‖` over `0 < k <= bound` together with an enclosure
    /// of the minimum. The minimizer is the largest convergent denominator
    /// not exceeding `bound`.
    pub fn min_norm_up_to(&self, bound: &BigInt, tol: &BigRational) -> Result<(BigInt, NormInterval)> {
        if bound < &BigInt::one() {
            return Err(Error::invalid("min_norm_up_to needs a bound >= 1"));
        }
        let n = self.first_pair_index(|_, next| &next.q > bound)?;
        let k = self.convergent(n)?.q;
        let v = self.circle_norm(&k, tol)?;
        Ok((k, v))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    fn assert_encloses(ni: &NormInterval, v: f64) {
        let (lo, hi) = (ni.lower_f64(), ni.upper_f64());
        assert!(lo - 1e-15 <= v && v <= hi + 1e-15, "{v} not in [{lo}, {hi}]");
    }

    #[test]
    fn zero_multiplier_is_exact() {
        let ni = Irrational::golden().circle_norm(&BigInt::zero(), &r(1, 3)).unwrap();
        assert_eq!(ni, NormInterval::zero());
    }

    #[test]
    fn golden_norms() {
        let g = Irrational::golden();
        let tol = r(1, 1_000_000);
        let phi = (5f64.sqrt() - 1.0) / 2.0;
        for (k, expect) in [(1, 1.0 - phi), (8, 5.0 - 8.0 * phi), (13, 13.0 * phi - 8.0)] {
            let ni = g.circle_norm(&BigInt::from(k), &tol).unwrap();
            assert!(ni.width() <= tol);
            assert_encloses(&ni, expect);
        }
        let ni = g.circle_norm(&BigInt::from(8), &tol).unwrap();
        assert!((ni.lower_f64() - 0.0557280).abs() < 1e-6);
        let ni = g.circle_norm(&BigInt::from(13), &tol).unwrap();
        assert!((ni.lower_f64() - 0.0344418).abs() < 1e-6);
    }

    #[test]
    fn negative_multipliers_are_symmetric() {
        let g = Irrational::sqrt2();
        let tol = r(1, 1 << 30);
        for k in 1..50i64 {
            let a = g.circle_norm(&BigInt::from(k), &tol).unwrap();
            let b = g.circle_norm(&BigInt::from(-k), &tol).unwrap();
            assert!(a.lower <= b.upper && b.lower <= a.upper);
        }
    }

    #[test]
    fn fold_straddling_half_takes_hull() {
        let ni = fold_rational(&r(49, 100), &r(52, 100));
        assert_eq!(ni.lower, r(48, 100));
        assert_eq!(ni.upper, r(1, 2));
        let ni = fold_rational(&r(-1, 100), &r(3, 100));
        assert_eq!(ni.lower, BigRational::zero());
        assert_eq!(ni.upper, r(3, 100));
        let ni = fold_rational(&r(7, 10), &r(8, 10));
        assert_eq!((ni.lower, ni.upper), (r(2, 10), r(3, 10)));
    }

    #[test]
    fn bits_for_tol_bound() {
        for (n, d) in [(1, 1), (1, 3), (1, 1000), (7, 1 << 20)] {
            let t = r(n, d);
            let b = bits_for_tol(&t);
            let step = BigRational::new(1.into(), BigInt::one() << b);
            assert!(step * BigRational::from_integer(4.into()) <= t);
        }
    }

    #[test]
    fn min_norm_examples() {
        let g = Irrational::golden();
        let tol = r(1, 1_000_000_000);
        let (k, v) = g.min_norm_up_to(&BigInt::from(10), &tol).unwrap();
        assert_eq!(k, BigInt::from(8));
        assert!((v.lower_f64() - 0.05573).abs() < 1e-5);
        let (k, v) = g.min_norm_up_to(&BigInt::from(1), &tol).unwrap();
        assert_eq!(k, BigInt::from(1));
        assert!((v.lower_f64() - 0.38197).abs() < 1e-5);
        let (k, v) = Irrational::sqrt2().min_norm_up_to(&BigInt::from(100), &tol).unwrap();
        assert_eq!(k, BigInt::from(70));
        assert!((v.lower_f64() - 0.00505).abs() < 1e-5);
    }

    #[test]
    fn norm_below_refines() {
        let g = Irrational::golden();
        // ‖8α‖ ≈ 0.0557280; threshold just above it
        let thr = r(557281, 10_000_000);
        let (b, _) = g.norm_below(&BigInt::from(8), &thr, &r(1, 10)).unwrap();
        assert!(b);
        let thr = r(557279, 10_000_000);
        let (b, _) = g.norm_below(&BigInt::from(8), &thr, &r(1, 10)).unwrap();
        assert!(!b);
    }

    #[test]
    fn short_list_exhausts() {
        let a: Irrational = "cf:0,1".parse().unwrap();
        let err = a.circle_norm(&BigInt::from(1), &r(1, 1000)).unwrap_err();
        assert!(matches!(err, Error::PrecisionExhausted(_)));
    }
}
