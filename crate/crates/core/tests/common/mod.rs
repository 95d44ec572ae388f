//! A 200-digit decimal oracle for `‖kα‖`, independent of the continued
//! fraction machinery.

#![allow(dead_code)]

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed};

pub const DIGITS: usize = 200;

pub struct Oracle {
    /// `⌊α·10^DIGITS⌋`, within one unit of the truth.
    pub scaled: BigInt,
    pub unit: BigInt,
}

impl Oracle {
    /// `(√d − c)/div` from an integer square root.
    fn quadratic(d: u32, c: u32, div: u32) -> Self {
        let unit = num_traits::pow(BigInt::from(10), DIGITS);
        let root = (BigInt::from(d) * &unit * &unit).sqrt();
        Oracle {
            scaled: (root - BigInt::from(c) * &unit) / BigInt::from(div),
            unit,
        }
    }

    /// `(√5 − 1)/2`.
    pub fn golden() -> Self {
        Self::quadratic(5, 1, 2)
    }

    /// `√2 − 1`.
    pub fn sqrt2() -> Self {
        Self::quadratic(2, 1, 1)
    }

    /// `‖kα‖·10^DIGITS` rounded, and a bound on its error in units.
    pub fn norm(&self, k: i64) -> (BigInt, BigInt) {
        let x = (BigInt::from(k) * &self.scaled).mod_floor(&self.unit);
        let other = &self.unit - &x;
        (x.min(other), BigInt::from(k.unsigned_abs()) + 2)
    }

    /// Decides `‖kα‖ < eps`; `None` only within the error bound.
    pub fn below(&self, k: i64, eps: &BigRational) -> Option<bool> {
        let (n, err) = self.norm(k);
        let t = eps * BigRational::from_integer(self.unit.clone());
        let lo = BigRational::from_integer(&n - &err);
        let hi = BigRational::from_integer(&n + &err);
        if hi < t {
            Some(true)
        } else if lo >= t {
            Some(false)
        } else {
            None
        }
    }

    /// Whether `[lower, upper]` is consistent with the oracle value.
    pub fn encloses(&self, k: i64, lower: &BigRational, upper: &BigRational) -> bool {
        let (n, err) = self.norm(k);
        let u = BigRational::from_integer(self.unit.clone());
        let lo = lower * &u;
        let hi = upper * &u;
        lo <= BigRational::from_integer(&n + &err) && hi >= BigRational::from_integer(&n - &err)
    }

    /// `argmin_{0<k<=bound} ‖kα‖`, exact as long as no two candidates are
    /// within the error bound of each other.
    pub fn argmin_table(&self, bound: i64) -> Vec<i64> {
        let mut best = BigInt::from(-1);
        let mut arg = 0;
        let mut out = vec![0];
        for k in 1..=bound {
            let (n, _) = self.norm(k);
            if best.is_negative() || n < best {
                best = n;
                arg = k;
            }
            out.push(arg);
        }
        out
    }
}

pub fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

pub fn pow2_inv(e: usize) -> BigRational {
    BigRational::new(BigInt::one(), BigInt::one() << e)
}
