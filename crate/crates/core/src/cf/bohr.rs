//! Enumeration of Bohr sets `{m : ‖mα‖ < ε}` by three-gap stepping.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use super::irrational::Irrational;
use crate::error::{Error, Result};

/// Ranges shorter than this are scanned integer by integer.
pub const BRUTE_FORCE_BELOW: i64 = 10_000;

/// The three candidate gaps between consecutive returns of the rotation by α
/// to an interval of length `2ε`: `a`, `b` and `a + b`, where `a` (resp. `b`)
/// is the first `n >= 1` with `{nα} < 2ε` (resp. `{nα} > 1 − 2ε`).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ReturnGaps {
    pub right: i64,
    pub left: i64,
}

impl ReturnGaps {
    pub fn max_gap(&self) -> i64 {
        self.right + self.left
    }

    /// Candidates in increasing order, deduplicated.
    pub fn candidates(&self) -> Vec<i64> {
        let mut v = vec![self.right, self.left, self.right + self.left];
        v.sort_unstable();
        v.dedup();
        v
    }
}

fn rat(n: &BigInt, d: &BigInt) -> BigRational {
    BigRational::new(n.clone(), d.clone())
}

impl Irrational {
    /// Computes the return gaps for the window `‖·‖ < eps` by walking the
    /// intermediate fractions (Stern–Brocot descent towards α); every
    /// comparison is an exact comparison of α with a rational.
    pub fn return_gaps(&self, eps: &BigRational) -> Result<ReturnGaps> {
        let half = BigRational::new(1.into(), 2.into());
        if eps <= &BigRational::zero() || eps >= &half {
            return Err(Error::invalid("eps must lie in (0, 1/2)"));
        }
        let len = eps * BigRational::from_integer(2.into());
        let p0 = self.floor()?;
        // u = aα − P > 0 and v = Q − bα > 0
        let (mut a, mut pa): (BigInt, BigInt) = (BigInt::one(), p0.clone());
        let (mut b, mut qb) = (BigInt::one(), &p0 + BigInt::one());
        let mut steps = 0u64;
        loop {
            // u < len  <=>  α < (P + len)/a
            let u_small = self.cmp_rational(&((BigRational::from_integer(pa.clone()) + &len) / BigRational::from_integer(a.clone())))?
                == std::cmp::Ordering::Less;
            // v < len  <=>  α > (Q − len)/b
            let v_small = self.cmp_rational(&((BigRational::from_integer(qb.clone()) - &len) / BigRational::from_integer(b.clone())))?
                == std::cmp::Ordering::Greater;
            if u_small && v_small {
                break;
            }
            // u > v  <=>  α > (P + Q)/(a + b)
            let u_big = self.cmp_rational(&rat(&(&pa + &qb), &(&a + &b)))? == std::cmp::Ordering::Greater;
            if u_big {
                a += &b;
                pa += &qb;
            } else {
                b += &a;
                qb += &pa;
            }
            steps += 1;
            if steps > 50_000_000 {
                return Err(Error::exhausted("return-gap walk did not terminate"));
            }
        }
        let to_i64 = |x: &BigInt| -> Result<i64> {
            i64::try_from(x).map_err(|_| Error::exhausted("return gap exceeds i64"))
        };
        Ok(ReturnGaps {
            right: to_i64(&a)?,
            left: to_i64(&b)?,
        })
    }

    /// Every `m` in `[start, end)` with certified `‖mα‖ < eps`, in increasing order.
    pub fn bohr_enumerate(&self, eps: &BigRational, start: i64, end: i64) -> Result<Vec<i64>> {
        let half = BigRational::new(1.into(), 2.into());
        if eps <= &BigRational::zero() || eps >= &half {
            return Err(Error::invalid("eps must lie in (0, 1/2)"));
        }
        if start >= end {
            return Ok(Vec::new());
        }
        let tol = eps / BigRational::from_integer(100.into());
        let hit = |m: i64| -> Result<bool> { Ok(self.norm_below(&BigInt::from(m), eps, &tol)?.0) };

        if end - start < BRUTE_FORCE_BELOW {
            let mut out = Vec::new();
            for m in start..end {
                if hit(m)? {
                    out.push(m);
                }
            }
            return Ok(out);
        }

        let gaps = self.return_gaps(eps)?;
        let candidates = gaps.candidates();
        let mut out = Vec::new();
        let mut m = start;
        while m < end && !hit(m)? {
            m += 1;
        }
        if m >= end {
            return Ok(out);
        }
        'outer: loop {
            out.push(m);
            for &g in &candidates {
                let next = m + g;
                if next >= end {
                    break 'outer;
                }
                if hit(next)? {
                    m = next;
                    continue 'outer;
                }
            }
            return Err(Error::Internal(format!(
                "no return among gaps {candidates:?} after {m}"
            )));
        }
        Ok(out)
    }

    /// First element of the Bohr set in `[start, end)`, if any.
    pub fn bohr_first(&self, eps: &BigRational, start: i64, end: i64) -> Result<Option<i64>> {
        let tol = eps / BigRational::from_integer(100.into());
        let mut m = start;
        while m < end {
            if self.norm_below(&BigInt::from(m), eps, &tol)?.0 {
                return Ok(Some(m));
            }
            m += 1;
        }
        Ok(None)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn golden_tenth_below_forty() {
        let got = Irrational::golden().bohr_enumerate(&r(1, 10), 0, 40).unwrap();
        assert_eq!(got, vec![0, 5, 8, 13, 21, 26, 29, 34]);
    }

    #[test]
    fn golden_wide_window() {
        // ‖mα‖ for m = 0..4: 0, .382, .236, .146, .472
        let got = Irrational::golden().bohr_enumerate(&r(2, 5), 0, 5).unwrap();
        assert_eq!(got, vec![0, 1, 2, 3]);
    }

    #[test]
    fn empty_range() {
        assert!(Irrational::golden().bohr_enumerate(&r(1, 10), 7, 7).unwrap().is_empty());
    }

    #[test]
    fn stepping_matches_scan() {
        for a in [Irrational::golden(), Irrational::sqrt2(), Irrational::e()] {
            for eps in [r(1, 10), r(1, 100), r(3, 7)] {
                let stepped = a.bohr_enumerate(&eps, 1_000, 31_000).unwrap();
                let mut scanned = Vec::new();
                for chunk in (1_000..31_000).step_by(5_000) {
                    scanned.extend(a.bohr_enumerate(&eps, chunk, chunk + 5_000).unwrap());
                }
                assert_eq!(stepped, scanned, "{a:?} eps={eps}");
            }
        }
    }

    #[test]
    fn bad_eps_rejected() {
        assert!(Irrational::golden().bohr_enumerate(&r(1, 2), 0, 10).is_err());
        assert!(Irrational::golden().bohr_enumerate(&r(0, 1), 0, 10).is_err());
    }
}
