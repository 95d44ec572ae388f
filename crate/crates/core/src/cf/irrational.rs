//! Irrationals as lazily extended streams of continued-fraction quotients.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, RwLock};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default cap on the number of convergents a single irrational may materialize.
pub const DEFAULT_DEPTH_CAP: usize = 200_000;

/// Where the partial quotients come from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum QuotientSource {
    /// (√5 − 1)/2 = [0; 1, 1, 1, ...]
    Golden,
    /// √2 − 1 = [0; 2, 2, 2, ...]
    Sqrt2,
    /// e − 2 = [0; 1, 2, 1, 1, 4, 1, 1, 6, ...]
    E,
    /// Quadratic irrational: `a0`, a finite pre-period, then `period` repeated forever.
    Periodic {
        a0: i64,
        pre: Vec<u64>,
        period: Vec<u64>,
    },
    /// A finite prefix of an otherwise unknown expansion.
    Finite { a0: i64, tail: Vec<u64> },
}

impl QuotientSource {
    /// Partial quotient `a_n`, or `None` past the end of a finite list.
    pub fn quotient(&self, n: usize) -> Option<BigInt> {
        match self {
            QuotientSource::Golden => Some(if n == 0 { 0 } else { 1 }.into()),
            QuotientSource::Sqrt2 => Some(if n == 0 { 0 } else { 2 }.into()),
            QuotientSource::E => {
                if n == 0 {
                    Some(BigInt::zero())
                } else if n % 3 == 2 {
                    Some(BigInt::from(2 * (n as u64 + 1) / 3))
                } else {
                    Some(BigInt::one())
                }
            }
            QuotientSource::Periodic { a0, pre, period } => {
                if n == 0 {
                    Some((*a0).into())
                } else if n <= pre.len() {
                    Some(pre[n - 1].into())
                } else {
                    Some(period[(n - 1 - pre.len()) % period.len()].into())
                }
            }
            QuotientSource::Finite { a0, tail } => {
                if n == 0 {
                    Some((*a0).into())
                } else {
                    tail.get(n - 1).map(|&a| a.into())
                }
            }
        }
    }

    /// Number of available quotients, `None` for unbounded streams.
    pub fn len(&self) -> Option<usize> {
        match self {
            QuotientSource::Finite { tail, .. } => Some(tail.len() + 1),
            _ => None,
        }
    }
}

/// Convergent `p_n / q_n` of index `n`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Convergent {
    pub index: usize,
    pub p: BigInt,
    pub q: BigInt,
}

impl Convergent {
    pub fn value(&self) -> BigRational {
        BigRational::new(self.p.clone(), self.q.clone())
    }
}

struct Inner {
    source: QuotientSource,
    label: String,
    depth_cap: usize,
    cache: RwLock<Vec<Convergent>>,
}

/// An irrational number α given by its continued-fraction quotient stream.
///
/// Cloning is cheap; clones share the convergent cache, which is extended
/// under a lock so that concurrent readers always see a consistent prefix.
#[derive(Clone)]
pub struct Irrational {
    inner: Arc<Inner>,
}

impl fmt::Debug for Irrational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Irrational")
            .field("label", &self.inner.label)
            .finish()
    }
}

impl PartialEq for Irrational {
    fn eq(&self, other: &Self) -> bool {
        self.inner.source == other.inner.source
    }
}

impl Irrational {
    pub fn new(source: QuotientSource, label: impl Into<String>) -> Result<Self> {
        match &source {
            QuotientSource::Periodic { pre, period, .. } => {
                if period.is_empty() {
                    return Err(Error::invalid("periodic expansion needs a non-empty period"));
                }
                if pre.iter().chain(period).any(|&a| a == 0) {
                    return Err(Error::invalid("partial quotients after a0 must be positive"));
                }
            }
            QuotientSource::Finite { tail, .. } => {
                if tail.iter().any(|&a| a == 0) {
                    return Err(Error::invalid("partial quotients after a0 must be positive"));
                }
            }
            _ => {}
        }
        Ok(Irrational {
            inner: Arc::new(Inner {
                source,
                label: label.into(),
                depth_cap: DEFAULT_DEPTH_CAP,
                cache: RwLock::new(Vec::new()),
            }),
        })
    }

    pub fn golden() -> Self {
        Self::new(QuotientSource::Golden, "golden").expect("builtin")
    }

    pub fn sqrt2() -> Self {
        Self::new(QuotientSource::Sqrt2, "sqrt2").expect("builtin")
    }

    pub fn e() -> Self {
        Self::new(QuotientSource::E, "e").expect("builtin")
    }

    /// Copy with a different convergent depth cap (fresh cache).
    pub fn with_depth_cap(&self, depth_cap: usize) -> Self {
        Irrational {
            inner: Arc::new(Inner {
                source: self.inner.source.clone(),
                label: self.inner.label.clone(),
                depth_cap: depth_cap.max(2),
                cache: RwLock::new(Vec::new()),
            }),
        }
    }

    pub fn source(&self) -> &QuotientSource {
        &self.inner.source
    }

    /// The string this value was parsed from (or the builtin name).
    pub fn label(&self) -> &str {
        &self.inner.label
    }

    pub fn depth_cap(&self) -> usize {
        self.inner.depth_cap
    }

    /// Partial quotient `a_n`.
    pub fn quotient(&self, n: usize) -> Result<BigInt> {
        self.inner
            .source
            .quotient(n)
            .ok_or_else(|| Error::exhausted(format!("{}: quotient a_{n} not available", self.label())))
    }

    /// Makes sure convergents `0..=n` are cached.
    fn ensure(&self, n: usize) -> Result<()> {
        if self.inner.cache.read().expect("cache lock").len() > n {
            return Ok(());
        }
        if n >= self.inner.depth_cap {
            return Err(Error::exhausted(format!(
                "{}: convergent depth cap {} reached",
                self.label(),
                self.inner.depth_cap
            )));
        }
        let mut cache = self.inner.cache.write().expect("cache lock");
        while cache.len() <= n {
            let i = cache.len();
            let a = self.quotient(i)?;
            let (p, q) = match i {
                0 => (a, BigInt::one()),
                1 => {
                    let c0 = &cache[0];
                    (&a * &c0.p + BigInt::one(), a)
                }
                _ => {
                    let (c1, c2) = (&cache[i - 1], &cache[i - 2]);
                    (&a * &c1.p + &c2.p, &a * &c1.q + &c2.q)
                }
            };
            cache.push(Convergent { index: i, p, q });
        }
        Ok(())
    }

    pub fn convergent(&self, n: usize) -> Result<Convergent> {
        self.ensure(n)?;
        Ok(self.inner.cache.read().expect("cache lock")[n].clone())
    }

    /// The first `count` convergents `p_0/q_0, ..., p_{count-1}/q_{count-1}`.
    pub fn convergents(&self, count: usize) -> Result<Vec<Convergent>> {
        if count == 0 {
            return Err(Error::invalid("convergent count must be at least 1"));
        }
        self.ensure(count - 1)?;
        Ok(self.inner.cache.read().expect("cache lock")[..count].to_vec())
    }

    /// Smallest index `n` such that `pred(c_n, c_{n+1})` holds, where `pred`
    /// is monotone in `n`. Convergents are materialized as needed.
    pub(crate) fn first_pair_index<F>(&self, pred: F) -> Result<usize>
    where
        F: Fn(&Convergent, &Convergent) -> bool,
    {
        // grow geometrically until the predicate holds somewhere
        let mut hi = 1usize;
        loop {
            self.ensure(hi)?;
            let ok = {
                let cache = self.inner.cache.read().expect("cache lock");
                pred(&cache[hi - 1], &cache[hi])
            };
            if ok {
                break;
            }
            hi = (hi * 2).min(self.inner.depth_cap.saturating_sub(1)).max(hi + 1);
        }
        let cache = self.inner.cache.read().expect("cache lock");
        let (mut lo, mut hi) = (0usize, hi - 1);
        while lo < hi {
            let mid = (lo + hi) / 2;
            if pred(&cache[mid], &cache[mid + 1]) {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        Ok(lo)
    }

    /// Rational interval `[lo, hi]` containing α with `hi − lo ≤ tol`.
    ///
    /// The endpoints are consecutive convergents.
    pub fn enclose(&self, tol: &BigRational) -> Result<(BigRational, BigRational)> {
        if !tol.is_positive() {
            return Err(Error::invalid("tolerance must be positive"));
        }
        // 1/(q_n q_{n+1}) <= tol  <=>  q_n q_{n+1} numer(tol) >= denom(tol)
        let (tn, td) = (tol.numer().clone(), tol.denom().clone());
        let n = self.first_pair_index(|a, b| &a.q * &b.q * &tn >= td)?;
        let (a, b) = (self.convergent(n)?.value(), self.convergent(n + 1)?.value());
        Ok(if a < b { (a, b) } else { (b, a) })
    }

    /// Compares α with a rational. α is irrational, so equality never occurs;
    /// a finite quotient list that cannot separate the two yields `PrecisionExhausted`.
    pub fn cmp_rational(&self, r: &BigRational) -> Result<Ordering> {
        let mut n = 0usize;
        loop {
            let c = match self.convergent(n) {
                Ok(c) => c,
                Err(Error::PrecisionExhausted(msg)) => {
                    return Err(Error::exhausted(format!("cannot compare α with {r}: {msg}")))
                }
                Err(e) => return Err(e),
            };
            // even convergents lie below α, odd ones above
            let lhs = &c.p * r.denom();
            let rhs = r.numer() * &c.q;
            if n % 2 == 0 {
                if lhs >= rhs {
                    return Ok(Ordering::Greater);
                }
            } else if lhs <= rhs {
                return Ok(Ordering::Less);
            }
            n += 1;
        }
    }

    /// `floor(α)`, i.e. `a_0`.
    pub fn floor(&self) -> Result<BigInt> {
        self.quotient(0)
    }
}

/// Parses the α grammar:
/// `golden | sqrt2 | e | cf:a0,a1,... | percf:a0;a1,...,ak|b1,...,bm`.
impl FromStr for Irrational {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let parse_list = |body: &str| -> Result<Vec<u64>> {
            body.split(',')
                .map(str::trim)
                .filter(|t| !t.is_empty())
                .map(|t| {
                    t.parse::<u64>()
                        .map_err(|_| Error::invalid(format!("bad partial quotient '{t}' in '{s}'")))
                })
                .collect()
        };
        let parse_a0 = |t: &str| -> Result<i64> {
            t.trim()
                .parse::<i64>()
                .map_err(|_| Error::invalid(format!("bad a0 '{t}' in '{s}'")))
        };
        match s {
            "golden" => Ok(Irrational::golden()),
            "sqrt2" => Ok(Irrational::sqrt2()),
            "e" => Ok(Irrational::e()),
            _ => {
                if let Some(body) = s.strip_prefix("cf:") {
                    let mut parts = body.splitn(2, ',');
                    let a0 = parse_a0(parts.next().unwrap_or(""))?;
                    let tail = parse_list(parts.next().unwrap_or(""))?;
                    Irrational::new(QuotientSource::Finite { a0, tail }, s)
                } else if let Some(body) = s.strip_prefix("percf:") {
                    let (head, period) = body
                        .split_once('|')
                        .ok_or_else(|| Error::invalid(format!("'{s}': missing '|' before the period")))?;
                    let (a0, pre) = head
                        .split_once(';')
                        .ok_or_else(|| Error::invalid(format!("'{s}': missing ';' after a0")))?;
                    Irrational::new(
                        QuotientSource::Periodic {
                            a0: parse_a0(a0)?,
                            pre: parse_list(pre)?,
                            period: parse_list(period)?,
                        },
                        s,
                    )
                } else {
                    Err(Error::invalid(format!("unrecognized alpha '{s}'")))
                }
            }
        }
    }
}

/// `floor(n/d)` for `d > 0`.
pub(crate) fn div_floor(n: &BigInt, d: &BigInt) -> BigInt {
    n.div_floor(d)
}

/// `ceil(n/d)` for `d > 0`.
pub(crate) fn div_ceil(n: &BigInt, d: &BigInt) -> BigInt {
    -((-n).div_floor(d))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn golden_denominators_are_fibonacci() {
        let qs: Vec<_> = Irrational::golden()
            .convergents(5)
            .unwrap()
            .into_iter()
            .map(|c| c.q)
            .collect();
        assert_eq!(qs, [1, 1, 2, 3, 5].map(BigInt::from));
    }

    #[test]
    fn sqrt2_denominators() {
        let qs: Vec<_> = Irrational::sqrt2()
            .convergents(4)
            .unwrap()
            .into_iter()
            .map(|c| c.q)
            .collect();
        assert_eq!(qs, [1, 2, 5, 12].map(BigInt::from));
    }

    #[test]
    fn finite_list_runs_out() {
        let a: Irrational = "cf:0,1,2".parse().unwrap();
        assert!(matches!(a.convergents(5), Err(Error::PrecisionExhausted(_))));
        assert_eq!(a.convergents(3).unwrap().len(), 3);
    }

    #[test]
    fn e_quotient_pattern() {
        let e = Irrational::e();
        let got: Vec<_> = (0..10).map(|n| e.quotient(n).unwrap()).collect();
        assert_eq!(got, [0, 1, 2, 1, 1, 4, 1, 1, 6, 1].map(BigInt::from));
    }

    #[test]
    fn determinant_identity() {
        for a in [Irrational::golden(), Irrational::sqrt2(), Irrational::e()] {
            let cs = a.convergents(60).unwrap();
            for w in cs.windows(2) {
                let det = &w[1].p * &w[0].q - &w[0].p * &w[1].q;
                let expected = if w[0].index % 2 == 0 { 1 } else { -1 };
                assert_eq!(det, BigInt::from(expected));
            }
        }
    }

    #[test]
    fn enclose_golden_tenth() {
        let (lo, hi) = Irrational::golden().enclose(&r(1, 10)).unwrap();
        assert_eq!((lo, hi), (r(3, 5), r(2, 3)));
    }

    #[test]
    fn enclose_golden_hundredth_contains_value() {
        let (lo, hi) = Irrational::golden().enclose(&r(1, 100)).unwrap();
        assert!(&hi - &lo <= r(1, 100));
        assert!(lo < r(6180340, 10_000_000) && hi > r(6180339, 10_000_000));
    }

    #[test]
    fn enclose_tolerance_one_is_valid() {
        let (lo, hi) = Irrational::sqrt2().enclose(&r(1, 1)).unwrap();
        assert!(lo < r(4143, 10000) && hi > r(4142, 10000));
    }

    #[test]
    fn parse_grammar() {
        let a: Irrational = "percf:1;|2".parse().unwrap();
        assert_eq!(a.quotient(0).unwrap(), BigInt::from(1));
        assert_eq!(a.quotient(7).unwrap(), BigInt::from(2));
        let b: Irrational = "percf:0;3,4|1,2".parse().unwrap();
        let got: Vec<_> = (0..7).map(|n| b.quotient(n).unwrap()).collect();
        assert_eq!(got, [0, 3, 4, 1, 2, 1, 2].map(BigInt::from));
        assert!("percf:0;|".parse::<Irrational>().is_err());
        assert!("cf:0,0".parse::<Irrational>().is_err());
        assert!("pi".parse::<Irrational>().is_err());
    }

    #[test]
    fn compare_with_rationals() {
        let g = Irrational::golden();
        assert_eq!(g.cmp_rational(&r(618, 1000)).unwrap(), Ordering::Greater);
        assert_eq!(g.cmp_rational(&r(619, 1000)).unwrap(), Ordering::Less);
        assert_eq!(g.cmp_rational(&r(5, 8)).unwrap(), Ordering::Less);
        let short: Irrational = "cf:0,1,1".parse().unwrap();
        assert!(short.cmp_rational(&r(6180339887, 10_000_000_000)).is_err());
    }
}
