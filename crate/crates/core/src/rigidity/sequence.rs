use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::cf::{Irrational, MAX_REFINE_BITS};
use crate::error::{Error, Result};

/// Generator behind a [`RigiditySequence`].
#[derive(Clone, Debug, PartialEq)]
pub enum SequenceKind {
    /// `a·q_l` over the distinct convergent denominators of α, with envelope
    /// `a / q_{l+1}`. `a = 1` gives the plain denominators.
    Denominators { scale: BigInt },
    /// Terms read from user input. The envelope is the supplied one, or else
    /// the running suffix maximum of certified upper bounds for `‖m_l α‖`.
    Finite {
        terms: Vec<BigInt>,
        envelope: Vec<BigRational>,
    },
}

/// A strictly increasing sequence `m_l` (0-based) with a monotone certified
/// envelope `b_l >= ‖m_l α‖`.
#[derive(Clone, Debug)]
pub struct RigiditySequence {
    alpha: Irrational,
    kind: SequenceKind,
    offset: usize,
}

impl RigiditySequence {
    /// Convergent denominators of α scaled by `scale`, with the first `count`
    /// envelopes checked against certified norms.
    pub fn builtin(alpha: &Irrational, scale: BigInt, count: usize) -> Result<Self> {
        if scale < BigInt::one() {
            return Err(Error::invalid("scale must be at least 1"));
        }
        // q_0 = q_1 = 1 when a_1 = 1; drop the repeat.
        let offset = usize::from(alpha.quotient(1)?.is_one());
        let seq = RigiditySequence {
            alpha: alpha.clone(),
            kind: SequenceKind::Denominators { scale },
            offset,
        };
        seq.verify_envelope(count)?;
        Ok(seq)
    }

    pub fn denominators(alpha: &Irrational, count: usize) -> Result<Self> {
        Self::builtin(alpha, BigInt::one(), count)
    }

    /// A finite user sequence. Without an explicit envelope one is derived
    /// from certified norms.
    pub fn finite(
        alpha: &Irrational,
        terms: Vec<BigInt>,
        envelope: Option<Vec<BigRational>>,
    ) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::invalid("empty sequence"));
        }
        if terms.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("sequence terms must be strictly increasing"));
        }
        if !terms[0].is_positive() {
            return Err(Error::invalid("sequence terms must be positive"));
        }
        let envelope = match envelope {
            Some(b) => {
                if b.len() != terms.len() {
                    return Err(Error::invalid("envelope length differs from term count"));
                }
                if b.windows(2).any(|w| w[0] < w[1]) {
                    return Err(Error::invalid("envelope must be non-increasing"));
                }
                b
            }
            None => {
                let tol = BigRational::new(BigInt::one(), BigInt::one() << 64usize);
                let mut ups = terms
                    .iter()
                    .map(|m| Ok(alpha.circle_norm(m, &tol)?.upper))
                    .collect::<Result<Vec<_>>>()?;
                for i in (0..ups.len().saturating_sub(1)).rev() {
                    if ups[i] < ups[i + 1] {
                        ups[i] = ups[i + 1].clone();
                    }
                }
                ups
            }
        };
        let seq = RigiditySequence {
            alpha: alpha.clone(),
            kind: SequenceKind::Finite { terms, envelope },
            offset: 0,
        };
        let n = seq.len().unwrap_or(0);
        seq.verify_envelope(n)?;
        Ok(seq)
    }

    /// Parses the line format: one term per line, optionally followed by an
    /// envelope value (`m` or `m b`, `b` a rational such as `1/1000`).
    /// Blank lines and lines starting with `#` are skipped. Envelope values
    /// must be given on every line or on none.
    pub fn parse_finite(alpha: &Irrational, text: &str) -> Result<Self> {
        let mut terms = Vec::new();
        let mut env = Vec::new();
        for (no, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split(|c: char| c.is_whitespace() || c == ',').filter(|s| !s.is_empty());
            let m = parts
                .next()
                .and_then(|s| BigInt::from_str(s).ok())
                .ok_or_else(|| Error::invalid(format!("line {}: bad term", no + 1)))?;
            terms.push(m);
            if let Some(b) = parts.next() {
                let b = BigRational::from_str(b)
                    .map_err(|_| Error::invalid(format!("line {}: bad envelope value", no + 1)))?;
                env.push(b);
            }
            if parts.next().is_some() {
                return Err(Error::invalid(format!("line {}: too many fields", no + 1)));
            }
        }
        let envelope = match env.len() {
            0 => None,
            n if n == terms.len() => Some(env),
            _ => return Err(Error::invalid("envelope values must be given on every line or none")),
        };
        Self::finite(alpha, terms, envelope)
    }

    pub fn alpha(&self) -> &Irrational {
        &self.alpha
    }

    pub fn kind(&self) -> &SequenceKind {
        &self.kind
    }

    /// Number of terms, `None` for generated sequences.
    pub fn len(&self) -> Option<usize> {
        match &self.kind {
            SequenceKind::Denominators { .. } => None,
            SequenceKind::Finite { terms, .. } => Some(terms.len()),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == Some(0)
    }

    /// Whether the envelope is known beyond any materialized prefix.
    pub fn has_tail_law(&self) -> bool {
        matches!(self.kind, SequenceKind::Denominators { .. })
    }

    fn check_index(&self, l: usize) -> Result<()> {
        match self.len() {
            Some(n) if l >= n => Err(Error::SequenceTooShort(format!(
                "index {l} requested, sequence has {n} terms"
            ))),
            _ => Ok(()),
        }
    }

    pub fn term(&self, l: usize) -> Result<BigInt> {
        self.check_index(l)?;
        match &self.kind {
            SequenceKind::Denominators { scale } => {
                Ok(scale * self.alpha.convergent(l + self.offset)?.q)
            }
            SequenceKind::Finite { terms, .. } => Ok(terms[l].clone()),
        }
    }

    pub fn terms(&self, count: usize) -> Result<Vec<BigInt>> {
        (0..count).map(|l| self.term(l)).collect()
    }

    pub fn envelope(&self, l: usize) -> Result<BigRational> {
        self.check_index(l)?;
        match &self.kind {
            SequenceKind::Denominators { scale } => {
                let q = self.alpha.convergent(l + self.offset + 1)?.q;
                Ok(BigRational::new(scale.clone(), q))
            }
            SequenceKind::Finite { envelope, .. } => Ok(envelope[l].clone()),
        }
    }

    /// Least `l >= start` with `factor·b_l < bound`. Since `b` is
    /// non-increasing the inequality then holds for every later index too.
    pub fn first_index_with(&self, start: usize, factor: &BigInt, bound: &BigRational) -> Result<usize> {
        let factor = BigRational::from_integer(factor.clone());
        let mut l = start;
        loop {
            if let Some(n) = self.len() {
                if l >= n {
                    return Err(Error::SequenceTooShort(format!(
                        "no index >= {start} with {factor}·b_l < {bound} among {n} terms"
                    )));
                }
            }
            if &factor * self.envelope(l)? < *bound {
                return Ok(l);
            }
            l += 1;
            if l - start > self.alpha.depth_cap() {
                return Err(Error::exhausted("envelope search ran past the convergent depth cap"));
            }
        }
    }

    /// Decides `‖mα‖ <= b` by refining until a certified answer appears.
    fn norm_dominated(&self, m: &BigInt, b: &BigRational) -> Result<bool> {
        if m.is_zero() {
            return Ok(!b.is_negative());
        }
        let mut bits = 32;
        loop {
            let ni = self.alpha.frac_enclosure_bits(m, bits)?.norm();
            if &ni.upper <= b {
                return Ok(true);
            }
            if &ni.lower > b {
                return Ok(false);
            }
            bits += 32;
            if bits > MAX_REFINE_BITS {
                return Err(Error::exhausted(format!("cannot compare ‖{m}·α‖ with {b}")));
            }
        }
    }

    /// Checks `upper(‖m_l α‖) <= b_l` for `l < count` and monotonicity of `b`.
    pub fn verify_envelope(&self, count: usize) -> Result<()> {
        let mut prev: Option<BigRational> = None;
        for l in 0..count {
            let m = self.term(l)?;
            let b = self.envelope(l)?;
            if let Some(p) = &prev {
                if &b > p {
                    return Err(Error::VerificationFailed(format!("envelope increases at index {l}")));
                }
                if m <= self.term(l - 1)? {
                    return Err(Error::VerificationFailed(format!("terms not increasing at index {l}")));
                }
            }
            if !self.norm_dominated(&m, &b)? {
                return Err(Error::VerificationFailed(format!(
                    "envelope b_{l} = {b} does not dominate ‖m_l α‖"
                )));
            }
            prev = Some(b);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    fn ints(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|&x| BigInt::from(x)).collect()
    }

    #[test]
    fn golden_denominators() {
        let s = RigiditySequence::denominators(&Irrational::golden(), 8).unwrap();
        assert_eq!(s.terms(8).unwrap(), ints(&[1, 2, 3, 5, 8, 13, 21, 34]));
        assert_eq!(s.envelope(0).unwrap(), r(1, 2));
        assert_eq!(s.envelope(7).unwrap(), r(1, 55));
    }

    #[test]
    fn sqrt2_denominators_and_envelopes() {
        let s = RigiditySequence::denominators(&Irrational::sqrt2(), 4).unwrap();
        assert_eq!(s.terms(4).unwrap(), ints(&[1, 2, 5, 12]));
        let env: Vec<_> = (0..4).map(|l| s.envelope(l).unwrap()).collect();
        assert_eq!(env, vec![r(1, 2), r(1, 5), r(1, 12), r(1, 29)]);
    }

    #[test]
    fn scale_one_is_plain() {
        let g = Irrational::golden();
        let a = RigiditySequence::builtin(&g, BigInt::one(), 10).unwrap();
        let b = RigiditySequence::denominators(&g, 10).unwrap();
        assert_eq!(a.terms(10).unwrap(), b.terms(10).unwrap());
    }

    #[test]
    fn scaled_envelope_holds() {
        let s = RigiditySequence::builtin(&Irrational::e(), BigInt::from(3), 40).unwrap();
        // e − 2 = [0; 1, 2, 1, 1, 4, ...], so q_0 = q_1 is skipped
        assert_eq!(s.term(4).unwrap(), BigInt::from(3) * Irrational::e().convergent(5).unwrap().q);
    }

    #[test]
    fn first_index_with_envelope() {
        let s = RigiditySequence::denominators(&Irrational::golden(), 4).unwrap();
        assert_eq!(s.first_index_with(1, &BigInt::one(), &r(1, 4)).unwrap(), 2);
        assert_eq!(s.first_index_with(0, &BigInt::from(10), &r(1, 100)).unwrap(), 14);
    }

    #[test]
    fn finite_parsing_and_derived_envelope() {
        let g = Irrational::golden();
        let s = RigiditySequence::parse_finite(&g, "# fib\n5\n8\n\n13\n").unwrap();
        assert_eq!(s.len(), Some(3));
        assert!(!s.has_tail_law());
        let b = s.envelope(0).unwrap();
        assert!(b >= s.envelope(1).unwrap());
        assert!(matches!(s.term(3), Err(Error::SequenceTooShort(_))));
        assert!(matches!(
            s.first_index_with(0, &BigInt::one(), &r(1, 1000)),
            Err(Error::SequenceTooShort(_))
        ));
    }

    #[test]
    fn finite_rejects_bad_input() {
        let g = Irrational::golden();
        assert!(RigiditySequence::parse_finite(&g, "5\n3\n").is_err());
        assert!(RigiditySequence::parse_finite(&g, "5 1/2\n8\n").is_err());
        // ‖5α‖ ≈ 0.09 is not below 1/100
        assert!(RigiditySequence::parse_finite(&g, "5 1/100\n8 1/100\n").is_err());
        assert!(RigiditySequence::parse_finite(&g, "5 1/5\n8 1/10\n").is_ok());
    }
}
