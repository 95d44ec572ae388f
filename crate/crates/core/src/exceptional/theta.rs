use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::cf::{CircleEnclosure, Irrational, NormInterval};
use crate::error::{Error, Result};

/// A rotation number θ on the circle, relative to a fixed irrational α.
#[derive(Clone, Debug, PartialEq)]
pub enum ThetaKind {
    Rational(BigRational),
    /// `coef·α + shift` with `coef ≠ 0`.
    Combo { coef: BigRational, shift: BigRational },
    /// An irrational given by its own continued fraction.
    Free(Irrational),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Theta {
    pub label: String,
    pub kind: ThetaKind,
}

/// `θ = (a/b)·α + c/d` in lowest terms, `b, d >= 1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RationalComboTheta {
    pub a: BigInt,
    pub b: BigInt,
    pub c: BigInt,
    pub d: BigInt,
}

impl RationalComboTheta {
    pub fn new(coef: &BigRational, shift: &BigRational) -> Self {
        RationalComboTheta {
            a: coef.numer().clone(),
            b: coef.denom().clone(),
            c: shift.numer().clone(),
            d: shift.denom().clone(),
        }
    }

    pub fn coef(&self) -> BigRational {
        BigRational::new(self.a.clone(), self.b.clone())
    }

    pub fn shift(&self) -> BigRational {
        BigRational::new(self.c.clone(), self.d.clone())
    }

    /// Spacing `1/lcm(b, d)` of the grid `{mθ}` clusters on when `‖mα‖` is
    /// small: `mθ = (a/b)·(mα − round(mα)) + (a·round(mα))/b + mc/d`.
    pub fn grid_step(&self) -> BigRational {
        BigRational::new(BigInt::one(), self.b.lcm(&self.d))
    }
}

impl fmt::Display for Theta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Tok {
    Num(i64),
    A,
    Plus,
    Minus,
    Star,
    Slash,
    Open,
    Close,
}

fn tokenize(s: &str) -> Option<Vec<Tok>> {
    let mut out = Vec::new();
    let chars: Vec<char> = s.chars().filter(|c| !c.is_whitespace()).collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let t = match c {
            '0'..='9' => {
                let start = i;
                while i + 1 < chars.len() && chars[i + 1].is_ascii_digit() {
                    i += 1;
                }
                let s: String = chars[start..=i].iter().collect();
                Tok::Num(s.parse().ok()?)
            }
            'a' | 'α' => Tok::A,
            '+' => Tok::Plus,
            '-' => Tok::Minus,
            '*' => Tok::Star,
            '/' => Tok::Slash,
            '(' => Tok::Open,
            ')' => Tok::Close,
            _ => return None,
        };
        out.push(t);
        i += 1;
    }
    Some(out)
}

/// `coef·α + shift`.
#[derive(Clone, Debug)]
struct Lin(BigRational, BigRational);

struct Parser {
    toks: Vec<Tok>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<Tok> {
        self.toks.get(self.pos).copied()
    }

    fn expr(&mut self) -> Option<Lin> {
        let mut acc = self.term()?;
        while let Some(t @ (Tok::Plus | Tok::Minus)) = self.peek() {
            self.pos += 1;
            let rhs = self.term()?;
            acc = if t == Tok::Plus {
                Lin(acc.0 + rhs.0, acc.1 + rhs.1)
            } else {
                Lin(acc.0 - rhs.0, acc.1 - rhs.1)
            };
        }
        Some(acc)
    }

    fn term(&mut self) -> Option<Lin> {
        let mut acc = self.factor()?;
        while let Some(t @ (Tok::Star | Tok::Slash)) = self.peek() {
            self.pos += 1;
            let rhs = self.factor()?;
            acc = if t == Tok::Star {
                if acc.0.is_zero() {
                    Lin(&rhs.0 * &acc.1, &rhs.1 * &acc.1)
                } else if rhs.0.is_zero() {
                    Lin(&acc.0 * &rhs.1, &acc.1 * &rhs.1)
                } else {
                    return None;
                }
            } else {
                if !rhs.0.is_zero() || rhs.1.is_zero() {
                    return None;
                }
                Lin(&acc.0 / &rhs.1, &acc.1 / &rhs.1)
            };
        }
        Some(acc)
    }

    fn factor(&mut self) -> Option<Lin> {
        let t = self.peek()?;
        self.pos += 1;
        match t {
            Tok::Num(n) => Some(Lin(BigRational::zero(), BigRational::from_integer(n.into()))),
            Tok::A => Some(Lin(BigRational::one(), BigRational::zero())),
            Tok::Minus => {
                let f = self.factor()?;
                Some(Lin(-f.0, -f.1))
            }
            Tok::Open => {
                let e = self.expr()?;
                (self.peek() == Some(Tok::Close)).then(|| {
                    self.pos += 1;
                    e
                })
            }
            _ => None,
        }
    }
}

fn parse_linear(s: &str) -> Option<Lin> {
    let mut p = Parser {
        toks: tokenize(s)?,
        pos: 0,
    };
    let e = p.expr()?;
    (p.pos == p.toks.len()).then_some(e)
}

impl Theta {
    /// Parses a rational combination of α (`p/q*a+r/s`, `(a+1)/3`, `1/2`, …)
    /// or a named irrational (`sqrt2-1`, `sqrt2`, `golden`, `e-2`, `e`, or
    /// any `cf:`/`percf:` expansion).
    pub fn parse(s: &str) -> Result<Theta> {
        let label = s.trim().to_string();
        if let Some(Lin(coef, shift)) = parse_linear(&label) {
            let kind = if coef.is_zero() {
                ThetaKind::Rational(shift)
            } else {
                ThetaKind::Combo { coef, shift }
            };
            return Ok(Theta { label, kind });
        }
        let named = match label.as_str() {
            "sqrt2-1" | "sqrt2" => Some(Irrational::sqrt2()),
            "e-2" | "e" => Some(Irrational::e()),
            "golden" => Some(Irrational::golden()),
            _ => None,
        };
        let beta = match named {
            Some(b) => b,
            None => label
                .parse::<Irrational>()
                .map_err(|_| Error::invalid(format!("cannot parse θ '{label}'")))?,
        };
        Ok(Theta {
            label,
            kind: ThetaKind::Free(beta),
        })
    }

    pub fn rational(q: BigRational) -> Theta {
        Theta {
            label: q.to_string(),
            kind: ThetaKind::Rational(q),
        }
    }

    pub fn combo(&self) -> Option<RationalComboTheta> {
        match &self.kind {
            ThetaKind::Combo { coef, shift } => Some(RationalComboTheta::new(coef, shift)),
            ThetaKind::Rational(q) => Some(RationalComboTheta::new(&BigRational::zero(), q)),
            ThetaKind::Free(_) => None,
        }
    }

    /// Dyadic enclosure of `{mθ}` of width at most `2^(2-bits)`.
    pub fn enclose_multiple(&self, alpha: &Irrational, m: &BigInt, bits: u32) -> Result<CircleEnclosure> {
        let mm = BigRational::from_integer(m.clone());
        match &self.kind {
            ThetaKind::Rational(q) => alpha.affine_enclosure_bits(&BigRational::zero(), &(q * &mm), bits),
            ThetaKind::Combo { coef, shift } => alpha.affine_enclosure_bits(&(coef * &mm), &(shift * &mm), bits),
            ThetaKind::Free(beta) => beta.frac_enclosure_bits(m, bits),
        }
    }

    /// `{θ}·2^64` rounded down, within one unit of the truth.
    pub fn torus_u64(&self, alpha: &Irrational) -> Result<u64> {
        let enc = self.enclose_multiple(alpha, &BigInt::one(), 72)?;
        Ok(dyadic_to_u64(&enc))
    }

    /// Enclosure of `‖kα − sθ‖` at resolution `2^-bits`.
    pub fn resonance_norm(&self, alpha: &Irrational, k: i64, s: i64, bits: u32) -> Result<NormInterval> {
        let (k, s) = (BigRational::from_integer(k.into()), BigRational::from_integer(s.into()));
        let enc = match &self.kind {
            ThetaKind::Rational(q) => alpha.affine_enclosure_bits(&k, &(-(&s * q)), bits)?,
            ThetaKind::Combo { coef, shift } => {
                alpha.affine_enclosure_bits(&(&k - &s * coef), &(-(&s * shift)), bits)?
            }
            ThetaKind::Free(beta) => {
                let x = alpha.affine_enclosure_bits(&k, &BigRational::zero(), bits)?;
                let y = beta.affine_enclosure_bits(&-s, &BigRational::zero(), bits)?;
                CircleEnclosure::from_bounds(x.lo + y.lo, x.hi + y.hi, bits)
            }
        };
        Ok(enc.norm())
    }
}

/// Converts a narrow dyadic enclosure of a circle point to 64-bit fixed point.
pub(crate) fn dyadic_to_u64(enc: &CircleEnclosure) -> u64 {
    let lo = if enc.bits >= 64 {
        &enc.lo >> (enc.bits - 64) as usize
    } else {
        &enc.lo << (64 - enc.bits) as usize
    };
    let mask = (BigInt::one() << 64usize) - 1;
    let v: BigInt = lo & mask;
    u64::try_from(if v.is_negative() { BigInt::zero() } else { v }).expect("masked to 64 bits")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    fn combo(s: &str) -> (BigRational, BigRational) {
        match Theta::parse(s).unwrap().kind {
            ThetaKind::Combo { coef, shift } => (coef, shift),
            k => panic!("{s}: {k:?}"),
        }
    }

    #[test]
    fn grammar() {
        assert_eq!(combo("1/2*a"), (r(1, 2), r(0, 1)));
        assert_eq!(combo("(a+1)/3"), (r(1, 3), r(1, 3)));
        assert_eq!(combo("3/4*a+1/5"), (r(3, 4), r(1, 5)));
        assert_eq!(combo("a/2 - 1"), (r(1, 2), r(-1, 1)));
        assert_eq!(combo("-a"), (r(-1, 1), r(0, 1)));
        assert_eq!(Theta::parse("1/2").unwrap().kind, ThetaKind::Rational(r(1, 2)));
        assert!(matches!(Theta::parse("sqrt2-1").unwrap().kind, ThetaKind::Free(_)));
        assert!(matches!(Theta::parse("cf:0,3,1,4,1").unwrap().kind, ThetaKind::Free(_)));
        for bad in ["a*a", "1/0", "(a+1", "foo", "1/(a)"] {
            assert!(Theta::parse(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn combo_fields_are_reduced() {
        let c = Theta::parse("2/4*a+3/6").unwrap().combo().unwrap();
        assert_eq!((c.a, c.b, c.c, c.d), (1.into(), 2.into(), 1.into(), 2.into()));
    }

    #[test]
    fn fixed_point_matches_float() {
        let g = Irrational::golden();
        let t = Theta::parse("a").unwrap().torus_u64(&g).unwrap();
        let phi = (5f64.sqrt() - 1.0) / 2.0;
        assert!((t as f64 / 2f64.powi(64) - phi).abs() < 1e-15);
        let t = Theta::parse("1/2").unwrap().torus_u64(&g).unwrap();
        assert_eq!(t, 1u64 << 63);
        let t = Theta::parse("-a").unwrap().torus_u64(&g).unwrap();
        assert!((t as f64 / 2f64.powi(64) - (1.0 - phi)).abs() < 1e-15);
    }

    #[test]
    fn resonance_norms() {
        let g = Irrational::golden();
        let th = Theta::parse("3*a-1").unwrap();
        assert_eq!(th.resonance_norm(&g, 3, 1, 64).unwrap(), NormInterval::zero());
        let th = Theta::parse("sqrt2-1").unwrap();
        let v = th.resonance_norm(&g, 1, 1, 64).unwrap();
        let want = ((5f64.sqrt() - 1.0) / 2.0 - (2f64.sqrt() - 1.0)).abs();
        assert!((v.lower_f64() - want).abs() < 1e-15);
    }
}
