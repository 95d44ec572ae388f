use std::collections::HashSet;
use std::f64::consts::PI;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cf::{bits_for_tol, Irrational, NormInterval, MAX_REFINE_BITS};
use crate::error::{Error, Result};

/// `μ_p = 2^-p Σ δ_{k_i α}`, stored by its multipliers `k_1 = 0, k_2, …`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AtomicMeasure {
    pub level: usize,
    #[serde(with = "crate::serde_rational::bigint_vec")]
    pub multipliers: Vec<BigInt>,
}

impl AtomicMeasure {
    /// The Dirac mass at 0.
    pub fn dirac() -> Self {
        AtomicMeasure {
            level: 0,
            multipliers: vec![BigInt::zero()],
        }
    }

    pub fn new(multipliers: Vec<BigInt>) -> Result<Self> {
        let n = multipliers.len();
        if n == 0 || !n.is_power_of_two() {
            return Err(Error::invalid(format!("{n} atoms is not a power of two")));
        }
        if !multipliers[0].is_zero() {
            return Err(Error::invalid("the first multiplier must be 0"));
        }
        let distinct: HashSet<&BigInt> = multipliers.iter().collect();
        if distinct.len() != n {
            return Err(Error::invalid("multipliers must be distinct"));
        }
        Ok(AtomicMeasure {
            level: n.trailing_zeros() as usize,
            multipliers,
        })
    }

    pub fn atom_count(&self) -> usize {
        self.multipliers.len()
    }

    pub fn max_abs(&self) -> BigInt {
        self.multipliers
            .iter()
            .map(|k| if k < &BigInt::zero() { -k } else { k.clone() })
            .max()
            .unwrap_or_default()
    }

    /// The first `2^level` atoms.
    pub fn truncate(&self, level: usize) -> Result<AtomicMeasure> {
        if level > self.level {
            return Err(Error::invalid(format!("level {level} exceeds {}", self.level)));
        }
        Ok(AtomicMeasure {
            level,
            multipliers: self.multipliers[..1 << level].to_vec(),
        })
    }

    /// Enclosure of `μ^m = 2^-p Σ ‖m k_i α‖` at resolution `2^-bits` per atom.
    pub fn mu_bits(&self, alpha: &Irrational, m: &BigInt, bits: u32) -> Result<NormInterval> {
        let mut lo = BigInt::zero();
        let mut hi = BigInt::zero();
        for k in &self.multipliers {
            let (a, b) = alpha.circle_norm_bits(&(m * k), bits)?;
            lo += a;
            hi += b;
        }
        let den = BigInt::one() << (bits as usize + self.level);
        Ok(NormInterval {
            lower: BigRational::new(lo, den.clone()),
            upper: BigRational::new(hi, den),
        })
    }

    /// Certified enclosure of `μ^m` of width at most `tol`.
    pub fn mu(&self, alpha: &Irrational, m: &BigInt, tol: &BigRational) -> Result<NormInterval> {
        self.mu_bits(alpha, m, bits_for_tol(tol))
    }

    /// Decides `μ^m < bound`, refining from `2^-bits` as needed.
    pub fn mu_below(
        &self,
        alpha: &Irrational,
        m: &BigInt,
        bound: &BigRational,
        bits: u32,
    ) -> Result<(bool, NormInterval)> {
        let mut bits = bits;
        loop {
            let ni = self.mu_bits(alpha, m, bits)?;
            if let Some(b) = ni.below(bound) {
                return Ok((b, ni));
            }
            bits += 32;
            if bits > MAX_REFINE_BITS {
                return Err(Error::exhausted(format!("cannot decide μ^{m} < {bound}")));
            }
        }
    }

    /// Enclosure of the Fourier coefficient `μ̂(m) = 2^-p Σ e^{2πi m k_i α}`.
    pub fn fourier_coeff(&self, alpha: &Irrational, m: &BigInt, tol: &BigRational) -> Result<ComplexBall> {
        if m.is_zero() || self.level == 0 {
            return Ok(ComplexBall::exact(Complex64::new(1.0, 0.0)));
        }
        // Only the f64 part of the enclosure survives, so resolution past 60 bits is moot.
        let bits = bits_for_tol(tol).min(60);
        let parts = self
            .multipliers
            .par_iter()
            .map(|k| {
                if k.is_zero() {
                    return Ok((Complex64::new(1.0, 0.0), 0.0));
                }
                let enc = alpha.frac_enclosure_bits(&(m * k), bits)?;
                let w = enc.width().to_f64_lossy();
                let x = enc.mid_f64();
                let (s, c) = (2.0 * PI * x).sin_cos();
                Ok((Complex64::new(c, s), PI * w))
            })
            .collect::<Result<Vec<_>>>()?;
        let n = parts.len() as f64;
        let mut sum = Complex64::new(0.0, 0.0);
        let mut rad: f64 = 0.0;
        for (z, r) in parts {
            sum += z;
            rad = rad.max(r);
        }
        // float error: argument, sin/cos and the sum, each a few ulps per term
        let float_err = 8.0 * f64::EPSILON * (1.0 + n.log2());
        Ok(ComplexBall {
            center: sum / n,
            radius: rad + float_err,
        })
    }

    /// Enclosure of `1 − μ̂(m)` with error proportional to its size, so that
    /// it stays meaningful when every atom sits very close to an integer.
    pub fn fourier_defect(&self, alpha: &Irrational, m: &BigInt) -> Result<ComplexBall> {
        if m.is_zero() || self.level == 0 {
            return Ok(ComplexBall::exact(Complex64::new(0.0, 0.0)));
        }
        let parts = self
            .multipliers
            .par_iter()
            .map(|k| signed_offset(alpha, &(m * k)))
            .collect::<Result<Vec<_>>>()?;
        let n = parts.len() as f64;
        let mut sum = Complex64::new(0.0, 0.0);
        let mut abs_sum = 0.0;
        let mut abs_err = 0.0;
        for (r, err) in parts {
            // 1 − e^{2πir} = 2 sin(πr)·(sin(πr) − i cos(πr))
            let (s, c) = (PI * r).sin_cos();
            sum += Complex64::new(2.0 * s * s, -2.0 * s * c);
            abs_sum += 2.0 * s.abs();
            abs_err += 2.0 * PI * err;
        }
        let radius = ((n + 8.0) * f64::EPSILON * abs_sum + abs_err) / n * (1.0 + 1e-9);
        Ok(ComplexBall {
            center: sum / n,
            radius,
        })
    }

    /// `η_{p0} = (1/4) min_{i < i' <= 2^{p0}} ‖(k_i − k_{i'})α‖`; `None` for
    /// `p0 = 0` where there are no pairs.
    pub fn eta(&self, alpha: &Irrational, p0: usize, tol: &BigRational) -> Result<Option<NormInterval>> {
        if p0 > self.level {
            return Err(Error::invalid(format!("p0 = {p0} exceeds level {}", self.level)));
        }
        if p0 == 0 {
            return Ok(None);
        }
        let n = 1usize << p0;
        let ks = &self.multipliers[..n];
        let mut bits = bits_for_tol(tol);
        loop {
            let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))).collect();
            let dists = pairs
                .par_iter()
                .map(|&(i, j)| alpha.circle_norm_bits(&(&ks[i] - &ks[j]), bits))
                .collect::<Result<Vec<_>>>()?;
            let lo = dists.iter().map(|d| &d.0).min().expect("at least one pair").clone();
            let hi = dists.iter().map(|d| &d.1).min().expect("at least one pair").clone();
            if lo.is_zero() {
                bits += 32;
                if bits > MAX_REFINE_BITS {
                    return Err(Error::exhausted("cannot separate atoms"));
                }
                continue;
            }
            let den = BigInt::one() << (bits as usize + 2);
            return Ok(Some(NormInterval {
                lower: BigRational::new(lo, den.clone()),
                upper: BigRational::new(hi, den),
            }));
        }
    }
}

/// Signed representative `r ∈ [−1/2, 1/2)` of `xα` as a float with relative
/// error below `2^-58`, and an absolute error term that is nonzero only when
/// `|r|` is below `2^-4000` and is reported as 0.
fn signed_offset(alpha: &Irrational, x: &BigInt) -> Result<(f64, f64)> {
    if x.is_zero() {
        return Ok((0.0, 0.0));
    }
    const FLOOR_BITS: u32 = 4096;
    let mut bits = 64u32;
    loop {
        let enc = alpha.frac_enclosure_bits(x, bits)?;
        let (nlo, nhi) = enc.norm_numerators();
        let width = &enc.hi - &enc.lo;
        if nlo.is_positive() && (width << 60usize) <= nlo {
            let scale = BigInt::one() << (bits as usize + 1);
            let mut mid = BigRational::new(&enc.lo + &enc.hi, scale);
            let half = BigRational::new(1.into(), 2.into());
            while mid >= half {
                mid -= BigRational::one();
            }
            let r = mid.to_f64_lossy();
            return Ok((r, 0.0));
        }
        if bits >= FLOOR_BITS {
            let hi = BigRational::new(nhi, BigInt::one() << bits as usize).to_f64_lossy();
            return Ok((0.0, hi.max(f64::MIN_POSITIVE)));
        }
        let grow = if nhi.is_zero() {
            bits
        } else {
            (bits + 72).saturating_sub(nhi.bits() as u32).max(32)
        };
        bits = (bits + grow).min(FLOOR_BITS);
    }
}

trait ToF64Lossy {
    fn to_f64_lossy(&self) -> f64;
}

impl ToF64Lossy for BigRational {
    fn to_f64_lossy(&self) -> f64 {
        num_traits::ToPrimitive::to_f64(self).unwrap_or(f64::INFINITY)
    }
}

/// A disc `|z − center| <= radius` certified to contain a complex value.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexBall {
    pub center: Complex64,
    pub radius: f64,
}

impl ComplexBall {
    pub fn exact(center: Complex64) -> Self {
        ComplexBall { center, radius: 0.0 }
    }

    pub fn contains(&self, z: Complex64) -> bool {
        (z - self.center).norm() <= self.radius
    }

    /// Range of `|z − w|` over the disc.
    pub fn distance_to(&self, w: Complex64) -> (f64, f64) {
        let d = (self.center - w).norm();
        ((d - self.radius).max(0.0), d + self.radius)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    fn pair() -> AtomicMeasure {
        AtomicMeasure::new(vec![BigInt::zero(), BigInt::one()]).unwrap()
    }

    #[test]
    fn construction_checks() {
        assert!(AtomicMeasure::new(vec![BigInt::one(), BigInt::zero()]).is_err());
        assert!(AtomicMeasure::new(vec![BigInt::zero(), BigInt::one(), BigInt::from(2)]).is_err());
        assert!(AtomicMeasure::new(vec![BigInt::zero(), BigInt::zero()]).is_err());
        assert_eq!(pair().level, 1);
        assert_eq!(AtomicMeasure::dirac().truncate(0).unwrap(), AtomicMeasure::dirac());
    }

    #[test]
    fn dirac_mu_is_zero() {
        let g = Irrational::golden();
        let v = AtomicMeasure::dirac().mu(&g, &BigInt::from(13), &r(1, 1000)).unwrap();
        assert_eq!(v, NormInterval::zero());
    }

    #[test]
    fn pair_mu_examples() {
        let g = Irrational::golden();
        let tol = r(1, 1_000_000_000);
        let v = pair().mu(&g, &BigInt::from(13), &tol).unwrap();
        assert!(v.width() <= tol);
        assert!((v.lower_f64() - 0.0172209).abs() < 1e-7);
        let v = pair().mu(&g, &BigInt::from(5), &tol).unwrap();
        assert!((v.lower_f64() - 0.0450850).abs() < 1e-7);
    }

    #[test]
    fn fourier_trivial_cases() {
        let g = Irrational::golden();
        let one = Complex64::new(1.0, 0.0);
        let c = AtomicMeasure::dirac().fourier_coeff(&g, &BigInt::from(7), &r(1, 100)).unwrap();
        assert_eq!(c, ComplexBall::exact(one));
        let c = pair().fourier_coeff(&g, &BigInt::zero(), &r(1, 100)).unwrap();
        assert_eq!(c, ComplexBall::exact(one));
    }

    #[test]
    fn fourier_pair_thirteen() {
        let g = Irrational::golden();
        let alpha = (5f64.sqrt() - 1.0) / 2.0;
        let c = pair().fourier_coeff(&g, &BigInt::from(13), &r(1, 1 << 40)).unwrap();
        let direct = (Complex64::new(1.0, 0.0) + Complex64::from_polar(1.0, 2.0 * PI * 13.0 * alpha)) / 2.0;
        assert!((c.center - direct).norm() < 1e-12);
        let (_, hi) = c.distance_to(Complex64::new(1.0, 0.0));
        assert!(hi <= 2.0 * PI * 0.01723);
    }

    #[test]
    fn defect_matches_coefficient() {
        let g = Irrational::golden();
        let mu = AtomicMeasure::new(vec![0, 1, 7, 30].into_iter().map(BigInt::from).collect()).unwrap();
        for m in [1i64, 13, 144, 987654321] {
            let m = BigInt::from(m);
            let d = mu.fourier_defect(&g, &m).unwrap();
            let c = mu.fourier_coeff(&g, &m, &r(1, 1 << 50)).unwrap();
            let gap = (Complex64::new(1.0, 0.0) - c.center - d.center).norm();
            assert!(gap <= d.radius + c.radius + 1e-15, "{gap}");
            let v = mu.mu(&g, &m, &r(1, 1 << 50)).unwrap();
            let (_, hi) = d.distance_to(Complex64::new(0.0, 0.0));
            assert!(hi <= 2.0 * PI * v.upper_f64() + d.radius);
        }
    }

    #[test]
    fn defect_keeps_relative_accuracy() {
        // ‖F_n α‖ ≈ 1/(√5 F_n) is far below the f64 resolution of 1 − μ̂
        let g = Irrational::golden();
        let q = g.convergent(300).unwrap().q;
        let d = pair().fourier_defect(&g, &q).unwrap();
        let v = pair().mu_bits(&g, &q, 400).unwrap();
        let size = d.center.norm();
        assert!(size > 0.0 && d.radius < 1e-12 * size);
        let ratio = size / (2.0 * PI * v.lower_f64());
        assert!((ratio - 1.0).abs() < 1e-12, "{ratio}");
    }

    #[test]
    fn eta_of_pair() {
        let g = Irrational::golden();
        assert!(pair().eta(&g, 0, &r(1, 100)).unwrap().is_none());
        let e = pair().eta(&g, 1, &r(1, 1 << 30)).unwrap().unwrap();
        assert!((e.lower_f64() - 0.0954915).abs() < 1e-7);
        assert!(e.lower <= e.upper);
    }
}
