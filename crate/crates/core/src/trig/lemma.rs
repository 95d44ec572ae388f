use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{FromPrimitive, One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::birkhoff::resonance_bound;
use super::builders::{build_phi_eps, build_varphi_l, PhiEps, VarphiL};
use crate::cf::{CircleEnclosure, Irrational, NormInterval, MAX_REFINE_BITS};
use crate::error::{Error, Result};
use crate::exceptional::{dyadic_to_u64, Theta};

/// The closed arc `[start, start + len]` on the circle, `0 < len < 1`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClosedArc {
    #[serde(with = "crate::serde_rational")]
    pub start: BigRational,
    #[serde(with = "crate::serde_rational")]
    pub len: BigRational,
}

impl ClosedArc {
    pub fn new(start: BigRational, len: BigRational) -> Result<Self> {
        if !len.is_positive() || len >= BigRational::one() {
            return Err(Error::invalid("arc length must lie in (0, 1)"));
        }
        let start = &start - start.floor();
        Ok(ClosedArc { start, len })
    }

    /// Arc between two points taken counter-clockwise from `a` to `b`.
    pub fn between(a: BigRational, b: BigRational) -> Result<Self> {
        let d = &b - &a;
        Self::new(a, &d - d.floor())
    }

    /// `Some(true)` if the whole enclosure lies in the arc, `Some(false)` if
    /// it misses it, `None` if it straddles an endpoint.
    fn decide(&self, enc: &CircleEnclosure) -> Option<bool> {
        let lo = enc.lower() - &self.start;
        let shift = lo.floor();
        let lo = lo - &shift;
        let hi = enc.upper() - &self.start - shift;
        if hi <= self.len {
            Some(true)
        } else if lo > self.len && hi < BigRational::one() {
            Some(false)
        } else {
            None
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Membership {
    /// `θ ∈ 𝒜(N1, N2, I, ε, α)`.
    pub member: bool,
    /// First Bohr element `m` with `{mθ} ∈ I`.
    pub witness: Option<i64>,
    /// Size of the Bohr slice scanned.
    pub bohr_count: usize,
}

/// Decides whether `{mθ} ∉ I` for every `m ∈ [n1, n2)` with `‖mα‖ < ε`.
pub fn scan_a_membership(
    alpha: &Irrational,
    theta: &Theta,
    n1: i64,
    n2: i64,
    arc: &ClosedArc,
    eps: &BigRational,
) -> Result<Membership> {
    let slice = alpha.bohr_enumerate(eps, n1, n2)?;
    let hits = slice
        .par_iter()
        .map(|&m| {
            let m_big = BigInt::from(m);
            let mut bits = 64;
            loop {
                let enc = theta.enclose_multiple(alpha, &m_big, bits)?;
                if let Some(inside) = arc.decide(&enc) {
                    return Ok(inside);
                }
                bits += 64;
                if bits > MAX_REFINE_BITS {
                    return Err(Error::exhausted(format!("cannot place {{{m}θ}} relative to the arc")));
                }
            }
        })
        .collect::<Result<Vec<bool>>>()?;
    let witness = slice.iter().zip(&hits).find(|(_, &h)| h).map(|(&m, _)| m);
    Ok(Membership {
        member: witness.is_none(),
        witness,
        bohr_count: slice.len(),
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResonanceWitness {
    pub k: i64,
    pub s: i64,
    pub norm: NormInterval,
}

/// `(k, s)` with `|k| <= k_max`, `0 < s <= l_max` and certified
/// `‖kα − sθ‖ < ν`. Negative `s` is covered by the sign of `k`; the pair
/// returned is the first in the order `s = 1, 2, …`, `k = 0, 1, −1, 2, −2, …`.
pub fn resonance_witness(
    alpha: &Irrational,
    theta: &Theta,
    k_max: i64,
    l_max: i64,
    nu: &BigRational,
) -> Result<Option<ResonanceWitness>> {
    if k_max < 0 || l_max < 1 || !nu.is_positive() {
        return Err(Error::invalid("resonance search needs K >= 0, L >= 1 and ν > 0"));
    }
    let a_fix = dyadic_to_u64(&alpha.frac_enclosure_bits(&BigInt::one(), 72)?);
    let t_fix = theta.torus_u64(alpha)?;
    // ν in units of 2^-64, rounded up
    let nu_units = (nu * BigRational::from_integer(BigInt::one() << 64usize)).ceil().to_integer();
    let order: Vec<i64> = std::iter::once(0)
        .chain((1..=k_max).flat_map(|k| [k, -k]))
        .collect();
    for s in 1..=l_max {
        let found = order
            .par_iter()
            .map(|&k| -> Result<Option<NormInterval>> {
                // the fixed-point values are within 2^-63 of α and {θ}
                let t = (k as u64).wrapping_mul(a_fix).wrapping_sub((s as u64).wrapping_mul(t_fix)) as i64;
                let slop = BigInt::from(2 * (k.unsigned_abs() + s.unsigned_abs()) + 2);
                if BigInt::from(t.unsigned_abs()) - slop > nu_units {
                    return Ok(None);
                }
                let mut bits = 64;
                loop {
                    let v = theta.resonance_norm(alpha, k, s, bits)?;
                    match v.below(nu) {
                        Some(true) => return Ok(Some(v)),
                        Some(false) => return Ok(None),
                        None => {}
                    }
                    bits += 32;
                    if bits > MAX_REFINE_BITS {
                        return Err(Error::exhausted(format!("cannot decide ‖{k}α − {s}θ‖ < {nu}")));
                    }
                }
            })
            .collect::<Result<Vec<_>>>()?;
        if let Some((k, norm)) = order.iter().zip(found).find_map(|(&k, v)| v.map(|v| (k, v))) {
            return Ok(Some(ResonanceWitness { k, s, norm }));
        }
    }
    Ok(None)
}

/// The polynomial pair used for the Lemma at `(l, ε)`: the window polynomial
/// is built for `ε/2`, so it is `> 1` on `[−ε/2, ε/2]`, non-negative, and
/// below `(ε/2)³` wherever `‖x‖ >= ε`.
#[derive(Clone, Debug, Serialize)]
pub struct LemmaPolys {
    #[serde(with = "crate::serde_rational")]
    pub eps: BigRational,
    pub window: PhiEps,
    pub varphi: VarphiL,
}

impl LemmaPolys {
    pub fn build(l: u32, eps: &BigRational) -> Result<Self> {
        check_eps(l, eps)?;
        Ok(LemmaPolys {
            eps: eps.clone(),
            window: build_phi_eps(&(eps / BigRational::from_integer(2.into())))?,
            varphi: build_varphi_l(l)?,
        })
    }

    /// `K(ε)`.
    pub fn k(&self) -> usize {
        self.window.k
    }

    /// `L(l)`.
    pub fn l_degree(&self) -> usize {
        self.varphi.degree
    }

    pub fn resonance_bound(&self, nu: f64) -> f64 {
        resonance_bound(&self.window.poly, &self.varphi.poly, nu)
    }
}

fn check_eps(l: u32, eps: &BigRational) -> Result<()> {
    let cap = BigRational::new(BigInt::one(), BigInt::from(2u64 * l as u64 * l as u64));
    if !eps.is_positive() || eps > &cap {
        return Err(Error::Precondition(format!("ε = {eps} must lie in (0, 1/(2l²)] for l = {l}")));
    }
    Ok(())
}

/// `N′(l, ε, ν, N)`.
///
/// With `G` the largest return gap of `‖·α‖ < ε/2`, every `G` consecutive
/// integers meet that Bohr set, so `[N, N + Gt)` holds at least `t` of its
/// elements. For θ in `𝒜(N, N + Gt, I, ε, α)` those terms of `S_{N+Gt}ψ(0,0)`
/// exceed 1, the other terms past `N` exceed `−l²(ε/2)³` and the first `N`
/// exceed `−l²·sup φ`. `N′ = N + G·max(t_a, t_b)` with `t_a` the least `t`
/// with `t > ε²(N + Gt)` and `t_b` the least with
/// `t − l²(ε/2)³·Gt − l²·sup φ·N > B(ν)`. A start of 0 is raised to 1: the
/// term `m = 0` always meets the window at `{0·θ} ∈ I`, so it is counted
/// with the first `N` and `𝒜` is scanned from `m = 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NPrime {
    #[serde(with = "crate::serde_rational::bigint")]
    pub value: BigInt,
    #[serde(with = "crate::serde_rational::bigint")]
    pub start: BigInt,
    pub l: u32,
    #[serde(with = "crate::serde_rational")]
    pub eps: BigRational,
    pub max_gap: i64,
    /// Guaranteed number of elements of `‖·α‖ < ε/2` in `[N, N′)`.
    #[serde(with = "crate::serde_rational::bigint")]
    pub count_lower: BigInt,
    /// Guaranteed lower bound of `S_{N′}ψ(0,0)` for θ in `𝒜`.
    #[serde(with = "crate::serde_rational")]
    pub sum_lower: BigRational,
    pub b: f64,
    /// Bound used for `sup φ`.
    pub phi_sup: f64,
    pub k: usize,
    pub l_degree: usize,
    #[serde(with = "crate::serde_rational::bigint")]
    pub t_count: BigInt,
    #[serde(with = "crate::serde_rational::bigint")]
    pub t_bound: BigInt,
}

impl NPrime {
    /// Both defining inequalities, re-checked in exact arithmetic.
    pub fn holds(&self) -> bool {
        let e2 = &self.eps * &self.eps;
        let np = BigRational::from_integer(self.value.clone());
        let Some(b) = BigRational::from_f64(self.b) else {
            return false;
        };
        let sum = sum_lower(self, &self.count_lower);
        BigRational::from_integer(self.count_lower.clone()) > e2 * np && sum == self.sum_lower && sum > b
    }
}

fn decay_term(l: u32, eps: &BigRational) -> BigRational {
    let h = eps / BigRational::from_integer(2.into());
    BigRational::from_integer(BigInt::from(l) * l) * &h * &h * &h
}

fn sum_lower(np: &NPrime, count: &BigInt) -> BigRational {
    let ld = decay_term(np.l, &np.eps);
    let l2 = BigRational::from_integer(BigInt::from(np.l) * np.l);
    let sup = BigRational::from_f64(np.phi_sup).unwrap_or_else(BigRational::zero);
    BigRational::from_integer(count.clone())
        - ld * BigRational::from_integer(&np.value - &np.start)
        - l2 * sup * BigRational::from_integer(np.start.clone())
}

/// Builds the Lemma polynomials and evaluates [`effective_nprime_with`].
pub fn effective_nprime(alpha: &Irrational, l: u32, eps: &BigRational, nu: &BigRational, n: &BigInt) -> Result<NPrime> {
    let polys = LemmaPolys::build(l, eps)?;
    effective_nprime_with(alpha, &polys, nu, n)
}

pub fn effective_nprime_with(alpha: &Irrational, polys: &LemmaPolys, nu: &BigRational, n: &BigInt) -> Result<NPrime> {
    let (l, eps) = (polys.varphi.l, &polys.eps);
    check_eps(l, eps)?;
    if !nu.is_positive() {
        return Err(Error::Precondition("ν must be positive".into()));
    }
    if n.is_negative() {
        return Err(Error::invalid("start index must be non-negative"));
    }
    // m = 0 is always in the Bohr set and {0·θ} = 0 lies in [0, 1/l]
    let n_eff = n.max(&BigInt::one()).clone();
    let n = &n_eff;
    let nu_f = nu.to_f64().filter(|v| *v > 0.0).ok_or_else(|| Error::invalid("ν underflows"))?;
    // rounding ν to f64 may shrink it; the bound is inflated instead
    let b = polys.resonance_bound(nu_f) * (1.0 + 1e-9);
    let phi_sup = polys.window.poly.abs_sum();
    let half = eps / BigRational::from_integer(2.into());
    let g = alpha.return_gaps(&half)?.max_gap();
    let gb = BigInt::from(g);
    let gr = BigRational::from_integer(gb.clone());
    let e2 = eps * eps;
    let one = BigRational::one();
    let ld = decay_term(l, eps);
    if &gr * &e2 >= one || &gr * &ld >= one {
        return Err(Error::Precondition(format!("return gap {g} is too large for ε = {eps}")));
    }
    let nr = BigRational::from_integer(n.clone());
    let t_count = (&e2 * &nr / (&one - &gr * &e2)).floor().to_integer() + BigInt::one();
    let b_r = BigRational::from_f64(b).ok_or_else(|| Error::Internal("non-finite resonance bound".into()))?;
    let sup_r = BigRational::from_f64(phi_sup).ok_or_else(|| Error::Internal("non-finite sup bound".into()))?;
    let l2 = BigRational::from_integer(BigInt::from(l) * l);
    let need = b_r + l2 * sup_r * &nr;
    let t_bound = (need / (&one - &gr * &ld)).floor().to_integer() + BigInt::one();
    let t = t_count.clone().max(t_bound.clone());
    let value = n + &gb * &t;
    let mut out = NPrime {
        count_lower: (&value - n).div_floor(&gb),
        value,
        start: n.clone(),
        l,
        eps: eps.clone(),
        max_gap: g,
        sum_lower: BigRational::zero(),
        b,
        phi_sup,
        k: polys.k(),
        l_degree: polys.l_degree(),
        t_count,
        t_bound,
    };
    out.sum_lower = sum_lower(&out, &out.count_lower);
    Ok(out)
}
