use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::construct::ConstructionState;
use super::sequence::RigiditySequence;
use crate::cf::{NormInterval, MAX_REFINE_BITS};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CheckKind {
    /// `μ_p^n < 2^-j` on the window `[N_j, N_{j+1}]`.
    P1,
    /// `‖(k_{l·2^{p0}+r} − k_r)α‖ < η_{p0}`.
    P2,
    /// `μ_p^n < 2^-(p+1)` for `n >= N_p`.
    P3,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckMethod {
    Direct,
    /// `μ_p^n <= max|k_i|·b_n` with `b` non-increasing, covering every later index.
    TailLaw,
}

/// One certified strict inequality `value < bound`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Check {
    pub kind: CheckKind,
    pub method: CheckMethod,
    /// `[j, n]` for P1, `[p0, idx, r]` (1-based atoms) for P2, `[n]` for P3.
    pub indices: Vec<usize>,
    #[serde(with = "crate::serde_rational")]
    pub bound: BigRational,
    pub value_interval: NormInterval,
    #[serde(with = "crate::serde_rational")]
    pub margin: BigRational,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EtaEntry {
    pub p0: usize,
    pub value: NormInterval,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CertificateReport {
    pub level: usize,
    #[serde(rename = "N")]
    pub checkpoints: Vec<usize>,
    pub eta: Vec<EtaEntry>,
    pub checks: Vec<Check>,
}

impl CertificateReport {
    pub fn count(&self, kind: CheckKind) -> usize {
        self.checks.iter().filter(|c| c.kind == kind).count()
    }

    /// Smallest margin over all checks, if any.
    pub fn min_margin(&self) -> Option<&BigRational> {
        self.checks.iter().map(|c| &c.margin).min()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VerifyOptions {
    /// Largest `p0` for which separation is checked; `None` checks all.
    pub p0_max: Option<usize>,
    /// Indices past `N_p` checked directly before the tail law takes over.
    pub tail_window: usize,
    /// Initial per-atom resolution `2^-bits`.
    pub start_bits: u32,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            p0_max: None,
            tail_window: 32,
            start_bits: 64,
        }
    }
}

pub(crate) fn pow2_inv(e: usize) -> BigRational {
    BigRational::new(BigInt::one(), BigInt::one() << e)
}

fn check(kind: CheckKind, method: CheckMethod, indices: Vec<usize>, bound: BigRational, v: NormInterval) -> Check {
    Check {
        kind,
        method,
        indices,
        margin: &bound - &v.upper,
        bound,
        value_interval: v,
    }
}

fn violated(kind: CheckKind, indices: &[usize], bound: &BigRational, v: &NormInterval) -> Error {
    Error::VerificationFailed(format!(
        "{kind:?} at {indices:?}: value {v} is not below {:.6e}",
        num_traits::ToPrimitive::to_f64(bound).unwrap_or(0.0)
    ))
}

/// Certifies the P1, P2 and P3 inequalities for the state's measure.
pub fn verify_properties(
    state: &ConstructionState,
    seq: &RigiditySequence,
    opts: &VerifyOptions,
) -> Result<CertificateReport> {
    let alpha = seq.alpha();
    let mu = &state.measure;
    let p = mu.level;
    let ns = &state.checkpoints;
    if ns.len() != p + 1 || ns[0] != 0 || ns.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Precondition(format!(
            "checkpoints {ns:?} do not fit level {p}"
        )));
    }
    let n_p = ns[p];
    let direct_end = match seq.len() {
        Some(len) if len <= n_p => {
            return Err(Error::SequenceTooShort(format!("N_{p} = {n_p} beyond {len} terms")))
        }
        Some(len) => len,
        None => n_p + opts.tail_window + 1,
    };

    let values: Vec<NormInterval> = (0..direct_end)
        .into_par_iter()
        .map(|n| mu.mu_bits(alpha, &seq.term(n)?, opts.start_bits))
        .collect::<Result<_>>()?;
    let settle = |n: usize, bound: &BigRational| -> Result<(bool, NormInterval)> {
        if let Some(b) = values[n].below(bound) {
            return Ok((b, values[n].clone()));
        }
        mu.mu_below(alpha, &seq.term(n)?, bound, opts.start_bits + 32)
    };

    let mut checks = Vec::new();

    for j in 0..p {
        let bound = pow2_inv(j);
        for n in ns[j]..=ns[j + 1] {
            let (ok, v) = settle(n, &bound)?;
            if !ok {
                return Err(violated(CheckKind::P1, &[j, n], &bound, &v));
            }
            checks.push(check(CheckKind::P1, CheckMethod::Direct, vec![j, n], bound.clone(), v));
        }
    }

    let p0_top = opts.p0_max.map_or(p, |m| m.min(p));
    let mut etas = Vec::new();
    let mut bits = opts.start_bits;
    for p0 in 1..=p0_top {
        let tol = pow2_inv(bits as usize);
        let mut eta = mu.eta(alpha, p0, &tol)?.expect("p0 >= 1");
        let block = 1usize << p0;
        let idxs: Vec<usize> = ((block + 1)..=(1 << p)).collect();
        let mut dists: Vec<NormInterval> = idxs
            .par_iter()
            .map(|&idx| {
                let r = (idx - 1) % block + 1;
                let d = &mu.multipliers[idx - 1] - &mu.multipliers[r - 1];
                alpha.circle_norm(&d, &tol)
            })
            .collect::<Result<_>>()?;
        for (i, &idx) in idxs.iter().enumerate() {
            let r = (idx - 1) % block + 1;
            loop {
                if dists[i].upper < eta.lower {
                    break;
                }
                if dists[i].lower >= eta.upper {
                    return Err(violated(CheckKind::P2, &[p0, idx, r], &eta.upper, &dists[i]));
                }
                bits += 32;
                if bits > MAX_REFINE_BITS {
                    return Err(Error::exhausted(format!("cannot settle separation at atom {idx}")));
                }
                let tol = pow2_inv(bits as usize);
                eta = mu.eta(alpha, p0, &tol)?.expect("p0 >= 1");
                let d = &mu.multipliers[idx - 1] - &mu.multipliers[r - 1];
                dists[i] = alpha.circle_norm(&d, &tol)?;
            }
            checks.push(check(
                CheckKind::P2,
                CheckMethod::Direct,
                vec![p0, idx, r],
                eta.lower.clone(),
                dists[i].clone(),
            ));
        }
        etas.push(EtaEntry { p0, value: eta });
    }

    let bound = pow2_inv(p + 1);
    for n in n_p..direct_end {
        let (ok, v) = settle(n, &bound)?;
        if !ok {
            return Err(violated(CheckKind::P3, &[n], &bound, &v));
        }
        checks.push(check(CheckKind::P3, CheckMethod::Direct, vec![n], bound.clone(), v));
    }
    if seq.has_tail_law() {
        let v = BigRational::from_integer(mu.max_abs()) * seq.envelope(direct_end)?;
        let v = NormInterval::exact(v);
        if v.upper >= bound {
            return Err(violated(CheckKind::P3, &[direct_end], &bound, &v));
        }
        checks.push(check(CheckKind::P3, CheckMethod::TailLaw, vec![direct_end], bound, v));
    }

    debug_assert!(checks.iter().all(|c| c.margin > BigRational::zero()));
    Ok(CertificateReport {
        level: p,
        checkpoints: ns.clone(),
        eta: etas,
        checks,
    })
}
