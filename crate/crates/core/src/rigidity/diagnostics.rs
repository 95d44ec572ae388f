use std::f64::consts::PI;
use std::fmt::Write as _;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::construct::ConstructionState;
use super::measure::AtomicMeasure;
use super::sequence::RigiditySequence;
use super::verify::pow2_inv;
use crate::cf::{Irrational, NormInterval, MAX_REFINE_BITS};
use crate::error::{Error, Result};

/// One sampled `(p, n)` pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticRow {
    pub p: usize,
    pub n: usize,
    #[serde(with = "crate::serde_rational::bigint")]
    pub m_n: BigInt,
    pub mu: NormInterval,
    /// Range of `|1 − μ̂_p(m_n)|`.
    pub fourier_dist: (f64, f64),
    /// Slack of the float enclosure of `1 − μ̂_p(m_n)`.
    pub fourier_slack: f64,
}

impl DiagnosticRow {
    /// `|1 − μ̂| <= 2π μ + slack`, read off the enclosures.
    pub fn fourier_bound_holds(&self) -> bool {
        let two_pi_mu = 2.0 * PI * self.mu.upper.to_f64().unwrap_or(f64::INFINITY);
        self.fourier_dist.1 <= two_pi_mu * (1.0 + 4.0 * f64::EPSILON) + self.fourier_slack
    }
}

/// Mass of the open arc of radius `η_{p0}` around `k_r α` under `μ_p`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MassRow {
    pub p: usize,
    pub p0: usize,
    pub r: usize,
    pub atoms_inside: usize,
    #[serde(with = "crate::serde_rational")]
    pub mass: BigRational,
}

impl MassRow {
    pub fn is_exact(&self) -> bool {
        self.mass == pow2_inv(self.p0)
    }
}

/// Pairwise disjointness of the `2^{p0}` arcs of radius `η_{p0}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DisjointRow {
    pub p0: usize,
    pub eta: NormInterval,
    /// Certified lower bound on the smallest centre distance.
    #[serde(with = "crate::serde_rational")]
    pub min_separation: BigRational,
    pub disjoint: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    #[serde(rename = "N")]
    pub checkpoints: Vec<usize>,
    pub rows: Vec<DiagnosticRow>,
    pub masses: Vec<MassRow>,
    pub disjointness: Vec<DisjointRow>,
}

impl DiagnosticsReport {
    pub const CSV_HEADER: &'static str = "p,n,m_n,mu_lo,mu_hi,fourier_dist_lo,fourier_dist_hi";

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{:e},{:e},{:e},{:e}",
                r.p,
                r.n,
                r.m_n,
                r.mu.lower_f64(),
                r.mu.upper_f64(),
                r.fourier_dist.0,
                r.fourier_dist.1
            );
        }
        out
    }

    /// Every sampled row of level `p` inside `[N_j, N_{j+1}]` satisfies `μ < 2^-j`.
    pub fn staircase_holds(&self) -> bool {
        self.rows.iter().all(|r| {
            (0..r.p).all(|j| {
                let inside = self.checkpoints[j] <= r.n && r.n <= self.checkpoints[j + 1];
                !inside || r.mu.upper < pow2_inv(j)
            })
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DiagnosticsOptions {
    /// Indices past `N_p` sampled for level `p`.
    pub tail_window: usize,
    /// Largest `p0` for the mass and disjointness tables.
    pub p0_max: usize,
    pub bits: u32,
}

impl Default for DiagnosticsOptions {
    fn default() -> Self {
        DiagnosticsOptions {
            tail_window: 32,
            p0_max: 3,
            bits: 64,
        }
    }
}

/// Diagnostics over successive levels of one run: `μ_p^n` and `|1 − μ̂_p(m_n)|`
/// for `n <= N_p + tail_window`, arc masses and arc disjointness.
pub fn limit_diagnostics(
    states: &[ConstructionState],
    seq: &RigiditySequence,
    opts: &DiagnosticsOptions,
) -> Result<DiagnosticsReport> {
    let alpha = seq.alpha();
    let Some(last) = states.last() else {
        return Ok(DiagnosticsReport {
            checkpoints: Vec::new(),
            rows: Vec::new(),
            masses: Vec::new(),
            disjointness: Vec::new(),
        });
    };
    for w in states.windows(2) {
        if w[1].level() != w[0].level() + 1
            || w[1].measure.multipliers[..w[0].measure.atom_count()] != w[0].measure.multipliers[..]
        {
            return Err(Error::Precondition("states are not successive levels of one run".into()));
        }
    }

    let mut rows = Vec::new();
    for st in states {
        let p = st.level();
        let end = st.checkpoints[p] + opts.tail_window;
        let end = seq.len().map_or(end, |len| end.min(len - 1));
        let mut level_rows = (0..=end)
            .into_par_iter()
            .map(|n| {
                let m = seq.term(n)?;
                let mu = st.measure.mu_bits(alpha, &m, opts.bits)?;
                let d = st.measure.fourier_defect(alpha, &m)?;
                Ok(DiagnosticRow {
                    p,
                    n,
                    fourier_dist: d.distance_to(Complex64::new(0.0, 0.0)),
                    fourier_slack: d.radius,
                    m_n: m,
                    mu,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        rows.append(&mut level_rows);
    }

    let mut masses = Vec::new();
    let mut disjointness = Vec::new();
    let top = last.measure.clone();
    for p0 in 1..=opts.p0_max.min(top.level) {
        let (eta, min_sep) = separation(alpha, &top, p0, opts.bits)?;
        let two_eta = &eta.upper * BigRational::from_integer(2.into());
        disjointness.push(DisjointRow {
            p0,
            disjoint: min_sep > two_eta,
            eta: eta.clone(),
            min_separation: min_sep,
        });
        for st in states.iter().filter(|s| s.level() >= p0) {
            for r in 1..=(1usize << p0) {
                let inside = count_inside(alpha, &st.measure, &st.measure.multipliers[r - 1], &eta, opts.bits)?;
                masses.push(MassRow {
                    p: st.level(),
                    p0,
                    r,
                    atoms_inside: inside,
                    mass: BigRational::new(inside.into(), BigInt::from(st.measure.atom_count())),
                });
            }
        }
    }

    Ok(DiagnosticsReport {
        checkpoints: last.checkpoints.clone(),
        rows,
        masses,
        disjointness,
    })
}

/// `η_{p0}` and a certified lower bound on the smallest pairwise distance,
/// refined until `η` is narrow against that distance.
fn separation(alpha: &Irrational, mu: &AtomicMeasure, p0: usize, bits: u32) -> Result<(NormInterval, BigRational)> {
    let mut bits = bits;
    loop {
        let eta = mu.eta(alpha, p0, &pow2_inv(bits as usize))?.expect("p0 >= 1");
        let min_sep = &eta.lower * BigRational::from_integer(4.into());
        if eta.width() * BigRational::from_integer(64.into()) < eta.lower || bits >= MAX_REFINE_BITS {
            return Ok((eta, min_sep));
        }
        bits += 64;
    }
}

/// Number of atoms of `mu` in the open arc of radius `eta` around `kα`,
/// every membership decided with certified enclosures.
fn count_inside(alpha: &Irrational, mu: &AtomicMeasure, k: &BigInt, eta: &NormInterval, bits: u32) -> Result<usize> {
    let decided = mu
        .multipliers
        .par_iter()
        .map(|ki| {
            let d = ki - k;
            if d.is_zero() {
                return Ok(true);
            }
            let mut b = bits;
            loop {
                let v = alpha.circle_norm_bits(&d, b)?;
                let scale = BigInt::from(1) << b as usize;
                let v = NormInterval {
                    lower: BigRational::new(v.0, scale.clone()),
                    upper: BigRational::new(v.1, scale),
                };
                if v.upper < eta.lower {
                    return Ok(true);
                }
                if v.lower >= eta.upper {
                    return Ok(false);
                }
                b += 64;
                if b > MAX_REFINE_BITS {
                    return Err(Error::exhausted("cannot place an atom relative to an arc"));
                }
            }
        })
        .collect::<Result<Vec<bool>>>()?;
    Ok(decided.into_iter().filter(|&x| x).count())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rigidity::{build, ConstructionOptions};

    #[test]
    fn level_zero_rows_vanish() {
        let g = Irrational::golden();
        let seq = RigiditySequence::denominators(&g, 0).unwrap();
        let states = build(&seq, 0, &ConstructionOptions::default()).unwrap();
        let rep = limit_diagnostics(&states, &seq, &DiagnosticsOptions::default()).unwrap();
        assert!(!rep.rows.is_empty());
        assert!(rep.rows.iter().all(|r| r.mu == NormInterval::zero() && r.fourier_dist == (0.0, 0.0)));
        assert!(rep.masses.is_empty());
    }

    #[test]
    fn masses_and_staircase_through_level_four() {
        let g = Irrational::golden();
        let seq = RigiditySequence::denominators(&g, 0).unwrap();
        let states = build(&seq, 4, &ConstructionOptions::default()).unwrap();
        let rep = limit_diagnostics(&states, &seq, &DiagnosticsOptions::default()).unwrap();
        assert!(rep.masses.iter().all(MassRow::is_exact));
        assert!(rep.disjointness.iter().all(|d| d.disjoint));
        assert!(rep.staircase_holds());
        assert!(rep.rows.iter().all(DiagnosticRow::fourier_bound_holds));
        let csv = rep.to_csv();
        assert!(csv.starts_with(DiagnosticsReport::CSV_HEADER));
        assert_eq!(csv.lines().count(), rep.rows.len() + 1);
    }
}
