use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;

use super::schedule::ExceptionalSequence;
use super::theta::{dyadic_to_u64, Theta};
use crate::cf::{CircleEnclosure, Irrational, NormInterval};
use crate::error::{Error, Result};
use crate::rigidity::pow2_inv;

/// Enclosures of `{m·θ}` for each `m`, of width at most `2^(2-bits)`.
pub fn orbit_points(theta: &Theta, alpha: &Irrational, elements: &[i64], bits: u32) -> Result<Vec<CircleEnclosure>> {
    elements
        .par_iter()
        .map(|&m| theta.enclose_multiple(alpha, &BigInt::from(m), bits))
        .collect()
}

/// Largest gap between circularly consecutive points of `[0, 1)`; 1 when
/// there are fewer than two distinct points.
pub fn max_gap(points: &[f64]) -> f64 {
    let mut v: Vec<f64> = points.iter().map(|x| x.rem_euclid(1.0)).collect();
    v.sort_by(f64::total_cmp);
    match (v.first(), v.last()) {
        (Some(&first), Some(&last)) => {
            let wrap = 1.0 - last + first;
            v.windows(2).map(|w| w[1] - w[0]).fold(wrap, f64::max)
        }
        _ => 1.0,
    }
}

/// [`max_gap`] for points `t/2^64`, computed exactly.
pub fn max_gap_fixed(points: &[u64]) -> u128 {
    let mut v = points.to_vec();
    v.sort_unstable();
    match (v.first(), v.last()) {
        (Some(&first), Some(&last)) => {
            let wrap = (1u128 << 64) - last as u128 + first as u128;
            v.windows(2).map(|w| (w[1] - w[0]) as u128).fold(wrap, u128::max)
        }
        _ => 1u128 << 64,
    }
}

fn fixed_to_f64(g: u128) -> f64 {
    g as f64 / 18446744073709551616.0
}

#[derive(Clone, Debug, Serialize)]
pub struct ClusterReport {
    pub theta: String,
    /// `1/lcm(b, d)`.
    #[serde(with = "crate::serde_rational")]
    pub grid_step: BigRational,
    /// `1/(bd)`, which refines the grid above.
    #[serde(with = "crate::serde_rational")]
    pub coarse_step: BigRational,
    /// `|a|/b`.
    #[serde(with = "crate::serde_rational")]
    pub scale: BigRational,
    pub checked: usize,
    /// Elements `m` of a block with window ε whose `{mθ}` is not certified
    /// within `(|a|/b)·ε` of the grid.
    pub outside: Vec<i64>,
    /// Elements whose grid distance misses `(|a|/b)·‖mα‖`.
    pub inconsistent: Vec<i64>,
    /// Largest gap of the whole orbit, against `1/lcm(b, d) − 2(|a|/b)·max ε`.
    pub max_gap: f64,
    pub gap_bound: f64,
    #[serde(with = "crate::serde_rational")]
    pub eps_star: BigRational,
    /// Members with `‖mα‖ < ε*`.
    pub sub_orbit_len: usize,
    pub sub_outside: Vec<i64>,
    pub sub_max_gap: f64,
    /// `1/lcm(b, d) − 2(|a|/b)·ε*`.
    pub sub_gap_bound: f64,
    /// `1/(bd) − 2(|a|/b)·ε*`.
    pub sub_coarse_gap_bound: f64,
    pub passed: bool,
}

/// Certified distance `[lower, upper]` from a circle enclosure to `step·Z`.
fn grid_distance(enc: &CircleEnclosure, step: &BigRational) -> (BigRational, BigRational) {
    let (lo, hi) = (enc.lower(), enc.upper());
    let two = BigRational::from_integer(2.into());
    let half = BigRational::new(1.into(), 2.into());
    let j = ((&lo + &hi) / (&two * step) + half).floor();
    let p = j * step;
    let (dl, dh) = ((&lo - &p).abs(), (&hi - &p).abs());
    let upper = dl.clone().max(dh.clone());
    let lower = if lo <= p && p <= hi { BigRational::zero() } else { dl.min(dh) };
    (lower, upper)
}

struct ElementCheck {
    m: i64,
    inside: bool,
    consistent: bool,
    sub: bool,
    sub_inside: bool,
    point: u64,
}

/// For `θ = (a/b)α + c/d`, `{mθ}` lies at distance exactly `(|a|/b)·‖mα‖`
/// from the grid `(1/lcm(b, d))·Z` while that is below half a step. Checks
/// it for every element (against its block's ε, and for consistency with
/// the `‖mα‖` enclosure), then for the sub-orbit with `‖mα‖ < ε*`, and
/// reports the largest gaps.
pub fn grid_cluster_check(
    theta: &Theta,
    alpha: &Irrational,
    seq: &ExceptionalSequence,
    eps_star: &BigRational,
) -> Result<ClusterReport> {
    let combo = theta
        .combo()
        .ok_or_else(|| Error::invalid(format!("θ = {} is not a rational combination of α", theta.label)))?;
    if !eps_star.is_positive() {
        return Err(Error::invalid("ε* must be positive"));
    }
    let step = combo.grid_step();
    let coarse_step = BigRational::new(1.into(), &combo.b * &combo.d);
    let scale = BigRational::new(combo.a.abs(), combo.b.clone());
    let tol = pow2_inv(96);

    let all: Vec<(i64, &NormInterval, &BigRational)> = seq
        .blocks
        .iter()
        .flat_map(|b| b.elements.iter().zip(&b.certificates).map(move |(&m, c)| (m, c, &b.eps)))
        .collect();
    let checks: Vec<ElementCheck> = all
        .par_iter()
        .map(|&(m, cert, eps)| -> Result<ElementCheck> {
            let mb = BigInt::from(m);
            // m·c/d lies on the grid, so only (am/b)·α matters
            let (dlo, dhi) = if combo.a.is_zero() {
                (BigRational::zero(), BigRational::zero())
            } else {
                let coef = BigRational::new(&combo.a * &mb, combo.b.clone());
                grid_distance(&alpha.affine_enclosure_bits(&coef, &BigRational::zero(), 128)?, &step)
            };
            let inside = if combo.a.is_zero() { dhi.is_zero() } else { dhi < &scale * eps };
            // the distance equals (|a|/b)·‖mα‖ only below half a step
            let folds = &scale * &cert.upper * BigRational::from_integer(2.into()) >= step;
            let consistent = dlo <= &scale * &cert.upper && (folds || dhi >= &scale * &cert.lower);
            let sub = match cert.below(eps_star) {
                Some(b) => b,
                None => alpha.norm_below(&mb, eps_star, &tol)?.0,
            };
            let sub_inside = !sub || dhi <= &scale * eps_star;
            let point = dyadic_to_u64(&theta.enclose_multiple(alpha, &mb, 96)?);
            Ok(ElementCheck {
                m,
                inside,
                consistent,
                sub,
                sub_inside,
                point,
            })
        })
        .collect::<Result<_>>()?;

    let pick = |f: fn(&ElementCheck) -> bool| -> Vec<i64> { checks.iter().filter(|c| f(c)).map(|c| c.m).collect() };
    let outside = pick(|c| !c.inside);
    let inconsistent = pick(|c| !c.consistent);
    let sub_outside = pick(|c| !c.sub_inside);
    let all_pts: Vec<u64> = checks.iter().map(|c| c.point).collect();
    let sub_pts: Vec<u64> = checks.iter().filter(|c| c.sub).map(|c| c.point).collect();

    let max_eps = seq.blocks.iter().map(|b| b.eps.clone()).max().unwrap_or_else(BigRational::zero);
    let step_f = step.to_f64().unwrap_or(0.0);
    let r_all = 2.0 * (&scale * &max_eps).to_f64().unwrap_or(f64::INFINITY);
    let r_sub = 2.0 * (&scale * eps_star).to_f64().unwrap_or(f64::INFINITY);
    let max_gap = fixed_to_f64(max_gap_fixed(&all_pts));
    let sub_max_gap = fixed_to_f64(max_gap_fixed(&sub_pts));
    let gap_bound = step_f - r_all;
    let sub_gap_bound = step_f - r_sub;
    // each fixed-point point is within a few units of 2^-64 of the truth
    let slack = 1e-15;
    let passed = outside.is_empty()
        && inconsistent.is_empty()
        && sub_outside.is_empty()
        && max_gap + slack >= gap_bound
        && sub_max_gap + slack >= sub_gap_bound;
    Ok(ClusterReport {
        theta: theta.label.clone(),
        grid_step: step,
        coarse_step: coarse_step.clone(),
        scale,
        checked: checks.len(),
        outside,
        inconsistent,
        max_gap,
        gap_bound,
        eps_star: eps_star.clone(),
        sub_orbit_len: sub_pts.len(),
        sub_outside,
        sub_max_gap,
        sub_gap_bound,
        sub_coarse_gap_bound: coarse_step.to_f64().unwrap_or(0.0) - r_sub,
        passed,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DensityRow {
    pub theta_label: String,
    pub prefix_len: usize,
    pub max_gap: f64,
}

/// `10, 20, 50, 100, …` below `len`, then `len`.
pub fn default_prefixes(len: usize) -> Vec<usize> {
    let mut out: Vec<usize> = (1..)
        .flat_map(|e: u32| [1usize, 2, 5].map(|c| c * 10usize.pow(e)))
        .take_while(|&p| p < len)
        .collect();
    if len > 0 {
        out.push(len);
    }
    out
}

/// Largest circular gap of `{m·θ : m in elements[..p]}` for each prefix
/// length `p`. Points are `m·⌊{θ}·2^64⌋ mod 2^64`, so each is within
/// `|m|·2^-64` of the truth.
pub fn density_scan(thetas: &[Theta], alpha: &Irrational, elements: &[i64], prefixes: &[usize]) -> Result<Vec<DensityRow>> {
    if let Some(&p) = prefixes.iter().find(|&&p| p > elements.len()) {
        return Err(Error::invalid(format!("prefix {p} exceeds the {} elements", elements.len())));
    }
    let per_theta: Vec<Vec<DensityRow>> = thetas
        .par_iter()
        .map(|theta| -> Result<Vec<DensityRow>> {
            let t = theta.torus_u64(alpha)?;
            let pts: Vec<u64> = elements.iter().map(|&m| t.wrapping_mul(m as u64)).collect();
            Ok(prefixes
                .iter()
                .map(|&p| DensityRow {
                    theta_label: theta.label.clone(),
                    prefix_len: p,
                    max_gap: fixed_to_f64(max_gap_fixed(&pts[..p])),
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    Ok(per_theta.into_iter().flatten().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exceptional::{build_schedule, emit_sequence, ScheduleOptions};

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn gaps() {
        assert_eq!(max_gap(&[]), 1.0);
        assert_eq!(max_gap(&[0.3]), 1.0);
        assert!((max_gap(&[0.0, 0.25, 0.5]) - 0.5).abs() < 1e-15);
        assert!((max_gap(&[0.9, 0.1]) - 0.8).abs() < 1e-15);
        assert_eq!(max_gap_fixed(&[0, 0, 0]), 1u128 << 64);
        assert_eq!(max_gap_fixed(&[0, 1 << 63]), 1u128 << 63);
        assert_eq!(default_prefixes(300), vec![10, 20, 50, 100, 200, 300]);
        assert_eq!(default_prefixes(0), Vec::<usize>::new());
    }

    #[test]
    fn grid_distance_encloses() {
        let g = Irrational::golden();
        let enc = g.affine_enclosure_bits(&r(0, 1), &r(1, 4), 64).unwrap();
        let tiny = pow2_inv(60);
        let (lo, hi) = grid_distance(&enc, &r(1, 4));
        assert!(lo.is_zero() && hi < tiny);
        let (lo, hi) = grid_distance(&enc, &r(1, 2));
        assert!(lo <= r(1, 4) && r(1, 4) <= hi && hi - lo < tiny);
        let enc = g.affine_enclosure_bits(&r(1, 1), &r(0, 1), 64).unwrap();
        let (lo, hi) = grid_distance(&enc, &r(1, 1));
        let want = (5f64.sqrt() - 1.0) / 2.0;
        let want = want.min(1.0 - want);
        assert!(lo.to_f64().unwrap() <= want + 1e-15 && want - 1e-15 <= hi.to_f64().unwrap());
    }

    #[test]
    fn combos_cluster_and_free_angles_spread() {
        let g = Irrational::golden();
        let s = build_schedule(&g, 2, &ScheduleOptions { cap: 4000, ..Default::default() }).unwrap();
        let seq = emit_sequence(&s, &g, None).unwrap();
        let eps = r(1, 18);
        for t in ["a/2", "(a+1)/3", "2*a-1/4", "1/5"] {
            let rep = grid_cluster_check(&Theta::parse(t).unwrap(), &g, &seq, &eps).unwrap();
            assert!(rep.passed, "{t}: {rep:?}");
            assert!(rep.sub_orbit_len > 0);
            assert_eq!(rep.checked, seq.len());
            assert!(rep.sub_max_gap >= rep.sub_coarse_gap_bound);
        }
        assert!(grid_cluster_check(&Theta::parse("sqrt2-1").unwrap(), &g, &seq, &eps).is_err());

        let elems: Vec<i64> = seq.elements().map(|(m, _)| m).collect();
        let thetas = [Theta::parse("0").unwrap(), Theta::parse("sqrt2-1").unwrap()];
        let rows = density_scan(&thetas, &g, &elems, &default_prefixes(elems.len())).unwrap();
        let zero: Vec<f64> = rows.iter().filter(|r| r.theta_label == "0").map(|r| r.max_gap).collect();
        assert!(zero.iter().all(|&x| x == 1.0));
        let free: Vec<f64> = rows.iter().filter(|r| r.theta_label != "0").map(|r| r.max_gap).collect();
        assert!(free.windows(2).all(|w| w[1] <= w[0]));
        assert!(*free.last().unwrap() < 0.05);
    }
}
