use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::cf::{Irrational, NormInterval, MAX_REFINE_BITS};
use crate::error::{Error, Result};
use crate::rigidity::pow2_inv;
use crate::trig::{effective_nprime_with, LemmaPolys, NPrime};

/// Widest block `emit_sequence` enumerates without an explicit cap.
pub const ENUMERATION_BUDGET: u64 = 10_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// `N_{n+1} = N′(l_n, ε_n, ν_n, N_n)`.
    Faithful,
    /// `N_{n+1} = min(N′, N_n + cap)`; the Lemma's guarantee is void.
    Demo,
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Faithful => "faithful",
            Mode::Demo => "demo",
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "faithful" => Ok(Mode::Faithful),
            "demo" => Ok(Mode::Demo),
            _ => Err(Error::invalid(format!("unknown mode '{s}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScheduleOptions {
    pub mode: Mode,
    /// Largest block width in demo mode.
    pub cap: u64,
    /// `ν_n = (1/n)·min_{0<k<=c·K_{n+1}} ‖kα‖` with `c = n + 1` unless fixed here.
    pub nu_multiplier: Option<u64>,
}

impl Default for ScheduleOptions {
    fn default() -> Self {
        ScheduleOptions {
            mode: Mode::Demo,
            cap: 100_000,
            nu_multiplier: None,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ScheduleStage {
    pub n: u32,
    pub l: u32,
    #[serde(with = "crate::serde_rational")]
    pub eps: BigRational,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "L")]
    pub l_degree: usize,
    /// The value used, `n·ν_n` = lower end of the min-norm enclosure.
    #[serde(with = "crate::serde_rational")]
    pub nu: BigRational,
    /// Enclosure of the exact `ν_n`.
    pub nu_interval: NormInterval,
    #[serde(with = "crate::serde_rational::bigint")]
    pub nu_range: BigInt,
    #[serde(with = "crate::serde_rational::bigint")]
    pub nu_argmin: BigInt,
    /// `N_n`, start of the block.
    #[serde(rename = "N", with = "crate::serde_rational::bigint")]
    pub start: BigInt,
    /// `N_{n+1}`, end of the block.
    #[serde(rename = "N_next", with = "crate::serde_rational::bigint")]
    pub end: BigInt,
    pub nprime: NPrime,
    pub capped: bool,
    #[serde(skip)]
    pub polys: LemmaPolys,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExceptionalSchedule {
    pub alpha_spec: String,
    pub mode: Mode,
    pub cap: Option<u64>,
    /// `N_1 = N′(l_1, ε_1, ν_1, N_0)` with `N_0 = 0`.
    pub initial: NPrime,
    pub stages: Vec<ScheduleStage>,
    /// `K_{n_max+1}`, built only for `ν_{n_max}`.
    pub lookahead_k: usize,
}

fn stage_eps(n: u32) -> BigRational {
    BigRational::new(BigInt::one(), BigInt::from(2 * (n as u64 + 1).pow(2)))
}

/// `(1/n)·min_{0<k<=bound} ‖kα‖`, refined until the enclosure is narrow.
fn nu_for(alpha: &Irrational, n: u32, bound: &BigInt) -> Result<(BigInt, NormInterval)> {
    let mut bits = 64 + 2 * bound.bits() as usize;
    loop {
        let (k, iv) = alpha.min_norm_up_to(bound, &pow2_inv(bits))?;
        if iv.lower.is_positive() && iv.width() * BigRational::from_integer(1024.into()) < iv.lower {
            let nn = BigRational::from_integer(n.into());
            return Ok((
                k,
                NormInterval {
                    lower: iv.lower / &nn,
                    upper: iv.upper / nn,
                },
            ));
        }
        bits += 64;
        if bits > MAX_REFINE_BITS as usize {
            return Err(Error::exhausted("cannot enclose the minimal norm"));
        }
    }
}

/// Builds the stages `n = 1..=n_max` with `l_n = n + 1`, `ε_n = 1/(2(n+1)²)`.
pub fn build_schedule(alpha: &Irrational, n_max: u32, opts: &ScheduleOptions) -> Result<ExceptionalSchedule> {
    if n_max < 1 {
        return Err(Error::invalid("the schedule needs at least one stage"));
    }
    if opts.mode == Mode::Demo && opts.cap == 0 {
        return Err(Error::invalid("the demo cap must be positive"));
    }
    let polys: Vec<LemmaPolys> = (1..=n_max + 1)
        .map(|n| {
            log::info!("building polynomials for stage {n}");
            LemmaPolys::build(n + 1, &stage_eps(n))
        })
        .collect::<Result<_>>()?;

    let mut nus = Vec::new();
    for n in 1..=n_max {
        let mult = opts.nu_multiplier.unwrap_or(n as u64 + 1);
        let bound = (BigInt::from(mult) * polys[n as usize].k()).max(BigInt::one());
        let (arg, iv) = nu_for(alpha, n, &bound)?;
        nus.push((bound, arg, iv));
    }

    let cap = BigInt::from(opts.cap);
    let clamp = |np: &NPrime, from: &BigInt| -> (BigInt, bool) {
        match opts.mode {
            Mode::Faithful => (np.value.clone(), false),
            Mode::Demo => {
                let c = from + &cap;
                if np.value > c {
                    (c, true)
                } else {
                    (np.value.clone(), false)
                }
            }
        }
    };

    let initial = effective_nprime_with(alpha, &polys[0], &nus[0].2.lower, &BigInt::zero())?;
    let (mut start, _) = clamp(&initial, &BigInt::zero());
    let mut stages = Vec::new();
    for n in 1..=n_max {
        let i = (n - 1) as usize;
        let (bound, arg, iv) = nus[i].clone();
        let np = effective_nprime_with(alpha, &polys[i], &iv.lower, &start)?;
        let (end, capped) = clamp(&np, &start);
        let eps = stage_eps(n);
        if opts.mode == Mode::Demo {
            let (s, e) = (to_i64(&start)?, to_i64(&end)?);
            if alpha.bohr_first(&eps, s, e)?.is_none() {
                return Err(Error::EmptyBlock(format!("no element of ‖mα‖ < {eps} in [{start}, {end})")));
            }
        }
        log::info!("stage {n}: [{start}, {end}) K={} L={}", polys[i].k(), polys[i].l_degree());
        stages.push(ScheduleStage {
            n,
            l: n + 1,
            eps,
            k: polys[i].k(),
            l_degree: polys[i].l_degree(),
            nu: iv.lower.clone(),
            nu_interval: iv,
            nu_range: bound,
            nu_argmin: arg,
            start: start.clone(),
            end: end.clone(),
            nprime: np,
            capped,
            polys: polys[i].clone(),
        });
        start = end;
    }
    Ok(ExceptionalSchedule {
        alpha_spec: alpha.label().to_string(),
        mode: opts.mode,
        cap: (opts.mode == Mode::Demo).then_some(opts.cap),
        initial,
        stages,
        lookahead_k: polys[n_max as usize].k(),
    })
}

fn to_i64(v: &BigInt) -> Result<i64> {
    v.to_i64().ok_or_else(|| Error::BlockTooLarge(format!("{v} does not fit in 64 bits")))
}

impl ExceptionalSchedule {
    /// Re-derives every `N′` and checks `N_{n+1} >= N′` (faithful) and
    /// both defining inequalities of each `N′`.
    pub fn verify(&self, alpha: &Irrational) -> Result<bool> {
        let mut start = BigInt::zero();
        let first = effective_nprime_with(alpha, &self.stages[0].polys, &self.stages[0].nu, &start)?;
        if first != self.initial || !first.holds() {
            return Ok(false);
        }
        start = self.stages[0].start.clone();
        for st in &self.stages {
            let np = effective_nprime_with(alpha, &st.polys, &st.nu, &start)?;
            if np != st.nprime || !np.holds() || st.start != start {
                return Ok(false);
            }
            if self.mode == Mode::Faithful && st.end < np.value {
                return Ok(false);
            }
            start = st.end.clone();
        }
        Ok(true)
    }

    pub fn stage_summaries(&self) -> Value {
        Value::Array(
            self.stages
                .iter()
                .map(|s| {
                    json!({
                        "n": s.n,
                        "l": s.l,
                        "eps": s.eps.to_string(),
                        "K": s.k,
                        "L": s.l_degree,
                        "nu": s.nu.to_string(),
                        "N": s.start.to_string(),
                        "N_next": s.end.to_string(),
                        "N_prime": s.nprime.value.to_string(),
                        "capped": s.capped,
                    })
                })
                .collect(),
        )
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Block {
    pub n: u32,
    pub eps: BigRational,
    pub start: i64,
    pub end: i64,
    /// The block was cut at `start + block_cap`.
    pub truncated: bool,
    pub elements: Vec<i64>,
    /// `‖mα‖` enclosure for each element, all strictly below `eps`.
    pub certificates: Vec<NormInterval>,
}

#[derive(Clone, Debug)]
pub struct ExceptionalSequence {
    pub alpha_spec: String,
    pub mode: Mode,
    pub stages: Value,
    pub blocks: Vec<Block>,
}

impl ExceptionalSequence {
    pub fn elements(&self) -> impl Iterator<Item = (i64, &NormInterval)> {
        self.blocks
            .iter()
            .flat_map(|b| b.elements.iter().copied().zip(b.certificates.iter()))
    }

    pub fn len(&self) -> usize {
        self.blocks.iter().map(|b| b.elements.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `{alpha_spec, mode, stages, blocks, block_meta}` with integers as strings.
    pub fn to_json(&self) -> Value {
        json!({
            "alpha_spec": self.alpha_spec,
            "mode": self.mode.as_str(),
            "guarantee": match self.mode {
                Mode::Faithful => "N_{n+1} >= N'(l_n, eps_n, nu_n, N_n) for every stage",
                Mode::Demo => "none: blocks are capped, the Lemma does not apply",
            },
            "stages": self.stages,
            "blocks": self.blocks.iter().map(|b| b.elements.iter().map(|m| m.to_string()).collect::<Vec<_>>()).collect::<Vec<_>>(),
            "block_meta": self.blocks.iter().map(|b| json!({
                "n": b.n,
                "eps": b.eps.to_string(),
                "start": b.start.to_string(),
                "end": b.end.to_string(),
                "truncated": b.truncated,
                "count": b.elements.len(),
            })).collect::<Vec<_>>(),
        })
    }
}

/// Materializes `m ∈ [N_n, N_{n+1})` with `‖mα‖ < ε_n` for every stage.
/// Blocks wider than `block_cap` are cut there (and flagged); without a cap,
/// blocks wider than [`ENUMERATION_BUDGET`] are an error.
pub fn emit_sequence(
    schedule: &ExceptionalSchedule,
    alpha: &Irrational,
    block_cap: Option<u64>,
) -> Result<ExceptionalSequence> {
    let limit = BigInt::from(block_cap.unwrap_or(ENUMERATION_BUDGET));
    if block_cap.is_none() {
        if let Some(st) = schedule.stages.iter().find(|st| &st.end - &st.start > limit) {
            return Err(Error::BlockTooLarge(format!(
                "block {} spans {} integers, above the budget of {ENUMERATION_BUDGET}",
                st.n,
                &st.end - &st.start
            )));
        }
    }
    let mut blocks = Vec::new();
    for st in &schedule.stages {
        let truncated = &st.end - &st.start > limit;
        let start = to_i64(&st.start)?;
        let end = if truncated { start + to_i64(&limit)? } else { to_i64(&st.end)? };
        let elements = alpha.bohr_enumerate(&st.eps, start, end)?;
        let tol = pow2_inv(64);
        let certificates = elements
            .par_iter()
            .map(|&m| {
                let (below, iv) = alpha.norm_below(&BigInt::from(m), &st.eps, &tol)?;
                if below {
                    Ok(iv)
                } else {
                    Err(Error::Internal(format!("{m} left the Bohr set")))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        blocks.push(Block {
            n: st.n,
            eps: st.eps.clone(),
            start,
            end,
            truncated,
            elements,
            certificates,
        });
    }
    Ok(ExceptionalSequence {
        alpha_spec: schedule.alpha_spec.clone(),
        mode: schedule.mode,
        stages: schedule.stage_summaries(),
        blocks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn stage_parameters() {
        assert_eq!(stage_eps(1), r(1, 8));
        assert_eq!(stage_eps(2), r(1, 18));
        let g = Irrational::golden();
        let s = build_schedule(&g, 2, &ScheduleOptions { cap: 2000, ..Default::default() }).unwrap();
        assert_eq!((s.stages[0].l, s.stages[1].l), (2, 3));
        // ν_1 = ‖q*α‖ for the largest Fibonacci q* <= 2·K_2
        let bound = BigInt::from(2 * s.stages[1].k);
        assert_eq!(s.stages[0].nu_range, bound);
        let fib = [1u64, 2, 3, 5, 8, 13, 21, 34, 55, 89, 144, 233, 377, 610, 987, 1597, 2584];
        let q = fib.iter().rev().find(|&&q| BigInt::from(q) <= bound).unwrap();
        assert_eq!(s.stages[0].nu_argmin, BigInt::from(*q));
        let phi = (5f64.sqrt() - 1.0) / 2.0;
        let x = *q as f64 * phi;
        assert!((s.stages[0].nu.to_f64().unwrap() - (x - x.round()).abs()).abs() < 1e-12);
        assert!(s.stages[1].nu_interval.lower < s.stages[1].nu_interval.upper);
        assert!(s.verify(&g).unwrap());
        assert!(s.stages.iter().all(|st| st.end > st.start));
    }

    #[test]
    fn demo_sequence_is_increasing_and_certified() {
        let g = Irrational::golden();
        let s = build_schedule(&g, 2, &ScheduleOptions { cap: 3000, ..Default::default() }).unwrap();
        let seq = emit_sequence(&s, &g, None).unwrap();
        let all: Vec<i64> = seq.elements().map(|(m, _)| m).collect();
        assert!(!all.is_empty() && all.windows(2).all(|w| w[0] < w[1]));
        for b in &seq.blocks {
            assert!(b.certificates.iter().all(|c| c.upper < b.eps));
        }
        let j = seq.to_json();
        assert_eq!(j["mode"], "demo");
        assert_eq!(j["blocks"].as_array().unwrap().len(), 2);
        assert!(j["blocks"][0][0].is_string());
    }

    #[test]
    fn faithful_blocks_past_budget_are_refused() {
        let g = Irrational::golden();
        let opts = ScheduleOptions {
            mode: Mode::Faithful,
            ..Default::default()
        };
        let s = build_schedule(&g, 1, &opts).unwrap();
        assert!(s.verify(&g).unwrap());
        assert!(s.stages[0].end >= s.stages[0].nprime.value);
        let capped = emit_sequence(&s, &g, Some(500)).unwrap();
        assert!(capped.blocks[0].truncated);
        assert_eq!(capped.blocks[0].end - capped.blocks[0].start, 500);
        let s = build_schedule(&g, 2, &opts).unwrap();
        assert!(&s.stages[1].end - &s.stages[1].start > BigInt::from(ENUMERATION_BUDGET));
        assert!(matches!(emit_sequence(&s, &g, None), Err(Error::BlockTooLarge(_))));
    }
}
