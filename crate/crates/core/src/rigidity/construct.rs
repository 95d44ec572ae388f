use log::{debug, info};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::measure::AtomicMeasure;
use super::sequence::RigiditySequence;
use super::verify::{pow2_inv, verify_properties, CertificateReport, VerifyOptions};
use crate::cf::Irrational;
use crate::error::{Error, Result};

/// One completed extension stage `p -> p+1`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stage {
    /// Shifts `Q_{p+1,s}` with `k_{2^p+s} = k_s + Q_{p+1,s}`.
    #[serde(with = "crate::serde_rational::bigint_vec")]
    pub shifts: Vec<BigInt>,
    /// Closeness budgets `δ_{p+1,s}` with certified `‖Q_{p+1,s} α‖ < δ_{p+1,s}`.
    #[serde(with = "crate::serde_rational::rational_vec")]
    pub budgets: Vec<BigRational>,
    /// Intermediate indices `N_{p,s}`, the last one being `N_{p+1}`.
    pub sub_checkpoints: Vec<usize>,
    /// Attempts used (1 when the first budget already verified).
    pub attempts: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstructionState {
    pub alpha: String,
    pub measure: AtomicMeasure,
    /// `N_0 = 0 < N_1 < … < N_p`, indices into the rigidity sequence.
    #[serde(rename = "N")]
    pub checkpoints: Vec<usize>,
    pub stages: Vec<Stage>,
    pub certificate: Option<CertificateReport>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConstructionOptions {
    pub max_retries: usize,
    pub verify: VerifyOptions,
}

impl Default for ConstructionOptions {
    fn default() -> Self {
        ConstructionOptions {
            max_retries: 6,
            verify: VerifyOptions::default(),
        }
    }
}

impl ConstructionState {
    /// Level 0: the Dirac mass at 0, not yet verified.
    pub fn initial(alpha: &Irrational) -> Self {
        ConstructionState {
            alpha: alpha.label().to_string(),
            measure: AtomicMeasure::dirac(),
            checkpoints: vec![0],
            stages: Vec::new(),
            certificate: None,
        }
    }

    pub fn level(&self) -> usize {
        self.measure.level
    }

    pub fn is_verified(&self) -> bool {
        self.certificate.as_ref().is_some_and(|c| c.level == self.level())
    }

    /// Runs verification and stores the certificate.
    pub fn verify(&mut self, seq: &RigiditySequence, opts: &VerifyOptions) -> Result<&CertificateReport> {
        self.certificate = None;
        let report = verify_properties(self, seq, opts)?;
        Ok(self.certificate.insert(report))
    }
}

/// Builds and verifies levels `0..=depth`, returning every state.
pub fn build(seq: &RigiditySequence, depth: usize, opts: &ConstructionOptions) -> Result<Vec<ConstructionState>> {
    let mut state = ConstructionState::initial(seq.alpha());
    state.verify(seq, &opts.verify)?;
    let mut states = vec![state];
    for _ in 0..depth {
        let next = extend(states.last().expect("non-empty"), seq, opts)?;
        states.push(next);
    }
    Ok(states)
}

/// Smallest convergent denominator `q > floor` with certified `‖qα‖ < delta`.
fn shift_for(alpha: &Irrational, floor: &BigInt, delta: &BigRational) -> Result<BigInt> {
    // ‖q_n α‖ > 1/(2 q_{n+1}), so q_{n+1} > 1/(2δ) is necessary
    let need = (delta.recip() / BigRational::from_integer(2.into())).floor().to_integer();
    let mut n = alpha.first_pair_index(|a, b| &a.q > floor && b.q > need)?;
    let tol = delta / BigRational::from_integer(64.into());
    loop {
        let q = alpha.convergent(n)?.q;
        if alpha.norm_below(&q, delta, &tol)?.0 {
            return Ok(q);
        }
        n += 1;
    }
}

/// Extends a verified level-`p` state to level `p+1`.
///
/// New atoms are added one at a time: atom `s` gets its own shift `Q_s`
/// chosen small enough in `‖·α‖` that every index already under control
/// (`n <= N_{p,s-1}`) keeps its margin, then `N_{p,s}` is pushed past the
/// point where all atoms so far are controlled by the envelope.
pub fn extend(state: &ConstructionState, seq: &RigiditySequence, opts: &ConstructionOptions) -> Result<ConstructionState> {
    if !state.is_verified() {
        return Err(Error::Precondition("extend needs a verified state".into()));
    }
    let alpha = seq.alpha();
    if alpha.label() != state.alpha {
        return Err(Error::Precondition(format!(
            "state built for {} but sequence is over {}",
            state.alpha,
            alpha.label()
        )));
    }
    let p = state.level();
    if p == 0 {
        let n1 = seq.first_index_with(1, &BigInt::one(), &pow2_inv(2))?;
        let mut next = ConstructionState {
            alpha: state.alpha.clone(),
            measure: AtomicMeasure::new(vec![BigInt::zero(), BigInt::one()])?,
            checkpoints: vec![0, n1],
            stages: vec![Stage {
                shifts: vec![BigInt::one()],
                budgets: vec![BigRational::new(1.into(), 2.into())],
                sub_checkpoints: vec![n1],
                attempts: 1,
            }],
            certificate: None,
        };
        next.verify(seq, &opts.verify)?;
        return Ok(next);
    }

    let n_p = state.checkpoints[p];
    let mu = &state.measure;
    let bits = opts.verify.start_bits;

    // Budget keeping every index n < N_p inside its window bound.
    let slack_budget = (0..n_p)
        .into_par_iter()
        .map(|n| -> Result<BigRational> {
            // at a shared endpoint the later, stricter window applies
            let j = (0..p).rev().find(|&j| state.checkpoints[j] <= n).expect("N_0 = 0");
            let m = seq.term(n)?;
            let v = mu.mu_bits(alpha, &m, bits)?;
            let slack = pow2_inv(j) - v.upper;
            if !slack.is_positive() {
                return Err(Error::Internal(format!("no slack at index {n}")));
            }
            Ok(slack / BigRational::from_integer(m))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .min()
        .expect("N_p >= 1");

    let mut budget = slack_budget;
    let p0_top = opts.verify.p0_max.map_or(p, |m| m.min(p));
    let eta_tol = pow2_inv(bits as usize);
    for p0 in 1..=p0_top {
        let eta = mu.eta(alpha, p0, &eta_tol)?.expect("p0 >= 1");
        budget = budget.min(eta.lower * pow2_inv(p + 3));
    }
    if let Some(prev) = state.stages.last().and_then(|s| s.budgets.iter().min()) {
        budget = budget.min(prev / BigRational::from_integer(2.into()));
    }

    let window_bound = pow2_inv(p + 2);
    let mut last = String::new();
    for attempt in 0..opts.max_retries {
        let cap = &budget * pow2_inv(attempt);
        let mut ks = mu.multipliers.clone();
        let mut max_k = mu.max_abs();
        let mut shifts = Vec::with_capacity(1 << p);
        let mut budgets = Vec::with_capacity(1 << p);
        let mut subs = Vec::with_capacity(1 << p);
        let mut frontier = n_p;
        for s in 0..(1usize << p) {
            let m = seq.term(frontier)?;
            let delta = cap.clone().min(&window_bound / BigRational::from_integer(m));
            let q = shift_for(alpha, &(&max_k * 2), &delta)?;
            let k = &ks[s] + &q;
            if k.abs() > max_k {
                max_k = k.abs();
            }
            ks.push(k);
            shifts.push(q);
            budgets.push(delta);
            frontier = seq.first_index_with(frontier + 1, &max_k, &window_bound)?;
            subs.push(frontier);
        }
        debug!("level {} attempt {attempt}: N = {frontier}, max|k| has {} bits", p + 1, max_k.bits());
        let mut checkpoints = state.checkpoints.clone();
        checkpoints.push(frontier);
        let mut stages = state.stages.clone();
        stages.push(Stage {
            shifts,
            budgets,
            sub_checkpoints: subs,
            attempts: attempt + 1,
        });
        let mut next = ConstructionState {
            alpha: state.alpha.clone(),
            measure: AtomicMeasure::new(ks)?,
            checkpoints,
            stages,
            certificate: None,
        };
        match next.verify(seq, &opts.verify) {
            Ok(_) => {
                info!("level {} verified, N_{} = {frontier}", p + 1, p + 1);
                return Ok(next);
            }
            Err(Error::VerificationFailed(msg)) => {
                debug!("level {} attempt {attempt} failed: {msg}", p + 1);
                last = msg;
            }
            Err(e) => return Err(e),
        }
    }
    Err(Error::RetriesExhausted {
        level: p + 1,
        attempts: opts.max_retries,
        last,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rigidity::CheckKind;

    fn golden_seq() -> RigiditySequence {
        RigiditySequence::denominators(&Irrational::golden(), 16).unwrap()
    }

    #[test]
    fn base_step_uses_unit_multiplier() {
        let seq = golden_seq();
        let states = build(&seq, 1, &ConstructionOptions::default()).unwrap();
        assert_eq!(states[1].measure.multipliers, vec![BigInt::zero(), BigInt::one()]);
        assert_eq!(states[1].checkpoints, vec![0, 2]);
        assert!(states[1].is_verified());
    }

    #[test]
    fn unverified_state_is_rejected() {
        let seq = golden_seq();
        let s = ConstructionState::initial(seq.alpha());
        assert!(matches!(
            extend(&s, &seq, &ConstructionOptions::default()),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn levels_preserve_prefix_and_certify() {
        let seq = golden_seq();
        let states = build(&seq, 4, &ConstructionOptions::default()).unwrap();
        for w in states.windows(2) {
            let (a, b) = (&w[0], &w[1]);
            assert_eq!(b.measure.multipliers[..a.measure.atom_count()], a.measure.multipliers[..]);
            assert_eq!(b.checkpoints[..a.checkpoints.len()], a.checkpoints[..]);
            assert!(b.checkpoints.windows(2).all(|x| x[0] < x[1]));
        }
        let last = &states[4];
        assert_eq!(last.measure.atom_count(), 16);
        let cert = last.certificate.as_ref().unwrap();
        assert!(cert.checks.iter().all(|c| c.margin.is_positive()));
        for kind in [CheckKind::P1, CheckKind::P2, CheckKind::P3] {
            assert!(cert.count(kind) > 0);
        }
        for (j, stage) in last.stages.iter().enumerate().skip(1) {
            for (q, d) in stage.shifts.iter().zip(&stage.budgets) {
                assert!(seq.alpha().norm_below(q, d, &(d / BigRational::from_integer(16.into()))).unwrap().0, "stage {j}");
            }
        }
    }

    #[test]
    fn finite_sequence_runs_out() {
        let g = Irrational::golden();
        let terms = RigiditySequence::denominators(&g, 0).unwrap().terms(30).unwrap();
        let seq = RigiditySequence::finite(&g, terms, None).unwrap();
        let err = build(&seq, 6, &ConstructionOptions::default()).unwrap_err();
        assert!(matches!(err, Error::SequenceTooShort(_)), "{err}");
    }
}
