use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::SystemState;
use crate::error::{Error, Result};
use crate::feedback::FeedbackSpec;
use crate::network::{rank_factorize, LiabilityNetwork, DEFAULT_REL_TOL};

/// Largest candidate count the brute-force oracle accepts.
const ORACLE_MAX_BANKS: usize = 20;

/// One instantaneous cascade at time `t`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CascadeReport {
    pub t: f64,
    /// Round 0 holds the banks at or below the boundary at t−; round m the
    /// banks pushed over by the losses of rounds 0..m−1. The last round is empty.
    pub rounds: Vec<Vec<usize>>,
    /// Loss jump felt by each bank after each round (Δᵐ per bank).
    pub round_jumps: Vec<Vec<f64>>,
    /// Final loss jump of each bank.
    pub final_jumps: Vec<f64>,
    /// Jump of each channel loss.
    pub channel_jumps: Vec<f64>,
}

impl CascadeReport {
    pub fn is_empty(&self) -> bool {
        self.rounds.iter().all(Vec::is_empty)
    }

    pub fn defaulted(&self) -> Vec<usize> {
        let mut all: Vec<usize> = self.rounds.iter().flatten().copied().collect();
        all.sort_unstable();
        all
    }
}

/// Resolves the cascade triggered at the state's time by alive banks at or
/// below the boundary. The state must hold left limits; it is not modified.
pub fn resolve_cascade(state: &SystemState) -> CascadeReport {
    let n = state.n();
    let mut defaulted = vec![false; n];
    let first: Vec<usize> = (0..n).filter(|&i| state.alive[i] && state.distance(i) <= 0.0).collect();
    let k = state.factorization.k;
    if first.is_empty() {
        return CascadeReport {
            t: state.t,
            rounds: vec![],
            round_jumps: vec![],
            final_jumps: vec![0.0; n],
            channel_jumps: vec![0.0; k],
        };
    }
    let mut rounds = Vec::new();
    let mut round_jumps = Vec::new();
    let mut current = first;
    let (jumps, channels) = loop {
        for &i in &current {
            defaulted[i] = true;
        }
        rounds.push(current);
        let channels = state.channel_sums((0..n).filter(|&j| defaulted[j]));
        let jumps: Vec<f64> = (0..n).map(|i| state.felt_loss(i, &channels)).collect();
        round_jumps.push(jumps.clone());
        current = (0..n)
            .filter(|&i| state.alive[i] && !defaulted[i] && state.defaults_under(i, jumps[i]))
            .collect();
        if current.is_empty() {
            rounds.push(current);
            break (jumps, channels);
        }
    };
    CascadeReport { t: state.t, rounds, round_jumps, final_jumps: jumps, channel_jumps: channels }
}

/// Smallest self-consistent default set among alive banks, found by
/// enumerating every subset. Losses are summed straight from the rate
/// matrix, independently of the channel factorization.
pub fn greatest_clearing_oracle(state: &SystemState, net: &LiabilityNetwork) -> Result<Vec<usize>> {
    let n = state.n();
    if net.n() != n {
        return Err(Error::validation("oracle: network size differs from state"));
    }
    let candidates: Vec<usize> = (0..n).filter(|&i| state.alive[i]).collect();
    let c = candidates.len();
    if c > ORACLE_MAX_BANKS {
        return Err(Error::validation(format!(
            "oracle: {c} candidate banks exceeds the enumeration limit of {ORACLE_MAX_BANKS}"
        )));
    }
    let mut best: Option<(u32, u32)> = None;
    for mask in 0u32..(1u32 << c) {
        let size = mask.count_ones();
        if best.is_some_and(|(s, _)| s <= size) {
            continue;
        }
        let member = |b: usize| mask & (1 << b) != 0;
        let consistent = (0..c).all(|a| {
            let i = candidates[a];
            let jump: f64 = (0..c).filter(|&b| member(b)).map(|b| net.rate(candidates[b], i)).sum();
            state.defaults_under(i, jump) == member(a)
        });
        if consistent {
            best = Some((size, mask));
        }
    }
    let (_, mask) = best.ok_or_else(|| Error::numerical("oracle: no consistent default set"))?;
    Ok((0..c).filter(|&b| mask & (1 << b) != 0).map(|b| candidates[b]).collect())
}

/// A network with a state at a cascade time, for cross-checking the
/// round-by-round resolution against the oracle.
#[derive(Clone, Debug)]
pub struct CascadeInstance {
    pub network: LiabilityNetwork,
    pub state: SystemState,
}

/// Random instance on `n` banks: sparse rates in [0, 2], societal rate 1,
/// recovery in [0, 1], a few banks already dead and distances spread around
/// the boundary so that most instances start a cascade.
pub fn random_instance<R: Rng>(rng: &mut R, n: usize) -> Result<CascadeInstance> {
    let horizon = 1.0;
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i != j && rng.random_bool(0.6) { rng.random_range(0.0..2.0) } else { 0.0 }).collect())
        .collect();
    let network = LiabilityNetwork::from_rows(&rows, vec![1.0; n], horizon)?;
    let feedback = FeedbackSpec::eisenberg_noe(horizon);
    let r2 = rng.random_range(0.0..1.0);
    let t = rng.random_range(0.0..0.9);
    let mut shifts = Vec::with_capacity(n);
    let mut log_marks = Vec::with_capacity(n);
    let mut feedback_integrals = Vec::with_capacity(n);
    let mut alive = Vec::with_capacity(n);
    for i in 0..n {
        let shift = feedback.for_bank(network.net_liability_rate(i)?, r2, horizon);
        let z = rng.random_range(0.0..0.5);
        let level = shift.level(z);
        let y = if level.is_finite() { level + rng.random_range(-0.2..0.8) } else { rng.random_range(-1.0..1.0) };
        shifts.push(shift);
        feedback_integrals.push(z);
        log_marks.push(y);
        alive.push(!rng.random_bool(0.1));
    }
    let factorization = Arc::new(rank_factorize(&network, DEFAULT_REL_TOL)?);
    let state = SystemState {
        t,
        log_marks,
        shifts,
        default_times: alive.iter().map(|&a| if a { f64::INFINITY } else { 0.0 }).collect(),
        alive,
        losses: vec![0.0; factorization.k],
        feedback_integrals,
        decay: feedback.decay,
        factorization,
    };
    Ok(CascadeInstance { network, state })
}
