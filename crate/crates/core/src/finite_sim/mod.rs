//! Finite interbank system: balance-sheet capital, distances-to-default,
//! cascade resolution at default times and the path simulator.

mod cascade;
mod simulate;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use cascade::{greatest_clearing_oracle, random_instance, resolve_cascade, CascadeInstance, CascadeReport};
pub use simulate::{
    empirical_losses, simulate, simulate_batch, write_trajectory_outputs, SimConfig, Trajectory,
};

use crate::error::{Error, Result};
use crate::feedback::{Decay, FeedbackSpec, Shift};
use crate::network::{LiabilityNetwork, RankFactorization};
use crate::piecewise::Piecewise;

/// External-asset and balance-sheet parameters of one bank.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BankParams {
    /// Initial external assets.
    pub x0: f64,
    pub mu: Piecewise,
    pub sigma: Piecewise,
    /// Net liability per unit time.
    pub lambda: f64,
}

/// Parameters shared by every bank of a system.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Economy {
    pub banks: Vec<BankParams>,
    /// Loading of every bank on the common factor.
    pub rho: f64,
    /// Recovery rate on defaulted interbank assets.
    pub r2: f64,
}

impl Economy {
    /// Banks with net liabilities read off `net` and a shared asset model.
    pub fn from_network(net: &LiabilityNetwork, x0: &[f64], mu: Piecewise, sigma: Piecewise, rho: f64, r2: f64) -> Result<Self> {
        if x0.len() != net.n() {
            return Err(Error::validation(format!("x0: expected {} entries", net.n())));
        }
        let banks = (0..net.n())
            .map(|i| {
                Ok(BankParams { x0: x0[i], mu: mu.clone(), sigma: sigma.clone(), lambda: net.net_liability_rate(i)? })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Economy { banks, rho, r2 })
    }

    pub fn validate(&self, horizon: f64) -> Result<()> {
        if !(self.rho > -1.0 && self.rho < 1.0) {
            return Err(Error::validation("rho: must lie in (-1, 1)"));
        }
        if !(0.0..=1.0).contains(&self.r2) {
            return Err(Error::validation("r2: must lie in [0, 1]"));
        }
        for (i, b) in self.banks.iter().enumerate() {
            b.mu.validate(&format!("banks[{i}].mu"))?;
            b.sigma.validate(&format!("banks[{i}].sigma"))?;
            if b.sigma.min() <= 0.0 {
                return Err(Error::validation(format!("banks[{i}].sigma: must be positive")));
            }
            if !(b.x0 > 0.0 && b.x0.is_finite()) {
                return Err(Error::validation(format!("banks[{i}].x0: must be positive")));
            }
            if !b.lambda.is_finite() {
                return Err(Error::validation(format!("banks[{i}].lambda: must be finite")));
            }
            let marked = b.x0 * b.mu.integral(0.0, horizon).exp();
            if marked <= b.lambda * horizon {
                return Err(Error::validation(format!(
                    "banks[{i}].x0: bank starts in default (marked assets {marked} <= net liability {})",
                    b.lambda * horizon
                )));
            }
        }
        Ok(())
    }
}

/// Mark-to-market capital x·e^{∫ₜᵀμ} − L̄ − (1 − R₂)·Σ (T − τ_j)·λ_ji over the
/// listed defaults `(τ_j, λ_ji)`.
pub fn capital(t: f64, x_t: f64, params: &BankParams, r2: f64, horizon: f64, defaulted: &[(f64, f64)]) -> f64 {
    let marked = x_t * params.mu.integral(t, horizon).exp();
    let deduction: f64 = defaulted.iter().map(|&(tau, rate)| (horizon - tau) * rate).sum();
    marked - params.lambda * horizon - (1.0 - r2) * deduction
}

/// Logarithmic distance-to-default of a bank with accumulated weighted loss
/// `feedback_integral` = ∫₀ᵗ (1 − s/T) dL(s).
pub fn to_distance(x_t: f64, t: f64, params: &BankParams, r2: f64, horizon: f64, feedback_integral: f64) -> Result<f64> {
    if !(x_t > 0.0) {
        return Err(Error::numerical(format!("to_distance: assets must be positive, got {x_t}")));
    }
    let denom = params.lambda * horizon + horizon * (1.0 - r2) * feedback_integral;
    if !(denom > 0.0) {
        return Err(Error::numerical(format!("to_distance: effective liability {denom} is not positive")));
    }
    Ok((x_t * params.mu.integral(t, horizon).exp() / denom).ln())
}

/// State of the finite system at a grid time.
///
/// Each distance is stored as X_i = Y_i − H_i(z_i): `log_marks` holds Y, the
/// part driven by the asset noise, `shifts` holds H and `feedback_integrals`
/// holds z_i = ∫ g dL_i.
#[derive(Clone, Debug)]
pub struct SystemState {
    pub t: f64,
    pub log_marks: Vec<f64>,
    pub shifts: Vec<Shift>,
    pub alive: Vec<bool>,
    /// Channel losses n⁻¹ Σ_j u_jl 1{τ_j ≤ t}.
    pub losses: Vec<f64>,
    pub feedback_integrals: Vec<f64>,
    pub default_times: Vec<f64>,
    pub decay: Decay,
    pub factorization: Arc<RankFactorization>,
}

impl SystemState {
    pub fn n(&self) -> usize {
        self.alive.len()
    }

    pub fn distance(&self, i: usize) -> f64 {
        self.log_marks[i] - self.shifts[i].level(self.feedback_integrals[i])
    }

    pub fn distances(&self) -> Vec<f64> {
        (0..self.n()).map(|i| self.distance(i)).collect()
    }

    /// Downward shift of bank `i`'s distance if its loss jumps by `jump` now.
    pub fn theta_shift(&self, i: usize, jump: f64) -> f64 {
        self.shifts[i].increment(self.feedback_integrals[i], self.decay.at(self.t) * jump)
    }

    /// Whether bank `i` ends at or below the boundary after a loss jump `jump`.
    pub fn defaults_under(&self, i: usize, jump: f64) -> bool {
        let z = self.feedback_integrals[i] + self.decay.at(self.t) * jump;
        self.log_marks[i] <= self.shifts[i].level(z)
    }

    /// Channel sums n⁻¹ Σ_{j∈set} u_jl.
    pub fn channel_sums(&self, set: impl IntoIterator<Item = usize>) -> Vec<f64> {
        let fac = &self.factorization;
        let mut c = vec![0.0; fac.k];
        for j in set {
            for (l, cl) in c.iter_mut().enumerate() {
                *cl += fac.u(j, l);
            }
        }
        let n = self.n() as f64;
        c.iter_mut().for_each(|x| *x /= n);
        c
    }

    /// Loss felt by bank `i` from channel sums `c`, Σ_l v_li c_l, clipped at 0
    /// against rounding in the factorization.
    pub fn felt_loss(&self, i: usize, c: &[f64]) -> f64 {
        let fac = &self.factorization;
        c.iter().enumerate().map(|(l, cl)| fac.v(l, i) * cl).sum::<f64>().max(0.0)
    }

    /// Additional loss of a bank with exposure vector `target_v` when every
    /// alive bank j with X_j(t−) within Θ_j(f_j) of the boundary defaults.
    pub fn xi_map(&self, f: &[f64], target_v: &[f64]) -> f64 {
        let hit = (0..self.n()).filter(|&j| self.alive[j] && self.defaults_under(j, f[j]));
        let c = self.channel_sums(hit);
        c.iter().zip(target_v).map(|(a, b)| a * b).sum()
    }

    /// Combined loss of each bank, Σ_l v_li 𝓛ˡ.
    pub fn combined_losses(&self) -> Vec<f64> {
        (0..self.n()).map(|i| self.felt_loss(i, &self.losses)).collect()
    }
}

/// Initial state of `net` under `economy`; errors if any bank starts at or
/// below the boundary.
pub fn initial_state(
    net: &LiabilityNetwork,
    economy: &Economy,
    feedback: &FeedbackSpec,
    factorization: Arc<RankFactorization>,
) -> Result<SystemState> {
    let n = net.n();
    let horizon = net.horizon();
    if economy.banks.len() != n {
        return Err(Error::validation(format!("banks: expected {n} entries")));
    }
    if factorization.n != n {
        return Err(Error::validation("factorization: bank count differs from network"));
    }
    economy.validate(horizon)?;
    feedback.validate()?;
    let mut log_marks = Vec::with_capacity(n);
    let mut shifts = Vec::with_capacity(n);
    for (i, b) in economy.banks.iter().enumerate() {
        let shift = feedback.for_bank(b.lambda, economy.r2, horizon);
        let mut y = b.x0.ln() + b.mu.integral(0.0, horizon);
        if !matches!(shift, Shift::Liability { .. }) {
            if b.lambda <= 0.0 {
                return Err(Error::validation(format!("banks[{i}].lambda: must be positive for this feedback map")));
            }
            y -= (b.lambda * horizon).ln();
        }
        log_marks.push(y);
        shifts.push(shift);
    }
    let state = SystemState {
        t: 0.0,
        log_marks,
        shifts,
        alive: vec![true; n],
        losses: vec![0.0; factorization.k],
        feedback_integrals: vec![0.0; n],
        default_times: vec![f64::INFINITY; n],
        decay: feedback.decay,
        factorization,
    };
    if let Some(i) = (0..n).find(|&i| state.distance(i) <= 0.0) {
        return Err(Error::validation(format!("banks[{i}]: in default at t = 0")));
    }
    Ok(state)
}
