use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{initial_state, resolve_cascade, CascadeReport, Economy, SystemState};
use crate::error::{Error, Result};
use crate::feedback::FeedbackSpec;
use crate::io::{fmt17, write_json, CsvTable};
use crate::network::{rank_factorize, LiabilityNetwork, RankFactorization, DEFAULT_REL_TOL};
use crate::rng::{self, BrownianPath};

#[derive(Clone, Debug)]
pub struct SimConfig {
    pub dt: f64,
    pub seed: u64,
    pub common_seed: u64,
    /// Realised common factor to use instead of drawing from `common_seed`.
    pub common_noise: Option<Arc<BrownianPath>>,
    /// Keep per-bank X and K paths (off for large batch studies).
    pub record_paths: bool,
    /// Channel factorization to reuse; computed from the network when absent.
    pub factorization: Option<Arc<RankFactorization>>,
}

impl SimConfig {
    pub fn new(horizon: f64) -> Self {
        SimConfig {
            dt: horizon / 2000.0,
            seed: 0,
            common_seed: 0,
            common_noise: None,
            record_paths: true,
            factorization: None,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Trajectory {
    pub grid: Vec<f64>,
    /// Per bank, distance-to-default at each grid time (frozen after default).
    pub x_paths: Vec<Vec<f64>>,
    /// Per bank, capital at each grid time (frozen after default).
    pub k_paths: Vec<Vec<f64>>,
    pub default_times: Vec<f64>,
    /// Cascade round in which each defaulted bank fell.
    pub default_rounds: Vec<Option<usize>>,
    pub cascades: Vec<CascadeReport>,
    /// Per channel, loss at each grid time.
    pub loss_paths: Vec<Vec<f64>>,
    /// Per bank, combined loss Σ_l v_li 𝓛ˡ at each grid time.
    pub combined_loss_paths: Vec<Vec<f64>>,
    pub seed: u64,
    pub common_seed: u64,
    pub dt: f64,
}

impl Trajectory {
    pub fn alive_at(&self, bank: usize, k: usize) -> bool {
        self.default_times[bank] > self.grid[k]
    }
}

/// Simulates the finite system on a uniform grid to the network horizon.
pub fn simulate(net: &LiabilityNetwork, economy: &Economy, feedback: &FeedbackSpec, config: &SimConfig) -> Result<Trajectory> {
    let horizon = net.horizon();
    if !(config.dt > 0.0 && config.dt <= horizon) {
        return Err(Error::validation("dt: must lie in (0, T]"));
    }
    let steps = (horizon / config.dt).round() as usize;
    if ((steps as f64) * config.dt - horizon).abs() > 1e-9 * horizon {
        return Err(Error::validation("dt: must divide T"));
    }
    let fac = match &config.factorization {
        Some(f) => f.clone(),
        None => Arc::new(rank_factorize(net, DEFAULT_REL_TOL)?),
    };
    let mut state = initial_state(net, economy, feedback, fac.clone())?;
    let n = net.n();
    let rho = economy.rho;
    let idio = (1.0 - rho * rho).sqrt();
    let r2 = economy.r2;

    let mut common_rng = rng::stream(config.common_seed, rng::COMMON_STREAM);
    let mut bank_rngs: Vec<_> = (0..n).map(|i| rng::stream(config.seed, rng::bank_stream(i))).collect();
    let sqrt_dt = config.dt.sqrt();

    // Mark offset so that exp(log_mark + offset) is x·e^{∫ₜᵀμ}.
    let offsets: Vec<f64> = (0..n)
        .map(|i| {
            let lam_t = economy.banks[i].lambda * horizon;
            if matches!(state.shifts[i], crate::feedback::Shift::Liability { .. }) { 0.0 } else { lam_t.ln() }
        })
        .collect();
    let mut deductions = vec![0.0; n];
    let capital_of = |state: &SystemState, deductions: &[f64], i: usize| {
        (state.log_marks[i] + offsets[i]).exp() - economy.banks[i].lambda * horizon - (1.0 - r2) * deductions[i]
    };

    let mut grid = Vec::with_capacity(steps + 1);
    let record = config.record_paths;
    let mut x_paths = vec![Vec::new(); if record { n } else { 0 }];
    let mut k_paths = vec![Vec::new(); if record { n } else { 0 }];
    let mut loss_paths = vec![Vec::with_capacity(steps + 1); fac.k];
    let mut combined = vec![Vec::new(); if record { n } else { 0 }];
    let mut frozen: Vec<Option<(f64, f64)>> = vec![None; n];
    let mut default_rounds = vec![None; n];
    let mut cascades = Vec::new();

    let mut push = |state: &SystemState, deductions: &[f64], frozen: &[Option<(f64, f64)>], grid: &mut Vec<f64>| {
        grid.push(state.t);
        for (l, path) in loss_paths.iter_mut().enumerate() {
            path.push(state.losses[l]);
        }
        if record {
            for i in 0..n {
                let (x, k) = frozen[i].unwrap_or_else(|| (state.distance(i), capital_of(state, deductions, i)));
                x_paths[i].push(x);
                k_paths[i].push(k);
                combined[i].push(state.felt_loss(i, &state.losses));
            }
        }
    };
    push(&state, &deductions, &frozen, &mut grid);

    for step in 0..steps {
        let t0 = step as f64 * config.dt;
        let t1 = if step + 1 == steps { horizon } else { (step + 1) as f64 * config.dt };
        let db0 = match &config.common_noise {
            Some(path) => path.increment(t0, t1),
            None => {
                let z: f64 = StandardNormal.sample(&mut common_rng);
                sqrt_dt * z
            }
        };
        for i in 0..n {
            // Every bank draws every step so streams stay aligned across networks.
            let z: f64 = StandardNormal.sample(&mut bank_rngs[i]);
            if !state.alive[i] {
                continue;
            }
            let var = economy.banks[i].sigma.integral_sq(t0, t1);
            let vol = (var / (t1 - t0)).sqrt();
            state.log_marks[i] += -0.5 * var + vol * (rho * db0 + idio * sqrt_dt * z);
        }
        state.t = t1;
        if let Some(i) = (0..n).find(|&i| state.alive[i] && !state.log_marks[i].is_finite()) {
            return Err(Error::numerical(format!("non-finite asset path for bank {i} at t = {t1}")));
        }
        if (0..n).any(|i| state.alive[i] && state.distance(i) <= 0.0) {
            let report = resolve_cascade(&state);
            apply_cascade(&mut state, &report, net, horizon, &mut deductions);
            for (round, members) in report.rounds.iter().enumerate() {
                for &j in members {
                    default_rounds[j] = Some(round);
                }
            }
            for j in report.defaulted() {
                frozen[j] = Some((state.distance(j), capital_of(&state, &deductions, j)));
            }
            cascades.push(report);
        }
        push(&state, &deductions, &frozen, &mut grid);
    }

    Ok(Trajectory {
        grid,
        x_paths,
        k_paths,
        default_times: state.default_times.clone(),
        default_rounds,
        cascades,
        loss_paths,
        combined_loss_paths: combined,
        seed: config.seed,
        common_seed: config.common_seed,
        dt: config.dt,
    })
}

/// Marks the cascade's defaults and books its loss jumps.
fn apply_cascade(
    state: &mut SystemState,
    report: &CascadeReport,
    net: &LiabilityNetwork,
    horizon: f64,
    deductions: &mut [f64],
) {
    let g = state.decay.at(state.t);
    let defaulted = report.defaulted();
    for &j in &defaulted {
        state.alive[j] = false;
        state.default_times[j] = state.t;
    }
    for (l, dl) in report.channel_jumps.iter().enumerate() {
        state.losses[l] += dl;
    }
    for i in 0..state.n() {
        state.feedback_integrals[i] += g * report.final_jumps[i];
        for &j in &defaulted {
            deductions[i] += (horizon - state.t) * net.rate(j, i);
        }
    }
}

/// Runs `runs` independent simulations; run r uses seeds derived from
/// (seed, r) and (common_seed, r).
pub fn simulate_batch(
    net: &LiabilityNetwork,
    economy: &Economy,
    feedback: &FeedbackSpec,
    config: &SimConfig,
    runs: usize,
) -> Result<Vec<Trajectory>> {
    let fac = match &config.factorization {
        Some(f) => f.clone(),
        None => Arc::new(rank_factorize(net, DEFAULT_REL_TOL)?),
    };
    (0..runs)
        .into_par_iter()
        .map(|r| {
            let cfg = SimConfig {
                seed: rng::run_seed(config.seed, r as u64),
                common_seed: rng::run_seed(config.common_seed, r as u64),
                factorization: Some(fac.clone()),
                ..config.clone()
            };
            simulate(net, economy, feedback, &cfg)
        })
        .collect()
}

/// Channel losses n⁻¹ Σ_j u_jl 1{τ_j ≤ t} on the trajectory grid.
pub fn empirical_losses(traj: &Trajectory, fac: &RankFactorization) -> Result<Vec<Vec<f64>>> {
    if fac.n != traj.default_times.len() {
        return Err(Error::validation("factorization: bank count differs from trajectory"));
    }
    let n = fac.n as f64;
    let mut order: Vec<usize> = (0..fac.n).filter(|&j| traj.default_times[j].is_finite()).collect();
    order.sort_by(|&a, &b| traj.default_times[a].total_cmp(&traj.default_times[b]));
    let mut paths = vec![Vec::with_capacity(traj.grid.len()); fac.k];
    let mut acc = vec![0.0; fac.k];
    let mut next = 0;
    for &t in &traj.grid {
        while next < order.len() && traj.default_times[order[next]] <= t {
            for (l, a) in acc.iter_mut().enumerate() {
                *a += fac.u(order[next], l) / n;
            }
            next += 1;
        }
        for (l, p) in paths.iter_mut().enumerate() {
            p.push(acc[l]);
        }
    }
    Ok(paths)
}

/// Writes trajectories.csv, defaults.csv, losses.csv and cascades.json into
/// `dir` and returns the written paths.
pub fn write_trajectory_outputs(traj: &Trajectory, dir: &Path) -> Result<Vec<PathBuf>> {
    let n = traj.default_times.len();
    let mut written = Vec::new();

    if !traj.x_paths.is_empty() {
        let mut t = CsvTable::new(&["t", "bank", "X", "K", "alive"]);
        for (k, &time) in traj.grid.iter().enumerate() {
            for i in 0..n {
                t.row(&[
                    fmt17(time),
                    i.to_string(),
                    fmt17(traj.x_paths[i][k]),
                    fmt17(traj.k_paths[i][k]),
                    u8::from(traj.alive_at(i, k)).to_string(),
                ]);
            }
        }
        let p = dir.join("trajectories.csv");
        t.write(&p)?;
        written.push(p);
    }

    let mut d = CsvTable::new(&["bank", "tau", "cascade_round"]);
    let mut order: Vec<usize> = (0..n).filter(|&i| traj.default_times[i].is_finite()).collect();
    order.sort_by(|&a, &b| traj.default_times[a].total_cmp(&traj.default_times[b]).then(a.cmp(&b)));
    for i in order {
        let round = traj.default_rounds[i].map_or_else(String::new, |r| r.to_string());
        d.row(&[i.to_string(), fmt17(traj.default_times[i]), round]);
    }
    let p = dir.join("defaults.csv");
    d.write(&p)?;
    written.push(p);

    let mut l = CsvTable::new(&["t", "channel", "value"]);
    for (k, &time) in traj.grid.iter().enumerate() {
        for (c, path) in traj.loss_paths.iter().enumerate() {
            l.row(&[fmt17(time), c.to_string(), fmt17(path[k])]);
        }
    }
    let p = dir.join("losses.csv");
    l.write(&p)?;
    written.push(p);

    let p = dir.join("cascades.json");
    write_json(&p, &traj.cascades)?;
    written.push(p);
    Ok(written)
}
