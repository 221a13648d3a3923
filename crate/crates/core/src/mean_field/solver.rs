use serde::{Deserialize, Serialize};

use super::density::{SubDensity, ZGrid};
use super::spec::{InitialLaw, MFConfig, MixtureSpec};
use crate::error::{Error, Result};
use crate::feedback::{Decay, Shift};
use crate::rng::BrownianPath;

/// Share of the grid watched by the right-edge tail monitor, in cells.
const TAIL_CELLS: usize = 20;

/// A subtype: one type at one creditor-side quadrature node.
#[derive(Clone, Debug, Serialize)]
pub struct SubInfo {
    pub type_idx: usize,
    pub theta: f64,
    pub prob: f64,
    pub shift: Shift,
}

/// A mixture spec compiled against a grid, a time step and a common-noise path.
#[derive(Clone, Debug)]
pub struct Model {
    pub spec: MixtureSpec,
    pub config: MFConfig,
    pub grid: ZGrid,
    pub dt: f64,
    pub steps: usize,
    /// Entry [i][l] as in the spec.
    pub exposures: Vec<Vec<f64>>,
    pub subs: Vec<SubInfo>,
    pub decay: Decay,
    pub explosion_threshold: f64,
    /// Right edge of the distance window used for output.
    pub x_max: f64,
    pub laws: Vec<InitialLaw>,
    sigma_max: f64,
}

impl Model {
    /// Compiles `spec`; `common` is the common-noise path the solve will use
    /// (it sets how far the boundary can move down).
    pub fn new(spec: &MixtureSpec, config: &MFConfig, common: Option<&BrownianPath>) -> Result<Self> {
        spec.validate()?;
        config.validate()?;
        let horizon = spec.horizon;
        let laws = spec.laws()?;
        let nt = spec.num_types();
        let sigma_max = spec.types.iter().map(|t| t.sigma.max_abs()).fold(0.0, f64::max);
        let drift_max = (0..nt).map(|l| max_abs_drift(spec, l)).fold(0.0, f64::max);
        let diff_max = 0.5 * (1.0 - spec.rho * spec.rho) * sigma_max * sigma_max;
        let dx = config.dx;

        let stable = 1.0 / (4.0 * diff_max / (dx * dx) + 2.0 * drift_max / dx);
        let bound = 0.5 * dx * dx / (sigma_max * sigma_max);
        let dt_req = config.dt.unwrap_or(0.9 * stable.min(bound));
        let steps = (horizon / dt_req).ceil() as usize;
        let dt = if config.dt.is_some() { dt_req } else { horizon / steps as f64 };
        if config.dt.is_some() && ((steps as f64) * dt - horizon).abs() > 1e-9 * horizon {
            return Err(Error::validation("dt: must divide the horizon"));
        }
        if sigma_max * sigma_max * dt / (dx * dx) > 0.5 + 1e-12 {
            return Err(Error::numerical(format!(
                "stability: max σ²·dt/dx² = {} exceeds 1/2",
                sigma_max * sigma_max * dt / (dx * dx)
            )));
        }
        let positivity = 4.0 * diff_max * dt / (dx * dx) + 2.0 * drift_max * dt / dx;
        if positivity > 1.0 + 1e-12 {
            return Err(Error::numerical(format!(
                "stability: boundary-cell coefficient {positivity} exceeds 1 (reduce dt)"
            )));
        }

        let support = laws.iter().map(InitialLaw::support_max).fold(0.0, f64::max);
        let drift_up = (0..nt).map(|l| max_pos_drift(spec, l)).fold(0.0, f64::max);
        let x_max = config.x_max.unwrap_or(support + 6.0 * sigma_max * horizon.sqrt() + drift_up * horizon);
        let common_up = match common {
            Some(p) => p.max().max(-p.min()) * spec.rho.abs() * sigma_max,
            None => 0.0,
        };
        let grid = ZGrid::covering(-(common_up + 4.0 * dx), x_max, dx);

        let exposures = spec.exposure_matrix()?;
        let nodes = spec.theta.quadrature(spec.theta_nodes);
        let mut subs = Vec::new();
        for l in 0..nt {
            let base = spec.shift(l);
            for &(theta, prob) in &nodes {
                subs.push(SubInfo { type_idx: l, theta, prob, shift: base.scaled(1.0 + theta) });
            }
        }
        let v_scale = laws.iter().map(InitialLaw::sup_norm).fold(1.0, f64::max);
        let explosion_threshold = config.explosion_threshold.unwrap_or(10.0 * dt.sqrt() * sigma_max * v_scale);
        Ok(Model {
            spec: spec.clone(),
            config: config.clone(),
            grid,
            dt,
            steps,
            exposures,
            subs,
            decay: spec.decay(),
            explosion_threshold,
            x_max,
            laws,
            sigma_max,
        })
    }

    pub fn num_types(&self) -> usize {
        self.spec.num_types()
    }

    pub fn sigma_max(&self) -> f64 {
        self.sigma_max
    }

    pub fn time(&self, k: usize) -> f64 {
        if k == self.steps {
            self.spec.horizon
        } else {
            k as f64 * self.dt
        }
    }

    /// Largest exposure entry.
    pub fn max_exposure(&self) -> f64 {
        self.exposures.iter().flatten().copied().fold(0.0, f64::max)
    }

    /// Felt-loss increments Σ_i λ̃_il·δ_i of per-type loss increments δ.
    pub fn felt(&self, delta: &[f64]) -> Vec<f64> {
        let nt = self.num_types();
        (0..nt).map(|l| (0..nt).map(|i| self.exposures[i][l] * delta[i]).sum()).collect()
    }
}

fn max_abs_drift(spec: &MixtureSpec, l: usize) -> f64 {
    let t = &spec.types[l];
    match &t.drift {
        Some(d) => d.max_abs(),
        None => 0.5 * t.sigma.max_abs().powi(2),
    }
}

fn max_pos_drift(spec: &MixtureSpec, l: usize) -> f64 {
    match &spec.types[l].drift {
        Some(crate::piecewise::Piecewise::Constant(v)) => v.max(0.0),
        Some(crate::piecewise::Piecewise::Steps { values, .. }) => values.iter().fold(0.0, |m, v| m.max(*v)),
        None => 0.0,
    }
}

/// State of the density solver.
#[derive(Clone, Debug, Serialize)]
pub struct DensityField {
    pub t: f64,
    pub subs: Vec<SubDensity>,
    /// Per type, ∫₀ᵗ g d𝐋 of the felt loss.
    pub feedback_integrals: Vec<f64>,
    /// Per type, felt loss 𝐋 = Σ_i λ̃_il L̃_i.
    pub felt_losses: Vec<f64>,
    #[serde(skip)]
    scratch: Vec<f64>,
}

impl DensityField {
    pub fn initial(model: &Model) -> Self {
        let subs = model
            .subs
            .iter()
            .map(|s| SubDensity::from_pdf(&model.grid, |x| model.laws[s.type_idx].pdf(x)))
            .collect();
        DensityField::from_subs(model, subs)
    }

    /// A field holding the given subtype densities at t = 0.
    pub fn from_subs(model: &Model, subs: Vec<SubDensity>) -> Self {
        let nt = model.num_types();
        DensityField {
            t: 0.0,
            subs,
            feedback_integrals: vec![0.0; nt],
            felt_losses: vec![0.0; nt],
            scratch: Vec::new(),
        }
    }

    /// Per-type mass Σ_q p_q ∫V.
    pub fn masses(&self, model: &Model) -> Vec<f64> {
        self.per_type(model, |d| d.mass(&model.grid))
    }

    /// Per-type loss L̃_l = Σ_q p_q (mass absorbed).
    pub fn losses(&self, model: &Model) -> Vec<f64> {
        self.per_type(model, |d| d.lost)
    }

    fn per_type(&self, model: &Model, f: impl Fn(&SubDensity) -> f64) -> Vec<f64> {
        let mut out = vec![0.0; model.num_types()];
        for (info, d) in model.subs.iter().zip(&self.subs) {
            out[info.type_idx] += info.prob * f(d);
        }
        out
    }

    /// Mixture density of type `l` at distance `x`.
    pub fn density(&self, model: &Model, l: usize, x: f64) -> f64 {
        model
            .subs
            .iter()
            .zip(&self.subs)
            .filter(|(info, _)| info.type_idx == l)
            .map(|(info, d)| info.prob * d.value_at_distance(&model.grid, x))
            .sum()
    }

    /// Distance shift Θ of subtype `s` if its type's felt loss jumps by `z` now.
    pub fn theta(&self, model: &Model, s: usize, z: f64) -> f64 {
        let info = &model.subs[s];
        theta_mf(&info.shift, self.feedback_integrals[info.type_idx], model.decay.at(self.t), z)
    }

    /// Per-type mass that defaults if each type's felt loss jumps by `z`.
    pub fn kills(&self, model: &Model, z: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; model.num_types()];
        for (s, (info, d)) in model.subs.iter().zip(&self.subs).enumerate() {
            let width = self.theta(model, s, z[info.type_idx]);
            out[info.type_idx] += info.prob * d.near_boundary(&model.grid, width);
        }
        out
    }

    /// Ξ(z): felt loss per type caused by the defaults a felt-loss jump z triggers.
    pub fn xi(&self, model: &Model, z: &[f64]) -> Vec<f64> {
        model.felt(&self.kills(model, z))
    }

    /// Moves every subtype boundary up by its Θ under the felt-loss jump `z`
    /// and books the jump into the feedback integrals. Returns per-type
    /// absorbed mass.
    pub fn apply_jump(&mut self, model: &Model, z: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; model.num_types()];
        let widths: Vec<f64> = (0..self.subs.len()).map(|s| self.theta(model, s, z[model.subs[s].type_idx])).collect();
        for ((info, d), w) in model.subs.iter().zip(&mut self.subs).zip(widths) {
            if w > 0.0 {
                out[info.type_idx] += info.prob * d.raise(&model.grid, d.beta + w);
            }
        }
        let g = model.decay.at(self.t);
        for (l, zl) in z.iter().enumerate() {
            self.feedback_integrals[l] += g * zl;
            self.felt_losses[l] += zl;
        }
        out
    }

    /// Moves type `l`'s densities by `shift` in distance (positive: away
    /// from the boundary). Mass pushed through the boundary is absorbed.
    pub fn transport(&mut self, model: &Model, l: usize, shift: f64) -> f64 {
        let mut lost = 0.0;
        for (info, d) in model.subs.iter().zip(&mut self.subs) {
            if info.type_idx != l || shift == 0.0 {
                continue;
            }
            if shift > 0.0 {
                d.lower(&model.grid, d.beta - shift);
            } else {
                lost += info.prob * d.raise(&model.grid, d.beta - shift);
            }
        }
        lost
    }
}

/// Θ = H(J + g·z) − H(J): downward move of the distance of a bank whose felt
/// loss jumps by z at a time with weight g, after accumulated weighted loss J.
pub fn theta_mf(shift: &Shift, prior: f64, g: f64, z: f64) -> f64 {
    shift.increment(prior, g * z).max(0.0)
}

/// ε-diagnostics of one shock size in a cascade resolution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpsTrace {
    pub eps: f64,
    pub jumps: Vec<f64>,
    pub iterations: usize,
}

/// Outcome of the mean-field cascade condition at one time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MfCascade {
    /// Felt-loss jump per type beyond the base shock.
    pub jumps: Vec<f64>,
    pub no_jump: bool,
    pub trace: Vec<EpsTrace>,
    /// max_l |Ξ(s + Δ)_l − Δ_l| at the reported jump.
    pub residual: f64,
}

/// Resolves Δ = lim_ε lim_m Δ^{(m,ε)}, Δ^{(m,ε)} = Ξ(s + ε + Δ^{(m−1,ε)}), on
/// the left-limit field, with base felt-loss shock `base` (zero for a pure
/// cascade).
pub fn resolve_mf_cascade(model: &Model, field: &DensityField, base: &[f64]) -> Result<MfCascade> {
    let cfg = &model.config;
    let nt = model.num_types();
    let shifted = |d: &[f64], e: f64| -> Vec<f64> { (0..nt).map(|l| base[l] + e + d[l]).collect() };
    let mut trace: Vec<EpsTrace> = Vec::new();
    let mut current = vec![0.0; nt];
    for eps in cfg.eps_schedule.values() {
        let mut d = field.xi(model, &shifted(&vec![0.0; nt], eps));
        let mut iterations = 1;
        loop {
            let next = field.xi(model, &shifted(&d, eps));
            let change = max_diff(&next, &d);
            if next.iter().zip(&d).any(|(a, b)| *a < b - cfg.cascade_tol.max(1e-12 * b.abs())) {
                return Err(Error::numerical(format!(
                    "cascade: iterates decreased at eps = {eps} (t = {})",
                    field.t
                )));
            }
            d = next;
            iterations += 1;
            if change < cfg.cascade_tol {
                break;
            }
            if iterations > cfg.cascade_cap {
                return Err(Error::numerical(format!("cascade: no convergence within {} rounds", cfg.cascade_cap)));
            }
        }
        if let Some(prev) = trace.last() {
            let tol = cfg.cascade_tol.max(1e-12);
            if d.iter().zip(&prev.jumps).any(|(a, b)| *a > b + tol) {
                return Err(Error::numerical(format!("cascade: jumps grew as eps decreased (t = {})", field.t)));
            }
        }
        trace.push(EpsTrace { eps, jumps: d.clone(), iterations });
        current = d;
    }
    // Descend from the smallest-ε limit to the fixed point of Δ = Ξ(s + Δ).
    let mut rounds = 0;
    loop {
        let next = field.xi(model, &shifted(&current, 0.0));
        let change = max_diff(&next, &current);
        current = next;
        rounds += 1;
        if change < cfg.cascade_tol || rounds > cfg.cascade_cap {
            break;
        }
    }
    let residual = max_diff(&field.xi(model, &shifted(&current, 0.0)), &current);
    let eps_min = cfg.eps_schedule.min;
    let threshold = 2.0 * eps_min * model.max_exposure();
    let at_min = &trace.last().expect("schedule is nonempty").jumps;
    let no_jump = at_min.iter().all(|x| *x <= threshold);
    Ok(MfCascade { jumps: current, no_jump, trace, residual })
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// A logged jump of the mean-field losses.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JumpRecord {
    pub t: f64,
    /// Per type, jump of the default fraction L̃.
    pub loss_jumps: Vec<f64>,
    /// Per type, jump of the felt loss 𝐋.
    pub felt_jumps: Vec<f64>,
    pub eps_trace: Vec<EpsTrace>,
    pub residual: f64,
}

/// What one time step did.
#[derive(Clone, Debug, PartialEq)]
pub struct StepReport {
    /// Per type, loss increment of the step.
    pub increments: Vec<f64>,
    pub jump: Option<JumpRecord>,
    pub inner_iterations: usize,
}

/// Advances the field by one step: diffusion with drift, common-noise
/// transport, then the within-step contagion fixed point. A step whose
/// contagion iteration exceeds the explosion threshold, or fails to settle
/// within the inner cap, is handed to the cascade resolver.
pub fn step(model: &Model, field: &mut DensityField, db0: f64) -> Result<StepReport> {
    let nt = model.num_types();
    let dt = model.dt;
    let t0 = field.t;
    let t_mid = t0 + 0.5 * dt;
    let rho = model.spec.rho;
    let before = field.losses(model);

    let scratch = &mut field.scratch;
    for (info, d) in model.subs.iter().zip(&mut field.subs) {
        let l = info.type_idx;
        let sigma = model.spec.types[l].sigma.at(t_mid);
        let diff = 0.5 * (1.0 - rho * rho) * sigma * sigma;
        d.diffuse(&model.grid, diff, model.spec.drift_at(l, t_mid), dt, scratch);
        let common = rho * sigma * db0;
        if common > 0.0 {
            d.lower(&model.grid, d.beta - common);
        } else if common < 0.0 {
            d.raise(&model.grid, d.beta - common);
        }
    }
    field.t = t0 + dt;

    let after_diffusion = field.losses(model);
    let base_delta: Vec<f64> = (0..nt).map(|l| after_diffusion[l] - before[l]).collect();
    let base = model.felt(&base_delta);

    let cfg = &model.config;
    let mut z = base.clone();
    let mut iterations = 0;
    let mut settled = false;
    let mut exploded = false;
    while iterations < cfg.inner_cap {
        let kills = field.kills(model, &z);
        let next: Vec<f64> = model.felt(&kills).iter().zip(&base).map(|(x, s)| x + s).collect();
        iterations += 1;
        let change = max_diff(&next, &z);
        z = next;
        if kills.iter().zip(&base_delta).any(|(k, b)| k + b > model.explosion_threshold) {
            exploded = true;
            break;
        }
        if change < cfg.inner_tol {
            settled = true;
            break;
        }
    }

    let mut jump = None;
    if !settled {
        let cascade = resolve_mf_cascade(model, field, &base)?;
        let total: Vec<f64> = (0..nt).map(|l| base[l] + cascade.jumps[l]).collect();
        let killed = field.kills(model, &total);
        let increments: Vec<f64> = (0..nt).map(|l| (base_delta[l] + killed[l]).max(0.0)).collect();
        let is_jump = !cascade.no_jump && increments.iter().any(|x| *x > model.explosion_threshold);
        if exploded && !is_jump {
            log::debug!("t = {}: explosion trigger without a cascade jump", field.t);
        }
        if is_jump {
            jump = Some(JumpRecord {
                t: field.t,
                loss_jumps: increments,
                felt_jumps: total.clone(),
                eps_trace: cascade.trace.clone(),
                residual: cascade.residual,
            });
        }
        z = total;
    }
    field.apply_jump(model, &z);
    let after = field.losses(model);
    let increments: Vec<f64> = (0..nt).map(|l| after[l] - before[l]).collect();
    Ok(StepReport { increments, jump, inner_iterations: iterations })
}

/// Density of every type on the distance grid at one time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub t: f64,
    pub x: Vec<f64>,
    /// Per type, values at `x`.
    pub values: Vec<Vec<f64>>,
}

impl Snapshot {
    pub fn take(model: &Model, field: &DensityField) -> Self {
        let dx = model.grid.dz;
        let n = (model.x_max / dx).round() as usize;
        let x: Vec<f64> = (0..=n).map(|j| j as f64 * dx).collect();
        let values = (0..model.num_types()).map(|l| x.iter().map(|&xi| field.density(model, l, xi)).collect()).collect();
        Snapshot { t: field.t, x, values }
    }
}

/// Result of a full solve.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MFOutput {
    pub type_names: Vec<String>,
    pub times: Vec<f64>,
    /// Per type, L̃ at each time.
    pub losses: Vec<Vec<f64>>,
    /// Per type, felt loss 𝐋 at each time.
    pub felt_losses: Vec<Vec<f64>>,
    pub jumps: Vec<JumpRecord>,
    pub snapshots: Vec<Snapshot>,
    pub common_noise: BrownianPath,
    pub explosion: bool,
    /// First jump time.
    pub t_star: Option<f64>,
    /// Per type, Σ (Δ𝐋/dt)²·dt accumulated over the steps, at each time.
    pub loss_speed_l2: Vec<Vec<f64>>,
    /// Per type, largest loss increment of a step without a logged jump.
    pub max_continuous_increment: Vec<f64>,
    /// Largest |mass + loss − 1| over types and steps.
    pub max_conservation_error: f64,
    pub explosion_threshold: f64,
    pub dt: f64,
    pub dx: f64,
}

/// Solves the mixture along `noise` (a path on the solver's time grid), or
/// along a path drawn from `seed` when `noise` is absent.
pub fn solve(spec: &MixtureSpec, config: &MFConfig, noise: Option<&BrownianPath>, seed: u64) -> Result<MFOutput> {
    let probe = Model::new(spec, config, None)?;
    let path = match noise {
        Some(p) => p.clone(),
        None if spec.rho == 0.0 => BrownianPath::zero(probe.dt, probe.steps),
        None => BrownianPath::generate(seed, probe.dt, probe.steps),
    };
    let model = Model::new(spec, config, Some(&path))?;
    let field = DensityField::initial(&model);
    run(&model, field, &path)
}

/// Time-steps `field` to the horizon.
pub fn run(model: &Model, mut field: DensityField, path: &BrownianPath) -> Result<MFOutput> {
    let nt = model.num_types();
    let dt = model.dt;
    let mut times = vec![field.t];
    let mut losses: Vec<Vec<f64>> = field.losses(model).into_iter().map(|x| vec![x]).collect();
    let mut felt: Vec<Vec<f64>> = field.felt_losses.iter().map(|x| vec![*x]).collect();
    let mut l2 = vec![vec![0.0]; nt];
    let mut max_cont = vec![0.0f64; nt];
    let mut jumps = Vec::new();
    let mut max_err = conservation_error(model, &field);
    let mut snapshots = Vec::new();
    let mut pending: Vec<f64> = model.config.snapshot_times.clone();
    pending.sort_by(f64::total_cmp);
    let mut next_snap = 0;
    let take_due = |field: &DensityField, snaps: &mut Vec<Snapshot>, next: &mut usize| {
        while *next < pending.len() && pending[*next] <= field.t + 1e-9 * dt {
            snaps.push(Snapshot::take(model, field));
            *next += 1;
        }
    };
    take_due(&field, &mut snapshots, &mut next_snap);

    for k in 0..model.steps {
        let t0 = model.time(k);
        let t1 = model.time(k + 1);
        let db0 = path.increment(t0, t1);
        let felt_before = field.felt_losses.clone();
        let report = step(model, &mut field, db0)?;
        field.t = t1;
        match report.jump {
            Some(j) => jumps.push(j),
            None => {
                for (m, inc) in max_cont.iter_mut().zip(&report.increments) {
                    *m = m.max(*inc);
                }
            }
        }
        let err = conservation_error(model, &field);
        max_err = max_err.max(err);
        if err > model.config.mass_tol * (k + 1) as f64 {
            return Err(Error::numerical(format!("conservation: error {err} at t = {t1} exceeds tolerance")));
        }
        for s in &field.subs {
            if s.tail_mass(&model.grid, TAIL_CELLS) > model.config.tail_tol {
                return Err(Error::numerical(format!(
                    "tail: mass reached the right edge of the grid at t = {t1}; increase x_max"
                )));
            }
        }
        times.push(t1);
        for (l, v) in field.losses(model).into_iter().enumerate() {
            losses[l].push(v);
            let speed = (field.felt_losses[l] - felt_before[l]) / dt;
            let prev = *l2[l].last().expect("nonempty");
            l2[l].push(prev + speed * speed * dt);
            felt[l].push(field.felt_losses[l]);
        }
        take_due(&field, &mut snapshots, &mut next_snap);
    }
    let t_star = jumps.first().map(|j: &JumpRecord| j.t);
    Ok(MFOutput {
        type_names: type_names(&model.spec),
        times,
        losses,
        felt_losses: felt,
        explosion: !jumps.is_empty(),
        jumps,
        snapshots,
        common_noise: path.clone(),
        t_star,
        loss_speed_l2: l2,
        max_continuous_increment: max_cont,
        max_conservation_error: max_err,
        explosion_threshold: model.explosion_threshold,
        dt,
        dx: model.grid.dz,
    })
}

pub fn type_names(spec: &MixtureSpec) -> Vec<String> {
    spec.types
        .iter()
        .enumerate()
        .map(|(l, t)| if t.name.is_empty() { format!("type{}", l + 1) } else { t.name.clone() })
        .collect()
}

/// Largest per-type |mass + loss − 1|.
pub fn conservation_error(model: &Model, field: &DensityField) -> f64 {
    let m = field.masses(model);
    let l = field.losses(model);
    m.iter().zip(&l).map(|(a, b)| (a + b - 1.0).abs()).fold(0.0, f64::max)
}

/// Iterate history of the loss-path fixed-point solver.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PicardResult {
    pub times: Vec<f64>,
    /// Per type, L̃ of the final iterate.
    pub losses: Vec<Vec<f64>>,
    /// Sup-distance between successive iterates.
    pub residuals: Vec<f64>,
    pub converged: bool,
}

/// Fixed point of the map taking candidate loss paths to the default
/// probabilities they induce, for a mixture without common noise.
pub fn picard_solve(spec: &MixtureSpec, config: &MFConfig) -> Result<PicardResult> {
    if spec.rho != 0.0 {
        return Err(Error::validation("rho: the loss-path iteration needs rho = 0"));
    }
    let model = Model::new(spec, config, None)?;
    let nt = model.num_types();
    let steps = model.steps;
    let times: Vec<f64> = (0..=steps).map(|k| model.time(k)).collect();
    let mut paths = vec![vec![0.0; steps + 1]; nt];
    let mut residuals = Vec::new();
    let mut converged = false;
    for _ in 0..config.picard_cap {
        let next = picard_map(&model, &paths)?;
        let r = paths
            .iter()
            .zip(&next)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max);
        residuals.push(r);
        paths = next;
        if r < config.picard_tol {
            converged = true;
            break;
        }
    }
    Ok(PicardResult { times, losses: paths, residuals, converged })
}

/// One application of the loss-path map: every subtype evolves under the
/// boundary path fixed by `paths`, with no coupling inside the step.
pub fn picard_map(model: &Model, paths: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let nt = model.num_types();
    let mut field = DensityField::initial(model);
    let mut out = vec![Vec::with_capacity(model.steps + 1); nt];
    for (l, v) in field.losses(model).into_iter().enumerate() {
        out[l].push(v);
    }
    let mut scratch = Vec::new();
    for k in 0..model.steps {
        let t0 = model.time(k);
        let t1 = model.time(k + 1);
        let t_mid = 0.5 * (t0 + t1);
        for (info, d) in model.subs.iter().zip(&mut field.subs) {
            let l = info.type_idx;
            let sigma = model.spec.types[l].sigma.at(t_mid);
            d.diffuse(&model.grid, 0.5 * sigma * sigma, model.spec.drift_at(l, t_mid), t1 - t0, &mut scratch);
        }
        field.t = t1;
        let delta: Vec<f64> = (0..nt).map(|i| paths[i][k + 1] - paths[i][k]).collect();
        let z = model.felt(&delta);
        field.apply_jump(model, &z);
        for (l, v) in field.losses(model).into_iter().enumerate() {
            out[l].push(v);
        }
    }
    Ok(out)
}
