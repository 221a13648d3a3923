//! Finite-to-limit comparison: a time-shift tolerant distance between loss
//! paths, the m-scaling study against the mean-field solution driven by the
//! same common path, and the full-versus-reduced network comparison.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::feedback::FeedbackSpec;
use crate::finite_sim::{simulate, BankParams, Economy, SimConfig};
use crate::io::{fmt17, write_json, CsvTable};
use crate::mean_field::{self, InitialDensity, MFConfig, MixtureSpec, Model, TypeSpec};
use crate::network::{
    build_block_matrix, rank_factorize, scale_network, BlockSpec, LiabilityNetwork, NoiseDistribution, TypeAtlas,
    DEFAULT_REL_TOL,
};
use crate::piecewise::Piecewise;
use crate::rng::{self, BrownianPath};

/// Shift window used by the studies, in grid steps.
pub const STUDY_MAX_SHIFT: usize = 10;

/// min over integer shifts h of sup_t |a(t) − b(t + h·dt)| + |h|·dt.
///
/// Both paths live on the same uniform grid and are held at their end values
/// outside it, so every shift compares whole paths. With `max_shift` = None
/// all shifts up to the grid length are tried; that version satisfies the
/// triangle inequality exactly.
pub fn loss_distance(a: &[f64], b: &[f64], dt: f64, max_shift: Option<usize>) -> Result<f64> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::validation("loss_distance: paths need equal nonzero lengths"));
    }
    if !(dt > 0.0) {
        return Err(Error::validation("loss_distance: dt must be positive"));
    }
    let n = a.len() as isize;
    let at = |p: &[f64], k: isize| p[k.clamp(0, n - 1) as usize];
    let hmax = max_shift.map_or(n - 1, |h| (h as isize).min(n - 1));
    let mut best = f64::INFINITY;
    for h in -hmax..=hmax {
        let penalty = h.unsigned_abs() as f64 * dt;
        if penalty >= best {
            continue;
        }
        // Beyond this range both sides are frozen at their end values.
        let lo = (-h).min(0);
        let hi = (n - 1 - h).max(n - 1);
        let mut sup = 0.0f64;
        for k in lo..=hi {
            sup = sup.max((at(a, k) - at(b, k + h)).abs());
            if sup + penalty >= best {
                break;
            }
        }
        best = best.min(sup + penalty);
    }
    Ok(best)
}

/// Per-type asset model of a scaling study.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyType {
    pub sigma: Piecewise,
    /// Law of the initial distance-to-default.
    pub initial: InitialDensity,
}

fn default_horizon() -> f64 {
    1.0
}

fn default_feedback() -> FeedbackSpec {
    FeedbackSpec::eisenberg_noe(1.0)
}

fn default_runs() -> usize {
    20
}

fn default_max_shift() -> usize {
    STUDY_MAX_SHIFT
}

/// Replicated block networks compared with their mean-field limit.
///
/// Assets carry no drift, so every distance drifts at −σ²/2 in both models.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalingConfig {
    pub block: BlockSpec,
    /// One entry per type: core banks first, then periphery groups.
    pub types: Vec<StudyType>,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    #[serde(default)]
    pub rho: f64,
    #[serde(default)]
    pub r2: f64,
    #[serde(default = "default_feedback")]
    pub feedback: FeedbackSpec,
    pub m_list: Vec<usize>,
    /// Independent finite runs per m.
    #[serde(default = "default_runs")]
    pub runs: usize,
    #[serde(default)]
    pub seed: u64,
    /// Seed of the common path shared by the limit and every finite run.
    #[serde(default)]
    pub common_seed: u64,
    #[serde(default)]
    pub mf: MFConfig,
    #[serde(default = "default_max_shift")]
    pub max_shift: usize,
}

impl ScalingConfig {
    pub fn validate(&self) -> Result<()> {
        self.block.validate()?;
        let nt = self.block.num_types();
        if self.types.len() != nt {
            return Err(Error::validation(format!("types: expected {nt} entries, one per block type")));
        }
        if self.m_list.is_empty() || self.m_list.contains(&0) {
            return Err(Error::validation("m_list: need at least one positive m"));
        }
        if self.runs == 0 {
            return Err(Error::validation("runs: must be positive"));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::validation("horizon: must be positive"));
        }
        Ok(())
    }

    /// Mean-field mixture whose exposures and net liabilities are the limits
    /// of the replicated networks.
    pub fn mixture(&self) -> Result<MixtureSpec> {
        self.validate()?;
        let atlas = TypeAtlas::from_block(&self.block, DEFAULT_REL_TOL)?;
        let base = build_block_matrix(&self.block, self.horizon)?;
        let labels = self.block.base_labels();
        let types = self
            .types
            .iter()
            .enumerate()
            .map(|(l, st)| {
                let rep = labels.iter().position(|&x| x == l).expect("every type has a bank");
                Ok(TypeSpec {
                    name: atlas.names[l].clone(),
                    weight: atlas.weights[l],
                    u: vec![],
                    v: vec![],
                    drift: None,
                    sigma: st.sigma.clone(),
                    lambda: Some(base.net_liability_rate(rep)?),
                    initial: st.initial.clone(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let spec = MixtureSpec {
            horizon: self.horizon,
            types,
            exposures: Some(atlas.limit_exposures()),
            feedback: self.feedback.clone(),
            r2: self.r2,
            rho: self.rho,
            theta: NoiseDistribution::DiracZero,
            theta_nodes: 1,
        };
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub m: usize,
    pub run: usize,
    pub seed: u64,
    /// Per type, distance from the empirical to the limiting loss path.
    pub distances: Vec<f64>,
}

impl ScalingRow {
    pub fn max_distance(&self) -> f64 {
        self.distances.iter().copied().fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingSummary {
    pub m: usize,
    /// Per type, mean distance over seeds and its standard error.
    pub mean: Vec<f64>,
    pub std_err: Vec<f64>,
    /// Mean and standard error of the worst type's distance.
    pub mean_max: f64,
    pub std_err_max: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingStudy {
    pub type_names: Vec<String>,
    pub times: Vec<f64>,
    pub mf_losses: Vec<Vec<f64>>,
    pub mf_jumps: usize,
    pub rows: Vec<ScalingRow>,
    pub summary: Vec<ScalingSummary>,
    /// Least-squares slope of log mean_max against log m.
    pub slope: Option<f64>,
}

fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Least-squares slope of y on x; None with fewer than two distinct x.
pub fn log_log_slope(points: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> =
        points.iter().filter(|(x, y)| *x > 0.0 && *y > 0.0).map(|(x, y)| (x.ln(), y.ln())).collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if pts.len() < 2 || sxx == 0.0 {
        return None;
    }
    Some(pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / sxx)
}

/// Per-type default fraction |S_l|⁻¹ Σ_{j∈S_l} 1{τ_j ≤ t} on `grid`.
pub fn type_loss_paths(default_times: &[f64], labels: &[usize], num_types: usize, grid: &[f64]) -> Vec<Vec<f64>> {
    let mut sizes = vec![0usize; num_types];
    for &l in labels {
        sizes[l] += 1;
    }
    let mut paths = vec![vec![0.0; grid.len()]; num_types];
    for (j, &tau) in default_times.iter().enumerate() {
        if !tau.is_finite() {
            continue;
        }
        let l = labels[j];
        let start = grid.partition_point(|&t| t < tau);
        for p in &mut paths[l][start..] {
            *p += 1.0 / sizes[l] as f64;
        }
    }
    paths
}

/// Stream id used for bank `i`'s initial draw, disjoint from the noise streams.
fn initial_stream(i: usize) -> u64 {
    (1u64 << 62) + i as u64
}

/// Finite system of size m·m0 for one seed: the replicated network and an
/// economy with initial distances drawn from the type laws.
pub fn finite_system(
    config: &ScalingConfig,
    spec: &MixtureSpec,
    m: usize,
    seed: u64,
) -> Result<(LiabilityNetwork, Economy, Vec<usize>)> {
    let base = build_block_matrix(&config.block, config.horizon)?;
    let net = scale_network(&base, config.block.core_count(), m)?;
    let labels: Vec<usize> = {
        let base_labels = config.block.base_labels();
        crate::network::scaled_origins(config.block.m0(), config.block.core_count(), m)
            .into_iter()
            .map(|o| base_labels[o])
            .collect()
    };
    let laws = spec.laws()?;
    let banks = labels
        .iter()
        .enumerate()
        .map(|(i, &l)| {
            let mut r = rng::stream(seed, initial_stream(i));
            let x_start = laws[l].sample(&mut r);
            let lambda = net.net_liability_rate(i)?;
            Ok(BankParams {
                x0: x_start.exp() * lambda * config.horizon,
                mu: Piecewise::Constant(0.0),
                sigma: spec.types[l].sigma.clone(),
                lambda,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((net, Economy { banks, rho: config.rho, r2: config.r2 }, labels))
}

/// Solves the limit once on the common path of `common_seed`, then for every
/// m and seed simulates the finite system on that same path and time grid.
pub fn run_scaling_study(config: &ScalingConfig) -> Result<ScalingStudy> {
    let spec = config.mixture()?;
    let probe = Model::new(&spec, &config.mf, None)?;
    let common = if config.rho == 0.0 {
        BrownianPath::zero(probe.dt, probe.steps)
    } else {
        BrownianPath::generate(config.common_seed, probe.dt, probe.steps)
    };
    let mf = mean_field::solve(&spec, &config.mf, Some(&common), config.common_seed)?;
    let common = Arc::new(common);
    let nt = spec.num_types();
    let jobs: Vec<(usize, usize)> =
        config.m_list.iter().flat_map(|&m| (0..config.runs).map(move |r| (m, r))).collect();
    let rows = jobs
        .par_iter()
        .map(|&(m, run)| {
            let seed = rng::run_seed(config.seed, run as u64);
            let (net, economy, labels) = finite_system(config, &spec, m, seed)?;
            let sim = SimConfig {
                dt: mf.dt,
                seed,
                common_seed: config.common_seed,
                common_noise: Some(common.clone()),
                record_paths: false,
                factorization: Some(Arc::new(rank_factorize(&net, DEFAULT_REL_TOL)?)),
            };
            let traj = simulate(&net, &economy, &config.feedback, &sim)?;
            let paths = type_loss_paths(&traj.default_times, &labels, nt, &traj.grid);
            let distances = (0..nt)
                .map(|l| loss_distance(&paths[l], &mf.losses[l], mf.dt, Some(config.max_shift)))
                .collect::<Result<Vec<_>>>()?;
            Ok(ScalingRow { m, run, seed, distances })
        })
        .collect::<Result<Vec<_>>>()?;
    let summary: Vec<ScalingSummary> = config
        .m_list
        .iter()
        .map(|&m| {
            let sel: Vec<&ScalingRow> = rows.iter().filter(|r| r.m == m).collect();
            let (mean, std_err) = (0..nt)
                .map(|l| mean_se(&sel.iter().map(|r| r.distances[l]).collect::<Vec<_>>()))
                .unzip();
            let (mean_max, std_err_max) = mean_se(&sel.iter().map(|r| r.max_distance()).collect::<Vec<_>>());
            ScalingSummary { m, mean, std_err, mean_max, std_err_max }
        })
        .collect();
    let slope = log_log_slope(&summary.iter().map(|s| (s.m as f64, s.mean_max)).collect::<Vec<_>>());
    Ok(ScalingStudy {
        type_names: spec.types.iter().map(|t| t.name.clone()).collect(),
        times: mf.times,
        mf_losses: mf.losses,
        mf_jumps: mf.jumps.len(),
        rows,
        summary,
        slope,
    })
}

fn default_full_reduced_dt() -> f64 {
    1.0 / 2000.0
}

fn default_d0() -> f64 {
    0.25
}

/// Runs one network and its reduced version on identical noise, `runs` times.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FullReducedConfig {
    pub full: LiabilityNetwork,
    pub reduced: LiabilityNetwork,
    pub mu: Piecewise,
    pub sigma: Piecewise,
    pub rho: f64,
    pub r2: f64,
    /// Initial log distance-to-default measured in the reduced network.
    #[serde(default = "default_d0")]
    pub d0: f64,
    #[serde(default = "default_full_reduced_dt")]
    pub dt: f64,
    #[serde(default = "default_runs")]
    pub runs: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub common_seed: u64,
    #[serde(default = "default_feedback")]
    pub feedback: FeedbackSpec,
}

impl FullReducedConfig {
    pub fn validate(&self) -> Result<()> {
        if self.full.n() != self.reduced.n() {
            return Err(Error::validation("reduced: bank count differs from full"));
        }
        if (self.full.horizon() - self.reduced.horizon()).abs() > 0.0 {
            return Err(Error::validation("reduced: horizon differs from full"));
        }
        if self.runs == 0 {
            return Err(Error::validation("runs: must be positive"));
        }
        Ok(())
    }

    /// Initial assets: each bank starts d0 above default in the reduced
    /// network. Banks whose reduced net liability is not positive are placed
    /// as if they owed only their societal rate.
    pub fn initial_assets(&self) -> Result<Vec<f64>> {
        let t = self.reduced.horizon();
        let growth = (-self.mu.integral(0.0, t)).exp();
        (0..self.reduced.n())
            .map(|i| {
                let lambda = self.reduced.net_liability_rate(i)?;
                let owed = if lambda > 0.0 { lambda } else { self.reduced.societal()[i] };
                Ok(self.d0.exp() * growth * owed * t)
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FullReducedRow {
    pub run: usize,
    pub seed: u64,
    pub common_seed: u64,
    pub full_default_times: Vec<f64>,
    pub reduced_default_times: Vec<f64>,
    /// Euclidean norm of the default-time differences over banks that
    /// default in both networks.
    pub norm_diff: f64,
    pub both_defaulted: usize,
    /// The same banks survive to the horizon in both networks.
    pub survivor_agreement: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FullReducedReport {
    pub rows: Vec<FullReducedRow>,
    pub median_norm_diff: f64,
    pub agreement_rate: f64,
}

pub fn compare_full_reduced(config: &FullReducedConfig) -> Result<FullReducedReport> {
    config.validate()?;
    let x0 = config.initial_assets()?;
    let full = Economy::from_network(&config.full, &x0, config.mu.clone(), config.sigma.clone(), config.rho, config.r2)?;
    let reduced =
        Economy::from_network(&config.reduced, &x0, config.mu.clone(), config.sigma.clone(), config.rho, config.r2)?;
    let fac_full = Arc::new(rank_factorize(&config.full, DEFAULT_REL_TOL)?);
    let fac_reduced = Arc::new(rank_factorize(&config.reduced, DEFAULT_REL_TOL)?);
    let rows = (0..config.runs)
        .into_par_iter()
        .map(|run| {
            let seed = rng::run_seed(config.seed, run as u64);
            let common_seed = rng::run_seed(config.common_seed, run as u64);
            let sim = |fac: &Arc<_>| SimConfig {
                dt: config.dt,
                seed,
                common_seed,
                common_noise: None,
                record_paths: false,
                factorization: Some(Arc::clone(fac)),
            };
            let a = simulate(&config.full, &full, &config.feedback, &sim(&fac_full))?;
            let b = simulate(&config.reduced, &reduced, &config.feedback, &sim(&fac_reduced))?;
            let mut sq = 0.0;
            let mut both = 0;
            let mut agree = true;
            for (ta, tb) in a.default_times.iter().zip(&b.default_times) {
                if ta.is_finite() && tb.is_finite() {
                    sq += (ta - tb).powi(2);
                    both += 1;
                }
                agree &= ta.is_finite() == tb.is_finite();
            }
            Ok(FullReducedRow {
                run,
                seed,
                common_seed,
                full_default_times: a.default_times,
                reduced_default_times: b.default_times,
                norm_diff: sq.sqrt(),
                both_defaulted: both,
                survivor_agreement: agree,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut norms: Vec<f64> = rows.iter().map(|r| r.norm_diff).collect();
    norms.sort_by(f64::total_cmp);
    let mid = norms.len() / 2;
    let median_norm_diff = if norms.len() % 2 == 1 { norms[mid] } else { 0.5 * (norms[mid - 1] + norms[mid]) };
    let agreement_rate = rows.iter().filter(|r| r.survivor_agreement).count() as f64 / rows.len() as f64;
    Ok(FullReducedReport { rows, median_norm_diff, agreement_rate })
}

/// Writes scaling_study.csv (one row per m and seed, one distance column per
/// type) and study_manifest.json.
pub fn write_scaling_outputs(study: &ScalingStudy, config: &ScalingConfig, dir: &Path) -> Result<Vec<PathBuf>> {
    let mut header = vec!["m".to_string(), "seed".to_string()];
    header.extend(study.type_names.iter().map(|n| format!("distance_{n}")));
    let refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut table = CsvTable::new(&refs);
    for row in &study.rows {
        let mut fields = vec![row.m.to_string(), row.seed.to_string()];
        fields.extend(row.distances.iter().map(|d| fmt17(*d)));
        table.row(&fields);
    }
    let csv = dir.join("scaling_study.csv");
    table.write(&csv)?;
    let manifest = dir.join("study_manifest.json");
    write_json(
        &manifest,
        &serde_json::json!({
            "study": "scaling",
            "config": config,
            "summary": study.summary,
            "slope": study.slope,
            "mf_jumps": study.mf_jumps,
            "type_names": study.type_names,
        }),
    )?;
    Ok(vec![csv, manifest])
}

/// Writes full_vs_reduced.csv and study_manifest.json.
pub fn write_full_reduced_outputs(
    report: &FullReducedReport,
    config: &FullReducedConfig,
    dir: &Path,
) -> Result<Vec<PathBuf>> {
    let mut table = CsvTable::new(&["seed", "norm_diff", "survivor_agreement"]);
    for row in &report.rows {
        table.row(&[row.seed.to_string(), fmt17(row.norm_diff), row.survivor_agreement.to_string()]);
    }
    let csv = dir.join("full_vs_reduced.csv");
    table.write(&csv)?;
    let manifest = dir.join("study_manifest.json");
    write_json(
        &manifest,
        &serde_json::json!({
            "study": "full_vs_reduced",
            "config": config,
            "median_norm_diff": report.median_norm_diff,
            "agreement_rate": report.agreement_rate,
            "rows": report.rows,
        }),
    )?;
    Ok(vec![csv, manifest])
}
