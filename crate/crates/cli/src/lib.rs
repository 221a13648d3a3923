//! Scenario runner: one JSON config per run, dispatched by mode, with every
//! emitted file hashed into manifest.json.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use rand::SeedableRng;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use contagion::convergence::{
    compare_full_reduced, run_scaling_study, write_full_reduced_outputs, write_scaling_outputs, FullReducedConfig,
    ScalingConfig,
};
use contagion::feedback::FeedbackSpec;
use contagion::finite_sim::{
    greatest_clearing_oracle, random_instance, resolve_cascade, simulate, write_trajectory_outputs, Economy, SimConfig,
};
use contagion::io::{fmt17, write_json, CsvTable};
use contagion::mean_field::{collect_checks, picard_solve, solve, write_mf_outputs, MFConfig, MixtureSpec};
use contagion::network::{apply_noise, rank_factorize, LiabilityNetwork, NoiseSpec, TypeAtlas, DEFAULT_REL_TOL};
use contagion::piecewise::Piecewise;
use contagion::scenarios;

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    SimulateFinite,
    SolveMf,
    Picard,
    CascadeTest,
    ScalingStudy,
    FullVsReduced,
    #[value(name = "reproduce-3bank")]
    #[serde(rename = "reproduce-3bank")]
    Reproduce3Bank,
    ReproduceCoreperiphery,
    ReproduceHeatplots,
}

#[derive(Parser, Debug)]
#[command(name = "contagion-lab", version, about = "Interbank contagion scenarios")]
pub struct Args {
    pub mode: Mode,
    /// JSON config file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Overrides the config's `seed`.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Numerical(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Numerical(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

impl From<contagion::Error> for CliError {
    fn from(e: contagion::Error) -> Self {
        match e {
            contagion::Error::Validation(_) | contagion::Error::Json(_) => CliError::Validation(e.to_string()),
            contagion::Error::Numerical(_) => CliError::Numerical(e.to_string()),
            contagion::Error::Io(_) => CliError::Io(e.to_string()),
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("io: {}: {e}", path.display()))
}

/// Replaces every top-level value of the form {"path": "<file>"} with the
/// parsed contents of that file, resolved against `base`.
fn resolve_paths(value: &mut Value, base: &Path) -> Result<()> {
    let Value::Object(map) = value else {
        return Err(CliError::Validation("config: top level must be a JSON object".into()));
    };
    for (key, v) in map.iter_mut() {
        let file = match v {
            Value::Object(inner) if inner.len() == 1 => match inner.get("path") {
                Some(Value::String(p)) => base.join(p),
                _ => continue,
            },
            _ => continue,
        };
        let text = fs::read_to_string(&file).map_err(|e| io_err(&file, e))?;
        *v = serde_json::from_str(&text)
            .map_err(|e| CliError::Validation(format!("config: {key}: {}: {e}", file.display())))?;
    }
    Ok(())
}

/// Parses `text` into `T`, rejecting unknown keys and naming the failing
/// field path.
pub fn parse_config<T: DeserializeOwned>(text: &str, base: &Path) -> Result<T> {
    let mut value: Value = serde_json::from_str(text).map_err(|e| CliError::Validation(format!("config: {e}")))?;
    resolve_paths(&mut value, base)?;
    serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        CliError::Validation(format!("config: {path}: {}", e.into_inner()))
    })
}

fn default_runs() -> usize {
    1
}

fn zero_drift() -> Piecewise {
    Piecewise::Constant(0.0)
}

/// Paths of one network.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateFiniteConfig {
    pub network: LiabilityNetwork,
    /// Initial external assets, one per bank.
    pub x0: Vec<f64>,
    #[serde(default = "zero_drift")]
    pub mu: Piecewise,
    pub sigma: Piecewise,
    #[serde(default)]
    pub rho: f64,
    #[serde(default)]
    pub r2: f64,
    /// Balance-sheet feedback with horizon T when absent.
    #[serde(default)]
    pub feedback: Option<FeedbackSpec>,
    /// Multiplicative rate noise applied before simulating.
    #[serde(default)]
    pub noise: Option<NoiseSpec>,
    /// T/2000 when absent.
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub common_seed: u64,
    #[serde(default = "default_runs")]
    pub runs: usize,
}

/// Density solve or loss-path iteration of one mixture.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeanFieldConfig {
    pub spec: MixtureSpec,
    #[serde(default)]
    pub mf: MFConfig,
    /// Seed of the common path.
    #[serde(default)]
    pub seed: u64,
}

fn default_instances() -> usize {
    10_000
}
fn default_n_min() -> usize {
    2
}
fn default_n_max() -> usize {
    8
}

/// Randomized cross-check of cascade resolution against subset enumeration.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CascadeTestConfig {
    #[serde(default = "default_instances")]
    pub instances: usize,
    #[serde(default = "default_n_min")]
    pub n_min: usize,
    #[serde(default = "default_n_max")]
    pub n_max: usize,
    #[serde(default)]
    pub seed: u64,
}

impl Default for CascadeTestConfig {
    fn default() -> Self {
        CascadeTestConfig { instances: default_instances(), n_min: default_n_min(), n_max: default_n_max(), seed: 0 }
    }
}

/// The three-bank example; every field overrides the bundled parameters.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThreeBankConfig {
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default)]
    pub r2: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub common_seed: u64,
}

/// Rank and exposure checks of the core-periphery example plus the
/// full-versus-reduced comparison with the bundled parameters.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorePeripheryConfig {
    #[serde(default)]
    pub runs: Option<usize>,
    #[serde(default)]
    pub d0: Option<f64>,
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default)]
    pub r2: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub common_seed: u64,
}

fn default_heat_config() -> MFConfig {
    MFConfig { snapshot_times: (0..=50).map(|k| k as f64 * 0.02).collect(), ..MFConfig::default() }
}

/// The four-type jump scenario.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeatPlotConfig {
    #[serde(default = "default_heat_config")]
    pub mf: MFConfig,
    #[serde(default)]
    pub seed: u64,
}

impl Default for HeatPlotConfig {
    fn default() -> Self {
        HeatPlotConfig { mf: default_heat_config(), seed: 0 }
    }
}

fn check_r2(field: &str, r2: f64) -> Result<()> {
    if (0.0..=1.0).contains(&r2) {
        Ok(())
    } else {
        Err(CliError::Validation(format!("config: {field}: must lie in [0, 1], got {r2}")))
    }
}

/// A parsed run: the mode's config with every default filled in.
#[derive(Clone, Debug)]
pub enum ScenarioConfig {
    SimulateFinite(SimulateFiniteConfig),
    SolveMf(MeanFieldConfig),
    Picard(MeanFieldConfig),
    CascadeTest(CascadeTestConfig),
    ScalingStudy(ScalingConfig),
    FullVsReduced(FullReducedConfig),
    Reproduce3Bank(ThreeBankConfig),
    ReproduceCoreperiphery(CorePeripheryConfig),
    ReproduceHeatplots(HeatPlotConfig),
}

fn parse_or_default<T: DeserializeOwned + Default>(text: Option<&str>, base: &Path) -> Result<T> {
    text.map_or_else(|| Ok(T::default()), |t| parse_config(t, base))
}

fn need<'a>(text: Option<&'a str>, mode: Mode) -> Result<&'a str> {
    text.ok_or_else(|| {
        let name = mode.to_possible_value().map(|v| v.get_name().to_string()).unwrap_or_default();
        CliError::Validation(format!("config: mode {name} needs --config"))
    })
}

impl ScenarioConfig {
    /// Parses, applies the seed override, fills defaults and validates.
    pub fn parse(mode: Mode, text: Option<&str>, base: &Path, seed: Option<u64>) -> Result<Self> {
        let mut cfg = match mode {
            Mode::SimulateFinite => ScenarioConfig::SimulateFinite(parse_config(need(text, mode)?, base)?),
            Mode::SolveMf => ScenarioConfig::SolveMf(parse_config(need(text, mode)?, base)?),
            Mode::Picard => ScenarioConfig::Picard(parse_config(need(text, mode)?, base)?),
            Mode::CascadeTest => ScenarioConfig::CascadeTest(parse_or_default(text, base)?),
            Mode::ScalingStudy => ScenarioConfig::ScalingStudy(parse_config(need(text, mode)?, base)?),
            Mode::FullVsReduced => ScenarioConfig::FullVsReduced(parse_config(need(text, mode)?, base)?),
            Mode::Reproduce3Bank => ScenarioConfig::Reproduce3Bank(parse_or_default(text, base)?),
            Mode::ReproduceCoreperiphery => ScenarioConfig::ReproduceCoreperiphery(parse_or_default(text, base)?),
            Mode::ReproduceHeatplots => ScenarioConfig::ReproduceHeatplots(parse_or_default(text, base)?),
        };
        if let Some(s) = seed {
            *cfg.seed_mut() = s;
        }
        cfg.fill_defaults();
        cfg.validate()?;
        Ok(cfg)
    }

    fn seed_mut(&mut self) -> &mut u64 {
        match self {
            ScenarioConfig::SimulateFinite(c) => &mut c.seed,
            ScenarioConfig::SolveMf(c) | ScenarioConfig::Picard(c) => &mut c.seed,
            ScenarioConfig::CascadeTest(c) => &mut c.seed,
            ScenarioConfig::ScalingStudy(c) => &mut c.seed,
            ScenarioConfig::FullVsReduced(c) => &mut c.seed,
            ScenarioConfig::Reproduce3Bank(c) => &mut c.seed,
            ScenarioConfig::ReproduceCoreperiphery(c) => &mut c.seed,
            ScenarioConfig::ReproduceHeatplots(c) => &mut c.seed,
        }
    }

    pub fn seed(&self) -> u64 {
        let mut c = self.clone();
        *c.seed_mut()
    }

    fn fill_defaults(&mut self) {
        match self {
            ScenarioConfig::SimulateFinite(c) => {
                let t = c.network.horizon();
                c.dt.get_or_insert(t / 2000.0);
                c.feedback.get_or_insert_with(|| FeedbackSpec::eisenberg_noe(t));
            }
            ScenarioConfig::Reproduce3Bank(c) => {
                c.dt.get_or_insert(scenarios::three_bank().horizon() / 2000.0);
                c.r2.get_or_insert(scenarios::THREE_BANK.r2);
            }
            ScenarioConfig::ReproduceCoreperiphery(c) => {
                let d = scenarios::full_vs_reduced_config();
                c.runs.get_or_insert(d.runs);
                c.d0.get_or_insert(d.d0);
                c.dt.get_or_insert(d.dt);
                c.r2.get_or_insert(d.r2);
            }
            _ => {}
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            ScenarioConfig::SimulateFinite(c) => {
                check_r2("r2", c.r2)?;
                if c.x0.len() != c.network.n() {
                    return Err(CliError::Validation(format!("config: x0: expected {} entries", c.network.n())));
                }
                if c.runs == 0 {
                    return Err(CliError::Validation("config: runs: must be positive".into()));
                }
            }
            ScenarioConfig::SolveMf(c) | ScenarioConfig::Picard(c) => {
                check_r2("spec.r2", c.spec.r2)?;
                c.spec.validate()?;
                c.mf.validate()?;
            }
            ScenarioConfig::CascadeTest(c) => {
                if c.n_min < 1 || c.n_min > c.n_max || c.n_max > 16 {
                    return Err(CliError::Validation("config: n_min/n_max: need 1 <= n_min <= n_max <= 16".into()));
                }
            }
            ScenarioConfig::ScalingStudy(c) => {
                check_r2("r2", c.r2)?;
                c.validate()?;
            }
            ScenarioConfig::FullVsReduced(c) => {
                check_r2("r2", c.r2)?;
                c.validate()?;
            }
            ScenarioConfig::Reproduce3Bank(c) => check_r2("r2", c.r2.unwrap_or(0.0))?,
            ScenarioConfig::ReproduceCoreperiphery(c) => check_r2("r2", c.r2.unwrap_or(0.0))?,
            ScenarioConfig::ReproduceHeatplots(c) => c.mf.validate()?,
        }
        Ok(())
    }

    /// The resolved config as written to the manifest.
    pub fn to_json(&self) -> Value {
        let v = match self {
            ScenarioConfig::SimulateFinite(c) => serde_json::to_value(c),
            ScenarioConfig::SolveMf(c) | ScenarioConfig::Picard(c) => serde_json::to_value(c),
            ScenarioConfig::CascadeTest(c) => serde_json::to_value(c),
            ScenarioConfig::ScalingStudy(c) => serde_json::to_value(c),
            ScenarioConfig::FullVsReduced(c) => serde_json::to_value(c),
            ScenarioConfig::Reproduce3Bank(c) => serde_json::to_value(c),
            ScenarioConfig::ReproduceCoreperiphery(c) => serde_json::to_value(c),
            ScenarioConfig::ReproduceHeatplots(c) => serde_json::to_value(c),
        };
        v.expect("configs serialize")
    }
}

/// Files written by a run, relative to the output directory.
pub struct RunReport {
    pub files: Vec<PathBuf>,
    pub manifest: PathBuf,
}

/// Parses the config named by `args`, runs it and writes the manifest.
pub fn run_args(args: &Args) -> Result<RunReport> {
    let (text, base) = match &args.config {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| io_err(p, e))?;
            (Some(text), p.parent().map(Path::to_path_buf).unwrap_or_default())
        }
        None => (None, PathBuf::new()),
    };
    let config = ScenarioConfig::parse(args.mode, text.as_deref(), &base, args.seed)?;
    run(args.mode, &config, &args.out)
}

pub fn run(mode: Mode, config: &ScenarioConfig, out: &Path) -> Result<RunReport> {
    fs::create_dir_all(out).map_err(|e| io_err(out, e))?;
    let mut files = dispatch(config, out)?;
    files.sort();
    files.dedup();
    let mut entries = Vec::new();
    for f in &files {
        let bytes = fs::read(f).map_err(|e| io_err(f, e))?;
        let rel = f.strip_prefix(out).unwrap_or(f);
        entries.push(json!({
            "path": rel.to_string_lossy().replace('\\', "/"),
            "bytes": bytes.len(),
            "sha256": hex::encode(Sha256::digest(&bytes)),
        }));
    }
    let manifest = out.join("manifest.json");
    write_json(
        &manifest,
        &json!({
            "mode": mode,
            "config": config.to_json(),
            "seed": config.seed(),
            "versions": { "contagion": contagion::VERSION, "contagion-lab": env!("CARGO_PKG_VERSION") },
            "files": entries,
        }),
    )?;
    let files = files.iter().map(|f| f.strip_prefix(out).unwrap_or(f).to_path_buf()).collect();
    Ok(RunReport { files, manifest })
}

fn dispatch(config: &ScenarioConfig, out: &Path) -> Result<Vec<PathBuf>> {
    match config {
        ScenarioConfig::SimulateFinite(c) => run_simulate(c, out),
        ScenarioConfig::SolveMf(c) => {
            let sol = solve(&c.spec, &c.mf, None, c.seed)?;
            let checks = collect_checks(&c.spec, &c.mf, &sol)?;
            Ok(write_mf_outputs(&sol, &checks, out)?)
        }
        ScenarioConfig::Picard(c) => run_picard(c, out),
        ScenarioConfig::CascadeTest(c) => run_cascade_test(c, out),
        ScenarioConfig::ScalingStudy(c) => {
            let study = run_scaling_study(c)?;
            Ok(write_scaling_outputs(&study, c, out)?)
        }
        ScenarioConfig::FullVsReduced(c) => {
            let report = compare_full_reduced(c)?;
            Ok(write_full_reduced_outputs(&report, c, out)?)
        }
        ScenarioConfig::Reproduce3Bank(c) => run_three_bank(c, out),
        ScenarioConfig::ReproduceCoreperiphery(c) => run_core_periphery(c, out),
        ScenarioConfig::ReproduceHeatplots(c) => {
            let spec = scenarios::heat_plot_spec();
            let sol = solve(&spec, &c.mf, None, c.seed)?;
            let checks = collect_checks(&spec, &c.mf, &sol)?;
            let mut files = write_mf_outputs(&sol, &checks, out)?;
            let p = out.join("spec.json");
            write_json(&p, &spec)?;
            files.push(p);
            Ok(files)
        }
    }
}

fn run_simulate(c: &SimulateFiniteConfig, out: &Path) -> Result<Vec<PathBuf>> {
    let net = match &c.noise {
        Some(noise) => apply_noise(&c.network, noise)?.network,
        None => c.network.clone(),
    };
    let economy = Economy::from_network(&net, &c.x0, c.mu.clone(), c.sigma.clone(), c.rho, c.r2)?;
    let feedback = c.feedback.clone().expect("filled by defaults");
    let mut files = Vec::new();
    for r in 0..c.runs {
        let (seed, common_seed, dir) = if c.runs == 1 {
            (c.seed, c.common_seed, out.to_path_buf())
        } else {
            let seed = contagion::rng::run_seed(c.seed, r as u64);
            let common = contagion::rng::run_seed(c.common_seed, r as u64);
            (seed, common, out.join(format!("run_{r:04}")))
        };
        fs::create_dir_all(&dir).map_err(|e| io_err(&dir, e))?;
        let sim = SimConfig { dt: c.dt.expect("filled by defaults"), seed, common_seed, ..SimConfig::new(net.horizon()) };
        let traj = simulate(&net, &economy, &feedback, &sim)?;
        files.extend(write_trajectory_outputs(&traj, &dir)?);
    }
    Ok(files)
}

fn run_picard(c: &MeanFieldConfig, out: &Path) -> Result<Vec<PathBuf>> {
    let res = picard_solve(&c.spec, &c.mf)?;
    let names: Vec<String> = c.spec.types.iter().enumerate().map(|(l, t)| type_name(&t.name, l)).collect();
    let mut table = CsvTable::new(&["t", "type", "loss"]);
    for (k, &t) in res.times.iter().enumerate() {
        for (l, name) in names.iter().enumerate() {
            table.row(&[fmt17(t), name.clone(), fmt17(res.losses[l][k])]);
        }
    }
    let csv = out.join("picard_losses.csv");
    table.write(&csv)?;
    let report = out.join("picard_report.json");
    write_json(&report, &json!({ "converged": res.converged, "residuals": res.residuals }))?;
    if !res.converged {
        return Err(CliError::Numerical(format!(
            "numerical: loss-path iteration did not converge in {} iterations",
            c.mf.picard_cap
        )));
    }
    Ok(vec![csv, report])
}

fn type_name(name: &str, l: usize) -> String {
    if name.is_empty() {
        format!("type{}", l + 1)
    } else {
        name.to_string()
    }
}

fn run_cascade_test(c: &CascadeTestConfig, out: &Path) -> Result<Vec<PathBuf>> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(c.seed);
    let mut agree = 0usize;
    let mut mismatches = Vec::new();
    let mut cascades = 0usize;
    for k in 0..c.instances {
        let n = c.n_min + k % (c.n_max - c.n_min + 1);
        let inst = random_instance(&mut rng, n)?;
        let report = resolve_cascade(&inst.state);
        let oracle = greatest_clearing_oracle(&inst.state, &inst.network)?;
        let mut got = report.defaulted();
        got.sort_unstable();
        if !report.is_empty() {
            cascades += 1;
        }
        if got == oracle {
            agree += 1;
        } else {
            mismatches.push(json!({ "instance": k, "n": n, "cascade": got, "oracle": oracle }));
        }
    }
    let p = out.join("cascade_test.json");
    write_json(
        &p,
        &json!({ "instances": c.instances, "agreements": agree, "with_defaults": cascades, "mismatches": mismatches }),
    )?;
    Ok(vec![p])
}

fn run_three_bank(c: &ThreeBankConfig, out: &Path) -> Result<Vec<PathBuf>> {
    let net = scenarios::three_bank();
    let p = &scenarios::THREE_BANK;
    let r2 = c.r2.unwrap_or(p.r2);
    let economy = Economy::from_network(
        &net,
        &vec![p.x0; net.n()],
        Piecewise::Constant(p.mu),
        Piecewise::Constant(p.sigma),
        p.rho,
        r2,
    )?;
    let sim = SimConfig {
        dt: c.dt.expect("filled by defaults"),
        seed: c.seed,
        common_seed: c.common_seed,
        ..SimConfig::new(net.horizon())
    };
    let traj = simulate(&net, &economy, &FeedbackSpec::eisenberg_noe(net.horizon()), &sim)?;
    let mut files = write_trajectory_outputs(&traj, out)?;
    let path = out.join("network.json");
    write_json(&path, &net)?;
    files.push(path);
    Ok(files)
}

fn run_core_periphery(c: &CorePeripheryConfig, out: &Path) -> Result<Vec<PathBuf>> {
    let full = scenarios::core_periphery_full();
    let reduced = scenarios::core_periphery_reduced();
    let fac_full = rank_factorize(&full, DEFAULT_REL_TOL)?;
    let fac_reduced = rank_factorize(&reduced, DEFAULT_REL_TOL)?;
    let block = scenarios::two_core_block();
    let atlas = TypeAtlas::from_block(&block, DEFAULT_REL_TOL)?;
    let rank = out.join("rank.json");
    write_json(
        &rank,
        &json!({
            "full": { "k": fac_full.k, "singular_values": fac_full.singular_values },
            "reduced": { "k": fac_reduced.k, "singular_values": fac_reduced.singular_values },
            "rel_tol": DEFAULT_REL_TOL,
        }),
    )?;
    let exposures = out.join("effective_exposures.json");
    write_json(
        &exposures,
        &json!({
            "types": atlas.names,
            "block": block,
            "effective_exposures": atlas.effective_exposures(block.m0()),
            "limit_exposures": atlas.limit_exposures(),
        }),
    )?;
    let cfg = FullReducedConfig {
        runs: c.runs.expect("filled by defaults"),
        d0: c.d0.expect("filled by defaults"),
        dt: c.dt.expect("filled by defaults"),
        r2: c.r2.expect("filled by defaults"),
        seed: c.seed,
        common_seed: c.common_seed,
        ..scenarios::full_vs_reduced_config()
    };
    let report = compare_full_reduced(&cfg)?;
    let mut files = write_full_reduced_outputs(&report, &cfg, out)?;
    // Per-bank default times of every realisation, survivors left empty.
    let mut table = CsvTable::new(&["run", "bank", "full", "reduced"]);
    let cell = |t: f64| if t.is_finite() { fmt17(t) } else { String::new() };
    for row in &report.rows {
        for (i, (a, b)) in row.full_default_times.iter().zip(&row.reduced_default_times).enumerate() {
            table.row(&[row.run.to_string(), (i + 1).to_string(), cell(*a), cell(*b)]);
        }
    }
    let times = out.join("default_times.csv");
    table.write(&times)?;
    files.extend([rank, exposures, times]);
    Ok(files)
}
