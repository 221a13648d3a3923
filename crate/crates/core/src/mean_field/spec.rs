use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::feedback::{Decay, FeedbackMap, FeedbackSpec, Shift};
use crate::network::NoiseDistribution;
use crate::piecewise::Piecewise;

/// Law of a type's initial external assets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AssetDensity {
    /// shift + exp(N(log_mean, log_sd²)).
    LogNormal { shift: f64, log_mean: f64, log_sd: f64 },
    Uniform { lo: f64, hi: f64 },
}

impl AssetDensity {
    fn lower(&self) -> f64 {
        match *self {
            AssetDensity::LogNormal { shift, .. } => shift,
            AssetDensity::Uniform { lo, .. } => lo,
        }
    }

    fn upper(&self) -> f64 {
        match *self {
            AssetDensity::LogNormal { shift, log_mean, log_sd } => shift + (log_mean + 9.0 * log_sd).exp(),
            AssetDensity::Uniform { hi, .. } => hi,
        }
    }

    pub fn pdf(&self, a: f64) -> f64 {
        match *self {
            AssetDensity::LogNormal { shift, log_mean, log_sd } => {
                let y = a - shift;
                if y <= 0.0 {
                    return 0.0;
                }
                let z = (y.ln() - log_mean) / log_sd;
                (-0.5 * z * z).exp() / (log_sd * y * (2.0 * std::f64::consts::PI).sqrt())
            }
            AssetDensity::Uniform { lo, hi } => {
                if a > lo && a < hi {
                    1.0 / (hi - lo)
                } else {
                    0.0
                }
            }
        }
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        match *self {
            AssetDensity::LogNormal { shift, log_mean, log_sd } => {
                let z: f64 = StandardNormal.sample(rng);
                shift + (log_mean + log_sd * z).exp()
            }
            AssetDensity::Uniform { lo, hi } => rng.random_range(lo..hi),
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            AssetDensity::LogNormal { shift, log_mean, log_sd } => {
                shift.is_finite() && log_mean.is_finite() && log_sd > 0.0 && log_sd.is_finite()
            }
            AssetDensity::Uniform { lo, hi } => lo.is_finite() && hi.is_finite() && lo < hi,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::validation("initial.density: invalid asset law parameters"))
        }
    }
}

/// Initial law of a type's distance-to-default, given directly or through its
/// external assets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialDensity {
    /// N(mean, sd²) conditioned on x > 0.
    Gaussian { mean: f64, sd: f64 },
    /// Gamma(shape, scale); behaves like x^(shape−1) at the boundary.
    Gamma { shape: f64, scale: f64 },
    Uniform { lo: f64, hi: f64 },
    /// Piecewise-linear through `values` at x = j·dx, zero beyond; normalised.
    Grid { dx: f64, values: Vec<f64> },
    /// Change of variables from an asset law; needs the type's `lambda`.
    Assets { density: AssetDensity, mu: Piecewise },
}

/// An initial law with every constant resolved.
#[derive(Clone, Debug)]
pub struct InitialLaw {
    kind: InitialDensity,
    /// Gaussian tail mass, Gamma log-normaliser, grid mass, or the asset
    /// value at the boundary, depending on the kind.
    constant: f64,
}

impl InitialLaw {
    pub fn new(kind: &InitialDensity, lambda: Option<f64>, horizon: f64) -> Result<Self> {
        let constant = match kind {
            InitialDensity::Gaussian { mean, sd } => {
                if !(mean.is_finite() && *sd > 0.0 && sd.is_finite()) {
                    return Err(Error::validation("initial: gaussian needs finite mean and sd > 0"));
                }
                let tail = 0.5 * erfc(-mean / (sd * std::f64::consts::SQRT_2));
                if tail < 1e-3 {
                    return Err(Error::validation("initial: gaussian puts under 0.1% of its mass on x > 0"));
                }
                tail
            }
            InitialDensity::Gamma { shape, scale } => {
                if !(*shape > 0.0 && *scale > 0.0 && shape.is_finite() && scale.is_finite()) {
                    return Err(Error::validation("initial: gamma needs shape > 0 and scale > 0"));
                }
                ln_gamma(*shape) + shape * scale.ln()
            }
            InitialDensity::Uniform { lo, hi } => {
                if !(*lo >= 0.0 && lo < hi && hi.is_finite()) {
                    return Err(Error::validation("initial: uniform needs 0 <= lo < hi"));
                }
                hi - lo
            }
            InitialDensity::Grid { dx, values } => {
                if !(*dx > 0.0) || values.len() < 2 || values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                    return Err(Error::validation("initial: grid needs dx > 0 and at least two nonnegative values"));
                }
                if values[0] != 0.0 {
                    log::debug!("initial grid density is positive at the boundary");
                }
                let mass = values.windows(2).map(|w| 0.5 * (w[0] + w[1]) * dx).sum::<f64>();
                if !(mass > 0.0) {
                    return Err(Error::validation("initial: grid density has no mass"));
                }
                mass
            }
            InitialDensity::Assets { density, mu } => {
                density.validate()?;
                mu.validate("initial.mu")?;
                let lambda = lambda
                    .filter(|l| *l > 0.0 && l.is_finite())
                    .ok_or_else(|| Error::validation("lambda: asset-based initial law needs lambda > 0"))?;
                let boundary = lambda * horizon * (-mu.integral(0.0, horizon)).exp();
                if density.lower() < boundary * (1.0 - 1e-12) {
                    return Err(Error::validation(format!(
                        "initial: asset law reaches {} at or below the default boundary {boundary} at t = 0",
                        density.lower()
                    )));
                }
                boundary
            }
        };
        Ok(InitialLaw { kind: kind.clone(), constant })
    }

    /// Density at distance `x`; zero for x <= 0 except the right limit at 0.
    pub fn pdf(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        match &self.kind {
            InitialDensity::Gaussian { mean, sd } => {
                let z = (x - mean) / sd;
                (-0.5 * z * z).exp() / (sd * (2.0 * std::f64::consts::PI).sqrt() * self.constant)
            }
            InitialDensity::Gamma { shape, scale } => {
                if x == 0.0 {
                    return match shape.partial_cmp(&1.0) {
                        Some(std::cmp::Ordering::Less) => f64::INFINITY,
                        Some(std::cmp::Ordering::Equal) => 1.0 / scale,
                        _ => 0.0,
                    };
                }
                ((shape - 1.0) * x.ln() - x / scale - self.constant).exp()
            }
            InitialDensity::Uniform { lo, hi } => {
                if x >= *lo && x < *hi {
                    1.0 / self.constant
                } else {
                    0.0
                }
            }
            InitialDensity::Grid { dx, values } => {
                let pos = x / dx;
                let j = pos.floor() as usize;
                if j + 1 >= values.len() {
                    return if j + 1 == values.len() && pos == j as f64 { values[j] / self.constant } else { 0.0 };
                }
                let f = pos - j as f64;
                ((1.0 - f) * values[j] + f * values[j + 1]) / self.constant
            }
            InitialDensity::Assets { density, .. } => {
                let a = self.constant * x.exp();
                density.pdf(a) * a
            }
        }
    }

    /// A point beyond which the law carries negligible mass.
    pub fn support_max(&self) -> f64 {
        match &self.kind {
            InitialDensity::Gaussian { mean, sd } => (mean + 9.0 * sd).max(9.0 * sd),
            InitialDensity::Gamma { shape, scale } => shape * scale + 14.0 * shape.sqrt() * scale + 40.0 * scale,
            InitialDensity::Uniform { hi, .. } => *hi,
            InitialDensity::Grid { dx, values } => dx * (values.len() - 1) as f64,
            InitialDensity::Assets { density, .. } => (density.upper() / self.constant).ln().max(0.0),
        }
    }

    /// Supremum of the density, located numerically on a fine grid.
    pub fn sup_norm(&self) -> f64 {
        let top = self.support_max();
        let n = 20_000;
        (0..=n).map(|j| self.pdf(top * j as f64 / n as f64)).fold(0.0, f64::max)
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        match &self.kind {
            InitialDensity::Gaussian { mean, sd } => loop {
                let z: f64 = StandardNormal.sample(rng);
                let x = mean + sd * z;
                if x > 0.0 {
                    break x;
                }
            },
            InitialDensity::Gamma { shape, scale } => loop {
                let x = Gamma::new(*shape, *scale).expect("validated gamma").sample(rng);
                if x > 0.0 {
                    break x;
                }
            },
            InitialDensity::Uniform { lo, hi } => loop {
                let x = rng.random_range(*lo..*hi);
                if x > 0.0 {
                    break x;
                }
            },
            InitialDensity::Grid { dx, values } => {
                // Inverse transform through the piecewise-linear CDF.
                let target = rng.random::<f64>() * self.constant;
                let mut acc = 0.0;
                for (j, w) in values.windows(2).enumerate() {
                    let cell = 0.5 * (w[0] + w[1]) * dx;
                    if acc + cell >= target && cell > 0.0 {
                        let r = target - acc;
                        // Solve w0·s + (w1 − w0)·s²/(2dx) = r for s in [0, dx].
                        let slope = (w[1] - w[0]) / dx;
                        let s = if slope.abs() < 1e-14 * (w[0] + w[1]) {
                            r / w[0]
                        } else {
                            (-(w[0]) + (w[0] * w[0] + 2.0 * slope * r).max(0.0).sqrt()) / slope
                        };
                        return (j as f64 * dx + s.clamp(0.0, *dx)).max(f64::MIN_POSITIVE);
                    }
                    acc += cell;
                }
                dx * (values.len() - 1) as f64
            }
            InitialDensity::Assets { density, .. } => loop {
                let x = (density.sample(rng) / self.constant).ln();
                if x > 0.0 {
                    break x;
                }
            },
        }
    }
}

/// Initial distance density on the grid {j·dx : j = 0..=n} obtained from an
/// asset law by the change of variables x = log(a / (ΛT e^{−∫μ})).
pub fn init_density(
    asset: &AssetDensity,
    lambda: f64,
    mu: &Piecewise,
    horizon: f64,
    dx: f64,
    n: usize,
) -> Result<Vec<f64>> {
    let law = InitialLaw::new(
        &InitialDensity::Assets { density: asset.clone(), mu: mu.clone() },
        Some(lambda),
        horizon,
    )?;
    Ok((0..=n).map(|j| law.pdf(j as f64 * dx)).collect())
}

/// One type of the mixture.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TypeSpec {
    #[serde(default)]
    pub name: String,
    /// Mass fraction of the type.
    pub weight: f64,
    /// Debtor-side principal vector.
    #[serde(default)]
    pub u: Vec<f64>,
    /// Creditor-side principal vector.
    #[serde(default)]
    pub v: Vec<f64>,
    /// Drift of the distance-to-default; −σ²/2 when absent.
    #[serde(default)]
    pub drift: Option<Piecewise>,
    pub sigma: Piecewise,
    /// Net liability rate; required by the balance-sheet feedback map and by
    /// asset-based initial laws.
    #[serde(default)]
    pub lambda: Option<f64>,
    pub initial: InitialDensity,
}

fn default_theta() -> NoiseDistribution {
    NoiseDistribution::DiracZero
}

fn default_theta_nodes() -> usize {
    5
}

/// A finite mixture of bank types in the large-system limit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixtureSpec {
    pub horizon: f64,
    pub types: Vec<TypeSpec>,
    /// Entry [i][l]: loss felt by a type-l bank per unit default fraction of
    /// type i. Computed as w_i·(u_i·v_l) when absent.
    #[serde(default)]
    pub exposures: Option<Vec<Vec<f64>>>,
    pub feedback: FeedbackSpec,
    #[serde(default)]
    pub r2: f64,
    #[serde(default)]
    pub rho: f64,
    /// Law of the creditor-side factor (1 + θ).
    #[serde(default = "default_theta")]
    pub theta: NoiseDistribution,
    #[serde(default = "default_theta_nodes")]
    pub theta_nodes: usize,
}

impl MixtureSpec {
    pub fn num_types(&self) -> usize {
        self.types.len()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::validation("horizon: must be positive"));
        }
        if self.types.is_empty() {
            return Err(Error::validation("types: need at least one type"));
        }
        if !(self.rho > -1.0 && self.rho < 1.0) {
            return Err(Error::validation("rho: must lie in (-1, 1)"));
        }
        if !(0.0..=1.0).contains(&self.r2) {
            return Err(Error::validation("r2: must lie in [0, 1]"));
        }
        self.feedback.validate()?;
        self.theta.validate().map_err(|e| Error::validation(format!("theta.{}", strip(&e))))?;
        if self.theta_nodes == 0 {
            return Err(Error::validation("theta_nodes: must be positive"));
        }
        let total: f64 = self.types.iter().map(|t| t.weight).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::validation(format!("types: weights sum to {total}, not 1")));
        }
        for (l, t) in self.types.iter().enumerate() {
            if !(t.weight > 0.0) {
                return Err(Error::validation(format!("types[{l}].weight: must be positive")));
            }
            t.sigma.validate(&format!("types[{l}].sigma"))?;
            if t.sigma.min() <= 0.0 {
                return Err(Error::validation(format!("types[{l}].sigma: must be positive")));
            }
            if let Some(d) = &t.drift {
                d.validate(&format!("types[{l}].drift"))?;
            }
            if matches!(self.feedback.map, FeedbackMap::EisenbergNoe) && !t.lambda.is_some_and(|x| x > 0.0) {
                return Err(Error::validation(format!(
                    "types[{l}].lambda: balance-sheet feedback needs lambda > 0"
                )));
            }
            InitialLaw::new(&t.initial, t.lambda, self.horizon)
                .map_err(|e| Error::validation(format!("types[{l}].{}", strip(&e))))?;
        }
        let ex = self.exposure_matrix()?;
        if ex.iter().flatten().any(|x| !(x.is_finite() && *x >= 0.0)) {
            return Err(Error::validation("exposures: entries must be finite and >= 0"));
        }
        Ok(())
    }

    /// Exposure matrix [i][l], explicit or built from the principal vectors.
    pub fn exposure_matrix(&self) -> Result<Vec<Vec<f64>>> {
        let nt = self.num_types();
        if let Some(ex) = &self.exposures {
            if ex.len() != nt || ex.iter().any(|r| r.len() != nt) {
                return Err(Error::validation(format!("exposures: must be {nt}×{nt}")));
            }
            return Ok(ex.clone());
        }
        let k = self.types[0].u.len();
        if k == 0 || self.types.iter().any(|t| t.u.len() != k || t.v.len() != k) {
            return Err(Error::validation(
                "exposures: give the matrix or equal-length u and v vectors for every type",
            ));
        }
        Ok((0..nt)
            .map(|i| {
                (0..nt)
                    .map(|l| {
                        let dot: f64 = self.types[i].u.iter().zip(&self.types[l].v).map(|(a, b)| a * b).sum();
                        self.types[i].weight * dot
                    })
                    .collect()
            })
            .collect())
    }

    /// Feedback level function of type `l` before creditor-side scaling.
    pub fn shift(&self, l: usize) -> Shift {
        let lambda = self.types[l].lambda.unwrap_or(1.0);
        self.feedback.for_bank(lambda, self.r2, self.horizon)
    }

    pub fn decay(&self) -> Decay {
        self.feedback.decay
    }

    pub fn drift_at(&self, l: usize, t: f64) -> f64 {
        let t_ = &self.types[l];
        match &t_.drift {
            Some(d) => d.at(t),
            None => -0.5 * t_.sigma.at(t).powi(2),
        }
    }

    pub fn laws(&self) -> Result<Vec<InitialLaw>> {
        self.types.iter().map(|t| InitialLaw::new(&t.initial, t.lambda, self.horizon)).collect()
    }
}

fn strip(e: &Error) -> String {
    match e {
        Error::Validation(m) | Error::Numerical(m) => m.clone(),
        other => other.to_string(),
    }
}

/// Shock sizes for the cascade limit: start, start·decay, … down to min.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpsSchedule {
    pub start: f64,
    pub decay: f64,
    pub min: f64,
}

impl Default for EpsSchedule {
    fn default() -> Self {
        EpsSchedule { start: 1e-3, decay: 0.1, min: 1e-7 }
    }
}

impl EpsSchedule {
    pub fn values(&self) -> Vec<f64> {
        let mut out = Vec::new();
        let mut e = self.start;
        while e > self.min * (1.0 + 1e-9) {
            out.push(e);
            e *= self.decay;
        }
        out.push(self.min);
        out
    }
}

fn d_dx() -> f64 {
    0.01
}
fn d_inner_tol() -> f64 {
    1e-13
}
fn d_inner_cap() -> usize {
    50
}
fn d_cascade_tol() -> f64 {
    1e-12
}
fn d_cascade_cap() -> usize {
    200_000
}
fn d_mass_tol() -> f64 {
    1e-10
}
fn d_tail_tol() -> f64 {
    1e-6
}
fn d_window() -> usize {
    10
}
fn d_picard_tol() -> f64 {
    1e-10
}
fn d_picard_cap() -> usize {
    200
}

/// Discretisation and tolerance settings of the density solver.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MFConfig {
    #[serde(default = "d_dx")]
    pub dx: f64,
    /// Time step; the largest stable step (times 0.9) dividing T when absent.
    #[serde(default)]
    pub dt: Option<f64>,
    /// Right edge of the grid; initial support plus six diffusion widths plus
    /// drift transport when absent.
    #[serde(default)]
    pub x_max: Option<f64>,
    #[serde(default)]
    pub eps_schedule: EpsSchedule,
    #[serde(default = "d_inner_tol")]
    pub inner_tol: f64,
    #[serde(default = "d_inner_cap")]
    pub inner_cap: usize,
    #[serde(default = "d_cascade_tol")]
    pub cascade_tol: f64,
    #[serde(default = "d_cascade_cap")]
    pub cascade_cap: usize,
    #[serde(default = "d_mass_tol")]
    pub mass_tol: f64,
    /// Per-step loss increment that hands the step to the cascade resolver;
    /// 10·√dt·σ_max·max(1, ‖V₀‖∞) when absent.
    #[serde(default)]
    pub explosion_threshold: Option<f64>,
    #[serde(default = "d_tail_tol")]
    pub tail_tol: f64,
    /// Width of the boundary window of the no-jump check, in cells.
    #[serde(default = "d_window")]
    pub no_jump_window: usize,
    #[serde(default)]
    pub snapshot_times: Vec<f64>,
    #[serde(default = "d_picard_tol")]
    pub picard_tol: f64,
    #[serde(default = "d_picard_cap")]
    pub picard_cap: usize,
}

impl Default for MFConfig {
    fn default() -> Self {
        MFConfig {
            dx: d_dx(),
            dt: None,
            x_max: None,
            eps_schedule: EpsSchedule::default(),
            inner_tol: d_inner_tol(),
            inner_cap: d_inner_cap(),
            cascade_tol: d_cascade_tol(),
            cascade_cap: d_cascade_cap(),
            mass_tol: d_mass_tol(),
            explosion_threshold: None,
            tail_tol: d_tail_tol(),
            no_jump_window: d_window(),
            snapshot_times: Vec::new(),
            picard_tol: d_picard_tol(),
            picard_cap: d_picard_cap(),
        }
    }
}

impl MFConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("dx", self.dx),
            ("inner_tol", self.inner_tol),
            ("cascade_tol", self.cascade_tol),
            ("mass_tol", self.mass_tol),
            ("tail_tol", self.tail_tol),
            ("picard_tol", self.picard_tol),
            ("eps_schedule.start", self.eps_schedule.start),
            ("eps_schedule.min", self.eps_schedule.min),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::validation(format!("{name}: must be positive")));
            }
        }
        for (name, v) in [("dt", self.dt), ("x_max", self.x_max), ("explosion_threshold", self.explosion_threshold)] {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(Error::validation(format!("{name}: must be positive")));
                }
            }
        }
        if !(self.eps_schedule.decay > 0.0 && self.eps_schedule.decay < 1.0) {
            return Err(Error::validation("eps_schedule.decay: must lie in (0, 1)"));
        }
        if self.eps_schedule.min > self.eps_schedule.start {
            return Err(Error::validation("eps_schedule.min: must not exceed start"));
        }
        if self.inner_cap == 0 || self.cascade_cap == 0 || self.picard_cap == 0 || self.no_jump_window == 0 {
            return Err(Error::validation("caps and window: must be positive"));
        }
        Ok(())
    }
}
