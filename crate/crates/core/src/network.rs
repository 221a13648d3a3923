//! Liability networks: core-periphery block construction, size scaling,
//! multiplicative noise, net liabilities and the low-rank channel factorization.

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// Relative singular-value cutoff for exactly low-rank inputs.
pub const DEFAULT_REL_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PeripheryGroup {
    pub size: usize,
    /// Rate owed by each core bank to each member of the group.
    pub core_to_group: Vec<f64>,
    /// Rate owed by each member of the group to each core bank.
    pub group_to_core: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockSpec {
    pub core: Vec<Vec<f64>>,
    #[serde(default)]
    pub groups: Vec<PeripheryGroup>,
    pub societal_rate: f64,
}

impl BlockSpec {
    pub fn core_count(&self) -> usize {
        self.core.len()
    }

    /// Total bank count of the underlying network.
    pub fn m0(&self) -> usize {
        self.core.len() + self.groups.iter().map(|g| g.size).sum::<usize>()
    }

    /// One type per core bank, then one per periphery group.
    pub fn num_types(&self) -> usize {
        self.core.len() + self.groups.len()
    }

    pub fn type_names(&self) -> Vec<String> {
        let core = (0..self.core.len()).map(|c| format!("core{}", c + 1));
        let groups = (0..self.groups.len()).map(|g| format!("periphery{}", g + 1));
        core.chain(groups).collect()
    }

    /// Type index of each bank of the underlying network, in bank order.
    pub fn base_labels(&self) -> Vec<usize> {
        let mc = self.core.len();
        let mut labels: Vec<usize> = (0..mc).collect();
        for (g, group) in self.groups.iter().enumerate() {
            labels.extend(std::iter::repeat(mc + g).take(group.size));
        }
        labels
    }

    /// Number of banks of each type in the underlying network.
    pub fn type_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![1; self.core.len()];
        sizes.extend(self.groups.iter().map(|g| g.size));
        sizes
    }

    pub fn validate(&self) -> Result<()> {
        let mc = self.core.len();
        for (i, row) in self.core.iter().enumerate() {
            if row.len() != mc {
                return Err(Error::validation(format!("core[{i}]: expected {mc} entries")));
            }
            if row[i] != 0.0 {
                return Err(Error::validation(format!("core[{i}][{i}]: diagonal must be 0")));
            }
            if let Some(j) = row.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
                return Err(Error::validation(format!("core[{i}][{j}]: rate must be >= 0")));
            }
        }
        for (g, group) in self.groups.iter().enumerate() {
            for (name, v) in [("core_to_group", &group.core_to_group), ("group_to_core", &group.group_to_core)] {
                if v.len() != mc {
                    return Err(Error::validation(format!("groups[{g}].{name}: expected {mc} entries")));
                }
                if let Some(j) = v.iter().position(|x| !(x.is_finite() && *x >= 0.0)) {
                    return Err(Error::validation(format!("groups[{g}].{name}[{j}]: rate must be >= 0")));
                }
            }
        }
        if !(self.societal_rate.is_finite() && self.societal_rate >= 0.0) {
            return Err(Error::validation("societal_rate: must be >= 0"));
        }
        Ok(())
    }
}

/// Obligation rates between banks plus each bank's rate to the societal node.
/// The societal node owes nothing, so it has no row.
#[derive(Clone, Debug, PartialEq)]
pub struct LiabilityNetwork {
    rates: DMatrix<f64>,
    societal: Vec<f64>,
    horizon: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NetworkJson {
    n: usize,
    #[serde(rename = "T")]
    horizon: f64,
    rates: Vec<Vec<f64>>,
    societal: Vec<f64>,
}

impl Serialize for LiabilityNetwork {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        NetworkJson {
            n: self.n(),
            horizon: self.horizon,
            rates: self.rows(),
            societal: self.societal.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for LiabilityNetwork {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = NetworkJson::deserialize(d)?;
        if raw.rates.len() != raw.n {
            return Err(serde::de::Error::custom(format!("rates: expected {} rows", raw.n)));
        }
        LiabilityNetwork::from_rows(&raw.rates, raw.societal, raw.horizon)
            .map_err(serde::de::Error::custom)
    }
}

impl LiabilityNetwork {
    pub fn new(rates: DMatrix<f64>, societal: Vec<f64>, horizon: f64) -> Result<Self> {
        let n = rates.nrows();
        if rates.ncols() != n {
            return Err(Error::validation("rates: matrix must be square"));
        }
        if societal.len() != n {
            return Err(Error::validation(format!("societal: expected {n} entries")));
        }
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::validation("T: horizon must be positive"));
        }
        for i in 0..n {
            if rates[(i, i)] != 0.0 {
                return Err(Error::validation(format!("rates[{i}][{i}]: diagonal must be 0")));
            }
            for j in 0..n {
                let v = rates[(i, j)];
                if !(v.is_finite() && v >= 0.0) {
                    return Err(Error::validation(format!("rates[{i}][{j}]: rate must be >= 0")));
                }
            }
            if !(societal[i].is_finite() && societal[i] >= 0.0) {
                return Err(Error::validation(format!("societal[{i}]: rate must be >= 0")));
            }
        }
        Ok(LiabilityNetwork { rates, societal, horizon })
    }

    pub fn from_rows(rows: &[Vec<f64>], societal: Vec<f64>, horizon: f64) -> Result<Self> {
        let n = rows.len();
        if let Some(i) = rows.iter().position(|r| r.len() != n) {
            return Err(Error::validation(format!("rates[{i}]: expected {n} entries")));
        }
        let rates = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
        Self::new(rates, societal, horizon)
    }

    pub fn n(&self) -> usize {
        self.rates.nrows()
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Rate at which bank `i` owes bank `j`.
    pub fn rate(&self, i: usize, j: usize) -> f64 {
        self.rates[(i, j)]
    }

    pub fn rates(&self) -> &DMatrix<f64> {
        &self.rates
    }

    pub fn societal(&self) -> &[f64] {
        &self.societal
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.n()).map(|i| self.rates.row(i).iter().copied().collect()).collect()
    }

    /// Total liabilities net of interbank assets over the horizon.
    pub fn net_liability(&self, i: usize) -> Result<f64> {
        if i >= self.n() {
            return Err(Error::validation(format!("bank index {i} out of range (n = {})", self.n())));
        }
        let owed: f64 = self.rates.row(i).iter().sum();
        let owned: f64 = self.rates.column(i).iter().sum();
        let value = self.horizon * (self.societal[i] + owed - owned);
        if value <= 0.0 {
            log::debug!("bank {i} has nonpositive net liability {value}");
        }
        Ok(value)
    }

    /// Net liability per unit time.
    pub fn net_liability_rate(&self, i: usize) -> Result<f64> {
        Ok(self.net_liability(i)? / self.horizon)
    }

    pub fn with_horizon(&self, horizon: f64) -> Result<Self> {
        Self::new(self.rates.clone(), self.societal.clone(), horizon)
    }
}

/// The underlying network of a block spec: core block, periphery rows and
/// columns, zero periphery-periphery block.
pub fn build_block_matrix(spec: &BlockSpec, horizon: f64) -> Result<LiabilityNetwork> {
    spec.validate()?;
    let mc = spec.core_count();
    let m0 = spec.m0();
    let labels = spec.base_labels();
    let rates = DMatrix::from_fn(m0, m0, |i, j| match (i < mc, j < mc) {
        (true, true) => spec.core[i][j],
        (true, false) => spec.groups[labels[j] - mc].core_to_group[i],
        (false, true) => spec.groups[labels[i] - mc].group_to_core[j],
        (false, false) => 0.0,
    });
    LiabilityNetwork::new(rates, vec![spec.societal_rate; m0], horizon)
}

/// Replicates every bank of the underlying network into `m` entities.
///
/// The core copies come first (copy-major), then the periphery copies. Every
/// pair of copies carries the original rate divided by `m`.
pub fn scale_network(base: &LiabilityNetwork, core_count: usize, m: usize) -> Result<LiabilityNetwork> {
    if m == 0 {
        return Err(Error::validation("m: must be at least 1"));
    }
    let m0 = base.n();
    if core_count > m0 {
        return Err(Error::validation("core_count: exceeds bank count"));
    }
    let origin = scaled_origins(m0, core_count, m);
    let n = m * m0;
    let scale = 1.0 / m as f64;
    let rates = DMatrix::from_fn(n, n, |i, j| base.rate(origin[i], origin[j]) * scale);
    let societal = origin.iter().map(|&o| base.societal()[o]).collect();
    LiabilityNetwork::new(rates, societal, base.horizon())
}

/// Underlying bank of each entity of the `m`-fold scaled network.
pub fn scaled_origins(m0: usize, core_count: usize, m: usize) -> Vec<usize> {
    let mp = m0 - core_count;
    let core = (0..m).flat_map(|_| 0..core_count);
    let periphery = (0..m).flat_map(move |_| core_count..core_count + mp);
    core.chain(periphery).collect()
}

/// Law of the multiplicative noise factors (1 + ε).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NoiseDistribution {
    DiracZero,
    Uniform { half_width: f64 },
    Discrete { points: Vec<f64>, weights: Vec<f64> },
}

impl NoiseDistribution {
    pub fn validate(&self) -> Result<()> {
        match self {
            NoiseDistribution::DiracZero => Ok(()),
            NoiseDistribution::Uniform { half_width } => {
                if (0.0..=1.0).contains(half_width) {
                    Ok(())
                } else {
                    Err(Error::validation("half_width: must lie in [0, 1]"))
                }
            }
            NoiseDistribution::Discrete { points, weights } => {
                if points.is_empty() || points.len() != weights.len() {
                    return Err(Error::validation("points/weights: need equal nonzero lengths"));
                }
                if points.iter().any(|p| !(-1.0..=1.0).contains(p)) {
                    return Err(Error::validation("points: support must lie in [-1, 1]"));
                }
                if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
                    return Err(Error::validation("weights: must be >= 0"));
                }
                let total: f64 = weights.iter().sum();
                if (total - 1.0).abs() > 1e-12 {
                    return Err(Error::validation("weights: must sum to 1"));
                }
                let mean: f64 = points.iter().zip(weights).map(|(p, w)| p * w).sum();
                if mean.abs() > 1e-12 {
                    log::warn!("noise law has mean {mean}; rates are biased by that factor on average");
                }
                Ok(())
            }
        }
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        match self {
            NoiseDistribution::DiracZero => 0.0,
            NoiseDistribution::Uniform { half_width } => {
                if *half_width == 0.0 {
                    0.0
                } else {
                    rng.random_range(-half_width..=*half_width)
                }
            }
            NoiseDistribution::Discrete { points, weights } => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                for (p, w) in points.iter().zip(weights) {
                    acc += w;
                    if u < acc {
                        return *p;
                    }
                }
                *points.last().expect("validated nonempty")
            }
        }
    }

    /// Quadrature nodes and weights representing the law; uniform laws use
    /// `nodes` Gauss-Legendre points.
    pub fn quadrature(&self, nodes: usize) -> Vec<(f64, f64)> {
        match self {
            NoiseDistribution::DiracZero => vec![(0.0, 1.0)],
            NoiseDistribution::Uniform { half_width } if *half_width == 0.0 => vec![(0.0, 1.0)],
            NoiseDistribution::Uniform { half_width } => gauss_legendre(nodes.max(1))
                .into_iter()
                .map(|(x, w)| (x * half_width, w / 2.0))
                .collect(),
            NoiseDistribution::Discrete { points, weights } => {
                points.iter().copied().zip(weights.iter().copied()).filter(|(_, w)| *w > 0.0).collect()
            }
        }
    }
}

/// Gauss-Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            // Upward recurrence leaves p1 = P_n(x), p0 = P_{n-1}(x).
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    pub distribution: NoiseDistribution,
    #[serde(default)]
    pub seed: u64,
}

impl NoiseSpec {
    pub fn none() -> Self {
        NoiseSpec { distribution: NoiseDistribution::DiracZero, seed: 0 }
    }
}

#[derive(Clone, Debug)]
pub struct NoisyNetwork {
    pub network: LiabilityNetwork,
    /// Debtor-side factors ε_i.
    pub epsilons: Vec<f64>,
    /// Creditor-side factors δ_j.
    pub deltas: Vec<f64>,
}

/// Multiplies rate (i, j) by (1 + ε_i)(1 + δ_j) with i.i.d. draws.
pub fn apply_noise(net: &LiabilityNetwork, noise: &NoiseSpec) -> Result<NoisyNetwork> {
    noise.distribution.validate()?;
    let n = net.n();
    let mut eps_rng = rng::stream(noise.seed, 1);
    let mut delta_rng = rng::stream(noise.seed, 2);
    let epsilons: Vec<f64> = (0..n).map(|_| noise.distribution.sample(&mut eps_rng)).collect();
    let deltas: Vec<f64> = (0..n).map(|_| noise.distribution.sample(&mut delta_rng)).collect();
    let rates = DMatrix::from_fn(n, n, |i, j| (1.0 + epsilons[i]) * (1.0 + deltas[j]) * net.rate(i, j));
    let network = LiabilityNetwork::new(rates, net.societal().to_vec(), net.horizon())?;
    Ok(NoisyNetwork { network, epsilons, deltas })
}

/// n·λ = U·V with U (n×k) from the left singular vectors and V (k×n) carrying
/// the singular values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankFactorization {
    pub k: usize,
    pub n: usize,
    /// Row-major n×k.
    pub u: Vec<f64>,
    /// Row-major k×n.
    pub v: Vec<f64>,
    pub singular_values: Vec<f64>,
    pub tol: f64,
}

impl RankFactorization {
    pub fn u(&self, i: usize, l: usize) -> f64 {
        self.u[i * self.k + l]
    }

    pub fn v(&self, l: usize, j: usize) -> f64 {
        self.v[l * self.n + j]
    }

    /// Contribution vector of bank `i` (row i of U).
    pub fn u_row(&self, i: usize) -> Vec<f64> {
        (0..self.k).map(|l| self.u(i, l)).collect()
    }

    /// Exposure vector of bank `j` (column j of V).
    pub fn v_col(&self, j: usize) -> Vec<f64> {
        (0..self.k).map(|l| self.v(l, j)).collect()
    }

    /// (U·V)_{ij}, which approximates n·λ_ij.
    pub fn reconstruct(&self, i: usize, j: usize) -> f64 {
        (0..self.k).map(|l| self.u(i, l) * self.v(l, j)).sum()
    }

    /// max_ij |nλ_ij − (UV)_ij|.
    pub fn max_residual(&self, net: &LiabilityNetwork) -> f64 {
        let n = net.n() as f64;
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                worst = worst.max((n * net.rate(i, j) - self.reconstruct(i, j)).abs());
            }
        }
        worst
    }

    /// Builds a factorization from explicit factors (no truncation).
    pub fn from_factors(u_rows: &[Vec<f64>], v_cols: &[Vec<f64>]) -> Result<Self> {
        let n = u_rows.len();
        if v_cols.len() != n {
            return Err(Error::validation("factors: U and V must cover the same banks"));
        }
        let k = u_rows.first().map_or(0, Vec::len);
        if u_rows.iter().chain(v_cols).any(|r| r.len() != k) {
            return Err(Error::validation("factors: inconsistent channel count"));
        }
        let u = u_rows.iter().flatten().copied().collect();
        let mut v = vec![0.0; k * n];
        for (j, col) in v_cols.iter().enumerate() {
            for l in 0..k {
                v[l * n + j] = col[l];
            }
        }
        Ok(RankFactorization { k, n, u, v, singular_values: Vec::new(), tol: 0.0 })
    }
}

pub fn rank_factorize(net: &LiabilityNetwork, rel_tol: f64) -> Result<RankFactorization> {
    if !(rel_tol > 0.0 && rel_tol < 1.0) {
        return Err(Error::validation("rel_tol: must lie in (0, 1)"));
    }
    let n = net.n();
    let scaled = net.rates() * n as f64;
    let empty = RankFactorization { k: 0, n, u: vec![], v: vec![], singular_values: vec![], tol: rel_tol };
    if n == 0 || scaled.iter().all(|v| *v == 0.0) {
        return Ok(empty);
    }
    let svd = scaled.svd(true, true);
    let u_full = svd.u.expect("requested U");
    let vt_full = svd.v_t.expect("requested V^T");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let sigma: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    let k = sigma.iter().take_while(|&&s| s >= rel_tol * sigma[0]).count();

    let mut u = vec![0.0; n * k];
    let mut v = vec![0.0; k * n];
    for (l, &src) in order.iter().take(k).enumerate() {
        let col = u_full.column(src);
        let scale = col.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let first = col.iter().find(|x| x.abs() > 1e-12 * scale).copied().unwrap_or(1.0);
        let sign = if first < 0.0 { -1.0 } else { 1.0 };
        for i in 0..n {
            u[i * k + l] = sign * col[i];
            v[l * n + i] = sign * sigma[l] * vt_full[(src, i)];
        }
    }
    Ok(RankFactorization { k, n, u, v, singular_values: sigma, tol: rel_tol })
}

/// Type structure of an `m`-fold scaled block network.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TypeAtlas {
    pub names: Vec<String>,
    /// Type index of each bank.
    pub labels: Vec<usize>,
    /// Debtor-side noise of each bank.
    pub epsilons: Vec<f64>,
    /// Creditor-side noise of each bank.
    pub deltas: Vec<f64>,
    pub principal_u: Vec<Vec<f64>>,
    pub principal_v: Vec<Vec<f64>>,
    /// Mass fraction of each type.
    pub weights: Vec<f64>,
}

impl TypeAtlas {
    /// Atlas of the noise-free underlying network of `spec`.
    pub fn from_block(spec: &BlockSpec, rel_tol: f64) -> Result<Self> {
        let base = build_block_matrix(spec, 1.0)?;
        let fac = rank_factorize(&base, rel_tol)?;
        let labels = spec.base_labels();
        let nt = spec.num_types();
        let m0 = spec.m0() as f64;
        let mut principal_u = vec![vec![0.0; fac.k]; nt];
        let mut principal_v = vec![vec![0.0; fac.k]; nt];
        for l in 0..nt {
            if let Some(rep) = labels.iter().position(|&x| x == l) {
                principal_u[l] = fac.u_row(rep);
                principal_v[l] = fac.v_col(rep);
            }
        }
        let weights = spec.type_sizes().iter().map(|&s| s as f64 / m0).collect();
        let n = labels.len();
        Ok(TypeAtlas {
            names: spec.type_names(),
            labels,
            epsilons: vec![0.0; n],
            deltas: vec![0.0; n],
            principal_u,
            principal_v,
            weights,
        })
    }

    /// Atlas for the `m`-fold scaled network with the given per-bank noise.
    pub fn scaled(&self, spec: &BlockSpec, m: usize, epsilons: Vec<f64>, deltas: Vec<f64>) -> Result<Self> {
        let origins = scaled_origins(spec.m0(), spec.core_count(), m);
        if epsilons.len() != origins.len() || deltas.len() != origins.len() {
            return Err(Error::validation("noise: one factor per scaled bank required"));
        }
        let base_labels = spec.base_labels();
        Ok(TypeAtlas {
            labels: origins.iter().map(|&o| base_labels[o]).collect(),
            epsilons,
            deltas,
            ..self.clone()
        })
    }

    pub fn num_types(&self) -> usize {
        self.weights.len()
    }

    /// Exact type-structured factorization: u_i = (1+ε_i)ũ, v_i = (1+δ_i)ṽ.
    pub fn factorization(&self) -> Result<RankFactorization> {
        let u: Vec<Vec<f64>> = self
            .labels
            .iter()
            .zip(&self.epsilons)
            .map(|(&l, e)| self.principal_u[l].iter().map(|x| (1.0 + e) * x).collect())
            .collect();
        let v: Vec<Vec<f64>> = self
            .labels
            .iter()
            .zip(&self.deltas)
            .map(|(&l, d)| self.principal_v[l].iter().map(|x| (1.0 + d) * x).collect())
            .collect();
        RankFactorization::from_factors(&u, &v)
    }

    fn dot(&self, i: usize, j: usize) -> f64 {
        self.principal_u[i].iter().zip(&self.principal_v[j]).map(|(a, b)| a * b).sum()
    }

    /// The displayed effective exposure matrix: entry (i, j) is the rate owed
    /// by the whole of type i to the whole of type j, m0·w_i·w_j·(ũ_i·ṽ_j).
    pub fn effective_exposures(&self, m0: usize) -> Vec<Vec<f64>> {
        let nt = self.num_types();
        let m0 = m0 as f64;
        (0..nt)
            .map(|i| (0..nt).map(|j| m0 * self.weights[i] * self.weights[j] * self.dot(i, j)).collect())
            .collect()
    }

    /// Exposure of a single type-j bank to the default fraction of type i in
    /// the large-system limit, w_i·(ũ_i·ṽ_j).
    pub fn limit_exposures(&self) -> Vec<Vec<f64>> {
        let nt = self.num_types();
        (0..nt).map(|i| (0..nt).map(|j| self.weights[i] * self.dot(i, j)).collect()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        for n in 1..8 {
            let q = gauss_legendre(n);
            let total: f64 = q.iter().map(|(_, w)| w).sum();
            assert!((total - 2.0).abs() < 1e-13);
            let deg = 2 * n - 1;
            let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
            let approx: f64 = q.iter().map(|(x, w)| w * x.powi(deg as i32)).sum();
            assert!((approx - exact).abs() < 1e-12, "n={n}");
            let even: f64 = q.iter().map(|(x, w)| w * x.powi(2 * (n as i32 - 1))).sum();
            assert!((even - 2.0 / (2.0 * n as f64 - 1.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn scaled_origins_order_core_first() {
        assert_eq!(scaled_origins(4, 2, 2), vec![0, 1, 0, 1, 2, 3, 2, 3]);
    }
}
