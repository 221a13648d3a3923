use serde::{Deserialize, Serialize};

use super::solver::{DensityField, Model};
use super::spec::MixtureSpec;
use crate::error::Result;

/// Pass/fail of a sufficient condition and its margin 1 − (worst value).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionCheck {
    pub holds: bool,
    pub margin: f64,
    /// Worst tested value and the type where it occurs.
    pub worst: f64,
    pub worst_type: usize,
}

impl ConditionCheck {
    fn from_worst(worst: f64, worst_type: usize) -> Self {
        ConditionCheck { holds: worst < 1.0, margin: 1.0 - worst, worst, worst_type }
    }
}

/// No-jump condition at the field's time: for every target type l and
/// creditor-side node, Lip(H)·g(t)·Σ_i λ̃_il V^i(y) < 1 for y in the boundary
/// window [0, window·dx].
pub fn check_no_jump(model: &Model, field: &DensityField, window: usize) -> ConditionCheck {
    let nt = model.num_types();
    let g = model.decay.at(field.t);
    let dx = model.grid.dz;
    let mut worst = 0.0f64;
    let mut worst_type = 0;
    for j in 0..=window {
        let y = j as f64 * dx;
        let dens: Vec<f64> = (0..nt).map(|i| field.density(model, i, y)).collect();
        for info in &model.subs {
            let l = info.type_idx;
            let felt: f64 = (0..nt).map(|i| model.exposures[i][l] * dens[i]).sum();
            let q = info.shift.lipschitz() * g * felt;
            if q > worst || (q.is_nan() && !worst.is_nan()) {
                worst = q;
                worst_type = l;
            }
        }
    }
    ConditionCheck::from_worst(worst, worst_type)
}

/// Weak-feedback smallness condition on the initial data:
/// Lip(H)·g(0)·Σ_i λ̃_il ‖V₀ⁱ‖∞ < 1 for every target type and node.
pub fn check_smallness(spec: &MixtureSpec) -> Result<ConditionCheck> {
    spec.validate()?;
    let nt = spec.num_types();
    let ex = spec.exposure_matrix()?;
    let sups: Vec<f64> = spec.laws()?.iter().map(|l| l.sup_norm()).collect();
    let g = spec.decay().at(0.0);
    let nodes = spec.theta.quadrature(spec.theta_nodes);
    let mut worst = 0.0f64;
    let mut worst_type = 0;
    for l in 0..nt {
        let felt: f64 = (0..nt).map(|i| if ex[i][l] == 0.0 { 0.0 } else { ex[i][l] * sups[i] }).sum();
        for &(theta, _) in &nodes {
            let q = if felt == 0.0 { 0.0 } else { spec.shift(l).scaled(1.0 + theta).lipschitz() * g * felt };
            if q > worst {
                worst = q;
                worst_type = l;
            }
        }
    }
    Ok(ConditionCheck::from_worst(worst, worst_type))
}

/// Envelope V₀(x) <= C⋆x^β on (0, x⋆) and <= D⋆ beyond.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub beta: f64,
    pub c_star: f64,
    pub x_star: f64,
    pub d_star: f64,
    pub holds: bool,
}

/// Fits the smallest C⋆ for the exponent `beta` on the grid density
/// `values` at x = j·dx. The envelope fails when the density is positive at
/// the boundary, since x^β vanishes there.
pub fn check_initial_decay(values: &[f64], dx: f64, beta: f64, x_star: f64) -> DecayFit {
    let mut c_star = 0.0f64;
    let mut d_star = 0.0f64;
    let mut holds = values.first().is_none_or(|v| *v <= 0.0) && beta > 0.0 && beta <= 1.0;
    for (j, &v) in values.iter().enumerate().skip(1) {
        let x = j as f64 * dx;
        if x < x_star {
            c_star = c_star.max(v / x.powf(beta));
        } else {
            d_star = d_star.max(v);
        }
    }
    if !c_star.is_finite() {
        holds = false;
    }
    DecayFit { beta, c_star, x_star, d_star, holds }
}
