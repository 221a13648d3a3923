//! Loss feedback: the map F turning accumulated weighted losses into a downward
//! shift of the distance-to-default, and the weight g(t) applied to losses
//! arriving at time t.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FeedbackMap {
    /// Per-bank balance-sheet feedback: the distance is measured against
    /// ΛT + T(1 − R₂)·z, which is log1p_scaled((1 − R₂)/Λ) whenever Λ > 0.
    EisenbergNoe,
    /// z ↦ log(1 + C z).
    Log1pScaled { scale: f64 },
    /// z ↦ α z.
    Linear { slope: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Decay {
    /// s ↦ 1 − s/T.
    LinearDecay { horizon: f64 },
    Constant { value: f64 },
}

impl Decay {
    pub fn at(&self, t: f64) -> f64 {
        match *self {
            Decay::LinearDecay { horizon } => 1.0 - t / horizon,
            Decay::Constant { value } => value,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Decay::LinearDecay { horizon } if !(horizon > 0.0 && horizon.is_finite()) => {
                Err(Error::validation("decay.horizon: must be positive"))
            }
            Decay::Constant { value } if !(value >= 0.0 && value.is_finite()) => {
                Err(Error::validation("decay.value: must be >= 0"))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeedbackSpec {
    pub map: FeedbackMap,
    pub decay: Decay,
}

impl FeedbackSpec {
    pub fn eisenberg_noe(horizon: f64) -> Self {
        FeedbackSpec { map: FeedbackMap::EisenbergNoe, decay: Decay::LinearDecay { horizon } }
    }

    pub fn validate(&self) -> Result<()> {
        self.decay.validate()?;
        match self.map {
            FeedbackMap::Log1pScaled { scale } if !(scale >= 0.0 && scale.is_finite()) => {
                Err(Error::validation("map.scale: must be >= 0"))
            }
            FeedbackMap::Linear { slope } if !(slope >= 0.0 && slope.is_finite()) => {
                Err(Error::validation("map.slope: must be >= 0"))
            }
            _ => Ok(()),
        }
    }

    /// Resolves the map for one bank with net liability rate `lambda`.
    pub fn for_bank(&self, lambda: f64, r2: f64, horizon: f64) -> Shift {
        match self.map {
            FeedbackMap::EisenbergNoe => Shift::Liability { base: lambda * horizon, weight: horizon * (1.0 - r2) },
            FeedbackMap::Log1pScaled { scale } => Shift::Log1p { scale },
            FeedbackMap::Linear { slope } => Shift::Linear { slope },
        }
    }
}

/// A resolved increasing level function H with X = Y − H(z).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Shift {
    /// H(z) = log(base + weight·z); −∞ while the argument is nonpositive.
    Liability { base: f64, weight: f64 },
    /// H(z) = log(1 + scale·z).
    Log1p { scale: f64 },
    /// H(z) = slope·z.
    Linear { slope: f64 },
}

impl Shift {
    pub fn level(&self, z: f64) -> f64 {
        match *self {
            Shift::Liability { base, weight } => {
                let arg = base + weight * z;
                if arg > 0.0 {
                    arg.ln()
                } else {
                    f64::NEG_INFINITY
                }
            }
            Shift::Log1p { scale } => (scale * z).ln_1p(),
            Shift::Linear { slope } => slope * z,
        }
    }

    /// H(z + dz) − H(z), the downward move of the distance caused by an extra
    /// weighted loss `dz` on top of `z`.
    pub fn increment(&self, z: f64, dz: f64) -> f64 {
        if dz == 0.0 {
            return 0.0;
        }
        match *self {
            Shift::Liability { base, weight } => {
                let a = base + weight * z;
                if a > 0.0 {
                    (weight * dz / a).ln_1p()
                } else {
                    self.level(z + dz) - self.level(z)
                }
            }
            Shift::Log1p { scale } => (scale * dz / (1.0 + scale * z)).ln_1p(),
            Shift::Linear { slope } => slope * dz,
        }
    }

    /// Global Lipschitz constant of H on z >= 0 (infinite for a nonpositive
    /// liability base).
    pub fn lipschitz(&self) -> f64 {
        match *self {
            Shift::Liability { base, weight } if base > 0.0 => weight / base,
            Shift::Liability { weight, .. } if weight == 0.0 => 0.0,
            Shift::Liability { .. } => f64::INFINITY,
            Shift::Log1p { scale } => scale,
            Shift::Linear { slope } => slope,
        }
    }

    /// Same map with the loss argument scaled by `factor`.
    pub fn scaled(&self, factor: f64) -> Shift {
        match *self {
            Shift::Liability { base, weight } => Shift::Liability { base, weight: weight * factor },
            Shift::Log1p { scale } => Shift::Log1p { scale: scale * factor },
            Shift::Linear { slope } => Shift::Linear { slope: slope * factor },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn liability_shift_matches_log1p_when_base_positive() {
        let en = Shift::Liability { base: 2.0, weight: 0.9 };
        let lp = Shift::Log1p { scale: 0.45 };
        for (z, dz) in [(0.0, 1.0), (1.5, 0.3), (4.0, 10.0)] {
            assert!((en.increment(z, dz) - lp.increment(z, dz)).abs() < 1e-14);
        }
    }

    #[test]
    fn negative_base_becomes_finite_once_losses_exceed_it() {
        let s = Shift::Liability { base: -1.0, weight: 1.0 };
        assert_eq!(s.level(0.5), f64::NEG_INFINITY);
        assert!((s.level(3.0) - 2f64.ln()).abs() < 1e-15);
    }
}
