use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A right-continuous step function of time.
///
/// `values[0]` holds on `[0, breaks[0])`, `values[i]` on `[breaks[i-1], breaks[i])`
/// and the last value from the last break onward.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Piecewise {
    Constant(f64),
    Steps { breaks: Vec<f64>, values: Vec<f64> },
}

impl Piecewise {
    pub fn constant(v: f64) -> Self {
        Piecewise::Constant(v)
    }

    pub fn validate(&self, name: &str) -> Result<()> {
        match self {
            Piecewise::Constant(v) if !v.is_finite() => {
                Err(Error::validation(format!("{name}: value must be finite")))
            }
            Piecewise::Constant(_) => Ok(()),
            Piecewise::Steps { breaks, values } => {
                if values.len() != breaks.len() + 1 {
                    return Err(Error::validation(format!(
                        "{name}: need exactly one more value than breaks"
                    )));
                }
                if breaks.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::validation(format!("{name}: breaks must increase")));
                }
                if values.iter().chain(breaks).any(|v| !v.is_finite()) {
                    return Err(Error::validation(format!("{name}: values must be finite")));
                }
                Ok(())
            }
        }
    }

    pub fn at(&self, t: f64) -> f64 {
        match self {
            Piecewise::Constant(v) => *v,
            Piecewise::Steps { breaks, values } => {
                let idx = breaks.partition_point(|&b| b <= t);
                values[idx]
            }
        }
    }

    /// Exact integral over `[a, b]`, `a <= b`.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        self.integral_of(a, b, |v| v)
    }

    /// Exact integral of the squared function over `[a, b]`.
    pub fn integral_sq(&self, a: f64, b: f64) -> f64 {
        self.integral_of(a, b, |v| v * v)
    }

    fn integral_of(&self, a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
        match self {
            Piecewise::Constant(v) => f(*v) * (b - a),
            Piecewise::Steps { breaks, values } => {
                let mut total = 0.0;
                let mut lo = a;
                let mut idx = breaks.partition_point(|&x| x <= a);
                while lo < b {
                    let hi = if idx < breaks.len() { breaks[idx].min(b) } else { b };
                    total += f(values[idx]) * (hi - lo);
                    lo = hi;
                    idx += 1;
                }
                total
            }
        }
    }

    pub fn max_abs(&self) -> f64 {
        match self {
            Piecewise::Constant(v) => v.abs(),
            Piecewise::Steps { values, .. } => values.iter().fold(0.0, |m, v| m.max(v.abs())),
        }
    }

    pub fn min(&self) -> f64 {
        match self {
            Piecewise::Constant(v) => *v,
            Piecewise::Steps { values, .. } => values.iter().copied().fold(f64::INFINITY, f64::min),
        }
    }
}

impl From<f64> for Piecewise {
    fn from(v: f64) -> Self {
        Piecewise::Constant(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_integral_spans_breaks() {
        let p = Piecewise::Steps { breaks: vec![0.5], values: vec![1.0, 3.0] };
        assert!((p.integral(0.25, 0.75) - (0.25 + 0.75)).abs() < 1e-15);
        assert!((p.integral_sq(0.0, 1.0) - (0.5 + 4.5)).abs() < 1e-15);
        assert_eq!(p.at(0.5), 3.0);
        assert_eq!(p.at(0.49), 1.0);
    }

    #[test]
    fn rejects_mismatched_lengths() {
        let p = Piecewise::Steps { breaks: vec![0.5, 0.6], values: vec![1.0] };
        assert!(p.validate("sigma").is_err());
    }
}
