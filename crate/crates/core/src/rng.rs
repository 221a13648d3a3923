//! Seeded random streams.
//!
//! Every stream is a ChaCha8 generator keyed by a 64-bit seed and selected by a
//! 64-bit stream id, so runs and banks never share draws and any single stream
//! can be regenerated without replaying the others.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

/// Stream id reserved for the common factor.
pub const COMMON_STREAM: u64 = 0;

pub fn stream(seed: u64, stream_id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id);
    rng
}

/// Seed for run `run` of a batch keyed by `seed` (splitmix64 finaliser).
pub fn run_seed(seed: u64, run: u64) -> u64 {
    let mut z = seed ^ run.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stream id for bank `i`'s idiosyncratic noise.
pub fn bank_stream(i: usize) -> u64 {
    i as u64 + 1
}

/// A sampled path of the common Brownian factor on a uniform grid, starting at 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BrownianPath {
    pub dt: f64,
    pub values: Vec<f64>,
}

impl BrownianPath {
    pub fn generate(seed: u64, dt: f64, steps: usize) -> Self {
        let mut rng = stream(seed, COMMON_STREAM);
        let scale = dt.sqrt();
        let mut values = Vec::with_capacity(steps + 1);
        let mut b = 0.0;
        values.push(b);
        for _ in 0..steps {
            let z: f64 = StandardNormal.sample(&mut rng);
            b += scale * z;
            values.push(b);
        }
        BrownianPath { dt, values }
    }

    pub fn zero(dt: f64, steps: usize) -> Self {
        BrownianPath { dt, values: vec![0.0; steps + 1] }
    }

    pub fn end_time(&self) -> f64 {
        self.dt * (self.values.len() - 1) as f64
    }

    /// Value at `t`, linear between grid points and held flat past the end.
    pub fn at(&self, t: f64) -> f64 {
        let pos = (t / self.dt).max(0.0);
        let last = self.values.len() - 1;
        let k = (pos.floor() as usize).min(last);
        let frac = pos - k as f64;
        if k == last || frac <= 1e-9 {
            return self.values[k];
        }
        if frac >= 1.0 - 1e-9 {
            return self.values[k + 1];
        }
        self.values[k] + frac * (self.values[k + 1] - self.values[k])
    }

    pub fn increment(&self, t0: f64, t1: f64) -> f64 {
        self.at(t1) - self.at(t0)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }
}
