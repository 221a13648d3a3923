//! Interbank default contagion: a finite-n simulator with instantaneous cascade
//! resolution, a mean-field density solver for the large-system limit, and a
//! harness that measures how close the two are.

pub mod convergence;
pub mod error;
pub mod feedback;
pub mod finite_sim;
pub mod io;
pub mod mean_field;
pub mod network;
pub mod piecewise;
pub mod rng;
pub mod scenarios;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
