//! Fairness-constrained neural classification trained as a min-max game
//! over network weights and a Lagrange multiplier.

pub mod audit;
pub mod data;
pub mod error;
pub mod fairloss;
pub mod gradcheck;
pub mod lagrange;
pub mod model;
pub mod numcore;
pub mod synth;

pub use error::{Error, Result};
