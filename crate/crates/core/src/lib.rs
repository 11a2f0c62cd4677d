//! Equilibrium dynamic fees for competing constant-product market makers,
//! and a Monte Carlo simulator of fee-controlled order flow.

pub mod acceptance;
pub mod equilibrium;
pub mod error;
pub mod experiment;
pub mod market;
pub mod metrics;
pub mod pool;
pub mod simulator;

pub use error::{Error, Result};
