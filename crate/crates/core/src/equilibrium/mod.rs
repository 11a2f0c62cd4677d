//! Approximate Nash-equilibrium fee schedules.
//!
//! With the oracle price frozen and rival inventories treated as parameters
//! of each player's own problem, the transformed value `w = exp(k (v - cash))`
//! of player `h` solves a linear system `∂t w + A w = 0`, `w(T) = 1`, where
//! `A` is tridiagonal over `h`'s inventory grid and depends on the rivals'
//! state. One `A` is built per rival-state tuple; `w(t) = exp(A (T - t)) 1`
//! gives the value, and the first-order conditions give the fees.

mod expm;
mod generator;
mod policy;
mod surface;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use expm::{expm, norm1};
pub use generator::{build_duopoly_generator, build_generator, Generator, GeneratorMode};
pub use policy::{
    column_fee, constant_policy, equilibrium_fees, fit_linear_policy, linear_fit_residual, EquilibriumFees,
    FeePolicy, LinearFees, PolicyKind,
};
pub use surface::{
    column_residual, hjb_residual, solve_duopoly, solve_game, solve_w, value_function,
    Equilibrium, GameInputs, WSurface,
};

/// Uniform time grid on `[0, T]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub horizon: f64,
    pub steps: usize,
}

impl TimeGrid {
    pub fn new(horizon: f64, steps: usize) -> Result<Self> {
        let grid = Self { horizon, steps };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(Error::Config(format!("horizon must be positive, got {}", self.horizon)));
        }
        if self.steps == 0 {
            return Err(Error::Config("time grid needs at least one step".into()));
        }
        Ok(())
    }

    /// Grid from a horizon and a step size that must divide it.
    pub fn from_step(horizon: f64, dt: f64) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::Config(format!("dt must be positive, got {dt}")));
        }
        let ratio = horizon / dt;
        let steps = ratio.round();
        if (ratio - steps).abs() > 1e-9 * ratio.max(1.0) || steps < 1.0 {
            return Err(Error::Config(format!(
                "horizon {horizon} is not an integer multiple of dt {dt}"
            )));
        }
        Self::new(horizon, steps as usize)
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    pub fn points(&self) -> usize {
        self.steps + 1
    }

    pub fn time(&self, k: usize) -> f64 {
        self.horizon * k as f64 / self.steps as f64
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.steps).map(|k| self.time(k)).collect()
    }

    /// Grid point at or immediately before `t`.
    pub fn index_at(&self, t: f64) -> usize {
        let raw = (t / self.dt() * (1.0 + 1e-12)).floor();
        (raw.max(0.0) as usize).min(self.steps)
    }
}

/// Iterates over every state tuple of a mixed-radix lattice, last digit fastest.
pub(crate) fn lattice(dims: &[usize]) -> impl Iterator<Item = Vec<usize>> + '_ {
    let total: usize = dims.iter().product();
    (0..total).map(move |mut flat| {
        let mut digits = vec![0; dims.len()];
        for (d, &n) in digits.iter_mut().zip(dims).rev() {
            *d = flat % n;
            flat /= n;
        }
        digits
    })
}
