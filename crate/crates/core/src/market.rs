//! Fee-controlled order flow and the external reference price.

use std::fmt;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pool::SideQuote;

/// Taker direction, seen from the liquidity taker: a buy removes the risky
/// asset from the pool, a sell deposits it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Buy,
    Sell,
}

impl Side {
    pub const BOTH: [Side; 2] = [Side::Buy, Side::Sell];
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Buy => "buy",
            Side::Sell => "sell",
        })
    }
}

/// Baseline intensities and price sensitivities, one entry per venue.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowParams {
    pub lambda_buy: Vec<f64>,
    pub lambda_sell: Vec<f64>,
    /// Sensitivity to the oracle price, per venue.
    pub k0: Vec<f64>,
    /// `k_cross[i][j]`: sensitivity of venue i's flow to venue j's quote.
    /// The diagonal is ignored.
    pub k_cross: Vec<Vec<f64>>,
    /// External half-spread.
    #[serde(default)]
    pub zeta: f64,
}

impl FlowParams {
    /// Every venue gets the same parameters.
    pub fn symmetric(venues: usize, lambda: f64, k0: f64, k_cross: f64) -> Self {
        let k_cross = (0..venues)
            .map(|i| (0..venues).map(|j| if i == j { 0.0 } else { k_cross }).collect())
            .collect();
        Self {
            lambda_buy: vec![lambda; venues],
            lambda_sell: vec![lambda; venues],
            k0: vec![k0; venues],
            k_cross,
            zeta: 0.0,
        }
    }

    pub fn venues(&self) -> usize {
        self.k0.len()
    }

    /// `k^i = k^{i,0} + Σ_{j≠i} k^{i,j}`.
    pub fn k_total(&self, venue: usize) -> f64 {
        self.rival_weights(venue).fold(self.k0[venue], |acc, w| acc + w)
    }

    /// Cross sensitivities of `venue` to each rival, in venue order.
    pub fn rival_weights(&self, venue: usize) -> impl Iterator<Item = f64> + '_ {
        self.k_cross[venue]
            .iter()
            .enumerate()
            .filter(move |(j, _)| *j != venue)
            .map(|(_, &w)| w)
    }

    pub fn baseline(&self, side: Side, venue: usize) -> f64 {
        match side {
            Side::Buy => self.lambda_buy[venue],
            Side::Sell => self.lambda_sell[venue],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.venues();
        if m == 0 {
            return Err(Error::Config("flow parameters name no venues".into()));
        }
        if self.lambda_buy.len() != m
            || self.lambda_sell.len() != m
            || self.k_cross.len() != m
            || self.k_cross.iter().any(|row| row.len() != m)
        {
            return Err(Error::Config(format!(
                "flow parameter vectors must all have length {m}"
            )));
        }
        let all = self
            .lambda_buy
            .iter()
            .chain(&self.lambda_sell)
            .chain(&self.k0)
            .chain(self.k_cross.iter().flatten())
            .chain(std::iter::once(&self.zeta));
        for &v in all {
            if !v.is_finite() {
                return Err(Error::Config("non-finite flow parameter".into()));
            }
        }
        if self.lambda_buy.iter().chain(&self.lambda_sell).any(|&l| l < 0.0) {
            return Err(Error::Config("baseline intensities must be non-negative".into()));
        }
        if self.k0.iter().any(|&k| k <= 0.0) {
            return Err(Error::Config("k0 must be positive".into()));
        }
        for i in 0..m {
            if self.rival_weights(i).any(|w| w < 0.0) {
                return Err(Error::Config("k_cross must be non-negative".into()));
            }
            if self.k_total(i) <= 0.0 {
                return Err(Error::Config(format!("k_total for venue {i} must be positive")));
            }
        }
        Ok(())
    }
}

/// Arrival rate of taker orders at `venue` on `side`.
///
/// `own` is the venue's fee-adjusted quote on that side, `None` when the
/// pool sits at the grid edge and cannot trade in that direction.
/// `rival_rates` are the rivals' fee-free rates `Z_∓` (not their
/// fee-adjusted quotes), in venue order with `venue` skipped.
pub fn intensity(
    side: Side,
    venue: usize,
    own: Option<SideQuote>,
    rival_rates: &[f64],
    s: f64,
    flow: &FlowParams,
) -> Result<f64> {
    if venue >= flow.venues() {
        return Err(Error::InvalidInput(format!("venue {venue} out of range")));
    }
    if rival_rates.len() + 1 != flow.venues() {
        return Err(Error::InvalidInput(format!(
            "expected {} rival rates, got {}",
            flow.venues() - 1,
            rival_rates.len()
        )));
    }
    if !s.is_finite() || rival_rates.iter().any(|r| !r.is_finite()) {
        return Err(Error::InvalidInput("non-finite price input".into()));
    }
    let Some(quote) = own else {
        return Ok(0.0);
    };
    if !quote.rate.is_finite() || !quote.size.is_finite() {
        return Err(Error::InvalidInput("non-finite quote".into()));
    }
    let exponent = mispricing(side, quote, rival_rates.iter().copied(), flow.rival_weights(venue), flow.k0[venue], s, flow.zeta);
    let value = flow.baseline(side, venue) * exponent.exp();
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonFinite(format!("{side} intensity at venue {venue}")))
    }
}

/// Exponent of the controlled intensity:
/// buy:  `[k0((s-ζ) - rate) + Σ k_ij (Z_-^j - rate)] Δ`,
/// sell: `[k0(rate - (s+ζ)) + Σ k_ij (rate - Z_+^j)] Δ`.
#[inline]
pub(crate) fn mispricing(
    side: Side,
    quote: SideQuote,
    rival_rates: impl Iterator<Item = f64>,
    rival_weights: impl Iterator<Item = f64>,
    k0: f64,
    s: f64,
    zeta: f64,
) -> f64 {
    let pairs = rival_rates.zip(rival_weights);
    match side {
        Side::Buy => {
            let cross = pairs.fold(0.0, |acc, (r, w)| acc + w * (r - quote.rate));
            (k0 * ((s - zeta) - quote.rate) + cross) * quote.size
        }
        Side::Sell => {
            let cross = pairs.fold(0.0, |acc, (r, w)| acc + w * (quote.rate - r));
            (k0 * (quote.rate - (s + zeta)) + cross) * quote.size
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OracleMode {
    #[default]
    Constant,
    ArithmeticBrownian,
}

/// `S_t = S_0 + σ W_t`, or constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleSpec {
    pub s0: f64,
    #[serde(default)]
    pub sigma: f64,
    #[serde(default)]
    pub mode: OracleMode,
}

impl OracleSpec {
    pub fn constant(s0: f64) -> Self {
        Self {
            s0,
            sigma: 0.0,
            mode: OracleMode::Constant,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.s0.is_finite() && self.s0 > 0.0) {
            return Err(Error::Config(format!("oracle s0 must be positive, got {}", self.s0)));
        }
        if !(self.sigma.is_finite() && self.sigma >= 0.0) {
            return Err(Error::Config(format!(
                "oracle sigma must be non-negative, got {}",
                self.sigma
            )));
        }
        Ok(())
    }

    pub fn is_deterministic(&self) -> bool {
        self.mode == OracleMode::Constant || self.sigma == 0.0
    }

    /// Advance the price over one step of length `dt`.
    #[inline]
    pub(crate) fn step<R: Rng + ?Sized>(&self, s: f64, dt: f64, rng: &mut R) -> f64 {
        match self.mode {
            OracleMode::Constant => s,
            OracleMode::ArithmeticBrownian => {
                let z: f64 = rng.sample(StandardNormal);
                s + self.sigma * dt.sqrt() * z
            }
        }
    }
}

/// Oracle path on `times` (increasing, starting at 0).
pub fn sample_oracle<R: Rng + ?Sized>(
    spec: &OracleSpec,
    times: &[f64],
    rng: &mut R,
) -> Result<Vec<f64>> {
    spec.validate()?;
    match times.first() {
        Some(&0.0) => {}
        _ => return Err(Error::InvalidInput("time grid must start at 0".into())),
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidInput("time grid must be increasing".into()));
    }
    let mut path = Vec::with_capacity(times.len());
    let mut s = spec.s0;
    path.push(s);
    for w in times.windows(2) {
        s = spec.step(s, w[1] - w[0], rng);
        path.push(s);
    }
    Ok(path)
}
