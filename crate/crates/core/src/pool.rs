//! Constant-function pool mechanics on a discrete inventory ladder.
//!
//! A pool holds `y` units of the risky asset and `x = φ(y)` units of the
//! riskless one. Inventories live on a grid indexed `-N..=N`; index `j`
//! moves the marginal rate `Z = -φ'(y)` by one `rate_step`. Buying one step
//! moves the pool from `j` to `j - 1` at the average rate `Z_-(j)`, selling
//! one step moves it from `j` to `j + 1` at `Z_+(j)`, and `Z_-(j) = Z_+(j - 1)`
//! because both name the same ladder rung.

use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market::Side;

/// Level function `φ` of a trading function `f(φ(y), y) = depth²`.
pub trait LevelFunction: Send + Sync {
    /// `φ(y)`: riskless holdings at risky holdings `y`.
    fn level(&self, y: f64) -> f64;
    /// `φ'(y)`.
    fn slope(&self, y: f64) -> f64;
    /// The `y` at which the marginal rate `-φ'(y)` equals `rate`.
    fn reserve_at_rate(&self, rate: f64) -> f64;
    /// Closed-form average rate over `[lo, hi]`, when the level function has one.
    fn average_rate(&self, _lo: f64, _hi: f64) -> Option<f64> {
        None
    }
}

/// `φ(y) = p² / y`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantProduct {
    pub depth_sq: f64,
}

impl LevelFunction for ConstantProduct {
    fn level(&self, y: f64) -> f64 {
        self.depth_sq / y
    }

    fn slope(&self, y: f64) -> f64 {
        -self.depth_sq / (y * y)
    }

    fn reserve_at_rate(&self, rate: f64) -> f64 {
        (self.depth_sq / rate).sqrt()
    }

    fn average_rate(&self, lo: f64, hi: f64) -> Option<f64> {
        Some(self.depth_sq / (lo * hi))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TradingFunction {
    #[default]
    ConstantProduct,
}

fn default_rate_step() -> f64 {
    0.1
}

fn default_center_rate() -> f64 {
    100.0
}

fn default_halfwidth() -> usize {
    20
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoolSpec {
    /// `p²`, in units of X·Y.
    pub depth_sq: f64,
    #[serde(default)]
    pub kind: TradingFunction,
    #[serde(default = "default_halfwidth")]
    pub grid_halfwidth: usize,
    /// Marginal-rate move per grid step (X/Y).
    #[serde(default = "default_rate_step")]
    pub rate_step: f64,
    /// Marginal rate at index 0 (X/Y).
    #[serde(default = "default_center_rate")]
    pub center_rate: f64,
}

impl PoolSpec {
    pub fn constant_product(depth_sq: f64, grid_halfwidth: usize) -> Self {
        Self {
            depth_sq,
            kind: TradingFunction::ConstantProduct,
            grid_halfwidth,
            rate_step: default_rate_step(),
            center_rate: default_center_rate(),
        }
    }

    pub fn level_function(&self) -> Box<dyn LevelFunction> {
        match self.kind {
            TradingFunction::ConstantProduct => Box::new(ConstantProduct {
                depth_sq: self.depth_sq,
            }),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.depth_sq, self.rate_step, self.center_rate]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidPool("non-finite parameter".into()));
        }
        if self.depth_sq <= 0.0 {
            return Err(Error::InvalidPool(format!(
                "depth_sq must be positive, got {}",
                self.depth_sq
            )));
        }
        if self.rate_step <= 0.0 {
            return Err(Error::InvalidPool(format!(
                "rate_step must be positive, got {}",
                self.rate_step
            )));
        }
        let n = self.grid_halfwidth as i32;
        let edge = self.rate_at(n);
        if edge <= 0.0 {
            return Err(Error::NonPositiveRate {
                index: n,
                rate: edge,
            });
        }
        Ok(())
    }

    fn rate_at(&self, j: i32) -> f64 {
        self.center_rate - self.rate_step * f64::from(j)
    }
}

/// Marginal, buy and sell rates at one grid index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExchangeRates {
    pub z: f64,
    pub z_buy: Option<f64>,
    pub z_sell: Option<f64>,
}

/// One fee-adjusted side of a quote.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SideQuote {
    /// Execution rate including the fee (X/Y).
    pub rate: f64,
    /// Trade size (Y).
    pub size: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeeAdjustedQuote {
    pub buy_rate: f64,
    pub sell_rate: f64,
    pub buy_size: f64,
    pub sell_size: f64,
}

impl FeeAdjustedQuote {
    pub fn buy(&self) -> SideQuote {
        SideQuote {
            rate: self.buy_rate,
            size: self.buy_size,
        }
    }

    pub fn sell(&self) -> SideQuote {
        SideQuote {
            rate: self.sell_rate,
            size: self.sell_size,
        }
    }
}

/// Immutable inventory ladder with precomputed rates.
///
/// Steps are stored once for the rung between `j - 1` and `j`, so the buy
/// rate at `j` and the sell rate at `j - 1` are the same stored value. One
/// extra rung beyond each edge is kept so that a rival sitting at its own
/// boundary still has a well-defined quoted rate.
#[derive(Debug, Clone)]
pub struct InventoryGrid {
    spec: PoolSpec,
    y: Vec<f64>,
    x: Vec<f64>,
    z: Vec<f64>,
    // rung k joins indices k - N - 1 and k - N; length 2N + 2
    rung_rate: Vec<f64>,
    rung_size: Vec<f64>,
}

impl InventoryGrid {
    pub fn build(spec: &PoolSpec) -> Result<Self> {
        spec.validate()?;
        let level = spec.level_function();
        let n = spec.grid_halfwidth as i32;

        let mut y = Vec::with_capacity(2 * spec.grid_halfwidth + 1);
        for j in -n..=n {
            let rate = spec.rate_at(j);
            if rate <= 0.0 {
                return Err(Error::NonPositiveRate { index: j, rate });
            }
            y.push(level.reserve_at_rate(rate));
        }
        if y.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidPool("inventory grid is not increasing".into()));
        }
        let x: Vec<f64> = y.iter().map(|&v| level.level(v)).collect();
        let z: Vec<f64> = y.iter().map(|&v| -level.slope(v)).collect();

        let mut rung_rate = Vec::with_capacity(y.len() + 1);
        let mut rung_size = Vec::with_capacity(y.len() + 1);

        // lower ghost rung, between -N-1 and -N
        let below = level.reserve_at_rate(spec.rate_at(-n - 1));
        let (r, s) = rung(level.as_ref(), below, y[0], -n)?;
        rung_rate.push(r);
        rung_size.push(s);

        for (k, pair) in y.windows(2).enumerate() {
            let (r, s) = rung(level.as_ref(), pair[0], pair[1], k as i32 - n + 1)?;
            rung_rate.push(r);
            rung_size.push(s);
        }

        // upper ghost rung, between N and N+1; falls back to the edge
        // marginal rate when the grid formula runs out of positive rates
        let above_rate = spec.rate_at(n + 1);
        let last = *y.last().expect("grid is non-empty");
        if above_rate > 0.0 {
            let above = level.reserve_at_rate(above_rate);
            let (r, s) = rung(level.as_ref(), last, above, n + 1)?;
            rung_rate.push(r);
            rung_size.push(s);
        } else {
            rung_rate.push(*z.last().expect("grid is non-empty"));
            rung_size.push(*rung_size.last().expect("at least one rung"));
        }

        Ok(Self {
            spec: spec.clone(),
            y,
            x,
            z,
            rung_rate,
            rung_size,
        })
    }

    pub fn spec(&self) -> &PoolSpec {
        &self.spec
    }

    pub fn halfwidth(&self) -> usize {
        self.spec.grid_halfwidth
    }

    /// Number of grid points, `2N + 1`.
    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn indices(&self) -> std::ops::RangeInclusive<i32> {
        let n = self.spec.grid_halfwidth as i32;
        -n..=n
    }

    pub fn contains(&self, j: i32) -> bool {
        j.unsigned_abs() as usize <= self.spec.grid_halfwidth
    }

    pub(crate) fn pos(&self, j: i32) -> Result<usize> {
        if self.contains(j) {
            Ok((j + self.spec.grid_halfwidth as i32) as usize)
        } else {
            Err(Error::IndexOutOfRange {
                index: j,
                halfwidth: self.spec.grid_halfwidth,
            })
        }
    }

    pub fn y(&self, j: i32) -> Result<f64> {
        Ok(self.y[self.pos(j)?])
    }

    pub fn x(&self, j: i32) -> Result<f64> {
        Ok(self.x[self.pos(j)?])
    }

    pub fn z(&self, j: i32) -> Result<f64> {
        Ok(self.z[self.pos(j)?])
    }

    pub fn y_values(&self) -> &[f64] {
        &self.y
    }

    pub fn exchange_rates(&self, j: i32) -> Result<ExchangeRates> {
        let p = self.pos(j)?;
        Ok(ExchangeRates {
            z: self.z[p],
            z_buy: self.buy_rate_at(p),
            z_sell: self.sell_rate_at(p),
        })
    }

    /// Fee-free buy rate `Z_-(j)` and size `Δ_-(j) = y_j - y_{j-1}`.
    pub fn buy_step(&self, j: i32) -> Result<Option<(f64, f64)>> {
        let p = self.pos(j)?;
        Ok(self.buy_rate_at(p).map(|r| (r, self.rung_size[p])))
    }

    /// Fee-free sell rate `Z_+(j)` and size `Δ_+(j) = y_{j+1} - y_j`.
    pub fn sell_step(&self, j: i32) -> Result<Option<(f64, f64)>> {
        let p = self.pos(j)?;
        Ok(self.sell_rate_at(p).map(|r| (r, self.rung_size[p + 1])))
    }

    /// Buy quote with fee `m`: rate `(1 + m) Z_-(j)`.
    pub fn buy_quote(&self, j: i32, m: f64) -> Result<SideQuote> {
        match self.buy_step(j)? {
            Some((rate, size)) => Ok(SideQuote {
                rate: (1.0 + m) * rate,
                size,
            }),
            None => Err(Error::AtBoundary {
                side: Side::Buy,
                index: j,
            }),
        }
    }

    /// Sell quote with fee `p`: rate `(1 - p) Z_+(j)`.
    pub fn sell_quote(&self, j: i32, p: f64) -> Result<SideQuote> {
        match self.sell_step(j)? {
            Some((rate, size)) => Ok(SideQuote {
                rate: (1.0 - p) * rate,
                size,
            }),
            None => Err(Error::AtBoundary {
                side: Side::Sell,
                index: j,
            }),
        }
    }

    pub fn fee_adjusted_quote(&self, j: i32, m: f64, p: f64) -> Result<FeeAdjustedQuote> {
        let buy = self.buy_quote(j, m)?;
        let sell = self.sell_quote(j, p)?;
        Ok(FeeAdjustedQuote {
            buy_rate: buy.rate,
            sell_rate: sell.rate,
            buy_size: buy.size,
            sell_size: sell.size,
        })
    }

    /// Fee-free rate a rival at `j` quotes to buyers. At the lower edge the
    /// rival cannot sell, and the rung just beyond the grid stands in.
    pub fn rival_buy_rate(&self, j: i32) -> Result<f64> {
        Ok(self.rung_rate[self.pos(j)?])
    }

    /// Fee-free rate a rival at `j` quotes to sellers, extended past the upper edge.
    pub fn rival_sell_rate(&self, j: i32) -> Result<f64> {
        Ok(self.rung_rate[self.pos(j)? + 1])
    }

    // Position-based accessors for the hot loops; `p` is `j + N`.

    #[inline]
    pub(crate) fn buy_rate_at(&self, p: usize) -> Option<f64> {
        (p >= 1).then(|| self.rung_rate[p])
    }

    #[inline]
    pub(crate) fn sell_rate_at(&self, p: usize) -> Option<f64> {
        (p + 1 < self.y.len()).then(|| self.rung_rate[p + 1])
    }

    #[inline]
    pub(crate) fn buy_size_at(&self, p: usize) -> f64 {
        self.rung_size[p]
    }

    #[inline]
    pub(crate) fn sell_size_at(&self, p: usize) -> f64 {
        self.rung_size[p + 1]
    }

    #[inline]
    pub(crate) fn rival_buy_rate_at(&self, p: usize) -> f64 {
        self.rung_rate[p]
    }

    #[inline]
    pub(crate) fn rival_sell_rate_at(&self, p: usize) -> f64 {
        self.rung_rate[p + 1]
    }

    #[inline]
    pub(crate) fn z_at(&self, p: usize) -> f64 {
        self.z[p]
    }

    /// Rate and size of rung `k`, joining positions `k - 1` and `k`; rungs 0
    /// and `len()` are the ghosts beyond each edge.
    #[inline]
    pub(crate) fn rung_at(&self, k: usize) -> (f64, f64) {
        (self.rung_rate[k], self.rung_size[k])
    }

    /// Largest gap between a buy rate and the marginal rate at the same index.
    pub fn max_half_spread(&self) -> f64 {
        (1..self.len())
            .map(|p| self.rung_rate[p] - self.z[p])
            .fold(0.0, f64::max)
    }

    /// Columns: j, y, x, z, z_buy, z_sell, delta_buy, delta_sell. Absent
    /// boundary entries are left empty.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "j,y,x,z,z_buy,z_sell,delta_buy,delta_sell")?;
        for (p, j) in self.indices().enumerate() {
            let opt = |v: Option<f64>| v.map(|v| format!("{v:.12}")).unwrap_or_default();
            let buy = self.buy_rate_at(p);
            let sell = self.sell_rate_at(p);
            writeln!(
                out,
                "{j},{:.12},{:.12},{:.12},{},{},{},{}",
                self.y[p],
                self.x[p],
                self.z[p],
                opt(buy),
                opt(sell),
                opt(buy.map(|_| self.buy_size_at(p))),
                opt(sell.map(|_| self.sell_size_at(p))),
            )?;
        }
        Ok(())
    }
}

/// Average rate and size of the rung between `lo < hi`. The difference
/// quotient must agree with the closed form (when one exists) up to the
/// rounding that the subtraction `φ(lo) - φ(hi)` can introduce.
fn rung(level: &dyn LevelFunction, lo: f64, hi: f64, index: i32) -> Result<(f64, f64)> {
    let size = hi - lo;
    let (phi_lo, phi_hi) = (level.level(lo), level.level(hi));
    let quotient = (phi_lo - phi_hi) / size;
    let rate = match level.average_rate(lo, hi) {
        Some(closed_form) => {
            let rounding = 8.0 * f64::EPSILON * (phi_lo.abs() + phi_hi.abs()) / size;
            if (quotient - closed_form).abs() > 1e-12 * closed_form.abs() + rounding {
                return Err(Error::LadderMismatch {
                    index,
                    quotient,
                    closed_form,
                });
            }
            closed_form
        }
        None => quotient,
    };
    if !(rate > 0.0 && size > 0.0) {
        return Err(Error::NonPositiveRate { index, rate });
    }
    Ok((rate, size))
}

impl fmt::Display for TradingFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TradingFunction::ConstantProduct => f.write_str("constant-product"),
        }
    }
}
