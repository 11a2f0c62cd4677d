//! Post-simulation analytics: slippage, strategic routing, revenue.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;

use crate::equilibrium::FeePolicy;
use crate::error::{Error, Result};
use crate::market::Side;
use crate::pool::InventoryGrid;
use crate::simulator::{BatchResult, Estimate, TradeEvent, VenuePath};

/// Share of LP fees kept by the venue operator.
pub const VENUE_TAKE: f64 = 0.10;

/// Average slippage of non-strategic takers. Per path the slippage is
/// `Σ (exec - Z) Δ` over buys plus `Σ (Z - exec) Δ` over sells, divided by
/// `Σ Δ`; the numerator splits into the curve's convexity charge and the
/// fees paid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlippageReport {
    /// Mean over paths of the per-path ratio.
    pub avg_slippage: Estimate,
    /// Mean numerator over mean denominator.
    pub ratio_of_means: f64,
    /// Mean convexity charge per path, X.
    pub convexity_component: f64,
    /// Mean fees paid per path, X.
    pub fee_component: f64,
    /// Mean notional volume per path, X.
    pub total_volume: f64,
    /// Mean traded size per path, Y.
    pub total_size: f64,
    /// Paths without a single trade, left out of the mean.
    pub excluded_paths: usize,
}

#[derive(Debug, Clone, Copy, Default)]
struct SlipSums {
    convexity: f64,
    fees: f64,
    size: f64,
    volume: f64,
}

impl SlipSums {
    fn numerator(&self) -> f64 {
        self.convexity + self.fees
    }
}

fn slippage_report(paths: &[SlipSums]) -> SlippageReport {
    let traded: Vec<&SlipSums> = paths.iter().filter(|p| p.size > 0.0).collect();
    let ratios: Vec<f64> = traded.iter().map(|p| p.numerator() / p.size).collect();
    let n = paths.len().max(1) as f64;
    let mean = |f: &dyn Fn(&SlipSums) -> f64| {
        crate::simulator::pairwise_sum(&paths.iter().map(f).collect::<Vec<_>>()) / n
    };
    let conv = mean(&|p| p.convexity);
    let fees = mean(&|p| p.fees);
    let size = mean(&|p| p.size);
    SlippageReport {
        avg_slippage: Estimate::from_samples(&ratios),
        ratio_of_means: (conv + fees) / size,
        convexity_component: conv,
        fee_component: fees,
        total_volume: mean(&|p| p.volume),
        total_size: size,
        excluded_paths: paths.len() - traded.len(),
    }
}

/// Slippage from per-path trade logs.
pub fn avg_slippage(logs: &[&[TradeEvent]]) -> SlippageReport {
    let sums: Vec<SlipSums> = logs
        .iter()
        .map(|log| {
            log.iter().fold(SlipSums::default(), |mut acc, t| {
                let curve = match t.side {
                    Side::Buy => t.rate - t.mid_rate,
                    Side::Sell => t.mid_rate - t.rate,
                };
                acc.convexity += curve * t.size;
                acc.fees += t.fee_cash;
                acc.size += t.size;
                acc.volume += t.rate * t.size;
                acc
            })
        })
        .collect();
    slippage_report(&sums)
}

/// Slippage from the per-path accumulators of a batch, all venues pooled.
pub fn batch_slippage(batch: &BatchResult) -> SlippageReport {
    let sums: Vec<SlipSums> = batch
        .paths
        .iter()
        .map(|p| {
            p.venues.iter().fold(SlipSums::default(), |mut acc, v: &VenuePath| {
                acc.convexity += v.convexity;
                acc.fees += v.fees;
                acc.size += v.size;
                acc.volume += v.volume;
                acc
            })
        })
        .collect();
    slippage_report(&sums)
}

/// Where the child orders of a parent trade go: `counts[v]` steps at venue `v`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Route {
    AllToOne { venue: usize },
    Split { counts: Vec<usize> },
}

impl Route {
    fn from_counts(counts: &[usize]) -> Self {
        let used: Vec<usize> = (0..counts.len()).filter(|&v| counts[v] > 0).collect();
        if used.len() == 1 {
            Route::AllToOne { venue: used[0] }
        } else {
            Route::Split {
                counts: counts.to_vec(),
            }
        }
    }
}

/// Best execution of one parent order. Costs are average execution rates
/// (X per Y, fees included), so routes of slightly different total size are
/// compared per unit. For sells the rate is what the taker receives and
/// "cheaper" means higher.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoutingReport {
    pub side: Side,
    /// Child orders, one grid step each.
    pub children: usize,
    /// Size of the chosen route, Y.
    pub trade_size: f64,
    /// Best rate among the routes that send everything to one venue.
    pub cost_single: f64,
    /// Best rate among all routes.
    pub cost_best_routed: f64,
    pub chosen_route: Route,
    pub routes_considered: usize,
}

/// What the taker sees when it arrives.
#[derive(Debug, Clone, Copy)]
pub struct MarketView<'a> {
    pub grids: &'a [InventoryGrid],
    pub policies: &'a [FeePolicy],
    /// Signed index of every venue.
    pub state: &'a [i32],
    /// Policy time index.
    pub t: usize,
}

// every way of writing `total` as an ordered sum of `parts` non-negative terms
fn compositions(total: usize, parts: usize) -> Vec<Vec<usize>> {
    if parts == 0 {
        return if total == 0 { vec![vec![]] } else { vec![] };
    }
    if parts == 1 {
        return vec![vec![total]];
    }
    let mut out = Vec::new();
    for first in (0..=total).rev() {
        for mut rest in compositions(total - first, parts - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

// cost (or proceeds) and size of walking `steps` rungs at one venue
fn walk(view: &MarketView, venue: usize, side: Side, steps: usize) -> Option<(f64, f64)> {
    let grid = &view.grids[venue];
    let half = grid.halfwidth() as i32;
    let mut pos = (view.state[venue] + half) as usize;
    let rival_pos: Vec<usize> = view
        .state
        .iter()
        .enumerate()
        .filter(|(u, _)| *u != venue)
        .map(|(u, &j)| (j + view.grids[u].halfwidth() as i32) as usize)
        .collect();
    let policy = &view.policies[venue];
    let mut cash = 0.0;
    let mut size = 0.0;
    for _ in 0..steps {
        match side {
            Side::Buy => {
                let rate = grid.buy_rate_at(pos)?;
                let d = grid.buy_size_at(pos);
                let m = policy.fee_at(Side::Buy, view.t, pos, &rival_pos);
                cash += (1.0 + m) * rate * d;
                size += d;
                pos -= 1;
            }
            Side::Sell => {
                let rate = grid.sell_rate_at(pos)?;
                let d = grid.sell_size_at(pos);
                let p = policy.fee_at(Side::Sell, view.t, pos, &rival_pos);
                cash += (1.0 - p) * rate * d;
                size += d;
                pos += 1;
            }
        }
    }
    Some((cash, size))
}

/// Routes `children` one-step child orders across the venues, trying every
/// composition, and reports the best single-venue and best overall rate.
pub fn strategic_execution(view: &MarketView, side: Side, children: usize) -> Result<RoutingReport> {
    let m = view.grids.len();
    if m == 0 || view.policies.len() != m || view.state.len() != m {
        return Err(Error::InvalidInput("market view is inconsistent".into()));
    }
    if children == 0 {
        return Err(Error::InvalidInput("parent order needs at least one child".into()));
    }
    for (g, &j) in view.grids.iter().zip(view.state) {
        if !g.contains(j) {
            return Err(Error::IndexOutOfRange {
                index: j,
                halfwidth: g.halfwidth(),
            });
        }
    }
    let better = |a: f64, b: f64| match side {
        Side::Buy => a < b,
        Side::Sell => a > b,
    };
    let mut best: Option<(f64, f64, Vec<usize>)> = None;
    let mut best_single: Option<f64> = None;
    let mut considered = 0;
    for counts in compositions(children, m) {
        let mut cash = 0.0;
        let mut size = 0.0;
        let mut feasible = true;
        for (v, &c) in counts.iter().enumerate() {
            match walk(view, v, side, c) {
                Some((x, d)) => {
                    cash += x;
                    size += d;
                }
                None => {
                    feasible = false;
                    break;
                }
            }
        }
        if !feasible {
            continue;
        }
        considered += 1;
        let rate = cash / size;
        if counts.iter().filter(|&&c| c > 0).count() == 1
            && best_single.is_none_or(|b| better(rate, b))
        {
            best_single = Some(rate);
        }
        if best.as_ref().is_none_or(|(b, _, _)| better(rate, *b)) {
            best = Some((rate, size, counts));
        }
    }
    let (rate, size, counts) = best.ok_or_else(|| {
        Error::InfeasibleRoute(format!(
            "{children} {side} steps exceed the ladder depth at state {:?}",
            view.state
        ))
    })?;
    Ok(RoutingReport {
        side,
        children,
        trade_size: size,
        cost_single: best_single.unwrap_or(f64::NAN),
        cost_best_routed: rate,
        chosen_route: Route::from_counts(&counts),
        routes_considered: considered,
    })
}

/// Best ask and best bid across venues at one state, one grid step each;
/// `None` on a side where every venue sits at its edge.
pub fn best_quotes(view: &MarketView) -> Result<(Option<f64>, Option<f64>)> {
    let m = view.grids.len();
    if view.policies.len() != m || view.state.len() != m {
        return Err(Error::InvalidInput("market view is inconsistent".into()));
    }
    let mut ask: Option<f64> = None;
    let mut bid: Option<f64> = None;
    for (v, (grid, &j)) in view.grids.iter().zip(view.state).enumerate() {
        let pos = grid.pos(j)?;
        let rival_pos: Vec<usize> = view
            .state
            .iter()
            .enumerate()
            .filter(|(u, _)| *u != v)
            .map(|(u, &k)| (k + view.grids[u].halfwidth() as i32) as usize)
            .collect();
        let policy = &view.policies[v];
        if let Some(rate) = grid.buy_rate_at(pos) {
            let a = (1.0 + policy.fee_at(Side::Buy, view.t, pos, &rival_pos)) * rate;
            ask = Some(ask.map_or(a, |b| b.min(a)));
        }
        if let Some(rate) = grid.sell_rate_at(pos) {
            let b = (1.0 - policy.fee_at(Side::Sell, view.t, pos, &rival_pos)) * rate;
            bid = Some(bid.map_or(b, |c| c.max(b)));
        }
    }
    Ok((ask, bid))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RevenueRow {
    pub venues: usize,
    pub total_fees: Estimate,
    /// Operator's share of all fees.
    pub venue_revenue: Estimate,
    /// Fees per LP under an equal split.
    pub per_lp: Estimate,
}

/// Venue and per-LP revenue for each market structure.
pub fn revenue_report(rows: &[(usize, &BatchResult)]) -> Vec<RevenueRow> {
    rows.iter()
        .map(|&(m, batch)| {
            let total = batch.total.fees;
            let scale = |e: Estimate, c: f64| Estimate {
                mean: e.mean * c,
                stderr: e.stderr * c,
            };
            RevenueRow {
                venues: m,
                total_fees: total,
                venue_revenue: scale(total, VENUE_TAKE),
                per_lp: scale(total, 1.0 / m as f64),
            }
        })
        .collect()
}

/// Monte Carlo estimate of `E[min(X_1, …, X_n)]` for i.i.d. `N(mean, sd²)`.
pub fn expected_min_normal<R: Rng + ?Sized>(
    mean: f64,
    sd: f64,
    n: usize,
    samples: usize,
    rng: &mut R,
) -> Result<Estimate> {
    let dist = Normal::new(mean, sd).map_err(|e| Error::InvalidInput(e.to_string()))?;
    if n == 0 || samples == 0 {
        return Err(Error::InvalidInput("need at least one draw".into()));
    }
    let xs: Vec<f64> = (0..samples)
        .map(|_| (0..n).map(|_| dist.sample(rng)).fold(f64::INFINITY, f64::min))
        .collect();
    Ok(Estimate::from_samples(&xs))
}
