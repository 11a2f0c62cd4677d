//! Catalog of figure data sets and the computations behind them.

use std::path::PathBuf;

use rayon::prelude::*;
use serde::Serialize;

use super::output::{num, opt, write_csv};
use super::runner::Runner;
use crate::equilibrium::{build_generator, column_fee, fit_linear_policy, solve_w, Equilibrium};
use crate::error::{Error, Result};
use crate::market::Side;
use crate::metrics::{batch_slippage, strategic_execution, MarketView, SlippageReport, VENUE_TAKE};
use crate::simulator::{run_batch, Estimate};

pub const FIGURE_IDS: [&str; 8] = [
    "fees-vs-inventory",
    "fees-3d",
    "fees-vs-time",
    "fees-vs-oracle",
    "bid-ask-vs-volume",
    "slippage-vs-volume",
    "venue-revenue",
    "revenue-per-player",
];

#[derive(Debug, Clone, Copy, Serialize)]
pub struct CatalogEntry {
    pub id: &'static str,
    pub kind: &'static str,
    pub description: &'static str,
    /// Config under experiments/ that produces it.
    pub config: &'static str,
    /// CSV columns, or the table layout.
    pub columns: &'static str,
}

pub const CATALOG: [CatalogEntry; 12] = [
    CatalogEntry {
        id: "table-duopoly-k2",
        kind: "table",
        description: "duopoly and monopoly revenues, k = 2, lambda = 100",
        config: "table1_k2.json",
        columns: "player,type,fees,sell,buy,vol (+ _se)",
    },
    CatalogEntry {
        id: "table-duopoly-k1",
        kind: "table",
        description: "duopoly and monopoly revenues, k = 1, lambda = 100",
        config: "table2_k1.json",
        columns: "player,type,fees,sell,buy,vol (+ _se)",
    },
    CatalogEntry {
        id: "table-3players-k2",
        kind: "table",
        description: "three players, k = 2, lambda = 100",
        config: "table3_3players_k2.json",
        columns: "player,type,fees,sell,buy,vol (+ _se)",
    },
    CatalogEntry {
        id: "table-3players-k1",
        kind: "table",
        description: "three players, k = 1, lambda = 100",
        config: "table4_3players_k1.json",
        columns: "player,type,fees,sell,buy,vol (+ _se)",
    },
    CatalogEntry {
        id: "fees-vs-inventory",
        kind: "figure",
        description: "player 1 fees against own inventory at t = 0.5, one file per rival state",
        config: "figures_duopoly.json",
        columns: "rival_j,rival_z,own_j,y,z,buy_fee,sell_fee",
    },
    CatalogEntry {
        id: "fees-3d",
        kind: "figure",
        description: "player 1 fee surfaces over own and first rival inventory at t = 0.5",
        config: "figures_duopoly.json",
        columns: "own_j,rival_j,own_y,rival_y,buy_fee,sell_fee,linear_buy_fee,linear_sell_fee",
    },
    CatalogEntry {
        id: "fees-vs-time",
        kind: "figure",
        description: "player 1 fees over time at a few own inventories, rivals at the centre",
        config: "figures_duopoly.json",
        columns: "t,own_j,buy_fee,sell_fee",
    },
    CatalogEntry {
        id: "fees-vs-oracle",
        kind: "figure",
        description: "player 1 fees at t = 0.5 as the oracle price moves over 95..105",
        config: "figures_duopoly.json",
        columns: "s,rival_j,own_j,buy_fee,sell_fee",
    },
    CatalogEntry {
        id: "bid-ask-vs-volume",
        kind: "figure",
        description: "strategic taker's best bid-ask spread against total traded volume",
        config: "activity_scan.json",
        columns: "venues,lambda,volume,spread,spread_se,samples",
    },
    CatalogEntry {
        id: "slippage-vs-volume",
        kind: "figure",
        description: "noise-taker average slippage against total traded volume",
        config: "activity_scan.json",
        columns: "venues,lambda,volume,slippage,slippage_se,ratio_of_means,convexity,fee_component,boundary_hits",
    },
    CatalogEntry {
        id: "venue-revenue",
        kind: "figure",
        description: "operator revenue (10% of LP fees) against total traded volume",
        config: "activity_scan.json",
        columns: "venues,lambda,volume,venue_revenue,venue_revenue_se",
    },
    CatalogEntry {
        id: "revenue-per-player",
        kind: "figure",
        description: "fees per LP against total traded volume, liquidity split equally",
        config: "activity_scan.json",
        columns: "venues,lambda,volume,per_player,per_player_se",
    },
];

/// Rival indices of the fee-vs-inventory panels: on the default grid these
/// put the rival's rate at 100, 99.1 and 101.1.
pub const RIVAL_PANELS: [i32; 3] = [0, 9, -11];
/// Rival indices of the fee-vs-oracle curves.
pub const ORACLE_RIVALS: [i32; 3] = [0, 12, -12];
pub const ORACLE_PRICES: [f64; 11] =
    [95.0, 96.0, 97.0, 98.0, 99.0, 100.0, 101.0, 102.0, 103.0, 104.0, 105.0];
const TIME_PANEL_OWN: [i32; 5] = [-10, -5, 0, 5, 10];

/// One activity level of one market structure.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ScanPoint {
    pub venues: usize,
    pub lambda: f64,
    /// Total notional volume across venues, X.
    pub volume: Estimate,
    pub slippage: SlippageReport,
    /// Strategic best ask minus best bid, per-path mean.
    pub spread: Estimate,
    pub spread_samples: usize,
    pub total_fees: Estimate,
    pub venue_revenue: Estimate,
    pub per_player: Estimate,
    pub boundary_hits: Estimate,
}

fn scale(e: Estimate, c: f64) -> Estimate {
    Estimate {
        mean: e.mean * c,
        stderr: e.stderr * c,
    }
}

fn ensure_rival_index(eq: &Equilibrium, j: i32) -> Result<()> {
    let h = eq.inputs.grids[1].halfwidth() as i32;
    if j.abs() > h {
        return Err(Error::Config(format!(
            "rival index {j} lies outside a grid of halfwidth {h}"
        )));
    }
    Ok(())
}

fn rivals_with_first(m: usize, j: i32) -> Vec<i32> {
    let mut r = vec![0; m.saturating_sub(1)];
    if let Some(first) = r.first_mut() {
        *first = j;
    }
    r
}

/// Player 1's fees over its own grid at time index `t` and the given rivals.
pub fn fee_slice(eq: &Equilibrium, t: usize, rivals: &[i32]) -> Result<Vec<(i32, Option<f64>, Option<f64>)>> {
    let fees = eq.fees(0);
    fees.grid()
        .indices()
        .map(|j| {
            Ok((
                j,
                fees.fee(Side::Buy, t, j, rivals)?,
                fees.fee(Side::Sell, t, j, rivals)?,
            ))
        })
        .collect()
}

/// Rate of player 1 at which its buy and sell fees cross at time index `t`,
/// interpolated linearly in the rate between grid points.
pub fn crossing_rate(eq: &Equilibrium, t: usize, rivals: &[i32]) -> Result<Option<f64>> {
    let grid = &eq.inputs.grids[0];
    let slice = fee_slice(eq, t, rivals)?;
    let diffs: Vec<(f64, f64)> = slice
        .iter()
        .filter_map(|&(j, m, p)| Some((grid.z(j).ok()?, m? - p?)))
        .collect();
    for w in diffs.windows(2) {
        let ((z0, d0), (z1, d1)) = (w[0], w[1]);
        if d0 == 0.0 {
            return Ok(Some(z0));
        }
        if d0.signum() != d1.signum() {
            return Ok(Some(z0 + (z1 - z0) * d0 / (d0 - d1)));
        }
    }
    Ok(None)
}

/// Player 1's fees at time `t` with the oracle frozen at each price in
/// `prices`, solved one rival state at a time:
/// rows `(s, rival_j, own_j, buy_fee, sell_fee)`.
#[allow(clippy::type_complexity)]
pub fn oracle_scan(
    eq: &Equilibrium,
    t: f64,
    prices: &[f64],
    rival_js: &[i32],
) -> Result<Vec<(f64, i32, i32, Option<f64>, Option<f64>)>> {
    let inputs = &eq.inputs;
    let m = inputs.venues();
    let rivals: Vec<Vec<i32>> = if m == 1 {
        vec![Vec::new()]
    } else {
        for &j in rival_js {
            ensure_rival_index(eq, j)?;
        }
        rival_js.iter().map(|&j| rivals_with_first(m, j)).collect()
    };
    let k = inputs.time.index_at(t);
    let grid = &inputs.grids[0];
    let k_total = inputs.flow.k_total(0);
    let jobs: Vec<(f64, &Vec<i32>)> = prices
        .iter()
        .flat_map(|&s| rivals.iter().map(move |r| (s, r)))
        .collect();
    let blocks = jobs
        .par_iter()
        .map(|&(s, r)| {
            let gen = build_generator(0, r, s, &inputs.grids, &inputs.flow, inputs.mode)?;
            let w = solve_w(&gen, &inputs.time)?;
            let col = &w[k];
            let rj = r.first().copied().unwrap_or(0);
            Ok(grid
                .indices()
                .enumerate()
                .map(|(p, j)| {
                    (
                        s,
                        rj,
                        j,
                        column_fee(grid, k_total, Side::Buy, col, p),
                        column_fee(grid, k_total, Side::Sell, col, p),
                    )
                })
                .collect::<Vec<_>>())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(blocks.into_iter().flatten().collect())
}

/// Solves and simulates every (structure, λ) pair of the scan.
pub(crate) fn activity_scan(runner: &Runner) -> Result<Vec<ScanPoint>> {
    let cfg = runner.config();
    let scan = &cfg.scan;
    let mut points = Vec::new();
    for &m in &scan.structures {
        for &lambda in &scan.lambdas {
            let eq = runner.solve_game_at(m, lambda)?;
            let mut sim = runner.sim_config(&eq.inputs, eq.policies(), scan.n_paths);
            sim.record_trades = false;
            sim.snapshot_times = scan.snapshot_times.clone();
            let batch = run_batch(&sim)?;
            let time = eq.inputs.time;
            let policies = &sim.policies;
            let grids = &eq.inputs.grids;
            let per_path: Vec<Option<f64>> = batch
                .paths
                .par_iter()
                .map(|path| {
                    let spreads: Vec<f64> = path
                        .snapshots
                        .iter()
                        .filter_map(|snap| {
                            let view = MarketView {
                                grids,
                                policies,
                                state: &snap.state,
                                t: time.index_at(snap.time),
                            };
                            let ask = strategic_execution(&view, Side::Buy, m).ok()?;
                            let bid = strategic_execution(&view, Side::Sell, m).ok()?;
                            Some(ask.cost_best_routed - bid.cost_best_routed)
                        })
                        .collect();
                    if spreads.is_empty() {
                        None
                    } else {
                        Some(spreads.iter().sum::<f64>() / spreads.len() as f64)
                    }
                })
                .collect();
            let samples: Vec<f64> = per_path.iter().flatten().copied().collect();
            let total = batch.total;
            points.push(ScanPoint {
                venues: m,
                lambda,
                volume: total.volume,
                slippage: batch_slippage(&batch),
                spread: Estimate::from_samples(&samples),
                spread_samples: samples.len(),
                total_fees: total.fees,
                venue_revenue: scale(total.fees, VENUE_TAKE),
                per_player: scale(total.fees, 1.0 / m as f64),
                boundary_hits: total.boundary_hits,
            });
        }
    }
    Ok(points)
}

fn figure_path(runner: &Runner, name: &str) -> PathBuf {
    runner.dir().join("figures").join(format!("{name}.csv"))
}

/// Writes the CSVs of figure `id`.
pub(crate) fn write_figure(runner: &Runner, id: &str) -> Result<Vec<PathBuf>> {
    if !FIGURE_IDS.contains(&id) {
        return Err(Error::Config(format!(
            "unknown figure id '{id}'; valid ids: {}",
            FIGURE_IDS.join(", ")
        )));
    }
    let comments = runner.comments();
    let cfg = runner.config();
    match id {
        "fees-vs-inventory" | "fees-3d" | "fees-vs-time" | "fees-vs-oracle" => {
            let eq = runner.solve()?;
            let m = eq.venues();
            let time = eq.inputs.time;
            let mid = time.index_at(0.5);
            let grid = &eq.inputs.grids[0];
            match id {
                "fees-vs-inventory" => {
                    let panels: Vec<i32> = if m == 1 { vec![0] } else { RIVAL_PANELS.to_vec() };
                    let mut out = Vec::new();
                    for rj in panels {
                        let rivals = if m == 1 {
                            Vec::new()
                        } else {
                            ensure_rival_index(&eq, rj)?;
                            rivals_with_first(m, rj)
                        };
                        let rival_z = if m == 1 {
                            f64::NAN
                        } else {
                            eq.inputs.grids[1].z(rj)?
                        };
                        let rows = fee_slice(&eq, mid, &rivals)?.into_iter().map(|(j, b, s)| {
                            vec![
                                rj.to_string(),
                                num(rival_z),
                                j.to_string(),
                                num(grid.y(j).unwrap_or(f64::NAN)),
                                num(grid.z(j).unwrap_or(f64::NAN)),
                                opt(b),
                                opt(s),
                            ]
                        });
                        let path = figure_path(runner, &format!("fees-vs-inventory_rival_{rj}"));
                        write_csv(
                            &path,
                            &comments,
                            &["rival_j", "rival_z", "own_j", "y", "z", "buy_fee", "sell_fee"],
                            rows,
                        )?;
                        out.push(path);
                    }
                    Ok(out)
                }
                "fees-3d" => {
                    if m < 2 {
                        return Err(Error::Config("fees-3d needs at least two venues".into()));
                    }
                    let fees = eq.fees(0);
                    let lin = fit_linear_policy(&fees, cfg.linear_window)?;
                    let rival_grid = &eq.inputs.grids[1];
                    let mut rows = Vec::new();
                    for j in grid.indices() {
                        for rj in rival_grid.indices() {
                            let rivals = rivals_with_first(m, rj);
                            rows.push(vec![
                                j.to_string(),
                                rj.to_string(),
                                num(grid.y(j)?),
                                num(rival_grid.y(rj)?),
                                opt(fees.fee(Side::Buy, mid, j, &rivals)?),
                                opt(fees.fee(Side::Sell, mid, j, &rivals)?),
                                num(lin.fee(Side::Buy, mid, j, &rivals)),
                                num(lin.fee(Side::Sell, mid, j, &rivals)),
                            ]);
                        }
                    }
                    let path = figure_path(runner, "fees-3d");
                    write_csv(
                        &path,
                        &comments,
                        &[
                            "own_j",
                            "rival_j",
                            "own_y",
                            "rival_y",
                            "buy_fee",
                            "sell_fee",
                            "linear_buy_fee",
                            "linear_sell_fee",
                        ],
                        rows,
                    )?;
                    Ok(vec![path])
                }
                "fees-vs-time" => {
                    let fees = eq.fees(0);
                    let rivals = vec![0; m - 1];
                    let mut rows = Vec::new();
                    for j in TIME_PANEL_OWN.into_iter().filter(|&j| grid.contains(j)) {
                        for k in 0..time.points() {
                            rows.push(vec![
                                num(time.time(k)),
                                j.to_string(),
                                opt(fees.fee(Side::Buy, k, j, &rivals)?),
                                opt(fees.fee(Side::Sell, k, j, &rivals)?),
                            ]);
                        }
                    }
                    let path = figure_path(runner, "fees-vs-time");
                    write_csv(&path, &comments, &["t", "own_j", "buy_fee", "sell_fee"], rows)?;
                    Ok(vec![path])
                }
                _ => {
                    let rows = oracle_scan(&eq, 0.5, &ORACLE_PRICES, &ORACLE_RIVALS)?
                        .into_iter()
                        .map(|(s, rj, j, b, p)| {
                            vec![num(s), rj.to_string(), j.to_string(), opt(b), opt(p)]
                        });
                    let path = figure_path(runner, "fees-vs-oracle");
                    write_csv(
                        &path,
                        &comments,
                        &["s", "rival_j", "own_j", "buy_fee", "sell_fee"],
                        rows,
                    )?;
                    Ok(vec![path])
                }
            }
        }
        _ => {
            let points = runner.scan()?;
            let lead = |p: &ScanPoint| vec![p.venues.to_string(), num(p.lambda), num(p.volume.mean)];
            let (header, rows): (Vec<&str>, Vec<Vec<String>>) = match id {
                "bid-ask-vs-volume" => (
                    vec!["venues", "lambda", "volume", "spread", "spread_se", "samples"],
                    points
                        .iter()
                        .map(|p| {
                            let mut r = lead(p);
                            r.extend([num(p.spread.mean), num(p.spread.stderr), p.spread_samples.to_string()]);
                            r
                        })
                        .collect(),
                ),
                "slippage-vs-volume" => (
                    vec![
                        "venues",
                        "lambda",
                        "volume",
                        "slippage",
                        "slippage_se",
                        "ratio_of_means",
                        "convexity",
                        "fee_component",
                        "boundary_hits",
                    ],
                    points
                        .iter()
                        .map(|p| {
                            let s = &p.slippage;
                            let mut r = lead(p);
                            r.extend([
                                num(s.avg_slippage.mean),
                                num(s.avg_slippage.stderr),
                                num(s.ratio_of_means),
                                num(s.convexity_component),
                                num(s.fee_component),
                                num(p.boundary_hits.mean),
                            ]);
                            r
                        })
                        .collect(),
                ),
                "venue-revenue" => (
                    vec!["venues", "lambda", "volume", "venue_revenue", "venue_revenue_se"],
                    points
                        .iter()
                        .map(|p| {
                            let mut r = lead(p);
                            r.extend([num(p.venue_revenue.mean), num(p.venue_revenue.stderr)]);
                            r
                        })
                        .collect(),
                ),
                _ => (
                    vec!["venues", "lambda", "volume", "per_player", "per_player_se"],
                    points
                        .iter()
                        .map(|p| {
                            let mut r = lead(p);
                            r.extend([num(p.per_player.mean), num(p.per_player.stderr)]);
                            r
                        })
                        .collect(),
                ),
            };
            let path = figure_path(runner, id);
            write_csv(&path, &comments, &header, rows)?;
            Ok(vec![path])
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_figure_id_has_one_entry() {
        for id in FIGURE_IDS {
            assert_eq!(CATALOG.iter().filter(|e| e.id == id).count(), 1, "{id}");
        }
        let mut ids: Vec<_> = CATALOG.iter().map(|e| e.id).collect();
        ids.sort();
        ids.dedup();
        assert_eq!(ids.len(), CATALOG.len());
    }
}
