//! Time-stepped simulation of fee-controlled order flow across venues.
//!
//! Each step draws at most one buy and one sell per venue, with probability
//! `1 - exp(-λ dt)` from intensities evaluated at the pre-step state. All
//! draws of a step see the same state; inventories move afterwards.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::equilibrium::{EquilibriumFees, FeePolicy, TimeGrid};
use crate::error::{Error, Result};
use crate::market::{mispricing, FlowParams, OracleSpec, Side};
use crate::pool::{InventoryGrid, SideQuote};

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub time: TimeGrid,
    pub n_paths: usize,
    pub seed: u64,
    pub grids: Vec<InventoryGrid>,
    pub flow: FlowParams,
    pub oracle: OracleSpec,
    pub policies: Vec<FeePolicy>,
    /// Starting signed index of every venue; the centre when empty.
    pub initial: Vec<i32>,
    /// Keep every trade of every path.
    pub record_trades: bool,
    /// Times at which the joint state is recorded on each path.
    pub snapshot_times: Vec<f64>,
    /// Worker threads; the global pool when `None`.
    pub threads: Option<usize>,
}

impl SimConfig {
    pub fn new(
        time: TimeGrid,
        n_paths: usize,
        seed: u64,
        grids: Vec<InventoryGrid>,
        flow: FlowParams,
        oracle: OracleSpec,
        policies: Vec<FeePolicy>,
    ) -> Self {
        Self {
            time,
            n_paths,
            seed,
            grids,
            flow,
            oracle,
            policies,
            initial: Vec::new(),
            record_trades: false,
            snapshot_times: Vec::new(),
            threads: None,
        }
    }

    pub fn venues(&self) -> usize {
        self.grids.len()
    }

    pub fn validate(&self) -> Result<()> {
        self.time.validate()?;
        self.flow.validate()?;
        self.oracle.validate()?;
        let m = self.venues();
        if m == 0 {
            return Err(Error::Config("simulation needs at least one venue".into()));
        }
        if self.n_paths == 0 {
            return Err(Error::Config("n_paths must be at least 1".into()));
        }
        if self.flow.venues() != m || self.policies.len() != m {
            return Err(Error::Config(format!(
                "{m} pools, {} flow entries and {} policies",
                self.flow.venues(),
                self.policies.len()
            )));
        }
        if !self.initial.is_empty() {
            if self.initial.len() != m {
                return Err(Error::Config("initial state needs one index per venue".into()));
            }
            for (g, &j) in self.grids.iter().zip(&self.initial) {
                if !g.contains(j) {
                    return Err(Error::Config(format!("initial index {j} outside the grid")));
                }
            }
        }
        for (v, policy) in self.policies.iter().enumerate() {
            if let Some(pt) = policy.time() {
                if (pt.horizon - self.time.horizon).abs() > 1e-12 * self.time.horizon {
                    return Err(Error::Config(format!(
                        "policy of venue {v} covers horizon {} but the simulation runs to {}",
                        pt.horizon, self.time.horizon
                    )));
                }
            }
            if let FeePolicy::Equilibrium(e) = policy {
                let rival_lens: Vec<usize> = self
                    .grids
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| *i != v)
                    .map(|(_, g)| g.len())
                    .collect();
                if e.grid().len() != self.grids[v].len() || e.surface().rival_dims() != rival_lens {
                    return Err(Error::Config(format!(
                        "equilibrium policy of venue {v} was solved on a different lattice"
                    )));
                }
            }
        }
        if self
            .snapshot_times
            .iter()
            .any(|&t| !(t >= 0.0 && t <= self.time.horizon))
        {
            return Err(Error::Config("snapshot times must lie in [0, T]".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TradeEvent {
    pub step: usize,
    pub time: f64,
    pub venue: usize,
    pub side: Side,
    /// Signed index before the trade.
    pub index: i32,
    pub size: f64,
    /// Fee-free step rate `Z∓`.
    pub rate: f64,
    /// Fee-adjusted execution rate.
    pub exec_rate: f64,
    /// Marginal rate `Z` before the trade.
    pub mid_rate: f64,
    pub fee: f64,
    /// `fee · Z∓ · Δ`.
    pub fee_cash: f64,
}

/// Per-venue totals of one path.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct VenuePath {
    pub fees: f64,
    pub n_buy: u32,
    pub n_sell: u32,
    /// `Σ Z∓ Δ` in units of X.
    pub volume: f64,
    /// `Σ |Z∓ - Z| Δ`, the part of slippage due to the curve.
    pub convexity: f64,
    /// `Σ Δ` in units of Y.
    pub size: f64,
    pub terminal: i32,
    /// Trades that left the venue on an edge of its grid.
    pub boundary_hits: u32,
}

impl VenuePath {
    pub fn trades(&self) -> u32 {
        self.n_buy + self.n_sell
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Snapshot {
    pub time: f64,
    pub s: f64,
    /// Signed index of every venue.
    pub state: Vec<i32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathResult {
    pub index: usize,
    pub venues: Vec<VenuePath>,
    pub snapshots: Vec<Snapshot>,
    pub trades: Option<Vec<TradeEvent>>,
}

/// RNG stream of one path.
pub fn path_rng(seed: u64, path_index: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ path_index as u64)
}

// policy time index for every simulation step
fn policy_steps(cfg: &SimConfig, policy: &FeePolicy) -> Vec<usize> {
    match policy.time() {
        Some(pt) => (0..cfg.time.steps)
            .map(|k| pt.index_at(cfg.time.time(k)))
            .collect(),
        None => vec![0; cfg.time.steps],
    }
}

enum Fee<'a> {
    Known(f64),
    Deferred(&'a EquilibriumFees, f64),
}

#[inline]
fn quote(side: Side, fee: f64, rate: f64) -> f64 {
    match side {
        Side::Buy => (1.0 + fee) * rate,
        Side::Sell => (1.0 - fee) * rate,
    }
}

struct Prepared<'a> {
    cfg: &'a SimConfig,
    lookup: Vec<Vec<usize>>,
    snapshot_steps: Vec<usize>,
}

impl<'a> Prepared<'a> {
    fn new(cfg: &'a SimConfig) -> Result<Self> {
        cfg.validate()?;
        let lookup = cfg.policies.iter().map(|p| policy_steps(cfg, p)).collect();
        let snapshot_steps = cfg
            .snapshot_times
            .iter()
            .map(|&t| cfg.time.index_at(t))
            .collect();
        Ok(Self {
            cfg,
            lookup,
            snapshot_steps,
        })
    }

    fn run(&self, path_index: usize) -> PathResult {
        let cfg = self.cfg;
        let m = cfg.venues();
        let dt = cfg.time.dt();
        let mut rng = path_rng(cfg.seed, path_index);
        let mut pos: Vec<usize> = (0..m)
            .map(|v| {
                let j = cfg.initial.get(v).copied().unwrap_or(0);
                (j + cfg.grids[v].halfwidth() as i32) as usize
            })
            .collect();
        let mut venues = vec![VenuePath::default(); m];
        let mut trades = cfg.record_trades.then(Vec::new);
        let mut snapshots = Vec::with_capacity(self.snapshot_steps.len());
        let mut s = cfg.oracle.s0;
        let mut rival_pos = vec![0usize; m.saturating_sub(1)];
        let mut rival_buy = vec![0.0; m.saturating_sub(1)];
        let mut rival_sell = vec![0.0; m.saturating_sub(1)];
        // (venue, side) fired this step
        let mut fired: Vec<(usize, Side)> = Vec::with_capacity(2 * m);

        for k in 0..cfg.time.steps {
            for (i, &ks) in self.snapshot_steps.iter().enumerate() {
                if ks == k {
                    snapshots.push(Snapshot {
                        time: cfg.snapshot_times[i],
                        s,
                        state: self.signed(&pos),
                    });
                }
            }
            fired.clear();
            for v in 0..m {
                let grid = &cfg.grids[v];
                let mut r = 0;
                for (u, &q) in pos.iter().enumerate() {
                    if u != v {
                        rival_pos[r] = q;
                        rival_buy[r] = cfg.grids[u].rival_buy_rate_at(q);
                        rival_sell[r] = cfg.grids[u].rival_sell_rate_at(q);
                        r += 1;
                    }
                }
                let p = pos[v];
                let policy = &cfg.policies[v];
                let t = self.lookup[v][k];
                for side in Side::BOTH {
                    let u: f64 = rng.random();
                    let (rate, size, rivals) = match side {
                        Side::Buy => match grid.buy_rate_at(p) {
                            Some(rate) => (rate, grid.buy_size_at(p), &rival_buy),
                            None => continue,
                        },
                        Side::Sell => match grid.sell_rate_at(p) {
                            Some(rate) => (rate, grid.sell_size_at(p), &rival_sell),
                            None => continue,
                        },
                    };
                    let (lambda, fee) = match policy {
                        // λ e^{x0 - k m* Z Δ} with k m* Z Δ = 1 + log(w_j / w_{j∓1}):
                        // the log is only needed once a trade fires
                        FeePolicy::Equilibrium(e) => {
                            let col = e.surface().column(e.surface().tuple_index(&rival_pos), t);
                            let ratio = match side {
                                Side::Buy => col[p] / col[p - 1],
                                Side::Sell => col[p] / col[p + 1],
                            };
                            let x0 = mispricing(
                                side,
                                SideQuote { rate, size },
                                rivals.iter().copied(),
                                cfg.flow.rival_weights(v),
                                cfg.flow.k0[v],
                                s,
                                cfg.flow.zeta,
                            );
                            let lambda = cfg.flow.baseline(side, v) * (x0 - 1.0).exp() / ratio;
                            (lambda, Fee::Deferred(e, ratio))
                        }
                        _ => {
                            let fee = policy.fee_at(side, t, p, &rival_pos);
                            let quoted = quote(side, fee, rate);
                            let x = mispricing(
                                side,
                                SideQuote { rate: quoted, size },
                                rivals.iter().copied(),
                                cfg.flow.rival_weights(v),
                                cfg.flow.k0[v],
                                s,
                                cfg.flow.zeta,
                            );
                            (cfg.flow.baseline(side, v) * x.exp(), Fee::Known(fee))
                        }
                    };
                    let prob = -(-lambda * dt).exp_m1();
                    if u < prob {
                        let fee = match fee {
                            Fee::Known(f) => f,
                            Fee::Deferred(e, ratio) => {
                                (1.0 + ratio.ln()) / (e.surface().k_total * rate * size)
                            }
                        };
                        let quoted = quote(side, fee, rate);
                        fired.push((v, side));
                        let acc = &mut venues[v];
                        let fee_cash = fee * rate * size;
                        acc.fees += fee_cash;
                        acc.volume += rate * size;
                        acc.size += size;
                        acc.convexity += (rate - grid.z_at(p)).abs() * size;
                        match side {
                            Side::Buy => acc.n_buy += 1,
                            Side::Sell => acc.n_sell += 1,
                        }
                        if let Some(log) = trades.as_mut() {
                            log.push(TradeEvent {
                                step: k,
                                time: cfg.time.time(k),
                                venue: v,
                                side,
                                index: p as i32 - grid.halfwidth() as i32,
                                size,
                                rate,
                                exec_rate: quoted,
                                mid_rate: grid.z_at(p),
                                fee,
                                fee_cash,
                            });
                        }
                    }
                }
            }
            for &(v, side) in &fired {
                match side {
                    Side::Buy => pos[v] -= 1,
                    Side::Sell => pos[v] += 1,
                }
            }
            for &(v, _) in &fired {
                if pos[v] == 0 || pos[v] + 1 == cfg.grids[v].len() {
                    venues[v].boundary_hits += 1;
                }
            }
            s = cfg.oracle.step(s, dt, &mut rng);
        }
        for (v, acc) in venues.iter_mut().enumerate() {
            acc.terminal = pos[v] as i32 - cfg.grids[v].halfwidth() as i32;
        }
        PathResult {
            index: path_index,
            venues,
            snapshots,
            trades,
        }
    }

    fn signed(&self, pos: &[usize]) -> Vec<i32> {
        pos.iter()
            .zip(&self.cfg.grids)
            .map(|(&p, g)| p as i32 - g.halfwidth() as i32)
            .collect()
    }
}

/// One path of the batch described by `cfg`.
pub fn simulate_path(cfg: &SimConfig, path_index: usize) -> Result<PathResult> {
    Ok(Prepared::new(cfg)?.run(path_index))
}

/// Sum by recursive halving, so the result does not depend on how the
/// paths were scheduled.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        return xs.iter().sum();
    }
    let (a, b) = xs.split_at(xs.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

/// Mean and standard error of a sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
}

impl Estimate {
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len();
        if n == 0 {
            return Self {
                mean: f64::NAN,
                stderr: f64::NAN,
            };
        }
        let mean = pairwise_sum(xs) / n as f64;
        if n == 1 {
            return Self { mean, stderr: 0.0 };
        }
        let dev: Vec<f64> = xs.iter().map(|x| (x - mean) * (x - mean)).collect();
        let var = pairwise_sum(&dev) / (n - 1) as f64;
        Self {
            mean,
            stderr: (var / n as f64).sqrt(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VenueStats {
    pub fees: Estimate,
    pub sell: Estimate,
    pub buy: Estimate,
    pub volume: Estimate,
    pub boundary_hits: Estimate,
}

impl VenueStats {
    fn from_paths<'a>(rows: impl Iterator<Item = &'a [VenuePath]> + Clone, pick: &[usize]) -> Self {
        let col = |f: &dyn Fn(&VenuePath) -> f64| -> Estimate {
            let xs: Vec<f64> = rows
                .clone()
                .map(|r| pick.iter().map(|&v| f(&r[v])).sum())
                .collect();
            Estimate::from_samples(&xs)
        };
        Self {
            fees: col(&|p| p.fees),
            sell: col(&|p| p.n_sell as f64),
            buy: col(&|p| p.n_buy as f64),
            volume: col(&|p| p.volume),
            boundary_hits: col(&|p| p.boundary_hits as f64),
        }
    }
}

#[derive(Debug, Clone)]
pub struct BatchResult {
    pub n_paths: usize,
    pub seed: u64,
    pub venues: Vec<VenueStats>,
    pub total: VenueStats,
    pub paths: Vec<PathResult>,
}

impl BatchResult {
    fn from_paths(paths: Vec<PathResult>, seed: u64) -> Self {
        let m = paths.first().map_or(0, |p| p.venues.len());
        let rows = paths.iter().map(|p| p.venues.as_slice());
        let venues = (0..m).map(|v| VenueStats::from_paths(rows.clone(), &[v])).collect();
        let all: Vec<usize> = (0..m).collect();
        let total = VenueStats::from_paths(rows, &all);
        Self {
            n_paths: paths.len(),
            seed,
            venues,
            total,
            paths,
        }
    }

    /// Statistics over the first `n` paths only.
    pub fn prefix(&self, n: usize) -> BatchResult {
        BatchResult::from_paths(self.paths[..n.min(self.paths.len())].to_vec(), self.seed)
    }
}

/// Runs every path of `cfg`. Results do not depend on the thread count.
pub fn run_batch(cfg: &SimConfig) -> Result<BatchResult> {
    let prepared = Prepared::new(cfg)?;
    let work = || -> Vec<PathResult> {
        (0..cfg.n_paths)
            .into_par_iter()
            .map(|i| prepared.run(i))
            .collect()
    };
    let paths = match cfg.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?
            .install(work),
        None => work(),
    };
    Ok(BatchResult::from_paths(paths, cfg.seed))
}
