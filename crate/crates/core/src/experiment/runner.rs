use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use super::catalog::{self, ScanPoint};
use super::config::ExperimentConfig;
use super::manifest::RunManifest;
use super::output::{num, write_csv};
use crate::equilibrium::{
    constant_policy, fit_linear_policy, solve_game, Equilibrium, FeePolicy, GameInputs,
    PolicyKind,
};
use crate::error::{Error, Result};
use crate::metrics::batch_slippage;
use crate::simulator::{run_batch, BatchResult, Estimate, SimConfig, VenueStats};

/// One simulated market under one policy kind.
#[derive(Debug, Clone)]
pub struct PolicyRun {
    pub kind: PolicyKind,
    pub batch: BatchResult,
}

/// Results behind a table: the competitive market and, when requested,
/// the monopoly with the same base parameters.
#[derive(Debug, Clone)]
pub struct TableReport {
    pub venues: usize,
    pub competition: Vec<PolicyRun>,
    pub monopoly: Vec<PolicyRun>,
}

impl TableReport {
    pub fn competition(&self, kind: PolicyKind) -> Option<&BatchResult> {
        self.competition.iter().find(|r| r.kind == kind).map(|r| &r.batch)
    }

    pub fn monopoly(&self, kind: PolicyKind) -> Option<&BatchResult> {
        self.monopoly.iter().find(|r| r.kind == kind).map(|r| &r.batch)
    }

    /// Rows in table order: players, then the total, then the monopoly.
    pub fn rows(&self) -> Vec<(String, PolicyKind, VenueStats)> {
        let mut rows = Vec::new();
        for v in 0..self.venues {
            for run in &self.competition {
                rows.push((format!("Player {}", v + 1), run.kind, run.batch.venues[v]));
            }
        }
        if self.venues > 1 {
            for run in &self.competition {
                rows.push(("Total".to_string(), run.kind, run.batch.total));
            }
        }
        for run in &self.monopoly {
            rows.push(("Monopoly".to_string(), run.kind, run.batch.total));
        }
        rows
    }
}

const TABLE_HEADER: [&str; 12] = [
    "player", "type", "fees", "fees_se", "sell", "sell_se", "buy", "buy_se", "vol", "vol_se",
    "boundary_hits", "boundary_hits_se",
];

/// Runs one experiment config and writes its artifacts under
/// `<out_root>/<name>/`.
#[derive(Debug)]
pub struct Runner {
    cfg: ExperimentConfig,
    manifest: RunManifest,
    dir: PathBuf,
    threads: Option<usize>,
    trade_logs: bool,
    scan: OnceLock<Vec<ScanPoint>>,
}

impl Runner {
    pub fn new(cfg: ExperimentConfig, out_root: &Path) -> Result<Self> {
        cfg.validate()?;
        let manifest = RunManifest::new(&cfg)?;
        let dir = out_root.join(&cfg.name);
        Ok(Self {
            cfg,
            manifest,
            dir,
            threads: None,
            trade_logs: false,
            scan: OnceLock::new(),
        })
    }

    /// Simulation worker threads. Results do not depend on it.
    pub fn with_threads(mut self, threads: Option<usize>) -> Self {
        self.threads = threads;
        self
    }

    /// Also write every trade of every path.
    pub fn with_trade_logs(mut self, on: bool) -> Self {
        self.trade_logs = on;
        self
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.cfg
    }

    pub fn manifest(&self) -> &RunManifest {
        &self.manifest
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub(crate) fn comments(&self) -> Vec<String> {
        self.manifest.comment_lines()
    }

    fn write_manifest(&self) -> Result<PathBuf> {
        std::fs::create_dir_all(&self.dir).map_err(|e| Error::io(&self.dir, e))?;
        let path = self.dir.join("manifest.json");
        self.manifest.write(&path)?;
        Ok(path)
    }

    pub fn solve_game_at(&self, venues: usize, lambda: f64) -> Result<Equilibrium> {
        solve_game(self.cfg.game_for(venues, lambda)?)
    }

    pub fn solve(&self) -> Result<Equilibrium> {
        self.solve_game_at(self.cfg.venues, self.cfg.lambda)
    }

    /// Solves the game and writes one CSV per player and stored time slice.
    pub fn solve_and_write(&self) -> Result<(Equilibrium, Vec<PathBuf>)> {
        let eq = self.solve()?;
        let mut written = vec![self.write_manifest()?];
        let time = eq.inputs.time;
        let m = eq.venues();
        let stride = self.cfg.surface_time_stride;
        let mut slices: Vec<usize> = (0..time.points()).step_by(stride).collect();
        if slices.last() != Some(&time.steps) {
            slices.push(time.steps);
        }
        let comments = self.comments();
        for h in 0..m {
            let fees = eq.fees(h);
            let grid = &eq.inputs.grids[h];
            let rivals: Vec<usize> = (0..m).filter(|&u| u != h).collect();
            let mut header = vec!["t".to_string(), "own_j".to_string()];
            header.extend(rivals.iter().map(|u| format!("j_player_{}", u + 1)));
            header.extend(["y", "z", "w", "buy_fee", "sell_fee"].map(String::from));
            let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
            let dims = fees.surface().rival_dims().to_vec();
            let player_dir = self.dir.join("surfaces").join(format!("player_{}", h + 1));
            for &k in &slices {
                let t = time.time(k);
                let mut rows = Vec::with_capacity(fees.surface().tuples() * grid.len());
                for rival_pos in crate::equilibrium::lattice(&dims) {
                    let rival_j: Vec<String> = rival_pos
                        .iter()
                        .zip(&dims)
                        .map(|(&p, &n)| (p as i32 - (n / 2) as i32).to_string())
                        .collect();
                    let col = fees.surface().column(fees.surface().tuple_index(&rival_pos), k);
                    for (p, j) in grid.indices().enumerate() {
                        let mut row = vec![num(t), j.to_string()];
                        row.extend(rival_j.iter().cloned());
                        row.push(num(grid.y_values()[p]));
                        row.push(num(grid.z_at(p)));
                        row.push(num(col[p]));
                        row.push(super::output::opt(fees.fee_in_column(
                            crate::market::Side::Buy,
                            col,
                            p,
                        )));
                        row.push(super::output::opt(fees.fee_in_column(
                            crate::market::Side::Sell,
                            col,
                            p,
                        )));
                        rows.push(row);
                    }
                }
                let path = player_dir.join(format!("t_{k:05}.csv"));
                write_csv(&path, &comments, &header_refs, rows)?;
                written.push(path);
            }
        }
        Ok((eq, written))
    }

    /// Fee policies of every venue under `kind`.
    pub fn policies(&self, eq: &Equilibrium, kind: PolicyKind) -> Result<Vec<FeePolicy>> {
        let m = eq.venues();
        match kind {
            PolicyKind::Equilibrium => Ok(eq.policies()),
            PolicyKind::Linear => (0..m)
                .map(|h| Ok(FeePolicy::Linear(fit_linear_policy(&eq.fees(h), self.cfg.linear_window)?)))
                .collect(),
            PolicyKind::Constant => (0..m).map(|h| constant_policy(&eq.fees(h))).collect(),
            PolicyKind::Zero => Ok(vec![FeePolicy::Zero; m]),
        }
    }

    /// Simulation settings for `inputs` under the given policies.
    pub fn sim_config(
        &self,
        inputs: &GameInputs,
        policies: Vec<FeePolicy>,
        n_paths: usize,
    ) -> SimConfig {
        let mut sim = SimConfig::new(
            inputs.time,
            n_paths,
            self.cfg.seed,
            inputs.grids.clone(),
            inputs.flow.clone(),
            self.cfg.oracle,
            policies,
        );
        sim.threads = self.threads;
        sim.record_trades = self.trade_logs;
        sim
    }

    fn run_kinds(&self, eq: &Equilibrium) -> Result<Vec<PolicyRun>> {
        self.cfg
            .policies
            .iter()
            .map(|&kind| {
                let sim = self.sim_config(&eq.inputs, self.policies(eq, kind)?, self.cfg.n_paths);
                Ok(PolicyRun {
                    kind,
                    batch: run_batch(&sim)?,
                })
            })
            .collect()
    }

    /// Simulates every policy kind, with the monopoly benchmark when
    /// configured, and writes `table.csv`.
    pub fn table(&self) -> Result<TableReport> {
        let eq = self.solve()?;
        let competition = self.run_kinds(&eq)?;
        drop(eq);
        let monopoly = if self.cfg.monopoly_benchmark && self.cfg.venues > 1 {
            let mono = self.solve_game_at(1, self.cfg.lambda)?;
            self.run_kinds(&mono)?
        } else {
            Vec::new()
        };
        let report = TableReport {
            venues: self.cfg.venues,
            competition,
            monopoly,
        };
        self.write_manifest()?;
        let rows = report.rows().into_iter().map(|(label, kind, s)| {
            let mut row = vec![label, kind.label().to_string()];
            for e in [s.fees, s.sell, s.buy, s.volume, s.boundary_hits] {
                row.push(num(e.mean));
                row.push(num(e.stderr));
            }
            row
        });
        write_csv(&self.dir.join("table.csv"), &self.comments(), &TABLE_HEADER, rows)?;
        Ok(report)
    }

    /// Simulates every policy kind and writes long-format aggregates, plus
    /// trade logs when enabled.
    pub fn simulate(&self) -> Result<Vec<PolicyRun>> {
        let eq = self.solve()?;
        let runs = self.run_kinds(&eq)?;
        self.write_manifest()?;
        let mut rows = Vec::new();
        let push = |rows: &mut Vec<Vec<String>>, venue: &str, kind: PolicyKind, stat: &str, e: Estimate| {
            rows.push(vec![
                venue.to_string(),
                kind.to_string(),
                stat.to_string(),
                num(e.mean),
                num(e.stderr),
            ]);
        };
        for run in &runs {
            let labelled = run
                .batch
                .venues
                .iter()
                .enumerate()
                .map(|(v, s)| ((v + 1).to_string(), s))
                .chain(std::iter::once(("total".to_string(), &run.batch.total)));
            for (venue, s) in labelled {
                for (stat, e) in [
                    ("fees", s.fees),
                    ("sell", s.sell),
                    ("buy", s.buy),
                    ("volume", s.volume),
                    ("boundary_hits", s.boundary_hits),
                ] {
                    push(&mut rows, &venue, run.kind, stat, e);
                }
            }
            let slip = batch_slippage(&run.batch);
            push(&mut rows, "total", run.kind, "avg_slippage", slip.avg_slippage);
            let point = |x: f64| Estimate {
                mean: x,
                stderr: f64::NAN,
            };
            push(&mut rows, "total", run.kind, "slippage_ratio_of_means", point(slip.ratio_of_means));
            push(&mut rows, "total", run.kind, "convexity_component", point(slip.convexity_component));
            push(&mut rows, "total", run.kind, "fee_component", point(slip.fee_component));
            if self.trade_logs {
                self.write_trades(run)?;
            }
        }
        write_csv(
            &self.dir.join("simulate.csv"),
            &self.comments(),
            &["venue", "policy", "statistic", "mean", "stderr"],
            rows,
        )?;
        Ok(runs)
    }

    fn write_trades(&self, run: &PolicyRun) -> Result<()> {
        let rows = run.batch.paths.iter().flat_map(|p| {
            p.trades.iter().flatten().map(move |t| {
                vec![
                    p.index.to_string(),
                    t.step.to_string(),
                    num(t.time),
                    (t.venue + 1).to_string(),
                    t.side.to_string(),
                    t.index.to_string(),
                    num(t.size),
                    num(t.rate),
                    num(t.exec_rate),
                    num(t.mid_rate),
                    num(t.fee),
                    num(t.fee_cash),
                ]
            })
        });
        write_csv(
            &self.dir.join(format!("trades_{}.csv", run.kind)),
            &self.comments(),
            &[
                "path", "step", "t", "venue", "side", "index", "size", "rate", "exec_rate",
                "mid_rate", "fee", "fee_cash",
            ],
            rows,
        )
    }

    /// The market-activity scan, computed once per runner.
    pub fn scan(&self) -> Result<&[ScanPoint]> {
        if let Some(points) = self.scan.get() {
            return Ok(points);
        }
        let points = catalog::activity_scan(self)?;
        Ok(self.scan.get_or_init(|| points))
    }

    /// Writes the CSVs of one catalog figure.
    pub fn figure(&self, id: &str) -> Result<Vec<PathBuf>> {
        self.write_manifest()?;
        catalog::write_figure(self, id)
    }
}
