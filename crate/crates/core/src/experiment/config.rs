use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::equilibrium::{GameInputs, GeneratorMode, PolicyKind, TimeGrid};
use crate::error::{Error, Result};
use crate::market::{FlowParams, OracleSpec};
use crate::pool::{InventoryGrid, PoolSpec};

pub const SCHEMA_VERSION: u32 = 1;

/// How a monopoly market is split into `M` venues.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Calibration {
    /// Depth `D/M²` per venue on the monopoly rate grid (so trades are
    /// `1/M` the monopoly size), `k0 = k_cross = k`, full `λ` per venue.
    #[default]
    FairSplit,
    /// Depth `D/M²` per venue on the monopoly inventory spacing (rate step
    /// `M` times larger), `k0 = k_cross = k/M`, `λ/M` per venue.
    Canonical,
    /// A single venue with the monopoly parameters.
    Monopoly,
}

impl fmt::Display for Calibration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Calibration::FairSplit => "fair-split",
            Calibration::Canonical => "canonical",
            Calibration::Monopoly => "monopoly",
        })
    }
}

/// The monopoly market every calibration starts from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaseMarket {
    #[serde(default = "default_depth")]
    pub monopoly_depth_sq: f64,
    #[serde(default = "default_halfwidth")]
    pub grid_halfwidth: usize,
    #[serde(default = "default_rate_step")]
    pub rate_step: f64,
    #[serde(default = "default_center")]
    pub center_rate: f64,
}

impl Default for BaseMarket {
    fn default() -> Self {
        Self {
            monopoly_depth_sq: default_depth(),
            grid_halfwidth: default_halfwidth(),
            rate_step: default_rate_step(),
            center_rate: default_center(),
        }
    }
}

fn default_depth() -> f64 {
    1e8
}
fn default_halfwidth() -> usize {
    20
}
fn default_rate_step() -> f64 {
    0.1
}
fn default_center() -> f64 {
    100.0
}
fn default_k() -> f64 {
    2.0
}
fn default_lambda() -> f64 {
    100.0
}
fn default_horizon() -> f64 {
    1.0
}
fn default_dt() -> f64 {
    1e-3
}
fn default_paths() -> usize {
    100_000
}
fn default_seed() -> u64 {
    20_240_917
}
fn default_policies() -> Vec<PolicyKind> {
    vec![PolicyKind::Equilibrium, PolicyKind::Linear, PolicyKind::Constant]
}
fn default_window() -> usize {
    2
}
fn default_oracle() -> OracleSpec {
    OracleSpec::constant(100.0)
}
fn default_stride() -> usize {
    1
}
fn default_true() -> bool {
    true
}

/// Explicit per-venue flow parameters that replace the calibrated ones.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    pub k0: Option<f64>,
    pub k_cross: Option<f64>,
    pub lambda_buy: Option<f64>,
    pub lambda_sell: Option<f64>,
    pub zeta: Option<f64>,
}

/// Market-activity scan behind the volume-axis figures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    #[serde(default = "default_scan_lambdas")]
    pub lambdas: Vec<f64>,
    #[serde(default = "default_structures")]
    pub structures: Vec<usize>,
    #[serde(default = "default_scan_paths")]
    pub n_paths: usize,
    /// Times at which strategic takers arrive.
    #[serde(default = "default_snapshots")]
    pub snapshot_times: Vec<f64>,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self {
            lambdas: default_scan_lambdas(),
            structures: default_structures(),
            n_paths: default_scan_paths(),
            snapshot_times: default_snapshots(),
        }
    }
}

fn default_scan_lambdas() -> Vec<f64> {
    vec![25.0, 50.0, 100.0, 200.0, 400.0]
}
fn default_structures() -> Vec<usize> {
    vec![1, 2, 3]
}
fn default_scan_paths() -> usize {
    10_000
}
fn default_snapshots() -> Vec<f64> {
    vec![0.4, 0.45, 0.5, 0.55, 0.6]
}

/// One experiment, as read from a JSON file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub name: String,
    /// Number of competing venues.
    pub venues: usize,
    #[serde(default)]
    pub calibration: Calibration,
    /// Monopoly decay parameter.
    #[serde(default = "default_k")]
    pub k: f64,
    /// Monopoly baseline intensity per side.
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    #[serde(default)]
    pub market: BaseMarket,
    #[serde(default)]
    pub overrides: Overrides,
    #[serde(default = "default_oracle")]
    pub oracle: OracleSpec,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_paths")]
    pub n_paths: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_policies")]
    pub policies: Vec<PolicyKind>,
    /// Half-width of the box the linear policy is fitted on.
    #[serde(default = "default_window")]
    pub linear_window: usize,
    #[serde(default)]
    pub generator_mode: GeneratorMode,
    /// Also run the single-venue market with the same monopoly parameters.
    #[serde(default = "default_true")]
    pub monopoly_benchmark: bool,
    #[serde(default)]
    pub figures: Vec<String>,
    #[serde(default)]
    pub scan: ScanConfig,
    /// Write every n-th time slice of the solved surfaces.
    #[serde(default = "default_stride")]
    pub surface_time_stride: usize,
}

impl ExperimentConfig {
    /// A config with every optional field at its default.
    pub fn new(name: &str, venues: usize) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            name: name.to_string(),
            venues,
            calibration: Calibration::default(),
            k: default_k(),
            lambda: default_lambda(),
            market: BaseMarket::default(),
            overrides: Overrides::default(),
            oracle: default_oracle(),
            horizon: default_horizon(),
            dt: default_dt(),
            n_paths: default_paths(),
            seed: default_seed(),
            policies: default_policies(),
            linear_window: default_window(),
            generator_mode: GeneratorMode::default(),
            monopoly_benchmark: true,
            figures: Vec::new(),
            scan: ScanConfig::default(),
            surface_time_stride: default_stride(),
        }
    }

    pub fn from_json(text: &str, origin: &Path) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|source| Error::Json {
            path: origin.to_path_buf(),
            source,
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        // an unreadable config is the user's to fix, not a runtime failure
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text, path)
    }

    pub fn validate(&self) -> Result<()> {
        let field = |name: &str, msg: String| Err(Error::Config(format!("{name}: {msg}")));
        if self.schema_version != SCHEMA_VERSION {
            return field(
                "schema_version",
                format!("expected {SCHEMA_VERSION}, got {}", self.schema_version),
            );
        }
        if self.name.is_empty()
            || !self
                .name
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
        {
            return field("name", "use letters, digits, '_' or '-'".into());
        }
        if self.venues == 0 {
            return field("venues", "must be at least 1".into());
        }
        if self.calibration == Calibration::Monopoly && self.venues != 1 {
            return field("calibration", "monopoly needs venues = 1".into());
        }
        if !(self.k.is_finite() && self.k > 0.0) {
            return field("k", format!("must be positive, got {}", self.k));
        }
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return field("lambda", format!("must be non-negative, got {}", self.lambda));
        }
        if self.n_paths == 0 {
            return field("n_paths", "must be at least 1".into());
        }
        if self.policies.is_empty() {
            return field("policies", "name at least one policy kind".into());
        }
        if self.surface_time_stride == 0 {
            return field("surface_time_stride", "must be at least 1".into());
        }
        for id in &self.figures {
            if !super::catalog::FIGURE_IDS.contains(&id.as_str()) {
                return field(
                    "figures",
                    format!(
                        "unknown figure id '{id}'; valid ids: {}",
                        super::catalog::FIGURE_IDS.join(", ")
                    ),
                );
            }
        }
        if self.scan.lambdas.is_empty() || self.scan.structures.is_empty() {
            return field("scan", "needs at least one lambda and one structure".into());
        }
        if self.scan.structures.contains(&0) {
            return field("scan.structures", "venue counts must be positive".into());
        }
        if self.scan.n_paths == 0 {
            return field("scan.n_paths", "must be at least 1".into());
        }
        TimeGrid::from_step(self.horizon, self.dt)?;
        self.oracle.validate()?;
        // building the market type-checks the remaining numbers
        self.market_for(self.venues, self.lambda)?;
        if self.linear_window >= self.market.grid_halfwidth {
            return field(
                "linear_window",
                format!("must be below grid_halfwidth {}", self.market.grid_halfwidth),
            );
        }
        Ok(())
    }

    pub fn time(&self) -> Result<TimeGrid> {
        TimeGrid::from_step(self.horizon, self.dt)
    }

    /// Pools and flow for `venues` competitors at monopoly intensity `lambda`.
    pub fn market_for(&self, venues: usize, lambda: f64) -> Result<(Vec<InventoryGrid>, FlowParams)> {
        let m = venues as f64;
        let base = &self.market;
        let calibration = if venues == 1 {
            Calibration::Monopoly
        } else {
            self.calibration
        };
        let (depth, step, k0, kc, lam) = match calibration {
            Calibration::Monopoly => (base.monopoly_depth_sq, base.rate_step, self.k, 0.0, lambda),
            Calibration::FairSplit => (
                base.monopoly_depth_sq / (m * m),
                base.rate_step,
                self.k,
                self.k,
                lambda,
            ),
            Calibration::Canonical => (
                base.monopoly_depth_sq / (m * m),
                base.rate_step * m,
                self.k / m,
                self.k / m,
                lambda / m,
            ),
        };
        let spec = PoolSpec {
            depth_sq: depth,
            grid_halfwidth: base.grid_halfwidth,
            rate_step: step,
            center_rate: base.center_rate,
            ..PoolSpec::constant_product(depth, base.grid_halfwidth)
        };
        let grid = InventoryGrid::build(&spec)?;
        let o = &self.overrides;
        let mut flow = FlowParams::symmetric(
            venues,
            lam,
            o.k0.unwrap_or(k0),
            if venues == 1 { 0.0 } else { o.k_cross.unwrap_or(kc) },
        );
        if let Some(l) = o.lambda_buy {
            flow.lambda_buy = vec![l; venues];
        }
        if let Some(l) = o.lambda_sell {
            flow.lambda_sell = vec![l; venues];
        }
        flow.zeta = o.zeta.unwrap_or(0.0);
        flow.validate()?;
        Ok((vec![grid; venues], flow))
    }

    /// Solver inputs for `venues` competitors at intensity `lambda`.
    pub fn game_for(&self, venues: usize, lambda: f64) -> Result<GameInputs> {
        let (grids, flow) = self.market_for(venues, lambda)?;
        Ok(GameInputs {
            grids,
            flow,
            s: self.oracle.s0,
            time: self.time()?,
            mode: self.generator_mode,
        })
    }

    pub fn game(&self) -> Result<GameInputs> {
        self.game_for(self.venues, self.lambda)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_parses() {
        let cfg = ExperimentConfig::from_json(
            r#"{"schema_version": 1, "name": "t", "venues": 2}"#,
            Path::new("t.json"),
        )
        .unwrap();
        assert_eq!(cfg, ExperimentConfig::new("t", 2));
        let (grids, flow) = cfg.market_for(2, 100.0).unwrap();
        assert_eq!(grids[0].y(0).unwrap(), 500.0);
        assert_eq!(flow.k_total(0), 4.0);
        assert_eq!(flow.lambda_buy, vec![100.0, 100.0]);
    }

    #[test]
    fn monopoly_and_canonical_markets() {
        let cfg = ExperimentConfig::new("t", 2);
        let (g1, f1) = cfg.market_for(1, 100.0).unwrap();
        assert_eq!(g1[0].y(0).unwrap(), 1000.0);
        assert_eq!(f1.k_total(0), 2.0);
        let mut canon = cfg.clone();
        canon.calibration = Calibration::Canonical;
        let (g2, f2) = canon.market_for(2, 100.0).unwrap();
        // same inventory spacing as the monopoly near the centre
        let d1 = g1[0].buy_step(0).unwrap().unwrap().1;
        let d2 = g2[0].buy_step(0).unwrap().unwrap().1;
        assert!((d1 - d2).abs() / d1 < 1e-3);
        assert_eq!(f2.k_total(0), 2.0);
        assert_eq!(f2.lambda_buy[0], 50.0);
    }

    #[test]
    fn rejects_bad_fields() {
        let bad = [
            r#"{"schema_version": 2, "name": "t", "venues": 2}"#,
            r#"{"schema_version": 1, "name": "t", "venues": 0}"#,
            r#"{"schema_version": 1, "name": "t", "venues": 2, "k": -1}"#,
            r#"{"schema_version": 1, "name": "t", "venues": 2, "figures": ["nope"]}"#,
            r#"{"schema_version": 1, "name": "t", "venues": 2, "dt": 0.3}"#,
            r#"{"schema_version": 1, "name": "t", "venues": 2, "unknown": 1}"#,
            r#"{"schema_version": 1, "name": "t", "venues": 2, "linear_window": 20}"#,
            r#"{"schema_version": 1, "name": "a b", "venues": 2}"#,
            r#"{"schema_version": 1, "name": "t", "venues": 2, "market": {"grid_halfwidth": 2000}}"#,
        ];
        for text in bad {
            let err = ExperimentConfig::from_json(text, Path::new("x.json")).unwrap_err();
            assert!(err.is_config(), "{text}: {err}");
        }
    }

    #[test]
    fn overrides_apply() {
        let mut cfg = ExperimentConfig::new("t", 2);
        cfg.overrides.k_cross = Some(0.5);
        cfg.overrides.lambda_sell = Some(80.0);
        let (_, flow) = cfg.market_for(2, 100.0).unwrap();
        assert_eq!(flow.k_total(1), 2.5);
        assert_eq!(flow.lambda_sell, vec![80.0, 80.0]);
        assert_eq!(flow.lambda_buy, vec![100.0, 100.0]);
    }
}
