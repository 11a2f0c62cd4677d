use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use super::config::{Calibration, ExperimentConfig};
use crate::equilibrium::{GeneratorMode, TimeGrid};
use crate::error::{Error, Result};

pub const TOOL: &str = "feegame";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

pub const EXPM_METHOD: &str = "scaling-and-squaring Pade(13) on one time step, backward recursion";
pub const VOLUME_CONVENTION: &str = "notional in X: sum of pre-trade Z_-/Z_+ times step size";
pub const EVENT_SCHEME: &str =
    "per step one Bernoulli draw per venue side, p = 1 - exp(-lambda dt), pre-step state";
pub const FEE_LOOKUP: &str = "nearest-left time grid point";
pub const PATH_SEEDING: &str = "ChaCha8 seeded with seed XOR path index";
pub const CONSTANT_RULE: &str = "(p* + m*)/2 at t = 0.5 with every venue at its centre";
pub const STRATEGIC_PROTOCOL: &str =
    "at each snapshot time a taker buys and sells M one-step child orders across M venues (one monopoly step in total), best composition";

/// Per-venue parameters that a calibration produced.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CalibrationMapping {
    pub calibration: Calibration,
    pub monopoly_k: f64,
    pub monopoly_lambda: f64,
    pub depth_sq: f64,
    pub rate_step: f64,
    pub k0: f64,
    pub k_cross: f64,
    pub lambda_buy: f64,
    pub lambda_sell: f64,
    pub zeta: f64,
}

/// Everything needed to tell two runs apart. Carries no timestamp, so it
/// is a pure function of the config.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub tool: String,
    pub tool_version: String,
    pub config_sha256: String,
    pub experiment: String,
    pub venues: usize,
    pub mapping: CalibrationMapping,
    pub time_grid: TimeGrid,
    pub expm: String,
    pub generator_mode: GeneratorMode,
    pub fee_lookup: String,
    pub volume_convention: String,
    pub event_scheme: String,
    pub seed: u64,
    pub n_paths: usize,
    pub path_seeding: String,
    pub linear_window: usize,
    pub constant_policy: String,
    pub strategic_protocol: String,
    pub snapshot_times: Vec<f64>,
    pub config: ExperimentConfig,
}

/// SHA-256 of the config's JSON serialization.
pub fn config_hash(cfg: &ExperimentConfig) -> String {
    let bytes = serde_json::to_vec(cfg).expect("config serializes");
    hex::encode(Sha256::digest(&bytes))
}

impl RunManifest {
    pub fn new(cfg: &ExperimentConfig) -> Result<Self> {
        let (grids, flow) = cfg.market_for(cfg.venues, cfg.lambda)?;
        let spec = grids[0].spec();
        let mapping = CalibrationMapping {
            calibration: if cfg.venues == 1 {
                Calibration::Monopoly
            } else {
                cfg.calibration
            },
            monopoly_k: cfg.k,
            monopoly_lambda: cfg.lambda,
            depth_sq: spec.depth_sq,
            rate_step: spec.rate_step,
            k0: flow.k0[0],
            k_cross: flow.rival_weights(0).next().unwrap_or(0.0),
            lambda_buy: flow.lambda_buy[0],
            lambda_sell: flow.lambda_sell[0],
            zeta: flow.zeta,
        };
        Ok(Self {
            tool: TOOL.into(),
            tool_version: TOOL_VERSION.into(),
            config_sha256: config_hash(cfg),
            experiment: cfg.name.clone(),
            venues: cfg.venues,
            mapping,
            time_grid: cfg.time()?,
            expm: EXPM_METHOD.into(),
            generator_mode: cfg.generator_mode,
            fee_lookup: FEE_LOOKUP.into(),
            volume_convention: VOLUME_CONVENTION.into(),
            event_scheme: EVENT_SCHEME.into(),
            seed: cfg.seed,
            n_paths: cfg.n_paths,
            path_seeding: PATH_SEEDING.into(),
            linear_window: cfg.linear_window,
            constant_policy: CONSTANT_RULE.into(),
            strategic_protocol: STRATEGIC_PROTOCOL.into(),
            snapshot_times: cfg.scan.snapshot_times.clone(),
            config: cfg.clone(),
        })
    }

    /// `#`-prefixed lines placed above every CSV header.
    pub fn comment_lines(&self) -> Vec<String> {
        vec![
            format!("# {} {}", self.tool, self.tool_version),
            format!("# experiment: {}", self.experiment),
            format!("# config_sha256: {}", self.config_sha256),
            format!(
                "# venues: {} calibration: {} seed: {} n_paths: {}",
                self.venues, self.mapping.calibration, self.seed, self.n_paths
            ),
            format!(
                "# time_grid: T={} steps={} generator: {}",
                self.time_grid.horizon, self.time_grid.steps, self.generator_mode
            ),
            format!("# volume: {}", self.volume_convention),
        ]
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self).expect("manifest serializes");
        text.push('\n');
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}
