//! The experiment configs shipped under `experiments/`, built in code so
//! the acceptance suite does not depend on the working directory.

use super::config::{Calibration, ExperimentConfig};
use super::catalog::FIGURE_IDS;

pub fn table1_k2() -> ExperimentConfig {
    let mut c = ExperimentConfig::new("table1_k2", 2);
    c.seed = 1;
    c
}

pub fn table2_k1() -> ExperimentConfig {
    let mut c = ExperimentConfig::new("table2_k1", 2);
    c.k = 1.0;
    c.seed = 2;
    c
}

pub fn table3_3players_k2() -> ExperimentConfig {
    let mut c = ExperimentConfig::new("table3_3players_k2", 3);
    c.seed = 3;
    c.monopoly_benchmark = false;
    c.surface_time_stride = 100;
    c
}

pub fn table4_3players_k1() -> ExperimentConfig {
    let mut c = ExperimentConfig::new("table4_3players_k1", 3);
    c.k = 1.0;
    c.seed = 4;
    c.monopoly_benchmark = false;
    c.surface_time_stride = 100;
    c
}

/// The duopoly on the monopoly's inventory spacing, with `k` and `λ`
/// divided between the venues.
pub fn canonical_duopoly() -> ExperimentConfig {
    let mut c = ExperimentConfig::new("canonical_duopoly", 2);
    c.calibration = Calibration::Canonical;
    c.seed = 7;
    c
}

pub fn figures_duopoly() -> ExperimentConfig {
    let mut c = ExperimentConfig::new("figures_duopoly", 2);
    c.seed = 5;
    c.figures = FIGURE_IDS[..4].iter().map(|s| s.to_string()).collect();
    c
}

pub fn activity_scan() -> ExperimentConfig {
    let mut c = ExperimentConfig::new("activity_scan", 2);
    c.seed = 6;
    c.figures = FIGURE_IDS[4..].iter().map(|s| s.to_string()).collect();
    c
}

/// Every shipped config with its file name.
pub fn all() -> Vec<(&'static str, ExperimentConfig)> {
    vec![
        ("table1_k2.json", table1_k2()),
        ("table2_k1.json", table2_k1()),
        ("table3_3players_k2.json", table3_3players_k2()),
        ("table4_3players_k1.json", table4_3players_k1()),
        ("canonical_duopoly.json", canonical_duopoly()),
        ("figures_duopoly.json", figures_duopoly()),
        ("activity_scan.json", activity_scan()),
    ]
}
