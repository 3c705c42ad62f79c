//! Declarative scenarios: TOML configuration with explicit units, presets,
//! runs, sweeps and their artifacts.

pub mod config;
pub mod output;
pub mod plot;
pub mod presets;
pub mod runner;
pub mod units;

pub use config::{parse_config, ScenarioConfig};
pub use output::Summary;
pub use runner::{run_scenario, run_sweep, RunOptions, RunReport, SweepReport};
