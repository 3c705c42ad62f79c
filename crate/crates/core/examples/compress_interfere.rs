//! Two pulses of different durations are stored in opposite halves of the
//! medium. Halving the gradient of one half while it is read out stretches
//! the short pulse to the length of the long one, and both leave together.

use gem_core::error::Result;
use gem_core::scenario::config::parse_config;
use gem_core::scenario::presets::preset_text;
use gem_core::scenario::{run_scenario, RunOptions};

fn main() -> Result<()> {
    let config = parse_config(preset_text("compress-interfere").expect("built-in preset"))?;
    let report = run_scenario(&config, &RunOptions { dry: true, ..Default::default() })?;
    let s = &report.summary;
    for key in [
        "part_fwhm_us",
        "fwhm_ratio",
        "part_peak_us",
        "part_efficiency",
        "visibility",
        "visibility_uncompensated",
    ] {
        if let Some(v) = s.get(key) {
            println!("{key:>26} = {v}");
        }
    }
    Ok(())
}
