//! Store a carrier with two sidebands, release the sidebands at 60 us and
//! the carrier at 70 us, then check which band each echo carries.

use gem_core::error::Result;
use gem_core::scenario::config::parse_config;
use gem_core::scenario::presets::preset_text;
use gem_core::scenario::{run_scenario, RunOptions};

fn main() -> Result<()> {
    let config = parse_config(preset_text("split-recall").expect("built-in preset"))?;
    let report = run_scenario(&config, &RunOptions { dry: true, ..Default::default() })?;
    let s = &report.summary;

    for (i, label) in ["first echo (95-118 us)", "second echo (118-140 us)"].iter().enumerate() {
        println!(
            "{label}: {:.1}% of input, sideband {:.2}%, carrier {:.2}%",
            100.0 * s.value(&format!("gate{i}_energy_fraction")).unwrap_or(f64::NAN),
            100.0 * s.value(&format!("gate{i}_sideband_fraction")).unwrap_or(f64::NAN),
            100.0 * s.value(&format!("gate{i}_carrier_fraction")).unwrap_or(f64::NAN),
        );
    }
    if let Some(counts) = s.get("ridge_counts") {
        println!("k-space ridges at 55 us and 69 us: {counts}");
    }
    Ok(())
}
