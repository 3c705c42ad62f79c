//! Spatial spectrum of the stored polarization during a uniform echo: the
//! excitation walks away from k = 0 at the gradient's rate, turns around at
//! the flip and is re-emitted when it returns. Writes a CSV and an SVG
//! heatmap to `$GEM_OUT_DIR/kspace-drift`.

use std::f64::consts::TAU;

use gem_core::analysis::kspace::{deep_storage_mask, k_drift_samples, kspace_map};
use gem_core::error::Result;
use gem_core::grid::{MediumParams, SimulationGrid};
use gem_core::pulse::PulseSpec;
use gem_core::scenario::{output, plot, runner};
use gem_core::schedule::{GradientEvent, GradientSchedule};
use gem_core::solver::run;

fn main() -> Result<()> {
    let grid = SimulationGrid::new(6.0, 768, 100.0, 0.0025)?.with_snapshot_stride(20)?;
    let medium = MediumParams::from_beta(3.75, TAU)?;
    let schedule = GradientSchedule::new(TAU, 3.0).with_event(GradientEvent::GlobalFlip { t_us: 50.0 });
    let result = run(&grid, &medium, &schedule, &PulseSpec::gaussian(15.0, 2.0, 1.0))?;
    let map = kspace_map(&result)?;

    for t in [10.0, 20.0, 35.0, 50.0, 65.0, 85.0] {
        let i = map.nearest(t).unwrap_or(0);
        println!("t = {:>5.1} us   k centroid {:>8.3} rad/mm", map.times[i], map.k_centroid_series[i]);
    }

    let mask = deep_storage_mask(&result, 1.0, 0.01);
    let drift = k_drift_samples(&result, &map, &mask);
    let worst = drift.iter().map(|d| d.relative_error()).fold(0.0, f64::max);
    println!("{} deep-storage samples, worst |dk/dt + eta| / |eta| = {worst:.2e}", drift.len());

    let dir = runner::output_root().join("kspace-drift");
    std::fs::create_dir_all(&dir)?;
    output::write_kspace(&dir.join("kspace.csv"), "example", &map, 0.5)?;
    plot::kspace_plot(&dir.join("kspace.svg"), &map)?;
    println!("wrote {}", dir.display());
    Ok(())
}
