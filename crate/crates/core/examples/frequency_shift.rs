//! Shift the recalled light by adding a detuning offset at the flip, run the
//! five offsets concurrently and compare spectral centroids.

use std::f64::consts::TAU;

use gem_core::analysis::spectrum::output_spectrum;
use gem_core::error::Result;
use gem_core::grid::{MediumParams, SimulationGrid};
use gem_core::pulse::PulseSpec;
use gem_core::schedule::{GradientEvent, GradientSchedule};
use gem_core::solver::Scenario;
use rayon::prelude::*;

fn scenario(delta_mhz: f64) -> Result<Scenario> {
    Ok(Scenario {
        grid: SimulationGrid::new(6.0, 768, 100.0, 0.0025)?,
        medium: MediumParams::from_beta(3.75, TAU)?,
        schedule: GradientSchedule::new(TAU, 3.0)
            .with_event(GradientEvent::GlobalFlip { t_us: 50.0 })
            .with_event(GradientEvent::OffsetAfter {
                t_us: 50.0,
                delta_rad_per_us: TAU * delta_mhz,
                z0_mm: 0.0,
                z1_mm: 6.0,
            }),
        pulse: PulseSpec::gaussian(15.0, 2.0, 1.0),
    })
}

fn main() -> Result<()> {
    let deltas = [-1.0, -0.5, 0.0, 0.5, 1.0];
    let centroids = deltas
        .par_iter()
        .map(|&d| {
            let r = scenario(d)?.run()?;
            Ok(output_spectrum(&r, (70.0, 100.0))?.centroid_rad_per_us)
        })
        .collect::<Result<Vec<f64>>>()?;

    let reference = centroids[2];
    println!("delta (MHz)  centroid (rad/us)  shift / (2 pi delta)");
    for (d, c) in deltas.iter().zip(&centroids) {
        let ratio = if *d == 0.0 { f64::NAN } else { (c - reference) / (TAU * d) };
        println!("{d:>10.1}  {c:>17.4}  {ratio:>10.4}");
    }
    // With the e^{-i w t} transform convention a positive offset moves the
    // centroid to negative omega.
    Ok(())
}
