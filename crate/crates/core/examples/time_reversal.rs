//! An asymmetric pulse (fast rise, slow fall) comes back time reversed.

use std::f64::consts::TAU;

use gem_core::analysis::metrics::{forward_shape_fidelity, time_reversal_fidelity};
use gem_core::error::Result;
use gem_core::grid::{MediumParams, SimulationGrid};
use gem_core::pulse::PulseSpec;
use gem_core::schedule::{GradientEvent, GradientSchedule};
use gem_core::solver::run;
use num_complex::Complex64;

fn main() -> Result<()> {
    let grid = SimulationGrid::new(6.0, 768, 100.0, 0.0025)?;
    let medium = MediumParams::from_beta(3.75, TAU)?;
    let schedule = GradientSchedule::new(TAU, 3.0).with_event(GradientEvent::GlobalFlip { t_us: 50.0 });
    let pulse = PulseSpec::ExpRamp {
        t0_us: 15.0,
        rise_us: 0.5,
        fall_us: 2.0,
        amplitude: Complex64::new(1.0, 0.0),
    };
    let result = run(&grid, &medium, &schedule, &pulse)?;

    let reversed = time_reversal_fidelity(&result, 50.0)?;
    let forward = forward_shape_fidelity(&result, 50.0)?;
    println!("overlap with the reversed input  {reversed:.5}");
    println!("overlap with the input as sent   {forward:.5}");

    // Coarse text trace of the envelopes around the input and the echo.
    let peak = result.input_series.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    for (label, series, from) in [("in ", &result.input_series, 10.0), ("out", &result.output_series, 80.0)] {
        let line: String = (0..60)
            .map(|i| {
                let t = from + i as f64 * 0.2;
                let v = series.values[(t / series.dt_us).round() as usize].norm() / peak;
                [' ', '.', ':', '|', '#'][((v * 4.0).round() as usize).min(4)]
            })
            .collect();
        println!("{label} {from:>5.1} us [{line}]");
    }
    Ok(())
}
