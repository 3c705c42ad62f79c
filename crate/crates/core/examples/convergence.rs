//! Numerical health of the solver: energy ledger, temporal convergence order
//! and agreement with the independent reference integrator.
//!
//! The reference comparison defaults to refinement 2 to keep the run short;
//! pass a different factor as the first argument.

use std::f64::consts::TAU;

use gem_core::analysis::ledger::max_relative_residual;
use gem_core::error::Result;
use gem_core::grid::{MediumParams, SimulationGrid};
use gem_core::oracle::{convergence_order, l2_relative, reference_run};
use gem_core::pulse::PulseSpec;
use gem_core::schedule::{GradientEvent, GradientSchedule};
use gem_core::solver::Scenario;
use num_complex::Complex64;

fn main() -> Result<()> {
    let refinement: usize = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(2);
    let base = Scenario {
        grid: SimulationGrid::new(6.0, 768, 100.0, 0.0025)?,
        medium: MediumParams::from_beta(3.75, TAU)?,
        schedule: GradientSchedule::new(TAU, 3.0).with_event(GradientEvent::GlobalFlip { t_us: 50.0 }),
        pulse: PulseSpec::gaussian(15.0, 2.0, 1.0),
    };

    let coarse = max_relative_residual(&base.run()?)?;
    let fine = max_relative_residual(&base.with_dt(0.00125)?.run()?)?;
    println!("ledger residual  dt 2.5 ns {coarse:.3e}   dt 1.25 ns {fine:.3e}   ratio {:.3}", coarse / fine);

    let report = convergence_order(&base, &[0.01, 0.005, 0.0025])?;
    println!("differences {:?}", report.differences);
    println!("order {:?} flags {:?}", report.order, report.flags);

    let main = base.run()?;
    let reference = reference_run(&base.grid, &base.medium, &base.schedule, &base.pulse, refinement)?;
    let full = l2_relative(&main.output_series.values, &reference.output_series.values)?;
    let mag = |v: &[Complex64]| v.iter().map(|x| Complex64::new(x.norm(), 0.0)).collect::<Vec<_>>();
    let modulus = l2_relative(&mag(&main.output_series.values), &mag(&reference.output_series.values))?;
    println!("reference x{refinement}: L2 {full:.3e}, L2 of |E| only {modulus:.3e}");
    Ok(())
}
