//! Store a Gaussian pulse in a linearly broadened line and recall it by
//! reversing the gradient at 50 us.
//!
//! ```text
//! cargo run --release --example uniform_echo
//! ```

use std::f64::consts::TAU;

use gem_core::analysis::ledger::{energy_budget, max_relative_residual};
use gem_core::analysis::metrics::{duration_fwhm, recall_efficiency, time_reversal_fidelity};
use gem_core::error::Result;
use gem_core::grid::{MediumParams, SimulationGrid};
use gem_core::pulse::PulseSpec;
use gem_core::schedule::{GradientEvent, GradientSchedule};
use gem_core::solver::run;

fn main() -> Result<()> {
    let eta0 = TAU; // 1 MHz/mm
    let tau = 50.0;
    let grid = SimulationGrid::new(6.0, 768, 100.0, 0.0025)?;
    let medium = MediumParams::from_beta(3.75, eta0)?;
    let schedule = GradientSchedule::new(eta0, 3.0).with_event(GradientEvent::GlobalFlip { t_us: tau });
    let pulse = PulseSpec::gaussian(15.0, 2.0, 1.0);

    let started = std::time::Instant::now();
    let result = run(&grid, &medium, &schedule, &pulse)?;
    println!("{} steps in {:.2?}", grid.n_steps(), started.elapsed());

    let gate = (70.0, 100.0);
    let echo = result.output_series.gate(gate.0, gate.1);
    println!("echo peak      {:.3} us (input at 15 us, flip at {tau} us)", echo.peak_time().unwrap_or(f64::NAN));
    println!("echo FWHM      {:.4} us", duration_fwhm(&echo)?);
    println!("efficiency     {:.5}", recall_efficiency(&result, gate)?);
    println!("reversal fid.  {:.6}", time_reversal_fidelity(&result, tau)?);
    println!("ledger error   {:.2e}", max_relative_residual(&result)?);

    let budget = energy_budget(&result, gate)?;
    println!(
        "budget         transmitted {:.2e}, echo {:.5}, late {:.2e}, stored {:.2e}",
        budget.transmitted, budget.echo, budget.late, budget.stored_at_end
    );
    Ok(())
}
