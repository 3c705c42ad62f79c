//! Closed-form pulse spectra next to the FFT of the sampled envelope.

use std::f64::consts::TAU;

use gem_core::analysis::spectrum::series_spectrum;
use gem_core::error::Result;
use gem_core::pulse::{GaussianPulse, PulseSpec};
use gem_core::solver::TimeSeries;
use num_complex::Complex64;

fn main() -> Result<()> {
    let pulse = PulseSpec::AmplitudeModulated {
        base: GaussianPulse::new(12.0, 4.0, Complex64::new(1.0, 0.0), 0.0),
        mod_freq_rad_per_us: TAU * 0.4,
        mod_depth: 1.0,
    };
    pulse.validate()?;
    println!("energy {:.6}", pulse.energy()?);

    let dt = 0.005;
    let samples = TimeSeries::new(0.0, dt, (0..8000).map(|i| pulse.sample(i as f64 * dt)).collect());
    let numeric = series_spectrum(&samples, (0.0, 39.9), 8)?;

    let omegas = [-TAU * 0.4, 0.0, TAU * 0.4];
    let exact = pulse.analytic_spectrum(&omegas)?;
    println!("omega (rad/us)   analytic |X|^2   fft |X|^2");
    for (w, x) in omegas.iter().zip(&exact) {
        let i = numeric
            .omega_grid
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - w).abs().total_cmp(&(b.1 - w).abs()))
            .map_or(0, |(i, _)| i);
        println!("{w:>14.4} {:>16.5} {:>11.5}", x.norm_sqr(), numeric.power[i]);
    }
    Ok(())
}
