//! Flip the gradient along a line in (z, t). Each stored frequency component
//! sits at its own position, so it is released at its own time and the
//! echo reads the spectrum out in time.

use gem_core::analysis::metrics::find_lobes_with_floor;
use gem_core::analysis::spectrum::series_spectrum;
use gem_core::error::Result;
use gem_core::scenario::config::parse_config;
use gem_core::scenario::presets::preset_text;

fn main() -> Result<()> {
    let config = parse_config(preset_text("linear-dispersion").expect("built-in preset"))?;
    let result = config.scenario()?.run()?;
    let echo = result.output_series.gate(80.0, 135.0);

    let lobes = find_lobes_with_floor(&echo, 0.1, 0.05);
    println!("{} lobes", lobes.len());
    for lobe in &lobes {
        let spectrum = series_spectrum(&echo, (lobe.t_start, lobe.t_end), 8)?;
        println!(
            "  peak {:>7.2} us  width {:>5.2} us  centroid {:>6.3} rad/us  energy {:.3}",
            lobe.t_peak,
            lobe.width(),
            spectrum.centroid_rad_per_us,
            lobe.energy / result.input_series.energy(),
        );
    }
    Ok(())
}
