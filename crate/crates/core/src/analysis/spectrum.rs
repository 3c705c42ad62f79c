use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{GemError, Result};
use crate::solver::{SimulationResult, TimeSeries};

/// Minimum zero-padding factor applied before the transform.
pub const DEFAULT_PADDING: usize = 8;

/// Power spectrum of a gated series.
///
/// Forward transform convention `X(w) = int x(t) e^{-i w t} dt`, so a tone
/// `e^{-i w0 t}` appears at `w = -w0`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralReport {
    pub omega_grid: Vec<f64>,
    pub power: Vec<f64>,
    pub centroid_rad_per_us: f64,
    pub fwhm_rad_per_us: f64,
    pub gate: (f64, f64),
    /// `|sum P dw / 2pi - sum |x|^2 dt|` relative to the time-domain energy.
    pub parseval_error: f64,
}

impl SpectralReport {
    pub fn bin_width(&self) -> f64 {
        self.omega_grid[1] - self.omega_grid[0]
    }

    /// `sum P dw / 2pi` over `lo <= w < hi`.
    pub fn band_energy(&self, lo: f64, hi: f64) -> f64 {
        let dw = self.bin_width();
        self.omega_grid
            .iter()
            .zip(&self.power)
            .filter(|(w, _)| **w >= lo && **w < hi)
            .map(|(_, p)| p)
            .sum::<f64>()
            * dw
            / std::f64::consts::TAU
    }

    pub fn total_energy(&self) -> f64 {
        self.power.iter().sum::<f64>() * self.bin_width() / std::f64::consts::TAU
    }

    pub fn peak_omega(&self) -> f64 {
        let i = (0..self.power.len())
            .max_by(|&a, &b| self.power[a].total_cmp(&self.power[b]))
            .unwrap_or(0);
        self.omega_grid[i]
    }
}

/// Spectrum of the output envelope inside `gate`.
pub fn output_spectrum(result: &SimulationResult, gate: (f64, f64)) -> Result<SpectralReport> {
    series_spectrum(&result.output_series, gate, DEFAULT_PADDING)
}

/// Rectangular-window spectrum of `series` over `gate`, zero-padded to at
/// least `padding` times the gate length (rounded up to a power of two).
pub fn series_spectrum(series: &TimeSeries, gate: (f64, f64), padding: usize) -> Result<SpectralReport> {
    let (t0, t1) = gate;
    if !(t0 < t1) {
        return Err(GemError::Contract(format!("gate ({t0}, {t1}) is empty")));
    }
    let t_last = series.time(series.len().saturating_sub(1));
    let slack = 1e-9 * series.dt_us;
    if t0 < series.t0_us - slack || t1 > t_last + slack {
        return Err(GemError::Contract(format!(
            "gate ({t0}, {t1}) lies outside the simulated window [{}, {t_last}]",
            series.t0_us
        )));
    }
    let gated = series.gate(t0, t1);
    let dt = series.dt_us;
    let time_energy: f64 = gated.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * dt;
    if gated.is_empty() || !(time_energy > 0.0) {
        return Err(GemError::UndefinedSpectrum(format!(
            "no energy inside gate ({t0}, {t1})"
        )));
    }

    let n = (gated.len() * padding.max(1)).next_power_of_two();
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    buf[..gated.len()].copy_from_slice(&gated.values);
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);

    let dw = std::f64::consts::TAU / (n as f64 * dt);
    let half = n / 2;
    let mut omega_grid = Vec::with_capacity(n);
    let mut power = Vec::with_capacity(n);
    for m in 0..n {
        // fftshift: bins half..n are the negative frequencies.
        let src = (m + half) % n;
        omega_grid.push((m as f64 - half as f64) * dw);
        power.push((buf[src] * dt).norm_sqr());
    }

    let total: f64 = power.iter().sum();
    let centroid = omega_grid.iter().zip(&power).map(|(w, p)| w * p).sum::<f64>() / total;
    let spectral_energy = total * dw / std::f64::consts::TAU;
    let parseval_error = (spectral_energy - time_energy).abs() / time_energy;
    let fwhm = half_max_width(&omega_grid, &power);

    Ok(SpectralReport {
        omega_grid,
        power,
        centroid_rad_per_us: centroid,
        fwhm_rad_per_us: fwhm,
        gate,
        parseval_error,
    })
}

/// Width of the lobe containing the maximum at half its height, with
/// linear interpolation at both crossings.
pub(crate) fn half_max_width(x: &[f64], y: &[f64]) -> f64 {
    let Some(peak) = (0..y.len()).max_by(|&a, &b| y[a].total_cmp(&y[b])) else {
        return 0.0;
    };
    let level = 0.5 * y[peak];
    let mut lo = peak;
    while lo > 0 && y[lo - 1] >= level {
        lo -= 1;
    }
    let mut hi = peak;
    while hi + 1 < y.len() && y[hi + 1] >= level {
        hi += 1;
    }
    let left = if lo == 0 {
        x[0]
    } else {
        crossing(x[lo - 1], y[lo - 1], x[lo], y[lo], level)
    };
    let right = if hi + 1 == y.len() {
        x[hi]
    } else {
        crossing(x[hi], y[hi], x[hi + 1], y[hi + 1], level)
    };
    right - left
}

pub(crate) fn crossing(x0: f64, y0: f64, x1: f64, y1: f64, level: f64) -> f64 {
    if y1 == y0 {
        return 0.5 * (x0 + x1);
    }
    x0 + (level - y0) * (x1 - x0) / (y1 - y0)
}
