use num_complex::Complex64;
use rustfft::FftPlanner;

use super::spectrum::crossing;
use crate::error::{GemError, Result};
use crate::solver::{SimulationResult, TimeSeries};

/// Gated output energy over total input energy.
pub fn recall_efficiency(result: &SimulationResult, gate: (f64, f64)) -> Result<f64> {
    let input = result.input_series.energy();
    if !(input > 0.0) {
        return Err(GemError::Degenerate("input energy is zero".into()));
    }
    Ok(result.output_series.gate(gate.0, gate.1).energy() / input)
}

/// Maximum normalized cross-correlation of `|E_out|` (after `tau_flip`)
/// with the time-reversed `|E_in|`, over all lags.
pub fn time_reversal_fidelity(result: &SimulationResult, tau_flip: f64) -> Result<f64> {
    let (out, input) = envelopes_after(result, tau_flip)?;
    let reversed: Vec<f64> = input.iter().rev().copied().collect();
    max_normalized_correlation(&out, &reversed)
}

/// The same correlation against the input in its original orientation.
pub fn forward_shape_fidelity(result: &SimulationResult, tau_flip: f64) -> Result<f64> {
    let (out, input) = envelopes_after(result, tau_flip)?;
    max_normalized_correlation(&out, &input)
}

fn envelopes_after(result: &SimulationResult, tau_flip: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let series = &result.output_series;
    let t_end = series.time(series.len().saturating_sub(1));
    let out: Vec<f64> = series.gate(tau_flip, t_end).values.iter().map(|v| v.norm()).collect();
    let input: Vec<f64> = result.input_series.values.iter().map(|v| v.norm()).collect();
    Ok((out, input))
}

/// `max_lag sum a(t) b(t + lag) / (|a| |b|)` over every lag at which the
/// sequences overlap.
pub fn max_normalized_correlation(a: &[f64], b: &[f64]) -> Result<f64> {
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if a.is_empty() || b.is_empty() || !(na > 0.0) || !(nb > 0.0) {
        return Err(GemError::Degenerate("zero signal in correlation".into()));
    }
    let n = (a.len() + b.len()).next_power_of_two();
    let mut fa = vec![Complex64::new(0.0, 0.0); n];
    let mut fb = vec![Complex64::new(0.0, 0.0); n];
    for (i, &x) in a.iter().enumerate() {
        fa[i] = Complex64::new(x, 0.0);
    }
    // Reversing b turns the correlation into a convolution.
    for (i, &x) in b.iter().rev().enumerate() {
        fb[i] = Complex64::new(x, 0.0);
    }
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(n).process(&mut fa);
    planner.plan_fft_forward(n).process(&mut fb);
    for (x, y) in fa.iter_mut().zip(&fb) {
        *x *= y;
    }
    planner.plan_fft_inverse(n).process(&mut fa);
    let best = fa[..a.len() + b.len() - 1]
        .iter()
        .map(|v| v.re / n as f64)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok((best / (na * nb)).clamp(0.0, 1.0))
}

/// `V = 2 |int a* b| / (int |a|^2 + int |b|^2)`.
pub fn interference_visibility(a: &TimeSeries, b: &TimeSeries) -> Result<f64> {
    if a.len() != b.len()
        || (a.dt_us - b.dt_us).abs() > 1e-12 * a.dt_us
        || (a.t0_us - b.t0_us).abs() > 1e-9 * a.dt_us
    {
        return Err(GemError::Contract("visibility needs series on the same time grid".into()));
    }
    let overlap: Complex64 = a.values.iter().zip(&b.values).map(|(x, y)| x.conj() * y).sum();
    let ea: f64 = a.values.iter().map(|x| x.norm_sqr()).sum();
    let eb: f64 = b.values.iter().map(|x| x.norm_sqr()).sum();
    if !(ea > 0.0) || !(eb > 0.0) {
        return Err(GemError::Degenerate("visibility needs nonzero energy in both series".into()));
    }
    Ok((2.0 * overlap.norm() / (ea + eb)).min(1.0))
}

/// A contiguous region where `|x|^2` stays above a threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct Lobe {
    pub t_peak: f64,
    pub peak_power: f64,
    /// Interpolated threshold crossings.
    pub t_start: f64,
    pub t_end: f64,
    /// `int |x|^2 dt` over the lobe's samples.
    pub energy: f64,
}

impl Lobe {
    pub fn width(&self) -> f64 {
        self.t_end - self.t_start
    }
}

/// Lobes of `|x|^2` above `rel_level` times its global maximum.
pub fn find_lobes(series: &TimeSeries, rel_level: f64) -> Vec<Lobe> {
    find_lobes_with_floor(series, rel_level, rel_level)
}

/// Lobes with hysteresis: connected regions above `rel_floor` that reach
/// `rel_level`, both relative to the global maximum of `|x|^2`. Ripple that
/// dips briefly under `rel_level` no longer splits a lobe. The lobe edges
/// are the `rel_floor` crossings.
pub fn find_lobes_with_floor(series: &TimeSeries, rel_level: f64, rel_floor: f64) -> Vec<Lobe> {
    let p: Vec<f64> = series.values.iter().map(|v| v.norm_sqr()).collect();
    let max = p.iter().copied().fold(0.0, f64::max);
    if max <= 0.0 {
        return Vec::new();
    }
    let level = rel_level * max;
    let floor = rel_floor.min(rel_level) * max;
    let mut lobes = Vec::new();
    let mut i = 0;
    while i < p.len() {
        if p[i] < floor {
            i += 1;
            continue;
        }
        let start = i;
        while i < p.len() && p[i] >= floor {
            i += 1;
        }
        let end = i - 1;
        let best = (start..=end).max_by(|&a, &b| p[a].total_cmp(&p[b])).unwrap_or(start);
        if p[best] < level {
            continue;
        }
        let t_start = if start == 0 {
            series.time(0)
        } else {
            crossing(series.time(start - 1), p[start - 1], series.time(start), p[start], floor)
        };
        let t_end = if end + 1 == p.len() {
            series.time(end)
        } else {
            crossing(series.time(end), p[end], series.time(end + 1), p[end + 1], floor)
        };
        lobes.push(Lobe {
            t_peak: series.time(best),
            peak_power: p[best],
            t_start,
            t_end,
            energy: p[start..=end].iter().sum::<f64>() * series.dt_us,
        });
    }
    lobes
}

/// FWHM of `|x|^2` in us. Fails with the candidate peak times when more
/// than one lobe crosses half maximum.
pub fn duration_fwhm(series: &TimeSeries) -> Result<f64> {
    let lobes = find_lobes(series, 0.5);
    match lobes.as_slice() {
        [] => Err(GemError::Degenerate("series has no energy".into())),
        [one] => Ok(one.width()),
        many => Err(GemError::MultipleLobes(many.iter().map(|l| l.t_peak).collect())),
    }
}

/// Smallest window holding every sample above `rel_level` of the peak
/// power, for exploratory use.
pub fn auto_gate(series: &TimeSeries, rel_level: f64) -> Option<(f64, f64)> {
    let lobes = find_lobes(series, rel_level);
    Some((lobes.first()?.t_start, lobes.last()?.t_end))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaussian(t0: f64, fwhm: f64, dt: f64, n: usize) -> TimeSeries {
        let rate = 2.0 * std::f64::consts::LN_2 / (fwhm * fwhm);
        TimeSeries::new(
            0.0,
            dt,
            (0..n)
                .map(|i| {
                    let u = i as f64 * dt - t0;
                    Complex64::new((-rate * u * u).exp(), 0.0)
                })
                .collect(),
        )
    }

    #[test]
    fn fwhm_of_sampled_gaussian() {
        for w in [0.8, 2.0, 3.2] {
            let s = gaussian(20.0, w, 0.01, 4000);
            assert!((duration_fwhm(&s).unwrap() - w).abs() < 0.01);
        }
    }

    #[test]
    fn floor_bridges_shallow_ripple() {
        let g = gaussian(20.0, 4.0, 0.01, 4000);
        let rippled = TimeSeries::new(
            0.0,
            0.01,
            g.values
                .iter()
                .enumerate()
                .map(|(i, v)| v * (1.0 + 0.2 * (i as f64 * 0.01 * 20.0).sin()))
                .collect(),
        );
        assert!(find_lobes(&rippled, 0.3).len() > 1);
        assert_eq!(find_lobes_with_floor(&rippled, 0.3, 0.15).len(), 1);
    }

    #[test]
    fn two_lobes_are_reported() {
        let a = gaussian(10.0, 1.0, 0.01, 4000);
        let b = gaussian(25.0, 1.0, 0.01, 4000);
        let sum = TimeSeries::new(0.0, 0.01, a.values.iter().zip(&b.values).map(|(x, y)| x + y).collect());
        match duration_fwhm(&sum) {
            Err(GemError::MultipleLobes(peaks)) => {
                assert_eq!(peaks.len(), 2);
                assert!((peaks[0] - 10.0).abs() < 0.02 && (peaks[1] - 25.0).abs() < 0.02);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn visibility_identities() {
        let a = gaussian(10.0, 2.0, 0.01, 2000);
        assert!((interference_visibility(&a, &a).unwrap() - 1.0).abs() < 1e-12);
        let phased = TimeSeries::new(0.0, 0.01, a.values.iter().map(|x| x * Complex64::from_polar(1.0, 1.1)).collect());
        assert!((interference_visibility(&a, &phased).unwrap() - 1.0).abs() < 1e-12);
        let half = TimeSeries::new(0.0, 0.01, a.values.iter().map(|x| x * 0.5).collect());
        // Unequal energies: 2 * 0.5 / (1 + 0.25) = 0.8.
        assert!((interference_visibility(&a, &half).unwrap() - 0.8).abs() < 1e-12);
        let short = TimeSeries::new(0.0, 0.01, a.values[..10].to_vec());
        assert!(matches!(interference_visibility(&a, &short), Err(GemError::Contract(_))));
    }

    #[test]
    fn correlation_bounds() {
        let bump = |c: f64| move |i: usize| (-((i as f64 - c) / 10.0).powi(2)).exp();
        let a: Vec<f64> = (0..200).map(bump(80.0)).collect();
        let shifted: Vec<f64> = (0..300).map(bump(210.0)).collect();
        assert!((max_normalized_correlation(&a, &shifted).unwrap() - 1.0).abs() < 1e-9);
        assert!(max_normalized_correlation(&a, &[0.0; 5]).is_err());
    }

    #[test]
    fn auto_gate_brackets_pulse() {
        let s = gaussian(20.0, 2.0, 0.01, 4000);
        let (a, b) = auto_gate(&s, 0.01).unwrap();
        assert!(a < 18.0 && b > 22.0 && a > 15.0 && b < 25.0);
    }
}
