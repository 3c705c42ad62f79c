use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{GemError, Result};
use crate::solver::SimulationResult;

/// `|F_z(alpha)|^2` per snapshot, with `F(k) = int alpha(z) e^{-i k z} dz`.
#[derive(Debug, Clone, PartialEq)]
pub struct KSpaceMap {
    /// Ascending, spanning `[-pi/dz, pi/dz)`.
    pub k_grid: Vec<f64>,
    pub times: Vec<f64>,
    /// Row-major `(t, k)`.
    pub intensity: Vec<f64>,
    /// Intensity-weighted mean k per snapshot; NaN for an empty slice.
    pub k_centroid_series: Vec<f64>,
}

impl KSpaceMap {
    pub fn nk(&self) -> usize {
        self.k_grid.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let nk = self.nk();
        &self.intensity[i * nk..(i + 1) * nk]
    }

    /// Index of the snapshot closest to `t_us`.
    pub fn nearest(&self, t_us: f64) -> Option<usize> {
        (0..self.times.len()).min_by(|&a, &b| {
            (self.times[a] - t_us).abs().total_cmp(&(self.times[b] - t_us).abs())
        })
    }

    /// Separated peaks of a slice above `rel_threshold` of its maximum;
    /// regions closer than `min_gap` (rad/mm) count as one ridge.
    pub fn ridges(&self, i: usize, rel_threshold: f64, min_gap: f64) -> Vec<f64> {
        ridge_positions(&self.k_grid, self.row(i), rel_threshold, min_gap)
    }
}

/// Spatial spectrum of every stored polarization snapshot.
pub fn kspace_map(result: &SimulationResult) -> Result<KSpaceMap> {
    let snaps = &result.alpha_snapshots;
    if snaps.is_empty() {
        return Err(GemError::MissingData("no polarization snapshots".into()));
    }
    let nz = snaps.nz;
    let dz = result.grid.dz();
    let dk = std::f64::consts::TAU / (nz as f64 * dz);
    let half = nz / 2;
    let k_grid: Vec<f64> = (0..nz).map(|m| (m as f64 - half as f64) * dk).collect();

    let fft = FftPlanner::new().plan_fft_forward(nz);
    let mut buf = vec![Complex64::new(0.0, 0.0); nz];
    let mut intensity = Vec::with_capacity(snaps.len() * nz);
    let mut centroids = Vec::with_capacity(snaps.len());
    for i in 0..snaps.len() {
        buf.copy_from_slice(snaps.row(i));
        fft.process(&mut buf);
        let mut num = 0.0;
        let mut den = 0.0;
        for (m, k) in k_grid.iter().enumerate() {
            let src = (m + nz - half) % nz;
            let p = (buf[src] * dz).norm_sqr();
            intensity.push(p);
            num += k * p;
            den += p;
        }
        centroids.push(if den > 0.0 { num / den } else { f64::NAN });
    }
    Ok(KSpaceMap {
        k_grid,
        times: snaps.times_us.clone(),
        intensity,
        k_centroid_series: centroids,
    })
}

/// Highest point of each connected region of `y` above
/// `rel_threshold * max`, after merging regions separated by less than
/// `min_gap` in `x`.
pub fn ridge_positions(x: &[f64], y: &[f64], rel_threshold: f64, min_gap: f64) -> Vec<f64> {
    let max = y.iter().copied().fold(0.0, f64::max);
    if max <= 0.0 {
        return Vec::new();
    }
    let level = rel_threshold * max;
    let mut regions: Vec<(usize, usize)> = Vec::new();
    let mut i = 0;
    while i < y.len() {
        if y[i] < level {
            i += 1;
            continue;
        }
        let start = i;
        while i < y.len() && y[i] >= level {
            i += 1;
        }
        match regions.last_mut() {
            Some(last) if x[start] - x[last.1] < min_gap => last.1 = i - 1,
            _ => regions.push((start, i - 1)),
        }
    }
    regions
        .into_iter()
        .map(|(a, b)| {
            let best = (a..=b).max_by(|&p, &q| y[p].total_cmp(&y[q])).unwrap_or(a);
            x[best]
        })
        .collect()
}

/// Snapshot indices where the energy crossing either boundary within
/// `+-window_us` stays below `threshold` times the stored excitation.
pub fn deep_storage_mask(result: &SimulationResult, window_us: f64, threshold: f64) -> Vec<bool> {
    let dt = result.grid.dt_us();
    let n = result.input_series.len();
    let mut flux = Vec::with_capacity(n + 1);
    flux.push(0.0);
    for i in 0..n {
        let p = result.input_series.values[i].norm_sqr() + result.output_series.values[i].norm_sqr();
        flux.push(flux[i] + p * dt);
    }
    let half = (window_us / dt).round() as usize;
    let stride = result.grid.snapshot_stride();
    (0..result.alpha_snapshots.len())
        .map(|s| {
            let i = s * stride;
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(n);
            let crossing = flux[hi] - flux[lo];
            let stored = result.stored_excitation_series[i];
            stored > 0.0 && crossing < threshold * stored
        })
        .collect()
}

/// Measured against predicted `dk/dt` between two consecutive snapshots.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftSample {
    pub t_us: f64,
    pub measured: f64,
    /// `-eta_eff`, the stored-weight average of `-d eta/dz`.
    pub expected: f64,
}

impl DriftSample {
    pub fn relative_error(&self) -> f64 {
        (self.measured - self.expected).abs() / self.expected.abs()
    }
}

/// Centroid drift rate over every snapshot pair that lies in deep storage
/// with no schedule change in between.
pub fn k_drift_samples(result: &SimulationResult, map: &KSpaceMap, mask: &[bool]) -> Vec<DriftSample> {
    let z = result.grid.z_grid();
    let mut out = Vec::new();
    for i in 0..map.times.len().saturating_sub(1) {
        let (t0, t1) = (map.times[i], map.times[i + 1]);
        if !(mask[i] && mask[i + 1]) || result.schedule.changes_between(t0, t1) {
            continue;
        }
        let row = result.alpha_snapshots.row(i);
        let mid = 0.5 * (t0 + t1);
        let (mut num, mut den) = (0.0, 0.0);
        for (zj, a) in z.iter().zip(row) {
            let w = a.norm_sqr();
            num += w * result.schedule.slope_at(mid, *zj);
            den += w;
        }
        if den <= 0.0 {
            continue;
        }
        out.push(DriftSample {
            t_us: mid,
            measured: (map.k_centroid_series[i + 1] - map.k_centroid_series[i]) / (t1 - t0),
            expected: -num / den,
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{MediumParams, SimulationGrid};
    use crate::schedule::GradientSchedule;
    use crate::solver::{Snapshots, TimeSeries};

    fn result_with(rows: &[Vec<Complex64>], grid: SimulationGrid) -> SimulationResult {
        let mut snaps = Snapshots {
            nz: grid.nz(),
            ..Snapshots::default()
        };
        for (i, r) in rows.iter().enumerate() {
            snaps.push(i as f64, r);
        }
        let schedule = GradientSchedule::new(1.0, 1.0).validate(&grid).unwrap();
        SimulationResult {
            input_series: TimeSeries::new(0.0, 1.0, vec![]),
            output_series: TimeSeries::new(0.0, 1.0, vec![]),
            alpha_snapshots: snaps,
            e_snapshots: Snapshots::default(),
            event_log: vec![],
            grid,
            medium: MediumParams::new(1.0, 1.0).unwrap(),
            schedule,
            stored_excitation_series: vec![],
        }
    }

    #[test]
    fn plane_wave_lands_on_its_k() {
        let grid = SimulationGrid::new(2.0, 128, 1.0, 0.5).unwrap();
        let dz = grid.dz();
        let k0 = -10.0 * std::f64::consts::TAU / (128.0 * dz);
        let row: Vec<Complex64> = grid.z_grid().iter().map(|z| Complex64::from_polar(1.0, k0 * z)).collect();
        let map = kspace_map(&result_with(&[row], grid)).unwrap();
        let peak = (0..map.nk()).max_by(|&a, &b| map.row(0)[a].total_cmp(&map.row(0)[b])).unwrap();
        assert!((map.k_grid[peak] - k0).abs() < 1e-9);
        assert!((map.k_centroid_series[0] - k0).abs() < 1e-9);
        assert!((map.k_grid[0] + std::f64::consts::PI / dz).abs() < 1e-9);
    }

    #[test]
    fn real_symmetric_profile_has_symmetric_intensity() {
        let grid = SimulationGrid::new(2.0, 64, 1.0, 0.5).unwrap();
        let n = 64;
        // Symmetric under j -> (n - j) mod n, the discrete form of z -> -z.
        let row: Vec<Complex64> = (0..n)
            .map(|j| {
                let d = j.min(n - j) as f64;
                Complex64::new((-d * d / 40.0).exp(), 0.0)
            })
            .collect();
        let map = kspace_map(&result_with(&[row], grid)).unwrap();
        let r = map.row(0);
        let top = r.iter().copied().fold(0.0, f64::max);
        for m in 1..n / 2 {
            assert!((r[n / 2 + m] - r[n / 2 - m]).abs() <= 1e-12 * top);
        }
    }

    #[test]
    fn missing_snapshots() {
        let grid = SimulationGrid::new(2.0, 16, 1.0, 0.5).unwrap();
        assert!(matches!(kspace_map(&result_with(&[], grid)), Err(GemError::MissingData(_))));
    }

    #[test]
    fn ridges_are_counted() {
        let x: Vec<f64> = (0..100).map(|i| i as f64).collect();
        let y: Vec<f64> = x
            .iter()
            .map(|v| (-(v - 30.0) * (v - 30.0) / 8.0).exp() + 0.8 * (-(v - 70.0) * (v - 70.0) / 8.0).exp())
            .collect();
        assert_eq!(ridge_positions(&x, &y, 0.3, 0.0), vec![30.0, 70.0]);
        assert_eq!(ridge_positions(&x, &y, 0.9, 0.0), vec![30.0]);
        assert_eq!(ridge_positions(&x, &y, 0.3, 50.0), vec![30.0]);
    }
}
