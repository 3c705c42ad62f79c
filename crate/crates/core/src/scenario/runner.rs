//! Runs configured scenarios, computes their metrics and writes artifacts.

use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rayon::prelude::*;

use super::config::ScenarioConfig;
use super::output::{self, Summary};
use super::plot;
use crate::analysis::kspace::{deep_storage_mask, k_drift_samples, kspace_map};
use crate::analysis::ledger::{energy_budget, ledger_at_snapshots, max_relative_residual};
use crate::analysis::metrics::{
    auto_gate, duration_fwhm, find_lobes_with_floor, forward_shape_fidelity, interference_visibility, recall_efficiency,
    time_reversal_fidelity,
};
use crate::analysis::spectrum::series_spectrum;
use crate::error::{GemError, Result};
use crate::oracle::{l2_relative, reference_run};
use crate::solver::{SimulationResult, TimeSeries};

/// Environment variable naming the default output root.
pub const OUT_DIR_ENV: &str = "GEM_OUT_DIR";
/// Output root used when [`OUT_DIR_ENV`] is unset.
pub const DEFAULT_OUT_ROOT: &str = "gem-out";
/// Largest relative L2 difference accepted by `--verify`.
pub const VERIFY_TOLERANCE: f64 = 1e-3;
pub const DEFAULT_REFINEMENT: usize = 4;
/// Boundary energy below this fraction of the stored excitation counts as
/// deep storage for the k-drift check.
pub const DEEP_STORAGE_FRACTION: f64 = 0.01;

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Overrides the configured and default output directories.
    pub out_dir: Option<PathBuf>,
    /// Oracle refinement for verification, if requested.
    pub verify: Option<usize>,
    /// Forces SVG output on or off.
    pub svg: Option<bool>,
    /// Skip writing artifacts entirely.
    pub dry: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Verification {
    pub refinement: usize,
    pub l2: f64,
    /// L2 difference of `|E_out|` only.
    pub magnitude_l2: f64,
}

impl Verification {
    pub fn passed(&self) -> bool {
        self.l2 <= VERIFY_TOLERANCE
    }
}

#[derive(Debug)]
pub struct RunReport {
    pub summary: Summary,
    pub result: SimulationResult,
    /// Results of each composite part run alone, when the analysis needs them.
    pub parts: Vec<SimulationResult>,
    pub out_dir: Option<PathBuf>,
    pub verification: Option<Verification>,
}

/// `$GEM_OUT_DIR`, or `gem-out` in the working directory.
pub fn output_root() -> PathBuf {
    std::env::var_os(OUT_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_ROOT))
}

fn resolve_dir(config: &ScenarioConfig, opts: &RunOptions) -> PathBuf {
    opts.out_dir
        .clone()
        .or_else(|| config.outputs.directory.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| output_root().join(&config.name))
}

/// Runs one scenario. On divergence the partial result is still written,
/// together with `error.txt`, before the error is returned.
pub fn run_scenario(config: &ScenarioConfig, opts: &RunOptions) -> Result<RunReport> {
    let scenario = config.scenario()?;
    let dir = (!opts.dry).then(|| resolve_dir(config, opts));
    let result = match scenario.run() {
        Ok(r) => r,
        Err(GemError::RunDiverged {
            last_good_t_us,
            index,
            partial,
        }) => {
            if let Some(dir) = &dir {
                fs::create_dir_all(dir)?;
                let mut summary = Summary::default();
                summary.text("status", "diverged");
                summary.number("last_good_t_us", last_good_t_us);
                write_artifacts(dir, config, opts, &partial, &summary)?;
                fs::write(
                    dir.join("error.txt"),
                    format!("numeric divergence after t = {last_good_t_us} us at index {index}\n"),
                )?;
            }
            return Err(GemError::RunDiverged {
                last_good_t_us,
                index,
                partial,
            });
        }
        Err(e) => return Err(e),
    };

    let parts = match &config.analysis.visibility {
        Some(v) => {
            let scenarios = config.part_scenarios()?;
            v.parts
                .iter()
                .map(|&i| scenarios[i].run())
                .collect::<Result<Vec<_>>>()?
        }
        None => Vec::new(),
    };

    let mut summary = analyze(config, &result, &parts)?;

    let verification = match opts.verify {
        Some(refinement) => {
            let reference = reference_run(
                &scenario.grid,
                &scenario.medium,
                &scenario.schedule,
                &scenario.pulse,
                refinement,
            )?;
            let l2 = l2_relative(&result.output_series.values, &reference.output_series.values)?;
            let mags = |s: &TimeSeries| -> Vec<Complex64> {
                s.values.iter().map(|v| Complex64::new(v.norm(), 0.0)).collect()
            };
            let magnitude_l2 = l2_relative(&mags(&result.output_series), &mags(&reference.output_series))?;
            summary.count("oracle_refinement", refinement);
            summary.number("oracle_l2", l2);
            summary.number("oracle_magnitude_l2", magnitude_l2);
            Some(Verification {
                refinement,
                l2,
                magnitude_l2,
            })
        }
        None => None,
    };

    if let Some(dir) = &dir {
        fs::create_dir_all(dir)?;
        write_artifacts(dir, config, opts, &result, &summary)?;
    }
    Ok(RunReport {
        summary,
        result,
        parts,
        out_dir: dir,
        verification,
    })
}

fn write_artifacts(
    dir: &Path,
    config: &ScenarioConfig,
    opts: &RunOptions,
    result: &SimulationResult,
    summary: &Summary,
) -> Result<()> {
    let hash = config.hash();
    fs::write(dir.join("config.toml"), config.canonical_text())?;
    output::write_summary(&dir.join("summary.toml"), &hash, &config.name, summary)?;
    let map = kspace_map(result).ok();
    let spectrum = spectrum_for(config, result).ok();
    let span = config.analysis.spectrum_span.0;
    if config.outputs.csv {
        output::write_series(&dir.join("input.csv"), &hash, &result.input_series)?;
        output::write_series(&dir.join("output.csv"), &hash, &result.output_series)?;
        output::write_ledger(&dir.join("ledger.csv"), &hash, &ledger_at_snapshots(result))?;
        output::write_events(&dir.join("events.csv"), &hash, &result.event_log)?;
        if let Some(s) = &spectrum {
            output::write_spectrum(&dir.join("spectrum.csv"), &hash, s, span)?;
        }
        if let Some(m) = &map {
            output::write_kspace(&dir.join("kspace.csv"), &hash, m, config.analysis.kspace_every.0)?;
        }
    }
    if opts.svg.unwrap_or(config.outputs.svg) {
        plot::series_plot(&dir.join("series.svg"), &result.input_series, &result.output_series)?;
        if let Some(s) = &spectrum {
            plot::spectrum_plot(&dir.join("spectrum.svg"), s, span)?;
        }
        if let Some(m) = &map {
            plot::kspace_plot(&dir.join("kspace.svg"), m)?;
        }
    }
    Ok(())
}

fn window(result: &SimulationResult) -> (f64, f64) {
    let s = &result.output_series;
    (s.t0_us, s.time(s.len().saturating_sub(1)))
}

fn spectrum_for(
    config: &ScenarioConfig,
    result: &SimulationResult,
) -> Result<crate::analysis::spectrum::SpectralReport> {
    let gate = config
        .analysis
        .echo_gate
        .map(|[a, b]| (a.0, b.0))
        .unwrap_or_else(|| window(result));
    series_spectrum(&result.output_series, gate, config.analysis.spectrum_padding)
}

/// Every metric the configuration's analysis block asks for.
pub fn analyze(config: &ScenarioConfig, result: &SimulationResult, parts: &[SimulationResult]) -> Result<Summary> {
    let a = &config.analysis;
    let mut s = Summary::default();
    s.text("status", "ok");
    let input_energy = result.input_series.energy();
    s.number("input_energy", input_energy);
    if input_energy > 0.0 {
        s.number("ledger_max_residual", max_relative_residual(result)?);
    }

    if let Ok(report) = spectrum_for(config, result) {
        s.number("centroid_rad_per_us", report.centroid_rad_per_us);
        s.number("spectral_fwhm_rad_per_us", report.fwhm_rad_per_us);
        s.number("parseval_error", report.parseval_error);
    }

    if let Some([g0, g1]) = a.echo_gate {
        let gate = (g0.0, g1.0);
        if input_energy > 0.0 {
            s.number("efficiency", recall_efficiency(result, gate)?);
            let b = energy_budget(result, gate)?;
            s.number("transmitted_fraction", b.transmitted);
            s.number("late_fraction", b.late);
            s.number("stored_at_end_fraction", b.stored_at_end);
        }
        let gated = result.output_series.gate(gate.0, gate.1);
        if let Some(t) = gated.peak_time() {
            s.number("echo_peak_us", t);
        }
        match duration_fwhm(&gated) {
            Ok(w) => s.number("echo_fwhm_us", w),
            Err(GemError::MultipleLobes(peaks)) => s.list("echo_fwhm_ambiguous_peaks_us", peaks),
            Err(_) => {}
        }
        let lobes = lobe_metrics(&gated, a.lobe_level, a.spectrum_padding);
        s.count("lobe_count", lobes.len());
        s.list("lobe_peaks_us", lobes.iter().map(|l| l.0).collect());
        s.list("lobe_fwhm_us", lobes.iter().map(|l| l.1).collect());
        s.list("lobe_centroids_rad_per_us", lobes.iter().map(|l| l.2).collect());
    }

    if let Some(t) = a.tau_flip {
        if let (Ok(rev), Ok(fwd)) = (time_reversal_fidelity(result, t.0), forward_shape_fidelity(result, t.0)) {
            s.number("reversal_fidelity", rev);
            s.number("forward_fidelity", fwd);
        }
    }

    for (i, [g0, g1]) in a.gates.iter().enumerate() {
        let gated = result.output_series.gate(g0.0, g1.0);
        if input_energy > 0.0 {
            s.number(&format!("gate{i}_energy_fraction"), gated.energy() / input_energy);
        }
        if let (Some(split), Ok(report)) = (
            a.band_split,
            series_spectrum(&result.output_series, (g0.0, g1.0), a.spectrum_padding),
        ) {
            let total = report.total_energy();
            let carrier = report.band_energy(-split.0, split.0);
            s.number(&format!("gate{i}_carrier_fraction"), carrier / total);
            s.number(&format!("gate{i}_sideband_fraction"), 1.0 - carrier / total);
        }
    }

    if let Ok(map) = kspace_map(result) {
        if !a.ridge_times.is_empty() {
            let mut counts = Vec::new();
            for t in &a.ridge_times {
                let i = map.nearest(t.0).unwrap_or(0);
                counts.push(map.ridges(i, a.ridge_level, a.ridge_gap.0).len() as f64);
            }
            s.list("ridge_times_us", a.ridge_times.iter().map(|t| t.0).collect());
            s.list("ridge_counts", counts);
        }
        let mask = deep_storage_mask(result, a.deep_storage_window.0, DEEP_STORAGE_FRACTION);
        let drift = k_drift_samples(result, &map, &mask);
        s.count("kdrift_samples", drift.len());
        if !drift.is_empty() {
            let worst = drift.iter().map(|d| d.relative_error()).fold(0.0, f64::max);
            s.number("kdrift_max_rel_error", worst);
        }
    }

    if let Some(v) = &a.visibility {
        let (g0, g1) = (v.gate[0].0, v.gate[1].0);
        let first = parts[0].output_series.gate(g0, g1);
        let second = parts[1].output_series.gate(g0, g1);
        let compensated = TimeSeries::new(
            first.t0_us,
            first.dt_us,
            first
                .values
                .iter()
                .enumerate()
                .map(|(i, x)| x * Complex64::from_polar(1.0, -v.compensation.0 * first.time(i)))
                .collect(),
        );
        s.number("visibility", interference_visibility(&compensated, &second)?);
        s.number("visibility_uncompensated", interference_visibility(&first, &second)?);
        let w0 = duration_fwhm(&first);
        let w1 = duration_fwhm(&second);
        if let (Ok(w0), Ok(w1)) = (&w0, &w1) {
            s.list("part_fwhm_us", vec![*w0, *w1]);
            s.number("fwhm_ratio", w0 / w1);
        }
        s.list(
            "part_peak_us",
            [&first, &second].iter().map(|x| x.peak_time().unwrap_or(f64::NAN)).collect(),
        );
        s.list(
            "part_efficiency",
            parts.iter().map(|p| recall_efficiency(p, (g0, g1)).unwrap_or(f64::NAN)).collect(),
        );
    }
    Ok(s)
}

/// `(peak time, FWHM, spectral centroid)` per lobe, detected with a floor
/// at half the level. A lobe with ripple across its half maximum reports the
/// outermost half-maximum crossings. Each lobe is analyzed in a window reaching halfway to
/// its neighbours.
fn lobe_metrics(gated: &TimeSeries, level: f64, padding: usize) -> Vec<(f64, f64, f64)> {
    let lobes = find_lobes_with_floor(gated, level, 0.5 * level);
    if gated.is_empty() {
        return Vec::new();
    }
    let (start, end) = (gated.t0_us, gated.time(gated.len() - 1));
    (0..lobes.len())
        .map(|i| {
            let lo = if i == 0 { start } else { 0.5 * (lobes[i - 1].t_peak + lobes[i].t_peak) };
            let hi = if i + 1 == lobes.len() { end } else { 0.5 * (lobes[i].t_peak + lobes[i + 1].t_peak) };
            let piece = gated.gate(lo, hi);
            let fwhm = match duration_fwhm(&piece) {
                Err(GemError::MultipleLobes(_)) => auto_gate(&piece, 0.5).map_or(f64::NAN, |(a, b)| b - a),
                other => other.unwrap_or(f64::NAN),
            };
            let centroid = series_spectrum(gated, (lo, hi), padding)
                .map(|r| r.centroid_rad_per_us)
                .unwrap_or(f64::NAN);
            (lobes[i].t_peak, fwhm, centroid)
        })
        .collect()
}

/// One row per sweep value.
#[derive(Debug)]
pub struct SweepReport {
    pub parameter: String,
    pub rows: Vec<(String, std::result::Result<Summary, String>)>,
    pub table: Option<PathBuf>,
}

impl SweepReport {
    pub fn all_ok(&self) -> bool {
        self.rows.iter().all(|(_, r)| r.is_ok())
    }

    /// Numeric column `key`, `None` for failed rows.
    pub fn column(&self, key: &str) -> Vec<Option<f64>> {
        self.rows
            .iter()
            .map(|(_, r)| r.as_ref().ok().and_then(|s| s.value(key)))
            .collect()
    }
}

fn value_label(v: &toml::Value) -> String {
    match v {
        toml::Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Runs every sweep value concurrently, each in `run-NNN` under the
/// scenario directory, then writes `sweep.csv` in value order.
pub fn run_sweep(config: &ScenarioConfig, opts: &RunOptions) -> Result<SweepReport> {
    let plan = config.plan_sweep()?;
    let parameter = config.sweep.as_ref().map(|s| s.parameter.clone()).unwrap_or_default();
    let base = resolve_dir(config, opts);
    let rows: Vec<(String, std::result::Result<Summary, String>)> = plan
        .par_iter()
        .enumerate()
        .map(|(i, (value, cfg))| {
            let run_opts = RunOptions {
                out_dir: Some(base.join(format!("run-{i:03}"))),
                ..opts.clone()
            };
            let outcome = run_scenario(cfg, &run_opts).map_err(|e| e.to_string()).and_then(|r| {
                match &r.verification {
                    Some(v) if !v.passed() => Err(format!("verification failed: oracle L2 {:e}", v.l2)),
                    _ => Ok(r.summary),
                }
            });
            (value_label(value), outcome)
        })
        .collect();
    let table = if opts.dry {
        None
    } else {
        fs::create_dir_all(&base)?;
        let path = base.join("sweep.csv");
        output::write_sweep(&path, &config.hash(), &parameter, &rows)?;
        Some(path)
    };
    Ok(SweepReport {
        parameter,
        rows,
        table,
    })
}
