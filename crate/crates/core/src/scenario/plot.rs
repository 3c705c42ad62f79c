//! SVG figures.

use std::path::Path;

use plotters::prelude::*;

use crate::analysis::kspace::KSpaceMap;
use crate::analysis::spectrum::SpectralReport;
use crate::error::{GemError, Result};
use crate::solver::TimeSeries;

const SIZE: (u32, u32) = (900, 520);
const HEAT_COLUMNS: usize = 256;
const HEAT_ROWS: usize = 200;

fn plot_err<E: std::fmt::Display>(e: E) -> GemError {
    std::io::Error::other(e.to_string()).into()
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !(lo.is_finite() && hi.is_finite()) || hi <= lo {
        (0.0, 1.0)
    } else {
        (lo, hi)
    }
}

/// `|E(t, 0)|` and `|E(t, L)|` against time.
pub fn series_plot(path: &Path, input: &TimeSeries, output: &TimeSeries) -> Result<()> {
    let root = SVGBackend::new(path, SIZE).into_drawing_area();
    root.fill(&WHITE).map_err(plot_err)?;
    let t_end = input.time(input.len().saturating_sub(1));
    let (_, top) = bounds(input.values.iter().chain(&output.values).map(|v| v.norm()));
    let mut chart = ChartBuilder::on(&root)
        .caption("boundary envelopes", ("sans-serif", 20))
        .margin(12)
        .x_label_area_size(40)
        .y_label_area_size(60)
        .build_cartesian_2d(input.t0_us..t_end, 0.0..top * 1.05)
        .map_err(plot_err)?;
    chart
        .configure_mesh()
        .x_desc("t (us)")
        .y_desc("|E|")
        .draw()
        .map_err(plot_err)?;
    let step = (input.len() / 4000).max(1);
    for (series, color, label) in [(input, BLUE, "input"), (output, RED, "output")] {
        chart
            .draw_series(LineSeries::new(
                series
                    .values
                    .iter()
                    .enumerate()
                    .step_by(step)
                    .map(|(i, v)| (series.time(i), v.norm())),
                color,
            ))
            .map_err(plot_err)?
            .label(label)
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], color));
    }
    chart
        .configure_series_labels()
        .border_style(BLACK)
        .draw()
        .map_err(plot_err)?;
    root.present().map_err(plot_err)
}

/// Power spectrum within `|w| <= span`.
pub fn spectrum_plot(path: &Path, report: &SpectralReport, span: f64) -> Result<()> {
    let root = SVGBackend::new(path, SIZE).into_drawing_area();
    root.fill(&WHITE).map_err(plot_err)?;
    let points: Vec<(f64, f64)> = report
        .omega_grid
        .iter()
        .zip(&report.power)
        .filter(|(w, _)| w.abs() <= span)
        .map(|(w, p)| (*w, *p))
        .collect();
    let (_, top) = bounds(points.iter().map(|p| p.1));
    let mut chart = ChartBuilder::on(&root)
        .caption("output spectrum", ("sans-serif", 20))
        .margin(12)
        .x_label_area_size(40)
        .y_label_area_size(70)
        .build_cartesian_2d(-span..span, 0.0..top * 1.05)
        .map_err(plot_err)?;
    chart
        .configure_mesh()
        .x_desc("omega (rad/us)")
        .y_desc("power")
        .draw()
        .map_err(plot_err)?;
    chart
        .draw_series(LineSeries::new(points, &BLACK))
        .map_err(plot_err)?;
    root.present().map_err(plot_err)
}

/// Heatmap of `|F(alpha)|^2` over `(t, k)`, binned to a fixed cell count
/// and normalized per plot on a log scale spanning four decades.
pub fn kspace_plot(path: &Path, map: &KSpaceMap) -> Result<()> {
    let root = SVGBackend::new(path, SIZE).into_drawing_area();
    root.fill(&WHITE).map_err(plot_err)?;
    let nt = map.times.len();
    let nk = map.nk();
    if nt == 0 || nk < 2 {
        return Err(GemError::MissingData("empty k-space map".into()));
    }
    let rows = HEAT_ROWS.min(nt);
    let cols = HEAT_COLUMNS.min(nk);
    let mut cells = vec![0.0_f64; rows * cols];
    for i in 0..nt {
        let r = i * rows / nt;
        for (m, &p) in map.row(i).iter().enumerate() {
            let c = m * cols / nk;
            let cell = &mut cells[r * cols + c];
            *cell = cell.max(p);
        }
    }
    let peak = cells.iter().copied().fold(0.0, f64::max);
    let (t0, t1) = (map.times[0], *map.times.last().unwrap_or(&map.times[0]));
    let (k0, k1) = (map.k_grid[0], map.k_grid[nk - 1]);
    let mut chart = ChartBuilder::on(&root)
        .caption("k-space intensity", ("sans-serif", 20))
        .margin(12)
        .x_label_area_size(40)
        .y_label_area_size(60)
        .build_cartesian_2d(t0..t1.max(t0 + 1e-9), k0..k1)
        .map_err(plot_err)?;
    chart
        .configure_mesh()
        .disable_mesh()
        .x_desc("t (us)")
        .y_desc("k (rad/mm)")
        .draw()
        .map_err(plot_err)?;
    let dt = (t1 - t0) / rows as f64;
    let dk = (k1 - k0) / cols as f64;
    chart
        .draw_series((0..rows).flat_map(|r| (0..cols).map(move |c| (r, c))).filter_map(|(r, c)| {
            let v = cells[r * cols + c];
            if peak <= 0.0 || v <= peak * 1e-4 {
                return None;
            }
            let level = 1.0 + (v / peak).log10() / 4.0;
            let x = t0 + r as f64 * dt;
            let y = k0 + c as f64 * dk;
            Some(Rectangle::new([(x, y), (x + dt, y + dk)], heat(level).filled()))
        }))
        .map_err(plot_err)?;
    root.present().map_err(plot_err)
}

/// Dark blue through yellow for `level` in `[0, 1]`.
fn heat(level: f64) -> RGBColor {
    let l = level.clamp(0.0, 1.0);
    let lerp = |a: f64, b: f64| (a + (b - a) * l).round() as u8;
    RGBColor(lerp(40.0, 250.0), lerp(20.0, 230.0), lerp(110.0, 30.0))
}
