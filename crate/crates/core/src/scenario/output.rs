//! CSV and summary artifacts.
//!
//! Every file starts with a comment line carrying the crate version and the
//! configuration hash, followed by a header row.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::analysis::kspace::KSpaceMap;
use crate::analysis::ledger::LedgerRow;
use crate::analysis::spectrum::SpectralReport;
use crate::error::Result;
use crate::solver::{EventLogEntry, TimeSeries};
use crate::schedule::GradientEvent;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Ordered `key = value` metrics of one run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Summary {
    entries: Vec<(String, SummaryValue)>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SummaryValue {
    Number(f64),
    Count(usize),
    List(Vec<f64>),
    Text(String),
}

impl std::fmt::Display for SummaryValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SummaryValue::Number(x) => write!(f, "{}", fmt_f64(*x)),
            SummaryValue::Count(n) => write!(f, "{n}"),
            SummaryValue::List(v) => {
                let items: Vec<String> = v.iter().map(|x| fmt_f64(*x)).collect();
                write!(f, "[{}]", items.join(", "))
            }
            SummaryValue::Text(s) => write!(f, "{s:?}"),
        }
    }
}

/// Shortest round-trip text; non-finite values as quoted strings so the
/// summary stays valid TOML.
fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:?}")
    } else {
        format!("\"{x}\"")
    }
}

impl Summary {
    pub fn number(&mut self, key: &str, value: f64) {
        self.entries.push((key.into(), SummaryValue::Number(value)));
    }

    pub fn count(&mut self, key: &str, value: usize) {
        self.entries.push((key.into(), SummaryValue::Count(value)));
    }

    pub fn list(&mut self, key: &str, value: Vec<f64>) {
        self.entries.push((key.into(), SummaryValue::List(value)));
    }

    pub fn text(&mut self, key: &str, value: impl Into<String>) {
        self.entries.push((key.into(), SummaryValue::Text(value.into())));
    }

    pub fn get(&self, key: &str) -> Option<&SummaryValue> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v)
    }

    /// Numeric entry, if present.
    pub fn value(&self, key: &str) -> Option<f64> {
        match self.get(key)? {
            SummaryValue::Number(x) => Some(*x),
            SummaryValue::Count(n) => Some(*n as f64),
            _ => None,
        }
    }

    pub fn entries(&self) -> &[(String, SummaryValue)] {
        &self.entries
    }
}

fn stamp(out: &mut impl Write, hash: &str) -> Result<()> {
    writeln!(out, "# gem {VERSION} config-sha256 {hash}")?;
    Ok(())
}

fn csv_writer(path: &Path, hash: &str) -> Result<csv::Writer<BufWriter<File>>> {
    let mut file = BufWriter::new(File::create(path)?);
    stamp(&mut file, hash)?;
    Ok(csv::Writer::from_writer(file))
}

fn finish(w: csv::Writer<BufWriter<File>>) -> Result<()> {
    let mut inner = w.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?;
    inner.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> crate::error::GemError {
    std::io::Error::other(e.to_string()).into()
}

/// `t_us, re, im, abs`.
pub fn write_series(path: &Path, hash: &str, series: &TimeSeries) -> Result<()> {
    let mut w = csv_writer(path, hash)?;
    w.write_record(["t_us", "re", "im", "abs"]).map_err(csv_err)?;
    for (i, v) in series.values.iter().enumerate() {
        w.serialize((series.time(i), v.re, v.im, v.norm())).map_err(csv_err)?;
    }
    finish(w)
}

/// `omega_rad_per_us, power` restricted to `|omega| <= span`.
pub fn write_spectrum(path: &Path, hash: &str, report: &SpectralReport, span: f64) -> Result<()> {
    let mut w = csv_writer(path, hash)?;
    w.write_record(["omega_rad_per_us", "power"]).map_err(csv_err)?;
    for (om, p) in report.omega_grid.iter().zip(&report.power) {
        if om.abs() <= span {
            w.serialize((om, p)).map_err(csv_err)?;
        }
    }
    finish(w)
}

/// Long format `t_us, k_rad_per_mm, intensity`, one slice per `every` us.
pub fn write_kspace(path: &Path, hash: &str, map: &KSpaceMap, every: f64) -> Result<()> {
    let mut w = csv_writer(path, hash)?;
    w.write_record(["t_us", "k_rad_per_mm", "intensity"]).map_err(csv_err)?;
    for i in kspace_rows(map, every) {
        let t = map.times[i];
        for (k, p) in map.k_grid.iter().zip(map.row(i)) {
            w.serialize((t, k, p)).map_err(csv_err)?;
        }
    }
    finish(w)
}

/// Snapshot indices at least `every` us apart.
pub(crate) fn kspace_rows(map: &KSpaceMap, every: f64) -> Vec<usize> {
    let mut rows = Vec::new();
    let mut next = f64::NEG_INFINITY;
    for (i, &t) in map.times.iter().enumerate() {
        if t >= next - 1e-9 {
            rows.push(i);
            next = t + every;
        }
    }
    rows
}

/// `t_us, e_in_cum, e_out_cum, stored`.
pub fn write_ledger(path: &Path, hash: &str, rows: &[LedgerRow]) -> Result<()> {
    let mut w = csv_writer(path, hash)?;
    w.write_record(["t_us", "e_in_cum", "e_out_cum", "stored"]).map_err(csv_err)?;
    for r in rows {
        w.serialize((r.t_us, r.e_in_cum, r.e_out_cum, r.stored)).map_err(csv_err)?;
    }
    finish(w)
}

/// `t_us, t_last_us, requested_t_us, source_index, kind, detail`.
pub fn write_events(path: &Path, hash: &str, log: &[EventLogEntry]) -> Result<()> {
    let mut w = csv_writer(path, hash)?;
    w.write_record(["t_us", "t_last_us", "requested_t_us", "source_index", "kind", "detail"])
        .map_err(csv_err)?;
    for e in log {
        let requested = e.requested_t_us.map(|t| t.to_string()).unwrap_or_default();
        w.write_record([
            e.t_us.to_string(),
            e.t_last_us.to_string(),
            requested,
            e.source_index.to_string(),
            e.event.kind().to_owned(),
            event_detail(&e.event),
        ])
        .map_err(csv_err)?;
    }
    finish(w)
}

fn event_detail(ev: &GradientEvent) -> String {
    match *ev {
        GradientEvent::GlobalFlip { .. } => String::new(),
        GradientEvent::SegmentFlip { z0_mm, z1_mm, .. } => format!("z0_mm={z0_mm} z1_mm={z1_mm}"),
        GradientEvent::LineFlip { a, b, c } => format!("a={a} b={b} c={c}"),
        GradientEvent::OffsetAfter {
            delta_rad_per_us,
            z0_mm,
            z1_mm,
            ..
        } => format!("delta_rad_per_us={delta_rad_per_us} z0_mm={z0_mm} z1_mm={z1_mm}"),
        GradientEvent::SlopeScaleAfter {
            factor,
            z0_mm,
            z1_mm,
            ..
        } => format!("factor={factor} z0_mm={z0_mm} z1_mm={z1_mm}"),
    }
}

/// `summary.toml`: comment stamp then one `key = value` line per metric.
pub fn write_summary(path: &Path, hash: &str, name: &str, summary: &Summary) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    stamp(&mut out, hash)?;
    writeln!(out, "scenario = {name:?}")?;
    for (k, v) in summary.entries() {
        writeln!(out, "{k} = {v}")?;
    }
    out.flush()?;
    Ok(())
}

/// Aggregate sweep table: the swept value, a status column, then the union
/// of summary keys in first-seen order. Lists and texts are left blank.
pub fn write_sweep(
    path: &Path,
    hash: &str,
    parameter: &str,
    rows: &[(String, std::result::Result<Summary, String>)],
) -> Result<()> {
    let mut keys: Vec<String> = Vec::new();
    for (_, r) in rows {
        if let Ok(s) = r {
            for (k, v) in s.entries() {
                if matches!(v, SummaryValue::Number(_) | SummaryValue::Count(_)) && !keys.contains(k) {
                    keys.push(k.clone());
                }
            }
        }
    }
    let mut w = csv_writer(path, hash)?;
    let mut header = vec![parameter.to_owned(), "status".to_owned()];
    header.extend(keys.iter().cloned());
    w.write_record(&header).map_err(csv_err)?;
    for (value, r) in rows {
        let mut rec = vec![value.clone()];
        match r {
            Ok(s) => {
                rec.push("ok".into());
                rec.extend(keys.iter().map(|k| s.value(k).map(|x| format!("{x:?}")).unwrap_or_default()));
            }
            Err(e) => {
                rec.push(format!("error: {e}"));
                rec.extend(keys.iter().map(|_| String::new()));
            }
        }
        w.write_record(&rec).map_err(csv_err)?;
    }
    finish(w)
}
