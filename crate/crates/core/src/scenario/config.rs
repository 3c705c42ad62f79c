//! Scenario configuration files.
//!
//! Configurations are TOML documents. Dimensioned fields carry mandatory unit
//! suffixes (see [`super::units`]) and unknown keys are rejected. A parsed
//! configuration keeps its source tree so that sweeps and command-line
//! overrides can rewrite individual fields and re-validate.

use num_complex::Complex64;
use serde::Deserialize;
use sha2::{Digest, Sha256};
use toml::{Table, Value};

use super::units::{Frequency, Gradient, Length, PerLength, Time};
use crate::error::{GemError, Result};
use crate::grid::{MediumParams, SimulationGrid, DEFAULT_SNAPSHOT_STRIDE};
use crate::pulse::{GaussianPulse, PulseSpec};
use crate::schedule::{GradientEvent, GradientSchedule};
use crate::solver::Scenario;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridBlock {
    pub length: Length,
    pub nz: usize,
    pub t_end: Time,
    pub dt: Time,
    #[serde(default = "default_stride")]
    pub snapshot_stride: usize,
}

fn default_stride() -> usize {
    DEFAULT_SNAPSHOT_STRIDE
}

/// Either `beta` alone (with `g = 1`) or both `g` and `n_linear`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MediumBlock {
    pub beta: Option<f64>,
    pub g: Option<f64>,
    pub n_linear: Option<PerLength>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleBlock {
    pub eta0: Gradient,
    pub z_center: Length,
    #[serde(default, deserialize_with = "kind_tagged_vec")]
    pub events: Vec<EventBlock>,
}

/// Written as a table with a `kind` key naming the variant.
#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum EventBlock {
    GlobalFlip {
        t: Time,
    },
    SegmentFlip {
        t: Time,
        z0: Length,
        z1: Length,
    },
    /// `a z + b t + c = 0` with z in mm and t in us.
    LineFlip {
        a: f64,
        b: f64,
        c: f64,
    },
    Offset {
        t: Time,
        delta: Frequency,
        z0: Option<Length>,
        z1: Option<Length>,
    },
    SlopeScale {
        t: Time,
        factor: f64,
        z0: Option<Length>,
        z1: Option<Length>,
    },
}

/// Complex amplitude: a number or `[re, im]`.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(untagged)]
pub enum Amplitude {
    Real(f64),
    Complex([f64; 2]),
}

impl Default for Amplitude {
    fn default() -> Self {
        Amplitude::Real(1.0)
    }
}

impl Amplitude {
    pub fn value(self) -> Complex64 {
        match self {
            Amplitude::Real(r) => Complex64::new(r, 0.0),
            Amplitude::Complex([re, im]) => Complex64::new(re, im),
        }
    }
}

/// How Gaussian `width` values are read.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WidthConvention {
    /// Full width at half maximum of `|E|^2`.
    #[default]
    Fwhm,
    /// Full width at `1/e` of `|E|^2`.
    FullWidthOneOverE,
}

impl WidthConvention {
    fn to_fwhm(self, width: f64) -> f64 {
        match self {
            WidthConvention::Fwhm => width,
            WidthConvention::FullWidthOneOverE => width * std::f64::consts::LN_2.sqrt(),
        }
    }
}

/// Written as a table with a `kind` key naming the variant.
#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum PulseBlock {
    Gaussian {
        t0: Time,
        width: Time,
        #[serde(default)]
        width_convention: WidthConvention,
        #[serde(default)]
        amplitude: Amplitude,
        #[serde(default)]
        detuning: Frequency,
    },
    Modulated {
        t0: Time,
        width: Time,
        #[serde(default)]
        width_convention: WidthConvention,
        #[serde(default)]
        amplitude: Amplitude,
        #[serde(default)]
        detuning: Frequency,
        mod_freq: Frequency,
        mod_depth: f64,
    },
    ExpRamp {
        t0: Time,
        rise: Time,
        fall: Time,
        #[serde(default)]
        amplitude: Amplitude,
    },
    Composite {
        #[serde(deserialize_with = "kind_tagged_vec")]
        parts: Vec<PulseBlock>,
    },
}

/// Visibility between the echoes of two composite parts, each run alone.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VisibilityBlock {
    pub parts: [usize; 2],
    pub gate: [Time; 2],
    /// Residual carrier offset of the first part's echo, removed before the
    /// overlap by multiplying it with `exp(-i compensation t)`.
    #[serde(default)]
    pub compensation: Frequency,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisBlock {
    /// Window holding the echo, used for efficiency, spectrum and widths.
    pub echo_gate: Option<[Time; 2]>,
    /// Further windows, each reported with its carrier/sideband split.
    #[serde(default)]
    pub gates: Vec<[Time; 2]>,
    /// Boundary between the carrier band `|w| < band_split` and the
    /// sideband band.
    pub band_split: Option<Frequency>,
    /// Flip time used for the shape-reversal fidelity.
    pub tau_flip: Option<Time>,
    #[serde(default = "default_lobe_level")]
    pub lobe_level: f64,
    #[serde(default = "default_padding")]
    pub spectrum_padding: usize,
    #[serde(default = "default_span")]
    pub spectrum_span: Frequency,
    #[serde(default = "default_kspace_every")]
    pub kspace_every: Time,
    #[serde(default)]
    pub ridge_times: Vec<Time>,
    #[serde(default = "default_ridge_level")]
    pub ridge_level: f64,
    #[serde(default)]
    pub ridge_gap: PerLength,
    #[serde(default = "default_storage_window")]
    pub deep_storage_window: Time,
    pub visibility: Option<VisibilityBlock>,
}

fn default_lobe_level() -> f64 {
    0.1
}
fn default_padding() -> usize {
    crate::analysis::spectrum::DEFAULT_PADDING
}
fn default_span() -> Frequency {
    Frequency(4.0 * std::f64::consts::TAU)
}
fn default_kspace_every() -> Time {
    Time(0.5)
}
fn default_ridge_level() -> f64 {
    0.2
}
fn default_storage_window() -> Time {
    Time(1.0)
}

impl Default for AnalysisBlock {
    fn default() -> Self {
        Self {
            echo_gate: None,
            gates: Vec::new(),
            band_split: None,
            tau_flip: None,
            lobe_level: default_lobe_level(),
            spectrum_padding: default_padding(),
            spectrum_span: default_span(),
            kspace_every: default_kspace_every(),
            ridge_times: Vec::new(),
            ridge_level: default_ridge_level(),
            ridge_gap: PerLength(0.0),
            deep_storage_window: default_storage_window(),
            visibility: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputsBlock {
    /// Output directory; defaults to `<root>/<name>`.
    pub directory: Option<String>,
    #[serde(default = "yes")]
    pub csv: bool,
    #[serde(default = "yes")]
    pub svg: bool,
}

fn yes() -> bool {
    true
}

impl Default for OutputsBlock {
    fn default() -> Self {
        Self {
            directory: None,
            csv: true,
            svg: true,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepBlock {
    /// Dotted path into the configuration, e.g. `medium.beta` or
    /// `schedule.events.1.delta`.
    pub parameter: String,
    pub values: Vec<Value>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    name: String,
    grid: GridBlock,
    medium: MediumBlock,
    schedule: ScheduleBlock,
    #[serde(deserialize_with = "kind_tagged")]
    pulse: PulseBlock,
    #[serde(default)]
    analysis: AnalysisBlock,
    #[serde(default)]
    outputs: OutputsBlock,
    sweep: Option<SweepBlock>,
}

/// Joins `outer` with a path carried in `msg` as "at `inner`: rest".
fn nest(outer: &str, msg: &str) -> (String, String) {
    let parsed = msg
        .strip_prefix("at `")
        .and_then(|m| m.split_once("`: "));
    match parsed {
        Some((inner, rest)) if outer.is_empty() || outer == "." => (inner.to_owned(), rest.to_owned()),
        Some((inner, rest)) if inner.starts_with('[') => (format!("{outer}{inner}"), rest.to_owned()),
        Some((inner, rest)) => (format!("{outer}.{inner}"), rest.to_owned()),
        None => (outer.to_owned(), msg.to_owned()),
    }
}

/// Reads a table whose `kind` key selects the enum variant. Unlike serde's
/// internally tagged enums this keeps the path to a failing field.
fn kind_tagged<'de, D, T>(d: D) -> std::result::Result<T, D::Error>
where
    D: serde::Deserializer<'de>,
    T: serde::de::DeserializeOwned,
{
    use serde::de::Error;
    let mut table = Table::deserialize(d)?;
    let kind = match table.remove("kind") {
        Some(Value::String(k)) => k,
        Some(_) => return Err(D::Error::custom("at `kind`: expected a string")),
        None => return Err(D::Error::missing_field("kind")),
    };
    let mut outer = Table::new();
    outer.insert(kind.clone(), Value::Table(table));
    serde_path_to_error::deserialize(Value::Table(outer)).map_err(|e| {
        let path = e.path().to_string();
        let inner = path.strip_prefix(kind.as_str()).unwrap_or(&path).trim_start_matches('.');
        let (path, msg) = nest(inner, &e.into_inner().to_string());
        if path.is_empty() || path == "." {
            D::Error::custom(msg)
        } else {
            D::Error::custom(format!("at `{path}`: {msg}"))
        }
    })
}

fn kind_tagged_vec<'de, D, T>(d: D) -> std::result::Result<Vec<T>, D::Error>
where
    D: serde::Deserializer<'de>,
    T: serde::de::DeserializeOwned,
{
    use serde::de::Error;
    Vec::<Value>::deserialize(d)?
        .into_iter()
        .enumerate()
        .map(|(i, v)| {
            kind_tagged::<Value, T>(v).map_err(|e| {
                let (path, msg) = nest(&format!("[{i}]"), &e.to_string());
                D::Error::custom(format!("at `{path}`: {msg}"))
            })
        })
        .collect()
}

/// A validated scenario configuration.
#[derive(Debug, Clone)]
pub struct ScenarioConfig {
    pub name: String,
    pub grid: GridBlock,
    pub medium: MediumBlock,
    pub schedule: ScheduleBlock,
    pub pulse: PulseBlock,
    pub analysis: AnalysisBlock,
    pub outputs: OutputsBlock,
    pub sweep: Option<SweepBlock>,
    source: Table,
}

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> Result<ScenarioConfig> {
    let table: Table = text
        .parse()
        .map_err(|e: toml::de::Error| GemError::Config(e.to_string().trim_end().to_owned()))?;
    from_table(table)
}

fn from_table(table: Table) -> Result<ScenarioConfig> {
    let raw: RawConfig = serde_path_to_error::deserialize(Value::Table(table.clone()))
        .map_err(|e| {
            let path = e.path().to_string();
            let (path, msg) = nest(&path, &e.into_inner().to_string());
            GemError::Config(format!("field `{path}`: {msg}"))
        })?;
    let config = ScenarioConfig {
        name: raw.name,
        grid: raw.grid,
        medium: raw.medium,
        schedule: raw.schedule,
        pulse: raw.pulse,
        analysis: raw.analysis,
        outputs: raw.outputs,
        sweep: raw.sweep,
        source: table,
    };
    config.check()?;
    Ok(config)
}

impl ScenarioConfig {
    /// The configuration tree as parsed, after overrides.
    pub fn source(&self) -> &Table {
        &self.source
    }

    /// Canonical TOML text of the configuration.
    pub fn canonical_text(&self) -> String {
        toml::to_string(&self.source).unwrap_or_default()
    }

    /// SHA-256 of [`Self::canonical_text`], hex encoded.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_text().as_bytes()))
    }

    fn check(&self) -> Result<()> {
        let bad = |field: &str, msg: String| Err(GemError::Config(format!("field `{field}`: {msg}")));
        match (self.medium.beta, self.medium.g, self.medium.n_linear) {
            (Some(_), None, None) | (None, Some(_), Some(_)) => {}
            _ => {
                return bad(
                    "medium",
                    "give exactly one of `beta` or the pair `g` and `n_linear`".into(),
                )
            }
        }
        let t_end = self.grid.t_end.0;
        let in_window = |t: f64| (0.0..=t_end).contains(&t);
        let mut gates: Vec<(String, [Time; 2])> = Vec::new();
        if let Some(g) = self.analysis.echo_gate {
            gates.push(("analysis.echo_gate".into(), g));
        }
        for (i, g) in self.analysis.gates.iter().enumerate() {
            gates.push((format!("analysis.gates.{i}"), *g));
        }
        if let Some(v) = &self.analysis.visibility {
            gates.push(("analysis.visibility.gate".into(), v.gate));
        }
        for (path, [a, b]) in gates {
            if !(in_window(a.0) && in_window(b.0) && a.0 < b.0) {
                return bad(
                    &path,
                    format!("gate [{}, {}] us must be increasing and within [0, {t_end}] us", a.0, b.0),
                );
            }
        }
        if let Some(t) = self.analysis.tau_flip {
            if !in_window(t.0) {
                return bad("analysis.tau_flip", format!("{} us lies outside [0, {t_end}] us", t.0));
            }
        }
        if let Some(v) = &self.analysis.visibility {
            let n_parts = match &self.pulse {
                PulseBlock::Composite { parts } => parts.len(),
                _ => 0,
            };
            if v.parts.iter().any(|&p| p >= n_parts) || v.parts[0] == v.parts[1] {
                return bad(
                    "analysis.visibility.parts",
                    format!("need two distinct indices into a composite pulse of {n_parts} parts"),
                );
            }
        }
        if let Some(sweep) = &self.sweep {
            if sweep.values.is_empty() {
                return bad("sweep.values", "sweep list is empty".into());
            }
            for (i, v) in sweep.values.iter().enumerate() {
                let finite = match v {
                    Value::Float(f) => f.is_finite(),
                    Value::Integer(_) | Value::String(_) | Value::Boolean(_) => true,
                    _ => false,
                };
                if !finite {
                    return bad(&format!("sweep.values.{i}"), format!("`{v}` is not a finite scalar"));
                }
            }
            lookup(&self.source, &sweep.parameter).ok_or_else(|| {
                GemError::Config(format!(
                    "field `sweep.parameter`: `{}` does not name an existing field",
                    sweep.parameter
                ))
            })?;
        }
        self.scenario().map(|_| ())
    }

    /// Assembles and validates the solver inputs.
    pub fn scenario(&self) -> Result<Scenario> {
        let config_err = |e: GemError| match e {
            GemError::Config(_) => e,
            other => GemError::Config(other.to_string()),
        };
        let grid = SimulationGrid::new(self.grid.length.0, self.grid.nz, self.grid.t_end.0, self.grid.dt.0)
            .and_then(|g| g.with_snapshot_stride(self.grid.snapshot_stride))
            .map_err(config_err)?;
        let eta0 = self.schedule.eta0.0;
        let medium = match (self.medium.beta, self.medium.g, self.medium.n_linear) {
            (Some(beta), _, _) => MediumParams::from_beta(beta, eta0),
            (None, Some(g), Some(n)) => MediumParams::new(g, n.0),
            _ => unreachable!("checked above"),
        }
        .map_err(config_err)?;
        let length = grid.length_mm();
        let mut schedule = GradientSchedule::new(eta0, self.schedule.z_center.0);
        for ev in &self.schedule.events {
            schedule = schedule.with_event(ev.to_event(length));
        }
        schedule.validate(&grid).map_err(config_err)?;
        let pulse = self.pulse.to_spec();
        pulse.validate().map_err(config_err)?;
        Ok(Scenario {
            grid,
            medium,
            schedule,
            pulse,
        })
    }

    /// The solver inputs for each part of a composite pulse, run alone.
    pub fn part_scenarios(&self) -> Result<Vec<Scenario>> {
        let base = self.scenario()?;
        match &self.pulse {
            PulseBlock::Composite { parts } => Ok(parts
                .iter()
                .map(|p| Scenario {
                    pulse: p.to_spec(),
                    ..base.clone()
                })
                .collect()),
            _ => Ok(Vec::new()),
        }
    }

    /// A copy with the field at dotted `path` replaced by `value`,
    /// re-validated.
    pub fn with_override(&self, path: &str, value: Value) -> Result<ScenarioConfig> {
        let mut table = self.source.clone();
        set_path(&mut table, path, value)?;
        from_table(table)
    }

    /// One configuration per sweep value, in sweep order.
    pub fn plan_sweep(&self) -> Result<Vec<(Value, ScenarioConfig)>> {
        let sweep = self
            .sweep
            .as_ref()
            .ok_or_else(|| GemError::Config("configuration has no `sweep` block".into()))?;
        sweep
            .values
            .iter()
            .map(|v| {
                let mut table = self.source.clone();
                table.remove("sweep");
                set_path(&mut table, &sweep.parameter, v.clone())?;
                from_table(table).map(|c| (v.clone(), c))
            })
            .collect()
    }
}

impl EventBlock {
    fn to_event(&self, length: f64) -> GradientEvent {
        let range = |z0: Option<Length>, z1: Option<Length>| {
            (z0.map_or(0.0, |z| z.0), z1.map_or(length, |z| z.0))
        };
        match *self {
            EventBlock::GlobalFlip { t } => GradientEvent::GlobalFlip { t_us: t.0 },
            EventBlock::SegmentFlip { t, z0, z1 } => GradientEvent::SegmentFlip {
                t_us: t.0,
                z0_mm: z0.0,
                z1_mm: z1.0,
            },
            EventBlock::LineFlip { a, b, c } => GradientEvent::LineFlip { a, b, c },
            EventBlock::Offset { t, delta, z0, z1 } => {
                let (z0_mm, z1_mm) = range(z0, z1);
                GradientEvent::OffsetAfter {
                    t_us: t.0,
                    delta_rad_per_us: delta.0,
                    z0_mm,
                    z1_mm,
                }
            }
            EventBlock::SlopeScale { t, factor, z0, z1 } => {
                let (z0_mm, z1_mm) = range(z0, z1);
                GradientEvent::SlopeScaleAfter {
                    t_us: t.0,
                    factor,
                    z0_mm,
                    z1_mm,
                }
            }
        }
    }
}

impl PulseBlock {
    pub fn to_spec(&self) -> PulseSpec {
        match self {
            PulseBlock::Gaussian {
                t0,
                width,
                width_convention,
                amplitude,
                detuning,
            } => PulseSpec::Gaussian(GaussianPulse::new(
                t0.0,
                width_convention.to_fwhm(width.0),
                amplitude.value(),
                detuning.0,
            )),
            PulseBlock::Modulated {
                t0,
                width,
                width_convention,
                amplitude,
                detuning,
                mod_freq,
                mod_depth,
            } => PulseSpec::AmplitudeModulated {
                base: GaussianPulse::new(
                    t0.0,
                    width_convention.to_fwhm(width.0),
                    amplitude.value(),
                    detuning.0,
                ),
                mod_freq_rad_per_us: mod_freq.0,
                mod_depth: *mod_depth,
            },
            PulseBlock::ExpRamp {
                t0,
                rise,
                fall,
                amplitude,
            } => PulseSpec::ExpRamp {
                t0_us: t0.0,
                rise_us: rise.0,
                fall_us: fall.0,
                amplitude: amplitude.value(),
            },
            PulseBlock::Composite { parts } => {
                PulseSpec::Composite(parts.iter().map(PulseBlock::to_spec).collect())
            }
        }
    }
}

/// Reads a command-line value: TOML syntax when it parses (`2`, `true`,
/// `[1, 2]`, `"3 us"`), otherwise the raw text as a string (`3 us`).
pub fn parse_value(text: &str) -> Value {
    format!("v = {text}")
        .parse::<Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(text.trim().to_owned()))
}

fn lookup<'a>(table: &'a Table, path: &str) -> Option<&'a Value> {
    let mut parts = path.split('.');
    let mut cur = table.get(parts.next()?)?;
    for key in parts {
        cur = match cur {
            Value::Table(t) => t.get(key)?,
            Value::Array(a) => a.get(key.parse::<usize>().ok()?)?,
            _ => return None,
        };
    }
    Some(cur)
}

fn set_path(table: &mut Table, path: &str, value: Value) -> Result<()> {
    let fail = || GemError::Config(format!("`{path}` does not name a settable field"));
    let keys: Vec<&str> = path.split('.').collect();
    let (last, parents) = keys.split_last().ok_or_else(fail)?;
    let mut cur: &mut Value = table.get_mut(*parents.first().unwrap_or(last)).ok_or_else(fail)?;
    if parents.is_empty() {
        *cur = value;
        return Ok(());
    }
    for key in &parents[1..] {
        cur = match cur {
            Value::Table(t) => t.get_mut(*key).ok_or_else(fail)?,
            Value::Array(a) => a.get_mut(key.parse::<usize>().map_err(|_| fail())?).ok_or_else(fail)?,
            _ => return Err(fail()),
        };
    }
    match cur {
        Value::Table(t) => {
            t.insert((*last).to_owned(), value);
        }
        Value::Array(a) => {
            let slot = a.get_mut(last.parse::<usize>().map_err(|_| fail())?).ok_or_else(fail)?;
            *slot = value;
        }
        _ => return Err(fail()),
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
name = "minimal"

[grid]
length = "6 mm"
nz = 241
t_end = "40 us"
dt = "0.01 us"

[medium]
beta = 3.75

[schedule]
eta0 = "0.05 MHz/mm"
z_center = "3 mm"
events = [{ kind = "global-flip", t = "20 us" }]

[pulse]
kind = "gaussian"
t0 = "8 us"
width = "2 us"
"#;

    #[test]
    fn minimal_parses() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(c.medium.beta, Some(3.75));
        let s = c.scenario().unwrap();
        assert!((s.medium.beta(s.schedule.eta0) - 3.75).abs() < 1e-12);
        assert_eq!(c.hash().len(), 64);
    }

    #[test]
    fn missing_unit_names_field() {
        let text = MINIMAL.replace("width = \"2 us\"", "width = 3.2");
        let err = parse_config(&text).unwrap_err().to_string();
        assert!(err.contains("pulse.width"), "{err}");
        assert!(err.contains("missing unit suffix"), "{err}");
    }

    #[test]
    fn event_errors_name_index() {
        let text = MINIMAL.replace("t = \"20 us\"", "t = 20");
        let err = parse_config(&text).unwrap_err().to_string();
        assert!(err.contains("schedule.events[0].t"), "{err}");
        let text = MINIMAL.replace("global-flip", "sideways-flip");
        let err = parse_config(&text).unwrap_err().to_string();
        assert!(err.contains("sideways-flip"), "{err}");
    }

    #[test]
    fn unknown_key_rejected() {
        let text = MINIMAL.replace("nz = 241", "nz = 241\ncolour = 3");
        let err = parse_config(&text).unwrap_err().to_string();
        assert!(err.contains("colour"), "{err}");
    }

    #[test]
    fn medium_needs_one_form() {
        let text = MINIMAL.replace("beta = 3.75", "beta = 3.75\ng = 1.0");
        assert!(matches!(parse_config(&text), Err(GemError::Config(_))));
    }

    #[test]
    fn gate_outside_window_rejected() {
        let text = format!("{MINIMAL}\n[analysis]\necho_gate = [\"30 us\", \"50 us\"]\n");
        let err = parse_config(&text).unwrap_err().to_string();
        assert!(err.contains("analysis.echo_gate"), "{err}");
    }

    #[test]
    fn sweep_plans_one_run_per_value() {
        let text = format!(
            "{MINIMAL}\n[sweep]\nparameter = \"medium.beta\"\nvalues = [0.5, 1, 2, 3.75]\n"
        );
        let c = parse_config(&text).unwrap();
        let plan = c.plan_sweep().unwrap();
        assert_eq!(plan.len(), 4);
        assert_eq!(plan[1].1.medium.beta, Some(1.0));
        assert!(plan.iter().all(|(_, c)| c.sweep.is_none()));

        let empty = text.replace("[0.5, 1, 2, 3.75]", "[]");
        assert!(parse_config(&empty).unwrap_err().to_string().contains("empty"));
        let bad_path = text.replace("medium.beta", "medium.gamma");
        assert!(parse_config(&bad_path).is_err());
    }

    #[test]
    fn overrides_apply_and_revalidate() {
        let c = parse_config(MINIMAL).unwrap();
        let d = c.with_override("pulse.width", parse_value("3 us")).unwrap();
        assert!(matches!(d.pulse, PulseBlock::Gaussian { width, .. } if width.0 == 3.0));
        let e = c.with_override("schedule.events.0.t", parse_value("\"25 us\"")).unwrap();
        assert!(matches!(e.schedule.events[0], EventBlock::GlobalFlip { t } if t.0 == 25.0));
        assert!(c.with_override("grid.nz", parse_value("1")).is_err());
        assert!(c.with_override("nothing.here", parse_value("1")).is_err());
        assert_ne!(c.hash(), d.hash());
    }
}
