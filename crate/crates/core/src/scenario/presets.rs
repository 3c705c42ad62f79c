//! Built-in scenarios.

/// `(name, one-line description)` of every preset.
pub const PRESETS: &[(&str, &str)] = &[
    ("uniform-echo", "Gaussian stored and recalled by one global flip at 50 us"),
    ("reversal-ramp", "asymmetric exponential pulse through the uniform-echo protocol"),
    ("beta-sweep", "uniform-echo efficiency over optical depths 0.5, 1, 2, 3.75"),
    ("freq-shift", "flip plus frequency offset, swept over -1..1 MHz"),
    ("split-recall", "sidebands released at 60 us, carrier at 70 us"),
    ("linear-dispersion", "flip front along a line, spectrum read out in time"),
    ("compress-interfere", "1.6 and 3.2 us pulses recalled with equal widths at one time"),
];

/// TOML text of preset `name`.
pub fn preset_text(name: &str) -> Option<&'static str> {
    Some(match name {
        "uniform-echo" => UNIFORM_ECHO,
        "reversal-ramp" => REVERSAL_RAMP,
        "beta-sweep" => BETA_SWEEP,
        "freq-shift" => FREQ_SHIFT,
        "split-recall" => SPLIT_RECALL,
        "linear-dispersion" => LINEAR_DISPERSION,
        "compress-interfere" => COMPRESS_INTERFERE,
        _ => return None,
    })
}

const UNIFORM_ECHO: &str = r#"
name = "uniform-echo"

[grid]
length = "6 mm"
nz = 768
t_end = "100 us"
dt = "0.0025 us"
snapshot_stride = 10

[medium]
beta = 3.75

[schedule]
eta0 = "1 MHz/mm"
z_center = "3 mm"
events = [{ kind = "global-flip", t = "50 us" }]

[pulse]
kind = "gaussian"
t0 = "15 us"
width = "2 us"

[analysis]
echo_gate = ["70 us", "100 us"]
tau_flip = "50 us"
ridge_times = ["30 us", "70 us"]
"#;

const REVERSAL_RAMP: &str = r#"
name = "reversal-ramp"

[grid]
length = "6 mm"
nz = 768
t_end = "100 us"
dt = "0.0025 us"

[medium]
beta = 3.75

[schedule]
eta0 = "1 MHz/mm"
z_center = "3 mm"
events = [{ kind = "global-flip", t = "50 us" }]

[pulse]
kind = "exp-ramp"
t0 = "15 us"
rise = "0.5 us"
fall = "2 us"

[analysis]
echo_gate = ["70 us", "100 us"]
tau_flip = "50 us"
"#;

const BETA_SWEEP: &str = r#"
name = "beta-sweep"

[grid]
length = "6 mm"
nz = 768
t_end = "100 us"
dt = "0.0025 us"

[medium]
beta = 3.75

[schedule]
eta0 = "1 MHz/mm"
z_center = "3 mm"
events = [{ kind = "global-flip", t = "50 us" }]

[pulse]
kind = "gaussian"
t0 = "15 us"
width = "2 us"

[analysis]
echo_gate = ["70 us", "100 us"]
tau_flip = "50 us"

[sweep]
parameter = "medium.beta"
values = [0.5, 1.0, 2.0, 3.75]
"#;

const FREQ_SHIFT: &str = r#"
name = "freq-shift"

[grid]
length = "6 mm"
nz = 768
t_end = "100 us"
dt = "0.0025 us"

[medium]
beta = 3.75

[schedule]
eta0 = "1 MHz/mm"
z_center = "3 mm"
events = [
    { kind = "global-flip", t = "50 us" },
    { kind = "offset", t = "50 us", delta = "0.5 MHz" },
]

[pulse]
kind = "gaussian"
t0 = "15 us"
width = "2 us"

[analysis]
echo_gate = ["70 us", "100 us"]
tau_flip = "50 us"

[sweep]
parameter = "schedule.events.1.delta"
values = ["-1 MHz", "-0.5 MHz", "0 MHz", "0.5 MHz", "1 MHz"]
"#;

// The outer segments (sidebands) flip first, the centre (carrier) later.
const SPLIT_RECALL: &str = r#"
name = "split-recall"

[grid]
length = "6 mm"
nz = 1024
t_end = "140 us"
dt = "0.0025 us"

[medium]
beta = 3.75

[schedule]
eta0 = "1 MHz/mm"
z_center = "3 mm"
events = [
    { kind = "segment-flip", t = "60 us", z0 = "0 mm", z1 = "2.8 mm" },
    { kind = "segment-flip", t = "60 us", z0 = "3.2 mm", z1 = "6 mm" },
    { kind = "segment-flip", t = "70 us", z0 = "2.8 mm", z1 = "3.2 mm" },
]

[pulse]
kind = "modulated"
t0 = "12 us"
width = "4 us"
mod_freq = "0.4 MHz"
mod_depth = 1.0

[analysis]
echo_gate = ["95 us", "140 us"]
gates = [["95 us", "118 us"], ["118 us", "140 us"]]
band_split = "0.2 MHz"
ridge_times = ["55 us", "69 us"]
ridge_gap = "15.7 rad/mm"
"#;

// Flip front t = 10 z + 30 us; the literal line of the original figure is
// `a = 60, b = -6, c = -330`.
const LINEAR_DISPERSION: &str = r#"
name = "linear-dispersion"

[grid]
length = "6 mm"
nz = 1280
t_end = "135 us"
dt = "0.0025 us"

[medium]
beta = 3.75

[schedule]
eta0 = "1 MHz/mm"
z_center = "3 mm"
events = [{ kind = "line-flip", a = 60.0, b = -6.0, c = 180.0 }]

[pulse]
kind = "modulated"
t0 = "12 us"
width = "4 us"
mod_freq = "0.4 MHz"
mod_depth = 1.0

[analysis]
echo_gate = ["80 us", "135 us"]
band_split = "0.2 MHz"
lobe_level = 0.1
"#;

// The short pulse (part 0) is stored downstream and recalled at half slope;
// its echo leaves 4.5 rad/us above the long pulse's, which the visibility
// analysis removes.
const COMPRESS_INTERFERE: &str = r#"
name = "compress-interfere"

[grid]
length = "6 mm"
nz = 1536
t_end = "200 us"
dt = "0.0025 us"

[medium]
beta = 3.75

[schedule]
eta0 = "1 MHz/mm"
z_center = "3 mm"
events = [
    { kind = "segment-flip", t = "73 us", z0 = "3 mm", z1 = "6 mm" },
    { kind = "slope-scale", t = "73 us", factor = 0.5, z0 = "3 mm", z1 = "6 mm" },
    { kind = "segment-flip", t = "95 us", z0 = "0 mm", z1 = "3 mm" },
]

[pulse]
kind = "composite"
parts = [
    { kind = "gaussian", t0 = "19.25 us", width = "1.6 us", amplitude = 1.0, detuning = "3 rad/us" },
    { kind = "gaussian", t0 = "11 us", width = "3.2 us", amplitude = 0.7071067811865476, detuning = "-3 rad/us" },
]

[analysis]
echo_gate = ["150 us", "200 us"]

[analysis.visibility]
parts = [0, 1]
gate = ["150 us", "200 us"]
compensation = "4.5 rad/us"
"#;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::config::parse_config;

    #[test]
    fn every_preset_parses() {
        for (name, _) in PRESETS {
            let c = parse_config(preset_text(name).unwrap()).unwrap_or_else(|e| panic!("{name}: {e}"));
            assert_eq!(&c.name, name);
        }
        assert!(preset_text("nope").is_none());
    }

    #[test]
    fn frequency_sweep_has_five_runs() {
        let c = parse_config(preset_text("freq-shift").unwrap()).unwrap();
        assert_eq!(c.plan_sweep().unwrap().len(), 5);
    }

    #[test]
    fn equal_energy_parts() {
        let c = parse_config(preset_text("compress-interfere").unwrap()).unwrap();
        let parts = c.part_scenarios().unwrap();
        let e: Vec<f64> = parts.iter().map(|s| s.pulse.energy().unwrap()).collect();
        assert!((e[0] - e[1]).abs() < 1e-12 * e[0]);
    }
}
