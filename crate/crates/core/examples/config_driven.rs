//! Scenarios as TOML: parse a document with unit-suffixed values, apply an
//! override, run a sweep and write the artifacts a `gem` invocation would.

use gem_core::error::Result;
use gem_core::scenario::config::{parse_config, parse_value};
use gem_core::scenario::{run_sweep, RunOptions};

const DOC: &str = r#"
name = "short-memory"

[grid]
length = "6 mm"
nz = 385
t_end = "60 us"
dt = "5 ns"

[medium]
beta = 2.0

[schedule]
eta0 = "1 MHz/mm"
z_center = "3 mm"
events = [{ kind = "global-flip", t = "30 us" }]

[pulse]
kind = "gaussian"
t0 = "10 us"
width = "2 us"

[analysis]
echo_gate = ["40 us", "60 us"]
tau_flip = "30 us"

[outputs]
svg = false

[sweep]
parameter = "medium.beta"
values = [0.25, 0.5, 1.0, 2.0]
"#;

fn main() -> Result<()> {
    let config = parse_config(DOC)?;
    println!("config sha256 {}", config.hash());

    // Same override syntax as `gem preset <name> key=value`.
    let config = config.with_override("pulse.width", parse_value("2.5 us"))?;

    let report = run_sweep(&config, &RunOptions::default())?;
    for ((value, _), eff) in report.rows.iter().zip(report.column("efficiency")) {
        println!("beta {value:>5}: efficiency {:.4}", eff.unwrap_or(f64::NAN));
    }
    if let Some(table) = &report.table {
        println!("wrote {}", table.display());
    }
    Ok(())
}
