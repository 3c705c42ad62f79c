use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use gem_core::error::GemError;
use gem_core::scenario::config::{parse_value, ScenarioConfig};
use gem_core::scenario::presets::{preset_text, PRESETS};
use gem_core::scenario::{parse_config, run_scenario, run_sweep, RunOptions};

const EXIT_CONFIG: u8 = 2;
const EXIT_DIVERGED: u8 = 3;
const EXIT_VERIFY: u8 = 4;

#[derive(Parser)]
#[command(name = "gem", version, about = "Gradient echo memory simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Clone)]
struct Common {
    /// Output directory (default: $GEM_OUT_DIR/<name> or gem-out/<name>)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Compare against the reference integrator at this refinement
    #[arg(long, num_args = 0..=1, default_missing_value = "4", value_name = "REFINEMENT")]
    verify: Option<usize>,
    /// Write SVG figures
    #[arg(long, conflicts_with = "no_svg")]
    svg: bool,
    /// Skip SVG figures
    #[arg(long)]
    no_svg: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file
    Run {
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Run a built-in scenario, optionally with `path=value` overrides
    Preset {
        /// Preset name; omit to list them
        name: Option<String>,
        overrides: Vec<String>,
        /// Run the preset's sweep block instead of its base point
        #[arg(long)]
        sweep: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Run every value of a scenario file's sweep block
    Sweep {
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
}

fn options(c: &Common) -> RunOptions {
    RunOptions {
        out_dir: c.out.clone(),
        verify: c.verify,
        svg: if c.svg { Some(true) } else if c.no_svg { Some(false) } else { None },
        dry: false,
    }
}

fn exit_for(e: &GemError) -> u8 {
    match e {
        GemError::Config(_) | GemError::Schedule(_) | GemError::Contract(_) | GemError::UnsupportedVariant(_) => {
            EXIT_CONFIG
        }
        GemError::Divergence { .. } | GemError::RunDiverged { .. } => EXIT_DIVERGED,
        _ => 1,
    }
}

fn load(path: &PathBuf) -> Result<ScenarioConfig, GemError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| GemError::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text)
}

fn single(config: &ScenarioConfig, opts: &RunOptions) -> Result<u8, GemError> {
    let report = run_scenario(config, opts)?;
    if let Some(dir) = &report.out_dir {
        println!("{}: wrote {}", config.name, dir.display());
    }
    for (k, v) in report.summary.entries() {
        println!("  {k} = {v}");
    }
    match &report.verification {
        Some(v) if !v.passed() => {
            eprintln!(
                "verification failed: oracle L2 {:.3e} > {:.0e} at refinement {}",
                v.l2,
                gem_core::scenario::runner::VERIFY_TOLERANCE,
                v.refinement
            );
            Ok(EXIT_VERIFY)
        }
        _ => Ok(0),
    }
}

fn sweep(config: &ScenarioConfig, opts: &RunOptions) -> Result<u8, GemError> {
    let report = run_sweep(config, opts)?;
    if let Some(t) = &report.table {
        println!("{}: wrote {}", config.name, t.display());
    }
    let mut verify_failed = false;
    let mut other_failed = false;
    for (value, row) in &report.rows {
        match row {
            Ok(s) => println!(
                "  {} = {value}: efficiency {:?}, centroid {:?}",
                report.parameter,
                s.value("efficiency"),
                s.value("centroid_rad_per_us")
            ),
            Err(e) => {
                eprintln!("  {} = {value}: {e}", report.parameter);
                if e.starts_with("verification failed") {
                    verify_failed = true;
                } else {
                    other_failed = true;
                }
            }
        }
    }
    Ok(if other_failed {
        1
    } else if verify_failed {
        EXIT_VERIFY
    } else {
        0
    })
}

fn dispatch(cli: Cli) -> Result<u8, GemError> {
    match cli.command {
        Command::Run { config, common } => single(&load(&config)?, &options(&common)),
        Command::Sweep { config, common } => sweep(&load(&config)?, &options(&common)),
        Command::Preset {
            name: None, ..
        } => {
            for (name, about) in PRESETS {
                println!("{name:20} {about}");
            }
            Ok(0)
        }
        Command::Preset {
            name: Some(name),
            overrides,
            sweep: as_sweep,
            common,
        } => {
            let text = preset_text(&name).ok_or_else(|| GemError::Config(format!("unknown preset `{name}`")))?;
            let mut config = parse_config(text)?;
            for o in &overrides {
                let (path, value) = o
                    .split_once('=')
                    .ok_or_else(|| GemError::Config(format!("override `{o}` is not path=value")))?;
                config = config.with_override(path.trim(), parse_value(value.trim()))?;
            }
            if as_sweep {
                sweep(&config, &options(&common))
            } else {
                single(&config, &options(&common))
            }
        }
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_for(&e))
        }
    }
}
