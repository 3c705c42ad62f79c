//! The `gem` binary: exit codes, artifacts and reproducibility.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const SMALL: &str = r#"
name = "small"

[grid]
length = "6 mm"
nz = 257
t_end = "30 us"
dt = "10 ns"

[medium]
beta = 2.0

[schedule]
eta0 = "1 MHz/mm"
z_center = "3 mm"
events = [{ kind = "global-flip", t = "14 us" }]

[pulse]
kind = "gaussian"
t0 = "6 us"
width = "2 us"

[analysis]
echo_gate = ["18 us", "30 us"]
tau_flip = "14 us"
"#;

fn gem(args: &[&str], out_root: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gem"))
        .args(args)
        .env("GEM_OUT_DIR", out_root)
        .output()
        .expect("gem runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn run_writes_every_artifact() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "small.toml", SMALL);
    let out = gem(&["run", &cfg], tmp.path());
    assert!(out.status.success(), "{}", stderr(&out));
    let dir = tmp.path().join("small");
    for f in [
        "config.toml",
        "summary.toml",
        "input.csv",
        "output.csv",
        "spectrum.csv",
        "kspace.csv",
        "ledger.csv",
        "events.csv",
        "series.svg",
        "spectrum.svg",
        "kspace.svg",
    ] {
        assert!(dir.join(f).is_file(), "missing {f}");
    }
    let version = env!("CARGO_PKG_VERSION");
    for f in ["input.csv", "output.csv", "spectrum.csv", "kspace.csv", "ledger.csv", "events.csv", "summary.toml"] {
        let text = fs::read_to_string(dir.join(f)).unwrap();
        assert!(text.starts_with(&format!("# gem {version} config-sha256 ")), "{f} lacks the stamp");
    }
    let output = fs::read_to_string(dir.join("output.csv")).unwrap();
    assert_eq!(output.lines().nth(1), Some("t_us,re,im,abs"));
    let events = fs::read_to_string(dir.join("events.csv")).unwrap();
    assert!(events.lines().nth(2).unwrap().contains("global-flip"));

    let summary: toml::Table = fs::read_to_string(dir.join("summary.toml")).unwrap().parse().unwrap();
    let eff = summary["efficiency"].as_float().unwrap();
    assert!(eff > 0.8 && eff < 1.01, "efficiency {eff}");
    assert_eq!(summary["scenario"].as_str(), Some("small"));
}

#[test]
fn artifacts_are_byte_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "small.toml", SMALL);
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    for dir in [&a, &b] {
        let out = gem(&["run", &cfg, "--out", dir.to_str().unwrap()], tmp.path());
        assert!(out.status.success(), "{}", stderr(&out));
    }
    let mut names: Vec<_> = fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert!(names.len() >= 8);
    for name in names {
        assert_eq!(fs::read(a.join(&name)).unwrap(), fs::read(b.join(&name)).unwrap(), "{name:?} differs");
    }
}

#[test]
fn config_errors_exit_2_with_the_field_path() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = write_config(tmp.path(), "bad.toml", &SMALL.replace("width = \"2 us\"", "width = 2"));
    let out = gem(&["run", &bad], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("pulse.width"), "{}", stderr(&out));

    let out = gem(&["run", &tmp.path().join("absent.toml").to_string_lossy()], tmp.path());
    assert_eq!(out.status.code(), Some(2));

    let out = gem(&["preset", "no-such-preset"], tmp.path());
    assert_eq!(out.status.code(), Some(2));

    let empty = write_config(
        tmp.path(),
        "empty.toml",
        &format!("{SMALL}\n[sweep]\nparameter = \"medium.beta\"\nvalues = []\n"),
    );
    let out = gem(&["sweep", &empty], tmp.path());
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));

    let out = gem(&["preset", "uniform-echo", "grid.nz=1"], tmp.path());
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
}

#[test]
fn divergence_exits_3_with_partial_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "huge.toml",
        &SMALL.replace("beta = 2.0", "g = 1e300\nn_linear = \"1 /mm\""),
    );
    let out = gem(&["run", &cfg, "--no-svg"], tmp.path());
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
    let dir = tmp.path().join("small");
    assert!(dir.join("error.txt").is_file());
    assert!(dir.join("output.csv").is_file());
    let summary = fs::read_to_string(dir.join("summary.toml")).unwrap();
    assert!(summary.contains("status = \"diverged\""));
}

#[test]
fn verification_exit_code_matches_the_oracle() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "small.toml", SMALL);
    let out = gem(&["run", &cfg, "--verify", "2", "--no-svg"], tmp.path());
    let summary: toml::Table = fs::read_to_string(tmp.path().join("small/summary.toml"))
        .unwrap()
        .parse()
        .unwrap();
    let l2 = summary["oracle_l2"].as_float().unwrap();
    assert_eq!(summary["oracle_refinement"].as_integer(), Some(2));
    let expected = if l2 <= 1e-3 { 0 } else { 4 };
    assert_eq!(out.status.code(), Some(expected), "oracle L2 {l2}");
}

#[test]
fn preset_overrides_and_listing() {
    let tmp = tempfile::tempdir().unwrap();
    let out = gem(&["preset"], tmp.path());
    assert!(out.status.success());
    let listing = String::from_utf8_lossy(&out.stdout);
    for name in ["uniform-echo", "freq-shift", "split-recall", "linear-dispersion", "compress-interfere"] {
        assert!(listing.contains(name), "{name} not listed");
    }

    let out = gem(
        &["preset", "uniform-echo", "grid.nz=1025", "grid.dt=\"5 ns\"", "--no-svg"],
        tmp.path(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let config = fs::read_to_string(tmp.path().join("uniform-echo/config.toml")).unwrap();
    assert!(config.contains("nz = 1025"), "{config}");
}

#[test]
fn sweep_writes_one_row_per_value() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "sweep.toml",
        &format!("{SMALL}\n[outputs]\nsvg = false\n\n[sweep]\nparameter = \"medium.beta\"\nvalues = [0.5, 1.0, 2.0]\n"),
    );
    let out = gem(&["sweep", &cfg], tmp.path());
    assert!(out.status.success(), "{}", stderr(&out));
    let dir = tmp.path().join("small");
    let table = fs::read_to_string(dir.join("sweep.csv")).unwrap();
    let rows: Vec<&str> = table.lines().skip(2).collect();
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| r.split(',').nth(1) == Some("ok")));
    for i in 0..3 {
        assert!(dir.join(format!("run-{i:03}/summary.toml")).is_file());
    }
}
