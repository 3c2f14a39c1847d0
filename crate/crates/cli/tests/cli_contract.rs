//! Command-line surface contract: exit codes, error wording, configuration
//! precedence, list/range syntax, and unit conventions, all exercised
//! through the real binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn scratch_dir() -> PathBuf {
    let dir = std::env::temp_dir().join(format!(
        "thzsim-contract-{}-{}",
        std::process::id(),
        std::thread::current().name().unwrap_or("t").replace("::", "-")
    ));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_thzsim"))
        .args(args)
        .output()
        .expect("spawn runner")
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap()
}

fn metadata_line(text: &str, key: &str) -> String {
    let prefix = format!("# {key} = ");
    text.lines()
        .find(|l| l.starts_with(&prefix))
        .unwrap_or_else(|| panic!("no metadata line for `{key}`"))
        .trim_start_matches(&prefix)
        .to_string()
}

fn data_rows(text: &str) -> Vec<String> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(str::to_string)
        .collect()
}

// 1. File problems exit with status 2 and name the key and line.
#[test]
fn file_errors_carry_key_and_line() {
    let dir = scratch_dir();
    let path = dir.join("bad_key.cfg");
    std::fs::write(&path, "# comment\nsubcarrierz = 4\n").unwrap();
    let out = run(&["gain", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr_of(&out);
    assert!(err.contains("configuration error"), "{err}");
    assert!(err.contains("subcarrierz") && err.contains("line 2"), "{err}");

    let path = dir.join("bad_value.cfg");
    std::fs::write(&path, "trials = 2\n\ntrials = many\n").unwrap();
    let out = run(&["gain", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr_of(&out);
    assert!(err.contains("`trials`") && err.contains("line 3"), "{err}");

    let path = dir.join("bad_shape.cfg");
    std::fs::write(&path, "just words\n").unwrap();
    let out = run(&["gain", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr_of(&out);
    assert!(err.contains("line 1") && err.contains("key = value"), "{err}");

    let out = run(&["gain", "--config", dir.join("missing.cfg").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).contains("missing.cfg"));
}

// 2. Override problems exit with status 2 and name the argument or key.
#[test]
fn override_errors_name_the_key() {
    let out = run(&["gain", "trials"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).contains("KEY=VALUE"));

    let out = run(&["gain", "bogus=1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).contains("`bogus`"));

    let out = run(&["gain", "trials=zero"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).contains("`trials`"));
}

// 3. Cross-field validation exits with status 2 and names the offending key.
#[test]
fn validation_names_offending_key() {
    let out = run(&["gain", "nsb=7"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).contains("`nsb`"));

    let out = run(&["nmse", "estimators=foo"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).contains("`estimators`"));

    let out = run(&["gain", "bandwidth_ghz=700"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).contains("`bandwidth_ghz`"));
}

// 4. An unwritable output path is a runtime failure, status 3.
#[test]
fn unwritable_output_exits_3() {
    let out = run(&[
        "gain",
        "--desk",
        "subcarriers=4",
        "--out",
        "/nonexistent-dir/result.csv",
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr_of(&out).contains("runtime error"));
}

// 5. Range syntax and GHz units resolve through a config file, and dedicated
//    flags override file values.
#[test]
fn ranges_units_and_precedence() {
    let dir = scratch_dir();
    let cfg = dir.join("sweep.cfg");
    std::fs::write(
        &cfg,
        "snr_db = -15:5:10   # inclusive range\nbandwidth_ghz = 40\ntrials = 5\n",
    )
    .unwrap();
    let out_path = dir.join("sweep.csv");
    let out = run(&[
        "nmse",
        "--desk",
        "subcarriers=4",
        "estimators=ls",
        "--config",
        cfg.to_str().unwrap(),
        "--trials",
        "2",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr_of(&out));
    let text = read(&out_path);
    assert_eq!(metadata_line(&text, "snr_db"), "-15,-10,-5,0,5,10");
    assert_eq!(metadata_line(&text, "bandwidth_ghz"), "40");
    assert_eq!(metadata_line(&text, "trials"), "2");
    let rows = data_rows(&text);
    assert_eq!(rows.len(), 6);
    assert!(rows[0].starts_with("-1.50000000e1,ls,"));
    assert!(rows[5].starts_with("1.00000000e1,ls,"));
}

// 6. An empty config file changes nothing: the output equals a run with no
//    file at all, and the metadata shows the built-in defaults.
#[test]
fn empty_file_keeps_defaults() {
    let dir = scratch_dir();
    let cfg = dir.join("empty.cfg");
    std::fs::write(&cfg, "").unwrap();
    let with_file = dir.join("with_file.csv");
    let without = dir.join("without.csv");
    let out = run(&[
        "gain",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        with_file.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let out = run(&["gain", "--out", without.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(read(&with_file), read(&without));

    let text = read(&with_file);
    assert_eq!(metadata_line(&text, "n_rows"), "100");
    assert_eq!(metadata_line(&text, "subcarriers"), "400");
    assert_eq!(metadata_line(&text, "carrier_ghz"), "300");
    assert_eq!(metadata_line(&text, "seed"), "1");
}

// 7. The desk preset shrinks the scene and is itself overridable.
#[test]
fn desk_preset_applies_before_overrides() {
    let dir = scratch_dir();
    let out_path = dir.join("desk.csv");
    let out = run(&[
        "gain",
        "--desk",
        "subcarriers=8",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = read(&out_path);
    assert_eq!(metadata_line(&text, "n_rows"), "16");
    assert_eq!(metadata_line(&text, "n_cols"), "16");
    assert_eq!(metadata_line(&text, "subcarriers"), "8");
    assert_eq!(data_rows(&text).len(), 3 * 8);
}

// 8. Different seeds change stochastic output; the seed is recorded.
#[test]
fn seed_changes_stochastic_output() {
    let dir = scratch_dir();
    let a = dir.join("a.csv");
    let b = dir.join("b.csv");
    for (path, seed) in [(&a, "5"), (&b, "6")] {
        let out = run(&[
            "cdf-dict",
            "--desk",
            "--trials",
            "20",
            "--seed",
            seed,
            "--out",
            path.to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0));
    }
    assert_eq!(metadata_line(&read(&a), "seed"), "5");
    assert_ne!(read(&a), read(&b));
}
