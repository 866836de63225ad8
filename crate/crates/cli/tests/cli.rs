//! End-to-end checks of the `replab` binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_replab")
}

fn tmpdir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("replab-cli-{tag}-{}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("exp.cfg");
    fs::write(&path, body).unwrap();
    path
}

fn run(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().unwrap()
}

#[test]
fn dims_writes_the_expected_row() {
    let dir = tmpdir("dims");
    let cfg = write_config(&dir, "[dims d1]\nclass = threshold:3\n");
    let out = run(&[
        "dims",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.join("d1.csv")).unwrap();
    assert_eq!(
        csv,
        "experiment_id,vc,littlestone,threshold,bound_holds\nd1,1,2,3,true\n"
    );
    fs::remove_dir_all(dir).unwrap();
}

#[test]
fn zero_trials_is_a_named_validation_error() {
    let dir = tmpdir("zerotrials");
    let cfg = write_config(
        &dir,
        "[stability s1]\nclass = threshold:3\ndistribution = median:3\nepsilon = 0.2\ntrials = 0\n",
    );
    let out = run(&[
        "stability",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("trials"), "{stderr}");
    fs::remove_dir_all(dir).unwrap();
}

#[test]
fn rerun_is_byte_identical() {
    let dir = tmpdir("rerun");
    let cfg = write_config(
        &dir,
        "[stability s1]\nclass = threshold:3\ndistribution = median:3\nepsilon = 0.2\ntrials = 100\nseed = 11\n",
    );
    let mut bytes = Vec::new();
    for pass in ["a", "b"] {
        let out_dir = dir.join(pass);
        let out = run(&[
            "stability",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out_dir.to_str().unwrap(),
            "--json",
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let mut blob = fs::read(out_dir.join("s1.csv")).unwrap();
        blob.extend(fs::read(out_dir.join("s1.json")).unwrap());
        bytes.push(blob);
    }
    assert_eq!(bytes[0], bytes[1]);
    fs::remove_dir_all(dir).unwrap();
}

#[test]
fn seed_flag_overrides_config_seed() {
    let dir = tmpdir("seedflag");
    let cfg = write_config(
        &dir,
        "[jumpprobe j1]\nm = 64\nn = 8\ntrials = 50\nseed = 1\n",
    );
    let out = run(&[
        "jumpprobe",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.to_str().unwrap(),
        "--seed",
        "99",
    ]);
    assert!(out.status.success());
    let csv = fs::read_to_string(dir.join("j1.csv")).unwrap();
    assert!(csv.lines().skip(1).all(|l| l.ends_with(",99")), "{csv}");
    fs::remove_dir_all(dir).unwrap();
}

#[test]
fn missing_section_for_subcommand_errors() {
    let dir = tmpdir("missing");
    let cfg = write_config(&dir, "[dims d1]\nclass = threshold:3\n");
    let out = run(&[
        "boost",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("boost"));
    fs::remove_dir_all(dir).unwrap();
}

#[test]
fn report_combines_runs_and_counts_failures() {
    let dir = tmpdir("report");
    let cfg = write_config(
        &dir,
        "[dims d1]\nclass = threshold:3\nmin_vc = 5\n\n[dims d2]\nclass = threshold:4\n",
    );
    let out = run(&[
        "dims",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let out = run(&[
        "report",
        "--out",
        dir.to_str().unwrap(),
        dir.join("d1.manifest.json").to_str().unwrap(),
        dir.join("d2.manifest.json").to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let summary = String::from_utf8_lossy(&out.stdout);
    assert!(summary.contains("1 failed check(s)"), "{summary}");
    let combined = fs::read_to_string(dir.join("combined.csv")).unwrap();
    // one shared header, one row per experiment
    assert_eq!(combined.lines().count(), 3, "{combined}");
    fs::remove_dir_all(dir).unwrap();
}
