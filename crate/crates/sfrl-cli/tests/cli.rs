//! End-to-end tests of the binary: exit-code contract, JSON report shape,
//! artifact determinism, file-based encode/decode roundtrips.

use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sfrl"))
}

fn temp_dir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("sfrl-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn write(dir: &std::path::Path, name: &str, content: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, content).unwrap();
    path
}

fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("binary runs")
}

fn stdout_json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON ({e}): {}",
            String::from_utf8_lossy(&out.stdout)
        )
    })
}

#[test]
fn verify_all_is_byte_identical_across_runs() {
    let d1 = temp_dir("va1");
    let d2 = temp_dir("va2");
    for dir in [&d1, &d2] {
        let out = run(bin().args(["verify-all", "--seed", "5", "--out"]).arg(dir));
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let mut names: Vec<_> = std::fs::read_dir(&d1)
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    assert!(names.iter().any(|n| n == "verify_all_report.json"));
    assert!(names.iter().any(|n| n == "chansim_fixture.bin"));
    for name in names {
        let a = std::fs::read(d1.join(&name)).unwrap();
        let b = std::fs::read(d2.join(&name)).unwrap();
        assert_eq!(a, b, "artifact {name:?} differs between identical runs");
    }
}

#[test]
fn efi_example_reports_closed_form_values() {
    let out = run(bin().args(["efi", "example", "--k", "2"]));
    assert!(out.status.success());
    let report = stdout_json(&out);
    assert_eq!(report["h_v"], 1.75);
    assert_eq!(report["i_xy"], 0.25);
}

#[test]
fn efi_sweep_emits_csv() {
    let out = run(bin().args(["efi", "example", "--sweep", "1..4", "--emit-csv"]));
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("k,h_v,i_xy,psi_lb,reference"));
    assert_eq!(lines.count(), 4);
}

#[test]
fn lossy_eval_infeasible_distortion_exits_2() {
    let dir = temp_dir("lossy-infeasible");
    // every reconstruction costs at least 0.2, so D = 0.1 is unachievable
    let config = write(
        &dir,
        "lossy.json",
        r#"{
            "source": [0.5, 0.5],
            "distortion": [[0.2, 1.2], [1.2, 0.2]],
            "target_d": 0.1,
            "variant": "mixture"
        }"#,
    );
    let out = run(bin().args(["lossy", "eval", "--config"]).arg(&config));
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(!out.stderr.is_empty());
}

#[test]
fn unknown_mode_exits_2() {
    let dir = temp_dir("bad-mode");
    let config = write(
        &dir,
        "chansim.json",
        r#"{ "kernel": [[0.9, 0.1], [0.1, 0.9]], "mode": "nonsense" }"#,
    );
    let out = run(bin().args(["chansim", "eval", "--config"]).arg(&config));
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn chansim_file_roundtrip() {
    let dir = temp_dir("chansim-roundtrip");
    let config = write(
        &dir,
        "chansim.json",
        r#"{
            "kernel": [[0.89, 0.11], [0.11, 0.89]],
            "mode": "source-coupled",
            "source": [0.5, 0.5]
        }"#,
    );
    let out = run(
        bin()
            .args(["chansim", "encode", "--input", "1", "--session", "3", "--seed", "42"])
            .args(["--config"])
            .arg(&config)
            .arg("--out")
            .arg(&dir),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let record: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.join("run_record.json")).unwrap()).unwrap();
    assert_eq!(record["master_seed"], 42);
    assert_eq!(record["config_digest"].as_str().unwrap().len(), 64);

    let out = run(
        bin()
            .args(["chansim", "decode", "--session", "3", "--seed", "42", "--config"])
            .arg(&config)
            .arg("--message")
            .arg(dir.join("message.bin")),
    );
    assert!(out.status.success());
    let y = stdout_json(&out)["output"].as_u64().unwrap();
    assert!(y < 2);
}

#[test]
fn seed_env_fallback_matches_flag() {
    let out_flag = run(bin().args(["chansim", "eval", "--seed", "9", "--trials", "1000", "--config", "/dev/null"]));
    // /dev/null is not valid JSON: both forms must fail identically with 2
    assert_eq!(out_flag.status.code(), Some(2));
    let dir = temp_dir("env-seed");
    let config = write(
        &dir,
        "chansim.json",
        r#"{ "kernel": [[0.7, 0.3], [0.2, 0.8]], "mode": "fixed-input" }"#,
    );
    let with_flag = run(
        bin()
            .args(["chansim", "eval", "--seed", "9", "--trials", "1000", "--config"])
            .arg(&config),
    );
    let with_env = run(
        bin()
            .env("SFRL_SEED", "9")
            .args(["chansim", "eval", "--trials", "1000", "--config"])
            .arg(&config),
    );
    assert!(with_flag.status.success());
    assert_eq!(with_flag.stdout, with_env.stdout);
}

#[test]
fn capacity_matches_closed_form_bsc() {
    let dir = temp_dir("capacity");
    let config = write(&dir, "bsc.json", r#"{ "rows": [[0.89, 0.11], [0.11, 0.89]] }"#);
    let out = run(bin().args(["capacity", "--kernel"]).arg(&config));
    assert!(out.status.success());
    let c = stdout_json(&out)["capacity_bits"].as_f64().unwrap();
    let h = |p: f64| -p * p.log2() - (1.0 - p) * (1.0 - p).log2();
    assert!((c - (1.0 - h(0.11))).abs() < 1e-6);
}

#[test]
fn csv_format_flattens_report() {
    let out = run(bin().args(["efi", "example", "--k", "3", "--format", "csv"]));
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("key,value\n"));
    assert!(text.lines().any(|l| l.starts_with("h_v,")));
}
