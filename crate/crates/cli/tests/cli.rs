use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_sagnac-switch");
const DEFAULT_NOISE: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../core/configs/default.toml");

fn run(args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .env_remove("SWITCH_SEED")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

/// Parses the `train` line printed by `synth`.
fn printed_train(text: &str) -> String {
    text.lines()
        .find_map(|l| l.strip_prefix("train "))
        .expect("train line")
        .to_string()
}

#[test]
fn synth_round_trips_through_verify() {
    for args in [
        vec!["synth", "--axis", "x", "--angle", "180"],
        vec!["synth", "--gate", "4"],
        vec!["synth", "--matrix", "1,0;0,1"],
        vec!["synth", "--axis", "y", "--angle", "-37.5"],
    ] {
        let o = run(&args);
        assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        let text = stdout(&o);
        assert!(text.contains("full gadget") && text.contains("reduced gadget"));
        let train = printed_train(&text);

        let mut verify = vec!["verify", "--train", train.as_str()];
        verify.extend(&args[1..]);
        let o = run(&verify);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let text = stdout(&o);
        assert!(text.contains("reciprocal exact=true"), "{text}");
        let line = text.lines().find(|l| l.starts_with("fidelity ")).unwrap();
        for part in line.split_whitespace().skip(1) {
            let f: f64 = part.split('=').nth(1).unwrap().parse().unwrap();
            // Printed angles carry six decimals of a degree, about 1.7e-8 rad.
            assert!(f > 1.0 - 1e-12, "{line}");
        }
    }
}

#[test]
fn angles_are_printed_with_six_decimals() {
    let text = stdout(&run(&["synth", "--gate", "6"]));
    let theta = text.lines().find(|l| l.trim_start().starts_with("theta ")).unwrap();
    let value = theta.split_whitespace().nth(1).unwrap();
    assert_eq!(value.split('.').nth(1).unwrap().len(), 6);
}

#[test]
fn usage_errors_exit_with_2() {
    for args in [
        vec!["synth"],
        vec!["synth", "--gate", "10"],
        vec!["synth", "--matrix", "1,1;0,1"],
        vec!["synth", "--matrix", "1,0;0"],
        vec!["synth", "--axis", "w", "--angle", "3"],
        vec!["verify"],
        vec!["discriminate", "--ideal", "--runs", "0", "--out", "unused"],
        vec!["discriminate", "--out", "unused"],
        vec!["tomo", "--unitaries", "2", "--out", "unused"],
    ] {
        let o = run(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
    }
    assert!(!Path::new("unused").exists());
}

#[test]
fn verify_reports_non_reciprocal_trains() {
    let o = run(&["verify", "--train", "QWP:45 F:+"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("reciprocal exact=false"));
    let o = run(&["verify", "--train", "QWP:45 F:+", "--gate", "1"]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn config_errors_exit_with_3() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let out = out.to_str().unwrap();
    let missing = dir.path().join("missing.toml");
    let o = run(&["discriminate", "--noise", missing.to_str().unwrap(), "--out", out]);
    assert_eq!(o.status.code(), Some(3));

    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "tdc_splitting = 0.5\n").unwrap();
    let o = run(&["discriminate", "--noise", bad.to_str().unwrap(), "--out", out]);
    assert_eq!(o.status.code(), Some(3));

    let text = fs::read_to_string(DEFAULT_NOISE).unwrap().replace("tdc_splitting = 0.5", "tdc_splitting = 1.5");
    fs::write(&bad, text).unwrap();
    let o = run(&["discriminate", "--noise", bad.to_str().unwrap(), "--out", out]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn ideal_discrimination_bundle() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("ideal");
    let o = run(&["discriminate", "--ideal", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    for f in ["config-echo.toml", "success.csv", "success_runs.csv", "summary.json"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let success = fs::read_to_string(out.join("success.csv")).unwrap();
    assert_eq!(success.lines().count(), 53);
    for line in success.lines().skip(1) {
        let p: f64 = line.rsplit(',').next().unwrap().parse().unwrap();
        assert!((p - 1.0).abs() < 1e-9);
    }
    assert_eq!(fs::read_to_string(out.join("success_runs.csv")).unwrap().lines().count(), 6 * 52 + 1);
    let s = read_json(&out.join("summary.json"));
    assert_eq!(s["bound_min"], 0.841);
    assert_eq!(s["bound_mean"], 0.904);
    assert!((s["witness_value"].as_f64().unwrap() - 1.0).abs() < 1e-9);
}

#[test]
fn noisy_discrimination_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let c = dir.path().join("c");
    for out in [&a, &b] {
        let o = run(&["discriminate", "--noise", DEFAULT_NOISE, "--runs", "6", "--seed", "7", "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for f in ["counts.csv", "success.csv", "success_runs.csv", "summary.json", "config-echo.toml"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let counts = fs::read_to_string(a.join("counts.csv")).unwrap();
    assert_eq!(counts.lines().count(), 6 * 52 + 1);
    let s = read_json(&a.join("summary.json"));
    let mean = s["mean"].as_f64().unwrap();
    assert!((0.98..=1.0).contains(&mean), "{mean}");

    // SWITCH_SEED stands in for --seed; a different seed changes the counts.
    let o = Command::new(BIN)
        .args(["discriminate", "--noise", DEFAULT_NOISE, "--runs", "1", "--out", c.to_str().unwrap()])
        .env("SWITCH_SEED", "8")
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(fs::read_to_string(c.join("config-echo.toml")).unwrap().contains("rng_seed = 8"));
    let first_a = counts.lines().nth(1).unwrap().to_string();
    let first_c = fs::read_to_string(c.join("counts.csv")).unwrap().lines().nth(1).unwrap().to_string();
    assert_ne!(first_a, first_c);
}

#[test]
fn witness_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("w");
    let o = run(&["witness", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("tr[S W_switch]      1.000000000"), "{text}");
    assert!(text.contains("tr[S W_fixed_order] 0.538461538"), "{text}");
    assert!(text.contains("bound 0.904"));
    let s = read_json(&out.join("summary.json"));
    assert!((s["witness_value"].as_f64().unwrap() - 1.0).abs() < 1e-9);
}

#[test]
fn tomography_is_reproducible_and_in_band() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        let o = run(&["tomo", "--unitaries", "100", "--seed", "3", "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for f in ["tomo_fidelity.csv", "tomo_reciprocity.csv", "tomo_histogram.csv", "summary.json"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let fid = fs::read_to_string(a.join("tomo_fidelity.csv")).unwrap();
    assert!(fid.starts_with("index,direction,fidelity\n"));
    assert_eq!(fid.lines().count(), 401);
    let s = read_json(&a.join("summary.json"));
    for key in ["gate_fidelity", "reciprocity"] {
        let mean = s[key]["mean"].as_f64().unwrap();
        assert!((0.99..=1.0).contains(&mean), "{key} {mean}");
    }
}

#[test]
fn noiseless_tomography_is_perfect() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t");
    let o = run(&["tomo", "--noiseless", "--unitaries", "20", "--seed", "1", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let fid = fs::read_to_string(out.join("tomo_fidelity.csv")).unwrap();
    for line in fid.lines().skip(1) {
        let f: f64 = line.rsplit(',').next().unwrap().parse().unwrap();
        assert!(f >= 1.0 - 1e-9, "{line}");
    }
}
