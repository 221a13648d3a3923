use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use contagion_lab::{parse_config, Mode, ScenarioConfig, SimulateFiniteConfig};
use serde_json::Value;
use sha2::{Digest, Sha256};

const MINIMAL_THREE_BANK: &str = r#"{
  "network": { "n": 3, "T": 2.0, "rates": [[0,2,2],[2,0,2],[2,2,0]], "societal": [1,1,1] },
  "x0": [3.0, 3.0, 3.0],
  "sigma": 0.5
}"#;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_contagion-lab"))
}

fn workspace() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn parse(mode: Mode, text: &str) -> Result<ScenarioConfig, contagion_lab::CliError> {
    ScenarioConfig::parse(mode, Some(text), Path::new("."), None)
}

#[test]
fn minimal_config_fills_defaults() {
    let ScenarioConfig::SimulateFinite(c) = parse(Mode::SimulateFinite, MINIMAL_THREE_BANK).unwrap() else {
        panic!("wrong variant")
    };
    assert_eq!(c.dt, Some(2.0 / 2000.0));
    assert_eq!(c.seed, 0);
    assert_eq!(c.common_seed, 0);
    assert_eq!(c.runs, 1);
    assert_eq!(c.r2, 0.0);
    assert!(c.feedback.is_some());
}

#[test]
fn seed_flag_overrides_config() {
    let c = ScenarioConfig::parse(Mode::SimulateFinite, Some(MINIMAL_THREE_BANK), Path::new("."), Some(42)).unwrap();
    assert_eq!(c.seed(), 42);
}

#[test]
fn negative_recovery_names_its_field() {
    let text = MINIMAL_THREE_BANK.replace("\"sigma\": 0.5", "\"sigma\": 0.5, \"r2\": -0.2");
    let e = parse(Mode::SimulateFinite, &text).unwrap_err();
    assert_eq!(e.exit_code(), 1);
    assert!(e.to_string().contains("r2"), "{e}");
}

#[test]
fn unknown_key_is_rejected_with_its_path() {
    let text = MINIMAL_THREE_BANK.replace("\"sigma\": 0.5", "\"sigma\": 0.5, \"sigmaa\": 1");
    let e = parse(Mode::SimulateFinite, &text).unwrap_err();
    assert_eq!(e.exit_code(), 1);
    assert!(e.to_string().contains("sigmaa"), "{e}");
    let nested = MINIMAL_THREE_BANK.replace("\"societal\"", "\"extra\": 1, \"societal\"");
    let e = parse(Mode::SimulateFinite, &nested).unwrap_err();
    assert!(e.to_string().contains("network"), "{e}");
}

#[test]
fn wrong_asset_count_is_rejected() {
    let text = MINIMAL_THREE_BANK.replace("[3.0, 3.0, 3.0]", "[3.0, 3.0]");
    assert_eq!(parse(Mode::SimulateFinite, &text).unwrap_err().exit_code(), 1);
}

#[test]
fn path_references_resolve_against_the_config_directory() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "net.json", r#"{ "n": 2, "T": 1.0, "rates": [[0,1],[1,0]], "societal": [1,1] }"#);
    let text = r#"{ "network": { "path": "net.json" }, "x0": [2, 2], "sigma": 0.3 }"#;
    let c: SimulateFiniteConfig = parse_config(text, dir.path()).unwrap();
    assert_eq!(c.network.n(), 2);
    let missing = r#"{ "network": { "path": "nope.json" }, "x0": [2, 2], "sigma": 0.3 }"#;
    assert_eq!(parse_config::<SimulateFiniteConfig>(missing, dir.path()).unwrap_err().exit_code(), 3);
}

#[test]
fn bundled_configs_parse() {
    let dir = workspace().join("configs");
    for (name, mode) in [
        ("simulate_finite.json", Mode::SimulateFinite),
        ("solve_mf.json", Mode::SolveMf),
        ("picard.json", Mode::Picard),
        ("scaling_study.json", Mode::ScalingStudy),
        ("full_vs_reduced.json", Mode::FullVsReduced),
    ] {
        let text = fs::read_to_string(dir.join(name)).unwrap();
        ScenarioConfig::parse(mode, Some(&text), &dir, None).unwrap_or_else(|e| panic!("{name}: {e}"));
    }
}

#[test]
fn validation_failure_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.json", &MINIMAL_THREE_BANK.replace("\"sigma\": 0.5", "\"sigma\": 0.5, \"r2\": 2"));
    let status = bin().args(["simulate-finite", "--config"]).arg(&cfg).arg("--out").arg(dir.path().join("o")).output();
    assert_eq!(status.unwrap().status.code(), Some(1));
    let status = bin().arg("solve-mf").arg("--out").arg(dir.path().join("o")).output();
    assert_eq!(status.unwrap().status.code(), Some(1));
    let status = bin().arg("no-such-mode").output();
    assert_eq!(status.unwrap().status.code(), Some(1));
    assert_eq!(bin().arg("--help").output().unwrap().status.code(), Some(0));
}

#[test]
fn unconverged_iteration_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let spec = serde_json::to_value(contagion::scenarios::weak_feedback_spec()).unwrap();
    let cfg = serde_json::json!({ "spec": spec, "mf": { "dx": 0.05, "picard_cap": 1 } });
    let path = write(dir.path(), "p.json", &cfg.to_string());
    let out = bin().args(["picard", "--config"]).arg(&path).arg("--out").arg(dir.path().join("o")).output().unwrap();
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn io_failure_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let status = bin().args(["simulate-finite", "--config"]).arg(dir.path().join("absent.json")).output();
    assert_eq!(status.unwrap().status.code(), Some(3));
    // The output directory cannot be created below a regular file.
    let blocker = write(dir.path(), "file", "");
    let cfg = write(dir.path(), "ok.json", MINIMAL_THREE_BANK);
    let status = bin().args(["simulate-finite", "--config"]).arg(&cfg).arg("--out").arg(blocker.join("o")).output();
    assert_eq!(status.unwrap().status.code(), Some(3));
}

fn read_manifest(out: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap()
}

fn run_to(dir: &Path, args: &[&str]) -> PathBuf {
    let out = dir.to_path_buf();
    let o = bin().args(args).arg("--out").arg(&out).output().unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    out
}

#[test]
fn manifest_hashes_every_emitted_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_to(&dir.path().join("o"), &["reproduce-3bank"]);
    let m = read_manifest(&out);
    assert_eq!(m["mode"], "reproduce-3bank");
    assert_eq!(m["seed"], 0);
    assert_eq!(m["config"]["r2"], 0.1);
    let files = m["files"].as_array().unwrap();
    let mut listed: Vec<String> = files.iter().map(|f| f["path"].as_str().unwrap().to_string()).collect();
    for f in files {
        let bytes = fs::read(out.join(f["path"].as_str().unwrap())).unwrap();
        assert_eq!(f["bytes"].as_u64().unwrap() as usize, bytes.len());
        assert_eq!(f["sha256"].as_str().unwrap(), hex::encode(Sha256::digest(&bytes)));
    }
    let mut on_disk: Vec<String> = fs::read_dir(&out)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .filter(|n| n != "manifest.json")
        .collect();
    listed.sort();
    on_disk.sort();
    assert_eq!(listed, on_disk);
    assert!(listed.contains(&"network.json".to_string()));
}

#[test]
fn identical_invocations_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", &MINIMAL_THREE_BANK.replace("\"sigma\": 0.5", "\"sigma\": 0.5, \"runs\": 2"));
    let cfg = cfg.to_str().unwrap();
    let a = run_to(&dir.path().join("a"), &["simulate-finite", "--config", cfg, "--seed", "9"]);
    let b = run_to(&dir.path().join("b"), &["simulate-finite", "--config", cfg, "--seed", "9"]);
    let c = run_to(&dir.path().join("c"), &["simulate-finite", "--config", cfg, "--seed", "10"]);
    let ma = fs::read(a.join("manifest.json")).unwrap();
    assert_eq!(ma, fs::read(b.join("manifest.json")).unwrap());
    assert_ne!(read_manifest(&a)["files"], read_manifest(&c)["files"]);
    assert!(a.join("run_0001").is_dir());
}

#[test]
fn cascade_test_mode_reports_full_agreement() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", r#"{ "instances": 300, "seed": 3 }"#);
    let out = run_to(&dir.path().join("o"), &["cascade-test", "--config", cfg.to_str().unwrap()]);
    let v: Value = serde_json::from_str(&fs::read_to_string(out.join("cascade_test.json")).unwrap()).unwrap();
    assert_eq!(v["agreements"], 300);
    assert!(v["mismatches"].as_array().unwrap().is_empty());
}
