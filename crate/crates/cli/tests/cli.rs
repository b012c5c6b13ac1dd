use std::process::Command;

use ehm_cli::config::{parse_config, AlphaSpec, KPolicy, LabelRange, RunConfig};
use ehm_cli::verify::CHECK_IDS;

fn ehm(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_ehm")).args(args).output().unwrap()
}

#[test]
fn configuration_survives_a_round_trip() {
    let cfg = RunConfig {
        coupling: (0.1, 2.5, 0.7),
        alpha: AlphaSpec::Cf(vec![2, 1, 3, 5]),
        depth: 12,
        labels: LabelRange::new(2, 7).unwrap(),
        tol: 1.0 / 3.0 * 1e-10,
        section_k: KPolicy::Fixed(48),
        seed: 99,
        ..RunConfig::default()
    };
    assert_eq!(parse_config(&cfg.serialize()).unwrap(), cfg);
}

#[test]
fn bad_configuration_exits_with_two() {
    let dir = std::env::temp_dir().join(format!("ehm-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("bad.cfg");
    std::fs::write(&path, "alpha = golden\nlabels = 1..0\n").unwrap();
    let out = ehm(&["--config", path.to_str().unwrap(), "gaps"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("empty label range"));
    std::fs::write(&path, "depth = 20\n").unwrap();
    let out = ehm(&["--config", path.to_str().unwrap(), "gaps"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("frequency required"));
}

#[test]
fn rotation_subcommand_reports_the_first_label() {
    let out = ehm(&["--format", "json", "rho", "--energy", "-2.0"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["rows"][0]["label"], serde_json::json!(1));
}

#[test]
fn verify_lists_every_check_once() {
    let out = ehm(&["verify"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let ids: Vec<&str> = v["checks"].as_array().unwrap().iter().map(|c| c["id"].as_str().unwrap()).collect();
    assert_eq!(ids, CHECK_IDS);
    assert_eq!(v["passed"], serde_json::json!(true));
}
