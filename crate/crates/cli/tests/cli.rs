use std::process::Command;

use rmtk::output::{parse_json, rational_from_json, rational_json};
use rug::Rational;
use serde_json::Value;

fn rmtk(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_rmtk")).args(args).output().unwrap()
}

fn stdout(o: &std::process::Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn tmp(name: &str) -> std::path::PathBuf {
    let d = std::env::temp_dir().join(format!("rmtk-cli-{}", std::process::id()));
    std::fs::create_dir_all(&d).unwrap();
    d.join(name)
}

#[test]
fn maps_reproduces_n2_n2_1() {
    let o = rmtk(&["maps", "--mu", "4", "--t-order", "0"]);
    assert!(o.status.success());
    let v = parse_json(&stdout(&o)).unwrap();
    let table = v["table"].as_array().unwrap();
    let get = |g: u64| table.iter().find(|e| e["g"] == g).map(|e| rational_from_json(&e["coeff"]).unwrap());
    assert_eq!(get(0), Some(Rational::from(2)));
    assert_eq!(get(1), Some(Rational::from(1)));
}

#[test]
fn sampling_is_byte_identical() {
    let (a, b) = (tmp("a.csv"), tmp("b.csv"));
    for p in [&a, &b] {
        let o = rmtk(&["sample", "--beta", "2", "--size", "4", "--draws", "1", "--seed", "7", "--out", p.to_str().unwrap()]);
        assert!(o.status.success());
    }
    let (ta, tb) = (std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(ta, tb);
    let text = String::from_utf8(ta).unwrap();
    assert!(text.contains("# beta,N,seed,draw\n# 2,4,7,0\n"));
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 4);
}

#[test]
fn exit_codes() {
    assert_eq!(rmtk(&["bogus"]).status.code(), Some(2));
    assert_eq!(rmtk(&["maps", "--mu", "4", "--nope", "1"]).status.code(), Some(2));
    let o = rmtk(&["maps", "--mu", "4,x"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--mu"));
    let o = rmtk(&["angular", "--X", "1,1", "--Y", "0,1", "--mc-samples", "0"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--X"));
    assert_eq!(rmtk(&["maps", "--mu", "4", "--out", "/nonexistent-dir/x/y.json"]).status.code(), Some(3));
}

#[test]
fn headers_echo_the_resolved_config() {
    for args in [
        vec!["maps", "--mu", "2,2", "--t-order", "1"],
        vec!["gap", "--points", "9", "--s-max", "1"],
        vec!["tw", "--points", "3"],
        vec!["density", "--coeffs", "0,1,0,1", "--points", "5"],
        vec!["ortho", "--depth", "4", "--format", "csv"],
        vec!["toprec", "--g", "0", "--n", "3", "--t-order", "0", "--mu-max", "2"],
        vec!["angular", "--X", "0,1", "--Y", "0,2", "--mc-samples", "100", "--seed", "3"],
        vec!["spacing", "--size", "20", "--draws", "5", "--bins", "10"],
    ] {
        let o = rmtk(&args);
        assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        let text = stdout(&o);
        let mut lines = text.lines();
        assert!(lines.next().unwrap().starts_with("# rmtk "));
        assert_eq!(lines.next().unwrap(), format!("# subcommand: {}", args[0]));
        let params: Value = serde_json::from_str(lines.next().unwrap().strip_prefix("# params: ").unwrap()).unwrap();
        assert!(params.get("format").is_some());
        assert!(lines.next().unwrap().starts_with("# seed: "));
    }
}

#[test]
fn json_outputs_round_trip() {
    for args in [
        vec!["maps", "--mu", "4,2", "--t-order", "1"],
        vec!["ortho", "--coeffs", "0,1,0,1", "--depth", "5"],
        vec!["toprec", "--g", "1", "--n", "1", "--t-order", "1"],
        vec!["angular", "--X", "0,1,2", "--Y", "0,0.5,1", "--mc-samples", "50"],
        vec!["gap", "--points", "9", "--format", "json"],
    ] {
        let v = parse_json(&stdout(&rmtk(&args))).unwrap();
        let again: Value = serde_json::from_str(&serde_json::to_string_pretty(&v).unwrap()).unwrap();
        assert_eq!(v, again);
    }
    for r in [Rational::from((-3, 7)), Rational::from(0), Rational::from((1u64 << 63, 3u32)) * Rational::from(1u64 << 20)] {
        assert_eq!(rational_from_json(&rational_json(&r)).unwrap(), r);
    }
}

#[test]
fn ortho_gaussian_values() {
    let v = parse_json(&stdout(&rmtk(&["ortho", "--depth", "6"]))).unwrap();
    for k in 1..6 {
        let g = v["gamma"][k].as_f64().unwrap();
        assert!((g - (k as f64).sqrt()).abs() < 1e-12);
    }
    // Z_1 = √(2π)
    assert!((v["ZN"][0].as_f64().unwrap() - (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-12);
}

#[test]
fn toprec_free_energy_and_oracle() {
    let v = parse_json(&stdout(&rmtk(&["toprec", "--g", "2", "--n", "0", "--t-order", "0"]))).unwrap();
    let c = &v["coefficients"][0];
    assert_eq!(rational_from_json(c).unwrap(), Rational::from((-1, 240)));
    let v = parse_json(&stdout(&rmtk(&["toprec", "--g", "1", "--n", "1", "--t-order", "1"]))).unwrap();
    let w = parse_json(&stdout(&rmtk(&["maps", "--mu", "4", "--t-order", "1"]))).unwrap();
    for q in 0..=1u64 {
        let tr = v["coefficients"].as_array().unwrap().iter().find(|e| e["mu"][0] == 4 && e["q"] == q).unwrap();
        let mp = w["table"].as_array().unwrap().iter().find(|e| e["g"] == 1 && e["q"] == q).unwrap();
        assert_eq!(rational_from_json(tr), rational_from_json(&mp["coeff"]));
    }
}
