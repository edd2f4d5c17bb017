//! End-to-end tests of the `ghk` binary: command wiring, file formats and
//! byte-identical determinism of emitted artifacts.

use std::path::PathBuf;
use std::process::Command;

use num_complex::Complex64;

use ghk_core::grid::{GridFunction, GridSpec};
use ghk_core::io::{read_ghk1_file, write_ghk1_file, write_phase_samples_file};
use ghk_core::phase::{random_polynomial, PhaseSamples};

fn ghk() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ghk"))
}

fn scratch_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("ghk-cli-{tag}-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn unit_indicator(path: &PathBuf) {
    let spec = GridSpec::line(512, -2.0, 2.0);
    let f = GridFunction::from_fn(&spec, |x| {
        if x[0] > 0.0 && x[0] < 1.0 {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::default()
        }
    })
    .unwrap();
    write_ghk1_file(&f, path).unwrap();
}

#[test]
fn selftest_exits_zero_and_mutation_fails() {
    let out = ghk().arg("selftest").output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    let text = String::from_utf8_lossy(&out.stdout).to_string();
    for name in ["constants", "fft-recursion", "indicator", "rearrangement"] {
        assert!(text.contains(&format!("{name}: pass")), "{text}");
    }
    let mutated = ghk().args(["selftest", "--mutate", "constants"]).output().unwrap();
    assert!(!mutated.status.success());
    assert!(String::from_utf8_lossy(&mutated.stdout).contains("constants: FAIL"));
}

#[test]
fn chain_scalar_mode_reports_identities() {
    let out = ghk().args(["chain", "-k", "1"]).output().unwrap();
    assert!(out.status.success());
    let json: serde_json::Value =
        serde_json::from_slice(&out.stdout).expect("chain output is JSON");
    assert_eq!(json["all_hold"], true);
    assert_eq!(json["steps"].as_array().unwrap().len(), 5);
}

#[test]
fn norm_and_deficit_on_ghk1_file() {
    let dir = scratch_dir("norm");
    let path = dir.join("indicator.ghk1");
    unit_indicator(&path);
    let out = ghk()
        .args(["norm", "--input", path.to_str().unwrap(), "-k", "2"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout).to_string();
    let uk: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("uk_norm="))
        .unwrap()
        .parse()
        .unwrap();
    assert!((uk - (2.0f64 / 3.0).powf(0.25)).abs() < 1e-3, "{uk}");
    let out = ghk()
        .args(["deficit", "--input", path.to_str().unwrap(), "-k", "2"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout).to_string();
    let d: f64 = text.trim().strip_prefix("deficit=").unwrap().parse().unwrap();
    assert!((d - 0.0353).abs() < 2e-3, "{d}");
    std::fs::remove_dir_all(dir).ok();
}

#[test]
fn rearrange_writes_equimeasurable_file() {
    let dir = scratch_dir("rearrange");
    let input = dir.join("in.ghk1");
    let output = dir.join("out.ghk1");
    let spec = GridSpec::line(129, -2.0, 2.0);
    let f = GridFunction::from_fn(&spec, |x| Complex64::new(x[0].sin().abs(), x[0].cos())).unwrap();
    write_ghk1_file(&f, &input).unwrap();
    let out = ghk()
        .args([
            "rearrange",
            "--input",
            input.to_str().unwrap(),
            "--out",
            output.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let g = read_ghk1_file(&output).unwrap();
    let mut a: Vec<u64> = f.values().iter().map(|v| v.norm().to_bits()).collect();
    let mut b: Vec<u64> = g.values().iter().map(|v| v.re.to_bits()).collect();
    a.sort_unstable();
    b.sort_unstable();
    assert_eq!(a, b);
    std::fs::remove_dir_all(dir).ok();
}

#[test]
fn stability_csv_is_byte_identical_across_runs() {
    let dir = scratch_dir("stability");
    let config = dir.join("config.json");
    let base = ghk_core::extremizer::ExtremizerParams::standard(2, 1);
    let cfg = serde_json::json!({
        "k": 2, "n": 1,
        "grid_cells": 128, "box_lo": -8.0, "box_hi": 8.0,
        "base": base.to_json_value(),
        "family": "bump",
        "amplitudes": [0.0, 0.1],
        "seeds": [1, 2],
        "fit_restarts": 0,
    });
    std::fs::write(&config, serde_json::to_string_pretty(&cfg).unwrap()).unwrap();
    let csv1 = dir.join("run1.csv");
    let csv2 = dir.join("run2.csv");
    for csv in [&csv1, &csv2] {
        let out = ghk()
            .args([
                "stability",
                "--config",
                config.to_str().unwrap(),
                "--out",
                csv.to_str().unwrap(),
            ])
            .output()
            .unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let b1 = std::fs::read(&csv1).unwrap();
    let b2 = std::fs::read(&csv2).unwrap();
    assert_eq!(b1, b2, "stability CSV must be byte-identical across runs");
    assert!(csv1.with_extension("gnuplot").exists());
    let header = String::from_utf8_lossy(&b1);
    assert!(header.starts_with("schema,k,n,amplitude,seed,"), "{header}");
    std::fs::remove_dir_all(dir).ok();
}

#[test]
fn scale_and_levelset_emit_json() {
    let dir = scratch_dir("scale");
    let path = dir.join("f.ghk1");
    unit_indicator(&path);
    let out = ghk()
        .args(["scale", "--input", path.to_str().unwrap(), "-k", "2"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(json["l_star"], 0);
    let out = ghk()
        .args([
            "levelset",
            "--input",
            path.to_str().unwrap(),
            "-k",
            "2",
            "--eta",
            "0.1",
            "--count",
            "5",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let rows: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    // an indicator's level sets are intervals: r(s) = 1
    for row in rows.as_array().unwrap() {
        if let Some(r) = row["r"].as_f64() {
            assert!((r - 1.0).abs() < 1e-9);
        }
    }
    std::fs::remove_dir_all(dir).ok();
}

#[test]
fn admissible_verdict_from_json_tuple() {
    let dir = scratch_dir("admissible");
    let path = dir.join("tuple.json");
    let tuple = serde_json::json!({
        "n": 2,
        "functionals": [1.0, 0.0, 0.0, 1.0, 1.0, 1.0],
        "lengths": [1.0, 1.0, 3.0],
    });
    std::fs::write(&path, tuple.to_string()).unwrap();
    let out = ghk()
        .args(["admissible", "--tuple", path.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(out.status.success());
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(json["admissible"], false);
    assert_eq!(json["exact_arithmetic"], true);
    assert!((json["maxima"][2].as_f64().unwrap() - 2.0).abs() < 1e-12);
    std::fs::remove_dir_all(dir).ok();
}

#[test]
fn phase_recover_from_sample_file() {
    let dir = scratch_dir("phase");
    let path = dir.join("samples.phase");
    let poly = random_polynomial(1, 1, 1.0, 3131);
    let samples = PhaseSamples::from_polynomial_grid(&[0.0], 1.0, 33, &poly).unwrap();
    write_phase_samples_file(&samples, &path).unwrap();
    let out = ghk()
        .args([
            "phase-recover",
            "--samples",
            path.to_str().unwrap(),
            "-k",
            "2",
            "--tau",
            "1e-6",
        ])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(json["inlier_fraction"].as_f64().unwrap() > 0.999);
    // linear coefficient recovered
    let coeffs = json["poly"].as_array().unwrap();
    let lin = coeffs
        .iter()
        .find(|c| c[0] == serde_json::json!([1]))
        .expect("linear term present");
    assert!((lin[1].as_f64().unwrap() - poly.coeff(&[1])).abs() < 1e-8);
    std::fs::remove_dir_all(dir).ok();
}

#[test]
fn fit_from_extremizer_json_and_grid_flag() {
    let dir = scratch_dir("fit");
    let params_path = dir.join("params.json");
    let out_path = dir.join("fitted.json");
    let mut base = ghk_core::extremizer::ExtremizerParams::standard(2, 1);
    base.matrix = vec![1.5];
    std::fs::write(
        &params_path,
        serde_json::to_string_pretty(&base.to_json_value()).unwrap(),
    )
    .unwrap();
    let out = ghk()
        .args([
            "fit",
            "--extremizer",
            params_path.to_str().unwrap(),
            "--grid",
            "256,-8,8",
            "-k",
            "2",
            "--restarts",
            "1",
            "--out",
            out_path.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
    assert!(json["epsilon"].as_f64().unwrap() < 1e-3);
    std::fs::remove_dir_all(dir).ok();
}

#[test]
fn bad_inputs_produce_errors_not_panics() {
    let out = ghk().args(["norm", "-k", "2"]).output().unwrap();
    assert!(!out.status.success());
    let out = ghk()
        .args(["norm", "--input", "/nonexistent.ghk1", "-k", "2"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("error:"));
}
