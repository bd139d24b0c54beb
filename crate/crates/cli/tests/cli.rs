use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use photonstats::photophys::{
    saturation_intensity, ComponentKind, LorentzianComponent, ParametricSpectrum, SaturationModel,
};
use photonstats::presets;
use serde_json::Value;
use tempfile::TempDir;

fn photonstats(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_photonstats"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok_json(out: Output) -> Value {
    assert!(
        out.status.success(),
        "exit {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("summary is JSON")
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn simulate(dir: &TempDir, name: &str, config: &str) -> (PathBuf, Value) {
    let cfg = write(dir, &format!("{name}.cfg"), config);
    let out = dir.path().join(format!("{name}.ptag"));
    let summary = ok_json(photonstats(&["simulate", "--config", s(&cfg), "--out", s(&out)]));
    (out, summary)
}

const PULSED: &str = "mode = pulsed\nduration_s = 1\nseed = 5\npower_over_psat = 1.2\npulse_width_ps = 650\n\
                      efficiency = 0.1\njitter_fwhm_ps = 40\nchannels = 2\n";

#[test]
fn cw_simulation_rate_follows_saturation_curve() {
    let dir = TempDir::new().unwrap();
    let (out, summary) = simulate(
        &dir,
        "cw",
        "mode = cw\nduration_s = 10\nseed = 1\npower_over_psat = 1.85\nefficiency = 0.001\nchannels = 2\n",
    );
    assert!(out.exists());
    let model = SaturationModel::new(0.001 / presets::T1, 1.0).unwrap();
    let expected = saturation_intensity(&model, 1.85).unwrap();
    let rate = summary["mean_rate_hz"].as_f64().unwrap();
    assert!((rate / expected - 1.0).abs() < 0.01, "{rate} vs {expected}");
    let manifest: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("cw.ptag.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "simulate");
    assert_eq!(manifest["seed"], 1);
    assert_eq!(manifest["config"]["power_over_psat"], "1.85");
}

#[test]
fn zero_duration_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "bad.cfg", "mode = cw\nduration_s = 0\npower_over_psat = 1\n");
    let out = photonstats(&["simulate", "--config", s(&cfg), "--out", s(&dir.path().join("x.ptag"))]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!dir.path().join("x.ptag").exists());
}

#[test]
fn same_seed_gives_identical_files() {
    let dir = TempDir::new().unwrap();
    let cfg = "mode = cw\nduration_s = 0.05\nseed = 7\npower_over_psat = 1\nefficiency = 0.05\njitter_fwhm_ps = 200\n";
    let (a, _) = simulate(&dir, "a", cfg);
    let (b, _) = simulate(&dir, "b", cfg);
    assert_eq!(std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
}

#[test]
fn pulsed_g2_is_antibunched() {
    let dir = TempDir::new().unwrap();
    let (ptag, _) = simulate(&dir, "pulsed", PULSED);
    let csv = dir.path().join("g2.csv");
    let json = dir.path().join("g2.json");
    let summary = ok_json(photonstats(&[
        "g2",
        "--input",
        s(&ptag),
        "--out",
        s(&csv),
        "--json",
        s(&json),
        "--mode",
        "pulsed",
        "--bin",
        "0.5",
        "--rep-period",
        "25",
    ]));
    let g2_0 = summary["g2_0"].as_f64().unwrap();
    assert!((g2_0 - 0.11).abs() < 0.03, "{g2_0}");
    assert!(csv.exists() && json.exists());
    assert!(dir.path().join("g2.csv.manifest.json").exists());
    let saved: Value = serde_json::from_str(&std::fs::read_to_string(json).unwrap()).unwrap();
    assert_eq!(saved, summary);
}

#[test]
fn dark_counts_are_uncorrelated() {
    let dir = TempDir::new().unwrap();
    let (ptag, _) = simulate(
        &dir,
        "dark",
        "mode = cw\nduration_s = 2\npower_over_psat = 1\nefficiency = 0\ndark_count_rate_hz = 200000\n",
    );
    let summary = ok_json(photonstats(&[
        "g2",
        "--input",
        s(&ptag),
        "--out",
        s(&dir.path().join("g2.csv")),
        "--bin",
        "5",
        "--window",
        "50",
    ]));
    let g2_0 = summary["g2_0"].as_f64().unwrap();
    assert!((g2_0 - 1.0).abs() < 0.05, "{g2_0}");
}

#[test]
fn cw_fit_reports_three_level_parameters() {
    let dir = TempDir::new().unwrap();
    let (ptag, _) = simulate(
        &dir,
        "blink",
        "mode = cw\nduration_s = 5\nseed = 3\npower_over_psat = 1\nshelve_rate_hz = 2e6\ndeshelve_rate_hz = 5e6\n\
         efficiency = 0.01\njitter_fwhm_ps = 100\n",
    );
    let summary = ok_json(photonstats(&[
        "g2",
        "--input",
        s(&ptag),
        "--out",
        s(&dir.path().join("g2.csv")),
        "--bin",
        "0.25",
        "--window",
        "16",
        "--octaves",
        "12",
        "--fit",
    ]));
    let fit = &summary["fit"]["params"];
    for key in ["tau1", "tau2", "a", "baseline"] {
        assert!(fit[key]["value"].is_number(), "{key}");
    }
    assert!(fit["a"]["value"].as_f64().unwrap() > 0.1);
}

#[test]
fn single_channel_stream_is_a_channel_error() {
    let dir = TempDir::new().unwrap();
    let (ptag, _) = simulate(
        &dir,
        "one",
        "mode = cw\nduration_s = 0.01\npower_over_psat = 1\nefficiency = 0.1\nchannels = 1\n",
    );
    let out = photonstats(&["g2", "--input", s(&ptag), "--out", s(&dir.path().join("g2.csv"))]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("channel"));
}

#[test]
fn too_few_coincidences_exit_4() {
    let dir = TempDir::new().unwrap();
    let (ptag, _) = simulate(
        &dir,
        "sparse",
        "mode = cw\nduration_s = 0.001\npower_over_psat = 1\nefficiency = 0.001\n",
    );
    let out = photonstats(&["g2", "--input", s(&ptag), "--out", s(&dir.path().join("g2.csv"))]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn lifetime_pipeline_recovers_t1() {
    let dir = TempDir::new().unwrap();
    let (ptag, _) = simulate(
        &dir,
        "lt",
        "mode = pulsed\nduration_s = 0.012\nseed = 2\nexcitation_probability = 0.5\npulse_width_ps = 0\n\
         efficiency = 0.5\njitter_fwhm_ps = 40\nchannels = 1\n",
    );
    let summary = ok_json(photonstats(&[
        "lifetime",
        "--input",
        s(&ptag),
        "--out",
        s(&dir.path().join("lt.csv")),
        "--irf-fwhm-ps",
        "40",
    ]));
    let t1 = summary["t1_ns"].as_f64().unwrap();
    assert!((t1 - 2.54).abs() < 0.04, "{t1}");
}

#[test]
fn fitspec_reports_debye_waller_factor() {
    let dir = TempDir::new().unwrap();
    let reference = write(&dir, "ref.json", &presets::reference_spectrum().to_json().unwrap());
    let summary = ok_json(photonstats(&[
        "fitspec",
        "--input",
        s(&reference),
        "--out",
        s(&dir.path().join("fit.csv")),
    ]));
    let dw = summary["dw_factor"].as_f64().unwrap();
    assert!((dw - 0.77).abs() < 0.02, "{dw}");

    let single = ParametricSpectrum::new(vec![
        LorentzianComponent::new(1.747, 0.005, 1.0, ComponentKind::Zpl).unwrap()
    ])
    .unwrap();
    let single = write(&dir, "single.json", &single.to_json().unwrap());
    let summary = ok_json(photonstats(&[
        "fitspec",
        "--input",
        s(&single),
        "--out",
        s(&dir.path().join("fit1.csv")),
    ]));
    assert_eq!(summary["dw_factor"].as_f64(), Some(1.0));
}

#[test]
fn saturation_fit_on_noiseless_sweep_is_exact() {
    let dir = TempDir::new().unwrap();
    let mut csv = String::from("power_mW,rate_Hz\n");
    for k in 0..12 {
        let p = 0.05 * 100f64.powf(k as f64 / 11.0);
        csv.push_str(&format!("{p},{}\n", 18.0e3 / (1.0 + 0.54 / p)));
    }
    let input = write(&dir, "sat.csv", &csv);
    let summary = ok_json(photonstats(&["saturation", "--input", s(&input), "--t1-ns", "2.54"]));
    assert!((summary["i_inf_hz"].as_f64().unwrap() - 18.0e3).abs() < 1e-6);
    assert!((summary["p_sat_mw"].as_f64().unwrap() - 0.54).abs() < 1e-9);
    let bd = summary["source_to_detector_efficiency"].as_f64().unwrap();
    assert!((bd - 4.572e-5).abs() < 1e-8, "{bd}");
}

#[test]
fn michelson_on_filtered_reference_spectrum() {
    let dir = TempDir::new().unwrap();
    let reference = write(&dir, "ref.json", &presets::reference_spectrum().to_json().unwrap());
    let out = dir.path().join("ig.csv");
    let (lo, hi) = (
        presets::ZPL_CENTER_EV - presets::ZPL_FILTER_HALF_WIDTH_EV,
        presets::ZPL_CENTER_EV + presets::ZPL_FILTER_HALF_WIDTH_EV,
    );
    let summary = ok_json(photonstats(&[
        "michelson",
        "--input",
        s(&reference),
        "--out",
        s(&out),
        "--highpass-ev",
        &lo.to_string(),
        "--lowpass-ev",
        &hi.to_string(),
        "--shape",
        "auto",
        "--t1-ns",
        "2.54",
    ]));
    let t2s = summary["t2_star_fs"].as_f64().unwrap();
    assert!((300.0..=460.0).contains(&t2s), "{t2s}");
    assert!(summary["shape_metric"].as_f64().unwrap() > 0.0);
    assert!(dir.path().join("ig.visibility.csv").exists());
    assert!(dir.path().join("ig.visibility.csv.manifest.json").exists());
}

#[test]
fn summary_keys_are_sorted() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        &dir,
        "c.cfg",
        "mode = cw\nduration_s = 0.01\npower_over_psat = 1\nefficiency = 0.01\n",
    );
    let out = photonstats(&["simulate", "--config", s(&cfg), "--out", s(&dir.path().join("c.ptag"))]);
    let text = String::from_utf8(out.stdout).unwrap();
    let keys: Vec<&str> = text
        .lines()
        .filter_map(|l| l.trim().strip_prefix('"')?.split('"').next())
        .collect();
    let mut sorted = keys.clone();
    sorted.sort();
    assert_eq!(keys, sorted);
}

#[test]
fn exit_codes_for_missing_files_and_bad_usage() {
    let dir = TempDir::new().unwrap();
    let missing = dir.path().join("none.ptag");
    assert_eq!(
        photonstats(&["g2", "--input", s(&missing), "--out", s(&dir.path().join("o.csv"))])
            .status
            .code(),
        Some(3)
    );
    assert_eq!(photonstats(&["g2", "--bogus"]).status.code(), Some(2));
    let garbage = write(&dir, "junk.ptag", "not a tag file");
    assert_eq!(
        photonstats(&[
            "lifetime",
            "--input",
            s(&garbage),
            "--out",
            s(&dir.path().join("o.csv"))
        ])
        .status
        .code(),
        Some(3)
    );
}

#[test]
fn thread_cap_must_be_positive() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "c.cfg", "mode = cw\nduration_s = 0.01\npower_over_psat = 1\n");
    let out = Command::new(env!("CARGO_BIN_EXE_photonstats"))
        .args(["simulate", "--config", s(&cfg), "--out", s(&dir.path().join("c.ptag"))])
        .env("PHOTONSTATS_THREADS", "0")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let capped = Command::new(env!("CARGO_BIN_EXE_photonstats"))
        .args(["simulate", "--config", s(&cfg), "--out", s(&dir.path().join("c.ptag"))])
        .env("PHOTONSTATS_THREADS", "2")
        .output()
        .unwrap();
    assert!(capped.status.success());
}
