//! End-to-end checks of the dcesim binary: exit codes, stdout JSON shape,
//! file outputs, and the evolve -> wigner round trip.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const PI: f64 = std::f64::consts::PI;

fn dcesim(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dcesim"))
        .current_dir(dir)
        .env_remove("DCESIM_OUT_DIR")
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = String::from_utf8_lossy(&out.stdout);
    let line = text.lines().last().expect("stdout has a summary line");
    serde_json::from_str(line).expect("stdout line is JSON")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).expect("file exists")).expect("file is JSON")
}

fn data_lines(path: &Path) -> Vec<String> {
    fs::read_to_string(path)
        .expect("file exists")
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(str::to_string)
        .collect()
}

#[test]
fn zero_coupling_leaves_the_vacuum_alone() {
    let dir = tempfile::tempdir().unwrap();
    let out = dcesim(dir.path(), &["evolve", "--g", "0", "--tau", "1.3"]);
    let summary = stdout_json(&out);
    assert_eq!(summary["n_max"], 60);

    let doc = read_json(&dir.path().join("state.json"));
    let amp0 = &doc["state"]["amplitudes"][0];
    assert!((amp0[0].as_f64().unwrap() - 1.0).abs() < 1e-10);
    assert!(amp0[1].as_f64().unwrap().abs() < 1e-10);
    assert!((doc["field_populations"][0].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert_eq!(doc["provenance"]["g"]["source"], "flag");
    assert_eq!(doc["provenance"]["nmax"]["source"], "default");
}

#[test]
fn rwa_start_state_survives_a_transfer_pulse() {
    // |g,0> is stationary without the counter-rotating terms, whatever
    // the pulse length; one transfer time exercises the pi/2g units.
    let dir = tempfile::tempdir().unwrap();
    let out = dcesim(
        dir.path(),
        &[
            "evolve",
            "--g",
            "0.7",
            "--tau",
            "1",
            "--tau-units",
            "pi-over-2g",
            "--rwa",
        ],
    );
    let summary = stdout_json(&out);
    let expected = PI / (2.0 * 0.7);
    assert!((summary["tau"].as_f64().unwrap() - expected).abs() < 1e-15);

    let doc = read_json(&dir.path().join("state.json"));
    assert!((doc["field_populations"][0].as_f64().unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn conditioning_on_the_excited_qubit_selects_odd_photons() {
    let dir = tempfile::tempdir().unwrap();
    let out = dcesim(
        dir.path(),
        &["evolve", "--g", "1.2", "--tau", "2.0", "--condition", "e"],
    );
    stdout_json(&out);

    let doc = read_json(&dir.path().join("state.json"));
    assert_eq!(doc["field_kind"], "conditioned_e");
    let populations: Vec<f64> = doc["field_populations"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    let even: f64 = populations.iter().step_by(2).sum();
    let total: f64 = populations.iter().sum();
    assert!(even < 1e-12, "even-photon mass {even}");
    assert!((total - 1.0).abs() < 1e-10);
}

#[test]
fn vacuum_wigner_reports_no_negativity() {
    let dir = tempfile::tempdir().unwrap();
    let out = dcesim(
        dir.path(),
        &["wigner", "--g", "0", "--tau", "0.5", "--step", "0.1"],
    );
    let result = stdout_json(&out);
    assert!(result["delta"].as_f64().unwrap() < 1e-10);
    assert!((result["normalization"].as_f64().unwrap() - 1.0).abs() < 1e-6);

    let csv = fs::read_to_string(dir.path().join("wigner.csv")).unwrap();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("# provenance: "));
    assert_eq!(lines.next().unwrap(), "x,p,w");
}

#[test]
fn saved_states_reproduce_the_inline_grid_byte_for_byte() {
    let dir = tempfile::tempdir().unwrap();
    let run = dcesim(
        dir.path(),
        &["evolve", "--g", "1.1", "--tau", "0.8", "--out", "st.json"],
    );
    stdout_json(&run);

    let from_file = dcesim(
        dir.path(),
        &[
            "wigner", "--state", "st.json", "--step", "0.1", "--out", "a.csv",
        ],
    );
    let inline = dcesim(
        dir.path(),
        &[
            "wigner", "--g", "1.1", "--tau", "0.8", "--step", "0.1", "--out", "b.csv",
        ],
    );
    assert_eq!(
        String::from_utf8_lossy(&from_file.stdout),
        String::from_utf8_lossy(&inline.stdout),
        "negativity summaries must match bitwise"
    );
    assert_eq!(
        data_lines(&dir.path().join("a.csv")),
        data_lines(&dir.path().join("b.csv")),
        "grids must match bitwise outside the provenance header"
    );
}

#[test]
fn threshold_without_a_crossing_exits_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let out = dcesim(
        dir.path(),
        &[
            "threshold",
            "--g",
            "0",
            "--search",
            "0.1:0.4",
            "--step",
            "0.1",
        ],
    );
    let outcome = stdout_json(&out);
    assert_eq!(outcome["status"], "no_crossing");
    assert_eq!(outcome["delta_below"], 0.0);
    assert_eq!(outcome["delta_above"], 0.0);
}

#[test]
fn threshold_along_g_reports_the_searched_parameter() {
    let dir = tempfile::tempdir().unwrap();
    let out = dcesim(
        dir.path(),
        &[
            "threshold",
            "--axis",
            "g",
            "--tau",
            "0.3",
            "--search",
            "0.05:0.15",
            "--step",
            "0.1",
        ],
    );
    let outcome = stdout_json(&out);
    assert_eq!(outcome["status"], "no_crossing");
    assert_eq!(outcome["parameter"], "g");
}

#[test]
fn series_threshold_finds_an_onset_inside_the_bracket() {
    let dir = tempfile::tempdir().unwrap();
    let out = dcesim(
        dir.path(),
        &[
            "threshold",
            "--order",
            "2",
            "--g",
            "0.4",
            "--search",
            "0.5pi:0.7pi",
            "--step",
            "0.1",
            "--out",
            "th.json",
        ],
    );
    let outcome = stdout_json(&out);
    assert_eq!(outcome["status"], "found");
    assert_eq!(outcome["order"], "2");
    let critical = outcome["critical_value"].as_f64().unwrap();
    assert!(critical > 0.5 * PI && critical < 0.7 * PI);

    let doc = read_json(&dir.path().join("th.json"));
    assert_eq!(doc["status"], "found");
    assert_eq!(doc["provenance"]["order"]["value"], "2");
}

#[test]
fn flag_mistakes_exit_with_the_usage_code() {
    let dir = tempfile::tempdir().unwrap();
    let bogus = dcesim(dir.path(), &["evolve", "--g", "1", "--tau", "1", "--bogus"]);
    assert_eq!(bogus.status.code(), Some(2));

    let missing = dcesim(dir.path(), &["evolve", "--tau", "1"]);
    assert_eq!(missing.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("required"));

    let order = dcesim(
        dir.path(),
        &["dyson", "--g", "0.1", "--tau", "1", "--order", "7"],
    );
    assert_eq!(order.status.code(), Some(2));

    let clash = dcesim(
        dir.path(),
        &[
            "threshold",
            "--order",
            "2",
            "--g",
            "0.4",
            "--condition",
            "e",
        ],
    );
    assert_eq!(clash.status.code(), Some(2));
}

#[test]
fn truncation_pressure_exits_with_the_numerical_code() {
    // Deep coupling with a tiny starting cutoff: escalation hits its cap
    // and the run must refuse to report untrustworthy numbers.
    let dir = tempfile::tempdir().unwrap();
    let out = dcesim(
        dir.path(),
        &["evolve", "--g", "4", "--tau", "2", "--nmax", "2"],
    );
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("tail mass"));
}

#[test]
fn sweep_writes_the_full_grid() {
    let dir = tempfile::tempdir().unwrap();
    let out = dcesim(
        dir.path(),
        &[
            "sweep",
            "--g-list",
            "0,0.5",
            "--tau-range",
            "0.2:0.6:0.2",
            "--step",
            "0.1",
            "--jobs",
            "2",
        ],
    );
    let summary = stdout_json(&out);
    assert_eq!(summary["points"], 6);
    assert_eq!(summary["failures"], 0);

    let lines = data_lines(&dir.path().join("sweep.csv"));
    assert_eq!(lines[0], "g,tau,delta");
    assert_eq!(lines.len(), 7);
    for line in &lines[1..4] {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields[0].parse::<f64>().unwrap(), 0.0);
        assert_eq!(
            fields[2].parse::<f64>().unwrap(),
            0.0,
            "g = 0 stays classical"
        );
    }
}

#[test]
fn config_supplies_defaults_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("cfg.json"),
        r#"{ "g": 0.9, "tau": "0.5pi", "nmax": 70 }"#,
    )
    .unwrap();
    let out = dcesim(
        dir.path(),
        &["evolve", "--config", "cfg.json", "--tau", "0.2"],
    );
    stdout_json(&out);

    let doc = read_json(&dir.path().join("state.json"));
    let prov = &doc["provenance"];
    assert_eq!(prov["g"]["source"], "config");
    assert_eq!(prov["g"]["value"], 0.9);
    assert_eq!(prov["tau"]["source"], "flag");
    assert_eq!(prov["tau"]["value"]["absolute"], 0.2);
    assert_eq!(prov["nmax"]["source"], "config");
    assert_eq!(doc["state"]["basis"]["n_max"], 70);
    assert_eq!(doc["state"]["time"], 0.2);
}

#[test]
fn the_environment_can_redirect_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_dcesim"))
        .current_dir(dir.path())
        .env("DCESIM_OUT_DIR", "outs")
        .args(["evolve", "--g", "0", "--tau", "0.5"])
        .output()
        .expect("binary runs");
    stdout_json(&out);

    let doc = read_json(&dir.path().join("outs/state.json"));
    assert_eq!(doc["provenance"]["out_dir"]["source"], "env");
}

#[test]
fn figure_bundles_carry_provenance_headers() {
    let dir = tempfile::tempdir().unwrap();
    let out = dcesim(
        dir.path(),
        &[
            "figure",
            "--which",
            "wigner-panels",
            "--nmax",
            "40",
            "--step",
            "0.25",
        ],
    );
    let summary = stdout_json(&out);
    assert_eq!(summary["files"], 12);
    for path in summary["out"].as_array().unwrap() {
        let text = fs::read_to_string(dir.path().join(path.as_str().unwrap())).unwrap();
        assert!(text.starts_with("# provenance: "), "{path} lacks a header");
    }
}

#[test]
fn dyson_reports_the_series_norm_budget() {
    let dir = tempfile::tempdir().unwrap();
    let out = dcesim(dir.path(), &["dyson", "--g", "0.2", "--tau", "0.5pi"]);
    let summary = stdout_json(&out);
    assert_eq!(summary["order"], 4);

    let doc = read_json(&dir.path().join("dyson.json"));
    let norm = doc["norm"].as_f64().unwrap();
    let deficit = doc["norm_deficit"].as_f64().unwrap();
    assert!(norm < 1.0 && norm > 0.999);
    assert!((deficit - (1.0 - norm * norm)).abs() < 1e-15);
    let populations: Vec<f64> = doc["normalized_populations"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    assert!((populations.iter().sum::<f64>() - 1.0).abs() < 1e-12);
}
