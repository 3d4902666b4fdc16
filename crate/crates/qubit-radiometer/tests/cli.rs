//! End-to-end tests of the command-line binary: exit codes, output schemas,
//! and determinism.

use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_qubit-radiometer"))
}

fn write_small_config(dir: &Path) -> std::path::PathBuf {
    // compact grids so the CLI tests stay quick
    let text = r#"
schema_version = 1
seed = 7

[mode]
f_a_hz = 10.5e9
f_r_hz = 7.6011e9
f_p_hz = 2.8935e9
chi_over_2pi_hz = 3.1e6
kappa_r_c_over_2pi_hz = 0.77e6
kappa_r_i_over_2pi_hz = 0.06e6
kappa_a_c_over_2pi_hz = 0.28e6
kappa_a_i_over_2pi_hz = 0.12e6
conversion_efficiency = 1.0

[qubit]
gamma_2r_per_s = 41666.666666666664
t1_s = 71e-6
p_e_ini = 0.03
p_read_e_given_g = 0.01
p_read_g_given_e = 0.04
f_ge_hz = 4.6820e9
f_ef_hz = 4.4487e9
delta_gamma_2r_per_s = 5215.0

[baths]
n_vts = 1.59
n_ext = 0.014
n_add = 0.0
n_loss = 0.09
t_loss = 0.52
t_leak = 0.046

[timing]
tau_s = 2.08e-6
tau_p_s = 1.08e-6
n_rep = 10000

[sweep]
delta_a_hz = { values = [-15.5e6, -4.805e6, -3.1e6, -1.55e6, 1.55e6, 3.1e6, 4.805e6, 15.5e6] }
tau_p_s = { values = [1.08e-6] }
n_add = { values = [0.0, 0.8, 1.6, 2.4] }
n_vts = { values = [1.59, 2.05, 2.51, 2.97] }
n_probe = { values = [1e-3] }

[calibration]
far_detuning_multiple = 4.0
noise_sigma = 0.002
mc_runs = 1

[oracle]
epsilon = 1e-8
rtol = 1e-10
atol = 1e-12

[precision]
n_sys_lin = 1.54
"#;
    let path = dir.join("config.toml");
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn metrics_reports_expected_values() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("metrics.json");
    let status = bin()
        .args(["metrics", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(json["schema_version"], 1);
    let eta = json["eta"].as_f64().unwrap();
    assert!((eta - 0.44).abs() <= 0.01, "eta = {eta}");
    let dr = json["dynamic_range_db"].as_f64().unwrap();
    assert!((47.0..=51.0).contains(&dr));
}

#[test]
fn spectra_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_small_config(dir.path());
    let out1 = dir.path().join("s1.csv");
    let out2 = dir.path().join("s2.csv");
    for out in [&out1, &out2] {
        let status = bin()
            .args(["--config"])
            .arg(&cfg)
            .args(["spectra", "--out"])
            .arg(out)
            .status()
            .unwrap();
        assert!(status.success());
    }
    assert_eq!(std::fs::read(&out1).unwrap(), std::fs::read(&out2).unwrap());
    let text = std::fs::read_to_string(&out1).unwrap();
    assert!(text.starts_with("tau_p_s,delta_a_rad_s,n_r_eff,sigma\n"));
    assert_eq!(text.lines().count(), 9);
}

#[test]
fn spectra_tau_p_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_small_config(dir.path());
    let out = dir.path().join("s.csv");
    let status = bin()
        .args(["--config"])
        .arg(&cfg)
        .args(["spectra", "--tau-p", "0.54e-6", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    for line in text.lines().skip(1) {
        assert!(line.starts_with("0.00000054,"), "line: {line}");
    }
}

#[test]
fn calibrate_synthetic_and_from_files_agree() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_small_config(dir.path());
    let out_syn = dir.path().join("syn.json");
    let status = bin()
        .args(["--config"])
        .arg(&cfg)
        .args(["calibrate", "--synthetic", "--out"])
        .arg(&out_syn)
        .status()
        .unwrap();
    assert!(status.success());
    let rep: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out_syn).unwrap()).unwrap();
    assert_eq!(rep["weighted_fit"], true);
    let t_loss = rep["t_loss"]["value"].as_f64().unwrap();
    let sigma = rep["t_loss"]["sigma"].as_f64().unwrap();
    assert!((t_loss - 0.52).abs() < 4.0 * sigma + 1e-3, "t_loss = {t_loss} +- {sigma}");
}

#[test]
fn calibrate_rejects_schema_mismatch_naming_column() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_small_config(dir.path());
    let bad = dir.path().join("bad.csv");
    std::fs::write(
        &bad,
        "delta_a_rad_s,control_name,control_value,population,sigma\n1.0,n_add,0.0,0.1,0.01\n",
    )
    .unwrap();
    let out = dir.path().join("cal.json");
    let output = bin()
        .args(["--config"])
        .arg(&cfg)
        .arg("calibrate")
        .arg(&bad)
        .args(["--out"])
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(
        stderr.contains("n_r_eff") || stderr.contains("population"),
        "stderr: {stderr}"
    );
    assert!(!out.exists());
}

#[test]
fn calibrate_missing_sigma_warns_and_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_small_config(dir.path());
    // build a sigma-less dataset through the synthetic generator
    let out_syn = dir.path().join("records.csv");
    let status = bin()
        .args(["--config"])
        .arg(&cfg)
        .args(["calibrate", "--synthetic", "--out"])
        .arg(dir.path().join("seed.json"))
        .status()
        .unwrap();
    assert!(status.success());
    // handcraft a small sigma-less file from a fresh synthetic export
    use qubit_radiometer::config::ExperimentConfig;
    use qubit_radiometer::workflows::synth_calibration_records;
    let cfg_parsed = ExperimentConfig::from_path(&cfg).unwrap();
    let records = synth_calibration_records(&cfg_parsed, 7).unwrap();
    let mut text = String::from("delta_a_rad_s,control_name,control_value,n_r_eff\n");
    for r in &records {
        text.push_str(&format!(
            "{},{},{},{}\n",
            r.delta_a, r.control, r.control_value, r.n_r_eff
        ));
    }
    std::fs::write(&out_syn, text).unwrap();

    let out = dir.path().join("cal.json");
    let output = bin()
        .args(["--config"])
        .arg(&cfg)
        .arg("calibrate")
        .arg(&out_syn)
        .args(["--out"])
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("unweighted"), "stderr: {stderr}");
    let rep: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(rep["weighted_fit"], false);
}

#[test]
fn invalid_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("broken.toml");
    let text = std::fs::read_to_string(write_small_config(dir.path())).unwrap();
    std::fs::write(&cfg, text.replace("t_loss = 0.52", "t_loss = 0.0")).unwrap();
    let output = bin()
        .args(["--config"])
        .arg(&cfg)
        .args(["metrics", "--out"])
        .arg(dir.path().join("m.json"))
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&output.stderr).contains("t_loss"));
}

#[test]
fn empty_detuning_grid_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("empty.toml");
    let text = std::fs::read_to_string(write_small_config(dir.path())).unwrap();
    std::fs::write(
        &cfg,
        text.replace(
            "delta_a_hz = { values = [-15.5e6, -4.805e6, -3.1e6, -1.55e6, 1.55e6, 3.1e6, 4.805e6, 15.5e6] }",
            "delta_a_hz = { values = [] }",
        ),
    )
    .unwrap();
    let output = bin()
        .args(["--config"])
        .arg(&cfg)
        .args(["oracle-compare", "--out"])
        .arg(dir.path().join("o.csv"))
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn numeric_failure_exits_3() {
    // a zero decoherence-fluctuation floor leaves the dynamic range undefined
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("numeric.toml");
    let text = std::fs::read_to_string(write_small_config(dir.path())).unwrap();
    std::fs::write(
        &cfg,
        text.replace("delta_gamma_2r_per_s = 5215.0", "delta_gamma_2r_per_s = 0.0"),
    )
    .unwrap();
    let output = bin()
        .args(["--config"])
        .arg(&cfg)
        .args(["metrics", "--out"])
        .arg(dir.path().join("m.json"))
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(3));
}

#[test]
fn oracle_compare_prints_summary_and_is_jobs_invariant() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_small_config(dir.path());
    let out1 = dir.path().join("oracle1.csv");
    let out2 = dir.path().join("oracle2.csv");
    for (jobs, out) in [("1", &out1), ("3", &out2)] {
        let output = bin()
            .args(["--config"])
            .arg(&cfg)
            .args(["--jobs", jobs, "oracle-compare", "--out"])
            .arg(out)
            .output()
            .unwrap();
        assert!(output.status.success());
        let stdout = String::from_utf8_lossy(&output.stdout);
        assert!(stdout.contains("max |eta_analytic - eta_oracle|"), "{stdout}");
    }
    // thread count must not change the bytes
    assert_eq!(std::fs::read(&out1).unwrap(), std::fs::read(&out2).unwrap());
    let text = std::fs::read_to_string(&out1).unwrap();
    assert_eq!(text.lines().count(), 9); // header + 8 detunings x 1 probe
}
