use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn data(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data").join(rel)
}

fn givcoh(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_givcoh")).args(args).output().expect("spawn givcoh")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn bias_args(defect: &Path) -> Vec<String> {
    [
        "--defect",
        path_str(defect),
        "--strain-ghz",
        "100",
        "--b-tesla",
        "0.1",
        "--b-theta-deg",
        "30",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect()
}

fn run(cmd: &str, extra: &[&str], bias: &[String]) -> Output {
    let mut args: Vec<&str> = vec![cmd];
    args.extend(bias.iter().map(String::as_str));
    args.extend(extra);
    givcoh(&args)
}

#[test]
fn chi_reports_converged_json() {
    let out = givcoh(&["chi", "--defect", path_str(&data("defects/snv.json")), "--material", path_str(&data("materials/diamond.json"))]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["cross_sections"]["converged"], true);
    assert!(v["cross_sections"]["chi"].as_f64().unwrap() > 0.0);
    assert!(v.get("frame_sensitivity").is_none());
}

#[test]
fn levels_json_has_effective_parameters() {
    let out = run("levels", &[], &bias_args(&data("defects/siv.json")));
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let wb = v["omega_b_ghz"].as_f64().unwrap();
    assert!((wb - (50f64.powi(2) + 4.0 * 100f64.powi(2)).sqrt()).abs() < 0.1, "{wb}");
    assert_eq!(v["energies_ghz"].as_array().unwrap().len(), 4);
}

#[test]
fn coherence_csv_has_fixed_columns() {
    let out = run("coherence", &["--temp-k", "4", "--format", "csv"], &bias_args(&data("defects/siv.json")));
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "omega_q_ghz,omega_b_ghz,lambda_eff_ghz,chi_b,chi_qp,chi_bp,t1_b_s,t1_q_s,t2_q_s,t_s_b_s,t2_eff_s,sigma_z_b_th"
    );
    let values: Vec<f64> = lines.next().unwrap().split(',').map(|s| s.parse().unwrap()).collect();
    assert_eq!(values.len(), 12);
    assert!(lines.next().is_none());
}

#[test]
fn coherence_json_matches_csv() {
    let bias = bias_args(&data("defects/siv.json"));
    let json = run("coherence", &["--temp-k", "3"], &bias);
    let v: serde_json::Value = serde_json::from_slice(&json.stdout).unwrap();
    let csv = String::from_utf8(run("coherence", &["--temp-k", "3", "--format", "csv"], &bias).stdout).unwrap();
    let row: Vec<f64> = csv.lines().nth(1).unwrap().split(',').map(|s| s.parse().unwrap()).collect();
    assert_eq!(v["t2_eff"].as_f64().unwrap(), row[10]);
}

#[test]
fn ramsey_writes_signal_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let out_csv = dir.path().join("ramsey.csv");
    let out = run(
        "ramsey",
        &["--temp-k", "4", "--tau-max-ns", "40", "--points", "101", "--out", path_str(&out_csv)],
        &bias_args(&data("defects/siv.json")),
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&out_csv).unwrap();
    assert!(text.starts_with("tau_s,sigma_x_q\n0.0,1.0\n"), "{}", &text[..40]);
    assert_eq!(text.lines().count(), 102);
    let side: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("ramsey.json")).unwrap()).unwrap();
    assert!(side["fit"]["integral_time"].as_f64().unwrap() > 0.0);
    assert!(side["t2_eff_s"].as_f64().unwrap() > 0.0);
}

#[test]
fn ramsey_too_short_is_partial() {
    let dir = tempfile::tempdir().unwrap();
    let out_csv = dir.path().join("r.csv");
    let out = run(
        "ramsey",
        &["--temp-k", "4", "--tau-max-ns", "0.5", "--points", "50", "--out", path_str(&out_csv)],
        &bias_args(&data("defects/siv.json")),
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(out_csv.exists());
}

#[test]
fn sweep_output_is_independent_of_jobs() {
    let dir = tempfile::tempdir().unwrap();
    let spec = data("sweeps/siv_temperature.json");
    let mut outputs = Vec::new();
    for jobs in ["1", "4"] {
        let out_csv = dir.path().join(format!("sweep{jobs}.csv"));
        let out = givcoh(&["sweep", "--spec", path_str(&spec), "--out", path_str(&out_csv), "--jobs", jobs]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        outputs.push(std::fs::read(&out_csv).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(String::from_utf8_lossy(&outputs[0]).lines().count(), 1 + 2 * 13);
}

#[test]
fn sweep_cell_failures_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.json");
    let defect = data("defects/siv.json");
    std::fs::write(
        &spec,
        format!(
            r#"{{"defect": {:?}, "strain_ghz": {{"min": 100, "max": 100, "count": 1}},
                "theta_deg": {{"min": 0, "max": 0, "count": 1}},
                "temperature_k": {{"min": 4, "max": 4, "count": 1}},
                "constraint": {{"omega_q_ghz": 500.0}}, "b_max_tesla": 1.0}}"#,
            path_str(&defect)
        ),
    )
    .unwrap();
    let out_csv = dir.path().join("out.csv");
    let out = givcoh(&["sweep", "--spec", path_str(&spec), "--out", path_str(&out_csv)]);
    assert_eq!(out.status.code(), Some(2));
    let text = std::fs::read_to_string(&out_csv).unwrap();
    assert!(text.lines().nth(1).unwrap().contains("not reached"), "{text}");
}

#[test]
fn compare_round_trips_synthetic_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let out_csv = dir.path().join("cmp.csv");
    let out = givcoh(&[
        "compare",
        "--measurements",
        path_str(&data("measurements/synthetic.csv")),
        "--defects-dir",
        path_str(&data("defects")),
        "--out",
        path_str(&out_csv),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let mut r = csv::Reader::from_path(&out_csv).unwrap();
    let ratio = r.headers().unwrap().iter().position(|h| h == "ratio").unwrap();
    let mut n = 0;
    for rec in r.records() {
        let q: f64 = rec.unwrap()[ratio].parse().unwrap();
        assert!((q - 1.0).abs() < 1e-9);
        n += 1;
    }
    assert_eq!(n, 15);
}

#[test]
fn compare_unknown_defect_is_partial() {
    let dir = tempfile::tempdir().unwrap();
    let meas = dir.path().join("m.csv");
    std::fs::write(
        &meas,
        "defect_id,temperature_k,b_tesla,b_theta_deg,b_phi_deg,strain_x_ghz,strain_y_ghz,quantity,measured_s\n\
         GeV,4,0.1,0,0,100,0,T1_B,1e-9\n\
         SiV,4,0.1,0,0,100,0,T1_B,1e-9\n",
    )
    .unwrap();
    let out_csv = dir.path().join("cmp.csv");
    let out = givcoh(&[
        "compare",
        "--measurements",
        path_str(&meas),
        "--defects-dir",
        path_str(&data("defects")),
        "--out",
        path_str(&out_csv),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let text = std::fs::read_to_string(&out_csv).unwrap();
    assert!(text.contains("unknown defect id `GeV`"));
}

#[test]
fn missing_input_is_fatal() {
    let out = givcoh(&["chi", "--defect", "/nonexistent/defect.json"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
}
