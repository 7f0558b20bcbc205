//! End-to-end tests of the `qog` binary: exit codes, CSV schemas,
//! determinism, and sidecar re-runs.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_qog"))
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    bin().args(args).current_dir(dir).output().expect("binary runs")
}

fn write_scenario(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p
}

const MARKOVIAN: &str = "\
[spectral]
eta = 0.05
omega_c = 2
s = 1

[probe]
omega = 1
n = 100
kappa = 0.2

[grid]
t_max = 50
dt = 0.005

[run]
pipeline = markovian
emit = sensitivity, envelope
";

const EXACT_SMALL: &str = "\
[spectral]
eta = 0.05
omega_c = 2
s = 1

[probe]
omega = 1e-2
n = 100

[grid]
t_max = 20
dt = 0.01
stride = 40

[run]
pipeline = exact
emit = sensitivity, trajectory
";

#[test]
fn run_emits_series_and_sidecar() {
    let tmp = tempfile::tempdir().unwrap();
    let sc = write_scenario(tmp.path(), "markov.scn", MARKOVIAN);
    let out = run_in(tmp.path(), &["run", sc.to_str().unwrap()]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));

    let sens = fs::read_to_string(tmp.path().join("markov_sensitivity.csv")).unwrap();
    assert!(sens.starts_with("t,delta_omega,flag\n"));
    // t = 0 is flagged, later nodes carry finite values
    let lines: Vec<&str> = sens.lines().collect();
    assert!(lines[1].ends_with("zero-derivative"));
    assert!(lines.len() > 5000);

    let env = fs::read_to_string(tmp.path().join("markov_envelope.csv")).unwrap();
    assert!(env.starts_with("t,delta_omega,flag\n"));
    assert!(env.lines().count() > 10);

    let meta = fs::read_to_string(tmp.path().join("markov_meta.txt")).unwrap();
    assert!(meta.contains("[meta]"));
    assert!(meta.contains("tool_version"));
    assert!(meta.contains("kappa = 2.0000000000000001e-1"));
}

#[test]
fn runs_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let sc = write_scenario(tmp.path(), "markov.scn", MARKOVIAN);
    let out_a = tmp.path().join("a");
    let out_b = tmp.path().join("b");
    for out in [&out_a, &out_b] {
        let st = run_in(tmp.path(), &["run", sc.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        assert!(st.status.success());
    }
    for file in ["markov_sensitivity.csv", "markov_envelope.csv", "markov_meta.txt"] {
        let a = fs::read(out_a.join(file)).unwrap();
        let b = fs::read(out_b.join(file)).unwrap();
        assert_eq!(a, b, "{file} differs between runs");
    }
}

#[test]
fn exact_run_emits_trajectory_schema() {
    let tmp = tempfile::tempdir().unwrap();
    let sc = write_scenario(tmp.path(), "exact.scn", EXACT_SMALL);
    let out = run_in(tmp.path(), &["run", sc.to_str().unwrap(), "--workers", "2"]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let traj = fs::read_to_string(tmp.path().join("exact_trajectory.csv")).unwrap();
    let mut lines = traj.lines();
    assert_eq!(lines.next().unwrap(), "t,re_u1,im_u1,re_u2,im_u2,abs_u1,abs_u2");
    let first = lines.next().unwrap();
    let fields: Vec<&str> = first.split(',').collect();
    assert_eq!(fields.len(), 7);
    assert_eq!(fields[0].parse::<f64>().unwrap(), 0.0);
    assert_eq!(fields[1].parse::<f64>().unwrap(), 1.0); // u(0) = 1 exactly
    // final row is the horizon
    let last = traj.lines().last().unwrap();
    let t_last: f64 = last.split(',').next().unwrap().parse().unwrap();
    assert!((t_last - 20.0).abs() < 1e-9);
}

#[test]
fn sidecar_reruns_byte_identically() {
    let tmp = tempfile::tempdir().unwrap();
    let sc = write_scenario(tmp.path(), "markov.scn", MARKOVIAN);
    let out1 = tmp.path().join("first");
    assert!(run_in(tmp.path(), &["run", sc.to_str().unwrap(), "--out", out1.to_str().unwrap()])
        .status
        .success());
    // the sidecar is itself a scenario; re-running it reproduces the series
    let sidecar = out1.join("markov_meta.txt");
    let out2 = tmp.path().join("second");
    let st = run_in(tmp.path(), &["run", sidecar.to_str().unwrap(), "--out", out2.to_str().unwrap()]);
    assert!(st.status.success(), "stderr: {}", String::from_utf8_lossy(&st.stderr));
    let a = fs::read(out1.join("markov_sensitivity.csv")).unwrap();
    let b = fs::read(out2.join("markov_sensitivity.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn malformed_scenario_exits_2_without_output() {
    let tmp = tempfile::tempdir().unwrap();
    let sc = write_scenario(tmp.path(), "bad.scn", "[spectral]\neta == 0.05\n");
    let out = run_in(tmp.path(), &["run", sc.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("line"), "stderr: {stderr}");
    assert!(!tmp.path().join("bad_sensitivity.csv").exists());
    assert!(!tmp.path().join("bad_meta.txt").exists());
}

#[test]
fn regime_error_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    // asymptotic pipeline without bound states (omega_c far below threshold)
    let body = EXACT_SMALL.replace("pipeline = exact", "pipeline = asymptotic").replace(", trajectory", "");
    let sc = write_scenario(tmp.path(), "nobound.scn", &body);
    let out = run_in(tmp.path(), &["run", sc.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    assert!(!tmp.path().join("nobound_sensitivity.csv").exists());
}

#[test]
fn unknown_flag_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_in(tmp.path(), &["run", "x.scn", "--frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn spectrum_reports_thresholds_and_regimes() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_in(tmp.path(), &["spectrum", "--eta", "0.05", "--s", "1", "--omega", "1e-2"]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    let th = |key: &str| -> f64 {
        text.lines()
            .find(|l| l.starts_with(key))
            .unwrap_or_else(|| panic!("{key} missing in {text}"))
            .split('=')
            .nth(1)
            .unwrap()
            .parse()
            .unwrap()
    };
    assert!((th("threshold_omega_c_mode1") - 20.2).abs() < 1e-12, "{text}");
    assert!((th("threshold_omega_c_mode2") - 19.8).abs() < 1e-12, "{text}");

    let out = run_in(
        tmp.path(),
        &["spectrum", "--eta", "0.05", "--s", "1", "--omega", "1e-2", "--omega-c", "25"],
    );
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("regime=two_bound"), "{text}");
    assert!(text.contains("e_b1=-1.97486098"), "{text}");
    assert!(text.contains("z_1=8.5691567"), "{text}");

    let out = run_in(tmp.path(), &["spectrum", "--eta", "0", "--s", "1", "--omega", "1e-2"]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("regime=none"), "{text}");
    assert!(text.contains("threshold_omega_c_mode1=inf"), "{text}");
}

#[test]
fn sweep_writes_rows_fit_and_continues_past_failures() {
    let tmp = tempfile::tempdir().unwrap();
    let sc = write_scenario(tmp.path(), "markov.scn", MARKOVIAN);
    let out = run_in(
        tmp.path(),
        &[
            "sweep",
            sc.to_str().unwrap(),
            "--param",
            "n",
            "--values",
            "25,50,100,200,400,800",
            "--fit",
        ],
    );
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(tmp.path().join("markov_sweep.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "param,value,min_delta_omega,t_at_min,flag");
    assert_eq!(lines.len(), 8); // header + 6 rows + fit row
    assert!(lines[7].starts_with("fit,"));
    assert!(lines[7].ends_with(",fit"));
    // fitted exponent in the first numeric column of the fit row
    let exp: f64 = lines[7].split(',').nth(1).unwrap().parse().unwrap();
    assert!((exp + 0.23).abs() < 0.05, "exponent {exp}");
    let fit_txt = fs::read_to_string(tmp.path().join("markov_fit.txt")).unwrap();
    assert!(fit_txt.contains("exponent="));

    // a failing point (negative photon number) flags its row, the rest survive
    let out = run_in(
        tmp.path(),
        &["sweep", sc.to_str().unwrap(), "--param", "n", "--values", "100,-5,200", "--out", "f"],
    );
    assert!(out.status.success());
    let csv = fs::read_to_string(tmp.path().join("f/markov_sweep.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 4);
    assert!(lines[1].ends_with(",") , "ok row has empty flag: {}", lines[1]);
    assert!(!lines[2].ends_with(",") && lines[2].contains("nan"), "failed row is flagged: {}", lines[2]);
    assert!(lines[3].ends_with(","), "{}", lines[3]);
}

#[test]
fn kernel_check_passes_at_default_tolerance() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_in(
        tmp.path(),
        &["kernel-check", "--eta", "0.05", "--omega-c", "2", "--s", "1", "--points", "6", "--x-max", "10"],
    );
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("max_rel_deviation="));
}

#[test]
fn shipped_scenarios_parse_and_light_ones_run() {
    let tmp = tempfile::tempdir().unwrap();
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios");
    for entry in fs::read_dir(&root).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().map(|e| e == "scn").unwrap_or(false) {
            // the truncated horizon keeps the heavy scenarios cheap here
            let out = bin()
                .args(["run", path.to_str().unwrap(), "--out", tmp.path().to_str().unwrap(), "--tmax", "2.0", "--dt", "0.01"])
                .output()
                .unwrap();
            assert!(
                out.status.success(),
                "{} failed: {}",
                path.display(),
                String::from_utf8_lossy(&out.stderr)
            );
        }
    }
}
