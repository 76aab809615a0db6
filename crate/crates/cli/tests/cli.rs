use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use tempfile::TempDir;

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

fn cnlse(args: &[&str]) -> Run {
    let out = Command::new(env!("CARGO_BIN_EXE_cnlse")).args(args).output().unwrap();
    Run {
        code: out.status.code().unwrap_or(-1),
        stdout: String::from_utf8_lossy(&out.stdout).into_owned(),
        stderr: String::from_utf8_lossy(&out.stderr).into_owned(),
    }
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

fn run_config(cmd: &str, text: &str, extra: &[&str]) -> (TempDir, Run) {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "run.toml", text);
    let out = dir.path().join("out");
    let mut args = vec![cmd, cfg.to_str().unwrap(), "--output-dir", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    let run = cnlse(&args);
    (dir, run)
}

fn table(dir: &TempDir, name: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let text = fs::read_to_string(dir.path().join("out").join(name)).unwrap();
    assert!(!text.contains('\r'));
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(str::to_string).collect();
    let rows = lines.map(|l| l.split(',').map(str::to_string).collect()).collect();
    (header, rows)
}

fn column(header: &[String], rows: &[Vec<String>], name: &str) -> Vec<f64> {
    let i = header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"));
    rows.iter().map(|r| r[i].parse().unwrap()).collect()
}

fn shipped(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

/// Two-species derivative-family config on a coarse grid. `delta` is
/// spliced in verbatim.
fn family_b(delta: &str, dt: f64, t_end: f64, extra: &str) -> String {
    format!(
        r#"
[grid]
n_points = 32

[system]
species = 2
A = [1.0, 0.8]

[nonlinearity]
family = "derivative"
beta = [[0.5, -0.3], [0.2, 0.4]]
gamma = [[-0.4, 0.1], [0.3, -0.2]]
delta = {delta}
lambda = [[[0.1, 0.0], [0.0, -0.1]], [[0.05, 0.02], [0.0, 0.1]]]

[initial]
scale = 1.0

[[initial.species]]
background = 0.25
modes = [{{ k = 3, re = 0.03, im = 0.01 }}, {{ k = -2, re = 0.02, im = 0.0 }}]

[[initial.species]]
background = 0.25
modes = [{{ k = 3, re = 0.01, im = 0.03 }}, {{ k = 2, re = 0.0, im = 0.02 }}]

[time]
dt = {dt:e}
t_end = {t_end}
sample_every = 10
{extra}
"#
    )
}

const BALANCED: &str = "[[0.5, -0.5], [1.0, -1.0]]";

fn linear(extra: &str) -> String {
    format!(
        r#"
[grid]
n_points = 32

[system]
species = 1
A = [1.0]

[nonlinearity]
family = "linear"

[[initial.species]]
modes = [{{ k = 1, re = 1.0 }}, {{ k = 3, re = 0.5, im = -0.2 }}]

[time]
dt = 0.01
t_end = 1.0
sample_every = 10
{extra}
"#
    )
}

#[test]
fn simulate_linear_conserves_norm() {
    let (dir, run) = run_config("simulate", &linear(""), &[]);
    assert_eq!(run.code, 0, "{}", run.stderr);
    let (h, rows) = table(&dir, "diagnostics.csv");
    assert_eq!(h, ["t", "N_1", "drift_1", "cont_res_1"]);
    assert_eq!(rows.len(), 11);
    // RK4 damping of the k = 3 mode at this step size is about 1e-7.
    let drift = column(&h, &rows, "drift_1");
    assert!(drift.last().unwrap().abs() < 1e-6, "{drift:?}");
    let out = dir.path().join("out");
    assert!(out.join("psi_step00000000.f64").exists());
    assert_eq!(fs::metadata(out.join("psi_step00000100.f64")).unwrap().len(), 32 * 16);
    assert!(fs::read_to_string(out.join("psi_step00000100.txt")).unwrap().contains("t = 1"));
}

#[test]
fn dispersion_count_mismatch_is_a_config_error() {
    let text = family_b(BALANCED, 1e-3, 0.01, "").replace("A = [1.0, 0.8]", "A = [1.0, 0.8, 2.0]");
    let (_dir, run) = run_config("simulate", &text, &[]);
    assert_eq!(run.code, 1);
    assert!(run.stderr.contains("A"), "{}", run.stderr);
}

#[test]
fn shipped_family_b_config_row_count() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let run = cnlse(&["simulate", shipped("family_b.toml").to_str().unwrap(), "--output-dir", out.to_str().unwrap()]);
    assert_eq!(run.code, 0, "{}", run.stderr);
    let (h, rows) = table(&dir, "diagnostics.csv");
    // t_end / (dt * sample_every) + 1 = 0.5 / (2e-4 * 50) + 1.
    assert_eq!(rows.len(), 51);
    assert!(column(&h, &rows, "drift_2").iter().all(|d| d.abs() < 1e-8));
}

fn coefficients(dir: &TempDir) -> Vec<(String, f64)> {
    let (_, rows) = table(dir, "transformed_coefficients.csv");
    rows.into_iter().map(|r| (r[0].clone(), r[4].parse().unwrap())).collect()
}

#[test]
fn transform_chen_lee_liu() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let run = cnlse(&["transform", shipped("chen_lee_liu.toml").to_str().unwrap(), "--output-dir", out.to_str().unwrap()]);
    assert_eq!(run.code, 0, "{}", run.stderr);
    let (h, _) = table(&dir, "transformed_coefficients.csv");
    assert_eq!(h, ["entry", "k", "j", "i", "value"]);
    let c = coefficients(&dir);
    let get = |name: &str| c.iter().find(|(n, _)| n == name).unwrap().1;
    assert_eq!(get("drift_self"), 0.0);
    assert_eq!(get("drift_cross"), -4.0);
    assert_eq!(get("quartic"), 3.0);
}

#[test]
fn transform_case1_is_all_zero() {
    let text = family_b(BALANCED, 1e-3, 0.01, "")
        .replace("family = \"derivative\"", "family = \"case1\"")
        .replace("beta = [[0.5, -0.3], [0.2, 0.4]]\n", "")
        .replace("gamma = [[-0.4, 0.1], [0.3, -0.2]]\n", "")
        .replace("lambda = [[[0.1, 0.0], [0.0, -0.1]], [[0.05, 0.02], [0.0, 0.1]]]\n", "")
        .replace("A = [1.0, 0.8]", "A = [1.0, 2.0]");
    let (dir, run) = run_config("transform", &text, &[]);
    assert_eq!(run.code, 0, "{}", run.stderr);
    let c = coefficients(&dir);
    assert_eq!(c.len(), 4 + 4 + 4 + 8 + 2);
    assert!(c.iter().all(|(_, v)| *v == 0.0), "{c:?}");
    assert!(dir.path().join("out/phi_initial.f64").exists());
}

#[test]
fn transform_without_delta_passes_coefficients_through() {
    let (dir, run) = run_config("transform", &family_b("[[0.0, 0.0], [0.0, 0.0]]", 1e-3, 0.01, ""), &[]);
    assert_eq!(run.code, 0, "{}", run.stderr);
    let (_, rows) = table(&dir, "transformed_coefficients.csv");
    let find = |e: &str, idx: [&str; 3]| -> f64 {
        rows.iter().find(|r| r[0] == e && r[1] == idx[0] && r[2] == idx[1] && r[3] == idx[2]).unwrap()[4].parse().unwrap()
    };
    assert_eq!(find("drift_self", ["0", "1", ""]), -0.3);
    assert_eq!(find("drift_cross", ["1", "0", ""]), 0.3);
    assert_eq!(find("quartic", ["1", "0", "1"]), 0.02);
}

#[test]
fn transform_refuses_non_periodic_snapshot() {
    let (dir, run) = run_config("transform", &family_b("[[0.5, 0.0], [0.0, 0.5]]", 1e-3, 0.01, ""), &[]);
    assert_eq!(run.code, 3, "{}", run.stderr);
    assert!(run.stderr.contains("not periodic"), "{}", run.stderr);
    // The coefficient table is still written.
    assert!(dir.path().join("out/transformed_coefficients.csv").exists());
}

#[test]
fn classify_examples() {
    let labels = |b: &str, g: &str, d: &str, l: &str| {
        let run = cnlse(&["classify", "--beta", b, "--gamma", g, "--delta", d, "--lambda", l]);
        assert_eq!(run.code, 0, "{}", run.stderr);
        run.stdout
    };
    assert_eq!(labels("-2", "-2", "1", "0"), "ChenLeeLiu\n");
    assert_eq!(labels("1", "2", "0", "0"), "Jackiw\n");
    assert_eq!(labels("1", "1", "1", "1"), "Generic\n");
    assert_eq!(labels("-2", "-2", "3", "0"), "KaupNewell\n");
    assert_eq!(labels("1", "-1", "0", "0"), "Jackiw\nChenLeeLiu\nKaupNewell\n");
    assert_eq!(cnlse(&["classify", "--beta", "x", "--gamma", "1", "--delta", "0", "--lambda", "0"]).code, 1);
    assert_eq!(cnlse(&["classify", "--beta", "1"]).code, 1);
}

#[test]
fn verify_drift_cubic_family() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let run = cnlse(&["verify", shipped("family_a.toml").to_str().unwrap(), "--output-dir", out.to_str().unwrap()]);
    assert_eq!(run.code, 0, "{}", run.stderr);
    let (h, rows) = table(&dir, "equivalence.csv");
    assert_eq!(h, ["t", "density_diff_1", "density_diff_2", "phase_residual_1", "phase_residual_2"]);
    for name in ["density_diff_1", "density_diff_2", "phase_residual_1", "phase_residual_2"] {
        assert!(column(&h, &rows, name).iter().all(|v| *v < 1e-6), "{name}");
    }
}

#[test]
fn verify_without_delta_is_identical() {
    let (dir, run) = run_config("verify", &family_b("[[0.0, 0.0], [0.0, 0.0]]", 1e-3, 0.2, ""), &[]);
    assert_eq!(run.code, 0, "{}", run.stderr);
    let (h, rows) = table(&dir, "equivalence.csv");
    let last = rows.len() - 1;
    assert!(column(&h, &rows, "density_diff_1")[last] < 1e-12);
    assert!(column(&h, &rows, "density_diff_2")[last] < 1e-12);
}

#[test]
fn verify_detects_perturbed_coefficients() {
    let extra = "[verify]\nperturb = { entry = \"drift_cross\", index = [0, 1], by = 0.1 }";
    let (_dir, run) = run_config("verify", &family_b(BALANCED, 1e-3, 0.2, extra), &[]);
    assert_eq!(run.code, 2, "{}", run.stderr);
    assert!(run.stderr.contains("tolerance"));
}

#[test]
fn verify_rejects_non_periodic_gauge() {
    let (_dir, run) = run_config("verify", &family_b("[[0.5, 0.0], [0.0, 0.5]]", 1e-3, 0.2, ""), &[]);
    assert_eq!(run.code, 3, "{}", run.stderr);
}

#[test]
fn tolerance_flag_overrides_config() {
    let (_dir, run) = run_config("verify", &family_b(BALANCED, 1e-3, 0.1, ""), &["--tolerance", "1e-300"]);
    assert_eq!(run.code, 2, "{}", run.stderr);
}

#[test]
fn convergence_linear_is_fourth_order() {
    let (dir, run) = run_config("convergence", &linear(""), &[]);
    assert_eq!(run.code, 0, "{}", run.stderr);
    let (h, rows) = table(&dir, "convergence.csv");
    assert_eq!(rows.len(), 1);
    let order = column(&h, &rows, "observed_order")[0];
    assert!((order - 4.0).abs() < 0.25, "{order}");
}

#[test]
fn convergence_family_b_both_systems() {
    let (dir, run) = run_config("convergence", &family_b(BALANCED, 8e-3, 1.0, ""), &[]);
    assert_eq!(run.code, 0, "{}{}", run.stdout, run.stderr);
    let (h, rows) = table(&dir, "convergence.csv");
    assert_eq!(rows.iter().map(|r| r[0].as_str()).collect::<Vec<_>>(), ["psi", "phi"]);
    assert!(column(&h, &rows, "observed_order").iter().all(|&o| o >= 3.5));
}

#[test]
fn convergence_above_stability_limit_fails() {
    let (_dir, run) = run_config("convergence", &linear("").replace("dt = 0.01", "dt = 0.05"), &[]);
    assert_eq!(run.code, 2);
    assert!(run.stderr.contains("stability"), "{}", run.stderr);
}

#[test]
fn dump_config_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let first = cnlse(&["simulate", shipped("family_b.toml").to_str().unwrap(), "--dump-config"]);
    assert_eq!(first.code, 0, "{}", first.stderr);
    let echoed = write(dir.path(), "echo.toml", &first.stdout);
    let second = cnlse(&["simulate", echoed.to_str().unwrap(), "--dump-config"]);
    assert_eq!(second.stdout, first.stdout);
    assert!(!dir.path().join("output").exists());
}

#[test]
fn outputs_are_deterministic() {
    let text = family_b(BALANCED, 1e-3, 0.05, "");
    let (a, ra) = run_config("simulate", &text, &[]);
    let (b, rb) = run_config("simulate", &text, &[]);
    assert_eq!((ra.code, rb.code), (0, 0));
    for f in ["diagnostics.csv", "psi_step00000050.f64"] {
        assert_eq!(fs::read(a.path().join("out").join(f)).unwrap(), fs::read(b.path().join("out").join(f)).unwrap());
    }
}

fn sweep_rows(dir: &TempDir) -> (Vec<String>, Vec<Vec<String>>) {
    let text = fs::read_to_string(dir.path().join("out/sweep.csv")).unwrap();
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let header = rdr.headers().unwrap().iter().map(str::to_string).collect();
    let rows = rdr.records().map(|r| r.unwrap().iter().map(str::to_string).collect()).collect();
    (header, rows)
}

#[test]
fn sweep_over_dt_reduces_the_gap() {
    // N = 64 so the time error sits above the spatial floor.
    let text = family_b(BALANCED, 1e-3, 0.5, "").replace("n_points = 32", "n_points = 64");
    let (dir, run) = run_config("verify", &text, &["--sweep", "time.dt=2e-3,1e-3,5e-4"]);
    assert_eq!(run.code, 0, "{}", run.stderr);
    let (h, rows) = sweep_rows(&dir);
    assert_eq!(h[0], "time.dt");
    assert_eq!(column(&h, &rows, "time.dt"), [2e-3, 1e-3, 5e-4]);
    assert!(rows.iter().all(|r| r[1] == "ok"), "{rows:?}");
    let gap = column(&h, &rows, "final_equivalence_gap");
    assert!(gap[0] > gap[1] && gap[1] > gap[2], "{gap:?}");
}

#[test]
fn sweep_marks_non_periodic_rows_failed() {
    let (dir, run) = run_config("verify", &family_b(BALANCED, 2e-3, 0.1, ""), &["--sweep", "nonlinearity.delta.0.1=-0.5,-0.25,-0.5"]);
    assert_eq!(run.code, 0, "{}", run.stderr);
    let (_, rows) = sweep_rows(&dir);
    let status: Vec<_> = rows.iter().map(|r| (r[1].as_str(), r[2].as_str())).collect();
    assert_eq!(status, [("ok", "0"), ("failed", "3"), ("ok", "0")]);
    assert!(!rows[1][6].is_empty());
}

#[test]
fn sweep_over_amplitude_conserves_norm() {
    let (dir, run) = run_config("verify", &family_b(BALANCED, 1e-3, 0.5, ""), &["--sweep", "initial.scale=0.4,0.8,1.0"]);
    assert_eq!(run.code, 0, "{}", run.stderr);
    let (h, rows) = sweep_rows(&dir);
    assert!(column(&h, &rows, "final_norm_drift").iter().all(|d| d.abs() < 1e-8));
}

#[test]
fn single_value_sweep_matches_verify() {
    let text = family_b(BALANCED, 1e-3, 0.3, "");
    let (vdir, vrun) = run_config("verify", &text, &[]);
    assert_eq!(vrun.code, 0, "{}", vrun.stderr);
    let (h, rows) = table(&vdir, "equivalence.csv");
    let last = rows.len() - 1;
    let gap = column(&h, &rows, "density_diff_1")[last].max(column(&h, &rows, "density_diff_2")[last]);

    let (sdir, srun) = run_config("verify", &text, &["--sweep", "time.dt=1e-3"]);
    assert_eq!(srun.code, 0, "{}", srun.stderr);
    let (sh, srows) = sweep_rows(&sdir);
    assert_eq!(column(&sh, &srows, "final_equivalence_gap"), [gap]);
}

#[test]
fn sweep_with_unknown_key_is_a_config_error() {
    let (_dir, run) = run_config("verify", &linear(""), &["--sweep", "time.nope=1,2"]);
    assert_eq!(run.code, 1);
    assert!(run.stderr.contains("time.nope"));
}
