//! End-to-end checks of the command-line binary: exit codes, artifact
//! selection, report determinism, and the output directory resolution.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_viscofd"))
}

fn fresh_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("viscofd-cli-{tag}-{}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path
}

const BASE: &str = r#"
[problem]
alpha = 0.0
beta = 1.0
lambda = 1.0
a = 1.0
A = 2.0
variant = "pucci_plus"
b_expr = "1"
f_expr = "1"
phi_expr = "0"

[problem.domain.interval]
lo = -1.0
hi = 1.0

[grid]
h = 0.125
"#;

/// Report text with the trailing timing comments removed; everything
/// that remains is promised to be byte-stable across reruns.
fn report_body(path: &Path) -> String {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn solve_writes_artifacts_and_exits_zero() {
    let dir = fresh_dir("solve");
    let cfg = write_config(&dir, "run.toml", BASE);
    let out = bin().args(["solve"]).arg(&cfg).arg("--out").arg(&dir).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("converged"), "stdout: {stdout}");

    let csv = fs::read_to_string(dir.join("solution.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("x,u,residual"));
    assert_eq!(lines.count(), 17, "one row per node of the 1/8 grid on (-1, 1)");
    assert!(dir.join("residual.csv").exists());

    let body = report_body(&dir.join("solve.report"));
    assert!(body.starts_with("report viscofd 1\ncommand solve\n"));
    assert!(body.contains("\nconfig| [problem]"), "config echo missing:\n{body}");
    assert!(body.contains("converged true"));
    assert!(body.trim_end().ends_with("end"));
}

#[test]
fn invalid_exponent_range_is_a_config_error() {
    let dir = fresh_dir("badbeta");
    let cfg = write_config(&dir, "bad.toml", &BASE.replace("beta = 1.0", "beta = 3.0"));
    let out = bin().args(["solve"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("config error"), "stderr: {stderr}");
    assert!(stderr.contains("beta"), "stderr should name the offending field: {stderr}");
}

#[test]
fn zero_data_produces_the_zero_solution() {
    let dir = fresh_dir("zero");
    let body = BASE
        .replace("f_expr = \"1\"", "f_expr = \"0\"")
        .replace("b_expr = \"1\"", "b_expr = \"0\"");
    let cfg = write_config(&dir, "zero.toml", &body);
    let out = bin().args(["solve"]).arg(&cfg).arg("--out").arg(&dir).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let csv = fs::read_to_string(dir.join("solution.csv")).unwrap();
    for line in csv.lines().skip(1) {
        let u: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        assert!(u.abs() <= 1e-6, "u = {u} should vanish with zero data");
    }
}

#[test]
fn report_bodies_are_deterministic() {
    let d1 = fresh_dir("det1");
    let d2 = fresh_dir("det2");
    let cfg = write_config(&d1, "run.toml", BASE);
    for d in [&d1, &d2] {
        let out = bin().args(["solve"]).arg(&cfg).arg("--out").arg(d).output().unwrap();
        assert_eq!(out.status.code(), Some(0));
    }
    assert_eq!(
        report_body(&d1.join("solve.report")),
        report_body(&d2.join("solve.report")),
        "stripped report bodies must be byte-identical across reruns"
    );
    assert_eq!(
        fs::read_to_string(d1.join("solution.csv")).unwrap(),
        fs::read_to_string(d2.join("solution.csv")).unwrap()
    );
}

#[test]
fn format_flag_narrows_the_artifact_set() {
    let dir = fresh_dir("format");
    let cfg = write_config(&dir, "run.toml", BASE);

    let csv_dir = dir.join("csvonly");
    fs::create_dir_all(&csv_dir).unwrap();
    let out = bin()
        .args(["solve"])
        .arg(&cfg)
        .arg("--out")
        .arg(&csv_dir)
        .args(["--format", "csv"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(csv_dir.join("solution.csv").exists());
    assert!(!csv_dir.join("solve.report").exists());

    let rep_dir = dir.join("reportonly");
    fs::create_dir_all(&rep_dir).unwrap();
    let out = bin()
        .args(["solve"])
        .arg(&cfg)
        .arg("--out")
        .arg(&rep_dir)
        .args(["--format", "report"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(!rep_dir.join("solution.csv").exists());
    assert!(rep_dir.join("solve.report").exists());
}

#[test]
fn environment_variable_supplies_the_default_directory() {
    let dir = fresh_dir("envout");
    let cfg = write_config(&dir, "run.toml", BASE);
    let envdir = dir.join("from_env");
    fs::create_dir_all(&envdir).unwrap();
    let out = bin()
        .args(["solve"])
        .arg(&cfg)
        .env("VISCOFD_OUT", &envdir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(envdir.join("solution.csv").exists(), "artifacts should land in $VISCOFD_OUT");
}

#[test]
fn manufacture_reports_singular_points() {
    let dir = fresh_dir("man");
    let cfg = write_config(
        &dir,
        "sing.toml",
        &BASE.replace("alpha = 0.0", "alpha = -0.5"),
    );
    let out = bin()
        .args(["manufacture", "1 - x*x"])
        .arg(&cfg)
        .arg("--out")
        .arg(&dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("f = "), "stdout: {stdout}");
    // the candidate's gradient vanishes at the origin, where the
    // singular gradient weight makes the manufactured data blow up
    assert!(stdout.contains("singular point at (0, 0)"), "stdout: {stdout}");
    assert!(dir.join("field.csv").exists());
}

#[test]
fn sweep_emits_rates_against_the_oracle() {
    let dir = fresh_dir("sweep");
    // with b = 0 the data for u = cos(pi x / 2) needs no absolute value:
    // -M+(u'') + u = (pi^2/4 + 1) cos(pi x / 2) since u'' <= 0 here
    let body = r#"
[problem]
alpha = 0.0
beta = 1.0
lambda = 1.0
a = 1.0
A = 2.0
variant = "pucci_plus"
b_expr = "0"
f_expr = "(pi*pi/4 + 1) * cos(pi*x/2)"
phi_expr = "0"
oracle_expr = "cos(pi*x/2)"

[problem.domain.interval]
lo = -1.0
hi = 1.0

[grid]
hs = [0.25, 0.125, 0.0625]
"#;
    let cfg = write_config(&dir, "sweep.toml", body);
    let out = bin().args(["sweep"]).arg(&cfg).arg("--out").arg(&dir).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.join("sweep.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("h,error,rate"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 3);
    assert!(rows[0].ends_with(','), "first level has no rate yet: {}", rows[0]);
    // the two refinements should show roughly first-order decay
    for row in &rows[1..] {
        let rate: f64 = row.split(',').nth(2).unwrap().parse().unwrap();
        assert!(rate > 0.5, "rate column should show decay, got {row}");
    }
}

#[test]
fn verify_failure_sets_the_certificate_exit_code() {
    let dir = fresh_dir("vfail");
    // a candidate far below the solution cannot be a supersolution
    let body = format!(
        "{}\n[verify]\nchecks = [\"classical\"]\ncandidate_expr = \"0 - 10\"\ncandidate_side = \"super\"\n",
        BASE
    );
    let cfg = write_config(&dir, "verify.toml", &body);
    let out = bin().args(["verify"]).arg(&cfg).arg("--out").arg(&dir).output().unwrap();
    assert_eq!(out.status.code(), Some(4), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("fail"), "stdout: {stdout}");
    let csv = fs::read_to_string(dir.join("certificates.csv")).unwrap();
    assert!(csv.lines().next().unwrap().starts_with("check,verdict"));
    assert!(csv.contains("classical,fail"));
}

#[test]
fn verify_passing_candidate_exits_zero() {
    let dir = fresh_dir("vpass");
    let body = format!(
        "{}\n[verify]\nchecks = [\"classical\", \"sandwich\"]\ncandidate_expr = \"2\"\ncandidate_side = \"super\"\n",
        BASE
    );
    let cfg = write_config(&dir, "verify.toml", &body);
    let out = bin().args(["verify"]).arg(&cfg).arg("--out").arg(&dir).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.join("certificates.csv")).unwrap();
    assert!(csv.contains("classical,pass"));
    assert!(csv.contains("sandwich,pass"));
}

#[test]
fn unparseable_expression_is_a_config_error() {
    let dir = fresh_dir("badexpr");
    let cfg = write_config(&dir, "run.toml", BASE);
    let out = bin().args(["manufacture", "cos(?)"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}
