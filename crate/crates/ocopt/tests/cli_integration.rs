//! End-to-end tests of the `ocopt` binary: exit codes, emitted files, and
//! output determinism, exercised through a real process boundary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ocopt"))
}

struct Run {
    dir: tempfile::TempDir,
    config: PathBuf,
}

impl Run {
    fn new(config_toml: &str) -> Self {
        let dir = tempfile::tempdir().unwrap();
        let config = dir.path().join("experiment.toml");
        std::fs::write(&config, config_toml).unwrap();
        Run { dir, config }
    }

    fn out(&self, name: &str) -> PathBuf {
        self.dir.path().join("out").join(name)
    }

    fn exec(&self, subcommand: &str, extra: &[&str]) -> Output {
        bin()
            .arg(subcommand)
            .arg(&self.config)
            .arg("--out-dir")
            .arg(self.dir.path().join("out"))
            .args(extra)
            .output()
            .unwrap()
    }
}

fn code(output: &Output) -> i32 {
    output.status.code().expect("process exited normally")
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

fn stderr(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

fn first_line(path: &Path) -> String {
    let text = std::fs::read_to_string(path).unwrap();
    text.lines().next().unwrap_or_default().to_string()
}

const SOLVE_OK: &str = r#"
[problem]
name = "quadratic1d"

[problem.params]
a = 2.0
b = 0.5

[[solvers]]
kind = "unified"
r = 1.0
n = 3

[[solvers]]
kind = "newton"

[[solvers]]
kind = "gd"
lr = 0.1
grad_tol = 1e-7
"#;

#[test]
fn solve_writes_all_outputs_and_exits_zero() {
    let run = Run::new(SOLVE_OK);
    let out = run.exec("solve", &[]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));

    assert_eq!(
        first_line(&run.out("solver_0_unified.csv")),
        "k,x1,f,grad_norm,step_norm,depth,retries"
    );
    assert!(run.out("solver_1_newton.csv").exists());
    assert!(run.out("solver_2_gd.csv").exists());
    assert_eq!(
        first_line(&run.out("comparison.csv")),
        "solver,kind,iterations,grad_evals,hess_evals,linear_solves,final_f,final_grad_norm,termination"
    );

    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(run.out("report.json")).unwrap()).unwrap();
    assert_eq!(report["schema_version"], 1);
    assert_eq!(report["command"], "solve");
    assert_eq!(report["problem"]["name"], "quadratic1d");
    assert_eq!(report["solver_runs"].as_array().unwrap().len(), 3);
    assert!(report["timings_ms"]["total"].is_number());

    let text = stdout(&out);
    assert!(text.contains("unified[r=1;N=3]"), "stdout: {text}");
    assert!(text.contains("termination grad_tol"));
}

#[test]
fn minimal_solve_traces_the_exact_contraction() {
    // f(x) = x^2/2, r = 1, N = 1 contracts by exactly 1/4 per step, so the
    // x column of the emitted CSV must walk down the powers of four
    let run = Run::new(
        r#"
x0 = [1.0]

[problem]
name = "quadratic1d"

[problem.params]
a = 1.0
b = 0.0

[[solvers]]
kind = "unified"
r = 1.0
n = 1
"#,
    );
    let out = run.exec("solve", &[]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    let csv = std::fs::read_to_string(run.out("solver_0_unified.csv")).unwrap();
    let x_col: Vec<f64> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(x_col[0], 1.0);
    for (k, &x) in x_col.iter().enumerate().take(7) {
        let want = 0.25f64.powi(k as i32);
        // the linear solve routes through a Cholesky factor (two divisions
        // by sqrt 2 instead of one by 2), so allow a few ulps of drift
        assert!(
            (x - want).abs() <= 1e-13 * want,
            "row {k}: x = {x:e}, want {want:e}"
        );
    }
}

#[test]
fn solve_reports_step_failure_with_exit_two() {
    let run = Run::new(
        r#"
x0 = [0.0]

[problem]
name = "quartic_shift"

[[solvers]]
kind = "newton"
"#,
    );
    let out = run.exec("solve", &[]);
    assert_eq!(code(&out), 2, "stderr: {}", stderr(&out));
    assert!(stdout(&out).contains("step_failure"));
    // the failed run still leaves a complete, parseable record behind
    assert!(run.out("solver_0_newton.csv").exists());
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(run.out("report.json")).unwrap()).unwrap();
    assert_eq!(report["solver_runs"][0]["termination"], "step_failure");
    assert!(report["solver_runs"][0]["failure_detail"].is_string());
}

#[test]
fn usage_and_config_errors_exit_one() {
    // missing config file
    let out = bin().arg("solve").arg("/nonexistent/x.toml").output().unwrap();
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("error:"));

    // malformed TOML
    let run = Run::new("not toml [[[");
    assert_eq!(code(&run.exec("solve", &[])), 1);

    // unknown solver kind
    let run = Run::new(
        "[problem]\nname = \"quadratic1d\"\n[problem.params]\na = 1.0\n[[solvers]]\nkind = \"sgd\"\n",
    );
    let out = run.exec("solve", &[]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("sgd"));

    // a solve with no solvers configured
    let run = Run::new("[problem]\nname = \"quadratic1d\"\n[problem.params]\na = 1.0\n");
    assert_eq!(code(&run.exec("solve", &[])), 1);

    // unknown problem family
    let run = Run::new("[problem]\nname = \"mystery\"\n[[solvers]]\nkind = \"newton\"\n");
    assert_eq!(code(&run.exec("solve", &[])), 1);

    // verify without a [verify] section
    let run = Run::new(SOLVE_OK);
    assert_eq!(code(&run.exec("verify", &[])), 1);

    // no subcommand at all
    let out = bin().output().unwrap();
    assert_eq!(code(&out), 1);

    // --help is not an error
    let out = bin().arg("--help").output().unwrap();
    assert_eq!(code(&out), 0);
}

#[test]
fn verify_passes_on_well_behaved_problem() {
    let run = Run::new(
        r#"
[problem]
name = "cubic_perturbed_quadratic"

[problem.params]
c = 0.1

[verify]

[verify.control_law]
horizons = [0, 1, 2]
r = 0.7

[verify.implicit]
horizons = [1, 3]
r = 1.0

[verify.semi_implicit]
horizons = [1, 3]
r = 1.0

[verify.step_probe]
r_grid = [0.5, 2.0]
n_grid = [0, 2]
"#,
    );
    let out = run.exec("verify", &[]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("verify: PASS"), "stdout: {text}");
    // no convention pinned in the config, so each horizon checks both
    assert!(text.contains("control_law: 6/6 checks pass"), "stdout: {text}");
    assert!(text.contains("step_probe: 4/4 checks pass"), "stdout: {text}");

    assert_eq!(
        first_line(&run.out("verify.csv")),
        "section,case,value,threshold,pass"
    );
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(run.out("report.json")).unwrap()).unwrap();
    assert_eq!(report["verify"]["overall_pass"], true);
    assert_eq!(report["verify"]["control_law"].as_array().unwrap().len(), 6);
}

#[test]
fn verify_fails_honestly_when_reference_solver_cannot_converge() {
    // x^3 + x has no stationary point, so the brute-force reference solver
    // has nothing to converge to; the check must report FAIL, not hide it
    let run = Run::new(
        r#"
[problem]
name = "quartic_shift"

[verify]

[verify.control_law]
horizons = [1]
r = 1.0
"#,
    );
    let out = run.exec("verify", &[]);
    assert_eq!(code(&out), 2, "stderr: {}", stderr(&out));
    assert!(stdout(&out).contains("verify: FAIL"));
    assert!(stderr(&out).contains("check failed to run"));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(run.out("report.json")).unwrap()).unwrap();
    assert_eq!(report["verify"]["overall_pass"], false);
    assert!(!report["verify"]["errors"].as_array().unwrap().is_empty());
}

#[test]
fn rates_sweeps_the_grid_and_matches_theory_on_quadratic() {
    let run = Run::new(
        r#"
[problem]
name = "quadratic1d"

[problem.params]
a = 1.0

[rates]
r_grid = [0.5, 1.0]
n_grid = [0, 1, 3]
grad_tol = 1e-12

[[solvers]]
kind = "gd"
lr = 0.1
"#,
    );
    let out = run.exec("rates", &[]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));

    let csv = std::fs::read_to_string(run.out("rates.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(
        lines[0],
        "solver,r,horizon,theoretical,empirical,relative_gap,samples,iterations,termination,note"
    );
    assert_eq!(lines.len(), 1 + 2 * 3, "one row per (r, N) cell");
    for row in &lines[1..] {
        let fields: Vec<&str> = row.split(',').collect();
        let gap: f64 = fields[5].parse().expect("relative_gap populated");
        assert!(
            gap <= 1e-8,
            "measured rate should match theory on a quadratic: {row}"
        );
    }
    // a solver list alongside [rates] also produces the comparison table
    assert!(run.out("comparison.csv").exists());
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(run.out("report.json")).unwrap()).unwrap();
    assert_eq!(report["rate_grid"].as_array().unwrap().len(), 6);
}

#[test]
fn list_names_every_problem_and_solver() {
    let out = bin().arg("list").output().unwrap();
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    for name in [
        "quadratic1d",
        "quadratic_nd",
        "cubic_perturbed_quadratic",
        "quartic_shift",
        "rosenbrock",
        "unified",
        "annealed",
        "newton",
        "gd",
    ] {
        assert!(text.contains(name), "listing must mention {name}");
    }

    let out = bin().args(["--format", "json", "list"]).output().unwrap();
    assert_eq!(code(&out), 0);
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(doc["problems"].as_array().unwrap().len(), 5);
    assert_eq!(doc["solvers"].as_array().unwrap().len(), 4);
}

const SEEDED_ND: &str = r#"
[problem]
name = "quadratic_nd"
seed = 1

[problem.params]
lambda1 = 1.0
lambda2 = 9.0

[[solvers]]
kind = "unified"
r = 1.0
n = 2
"#;

#[test]
fn seed_flag_overrides_config_and_reproduces() {
    let with_seed = |seed: &str| {
        let run = Run::new(SEEDED_ND);
        let out = run.exec("solve", &["--seed", seed]);
        assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
        let csv = std::fs::read(run.out("solver_0_unified.csv")).unwrap();
        let report: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(run.out("report.json")).unwrap())
                .unwrap();
        (csv, report["seed"].clone())
    };
    let (a1, seed_a1) = with_seed("2");
    let (a2, seed_a2) = with_seed("2");
    let (b, seed_b) = with_seed("3");
    assert_eq!(seed_a1, 2);
    assert_eq!(seed_a2, 2);
    assert_eq!(seed_b, 3);
    assert_eq!(a1, a2, "same seed must reproduce byte-for-byte");
    assert_ne!(a1, b, "different seed must rotate the problem differently");
}

#[test]
fn format_flag_selects_which_files_exist() {
    let run = Run::new(SOLVE_OK);
    let out = run.exec("solve", &["--format", "csv"]);
    assert_eq!(code(&out), 0);
    assert!(run.out("comparison.csv").exists());
    assert!(!run.out("report.json").exists());

    let run = Run::new(SOLVE_OK);
    let out = run.exec("solve", &["--format", "json"]);
    assert_eq!(code(&out), 0);
    assert!(run.out("report.json").exists());
    assert!(!run.out("comparison.csv").exists());
    assert!(!run.out("solver_0_unified.csv").exists());
}

#[test]
fn parallelism_does_not_change_outputs() {
    let with_jobs = |jobs: &str| {
        let run = Run::new(SOLVE_OK);
        let out = run.exec("solve", &["--jobs", jobs]);
        assert_eq!(code(&out), 0);
        (
            std::fs::read(run.out("comparison.csv")).unwrap(),
            std::fs::read(run.out("solver_2_gd.csv")).unwrap(),
        )
    };
    assert_eq!(with_jobs("1"), with_jobs("3"));
}
