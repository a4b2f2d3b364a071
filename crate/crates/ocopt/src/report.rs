//! Output files: per-solver trajectory CSVs and a single JSON run report.
//! Everything except wall-clock timings is deterministic for a fixed
//! config and seed, so repeated runs produce byte-identical CSVs and JSON
//! that differs only under the "timings_ms" key.

use std::collections::BTreeMap;
use std::io;
use std::path::Path;

use serde::Serialize;

use crate::analysis::{ComparisonTable, RateReport, StepMapProbe};
use crate::solvers::Trajectory;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Fixed-width scientific notation: 17 significant digits round-trips every
/// f64 exactly and keeps repeated runs byte-identical.
pub fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes through a sibling temp file and renames, so readers never observe
/// a half-written file.
pub fn write_atomic(path: &Path, contents: &str) -> io::Result<()> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, contents)?;
    std::fs::rename(&tmp, path)
}

/// Quotes a CSV field if it contains a delimiter, quote, or newline. The
/// built-in labels avoid these, but notes can carry arbitrary error text.
fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// One trajectory as CSV: iterate coordinates, objective value, gradient
/// norm, and the step diagnostics that produced the next iterate. The final
/// row has no outgoing step, so its step fields are empty.
pub fn trajectory_csv(traj: &Trajectory) -> String {
    let dim = traj.iterates[0].dim();
    let mut out = String::from("k");
    for i in 1..=dim {
        out.push_str(&format!(",x{i}"));
    }
    out.push_str(",f,grad_norm,step_norm,depth,retries\n");
    for (k, x) in traj.iterates.iter().enumerate() {
        out.push_str(&k.to_string());
        for i in 0..dim {
            out.push(',');
            out.push_str(&fmt_float(x[i]));
        }
        out.push(',');
        out.push_str(&fmt_float(traj.f_values[k]));
        out.push(',');
        if k < traj.diags.len() {
            let d = &traj.diags[k];
            out.push_str(&fmt_float(d.grad_norm));
            out.push(',');
            out.push_str(&fmt_float(d.step.norm2()));
            out.push_str(&format!(",{},{}", d.depth, d.retries));
        } else {
            out.push_str(&fmt_float(traj.final_grad_norm));
            out.push_str(",,,");
        }
        out.push('\n');
    }
    out
}

/// Side-by-side solver comparison as CSV.
pub fn comparison_csv(table: &ComparisonTable) -> String {
    let mut out = String::from(
        "solver,kind,iterations,grad_evals,hess_evals,linear_solves,final_f,final_grad_norm,termination\n",
    );
    for row in &table.rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            csv_field(&row.solver),
            row.kind,
            row.iterations,
            row.grad_evals,
            row.hess_evals,
            row.linear_solves,
            fmt_float(row.final_f),
            fmt_float(row.final_grad_norm),
            csv_field(&row.termination)
        ));
    }
    out
}

fn opt_float(v: &Option<f64>) -> String {
    v.map(fmt_float).unwrap_or_default()
}

/// One cell of a rate-grid sweep.
#[derive(Debug, Clone, Serialize)]
pub struct RateGridRow {
    pub solver: String,
    pub r: f64,
    pub horizon: usize,
    pub theoretical: Option<f64>,
    pub empirical: Option<f64>,
    pub relative_gap: Option<f64>,
    pub samples: Option<usize>,
    pub iterations: usize,
    pub termination: String,
    /// set when the rate could not be estimated (e.g. too few iterates)
    pub note: Option<String>,
}

pub fn rate_grid_csv(rows: &[RateGridRow]) -> String {
    let mut out = String::from(
        "solver,r,horizon,theoretical,empirical,relative_gap,samples,iterations,termination,note\n",
    );
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            csv_field(&row.solver),
            fmt_float(row.r),
            row.horizon,
            opt_float(&row.theoretical),
            opt_float(&row.empirical),
            opt_float(&row.relative_gap),
            row.samples.map(|s| s.to_string()).unwrap_or_default(),
            row.iterations,
            csv_field(&row.termination),
            csv_field(row.note.as_deref().unwrap_or_default())
        ));
    }
    out
}

/// Rate summary attached to one solver run.
#[derive(Debug, Clone, Serialize)]
pub struct RateOut {
    pub empirical_ratio: f64,
    pub theoretical_constant: Option<f64>,
    pub per_mode_constants: Vec<f64>,
    pub relative_gap: Option<f64>,
    pub samples_used: usize,
}

impl From<&RateReport> for RateOut {
    fn from(r: &RateReport) -> Self {
        RateOut {
            empirical_ratio: r.empirical_ratio,
            theoretical_constant: r.theoretical_constant,
            per_mode_constants: r.per_mode_constants.clone(),
            relative_gap: r.relative_gap,
            samples_used: r.samples_used,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SolverRunSummary {
    pub label: String,
    pub kind: String,
    pub iterations: usize,
    pub termination: String,
    pub final_f: f64,
    pub final_grad_norm: f64,
    pub total_retries: usize,
    /// relative path of the trajectory CSV, when one was written
    pub csv: Option<String>,
    pub rate: Option<RateOut>,
    /// present only when the run stopped on a step failure
    pub failure_detail: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ComparisonRowOut {
    pub solver: String,
    pub kind: String,
    pub iterations: usize,
    pub grad_evals: usize,
    pub hess_evals: usize,
    pub linear_solves: usize,
    pub final_f: f64,
    pub final_grad_norm: f64,
    pub termination: String,
}

impl From<&crate::analysis::ComparisonRow> for ComparisonRowOut {
    fn from(r: &crate::analysis::ComparisonRow) -> Self {
        ComparisonRowOut {
            solver: r.solver.clone(),
            kind: r.kind.to_string(),
            iterations: r.iterations,
            grad_evals: r.grad_evals,
            hess_evals: r.hess_evals,
            linear_solves: r.linear_solves,
            final_f: r.final_f,
            final_grad_norm: r.final_grad_norm,
            termination: r.termination.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ControlLawOut {
    pub horizon: usize,
    pub half_weight: bool,
    pub max_violation: f64,
    pub max_violation_double_weight: f64,
    pub factor2_signature: bool,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct TrajectoryCheckOut {
    pub horizon: usize,
    pub residual: f64,
    pub iterations_used: usize,
    /// max state distance to the other trajectory system on the same
    /// horizon, when both were solved
    pub agreement: Option<f64>,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct StepProbeOut {
    pub r: f64,
    pub horizon: usize,
    pub slope_at_min: Option<f64>,
    pub slope_theory: Option<f64>,
    pub curvature_at_min: Option<f64>,
    pub curvature_bound: Option<f64>,
    pub pass: bool,
    pub note: Option<String>,
}

impl StepProbeOut {
    pub fn from_probe(r: f64, horizon: usize, p: &StepMapProbe, pass: bool) -> Self {
        StepProbeOut {
            r,
            horizon,
            slope_at_min: Some(p.slope_at_min),
            slope_theory: Some(p.slope_theory),
            curvature_at_min: Some(p.curvature_at_min),
            curvature_bound: Some(p.curvature_bound),
            pass,
            note: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Default)]
pub struct VerifyOut {
    pub control_law: Vec<ControlLawOut>,
    pub implicit: Vec<TrajectoryCheckOut>,
    pub semi_implicit: Vec<TrajectoryCheckOut>,
    pub step_probe: Vec<StepProbeOut>,
    /// reference-solver failures that prevented a check from running
    pub errors: Vec<String>,
    pub overall_pass: bool,
}

/// Flat overview of every verify check: one row per case with the headline
/// measured value and the threshold it was held to.
pub fn verify_csv(v: &VerifyOut) -> String {
    let mut out = String::from("section,case,value,threshold,pass\n");
    for row in &v.control_law {
        let (value, label) = if row.half_weight {
            (row.max_violation, "half_weight")
        } else {
            (row.max_violation_double_weight, "full_weight")
        };
        out.push_str(&format!(
            "control_law,horizon={} convention={label},{},{},{}\n",
            row.horizon,
            fmt_float(value),
            fmt_float(crate::oracles::CONTROL_LAW_TOL),
            row.pass
        ));
    }
    for (section, rows) in [("implicit", &v.implicit), ("semi_implicit", &v.semi_implicit)] {
        for row in rows {
            out.push_str(&format!(
                "{section},horizon={},{},{},{}\n",
                row.horizon,
                fmt_float(row.residual),
                fmt_float(crate::oracles::TRAJECTORY_RESIDUAL_TOL),
                row.pass
            ));
        }
    }
    for row in &v.step_probe {
        out.push_str(&format!(
            "step_probe,r={} horizon={},{},{},{}\n",
            row.r,
            row.horizon,
            opt_float(&row.curvature_at_min),
            opt_float(&row.curvature_bound),
            row.pass
        ));
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct ProblemEcho {
    pub name: String,
    pub params: BTreeMap<String, f64>,
    pub dim: usize,
    pub x0: Vec<f64>,
}

/// The one JSON document a command writes. Sections unused by a command
/// stay empty.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub command: String,
    pub seed: Option<u64>,
    pub problem: ProblemEcho,
    pub solver_runs: Vec<SolverRunSummary>,
    pub comparison: Vec<ComparisonRowOut>,
    pub rate_grid: Vec<RateGridRow>,
    pub verify: Option<VerifyOut>,
    /// wall-clock timings; the only nondeterministic part of the report
    pub timings_ms: BTreeMap<String, f64>,
}

impl RunReport {
    pub fn new(command: &str, seed: Option<u64>, problem: ProblemEcho) -> Self {
        RunReport {
            schema_version: REPORT_SCHEMA_VERSION,
            command: command.to_string(),
            seed,
            problem,
            solver_runs: Vec::new(),
            comparison: Vec::new(),
            rate_grid: Vec::new(),
            verify: None,
            timings_ms: BTreeMap::new(),
        }
    }

    pub fn render_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::builtin;
    use crate::solvers::{unified_solve, ControlWeight, OcpParams};
    use std::collections::BTreeMap;

    fn short_run() -> Trajectory {
        let mut p = BTreeMap::new();
        p.insert("a".to_string(), 1.0);
        let obj = builtin("quadratic1d", &p).unwrap();
        let params = OcpParams::new(ControlWeight::scalar(1.0).unwrap(), 1).with_max_outer(3);
        unified_solve(&obj, &params, &crate::linalg::Vector::scalar(1.0))
    }

    #[test]
    fn float_format_round_trips_exactly() {
        for v in [
            0.1,
            -3.5e-11,
            2.0f64.powi(-21),
            1.0 / 3.0,
            f64::MIN_POSITIVE,
            1.7976931348623157e308,
        ] {
            let s = fmt_float(v);
            let back: f64 = s.parse().unwrap();
            assert_eq!(back, v, "{s}");
        }
    }

    #[test]
    fn trajectory_csv_shape() {
        let traj = short_run();
        let csv = trajectory_csv(&traj);
        let lines: Vec<&str> = csv.trim_end().lines().collect();
        assert_eq!(lines[0], "k,x1,f,grad_norm,step_norm,depth,retries");
        assert_eq!(lines.len(), traj.iterates.len() + 1);
        // every row has the same field count
        for line in &lines {
            assert_eq!(line.split(',').count(), 7, "{line}");
        }
        // first data row starts at k=0 with x=1
        assert!(lines[1].starts_with("0,1.0000000000000000e0,"));
        // last row carries no step fields
        assert!(lines.last().unwrap().ends_with(",,,"));
    }

    #[test]
    fn csv_is_reproducible_byte_for_byte() {
        let a = trajectory_csv(&short_run());
        let b = trajectory_csv(&short_run());
        assert_eq!(a, b);
    }

    #[test]
    fn atomic_write_replaces_content() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("data.csv");
        write_atomic(&path, "one\n").unwrap();
        write_atomic(&path, "two\n").unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "two\n");
        assert!(!path.with_extension("tmp").exists());
    }

    #[test]
    fn report_serializes_with_stable_keys() {
        let mut report = RunReport::new(
            "solve",
            Some(7),
            ProblemEcho {
                name: "quadratic1d".to_string(),
                params: BTreeMap::new(),
                dim: 1,
                x0: vec![1.0],
            },
        );
        report.timings_ms.insert("total".to_string(), 12.5);
        let json = report.render_json();
        assert!(json.contains("\"schema_version\": 1"));
        assert!(json.contains("\"command\": \"solve\""));
        assert!(json.contains("\"timings_ms\""));
        // parse back as generic JSON to confirm well-formedness
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(v["seed"], 7);
        assert_eq!(v["problem"]["dim"], 1);
    }

    #[test]
    fn rate_grid_csv_handles_missing_estimates() {
        let rows = vec![RateGridRow {
            solver: "unified[r=1;N=3]".to_string(),
            r: 1.0,
            horizon: 3,
            theoretical: Some(0.0625),
            empirical: None,
            relative_gap: None,
            samples: None,
            iterations: 1,
            termination: "grad_tol".to_string(),
            note: Some("insufficient data".to_string()),
        }];
        let csv = rate_grid_csv(&rows);
        let lines: Vec<&str> = csv.trim_end().lines().collect();
        assert_eq!(lines.len(), 2);
        assert!(lines[1].contains(",,,1,grad_tol,insufficient data"));
        assert!(lines[1].starts_with("unified[r=1;N=3],1.0000000000000000e0,3,"));
    }

    #[test]
    fn csv_fields_with_delimiters_are_quoted() {
        let mut rows = vec![RateGridRow {
            solver: "custom".to_string(),
            r: 1.0,
            horizon: 0,
            theoretical: None,
            empirical: None,
            relative_gap: None,
            samples: None,
            iterations: 0,
            termination: "grad_tol".to_string(),
            note: Some("need 4 samples, have 2".to_string()),
        }];
        let csv = rate_grid_csv(&rows);
        assert!(csv.contains(",\"need 4 samples, have 2\"\n"));

        rows[0].note = Some("said \"no\"".to_string());
        let csv = rate_grid_csv(&rows);
        assert!(csv.contains(",\"said \"\"no\"\"\"\n"));
    }
}
