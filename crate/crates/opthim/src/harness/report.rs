//! Result emission: per-iteration history CSV, summary JSON plus an aligned
//! text table, and trajectory/contour-grid CSVs for low-dimensional runs.

use super::driver::{HistoryRow, RunRecord};
use crate::objective::Objective;
use ndarray::Array1;
use serde::{Deserialize, Serialize};
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("no records to summarize")]
    Empty,
    #[error("run has no recorded trajectory")]
    NoTrajectory,
}

/// Writes the per-iteration history with the fixed column set
/// `k,f,grad_norm,step_param,step_norm,fev,gev,hev,time_s,accepted`.
/// Floats round-trip exactly; absent fields are empty.
pub fn emit_history_csv(record: &RunRecord, path: &Path) -> Result<(), ReportError> {
    let mut w = csv::Writer::from_path(path)?;
    for row in &record.history {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a history CSV back into rows.
pub fn read_history_csv(path: &Path) -> Result<Vec<HistoryRow>, ReportError> {
    let mut r = csv::Reader::from_path(path)?;
    let mut rows = Vec::new();
    for row in r.deserialize() {
        rows.push(row?);
    }
    Ok(rows)
}

/// One run's summary line, mirroring the metric columns of the evaluation
/// tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub problem: String,
    pub method: String,
    pub variant: String,
    pub iterations: usize,
    pub func_evals: u64,
    pub grad_evals: u64,
    pub time_s: f64,
    pub converged: bool,
    pub final_f: f64,
    pub final_grad_norm: f64,
}

impl SummaryRow {
    pub fn from_record(record: &RunRecord) -> Self {
        Self {
            problem: record.config.problem.clone(),
            method: record.config.method_label().to_string(),
            variant: record.config.variant_label(),
            iterations: record.iterations,
            func_evals: record.func_evals,
            grad_evals: record.grad_evals,
            time_s: record.wall_time,
            converged: record.converged,
            final_f: record.final_f,
            final_grad_norm: record.final_grad_norm,
        }
    }
}

/// Writes one JSON object per run to `path` and an aligned plain-text table
/// (problems × metrics against method/variant columns) alongside it with a
/// `.txt` extension. Errors on an empty record list.
pub fn emit_summary(records: &[RunRecord], path: &Path) -> Result<(), ReportError> {
    if records.is_empty() {
        return Err(ReportError::Empty);
    }
    let rows: Vec<SummaryRow> = records.iter().map(SummaryRow::from_record).collect();
    let file = File::create(path)?;
    serde_json::to_writer_pretty(BufWriter::new(file), &rows)?;

    let table_path = path.with_extension("txt");
    let mut out = BufWriter::new(File::create(table_path)?);
    write!(out, "{}", summary_table(&rows))?;
    out.flush()?;
    Ok(())
}

/// Reads a summary JSON back into rows.
pub fn read_summary_json(path: &Path) -> Result<Vec<SummaryRow>, ReportError> {
    let file = File::open(path)?;
    Ok(serde_json::from_reader(io::BufReader::new(file))?)
}

/// Renders the aligned table: one problem block of five metric rows, one
/// column per method/variant pair, in first-seen order.
pub fn summary_table(rows: &[SummaryRow]) -> String {
    let mut problems: Vec<&str> = Vec::new();
    let mut columns: Vec<String> = Vec::new();
    for row in rows {
        if !problems.contains(&row.problem.as_str()) {
            problems.push(&row.problem);
        }
        let col = format!("{}/{}", row.method, row.variant);
        if !columns.contains(&col) {
            columns.push(col);
        }
    }
    let metrics = [
        "Iterations",
        "Func Evals",
        "Grad Evals",
        "Time (s)",
        "Converged?",
    ];
    let cell = |problem: &str, col: &str, metric: &str| -> String {
        let row = rows
            .iter()
            .find(|r| r.problem == problem && format!("{}/{}", r.method, r.variant) == col);
        match row {
            None => "-".to_string(),
            Some(r) => match metric {
                "Iterations" => r.iterations.to_string(),
                "Func Evals" => r.func_evals.to_string(),
                "Grad Evals" => r.grad_evals.to_string(),
                "Time (s)" => format!("{:.2}", r.time_s),
                _ => if r.converged { "T" } else { "F" }.to_string(),
            },
        }
    };

    let mut widths: Vec<usize> = columns.iter().map(|c| c.len()).collect();
    for (ci, col) in columns.iter().enumerate() {
        for problem in &problems {
            for metric in &metrics {
                widths[ci] = widths[ci].max(cell(problem, col, metric).len());
            }
        }
    }
    let pw = problems
        .iter()
        .map(|p| p.len())
        .max()
        .unwrap_or(7)
        .max("Problem".len());
    let mw = "Converged?".len();

    let mut s = String::new();
    s.push_str(&format!("{:pw$}  {:mw$}", "Problem", "Metric"));
    for (ci, col) in columns.iter().enumerate() {
        s.push_str(&format!("  {:>w$}", col, w = widths[ci]));
    }
    s.push('\n');
    for problem in &problems {
        for (mi, metric) in metrics.iter().enumerate() {
            let label = if mi == 0 { problem } else { "" };
            s.push_str(&format!("{label:pw$}  {metric:mw$}"));
            for (ci, col) in columns.iter().enumerate() {
                s.push_str(&format!(
                    "  {:>w$}",
                    cell(problem, col, metric),
                    w = widths[ci]
                ));
            }
            s.push('\n');
        }
    }
    s
}

/// Writes the recorded iterate sequence, one coordinate row per iterate.
pub fn emit_trajectory(record: &RunRecord, path: &Path) -> Result<(), ReportError> {
    let traj = record
        .trajectory
        .as_ref()
        .ok_or(ReportError::NoTrajectory)?;
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)?;
    let n = record.final_point.len();
    w.write_record((0..n).map(|i| format!("x{i}")))?;
    for point in traj {
        w.write_record(point.iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

/// A 2-D sampling box over two coordinates of the domain, with the remaining
/// coordinates pinned at `base`.
#[derive(Debug, Clone)]
pub struct GridSpec {
    pub dims: (usize, usize),
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
    pub resolution: usize,
    pub base: Array1<f64>,
}

impl GridSpec {
    /// A box covering the given points over coordinates (0, 1) with a margin,
    /// anchored at the last point.
    pub fn covering(points: &[Array1<f64>], resolution: usize) -> Self {
        let base = points.last().expect("at least one point").clone();
        let (mut x_lo, mut x_hi) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut y_lo, mut y_hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for p in points {
            x_lo = x_lo.min(p[0]);
            x_hi = x_hi.max(p[0]);
            y_lo = y_lo.min(p[1]);
            y_hi = y_hi.max(p[1]);
        }
        let xm = 0.1 * (x_hi - x_lo).max(1.0);
        let ym = 0.1 * (y_hi - y_lo).max(1.0);
        Self {
            dims: (0, 1),
            x_range: (x_lo - xm, x_hi + xm),
            y_range: (y_lo - ym, y_hi + ym),
            resolution,
            base,
        }
    }
}

/// Samples f over the grid and writes `xi,xj,f` rows, row-major over the box.
pub fn emit_contour_grid(obj: &Objective, grid: &GridSpec, path: &Path) -> Result<(), ReportError> {
    assert!(
        grid.resolution >= 2,
        "grid needs at least 2 samples per axis"
    );
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)?;
    let (di, dj) = grid.dims;
    w.write_record([format!("x{di}"), format!("x{dj}"), "f".to_string()])?;
    let steps = grid.resolution - 1;
    let mut point = grid.base.clone();
    for yi in 0..grid.resolution {
        let y = grid.y_range.0 + (grid.y_range.1 - grid.y_range.0) * yi as f64 / steps as f64;
        for xi in 0..grid.resolution {
            let x = grid.x_range.0 + (grid.x_range.1 - grid.x_range.0) * xi as f64 / steps as f64;
            point[di] = x;
            point[dj] = y;
            let f = obj.value(&point.view());
            w.write_record([x.to_string(), y.to_string(), f.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Independent re-check of the accepted line-search steps of a run: the
/// sufficient-decrease inequality on every step, plus the curvature
/// inequality for Wolfe runs. Uses raw objective evaluations against the
/// recorded trajectory and step sizes; returns the number of violations.
pub fn verify_linesearch_conditions(record: &RunRecord, obj: &Objective) -> usize {
    let traj = match &record.trajectory {
        Some(t) => t,
        None => return 0,
    };
    let wolfe = matches!(
        record.config.line_search,
        Some(super::config::LineSearchKind::Wolfe)
    );
    let c1 = record.config.ls_params.c1;
    let c2 = record.config.ls_params.c2;
    let mut violations = 0;
    for i in 1..traj.len() {
        let x_prev = &traj[i - 1];
        let x_next = &traj[i];
        let dx = x_next - x_prev;
        let f_prev = obj.value(&x_prev.view());
        let f_next = obj.value(&x_next.view());
        let g_prev = obj.gradient(&x_prev.view());
        // c1·α·slope = c1·gᵀΔx since Δx = α·p
        if f_next > f_prev + c1 * g_prev.dot(&dx) {
            violations += 1;
        }
        if wolfe {
            let g_next = obj.gradient(&x_next.view());
            if g_next.dot(&dx) < c2 * g_prev.dot(&dx) {
                violations += 1;
            }
        }
    }
    violations
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::{LineSearchKind, Method, SolverConfig};
    use crate::harness::driver::run_objective;
    use crate::objective::Objective;
    use ndarray::{array, ArrayView1};
    use tempfile::tempdir;

    fn sample_record() -> RunRecord {
        let obj = Objective::new(
            "q",
            2,
            |x: &ArrayView1<f64>| 0.5 * x.dot(x),
            |x: &ArrayView1<f64>| x.to_owned(),
        );
        let config = SolverConfig::line_search(Method::Gd, LineSearchKind::Armijo, "q");
        run_objective(&config, &obj, array![1.0, 1.0]).unwrap()
    }

    #[test]
    fn history_csv_round_trips_exactly() {
        let record = sample_record();
        let dir = tempdir().unwrap();
        let path = dir.path().join("history.csv");
        emit_history_csv(&record, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("k,f,grad_norm,step_param,step_norm,fev,gev,hev,time_s,accepted"));
        let rows = read_history_csv(&path).unwrap();
        assert_eq!(rows, record.history);
    }

    #[test]
    fn summary_json_round_trips_and_table_is_aligned() {
        let record = sample_record();
        let dir = tempdir().unwrap();
        let path = dir.path().join("summary.json");
        emit_summary(std::slice::from_ref(&record), &path).unwrap();
        let rows = read_summary_json(&path).unwrap();
        assert_eq!(rows, vec![SummaryRow::from_record(&record)]);
        let table = std::fs::read_to_string(dir.path().join("summary.txt")).unwrap();
        assert!(table.contains("Problem"));
        assert!(table.contains("gd/armijo"));
        assert!(table.contains("Converged?"));
        assert!(table.contains(" T"));
    }

    #[test]
    fn empty_summary_is_an_error() {
        let dir = tempdir().unwrap();
        assert!(matches!(
            emit_summary(&[], &dir.path().join("s.json")),
            Err(ReportError::Empty)
        ));
    }

    #[test]
    fn trajectory_first_row_is_start_point() {
        let record = sample_record();
        let dir = tempdir().unwrap();
        let path = dir.path().join("traj.csv");
        emit_trajectory(&record, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "x0,x1");
        assert_eq!(lines.next().unwrap(), "1,1");
    }

    #[test]
    fn contour_grid_center_value() {
        let obj = Objective::new(
            "q",
            2,
            |x: &ArrayView1<f64>| 0.5 * x.dot(x),
            |x: &ArrayView1<f64>| x.to_owned(),
        );
        let grid = GridSpec {
            dims: (0, 1),
            x_range: (-1.0, 1.0),
            y_range: (-1.0, 1.0),
            resolution: 3,
            base: array![0.0, 0.0],
        };
        let dir = tempdir().unwrap();
        let path = dir.path().join("grid.csv");
        emit_contour_grid(&obj, &grid, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 1 + 9);
        // center of the 3x3 grid is the origin
        assert_eq!(lines[5], "0,0,0");
    }

    #[test]
    fn verifier_reports_zero_violations_on_real_run() {
        let record = sample_record();
        let obj = Objective::new(
            "q",
            2,
            |x: &ArrayView1<f64>| 0.5 * x.dot(x),
            |x: &ArrayView1<f64>| x.to_owned(),
        );
        assert_eq!(verify_linesearch_conditions(&record, &obj), 0);
    }
}
