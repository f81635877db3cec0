//! CSV serialization of rate reports.
//!
//! The schema is fixed: `scheme,tau,error,stderr,n_samples,predicted_rate,
//! fitted_rate,residual`, one row per (scheme, stepsize) cell. Floats are
//! written with Rust's shortest round-trip formatting, so reading a file back
//! recovers the exact values; a `# generated_unix <secs>` comment line is
//! prepended unless suppressed, and apart from it identical reports produce
//! byte-identical files.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::experiments::RateReport;
use stochwave_core::integrator::Trajectory;

pub const CSV_HEADER: &str =
    "scheme,tau,error,stderr,n_samples,predicted_rate,fitted_rate,residual";

/// One parsed CSV row. Cells whose scheme had no fit (fewer than two
/// positive-error points) carry NaN in `fitted_rate` and `residual`.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub scheme: String,
    pub tau: f64,
    pub error: f64,
    pub stderr: f64,
    pub n_samples: usize,
    pub predicted_rate: f64,
    pub fitted_rate: f64,
    pub residual: f64,
}

#[derive(Debug, thiserror::Error)]
pub enum CsvError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("line {line}: expected 8 comma-separated fields, got {got}")]
    FieldCount { line: usize, got: usize },
    #[error("line {line}: bad {field}: {value:?}")]
    BadField { line: usize, field: &'static str, value: String },
    #[error("missing header line `{CSV_HEADER}`")]
    MissingHeader,
}

fn rows_from_points(
    report: &RateReport,
    points: &[crate::experiments::RatePoint],
) -> Vec<CsvRow> {
    points
        .iter()
        .map(|p| {
            let fit = report.fit_for(p.scheme);
            CsvRow {
                scheme: p.scheme.label().to_string(),
                tau: p.tau,
                error: p.error,
                stderr: p.stderr,
                n_samples: p.n_samples,
                predicted_rate: report.predicted_rate,
                fitted_rate: fit.map_or(f64::NAN, |f| f.slope),
                residual: fit.map_or(f64::NAN, |f| f.residual),
            }
        })
        .collect()
}

/// The report's headline points as CSV rows, scheme-major.
pub fn rows_from_report(report: &RateReport) -> Vec<CsvRow> {
    rows_from_points(report, &report.points)
}

/// The sup-over-grid diagnostic points, when the study tracked them.
pub fn sup_rows_from_report(report: &RateReport) -> Option<Vec<CsvRow>> {
    report.sup_points.as_ref().map(|points| rows_from_points(report, points))
}

/// Renders rows to CSV text. `timestamp` becomes a leading
/// `# generated_unix <secs>` comment; pass `None` for byte-stable output.
pub fn to_csv_string(rows: &[CsvRow], timestamp: Option<u64>) -> String {
    let mut out = String::new();
    if let Some(secs) = timestamp {
        out.push_str(&format!("# generated_unix {secs}\n"));
    }
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.scheme,
            r.tau,
            r.error,
            r.stderr,
            r.n_samples,
            r.predicted_rate,
            r.fitted_rate,
            r.residual
        ));
    }
    out
}

pub fn write_csv(path: &Path, rows: &[CsvRow], timestamp: Option<u64>) -> Result<(), CsvError> {
    let mut file = fs::File::create(path)?;
    file.write_all(to_csv_string(rows, timestamp).as_bytes())?;
    Ok(())
}

pub const TRAJECTORY_HEADER: &str = "t,mode_index,u_coeff,v_coeff";

/// Renders a recorded trajectory as CSV, one row per (time, mode) with
/// 1-based mode indices; the first block is the initial state at t = 0.
pub fn trajectory_csv(trajectory: &Trajectory) -> String {
    let mut out = String::from(TRAJECTORY_HEADER);
    out.push('\n');
    for (t, state) in trajectory.times.iter().zip(&trajectory.states) {
        for (i, (u, v)) in state.u.coeffs().iter().zip(state.v.coeffs()).enumerate() {
            out.push_str(&format!("{t},{},{u},{v}\n", i + 1));
        }
    }
    out
}

pub fn write_trajectory(path: &Path, trajectory: &Trajectory) -> Result<(), CsvError> {
    let mut file = fs::File::create(path)?;
    file.write_all(trajectory_csv(trajectory).as_bytes())?;
    Ok(())
}

/// Parses a report CSV, skipping `#` comment lines and requiring the header.
pub fn read_csv(path: &Path) -> Result<Vec<CsvRow>, CsvError> {
    parse_csv(&fs::read_to_string(path)?)
}

pub fn parse_csv(text: &str) -> Result<Vec<CsvRow>, CsvError> {
    let mut rows = Vec::new();
    let mut saw_header = false;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        if !saw_header {
            if trimmed != CSV_HEADER {
                return Err(CsvError::MissingHeader);
            }
            saw_header = true;
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').collect();
        if fields.len() != 8 {
            return Err(CsvError::FieldCount { line, got: fields.len() });
        }
        let float = |field: &'static str, value: &str| -> Result<f64, CsvError> {
            value.parse().map_err(|_| CsvError::BadField {
                line,
                field,
                value: value.to_string(),
            })
        };
        rows.push(CsvRow {
            scheme: fields[0].to_string(),
            tau: float("tau", fields[1])?,
            error: float("error", fields[2])?,
            stderr: float("stderr", fields[3])?,
            n_samples: fields[4].parse().map_err(|_| CsvError::BadField {
                line,
                field: "n_samples",
                value: fields[4].to_string(),
            })?,
            predicted_rate: float("predicted_rate", fields[5])?,
            fitted_rate: float("fitted_rate", fields[6])?,
            residual: float("residual", fields[7])?,
        });
    }
    if !saw_header {
        return Err(CsvError::MissingHeader);
    }
    Ok(rows)
}
