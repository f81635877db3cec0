//! Gnuplot script emission for rate reports.
//!
//! The artifact is a plain script next to the CSV, never an image: log-log
//! axes, one series per scheme filtered out of the shared CSV by its label,
//! and reference guide lines of slope ½ and 1 anchored at the first scheme's
//! largest-stepsize point.

use crate::experiments::RateReport;

/// Builds a gnuplot script plotting `csv_name` (a path relative to wherever
/// the script is run). Deterministic: depends only on the report and name.
pub fn gnuplot_script(csv_name: &str, report: &RateReport) -> String {
    let mut s = String::new();
    s.push_str("# gnuplot script; run as: gnuplot -p this_file\n");
    s.push_str("set datafile separator \",\"\n");
    s.push_str("set logscale xy\n");
    s.push_str("set xlabel \"stepsize tau\"\n");
    s.push_str("set ylabel \"error\"\n");
    s.push_str("set key left top\n");
    s.push_str(&format!("set title \"{} (predicted rate {})\"\n", report.preset, report.predicted_rate));

    // Guide lines pass through the first scheme's largest-tau point.
    let anchor = report
        .points
        .iter()
        .filter(|p| p.error > 0.0)
        .reduce(|a, b| if b.tau > a.tau { b } else { a });
    let mut clauses: Vec<String> = Vec::new();
    for fit in &report.fits {
        let label = fit.scheme.label();
        let title = match &fit.fit {
            Some(f) => format!("{} (fitted {:.3})", label, f.slope),
            None => label.to_string(),
        };
        clauses.push(format!(
            "'{csv_name}' using (strcol(1) eq \"{label}\" ? $2 : NaN):3 \\\n    with linespoints title \"{title}\""
        ));
    }
    if let Some(p) = anchor {
        let c_half = p.error / p.tau.sqrt();
        let c_one = p.error / p.tau;
        clauses.push(format!("{c_half} * x**0.5 with lines dashtype 2 title \"slope 1/2\""));
        clauses.push(format!("{c_one} * x with lines dashtype 3 title \"slope 1\""));
    }
    s.push_str("plot ");
    s.push_str(&clauses.join(", \\\n     "));
    s.push('\n');
    s
}
