//! Command-line front end: resolves the invocation, dispatches to the
//! experiment harness, and writes CSV/plot artifacts.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;

use stochwave::config::{self, Command, RunConfig};
use stochwave::csvio;
use stochwave::experiments::{
    strong_study, weak_study, RateReport, StrongStudyConfig, WeakStudyConfig,
};
use stochwave::pathdump;
use stochwave::plot;
use stochwave::selftest::run_selftest;

use stochwave_core::integrator::{integrate, Trajectory};
use stochwave_core::model::{preset, PresetOverrides};
use stochwave_core::noise::sample_path;

fn main() -> ExitCode {
    let config = match config::parse_invocation(std::env::args_os()) {
        Ok(config) => config,
        Err(e) => {
            // clap errors carry their own usage text and exit semantics
            if let Some(clap_err) = e.downcast_ref::<clap::Error>() {
                let _ = clap_err.print();
                return if clap_err.use_stderr() { ExitCode::FAILURE } else { ExitCode::SUCCESS };
            }
            eprintln!("error: {e:#}");
            return ExitCode::FAILURE;
        }
    };
    match run(&config) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(config: &RunConfig) -> anyhow::Result<ExitCode> {
    match config.command {
        Command::Selftest => {
            let report = run_selftest();
            print!("{}", report.render());
            Ok(if report.all_passed() { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
        Command::Simulate => simulate(config),
        Command::StrongRate => {
            config::check_output_writable(&config.output)?;
            let report = strong_study(&StrongStudyConfig {
                preset: config.preset.clone(),
                n_modes: config.n_modes,
                schemes: config.schemes.clone(),
                coarse_steps: config.steps.clone(),
                ref_scheme: config.ref_scheme,
                ref_steps: config.ref_steps,
                n_samples: config.samples,
                seed: config.seed,
                sup_norm: config.sup_norm,
                threads: config.threads,
            })?;
            emit_report(config, &report)?;
            print!("{}", render_report(&report));
            Ok(ExitCode::SUCCESS)
        }
        Command::WeakRate | Command::Table1 => {
            config::check_output_writable(&config.output)?;
            warn_unsettled_trace(config);
            let report = weak_study(&WeakStudyConfig {
                preset: config.preset.clone(),
                n_modes: config.n_modes,
                schemes: config.schemes.clone(),
                step_counts: config.steps.clone(),
                ref_scheme: config.ref_scheme,
                ref_steps: config.ref_steps,
                functional: config.functional.clone(),
                n_samples: config.samples,
                seed: config.seed,
                coupled: config.coupled,
                threads: config.threads,
            })?;
            emit_report(config, &report)?;
            if config.command == Command::Table1 {
                print!("{}", render_table(&report));
            } else {
                print!("{}", render_report(&report));
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

/// The additive weak regime needs the trace Σ q_i λ_i^{β−1} to converge;
/// on the truncated basis that shows up as the partial sums plateauing.
/// Warn when they have not (white noise at β = ½ is the borderline case),
/// so truncation-sensitive weak values are not over-trusted.
fn warn_unsettled_trace(config: &RunConfig) {
    // a bad preset name is reported by the study itself
    let Ok(problem) = preset(&config.preset, config.n_modes, PresetOverrides::default())
    else {
        return;
    };
    let diag = problem.covariance().trace_diagnostic(problem.basis());
    if !diag.plateaued {
        eprintln!(
            "warning: noise trace partial sums still moving at N={} (tail fraction {:.2}); \
             the regularity exponent is borderline and weak values may shift with resolution",
            config.n_modes, diag.tail_fraction
        );
    }
}

/// One path, one scheme, final-state functionals. `--steps 0` prints the
/// functionals of the initial state without touching the integrator.
fn simulate(config: &RunConfig) -> anyhow::Result<ExitCode> {
    let problem = preset(&config.preset, config.n_modes, PresetOverrides::default())?;
    let scheme = config.schemes[0];
    let n_steps = config.steps[0];
    println!(
        "preset {}  scheme {}  steps {}  modes {}  seed {}",
        config.preset, scheme, n_steps, config.n_modes, config.seed
    );

    let final_state;
    if n_steps == 0 {
        final_state = problem.initial().clone();
        if let Some(dump) = &config.dump_trajectory {
            let traj =
                Trajectory { times: vec![0.0], states: vec![final_state.clone()] };
            csvio::write_trajectory(dump, &traj)
                .with_context(|| format!("writing {}", dump.display()))?;
            println!("trajectory dumped to {}", dump.display());
        }
    } else {
        let tau = problem.horizon_t() / n_steps as f64;
        let path = sample_path(
            problem.covariance(),
            problem.basis(),
            n_steps,
            tau,
            config.seed,
            0,
        )?;
        if let Some(dump) = &config.dump_path {
            let file = std::fs::File::create(dump)
                .with_context(|| format!("cannot create {}", dump.display()))?;
            pathdump::write_path(std::io::BufWriter::new(file), &path)?;
            println!("path dumped to {}", dump.display());
        }
        let record = config.dump_trajectory.is_some();
        let (state, trajectory) = integrate(&problem, scheme, n_steps, &path, record)?;
        if let (Some(dump), Some(traj)) = (&config.dump_trajectory, &trajectory) {
            csvio::write_trajectory(dump, traj)
                .with_context(|| format!("writing {}", dump.display()))?;
            println!("trajectory dumped to {}", dump.display());
        }
        final_state = state;
    }

    let u_hat = final_state.u.coeffs();
    println!("paper_phi = {}", stochwave::experiments::Functional::PaperPhi.eval(u_hat));
    println!("h_norm_sq = {}", stochwave::experiments::Functional::HNormSq.eval(u_hat));
    println!("state_h_norm = {}", problem.basis().state_h_norm(&final_state));
    Ok(ExitCode::SUCCESS)
}

fn unix_now() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

fn sibling_path(output: &Path, suffix: &str, extension: &str) -> PathBuf {
    let stem = output.file_stem().and_then(|s| s.to_str()).unwrap_or("report");
    output.with_file_name(format!("{stem}{suffix}.{extension}"))
}

/// Writes the CSV (and the sup-norm diagnostic CSV and gnuplot script when
/// requested) next to the configured output path.
fn emit_report(config: &RunConfig, report: &RateReport) -> anyhow::Result<()> {
    let timestamp = config.timestamp.then(unix_now);
    let rows = csvio::rows_from_report(report);
    csvio::write_csv(&config.output, &rows, timestamp)
        .with_context(|| format!("writing {}", config.output.display()))?;
    println!("wrote {}", config.output.display());

    if let Some(sup_rows) = csvio::sup_rows_from_report(report) {
        let sup_path = sibling_path(&config.output, "_sup", "csv");
        csvio::write_csv(&sup_path, &sup_rows, timestamp)
            .with_context(|| format!("writing {}", sup_path.display()))?;
        println!("wrote {}", sup_path.display());
    }

    if config.emit_plot {
        let plot_path = sibling_path(&config.output, "", "gnuplot");
        let csv_name = config
            .output
            .file_name()
            .and_then(|s| s.to_str())
            .unwrap_or("report.csv");
        std::fs::write(&plot_path, plot::gnuplot_script(csv_name, report))
            .with_context(|| format!("writing {}", plot_path.display()))?;
        println!("wrote {}", plot_path.display());
    }
    Ok(())
}

/// Human-readable study summary: per-scheme fits against theory, then the
/// per-stepsize error table.
fn render_report(report: &RateReport) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "preset {}  samples {}  blowups {}\n",
        report.preset, report.n_samples, report.n_blowups
    ));
    if let Some(weak) = &report.weak {
        out.push_str(&format!(
            "functional {} ({}); reference estimate {:.6} +- {:.6}\n",
            weak.functional,
            if weak.coupled { "coupled differences" } else { "independent paths" },
            weak.reference_mean,
            weak.reference_stderr,
        ));
    }
    for fit in &report.fits {
        match &fit.fit {
            Some(f) => out.push_str(&format!(
                "{:>3}: fitted rate {:.4} (predicted {:.2}, residual {:.2e})\n",
                fit.scheme.label(),
                f.slope,
                report.predicted_rate,
                f.residual
            )),
            None => out.push_str(&format!(
                "{:>3}: no fit (fewer than two positive-error points)\n",
                fit.scheme.label()
            )),
        }
    }
    out.push_str("scheme        tau        error      stderr\n");
    for p in &report.points {
        out.push_str(&format!(
            "{:>6} {:>10.6} {:>12.6e} {:>10.3e}\n",
            p.scheme.label(),
            p.tau,
            p.error,
            p.stderr
        ));
    }
    if let Some(weak) = &report.weak {
        out.push_str("scheme        tau   E[phi(u_M)]     stderr\n");
        for v in &weak.values {
            out.push_str(&format!(
                "{:>6} {:>10.6} {:>12.6} {:>10.3e}\n",
                v.scheme.label(),
                v.tau,
                v.mean,
                v.stderr
            ));
        }
    }
    out
}

/// Table-shaped weak summary: one row per stepsize, one column per scheme.
fn render_table(report: &RateReport) -> String {
    let weak = report.weak.as_ref().expect("table comes from a weak study");
    let mut out = String::new();
    out.push_str(&format!(
        "E[phi(u(T))] reference estimate: {:.5} +- {:.5}  ({} samples",
        weak.reference_mean, weak.reference_stderr, report.n_samples
    ));
    if report.n_blowups > 0 {
        out.push_str(&format!(", {} blowups", report.n_blowups));
    }
    out.push_str(")\n\n");

    let schemes: Vec<_> = report.fits.iter().map(|f| f.scheme).collect();
    out.push_str(&format!("{:>12}", "tau"));
    for scheme in &schemes {
        out.push_str(&format!(" {:>14}", scheme.label()));
    }
    out.push('\n');

    let mut taus: Vec<f64> = weak.values.iter().map(|v| v.tau).collect();
    taus.sort_by(|a, b| b.partial_cmp(a).expect("finite taus"));
    taus.dedup();
    for tau in taus {
        out.push_str(&format!("{tau:>12.6}"));
        for scheme in &schemes {
            let value = weak
                .values
                .iter()
                .find(|v| v.scheme == *scheme && v.tau == tau)
                .map(|v| format!("{:>14.5}", v.mean))
                .unwrap_or_else(|| format!("{:>14}", "-"));
            out.push_str(&value);
        }
        out.push('\n');
    }
    out
}
