//! Monte Carlo convergence studies.
//!
//! Strong studies measure the root-mean-square distance at the final time
//! between a scheme run at coarse stepsizes and a fine-step reference run,
//! with every stepsize driven by the same Brownian path (the fine path is
//! coarsened, so all discrete solutions are functionals of one noise
//! realization). Weak studies estimate expectations of test functionals,
//! by default as coupled differences against the reference on shared paths
//! — at realistic sample counts the raw weak error drowns in Monte Carlo
//! noise otherwise. Both report per-stepsize errors with standard errors
//! and a least-squares rate fit in log-log coordinates.
//!
//! Samples are independent work units keyed by `sample_index`; the per-sample
//! results are collected in index order and reduced sequentially, so reports
//! are bit-identical for a fixed config and seed no matter the thread count.

use rayon::prelude::*;
use stochwave_core::basis::SpectralBasis;
use stochwave_core::integrator::{integrate_observed, SchemeKind};
use stochwave_core::model::{preset, PresetOverrides, Problem};
use stochwave_core::noise::{coarsen, sample_path};

/// Failure modes of study setup, fitting, and execution.
#[derive(Debug, thiserror::Error)]
pub enum StudyError {
    #[error(transparent)]
    Core(#[from] stochwave_core::Error),
    #[error("reference step count {m_ref} is not divisible by coarse step count {m}")]
    Divisibility { m_ref: usize, m: usize },
    #[error("need at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("study grid is empty: no {0}")]
    EmptyGrid(&'static str),
    #[error("rate fit needs at least 2 points, got {0}")]
    TooFewPoints(usize),
    #[error("rate fit requires positive {0}")]
    FitDomain(&'static str),
    #[error("rate fit abscissas are all equal")]
    DegenerateFit,
    #[error("unknown functional `{0}` (expected paper_phi, h_norm_sq, or mode_k(k))")]
    UnknownFunctional(String),
    #[error("functional needs mode {k} but the basis has {n_modes} modes")]
    FunctionalOutOfRange { k: usize, n_modes: usize },
    #[error("{blown} of {total} samples left the finite range (budget is 1%)")]
    BlowupBudget { blown: usize, total: usize },
}

/// Test functionals of the displacement coefficients.
///
/// `paper_phi` is the weighted first-mode average 10∫₀¹u(ξ)sin(πξ)dξ, which
/// collapses to (10/√2)·û₁ by orthogonality — no quadrature involved.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Functional {
    PaperPhi,
    HNormSq,
    ModeK(usize),
}

impl Functional {
    /// Accepts `paper_phi`, `h_norm_sq`, `mode_k(k)` with k ≥ 1.
    pub fn parse(name: &str) -> Result<Self, StudyError> {
        let name = name.trim();
        match name {
            "paper_phi" => return Ok(Self::PaperPhi),
            "h_norm_sq" => return Ok(Self::HNormSq),
            _ => {}
        }
        if let Some(inner) = name.strip_prefix("mode_k(").and_then(|r| r.strip_suffix(')')) {
            if let Ok(k) = inner.trim().parse::<usize>() {
                if k >= 1 {
                    return Ok(Self::ModeK(k));
                }
            }
        }
        Err(StudyError::UnknownFunctional(name.into()))
    }

    pub fn name(&self) -> String {
        match self {
            Self::PaperPhi => "paper_phi".into(),
            Self::HNormSq => "h_norm_sq".into(),
            Self::ModeK(k) => format!("mode_k({k})"),
        }
    }

    /// Rejects mode indices beyond the basis dimension.
    pub fn validate(&self, n_modes: usize) -> Result<(), StudyError> {
        match self {
            Self::ModeK(k) if *k > n_modes => {
                Err(StudyError::FunctionalOutOfRange { k: *k, n_modes })
            }
            _ => Ok(()),
        }
    }

    pub fn eval(&self, u_hat: &[f64]) -> f64 {
        match self {
            Self::PaperPhi => 10.0 / std::f64::consts::SQRT_2 * u_hat.first().copied().unwrap_or(0.0),
            Self::HNormSq => u_hat.iter().map(|c| c * c).sum(),
            Self::ModeK(k) => u_hat.get(k - 1).copied().unwrap_or(0.0),
        }
    }
}

/// Named-functional evaluation against a basis-sized coefficient vector.
pub fn evaluate_functional(
    name: &str,
    basis: &SpectralBasis,
    u_hat: &[f64],
) -> Result<f64, StudyError> {
    if u_hat.len() != basis.n_modes() {
        return Err(stochwave_core::Error::DimensionMismatch {
            expected: basis.n_modes(),
            got: u_hat.len(),
        }
        .into());
    }
    let functional = Functional::parse(name)?;
    functional.validate(basis.n_modes())?;
    Ok(functional.eval(u_hat))
}

/// Ordinary least squares in log-log coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fit {
    pub slope: f64,
    /// Residual sum of squares of log errors about the fitted line.
    pub residual: f64,
}

/// Fits log(error) = a + slope·log(tau). All inputs must be positive and at
/// least two points are required.
pub fn fit_rate(taus: &[f64], errors: &[f64]) -> Result<Fit, StudyError> {
    if taus.len() != errors.len() {
        return Err(stochwave_core::Error::DimensionMismatch {
            expected: taus.len(),
            got: errors.len(),
        }
        .into());
    }
    if taus.len() < 2 {
        return Err(StudyError::TooFewPoints(taus.len()));
    }
    if taus.iter().any(|&t| !(t > 0.0)) {
        return Err(StudyError::FitDomain("stepsizes"));
    }
    if errors.iter().any(|&e| !(e > 0.0)) {
        return Err(StudyError::FitDomain("errors"));
    }
    let xs: Vec<f64> = taus.iter().map(|t| t.ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let n = xs.len() as f64;
    let x_bar = xs.iter().sum::<f64>() / n;
    let y_bar = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - x_bar) * (x - x_bar)).sum();
    if sxx == 0.0 {
        return Err(StudyError::DegenerateFit);
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - x_bar) * (y - y_bar)).sum();
    let slope = sxy / sxx;
    let intercept = y_bar - slope * x_bar;
    let residual = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let r = y - (intercept + slope * x);
            r * r
        })
        .sum();
    Ok(Fit { slope, residual })
}

/// Strong-study parameters: which schemes to run at which coarse step
/// counts against which reference, and how many Monte Carlo samples.
#[derive(Debug, Clone)]
pub struct StrongStudyConfig {
    pub preset: String,
    pub n_modes: usize,
    pub schemes: Vec<SchemeKind>,
    pub coarse_steps: Vec<usize>,
    pub ref_scheme: SchemeKind,
    pub ref_steps: usize,
    pub n_samples: usize,
    pub seed: u64,
    /// Also track the sup over the coarse time grid of the pathwise error
    /// (a diagnostic; the headline error is at the final time only).
    pub sup_norm: bool,
    /// Cap on rayon workers; `None` uses the global pool.
    pub threads: Option<usize>,
}

/// Weak-study parameters. With `coupled` set (the default mode), each coarse
/// run is differenced against the reference on the same Brownian path; with
/// it unset every (scheme, stepsize) cell draws independent paths.
#[derive(Debug, Clone)]
pub struct WeakStudyConfig {
    pub preset: String,
    pub n_modes: usize,
    pub schemes: Vec<SchemeKind>,
    pub step_counts: Vec<usize>,
    pub ref_scheme: SchemeKind,
    pub ref_steps: usize,
    pub functional: Functional,
    pub n_samples: usize,
    pub seed: u64,
    pub coupled: bool,
    pub threads: Option<usize>,
}

/// One (scheme, stepsize) cell of a study: error estimate and its Monte
/// Carlo standard error.
#[derive(Debug, Clone, PartialEq)]
pub struct RatePoint {
    pub scheme: SchemeKind,
    pub tau: f64,
    pub error: f64,
    pub stderr: f64,
    pub n_samples: usize,
}

/// Per-scheme log-log fit over that scheme's rate points; absent when fewer
/// than two points had positive error (e.g. a self-comparison).
#[derive(Debug, Clone, PartialEq)]
pub struct SchemeFit {
    pub scheme: SchemeKind,
    pub fit: Option<Fit>,
}

/// Per-cell functional estimate from a weak study.
#[derive(Debug, Clone, PartialEq)]
pub struct WeakValue {
    pub scheme: SchemeKind,
    pub tau: f64,
    pub mean: f64,
    pub stderr: f64,
}

/// Weak-study extras: the functional's reference estimate and the raw
/// per-cell estimates backing the difference errors.
#[derive(Debug, Clone, PartialEq)]
pub struct WeakSummary {
    pub functional: String,
    pub coupled: bool,
    pub reference_mean: f64,
    pub reference_stderr: f64,
    pub values: Vec<WeakValue>,
}

/// Study output: rate points in scheme-major order, per-scheme fits, the
/// theory-predicted rate for the preset's noise regime, and the blowup count
/// (samples that left the finite range and were excluded).
#[derive(Debug, Clone, PartialEq)]
pub struct RateReport {
    pub preset: String,
    pub predicted_rate: f64,
    pub points: Vec<RatePoint>,
    pub fits: Vec<SchemeFit>,
    pub n_samples: usize,
    pub n_blowups: usize,
    /// Sup-over-grid diagnostic points, present when requested.
    pub sup_points: Option<Vec<RatePoint>>,
    pub weak: Option<WeakSummary>,
}

impl RateReport {
    pub fn fit_for(&self, scheme: SchemeKind) -> Option<&Fit> {
        self.fits
            .iter()
            .find(|f| f.scheme == scheme)
            .and_then(|f| f.fit.as_ref())
    }

    pub fn points_for(&self, scheme: SchemeKind) -> impl Iterator<Item = &RatePoint> {
        self.points.iter().filter(move |p| p.scheme == scheme)
    }
}

fn with_pool<R: Send>(threads: Option<usize>, f: impl FnOnce() -> R + Send) -> R {
    match threads {
        None => f(),
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build()
            .expect("worker pool")
            .install(f),
    }
}

fn is_blowup(err: &stochwave_core::Error) -> bool {
    matches!(err, stochwave_core::Error::NonFinite { .. })
}

/// Mean and standard error of the mean, with Bessel's correction. Returns
/// zero standard error for constant samples.
fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// RMS of squared errors with the delta-method standard error:
/// se(√m̄) ≈ sd(m)/(2√m̄ √n). Exact zeros (self-comparisons) get se 0.
fn rms_and_se(sq_errors: &[f64]) -> (f64, f64) {
    let (mean, se_of_mean) = mean_and_se(sq_errors);
    let rms = mean.max(0.0).sqrt();
    if rms == 0.0 {
        return (0.0, 0.0);
    }
    (rms, se_of_mean / (2.0 * rms))
}

fn fits_from_points(
    schemes: &[SchemeKind],
    points: &[RatePoint],
) -> Result<Vec<SchemeFit>, StudyError> {
    let mut fits = Vec::with_capacity(schemes.len());
    for &scheme in schemes {
        let (taus, errors): (Vec<f64>, Vec<f64>) = points
            .iter()
            .filter(|p| p.scheme == scheme && p.error > 0.0)
            .map(|p| (p.tau, p.error))
            .unzip();
        let fit = if taus.len() >= 2 { Some(fit_rate(&taus, &errors)?) } else { None };
        fits.push(SchemeFit { scheme, fit });
    }
    Ok(fits)
}

struct StrongSampleOut {
    /// Squared final-time errors, scheme-major over the step grid.
    err2: Vec<f64>,
    /// Squared sup-over-grid errors (empty unless requested).
    sup2: Vec<f64>,
    blown: bool,
}

/// Runs the strong study for a named preset.
pub fn strong_study(config: &StrongStudyConfig) -> Result<RateReport, StudyError> {
    let problem = preset(&config.preset, config.n_modes, PresetOverrides::default())?;
    strong_study_with(&problem, config)
}

/// Runs the strong study against an explicit problem (the preset name in the
/// config is used only for labeling).
pub fn strong_study_with(
    problem: &Problem,
    config: &StrongStudyConfig,
) -> Result<RateReport, StudyError> {
    if config.schemes.is_empty() {
        return Err(StudyError::EmptyGrid("schemes"));
    }
    if config.coarse_steps.is_empty() {
        return Err(StudyError::EmptyGrid("step counts"));
    }
    if config.n_samples < 2 {
        return Err(StudyError::TooFewSamples(config.n_samples));
    }
    for &m in &config.coarse_steps {
        if m == 0 || config.ref_steps % m != 0 {
            return Err(StudyError::Divisibility { m_ref: config.ref_steps, m });
        }
    }

    let t = problem.horizon_t();
    let dt_fine = t / config.ref_steps as f64;
    let n_cells = config.schemes.len() * config.coarse_steps.len();

    // Reference states are only stored at coarse grid times, and only when
    // the sup diagnostic needs them.
    let mut needed = vec![false; config.ref_steps + 1];
    if config.sup_norm {
        for &m_k in &config.coarse_steps {
            let factor = config.ref_steps / m_k;
            for m in 1..=m_k {
                needed[m * factor] = true;
            }
        }
    }

    let run_sample = |s: usize| -> Result<StrongSampleOut, StudyError> {
        let blown_out = || StrongSampleOut { err2: Vec::new(), sup2: Vec::new(), blown: true };
        let fine = sample_path(
            problem.covariance(),
            problem.basis(),
            config.ref_steps,
            dt_fine,
            config.seed,
            s as u64,
        )?;

        let mut ref_store: Vec<Option<Vec<f64>>> = vec![None; config.ref_steps + 1];
        let ref_final = match integrate_observed(
            problem,
            config.ref_scheme,
            config.ref_steps,
            &fine,
            |m, u, _| {
                if needed[m] {
                    ref_store[m] = Some(u.to_vec());
                }
            },
        ) {
            Ok(x) => x,
            Err(e) if is_blowup(&e) => return Ok(blown_out()),
            Err(e) => return Err(e.into()),
        };
        let ref_u = ref_final.u.coeffs();

        let mut err2 = vec![0.0; n_cells];
        let mut sup2 = vec![0.0; if config.sup_norm { n_cells } else { 0 }];
        for (ki, &m_k) in config.coarse_steps.iter().enumerate() {
            let factor = config.ref_steps / m_k;
            let coarse = coarsen(&fine, factor)?;
            for (si, &scheme) in config.schemes.iter().enumerate() {
                let cell = si * config.coarse_steps.len() + ki;
                let mut running_sup = 0.0f64;
                let result = integrate_observed(problem, scheme, m_k, &coarse, |m, u, _| {
                    if config.sup_norm {
                        if let Some(ref_u_m) = &ref_store[m * factor] {
                            let d2: f64 = ref_u_m
                                .iter()
                                .zip(u)
                                .map(|(a, b)| (a - b) * (a - b))
                                .sum();
                            running_sup = running_sup.max(d2);
                        }
                    }
                });
                let final_state = match result {
                    Ok(x) => x,
                    Err(e) if is_blowup(&e) => return Ok(blown_out()),
                    Err(e) => return Err(e.into()),
                };
                let d2: f64 = ref_u
                    .iter()
                    .zip(final_state.u.coeffs())
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                err2[cell] = d2;
                if config.sup_norm {
                    sup2[cell] = running_sup.max(d2);
                }
            }
        }
        Ok(StrongSampleOut { err2, sup2, blown: false })
    };

    let outs: Vec<StrongSampleOut> = with_pool(config.threads, || {
        (0..config.n_samples)
            .into_par_iter()
            .map(run_sample)
            .collect::<Result<Vec<_>, StudyError>>()
    })?;

    // Sequential reduction in sample order: per-cell squared errors are
    // gathered and summarized with the delta method.
    let mut blowups = 0usize;
    let mut per_cell: Vec<Vec<f64>> = vec![Vec::new(); n_cells];
    let mut per_cell_sup: Vec<Vec<f64>> = vec![Vec::new(); n_cells];
    for out in &outs {
        if out.blown {
            blowups += 1;
            continue;
        }
        for cell in 0..n_cells {
            per_cell[cell].push(out.err2[cell]);
            if config.sup_norm {
                per_cell_sup[cell].push(out.sup2[cell]);
            }
        }
    }
    if blowups * 100 > config.n_samples {
        return Err(StudyError::BlowupBudget { blown: blowups, total: config.n_samples });
    }

    let point_of = |cell: usize, samples: &[f64]| {
        let si = cell / config.coarse_steps.len();
        let ki = cell % config.coarse_steps.len();
        let (error, stderr) = rms_and_se(samples);
        RatePoint {
            scheme: config.schemes[si],
            tau: t / config.coarse_steps[ki] as f64,
            error,
            stderr,
            n_samples: samples.len(),
        }
    };
    let points: Vec<RatePoint> =
        (0..n_cells).map(|cell| point_of(cell, &per_cell[cell])).collect();
    let sup_points = config
        .sup_norm
        .then(|| (0..n_cells).map(|cell| point_of(cell, &per_cell_sup[cell])).collect());

    let fits = fits_from_points(&config.schemes, &points)?;
    Ok(RateReport {
        preset: config.preset.clone(),
        predicted_rate: problem.covariance().predicted_strong_rate(),
        points,
        fits,
        n_samples: config.n_samples,
        n_blowups: blowups,
        sup_points,
        weak: None,
    })
}

struct WeakSampleOut {
    phi_ref: f64,
    /// Functional values, scheme-major over the step grid.
    phis: Vec<f64>,
    blown: bool,
}

/// Runs the weak study for a named preset.
pub fn weak_study(config: &WeakStudyConfig) -> Result<RateReport, StudyError> {
    let problem = preset(&config.preset, config.n_modes, PresetOverrides::default())?;
    weak_study_with(&problem, config)
}

/// Runs the weak study against an explicit problem.
pub fn weak_study_with(
    problem: &Problem,
    config: &WeakStudyConfig,
) -> Result<RateReport, StudyError> {
    if config.schemes.is_empty() {
        return Err(StudyError::EmptyGrid("schemes"));
    }
    if config.step_counts.is_empty() {
        return Err(StudyError::EmptyGrid("step counts"));
    }
    if config.n_samples < 2 {
        return Err(StudyError::TooFewSamples(config.n_samples));
    }
    config.functional.validate(problem.n_modes())?;
    if config.coupled {
        for &m in &config.step_counts {
            if m == 0 || config.ref_steps % m != 0 {
                return Err(StudyError::Divisibility { m_ref: config.ref_steps, m });
            }
        }
    } else if config.step_counts.contains(&0) {
        return Err(StudyError::Divisibility { m_ref: config.ref_steps, m: 0 });
    }

    let t = problem.horizon_t();
    let dt_fine = t / config.ref_steps as f64;
    let n_cells = config.schemes.len() * config.step_counts.len();
    let phi = &config.functional;

    let final_phi = |scheme: SchemeKind,
                     n_steps: usize,
                     path: &stochwave_core::noise::BrownianPath|
     -> Result<Option<f64>, StudyError> {
        match integrate_observed(problem, scheme, n_steps, path, |_, _, _| {}) {
            Ok(x) => Ok(Some(phi.eval(x.u.coeffs()))),
            Err(e) if is_blowup(&e) => Ok(None),
            Err(e) => Err(e.into()),
        }
    };

    let run_sample = |s: usize| -> Result<WeakSampleOut, StudyError> {
        let blown_out = || WeakSampleOut { phi_ref: 0.0, phis: Vec::new(), blown: true };
        let mut phis = vec![0.0; n_cells];
        let phi_ref;
        if config.coupled {
            // One fine path per sample; every cell sees a coarsening of it.
            let fine = sample_path(
                problem.covariance(),
                problem.basis(),
                config.ref_steps,
                dt_fine,
                config.seed,
                s as u64,
            )?;
            phi_ref = match final_phi(config.ref_scheme, config.ref_steps, &fine)? {
                Some(v) => v,
                None => return Ok(blown_out()),
            };
            for (ki, &m_k) in config.step_counts.iter().enumerate() {
                let coarse = coarsen(&fine, config.ref_steps / m_k)?;
                for (si, &scheme) in config.schemes.iter().enumerate() {
                    match final_phi(scheme, m_k, &coarse)? {
                        Some(v) => phis[si * config.step_counts.len() + ki] = v,
                        None => return Ok(blown_out()),
                    }
                }
            }
        } else {
            // Independent paths per cell: substreams are keyed by
            // (cell + 1, sample) so no two draws collide; the reference
            // owns the cell-0 slot.
            let ref_path = sample_path(
                problem.covariance(),
                problem.basis(),
                config.ref_steps,
                dt_fine,
                config.seed,
                s as u64,
            )?;
            phi_ref = match final_phi(config.ref_scheme, config.ref_steps, &ref_path)? {
                Some(v) => v,
                None => return Ok(blown_out()),
            };
            for (ki, &m_k) in config.step_counts.iter().enumerate() {
                for (si, &scheme) in config.schemes.iter().enumerate() {
                    let cell = si * config.step_counts.len() + ki;
                    let stream = ((cell as u64 + 1) << 32) | s as u64;
                    let path = sample_path(
                        problem.covariance(),
                        problem.basis(),
                        m_k,
                        t / m_k as f64,
                        config.seed,
                        stream,
                    )?;
                    match final_phi(scheme, m_k, &path)? {
                        Some(v) => phis[cell] = v,
                        None => return Ok(blown_out()),
                    }
                }
            }
        }
        Ok(WeakSampleOut { phi_ref, phis, blown: false })
    };

    let outs: Vec<WeakSampleOut> = with_pool(config.threads, || {
        (0..config.n_samples)
            .into_par_iter()
            .map(run_sample)
            .collect::<Result<Vec<_>, StudyError>>()
    })?;

    let mut blowups = 0usize;
    let mut refs: Vec<f64> = Vec::new();
    let mut per_cell: Vec<Vec<f64>> = vec![Vec::new(); n_cells];
    let mut per_cell_diff: Vec<Vec<f64>> = vec![Vec::new(); n_cells];
    for out in &outs {
        if out.blown {
            blowups += 1;
            continue;
        }
        refs.push(out.phi_ref);
        for cell in 0..n_cells {
            per_cell[cell].push(out.phis[cell]);
            per_cell_diff[cell].push(out.phi_ref - out.phis[cell]);
        }
    }
    if blowups * 100 > config.n_samples {
        return Err(StudyError::BlowupBudget { blown: blowups, total: config.n_samples });
    }

    // In coupled mode `phi_ref - phi` is a per-path difference whose variance
    // shrinks with tau; uncoupled it is a difference of independent draws and
    // the same reduction yields se² = se_ref² + se_cell², as it should.
    let (reference_mean, reference_stderr) = mean_and_se(&refs);
    let mut points = Vec::with_capacity(n_cells);
    let mut values = Vec::with_capacity(n_cells);
    for cell in 0..n_cells {
        let si = cell / config.step_counts.len();
        let ki = cell % config.step_counts.len();
        let scheme = config.schemes[si];
        let tau = t / config.step_counts[ki] as f64;
        let (mean_d, se_d) = mean_and_se(&per_cell_diff[cell]);
        let (mean, stderr) = mean_and_se(&per_cell[cell]);
        points.push(RatePoint {
            scheme,
            tau,
            error: mean_d.abs(),
            stderr: se_d,
            n_samples: per_cell[cell].len(),
        });
        values.push(WeakValue { scheme, tau, mean, stderr });
    }

    let fits = fits_from_points(&config.schemes, &points)?;
    Ok(RateReport {
        preset: config.preset.clone(),
        predicted_rate: problem.covariance().predicted_weak_rate(),
        points,
        fits,
        n_samples: config.n_samples,
        n_blowups: blowups,
        sup_points: None,
        weak: Some(WeakSummary {
            functional: phi.name(),
            coupled: config.coupled,
            reference_mean,
            reference_stderr,
            values,
        }),
    })
}
