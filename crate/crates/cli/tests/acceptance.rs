//! End-to-end acceptance gate.
//!
//! One test per headline guarantee, each printing a PASS line with the
//! measured numbers (visible under `--nocapture`; assertion messages carry
//! the same numbers on failure). The two expensive studies are shared:
//! the white-noise strong study backs both the rate-band and the
//! scheme-ordering tests, and the weak study backs both the value and the
//! weak-rate tests. All seeds are fixed, so every number here is
//! reproducible bit for bit.

use std::sync::OnceLock;
use std::time::Instant;

use stochwave::experiments::{
    strong_study, weak_study, RateReport, StrongStudyConfig, WeakStudyConfig,
};
use stochwave::experiments::Functional;
use stochwave::selftest::run_selftest;

use stochwave_core::basis::StatePair;
use stochwave_core::integrator::{integrate, SchemeKind};
use stochwave_core::model::{preset, PresetOverrides};
use stochwave_core::noise::{sample_path, CovarianceSpec};

const DESK_MODES: usize = 256;
const DESK_REF_STEPS: usize = 2048;

fn strong_white_report() -> &'static RateReport {
    static REPORT: OnceLock<RateReport> = OnceLock::new();
    REPORT.get_or_init(|| {
        strong_study(&StrongStudyConfig {
            preset: "sine_gordon_strong_white".into(),
            n_modes: DESK_MODES,
            schemes: vec![SchemeKind::ExponentialEuler, SchemeKind::LinearImplicitEuler],
            coarse_steps: vec![32, 64, 128, 256],
            ref_scheme: SchemeKind::CrankNicolson,
            ref_steps: DESK_REF_STEPS,
            n_samples: 200,
            seed: 42,
            sup_norm: false,
            threads: None,
        })
        .expect("white-noise strong study")
    })
}

fn weak_report() -> &'static RateReport {
    static REPORT: OnceLock<RateReport> = OnceLock::new();
    REPORT.get_or_init(|| {
        weak_study(&WeakStudyConfig {
            preset: "sine_gordon_weak_additive".into(),
            n_modes: DESK_MODES,
            schemes: vec![SchemeKind::ExponentialEuler],
            step_counts: vec![8, 16, 32, 64],
            ref_scheme: SchemeKind::CrankNicolson,
            ref_steps: DESK_REF_STEPS,
            functional: Functional::PaperPhi,
            n_samples: 1000,
            seed: 7,
            coupled: true,
            threads: None,
        })
        .expect("weak study")
    })
}

/// The exponential scheme applies the exact linear propagator, so on the
/// homogeneous linear problem any step count reproduces the group solution.
#[test]
fn acceptance_linear_exactness() {
    let start = Instant::now();
    let problem = preset("linear_homogeneous", 64, PresetOverrides::default()).unwrap();
    let basis = problem.basis();
    let exact = basis.apply_group(problem.horizon_t(), problem.initial()).unwrap();

    let mut worst = 0.0f64;
    for m in [4usize, 64, 1024] {
        let tau = problem.horizon_t() / m as f64;
        let path = sample_path(&CovarianceSpec::zero(64), basis, m, tau, 0, 0).unwrap();
        let (state, _) =
            integrate(&problem, SchemeKind::ExponentialEuler, m, &path, false).unwrap();
        let diff = StatePair::new(
            stochwave_core::basis::Field::new(
                state
                    .u
                    .coeffs()
                    .iter()
                    .zip(exact.u.coeffs())
                    .map(|(a, b)| a - b)
                    .collect(),
                0.0,
            ),
            stochwave_core::basis::Field::new(
                state
                    .v
                    .coeffs()
                    .iter()
                    .zip(exact.v.coeffs())
                    .map(|(a, b)| a - b)
                    .collect(),
                -1.0,
            ),
        );
        worst = worst.max(basis.state_h_norm(&diff));
    }
    let elapsed = start.elapsed();
    assert!(
        worst <= 1e-10,
        "linear exactness: H-norm defect {worst:.3e} exceeds 1e-10"
    );
    assert!(
        elapsed.as_secs_f64() < 1.0,
        "linear exactness took {elapsed:?}, budget is 1 s"
    );
    println!(
        "PASS linear exactness — H-norm defect {worst:.3e} <= 1e-10 in {elapsed:?}"
    );
}

/// Space-time white noise: the exponential scheme's strong rate is 1/2 up
/// to arbitrarily small loss, measured here as a fitted slope in
/// [0.38, 0.62] at desk scale.
#[test]
fn acceptance_strong_rate_white_noise() {
    let report = strong_white_report();
    let fit = report
        .fit_for(SchemeKind::ExponentialEuler)
        .expect("rate fit exists");
    assert_eq!(report.n_blowups, 0, "no sample may blow up");
    assert!(
        fit.slope >= 0.38 && fit.slope <= 0.62,
        "white-noise strong rate: fitted slope {:.4} outside [0.38, 0.62]",
        fit.slope
    );
    // point estimates must not rise as tau halves (beyond twice their
    // standard errors), for every scheme in the study
    for &scheme in &[SchemeKind::ExponentialEuler, SchemeKind::LinearImplicitEuler] {
        let points: Vec<_> = report.points_for(scheme).collect();
        for pair in points.windows(2) {
            let (coarse, fine) = (pair[0], pair[1]);
            assert!(fine.tau < coarse.tau, "points are tau-descending");
            let slack = 2.0 * (fine.stderr.powi(2) + coarse.stderr.powi(2)).sqrt();
            assert!(
                fine.error <= coarse.error + slack,
                "{} error rose as tau halved: {:.4e} -> {:.4e} (slack {:.1e})",
                scheme.label(),
                coarse.error,
                fine.error,
                slack
            );
        }
    }
    println!(
        "PASS strong rate, white noise — fitted slope {:.4} in [0.38, 0.62]",
        fit.slope
    );
}

/// Trace-class noise (q_i = i^{-1.1}): strong order improves to 1, measured
/// as a fitted slope in [0.80, 1.15].
#[test]
fn acceptance_strong_rate_trace_class() {
    static REPORT: OnceLock<RateReport> = OnceLock::new();
    let report = REPORT.get_or_init(|| {
        strong_study(&StrongStudyConfig {
            preset: "sine_gordon_strong_trace".into(),
            n_modes: DESK_MODES,
            schemes: vec![SchemeKind::ExponentialEuler],
            coarse_steps: vec![32, 64, 128, 256],
            ref_scheme: SchemeKind::CrankNicolson,
            ref_steps: DESK_REF_STEPS,
            n_samples: 200,
            seed: 42,
            sup_norm: false,
            threads: None,
        })
        .expect("trace-class strong study")
    });
    let fit = report
        .fit_for(SchemeKind::ExponentialEuler)
        .expect("rate fit exists");
    assert_eq!(report.n_blowups, 0, "no sample may blow up");
    assert!(
        fit.slope >= 0.80 && fit.slope <= 1.15,
        "trace-class strong rate: fitted slope {:.4} outside [0.80, 1.15]",
        fit.slope
    );
    println!(
        "PASS strong rate, trace-class noise — fitted slope {:.4} in [0.80, 1.15]",
        fit.slope
    );
}

/// The exponential scheme's error sits below the implicit-Euler baseline at
/// every stepsize of the white-noise study, with at least two pooled
/// standard errors of separation at the two largest.
#[test]
fn acceptance_scheme_ordering() {
    let report = strong_white_report();
    let ee: Vec<_> = report.points_for(SchemeKind::ExponentialEuler).collect();
    let lie: Vec<_> = report.points_for(SchemeKind::LinearImplicitEuler).collect();
    assert_eq!(ee.len(), lie.len());
    let mut details = Vec::new();
    for k in 0..ee.len() {
        assert_eq!(ee[k].tau, lie[k].tau);
        assert!(
            ee[k].error < lie[k].error,
            "at tau {}: ee {:.4e} not below lie {:.4e}",
            ee[k].tau,
            ee[k].error,
            lie[k].error
        );
        if k < 2 {
            let pooled = (ee[k].stderr.powi(2) + lie[k].stderr.powi(2)).sqrt();
            let separation = (lie[k].error - ee[k].error) / pooled;
            assert!(
                separation >= 2.0,
                "at tau {}: ee {:.4e} vs lie {:.4e} separated by only {:.2} pooled se",
                ee[k].tau,
                ee[k].error,
                lie[k].error,
                separation
            );
            details.push(format!("tau {}: {:.1} se", ee[k].tau, separation));
        }
    }
    println!("PASS scheme ordering — exponential beats implicit Euler ({})", details.join("; "));
}

/// The weak study's reference estimate and the exponential scheme's
/// per-stepsize functional estimates land within +-0.15 of their expected
/// values for E[phi(u(1))].
#[test]
fn acceptance_weak_values() {
    let report = weak_report();
    let weak = report.weak.as_ref().unwrap();
    assert_eq!(report.n_blowups, 0, "no sample may blow up");

    let reference_target = -4.92169;
    let dev = (weak.reference_mean - reference_target).abs();
    assert!(
        dev <= 0.15,
        "reference estimate {:.5} is {dev:.3} from {reference_target} (tolerance 0.15)",
        weak.reference_mean
    );

    let targets = [
        (0.125, -4.89865),
        (0.0625, -4.90763),
        (0.03125, -4.91620),
        (0.015625, -4.91888),
    ];
    let mut details = vec![format!("ref {:.4}", weak.reference_mean)];
    for (tau, target) in targets {
        let value = weak
            .values
            .iter()
            .find(|v| v.scheme == SchemeKind::ExponentialEuler && v.tau == tau)
            .unwrap_or_else(|| panic!("value at tau {tau}"));
        let dev = (value.mean - target).abs();
        assert!(
            dev <= 0.15,
            "at tau {tau}: estimate {:.5} is {dev:.3} from {target} (tolerance 0.15)",
            value.mean
        );
        details.push(format!("tau {tau}: {:.4}", value.mean));
    }
    println!(
        "PASS weak values — all within +-0.15 of expected ({})",
        details.join(", ")
    );
}

/// Coupled weak differences for the exponential scheme decay with fitted
/// slope in [0.75, 1.2] — weak order 1 up to arbitrarily small loss.
#[test]
fn acceptance_weak_rate() {
    let report = weak_report();
    let fit = report
        .fit_for(SchemeKind::ExponentialEuler)
        .expect("rate fit exists");
    assert!(
        fit.slope >= 0.75 && fit.slope <= 1.2,
        "weak rate: fitted slope {:.4} outside [0.75, 1.2]",
        fit.slope
    );
    println!("PASS weak rate — fitted slope {:.4} in [0.75, 1.2]", fit.slope);
}

/// The invariant suite runs clean in under 30 seconds and covers exactly
/// the advertised checks.
#[test]
fn acceptance_selftest_suite() {
    let start = Instant::now();
    let report = run_selftest();
    let elapsed = start.elapsed();

    let expected = [
        "trigonometric identity",
        "group law",
        "H-norm isometry",
        "transform round-trip",
        "group difference bound",
        "energy conservation and dissipation",
        "exponential step forms",
        "additive diffusion reduction",
        "drift quadrature agreement",
        "coarsening exactness",
        "seed reproducibility",
    ];
    assert_eq!(report.checks.len(), expected.len());
    for (check, name) in report.checks.iter().zip(expected) {
        assert_eq!(check.name, name);
        assert!(
            check.result.is_ok(),
            "selftest check `{}` failed: {}",
            check.name,
            check.result.as_ref().unwrap_err()
        );
    }
    assert!(
        elapsed.as_secs_f64() < 30.0,
        "selftest took {elapsed:?}, budget is 30 s"
    );
    println!(
        "PASS selftest suite — {} checks green in {elapsed:?}",
        report.checks.len()
    );
}
