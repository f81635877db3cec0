//! Brute-force oracles and frozen reference values for the transform layer.
//!
//! Everything here is computed by a route independent of the library
//! internals: double-loop summation for the grid transforms, composite
//! Simpson quadrature for integrals, and closed-form constants frozen from
//! high-precision evaluation. The tolerances for collocation coefficients of
//! non-resolved functions were measured once and fixed; they bound aliasing,
//! not rounding.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use stochwave_core::basis::{Field, SpectralBasis};
use stochwave_core::quad::simpson;

/// value_j = Σ_i c_i √2 sin(iπ j/(N+1)), summed term by term.
fn brute_to_grid(coeffs: &[f64]) -> Vec<f64> {
    let n = coeffs.len();
    (1..=n)
        .map(|j| {
            let xi = j as f64 / (n + 1) as f64;
            (1..=n)
                .map(|i| coeffs[i - 1] * f64::sqrt(2.0) * (i as f64 * PI * xi).sin())
                .sum()
        })
        .collect()
}

/// c_i = (√2/(N+1)) Σ_j v_j sin(iπ j/(N+1)), summed term by term.
fn brute_from_grid(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    (1..=n)
        .map(|i| {
            let s: f64 = (1..=n)
                .map(|j| values[j - 1] * (i as f64 * PI * j as f64 / (n + 1) as f64).sin())
                .sum();
            f64::sqrt(2.0) / (n + 1) as f64 * s
        })
        .collect()
}

/// Sine coefficients ∫₀¹ w(ξ) √2 sin(iπξ) dξ by composite Simpson.
fn quad_coefficient(w: impl Fn(f64) -> f64, i: usize) -> f64 {
    simpson(|x| w(x) * f64::sqrt(2.0) * (i as f64 * PI * x).sin(), 0.0, 1.0, 4096)
}

/// ⟨cos(ξ), e_i⟩ for i = 1..8: √2·iπ(1 − (−1)^i cos 1)/(i²π² − 1), frozen.
const COS_XI_COEFFS: [f64; 8] = [
    0.77155446002834666,
    0.10615733021920832,
    0.2337581779957618,
    0.052063865093103335,
    0.1392402492533501,
    0.034586788275182392,
    0.099259482254816983,
    0.025908099647328769,
];

/// ⟨e_1², e_i⟩ for odd i: −8√2/(πi(i²−4)); even coefficients vanish. Frozen.
const E1_SQUARED_COEFFS: [(usize, f64); 4] = [
    (1, 1.2004217548761414),
    (3, -0.24008435097522829),
    (5, -0.034297764425032612),
    (7, -0.011432588141677537),
];

fn random_coeffs(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

#[test]
fn to_grid_matches_double_loop() {
    for &n in &[1usize, 4, 8, 33] {
        let basis = SpectralBasis::new(n).unwrap();
        let coeffs = random_coeffs(n, 7 + n as u64);
        let field = Field::new(coeffs.clone(), 0.0);
        let values = basis.to_grid(&field).unwrap();
        let oracle = brute_to_grid(&coeffs);
        for (a, b) in values.iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-13, "n={n}: {a} vs {b}");
        }
    }
}

#[test]
fn from_grid_matches_double_loop() {
    for &n in &[1usize, 4, 8, 33] {
        let basis = SpectralBasis::new(n).unwrap();
        let values = random_coeffs(n, 100 + n as u64);
        let field = basis.from_grid(&values).unwrap();
        let oracle = brute_from_grid(&values);
        for (a, b) in field.coeffs().iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-13, "n={n}: {a} vs {b}");
        }
    }
}

#[test]
fn discrete_sine_orthogonality_constant() {
    // Σ_j sin(iπξ_j) sin(kπξ_j) = (N+1)/2 δ_ik, checked by direct summation.
    let n = 9;
    for i in 1..=n {
        for k in 1..=n {
            let s: f64 = (1..=n)
                .map(|j| {
                    let xi = j as f64 / (n + 1) as f64;
                    (i as f64 * PI * xi).sin() * (k as f64 * PI * xi).sin()
                })
                .sum();
            let expect = if i == k { (n + 1) as f64 / 2.0 } else { 0.0 };
            assert!((s - expect).abs() < 1e-12, "i={i} k={k}: {s}");
        }
    }
}

#[test]
fn cos_xi_frozen_values_match_quadrature() {
    // The frozen closed-form constants agree with an independent integral.
    for (idx, &frozen) in COS_XI_COEFFS.iter().enumerate() {
        let q = quad_coefficient(|x| x.cos(), idx + 1);
        assert!((q - frozen).abs() < 1e-12, "i={}: {q} vs {frozen}", idx + 1);
    }
}

#[test]
fn from_grid_approaches_integral_coefficients() {
    // cos(ξ) violates the Dirichlet boundary values, so its collocation
    // coefficients carry O(1/N) aliasing; measured: 9.5e-4 at N=64,
    // 6.1e-5 at N=256.
    for (n, tol) in [(64usize, 2e-3), (256, 2e-4)] {
        let basis = SpectralBasis::new(n).unwrap();
        let values: Vec<f64> = basis.collocation_points().iter().map(|x| x.cos()).collect();
        let field = basis.from_grid(&values).unwrap();
        for (idx, &frozen) in COS_XI_COEFFS.iter().enumerate() {
            let got = field.coeffs()[idx];
            assert!(
                (got - frozen).abs() < tol,
                "N={n} i={}: {got} vs {frozen}",
                idx + 1
            );
        }
    }
}

#[test]
fn smooth_product_coefficients_match_quadrature() {
    // e_1² = 2 sin²(πξ) respects the boundary, so collocation converges fast;
    // at N=64 the frozen integrals are reproduced to 1e-6.
    let n = 64;
    let basis = SpectralBasis::new(n).unwrap();
    let values: Vec<f64> = basis
        .collocation_points()
        .iter()
        .map(|x| 2.0 * (PI * x).sin().powi(2))
        .collect();
    let field = basis.from_grid(&values).unwrap();
    for &(i, frozen) in &E1_SQUARED_COEFFS {
        let got = field.coeffs()[i - 1];
        assert!((got - frozen).abs() < 1e-6, "i={i}: {got} vs {frozen}");
    }
    // even modes vanish by symmetry
    for i in [2usize, 4, 6] {
        assert!(field.coeffs()[i - 1].abs() < 1e-12);
    }
}

#[test]
fn parseval_against_direct_sums() {
    // ‖c‖₂² = (1/(N+1)) Σ_j values_j², both sides by direct summation.
    let n = 5;
    let basis = SpectralBasis::new(n).unwrap();
    let coeffs = random_coeffs(n, 11);
    let values = basis.to_grid(&Field::new(coeffs.clone(), 0.0)).unwrap();
    let lhs: f64 = coeffs.iter().map(|c| c * c).sum();
    let rhs: f64 = values.iter().map(|v| v * v).sum::<f64>() / (n + 1) as f64;
    assert!((lhs - rhs).abs() < 1e-12, "{lhs} vs {rhs}");
}
