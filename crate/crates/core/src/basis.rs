//! Dirichlet sine eigenbasis on (0,1) and the diagonal operator actions.
//!
//! Eigenpairs of the Dirichlet Laplacian Λ = −∂²/∂ξ²:
//!
//! ```text
//!     λ_i = π² i²,    e_i(ξ) = √2 sin(iπξ),    i = 1..N
//! ```
//!
//! Every operator in the model is diagonal here: Ḣ^γ norms weight mode i by
//! λ_i^γ, and the linear wave group acts per mode as the rotation
//!
//! ```text
//!     û'_i =  cos(t√λ_i) û_i + λ_i^{-1/2} sin(t√λ_i) v̂_i
//!     v̂'_i = -λ_i^{1/2} sin(t√λ_i) û_i + cos(t√λ_i) v̂_i
//! ```
//!
//! which is norm-preserving in the scaled coordinates (û_i, v̂_i/√λ_i).
//!
//! Grid transforms collocate at ξ_j = j/(N+1), j = 1..N. The discrete
//! orthogonality Σ_j sin(iπξ_j) sin(kπξ_j) = (N+1)/2 · δ_ik makes `from_grid`
//! an exact inverse of `to_grid` on coefficient vectors, with no quadrature
//! error at the resolved modes. Both directions share one symmetric table of
//! sine samples, so a transform is a plain O(N²) mat-vec.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::Error;
use crate::fmath;

/// Coefficient vector tagged with the Sobolev index γ of the space Ḣ^γ its
/// holder currently treats it as. The tag is bookkeeping only; no operation
/// branches on it.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    coeffs: Vec<f64>,
    sobolev_index: f64,
}

impl Field {
    pub fn new(coeffs: Vec<f64>, sobolev_index: f64) -> Self {
        Field { coeffs, sobolev_index }
    }

    pub fn zero(n_modes: usize, sobolev_index: f64) -> Self {
        Field { coeffs: vec![0.0; n_modes], sobolev_index }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    pub fn sobolev_index(&self) -> f64 {
        self.sobolev_index
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }
}

/// State X = (u, v) of the first-order system, u in the Ḣ⁰ role and v in the
/// Ḣ⁻¹ role.
#[derive(Debug, Clone, PartialEq)]
pub struct StatePair {
    pub u: Field,
    pub v: Field,
}

impl StatePair {
    pub fn new(u: Field, v: Field) -> Self {
        StatePair { u, v }
    }

    pub fn zero(n_modes: usize) -> Self {
        StatePair { u: Field::zero(n_modes, 0.0), v: Field::zero(n_modes, -1.0) }
    }

    pub fn n_modes(&self) -> usize {
        self.u.len()
    }
}

/// Truncated sine eigenbasis: eigenvalues, collocation grid, and the shared
/// sine-sample table. Immutable after construction and freely shareable
/// across threads.
#[derive(Debug, Clone)]
pub struct SpectralBasis {
    eigenvalues: Vec<f64>,
    sqrt_eigenvalues: Vec<f64>,
    collocation: Vec<f64>,
    // sine[(i-1)*N + (j-1)] = sin(iπ ξ_j); symmetric in (i, j).
    sine: Vec<f64>,
}

impl SpectralBasis {
    pub fn new(n_modes: usize) -> Result<Self, Error> {
        if n_modes == 0 {
            return Err(Error::EmptyBasis);
        }
        let pi = core::f64::consts::PI;
        let mut eigenvalues = Vec::with_capacity(n_modes);
        let mut sqrt_eigenvalues = Vec::with_capacity(n_modes);
        let mut collocation = Vec::with_capacity(n_modes);
        for i in 1..=n_modes {
            let sq = i as f64 * pi;
            eigenvalues.push(sq * sq);
            sqrt_eigenvalues.push(sq);
            collocation.push(i as f64 / (n_modes + 1) as f64);
        }
        let mut sine = vec![0.0; n_modes * n_modes];
        for i in 1..=n_modes {
            for j in 1..=n_modes {
                sine[(i - 1) * n_modes + (j - 1)] =
                    fmath::sin(i as f64 * pi * j as f64 / (n_modes + 1) as f64);
            }
        }
        Ok(SpectralBasis { eigenvalues, sqrt_eigenvalues, collocation, sine })
    }

    pub fn n_modes(&self) -> usize {
        self.eigenvalues.len()
    }

    /// λ_i = π²i², strictly increasing, index 0 holds mode 1.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// √λ_i = iπ, the per-mode rotation frequencies.
    pub fn sqrt_eigenvalues(&self) -> &[f64] {
        &self.sqrt_eigenvalues
    }

    /// ξ_j = j/(N+1), strictly inside (0,1).
    pub fn collocation_points(&self) -> &[f64] {
        &self.collocation
    }

    fn check_len(&self, got: usize) -> Result<(), Error> {
        if got != self.n_modes() {
            return Err(Error::DimensionMismatch { expected: self.n_modes(), got });
        }
        Ok(())
    }

    // Shared mat-vec against the symmetric sine table: out_k = Σ_l T[k,l] x_l.
    fn sine_matvec(&self, x: &[f64], scale: f64, out: &mut [f64]) {
        let n = self.n_modes();
        for (k, o) in out.iter_mut().enumerate() {
            let row = &self.sine[k * n..(k + 1) * n];
            let mut acc = 0.0;
            for (t, v) in row.iter().zip(x) {
                acc += t * v;
            }
            *o = scale * acc;
        }
    }

    /// Point values on the collocation grid: value_j = Σ_i û_i √2 sin(iπξ_j).
    pub fn to_grid(&self, field: &Field) -> Result<Vec<f64>, Error> {
        let mut out = vec![0.0; field.len()];
        self.to_grid_into(field.coeffs(), &mut out)?;
        Ok(out)
    }

    /// Allocation-free `to_grid` on a raw coefficient slice.
    pub fn to_grid_into(&self, coeffs: &[f64], out: &mut [f64]) -> Result<(), Error> {
        self.check_len(coeffs.len())?;
        self.check_len(out.len())?;
        self.sine_matvec(coeffs, fmath::sqrt(2.0), out);
        Ok(())
    }

    /// Coefficients from point values: û_i = (√2/(N+1)) Σ_j value_j sin(iπξ_j).
    /// Exact inverse of `to_grid` by discrete sine orthogonality.
    pub fn from_grid(&self, values: &[f64]) -> Result<Field, Error> {
        let mut out = vec![0.0; values.len()];
        self.from_grid_into(values, &mut out)?;
        Ok(Field::new(out, 0.0))
    }

    /// Allocation-free `from_grid` writing into a coefficient slice.
    pub fn from_grid_into(&self, values: &[f64], out: &mut [f64]) -> Result<(), Error> {
        self.check_len(values.len())?;
        self.check_len(out.len())?;
        self.sine_matvec(values, fmath::sqrt(2.0) / (self.n_modes() + 1) as f64, out);
        Ok(())
    }

    /// λ_i^γ, evaluated as exp(γ ln λ_i). Safe for all γ at any N this crate
    /// targets (λ_N ≤ π²·2²⁴ keeps γ ln λ far from overflow for |γ| ≤ 8).
    pub fn lambda_power(&self, mode: usize, gamma: f64) -> f64 {
        fmath::powf(self.eigenvalues[mode], gamma)
    }

    /// Diagonal action of Λ^γ: coefficients scaled by λ_i^γ, Sobolev tag
    /// shifted by −2γ. Panics on a length mismatch (diagonal actions have no
    /// error cases of their own).
    pub fn apply_lambda_power(&self, field: &Field, gamma: f64) -> Field {
        assert_eq!(field.len(), self.n_modes(), "field does not match basis");
        let coeffs = field
            .coeffs()
            .iter()
            .enumerate()
            .map(|(i, c)| c * self.lambda_power(i, gamma))
            .collect();
        Field::new(coeffs, field.sobolev_index() - 2.0 * gamma)
    }

    /// Ḣ^γ norm (Σ_i λ_i^γ c_i²)^½ of a raw coefficient slice.
    pub fn h_gamma_norm(&self, coeffs: &[f64], gamma: f64) -> f64 {
        assert_eq!(coeffs.len(), self.n_modes(), "coefficients do not match basis");
        let mut acc = 0.0;
        for (i, c) in coeffs.iter().enumerate() {
            acc += self.lambda_power(i, gamma) * c * c;
        }
        fmath::sqrt(acc)
    }

    /// Product-space norm ‖X‖_H = (‖u‖₀² + ‖v‖₋₁²)^½.
    pub fn state_h_norm(&self, x: &StatePair) -> f64 {
        assert_eq!(x.n_modes(), self.n_modes(), "state does not match basis");
        let mut acc = 0.0;
        for (i, (u, v)) in x.u.coeffs().iter().zip(x.v.coeffs()).enumerate() {
            acc += u * u + v * v / self.eigenvalues[i];
        }
        fmath::sqrt(acc)
    }

    /// Diagonal multipliers cos(t√λ_i). Any real t; the propagator is a
    /// group, not a semigroup.
    pub fn cos_multipliers(&self, t: f64) -> Vec<f64> {
        self.sqrt_eigenvalues.iter().map(|&s| fmath::cos(t * s)).collect()
    }

    /// Diagonal multipliers sin(t√λ_i).
    pub fn sin_multipliers(&self, t: f64) -> Vec<f64> {
        self.sqrt_eigenvalues.iter().map(|&s| fmath::sin(t * s)).collect()
    }

    /// Exact linear-wave propagator: per mode the rotation
    /// (û, v̂) ↦ (cos θ û + sin θ v̂/√λ, −√λ sin θ û + cos θ v̂), θ = t√λ.
    pub fn apply_group(&self, t: f64, x: &StatePair) -> Result<StatePair, Error> {
        self.check_len(x.u.len())?;
        self.check_len(x.v.len())?;
        let n = self.n_modes();
        let mut u = Vec::with_capacity(n);
        let mut v = Vec::with_capacity(n);
        for i in 0..n {
            let s = self.sqrt_eigenvalues[i];
            let (sin_t, cos_t) = (fmath::sin(t * s), fmath::cos(t * s));
            let (ui, vi) = (x.u.coeffs()[i], x.v.coeffs()[i]);
            u.push(cos_t * ui + sin_t / s * vi);
            v.push(-s * sin_t * ui + cos_t * vi);
        }
        Ok(StatePair::new(
            Field::new(u, x.u.sobolev_index()),
            Field::new(v, x.v.sobolev_index()),
        ))
    }
}
