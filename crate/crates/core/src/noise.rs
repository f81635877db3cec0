//! Q-Wiener increments in coefficient space.
//!
//! The driving noise W(t) = Σ_i √q_i β_i(t) e_i is diagonal in the sine
//! basis, so an increment over one step is just a vector of independent
//! Gaussians with per-mode variance q_i·dt. Three covariance shapes cover
//! the regimes of interest:
//!
//! * `white`: q_i ≡ 1, the roughest driving noise (regularity exponent ½,
//!   approached but not attained);
//! * `algebraic_decay(r)`: q_i = i^{−r}, trace class for r > 1 with
//!   regularity min(1, (1+r)/2);
//! * `custom`: caller-supplied eigenvalues with a declared exponent.
//!
//! Strong-error studies run every stepsize on one Brownian path, so the fine
//! path is sampled once and `coarsen` produces the coarse increments by
//! block sums. Block sums use a fixed recursive-halving order rather than a
//! left-to-right loop: for power-of-two factors this makes coarsening chains
//! compose bit-exactly (coarsen by 2 twice is bitwise coarsen by 4), which a
//! sequential order cannot guarantee.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

use crate::basis::SpectralBasis;
use crate::error::Error;
use crate::fmath;

#[derive(Debug, Clone, PartialEq)]
pub enum CovKind {
    White,
    AlgebraicDecay(f64),
    Custom,
}

/// Eigenvalues of the covariance operator Q plus the regularity exponent the
/// regime induces. The exponent is never derived from the nonlinearity; it
/// only feeds predicted-rate lines in reports.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceSpec {
    kind: CovKind,
    q: Vec<f64>,
    predicted_delta: f64,
}

impl CovarianceSpec {
    /// Space-time white noise: Q = I.
    pub fn white(n_modes: usize) -> Self {
        CovarianceSpec { kind: CovKind::White, q: vec![1.0; n_modes], predicted_delta: 0.5 }
    }

    /// q_i = i^{−r}; trace class for r > 1.
    pub fn algebraic(n_modes: usize, r: f64) -> Self {
        let q = (1..=n_modes).map(|i| fmath::powf(i as f64, -r)).collect();
        let delta = f64::min(1.0, 0.5 * (1.0 + r));
        CovarianceSpec { kind: CovKind::AlgebraicDecay(r), q, predicted_delta: delta }
    }

    /// Degenerate covariance: no noise at all.
    pub fn zero(n_modes: usize) -> Self {
        CovarianceSpec { kind: CovKind::Custom, q: vec![0.0; n_modes], predicted_delta: 1.0 }
    }

    pub fn custom(q: Vec<f64>, predicted_delta: f64) -> Result<Self, Error> {
        if q.iter().any(|&x| !x.is_finite() || x < 0.0) {
            return Err(Error::InvalidCovariance);
        }
        CovarianceSpec { kind: CovKind::Custom, q, predicted_delta }.validated()
    }

    fn validated(self) -> Result<Self, Error> {
        if !self.predicted_delta.is_finite() {
            return Err(Error::InvalidCovariance);
        }
        Ok(self)
    }

    /// Replace the regularity exponent, e.g. to record the β of an additive
    /// regime instead of the default multiplicative δ.
    pub fn with_predicted_delta(mut self, delta: f64) -> Self {
        self.predicted_delta = delta;
        self
    }

    pub fn kind(&self) -> &CovKind {
        &self.kind
    }

    pub fn q(&self) -> &[f64] {
        &self.q
    }

    pub fn n_modes(&self) -> usize {
        self.q.len()
    }

    pub fn predicted_delta(&self) -> f64 {
        self.predicted_delta
    }

    /// Theoretical strong order min(δ, 1).
    pub fn predicted_strong_rate(&self) -> f64 {
        f64::min(self.predicted_delta, 1.0)
    }

    /// Theoretical weak order min(2β, ½ + β, 1) for additive noise, reading
    /// β from the recorded exponent (the arbitrarily small slack in the
    /// ½ + β − ε term is dropped).
    pub fn predicted_weak_rate(&self) -> f64 {
        let beta = self.predicted_delta;
        f64::min(f64::min(2.0 * beta, 0.5 + beta), 1.0)
    }

    /// Partial sums of Σ_i q_i λ_i^{β−1} on the truncated basis: the trace
    /// that must be finite for the additive weak regime with exponent β.
    /// `plateaued` is false when the last quarter of the modes still moves
    /// the sum by more than 1%, signalling that the truncation has not
    /// converged (as happens for white noise at β = ½, where the true trace
    /// diverges and only exponents strictly below ½ are admissible).
    pub fn trace_diagnostic(&self, basis: &SpectralBasis) -> TraceDiagnostic {
        let beta = self.predicted_delta;
        let n = self.q.len().min(basis.n_modes());
        let mut total = 0.0;
        let mut at_three_quarters = 0.0;
        for i in 0..n {
            total += self.q[i] * fmath::powf(basis.eigenvalues()[i], beta - 1.0);
            if i + 1 == (3 * n).div_ceil(4) {
                at_three_quarters = total;
            }
        }
        let tail_fraction = if total > 0.0 { (total - at_three_quarters) / total } else { 0.0 };
        TraceDiagnostic { value: total, tail_fraction, plateaued: tail_fraction < 0.01 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceDiagnostic {
    pub value: f64,
    pub tail_fraction: f64,
    pub plateaued: bool,
}

/// Increments ΔŴ_{m,i} of one Brownian path, row-major over steps.
/// Regeneration with the same (seed, sample_index) is bit-identical.
#[derive(Debug, Clone, PartialEq)]
pub struct BrownianPath {
    n_steps: usize,
    n_modes: usize,
    dt: f64,
    seed: u64,
    sample_index: u64,
    increments: Vec<f64>,
}

impl BrownianPath {
    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn sample_index(&self) -> u64 {
        self.sample_index
    }

    /// Increment row for step m.
    pub fn increment(&self, m: usize) -> &[f64] {
        &self.increments[m * self.n_modes..(m + 1) * self.n_modes]
    }

    /// All increments, row-major.
    pub fn increments(&self) -> &[f64] {
        &self.increments
    }

    /// Rebuild a path from raw increment storage (e.g. read back from a
    /// dump). The length must be a whole number of rows.
    pub fn from_raw(
        n_modes: usize,
        dt: f64,
        seed: u64,
        sample_index: u64,
        increments: Vec<f64>,
    ) -> Result<Self, Error> {
        if n_modes == 0 {
            return Err(Error::EmptyBasis);
        }
        if !(dt > 0.0) {
            return Err(Error::NonPositiveStep(dt));
        }
        if increments.len() % n_modes != 0 {
            return Err(Error::DimensionMismatch { expected: n_modes, got: increments.len() });
        }
        let n_steps = increments.len() / n_modes;
        Ok(BrownianPath { n_steps, n_modes, dt, seed, sample_index, increments })
    }
}

/// Draw a path of `n_steps` increments with per-mode variance q_i·dt.
///
/// The generator is keyed statelessly: `seed` selects the ChaCha key and
/// `sample_index` the stream, so any sample can be produced independently by
/// any worker. Normals are consumed in row-major order regardless of q, so
/// paths drawn under different covariances from the same (seed, index) share
/// their underlying Gaussians.
pub fn sample_path(
    spec: &CovarianceSpec,
    basis: &SpectralBasis,
    n_steps: usize,
    dt: f64,
    seed: u64,
    sample_index: u64,
) -> Result<BrownianPath, Error> {
    if !(dt > 0.0) {
        return Err(Error::NonPositiveStep(dt));
    }
    let n = basis.n_modes();
    if spec.n_modes() != n {
        return Err(Error::DimensionMismatch { expected: n, got: spec.n_modes() });
    }
    let scale: Vec<f64> = spec.q().iter().map(|&q| fmath::sqrt(q * dt)).collect();
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(sample_index);
    let mut increments = Vec::with_capacity(n_steps * n);
    for _ in 0..n_steps {
        for s in &scale {
            let z: f64 = rng.sample(StandardNormal);
            increments.push(s * z);
        }
    }
    Ok(BrownianPath { n_steps, n_modes: n, dt, seed, sample_index, increments })
}

// Canonical summation order for coarsening: recursive halving. Splitting at
// the midpoint means a sum over 2k elements is always (sum of first k) +
// (sum of last k), which is what makes dyadic coarsening chains compose
// bit-exactly.
fn block_sum(x: &[f64]) -> f64 {
    match x.len() {
        0 => 0.0,
        1 => x[0],
        2 => x[0] + x[1],
        n => block_sum(&x[..n / 2]) + block_sum(&x[n / 2..]),
    }
}

/// Sum each run of `factor` fine increments into one coarse increment with
/// dt scaled accordingly. `factor` must divide the step count.
pub fn coarsen(path: &BrownianPath, factor: usize) -> Result<BrownianPath, Error> {
    if factor == 0 || path.n_steps % factor != 0 {
        return Err(Error::CoarsenFactor { factor, n_steps: path.n_steps });
    }
    let n = path.n_modes;
    let coarse_steps = path.n_steps / factor;
    let mut increments = vec![0.0; coarse_steps * n];
    let mut column = vec![0.0; factor];
    for m in 0..coarse_steps {
        for i in 0..n {
            for (k, c) in column.iter_mut().enumerate() {
                *c = path.increments[(m * factor + k) * n + i];
            }
            increments[m * n + i] = block_sum(&column);
        }
    }
    Ok(BrownianPath {
        n_steps: coarse_steps,
        n_modes: n,
        dt: path.dt * factor as f64,
        seed: path.seed,
        sample_index: path.sample_index,
        increments,
    })
}

/// Point values ΔW(ξ_j) = Σ_i ΔŴ_i e_i(ξ_j) of one increment row; exactly
/// the basis `to_grid` on the increment as a coefficient vector.
pub fn increment_on_grid(basis: &SpectralBasis, increment_row: &[f64]) -> Result<Vec<f64>, Error> {
    let mut out = vec![0.0; increment_row.len()];
    basis.to_grid_into(increment_row, &mut out)?;
    Ok(out)
}
