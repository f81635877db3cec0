//! Spectral Galerkin kernels for semilinear stochastic wave equations.
//!
//! The continuous problem is the damped-free wave equation with multiplicative
//! noise on the unit interval with Dirichlet boundary conditions,
//!
//! ```text
//!     du̇ = -Λu dt + f(ξ, u) dt + g(ξ, u) dW(t),    Λ = -∂²/∂ξ²
//! ```
//!
//! written as a first-order system in the state X = (u, v). Everything here
//! lives in the eigenbasis of Λ: `basis` carries the sine eigenpairs and the
//! grid transforms, `noise` samples the driving Q-Wiener increments mode by
//! mode, `model` evaluates the pointwise (Nemytskij) nonlinearities through
//! the grid, and `integrator` advances the system with one of three one-step
//! schemes built from the exact linear propagator or its rational
//! approximations.
//!
//! The crate is `no_std`-compatible (with `alloc`); disable the default `std`
//! feature and enable `libm` to get float math without the standard library.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod basis;
pub mod error;
pub(crate) mod fmath;
pub mod integrator;
pub mod model;
pub mod noise;
pub mod quad;

pub use error::Error;
