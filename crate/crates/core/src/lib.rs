//! Inference for predictive regressions whose parameter space is cut out by a
//! smooth inequality constraint `g(θ) ≥ 0`.
//!
//! The crate covers the whole pipeline:
//!
//! * [`dgp`] simulates `y_t = θ₁ + θ₂ x_{n,t-1} + ε_t` with unit-root,
//!   near-unit-root or stationary regressors and i.i.d., ARCH(1) or
//!   regressor-correlated errors.
//! * [`constrained_ls`] fits the augmented regression with and without the
//!   inequality constraint and evaluates test statistics.
//! * [`wild_bootstrap`] implements the fixed-regressor wild bootstrap with the
//!   standard, restricted, power- and rate-corrected bootstrap parameter
//!   spaces, the plug-in transform and numerical-bootstrap equivalents, and
//!   the conservative sup-p procedure.
//! * [`asymptotics`] samples the limit laws (Brownian functionals and
//!   M-metric half-plane projections).
//! * [`location_model`] is the scalar `y_t = θ + ε_t`, `θ ≥ 0` test bed with
//!   closed-form bootstrap distributions.
//! * [`montecarlo`] runs rejection-frequency experiments, and [`report`] /
//!   [`config`] handle their text formats.
//!
//! Replications are parallelised with rayon when the `parallel` feature is on
//! (the default); results never depend on the number of threads.

// `!(x > 0.0)` guards are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod config;
pub mod constrained_ls;
pub mod dgp;
mod error;
pub mod geometry;
pub mod location_model;
pub mod montecarlo;
pub mod par;
pub mod report;
pub mod rng;
pub mod stats;
pub mod wild_bootstrap;

pub use error::{Error, Result};

pub use nalgebra::{Matrix2, Vector2};
