//! picardbox: a desk-scale spectral testbed for time-rescaled Picard schemes
//! on the multivariate Burgers equation and the incompressible Navier-Stokes
//! equation in Leray projection form.
//!
//! The library provides:
//!
//! - periodic-grid fields with spectral derivatives, convolutions and the
//!   L^p / H^s / H^{2,∞} norms the estimates run on ([`field`]);
//! - the Poisson kernel of the Laplacian, smooth cutoffs, and the near/far
//!   split of its gradient into an L¹ head and an L² tail ([`kernels`]);
//! - the quadratic Leray source and the pressure forcing −∇p via either the
//!   split-kernel convolution or the periodic spectral projector ([`leray`]);
//! - a linear advection-diffusion propagator with exact spectral diffusion
//!   and Gaussian-majorant fitting for its impulse responses ([`parabolic`]);
//! - the global Burgers scheme with ρ_l ~ 1/l macro steps and inner Picard
//!   iterations ([`burgers`]);
//! - the controlled Navier-Stokes scheme: uncontrolled first iterate,
//!   control update, controlled iterations, measured constants and the step
//!   size they imply ([`navier_stokes`]);
//! - exact and brute-force oracles: Cole-Hopf, Beltrami flows, a dealiased
//!   RK4 reference solver, direct convolution ([`oracles`]);
//! - ledgers, growth audits and sampled inequality suites ([`diagnostics`]).
//!
//! The `picardbox` binary drives runs and verification suites from a plain
//! `key = value` config file; see the book under `book/` for a guided tour.

pub mod burgers;
pub mod config;
pub mod diagnostics;
pub mod error;
pub mod field;
mod fft;
pub mod io;
pub mod kernels;
pub mod leray;
pub mod navier_stokes;
pub mod oracles;
pub mod parabolic;

pub use error::{Error, Result};
