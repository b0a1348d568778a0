//! Spectral Galerkin simulation of the stochastic Navier-Stokes equations on
//! the periodic torus `T^d` (d = 2, 3) driven by linear multiplicative noise.
//!
//! The crate is split along the lines of the underlying analysis:
//!
//! * [`spectral`]: Fourier representation of mean-zero divergence-free
//!   fields, the Stokes operator and its powers, Galerkin projections, norms.
//! * [`nonlinearity`]: the dealiased convective term `B(u, v) = P_H (u . grad) v`,
//!   a brute-force convolution oracle and empirical probes of the bilinear
//!   estimates.
//! * [`noise`]: cylindrical Wiener increments, the diagonal multiplicative
//!   noise operator and a numerical verifier for the noise hypotheses.
//! * [`dynamics`]: integrating-factor Euler-Maruyama time stepping of the
//!   full, cut-off and Galerkin systems together with stopping-time detectors.
//! * [`ensemble`]: Monte Carlo driver and the statistical tests of the
//!   global-existence probability bound.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod ensemble;
mod error;
pub mod nonlinearity;
pub mod noise;
pub mod spectral;

pub use error::{Error, Result};
