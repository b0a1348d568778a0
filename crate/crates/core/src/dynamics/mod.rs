//! Time integration of the Galerkin-truncated stochastic Navier-Stokes
//! system, its cut-off variants, and the stopping-time detectors.

mod coupled;
mod integrator;
mod record;

use serde::{Deserialize, Serialize};

use crate::spectral::SpectralField;
use crate::{Error, Result};

pub use coupled::{coupled_evolve, DivergenceReport};
pub use integrator::{
    evolve, evolve_with, step, BrownianPath, IncrementSource, Integrator, RngIncrements, SolverState, StepOutcome,
};
pub use record::{detect_sigma, PathRecord, PathStatus, Sample, CSV_HEADER};

pub const DEFAULT_OVERFLOW_GUARD: f64 = 1e6;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scheme {
    /// Integrating-factor Euler-Maruyama.
    #[default]
    #[serde(rename = "exp-EM")]
    ExpEm,
}

/// Argument of the cut-off function.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CutoffNorm {
    /// `theta(||u - u_*||)` with `u_*` the exact heat flow of the initial data.
    VDistanceToHeatFlow,
    /// `theta(||u||_{W^{1,inf}})`.
    W1inf,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CutoffConfig {
    pub kappa: f64,
    pub norm_kind: CutoffNorm,
}

/// Scalar path observables usable by detectors.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Observable {
    H,
    V,
    #[serde(rename = "DA")]
    DA,
    Hm,
    W1inf,
    /// `sup ||u||^2 + int |Au|^2`.
    BlowupFunctional,
}

/// First grid time at which `observable >= level`. A terminal rule ends the
/// path with [`PathStatus::Stopped`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StopRule {
    pub name: String,
    pub observable: Observable,
    pub level: f64,
    #[serde(default)]
    pub terminal: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub nu: f64,
    pub dt: f64,
    #[serde(rename = "T")]
    pub horizon: f64,
    /// Galerkin level over the dealiased mode pairs; all of them when absent.
    #[serde(rename = "n", default, skip_serializing_if = "Option::is_none")]
    pub galerkin_level: Option<usize>,
    #[serde(default)]
    pub scheme: Scheme,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cutoff: Option<CutoffConfig>,
    #[serde(default = "default_guard")]
    pub overflow_guard: f64,
    /// Include the convective term.
    #[serde(default = "yes")]
    pub nonlinear: bool,
    /// Record a sample every this many steps (the final state is always kept).
    #[serde(default = "one")]
    pub sample_every: usize,
    /// Order `m` of the recorded `H^m` norm.
    #[serde(default = "three")]
    pub sobolev_order: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub detectors: Vec<StopRule>,
}

fn default_guard() -> f64 {
    DEFAULT_OVERFLOW_GUARD
}
fn yes() -> bool {
    true
}
fn one() -> usize {
    1
}
fn three() -> f64 {
    3.0
}

impl SolverConfig {
    pub fn new(nu: f64, dt: f64, horizon: f64) -> Self {
        Self {
            nu,
            dt,
            horizon,
            galerkin_level: None,
            scheme: Scheme::ExpEm,
            cutoff: None,
            overflow_guard: DEFAULT_OVERFLOW_GUARD,
            nonlinear: true,
            sample_every: 1,
            sobolev_order: 3.0,
            detectors: Vec::new(),
        }
    }

    pub fn with_cutoff(mut self, kappa: f64, norm_kind: CutoffNorm) -> Self {
        self.cutoff = Some(CutoffConfig { kappa, norm_kind });
        self
    }

    pub fn with_detector(mut self, rule: StopRule) -> Self {
        self.detectors.push(rule);
        self
    }

    pub fn linear(mut self) -> Self {
        self.nonlinear = false;
        self
    }

    /// Number of steps; the horizon is rounded to a whole number of steps.
    pub fn steps(&self) -> usize {
        ((self.horizon / self.dt).round() as usize).max(1)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &'static str, x: f64| {
            if x > 0.0 && x.is_finite() {
                Ok(())
            } else {
                Err(Error::param(name, format!("must be positive and finite, got {x}")))
            }
        };
        positive("nu", self.nu)?;
        positive("dt", self.dt)?;
        positive("T", self.horizon)?;
        positive("overflow_guard", self.overflow_guard)?;
        if self.dt > self.horizon * (1.0 + 1e-12) {
            return Err(Error::param("dt", format!("dt = {} exceeds T = {}", self.dt, self.horizon)));
        }
        if self.galerkin_level == Some(0) {
            return Err(Error::param("n", "Galerkin level must be at least 1"));
        }
        if self.sample_every == 0 {
            return Err(Error::param("sample_every", "must be at least 1"));
        }
        if let Some(c) = &self.cutoff {
            positive("kappa", c.kappa)?;
        }
        for rule in &self.detectors {
            if rule.level.is_nan() {
                return Err(Error::param("detectors", format!("level of '{}' is NaN", rule.name)));
            }
        }
        Ok(())
    }
}

/// Smooth cut-off: 1 on `|x| <= kappa`, 0 on `|x| >= 2 kappa`, with the
/// transition `psi(s) = f(s) / (f(s) + f(1 - s))`, `f(s) = exp(-1/s)`,
/// `s = 2 - |x| / kappa`. Returns 0 for non-positive `kappa`.
pub fn smooth_cutoff(x: f64, kappa: f64) -> f64 {
    if !(kappa > 0.0) {
        return 0.0;
    }
    let s = 2.0 - x.abs() / kappa;
    if s >= 1.0 {
        return 1.0;
    }
    if !(s > 0.0) {
        return 0.0;
    }
    let f = |s: f64| if s > 0.0 { (-1.0 / s).exp() } else { 0.0 };
    let (a, b) = (f(s), f(1.0 - s));
    a / (a + b)
}

/// Exact solution `e^{-nu |k|^2 t} u0_hat(k)` of the linear Stokes flow.
pub fn heat_flow(u0: &SpectralField, t: f64, nu: f64) -> Result<SpectralField> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::param("t", format!("must be finite and >= 0, got {t}")));
    }
    if !(nu > 0.0 && nu.is_finite()) {
        return Err(Error::param("nu", format!("viscosity must be positive, got {nu}")));
    }
    Ok(u0.map_radial(|ksq| (-nu * ksq * t).exp()))
}
