use serde::Serialize;

use super::bounds::young_constant;
use crate::nonlinearity::{probe_estimate, probe_estimate_with_order, BilinearProbeReport, EstimateId};
use crate::spectral::TorusGrid;
use crate::Result;

/// Safety factor applied to every empirical probe maximum.
pub const SAFETY_FACTOR: f64 = 2.0;

/// Default probe sample count for calibration.
pub const CALIBRATION_SAMPLES: usize = 500;

/// Empirical constants for the bound, with the probe reports they came from.
#[derive(Clone, Debug, Serialize)]
pub struct Calibration {
    /// Constant of `|(B(u,u),Au)| <= C ||u||^{3/2} |Au|^{3/2}`.
    pub c_hgp: f64,
    #[serde(rename = "C1")]
    pub c1: f64,
    #[serde(rename = "C3")]
    pub c3: f64,
    pub safety_factor: f64,
    pub eb1: BilinearProbeReport,
    pub hm_cubic: BilinearProbeReport,
}

/// Probes the two bilinear constants the bounds need.
///
/// On the two-dimensional torus `(B(u,u),Au)` vanishes identically, so the
/// `EB1` probe has nothing to measure there; it runs on the three-dimensional
/// grid of the same resolution instead, where the estimate is sharp.
pub fn calibrate(grid: &TorusGrid, samples: usize, seed: u64, m: f64) -> Result<Calibration> {
    let eb1_grid = grid.companion(3)?;
    let eb1 = probe_estimate(EstimateId::EB1, samples, seed, &eb1_grid)?;
    let hm_cubic = probe_estimate_with_order(EstimateId::HmCubic, samples, seed, grid, m)?;
    let c_hgp = SAFETY_FACTOR * eb1.max_ratio;
    Ok(Calibration {
        c_hgp,
        c1: young_constant(c_hgp, 1.5),
        c3: SAFETY_FACTOR * hm_cubic.max_ratio,
        safety_factor: SAFETY_FACTOR,
        eb1,
        hm_cubic,
    })
}
