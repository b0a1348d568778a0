//! Empirical ratio probes for the bilinear estimates.
//!
//! Each probe samples random divergence-free fields, evaluates both sides of
//! one inequality and records the largest observed ratio. The true constants
//! are unknown; the maximum is an empirical lower estimate of them.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::bilinear_b;
use crate::noise::tagged_stream;
use crate::spectral::{random_probe_field, InnerProduct, SpectralField, TorusGrid};
use crate::{Error, Result};

/// Right-hand sides below this are treated as degenerate samples.
pub const DEGENERATE_RHS: f64 = 1e-30;

/// Sobolev order used by the `H^m` estimates unless stated otherwise.
pub const DEFAULT_SOBOLEV_ORDER: f64 = 3.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EstimateId {
    /// `|<B(u,v),v>| / (||u|| ||v||^2)`, zero up to rounding.
    #[serde(rename = "B1-cancellation")]
    B1Cancellation,
    /// `|<B(u,v),w>| <= C ||u|| |Av| ||w||`
    B2,
    /// `|(B(u,v),w)| <= C ||u||^{1/2} |Au|^{1/2} ||v||^{1/2} |Av|^{1/2} |w|`
    B3,
    /// `|(B(u,v),w)| <= C |u|^{1/2} ||u||^{1/2} ||v||^{1/2} |Av|^{1/2} |w|`
    #[serde(rename = "EB-d2")]
    EbD2,
    /// `|(B(u,v),w)| <= C ||u|| ||v||^{1/2} |Av|^{1/2} |w|`
    #[serde(rename = "EB-d3")]
    EbD3,
    /// `|(B(u,u),Au)| <= C ||u||^{3/2} |Au|^{3/2}`
    EB1,
    /// `||B(u,v)||_{H^m} <= C (|u|_inf ||v||_{H^{m+1}} + ||u||_{H^m} ||v||_{W^{1,inf}})`
    EFB1,
    /// `|(B(u,v),v)_{H^m}| <= C ||v||_{H^m} (||u||_{W^{1,inf}} ||v||_{H^m} + ||u||_{H^m} ||v||_{W^{1,inf}})`
    EFB2,
    /// `|(B(u,v),v)_{H^{m-1}}| <= C ||u||_{H^m} ||v||_{H^{m-1}}^2`
    EFB3,
    /// `|(B(u,u),u)_{H^m}| <= C ||u||_{H^m}^3`
    #[serde(rename = "Hm-cubic")]
    HmCubic,
}

impl EstimateId {
    pub const ALL: [EstimateId; 10] = [
        EstimateId::B1Cancellation,
        EstimateId::B2,
        EstimateId::B3,
        EstimateId::EbD2,
        EstimateId::EbD3,
        EstimateId::EB1,
        EstimateId::EFB1,
        EstimateId::EFB2,
        EstimateId::EFB3,
        EstimateId::HmCubic,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EstimateId::B1Cancellation => "B1-cancellation",
            EstimateId::B2 => "B2",
            EstimateId::B3 => "B3",
            EstimateId::EbD2 => "EB-d2",
            EstimateId::EbD3 => "EB-d3",
            EstimateId::EB1 => "EB1",
            EstimateId::EFB1 => "EFB1",
            EstimateId::EFB2 => "EFB2",
            EstimateId::EFB3 => "EFB3",
            EstimateId::HmCubic => "Hm-cubic",
        }
    }

    fn tag(self) -> String {
        format!("probe/{}", self.name())
    }
}

impl fmt::Display for EstimateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EstimateId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        EstimateId::ALL
            .into_iter()
            .find(|id| id.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::param("id", format!("unknown estimate `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridInfo {
    pub d: usize,
    #[serde(rename = "N")]
    pub n: usize,
}

impl From<&TorusGrid> for GridInfo {
    fn from(g: &TorusGrid) -> Self {
        Self {
            d: g.dim(),
            n: g.resolution(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BilinearProbeReport {
    pub id: EstimateId,
    pub samples: usize,
    pub max_ratio: f64,
    pub seed: u64,
    pub grid: GridInfo,
    /// Samples whose right-hand side fell below the degeneracy floor.
    pub skipped: usize,
    pub sobolev_order: f64,
}

pub fn probe_estimate(id: EstimateId, samples: usize, seed: u64, grid: &TorusGrid) -> Result<BilinearProbeReport> {
    probe_estimate_with_order(id, samples, seed, grid, DEFAULT_SOBOLEV_ORDER)
}

/// Sample `i` always uses the stream derived from `(seed, i)`, so the result
/// does not depend on thread count and growing `samples` never lowers the max.
pub fn probe_estimate_with_order(
    id: EstimateId,
    samples: usize,
    seed: u64,
    grid: &TorusGrid,
    m: f64,
) -> Result<BilinearProbeReport> {
    if samples == 0 {
        return Err(Error::param("samples", "at least one sample is required"));
    }
    let tag = id.tag();
    let outcomes: Vec<Option<f64>> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = tagged_stream(&tag, seed, i as u64);
            let u = random_probe_field(grid, &mut rng);
            let v = random_probe_field(grid, &mut rng);
            let w = random_probe_field(grid, &mut rng);
            sample_ratio(id, &u, &v, &w, m)
        })
        .collect::<Result<_>>()?;
    let skipped = outcomes.iter().filter(|o| o.is_none()).count();
    let max_ratio = outcomes.into_iter().flatten().fold(0.0, f64::max);
    Ok(BilinearProbeReport {
        id,
        samples,
        max_ratio,
        seed,
        grid: grid.into(),
        skipped,
        sobolev_order: m,
    })
}

fn sample_ratio(id: EstimateId, u: &SpectralField, v: &SpectralField, w: &SpectralField, m: f64) -> Result<Option<f64>> {
    use InnerProduct::{Hm, H, V};
    let (lhs, rhs) = match id {
        EstimateId::B1Cancellation => {
            let b = bilinear_b(u, v)?;
            (b.inner(v, H)?.abs(), u.norm_v() * v.norm_sq(V))
        }
        EstimateId::B2 => {
            let b = bilinear_b(u, v)?;
            (b.inner(w, H)?.abs(), u.norm_v() * v.norm_da() * w.norm_v())
        }
        EstimateId::B3 => {
            let b = bilinear_b(u, v)?;
            let rhs = (u.norm_v() * u.norm_da() * v.norm_v() * v.norm_da()).sqrt() * w.norm_h();
            (b.inner(w, H)?.abs(), rhs)
        }
        EstimateId::EbD2 => {
            let b = bilinear_b(u, v)?;
            let rhs = (u.norm_h() * u.norm_v() * v.norm_v() * v.norm_da()).sqrt() * w.norm_h();
            (b.inner(w, H)?.abs(), rhs)
        }
        EstimateId::EbD3 => {
            let b = bilinear_b(u, v)?;
            let rhs = u.norm_v() * (v.norm_v() * v.norm_da()).sqrt() * w.norm_h();
            (b.inner(w, H)?.abs(), rhs)
        }
        EstimateId::EB1 => {
            let b = bilinear_b(u, u)?;
            let au = u.map_radial(|k| k);
            (b.inner(&au, H)?.abs(), (u.norm_v() * u.norm_da()).powf(1.5))
        }
        EstimateId::EFB1 => {
            let b = bilinear_b(u, v)?;
            let rhs = u.norm_linf() * v.norm_hm(m + 1.0) + u.norm_hm(m) * v.norm_w1inf();
            (b.norm(Hm(m)), rhs)
        }
        EstimateId::EFB2 => {
            let b = bilinear_b(u, v)?;
            let vm = v.norm_hm(m);
            let rhs = vm * (u.norm_w1inf() * vm + u.norm_hm(m) * v.norm_w1inf());
            (b.inner(v, Hm(m))?.abs(), rhs)
        }
        EstimateId::EFB3 => {
            let b = bilinear_b(u, v)?;
            (b.inner(v, Hm(m - 1.0))?.abs(), u.norm_hm(m) * v.norm_sq(Hm(m - 1.0)))
        }
        EstimateId::HmCubic => {
            let b = bilinear_b(u, u)?;
            (b.inner(u, Hm(m))?.abs(), u.norm_hm(m).powi(3))
        }
    };
    if rhs < DEGENERATE_RHS || !rhs.is_finite() {
        return Ok(None);
    }
    Ok(Some(lhs / rhs))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_roundtrip_through_names() {
        for id in EstimateId::ALL {
            assert_eq!(id.name().parse::<EstimateId>().unwrap(), id);
            let json = serde_json::to_string(&id).unwrap();
            assert_eq!(json, format!("\"{}\"", id.name()));
        }
        assert!("nope".parse::<EstimateId>().is_err());
    }

    #[test]
    fn zero_samples_rejected() {
        let g = TorusGrid::new(2, 8).unwrap();
        assert!(probe_estimate(EstimateId::B2, 0, 1, &g).is_err());
    }
}
