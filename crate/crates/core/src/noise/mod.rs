//! Multiplicative noise `G(u) dW` driven by a truncated cylindrical Wiener
//! process `W = sum_j beta_j h_j`.

mod rng;
mod verify;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::spectral::{InnerProduct, SpectralField};
use crate::{Error, Result};

pub use rng::{path_stream, tagged_stream, StreamRng};
pub use verify::{verify_hypotheses, HypothesisCheck, HypothesisReport, SpaceConstants, VerifyOptions};

/// Default number of retained noise directions.
pub const DEFAULT_DIRECTIONS: usize = 8;

/// A state-dependent noise operator `u -> G(u)` acting on the directions
/// `h_0 .. h_{K-1}` of the noise space.
pub trait NoiseOperator: Sync {
    fn directions(&self) -> usize;

    /// `G(u) h_j`.
    fn apply(&self, u: &SpectralField, j: usize) -> Result<SpectralField>;

    /// Claimed constant `alpha^2` in `||G(u)||^2_{L2(H,V)} <= alpha^2 ||u||^2`.
    fn alpha_sq(&self) -> f64;

    /// Claimed constant `beta^2` in `||((G(u),u))||^2_{L2(H,R)} >= beta^2 ||u||^4`.
    fn beta_sq(&self) -> f64;

    /// Constant envelope for the local boundedness and Lipschitz classes.
    fn envelope(&self) -> f64 {
        self.alpha_sq().sqrt()
    }

    /// `G(u) dW = sum_j G(u) h_j dW_j`.
    fn increment(&self, u: &SpectralField, dw: &[f64]) -> Result<SpectralField> {
        let mut out = SpectralField::zeros(u.grid());
        for (j, &w) in dw.iter().enumerate().take(self.directions()) {
            if w != 0.0 {
                out.axpy(w, &self.apply(u, j)?);
            }
        }
        Ok(out)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum NoiseKind {
    /// `G(u) h_j = sigma_j u`.
    #[default]
    #[serde(rename = "linear-diagonal")]
    LinearDiagonal,
}

/// Linear multiplicative noise `G(u) h_j = sigma_j u`.
///
/// For this family `alpha^2 = beta^2 = sum_j sigma_j^2`. A model with every
/// `sigma_j = 0` (or no directions) is accepted and switches the noise off;
/// the hypothesis verifier flags it as violating positivity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "NoiseModelRepr", into = "NoiseModelRepr")]
pub struct NoiseModel {
    sigma: Vec<f64>,
    kind: NoiseKind,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NoiseModelRepr {
    #[serde(rename = "K")]
    k: usize,
    sigma: Vec<f64>,
    #[serde(default)]
    kind: NoiseKind,
}

impl TryFrom<NoiseModelRepr> for NoiseModel {
    type Error = Error;
    fn try_from(r: NoiseModelRepr) -> Result<Self> {
        if r.k != r.sigma.len() {
            return Err(Error::param(
                "K",
                format!("K = {} but sigma has {} entries", r.k, r.sigma.len()),
            ));
        }
        NoiseModel::linear_diagonal(r.sigma)
    }
}

impl From<NoiseModel> for NoiseModelRepr {
    fn from(m: NoiseModel) -> Self {
        Self {
            k: m.sigma.len(),
            sigma: m.sigma,
            kind: m.kind,
        }
    }
}

impl NoiseModel {
    pub fn linear_diagonal(sigma: Vec<f64>) -> Result<Self> {
        if let Some(s) = sigma.iter().find(|s| !(s.is_finite() && **s >= 0.0)) {
            return Err(Error::param("sigma", format!("coefficients must be finite and >= 0, got {s}")));
        }
        Ok(Self {
            sigma,
            kind: NoiseKind::LinearDiagonal,
        })
    }

    /// `K` directions sharing the same coefficient.
    pub fn uniform(k: usize, sigma: f64) -> Result<Self> {
        Self::linear_diagonal(vec![sigma; k])
    }

    /// No noise.
    pub fn none() -> Self {
        Self {
            sigma: Vec::new(),
            kind: NoiseKind::LinearDiagonal,
        }
    }

    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }

    pub fn kind(&self) -> NoiseKind {
        self.kind
    }

    pub fn sum_sq(&self) -> f64 {
        self.sigma.iter().map(|s| s * s).sum()
    }

    pub fn is_off(&self) -> bool {
        self.sigma.iter().all(|&s| s == 0.0)
    }

    /// `sum_j sigma_j dW_j`, the scalar the state is multiplied by.
    pub fn scalar_increment(&self, dw: &[f64]) -> f64 {
        self.sigma.iter().zip(dw).map(|(s, w)| s * w).sum()
    }
}

impl NoiseOperator for NoiseModel {
    fn directions(&self) -> usize {
        self.sigma.len()
    }

    fn apply(&self, u: &SpectralField, j: usize) -> Result<SpectralField> {
        let s = *self.sigma.get(j).ok_or_else(|| {
            Error::param("j", format!("direction {j} out of range (K = {})", self.sigma.len()))
        })?;
        Ok(u.scaled(s))
    }

    fn alpha_sq(&self) -> f64 {
        self.sum_sq()
    }

    fn beta_sq(&self) -> f64 {
        self.sum_sq()
    }

    fn increment(&self, u: &SpectralField, dw: &[f64]) -> Result<SpectralField> {
        Ok(u.scaled(self.scalar_increment(dw)))
    }
}

/// `K` independent `N(0, dt)` draws.
#[derive(Clone, Debug, PartialEq)]
pub struct WienerIncrement {
    pub dt: f64,
    pub dw: Vec<f64>,
}

impl WienerIncrement {
    pub fn zero(dt: f64, k: usize) -> Self {
        Self { dt, dw: vec![0.0; k] }
    }

    /// Sum of consecutive increments over the same directions; used to
    /// coarsen a Brownian path.
    pub fn merge(parts: &[WienerIncrement]) -> Self {
        let k = parts.first().map_or(0, |p| p.dw.len());
        let mut out = Self::zero(0.0, k);
        for p in parts {
            out.dt += p.dt;
            for (a, b) in out.dw.iter_mut().zip(&p.dw) {
                *a += b;
            }
        }
        out
    }
}

pub fn sample_increment<R: Rng + ?Sized>(rng: &mut R, dt: f64, k: usize) -> Result<WienerIncrement> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::param("dt", format!("time step must be positive, got {dt}")));
    }
    let sd = dt.sqrt();
    let dw = (0..k)
        .map(|_| {
            let z: f64 = rng.sample(StandardNormal);
            z * sd
        })
        .collect();
    Ok(WienerIncrement { dt, dw })
}

/// `G(u) h_j`.
pub fn apply_g<O: NoiseOperator + ?Sized>(u: &SpectralField, model: &O, j: usize) -> Result<SpectralField> {
    model.apply(u, j)
}

/// `||G(u)||^2_{L2(H, X)} = sum_j ||G(u) h_j||_X^2`.
pub fn hs_norm_sq<O: NoiseOperator + ?Sized>(u: &SpectralField, model: &O, space: InnerProduct) -> Result<f64> {
    let mut acc = 0.0;
    for j in 0..model.directions() {
        acc += model.apply(u, j)?.norm_sq(space);
    }
    Ok(acc)
}

/// `||((G(u), u))_X||^2_{L2(H,R)} = sum_j ((G(u) h_j, u))_X^2`.
pub fn hs_pairing_sq<O: NoiseOperator + ?Sized>(u: &SpectralField, model: &O, space: InnerProduct) -> Result<f64> {
    let mut acc = 0.0;
    for j in 0..model.directions() {
        let p = model.apply(u, j)?.inner(u, space)?;
        acc += p * p;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{random_field, TorusGrid};
    use rand::SeedableRng;

    #[test]
    fn increments_are_deterministic() {
        let mut a = path_stream(9, 0);
        let mut b = path_stream(9, 0);
        let x1 = sample_increment(&mut a, 0.01, 4).unwrap();
        let x2 = sample_increment(&mut a, 0.01, 4).unwrap();
        assert_ne!(x1, x2);
        assert_eq!(x1, sample_increment(&mut b, 0.01, 4).unwrap());
        assert_eq!(x2, sample_increment(&mut b, 0.01, 4).unwrap());
        assert!(sample_increment(&mut a, 0.01, 0).unwrap().dw.is_empty());
        assert!(sample_increment(&mut a, 0.0, 2).is_err());
    }

    #[test]
    fn sample_variance_band() {
        // 4 sigma band for the variance estimate of 1e6 N(0, 0.01) draws:
        // sd(s^2) = dt sqrt(2/n) = 1.41e-5, so +-5.7e-5 fits inside [0.0099, 0.0101].
        let mut rng = path_stream(2024, 0);
        let inc = sample_increment(&mut rng, 0.01, 1_000_000).unwrap();
        let n = inc.dw.len() as f64;
        let mean = inc.dw.iter().sum::<f64>() / n;
        let var = inc.dw.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!((0.0099..=0.0101).contains(&var), "{var}");
        assert!(mean.abs() < 4.0 * (0.01f64 / n).sqrt());
    }

    #[test]
    fn hs_norms_of_linear_noise() {
        let g = TorusGrid::new(2, 16).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let u = random_field(&g, 1.0, &mut rng);
        let model = NoiseModel::linear_diagonal(vec![0.1, 0.3, 0.0]).unwrap();
        for space in [InnerProduct::H, InnerProduct::V, InnerProduct::DA, InnerProduct::Hm(3.0)] {
            let hs = hs_norm_sq(&u, &model, space).unwrap();
            let expect = model.sum_sq() * u.norm_sq(space);
            assert!((hs - expect).abs() <= 1e-14 * expect);
            let doubled = NoiseModel::linear_diagonal(vec![0.2, 0.6, 0.0]).unwrap();
            let hs2 = hs_norm_sq(&u, &doubled, space).unwrap();
            assert!((hs2 - 4.0 * hs).abs() <= 1e-13 * hs2);
        }
        assert_eq!(hs_norm_sq(&SpectralField::zeros(&g), &model, InnerProduct::V).unwrap(), 0.0);
        assert!(apply_g(&u, &model, 2).unwrap().is_zero());
        assert!(apply_g(&u, &model, 3).is_err());
    }

    #[test]
    fn json_shape() {
        let m = NoiseModel::linear_diagonal(vec![0.1, 0.1]).unwrap();
        let s = serde_json::to_string(&m).unwrap();
        assert_eq!(s, r#"{"K":2,"sigma":[0.1,0.1],"kind":"linear-diagonal"}"#);
        let back: NoiseModel = serde_json::from_str(&s).unwrap();
        assert_eq!(back, m);
        assert!(serde_json::from_str::<NoiseModel>(r#"{"K":3,"sigma":[0.1]}"#).is_err());
        assert!(serde_json::from_str::<NoiseModel>(r#"{"K":1,"sigma":[-0.1]}"#).is_err());
    }

    #[test]
    fn merged_increments_sum() {
        let a = WienerIncrement { dt: 0.1, dw: vec![0.5, -1.0] };
        let b = WienerIncrement { dt: 0.1, dw: vec![0.25, 2.0] };
        let m = WienerIncrement::merge(&[a, b]);
        assert_eq!(m.dw, vec![0.75, 1.0]);
        assert!((m.dt - 0.2).abs() < 1e-15);
    }
}
