use serde::{Deserialize, Serialize};

use crate::dynamics::Observable;
use crate::noise::NoiseOperator;
use crate::{Error, Result};

/// Which norm the global-existence bound is stated in.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum BoundVariant {
    /// `V` norm with constants `(C1, C2)` and exponent `r`.
    #[serde(rename = "V-norm")]
    VNorm,
    /// `H^m` norm with constants `(C3, C4)`; the exponent is 1.
    #[serde(rename = "Hm-norm")]
    HmNorm { m: f64 },
}

/// Exponents, constants and derived levels of the small-data bound
/// `P(global) >= 1 - (E||u0|| / threshold)^lambda`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundParameters {
    pub variant: BoundVariant,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    pub r: f64,
    #[serde(rename = "C1", skip_serializing_if = "Option::is_none")]
    pub c1: Option<f64>,
    #[serde(rename = "C2", skip_serializing_if = "Option::is_none")]
    pub c2: Option<f64>,
    #[serde(rename = "C3", skip_serializing_if = "Option::is_none")]
    pub c3: Option<f64>,
    #[serde(rename = "C4", skip_serializing_if = "Option::is_none")]
    pub c4: Option<f64>,
    pub alpha_sq: f64,
    pub beta_sq: f64,
    pub xi: f64,
    pub lambda: f64,
    /// Stopping level on the initial-data scale, `(xi / C1)^{1/r}` or `xi / C3`.
    pub threshold: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
}

/// `r = 2 (a + b - 2) / (2 - b)`.
pub fn r_exponent(a: f64, b: f64) -> f64 {
    2.0 * (a + b - 2.0) / (2.0 - b)
}

/// Sharp constant in `C x^a y^b <= C1 x^{2+r} + y^2 / 2`, the Young split
/// turning the `(B(u,u), Au)` bound into a power of `||u||` alone:
/// `C1 = (2-b)/2 * b^{b/(2-b)} * C^{2/(2-b)}`.
pub fn young_constant(c: f64, b: f64) -> f64 {
    (2.0 - b) / 2.0 * b.powf(b / (2.0 - b)) * c.powf(2.0 / (2.0 - b))
}

fn check_noise(alpha_sq: f64, beta_sq: f64) -> Result<()> {
    if !(beta_sq > 0.0 && alpha_sq >= 0.0 && alpha_sq.is_finite() && beta_sq.is_finite()) {
        return Err(Error::param("noise", format!("need beta^2 > 0, got alpha^2 = {alpha_sq}, beta^2 = {beta_sq}")));
    }
    if alpha_sq >= 2.0 * beta_sq {
        return Err(Error::param("noise", format!("alpha^2 = {alpha_sq} must be below 2 beta^2 = {}", 2.0 * beta_sq)));
    }
    Ok(())
}

fn exponents(alpha_sq: f64, beta_sq: f64, c_bdg: f64) -> Result<(f64, f64)> {
    if !(c_bdg >= 0.0 && c_bdg.is_finite()) {
        return Err(Error::param("C2", format!("must be finite and >= 0, got {c_bdg}")));
    }
    let gap = 2.0 * beta_sq - alpha_sq;
    let xi = gap / 4.0;
    let lambda = gap / (2.0 * beta_sq + 4.0 * c_bdg * alpha_sq);
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::param("lambda", format!("{lambda} is outside (0, 1)")));
    }
    Ok((xi, lambda))
}

fn positive(name: &'static str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::param(name, format!("must be positive and finite, got {x}")))
    }
}

/// Parameters of the `V`-norm bound for `|(B(u,u),Au)| <= C ||u||^a |Au|^b`.
pub fn derive_bound_params<O: NoiseOperator + ?Sized>(a: f64, b: f64, c1: f64, c2: f64, model: &O) -> Result<BoundParameters> {
    if !(b > 0.0 && b < 2.0) {
        return Err(Error::param("b", format!("need 0 < b < 2, got {b}")));
    }
    if !(a + b > 2.0) {
        return Err(Error::param("a", format!("need a + b > 2, got a + b = {}", a + b)));
    }
    positive("C1", c1)?;
    let (alpha_sq, beta_sq) = (model.alpha_sq(), model.beta_sq());
    check_noise(alpha_sq, beta_sq)?;
    let (xi, lambda) = exponents(alpha_sq, beta_sq, c2)?;
    let r = r_exponent(a, b);
    Ok(BoundParameters {
        variant: BoundVariant::VNorm,
        a: Some(a),
        b: Some(b),
        r,
        c1: Some(c1),
        c2: Some(c2),
        c3: None,
        c4: None,
        alpha_sq,
        beta_sq,
        xi,
        lambda,
        threshold: (xi / c1).powf(1.0 / r),
        epsilon: None,
        delta: None,
    })
}

/// Parameters of the `H^m`-norm bound for `|(B(u,u),u)_{H^m}| <= C3 ||u||^3_{H^m}`.
pub fn derive_hm_bound_params<O: NoiseOperator + ?Sized>(m: f64, c3: f64, c4: f64, model: &O) -> Result<BoundParameters> {
    positive("C3", c3)?;
    let (alpha_sq, beta_sq) = (model.alpha_sq(), model.beta_sq());
    check_noise(alpha_sq, beta_sq)?;
    let (xi, lambda) = exponents(alpha_sq, beta_sq, c4).map_err(|e| match e {
        Error::InvalidParameter { name: "C2", reason } => Error::param("C4", reason),
        e => e,
    })?;
    Ok(BoundParameters {
        variant: BoundVariant::HmNorm { m },
        a: None,
        b: None,
        r: 1.0,
        c1: None,
        c2: None,
        c3: Some(c3),
        c4: Some(c4),
        alpha_sq,
        beta_sq,
        xi,
        lambda,
        threshold: xi / c3,
        epsilon: None,
        delta: None,
    })
}

impl BoundParameters {
    /// Norm in which initial sizes and stopping levels are measured.
    pub fn observable(&self) -> Observable {
        match self.variant {
            BoundVariant::VNorm => Observable::V,
            BoundVariant::HmNorm { .. } => Observable::Hm,
        }
    }

    /// `1 - (E||u0|| / threshold)^lambda`; may be negative (vacuous).
    pub fn bound_value(&self, mean_initial_norm: f64) -> f64 {
        1.0 - (mean_initial_norm / self.threshold).powf(self.lambda)
    }

    /// Records `epsilon` and the matching `delta(epsilon)`.
    pub fn with_epsilon(mut self, epsilon: f64) -> Result<Self> {
        self.delta = Some(delta_for_epsilon(epsilon, &self)?);
        self.epsilon = Some(epsilon);
        Ok(self)
    }

    /// Same constants with a different BDG constant (`C2`, or `C4` in the
    /// `H^m` variant).
    pub fn with_bdg_constant(&self, c: f64) -> Result<Self> {
        let (xi, lambda) = exponents(self.alpha_sq, self.beta_sq, c)?;
        let mut out = self.clone();
        out.xi = xi;
        out.lambda = lambda;
        match self.variant {
            BoundVariant::VNorm => out.c2 = Some(c),
            BoundVariant::HmNorm { .. } => out.c4 = Some(c),
        }
        if let Some(eps) = self.epsilon {
            out = out.with_epsilon(eps)?;
        }
        Ok(out)
    }

    pub fn bdg_constant(&self) -> f64 {
        self.c2.or(self.c4).unwrap_or(0.0)
    }
}

/// Initial size `delta` at which the bound equals `1 - epsilon`:
/// `delta = threshold * epsilon^{1/lambda}`.
pub fn delta_for_epsilon(epsilon: f64, params: &BoundParameters) -> Result<f64> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::param("epsilon", format!("must lie in (0, 1), got {epsilon}")));
    }
    Ok(params.threshold * epsilon.powf(1.0 / params.lambda))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::NoiseModel;

    fn model() -> NoiseModel {
        NoiseModel::uniform(2, 0.1).unwrap()
    }

    #[test]
    fn navier_stokes_exponents() {
        assert_eq!(r_exponent(1.5, 1.5), 4.0);
        let p = derive_bound_params(1.5, 1.5, 0.3, 1.0, &model()).unwrap();
        assert_eq!(p.r, 4.0);
        assert!((p.xi - 0.005).abs() < 1e-17);
        assert!((p.lambda - 1.0 / 6.0).abs() < 1e-15);
        assert!((p.threshold - (0.005f64 / 0.3).powf(0.25)).abs() < 1e-15);
    }

    #[test]
    fn young_constant_is_the_optimum() {
        // sup_y C y^b - y^2/2, scanned numerically at x = 1
        for (c, b) in [(0.7, 1.5), (2.0, 1.0), (1.3, 0.5)] {
            let best = (1..200_000)
                .map(|i| i as f64 * 1e-4)
                .map(|y: f64| c * y.powf(b) - 0.5 * y * y)
                .fold(f64::MIN, f64::max);
            let c1 = young_constant(c, b);
            assert!((best - c1).abs() < 1e-6 * c1.max(1.0), "{c} {b}: {best} vs {c1}");
        }
        assert!((young_constant(1.0, 1.5) - 27.0 / 32.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_outside_domain() {
        let m = model();
        assert!(derive_bound_params(1.5, 2.0, 1.0, 1.0, &m).is_err());
        assert!(derive_bound_params(0.5, 1.5, 1.0, 1.0, &m).is_err());
        assert!(derive_bound_params(1.5, 1.5, 0.0, 1.0, &m).is_err());
        assert!(derive_bound_params(1.5, 1.5, 1.0, 1.0, &NoiseModel::none()).is_err());
        assert!(derive_hm_bound_params(3.0, 1.0, 1.0, &NoiseModel::none()).is_err());
    }

    #[test]
    fn delta_inverts_the_bound() {
        let p = derive_bound_params(1.5, 1.5, 0.3, 1.0, &model()).unwrap();
        let mut prev = 0.0;
        for eps in [0.01, 0.1, 0.5, 0.9, 0.999] {
            let delta = delta_for_epsilon(eps, &p).unwrap();
            assert!(delta > prev);
            prev = delta;
            assert!((p.bound_value(delta) - (1.0 - eps)).abs() <= 1e-12 * (1.0 - eps));
        }
        assert!((delta_for_epsilon(1.0 - 1e-12, &p).unwrap() - p.threshold).abs() < 1e-9 * p.threshold);
        assert!(delta_for_epsilon(1.0, &p).is_err());
        assert!(p.bound_value(p.threshold) <= 0.0);
    }

    #[test]
    fn scaling_noise_keeps_lambda() {
        let p = derive_bound_params(1.5, 1.5, 0.3, 2.0, &model()).unwrap();
        let q = derive_bound_params(1.5, 1.5, 0.3, 2.0, &NoiseModel::uniform(2, 0.37).unwrap()).unwrap();
        assert!((p.lambda - q.lambda).abs() < 1e-15);
        assert!((q.alpha_sq / p.alpha_sq - 13.69).abs() < 1e-12);
        assert!((p.lambda - 1.0 / 10.0).abs() < 1e-15);
    }

    #[test]
    fn hm_variant() {
        let p = derive_hm_bound_params(3.0, 0.2, 1.0, &model()).unwrap();
        assert_eq!(p.r, 1.0);
        assert!((p.threshold - 0.025).abs() < 1e-15);
        let e = 0.01;
        let direct = 1.0 - (4.0 * 0.2 * e / (2.0 * p.beta_sq - p.alpha_sq)).powf(p.lambda);
        assert!((p.bound_value(e) - direct).abs() < 1e-15);
        assert_eq!(p.observable(), Observable::Hm);
    }
}
