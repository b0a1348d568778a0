use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::fft::transform_nd;
use super::grid::{is_canonical, TorusGrid};
use crate::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Weighted spectral inner products on mean-zero fields.
///
/// Weights per mode: `H` 1, `V` `|k|^2`, `DA` `|k|^4`, `Hm(m)` `(1+|k|^2)^m`.
/// `V` and `DA` correspond to `|A^{1/2} u|` and `|A u|` for the unit-viscosity
/// Stokes operator.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum InnerProduct {
    H,
    V,
    DA,
    Hm(f64),
}

impl InnerProduct {
    #[inline]
    pub fn weight(self, ksq: f64) -> f64 {
        match self {
            InnerProduct::H => 1.0,
            InnerProduct::V => ksq,
            InnerProduct::DA => ksq * ksq,
            InnerProduct::Hm(m) => (1.0 + ksq).powf(m),
        }
    }

    pub fn label(self) -> String {
        match self {
            InnerProduct::H => "H".into(),
            InnerProduct::V => "V".into(),
            InnerProduct::DA => "D(A)".into(),
            InnerProduct::Hm(m) => format!("H^{m}"),
        }
    }
}

/// Norm suite of a single field.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    /// `|u|`, the L2 norm.
    pub h: f64,
    /// `||u|| = |grad u|`.
    pub v: f64,
    /// `|A u|` at unit viscosity.
    pub da: f64,
    /// Sobolev order used for `hm`.
    pub m: f64,
    pub hm: f64,
    /// Collocation-grid surrogate of the `W^{1,inf}` norm.
    pub w1inf: f64,
}

/// Fourier coefficients `u_hat(k)` of a real, mean-zero vector field with
/// `d` components. Physical values are `u(x) = sum_k u_hat(k) e^{i k.x}`,
/// so `|u|^2 = sum_k |u_hat(k)|^2` is the grid average of `|u(x)|^2`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralField {
    grid: TorusGrid,
    comps: Vec<Vec<Complex64>>,
}

impl SpectralField {
    pub fn zeros(grid: &TorusGrid) -> Self {
        Self {
            grid: grid.clone(),
            comps: vec![vec![ZERO; grid.len()]; grid.dim()],
        }
    }

    /// Build from raw per-component coefficient arrays in FFT order. The
    /// result is symmetrized (Hermitian, zero mean, empty Nyquist plane).
    pub fn from_components(grid: &TorusGrid, comps: Vec<Vec<Complex64>>) -> Result<Self> {
        if comps.len() != grid.dim() || comps.iter().any(|c| c.len() != grid.len()) {
            return Err(Error::param(
                "components",
                format!("expected {} arrays of {} coefficients", grid.dim(), grid.len()),
            ));
        }
        let mut f = Self {
            grid: grid.clone(),
            comps,
        };
        f.symmetrize();
        Ok(f)
    }

    /// Field supported on the pair `{k, -k}` with `u_hat(k) = amplitude * e`
    /// for a unit polarization `e` orthogonal to `k`.
    pub fn single_mode(grid: &TorusGrid, k: &[i64], amplitude: f64) -> Result<Self> {
        let pol = default_polarization(k)?;
        Self::single_mode_with(grid, k, &pol[..grid.dim()], Complex64::new(amplitude, 0.0))
    }

    /// Sets `u_hat(k) = amplitude * polarization` and the conjugate at `-k`;
    /// the polarization is used as given (not projected).
    pub fn single_mode_with(
        grid: &TorusGrid,
        k: &[i64],
        polarization: &[f64],
        amplitude: Complex64,
    ) -> Result<Self> {
        let mut f = Self::zeros(grid);
        let values: Vec<Complex64> = polarization.iter().map(|&p| amplitude * p).collect();
        f.set_mode(k, &values)?;
        Ok(f)
    }

    /// Writes `values` at `k` and their conjugates at `-k`.
    pub fn set_mode(&mut self, k: &[i64], values: &[Complex64]) -> Result<()> {
        let d = self.grid.dim();
        if k.len() != d || values.len() != d {
            return Err(Error::param("k", format!("expected {d} components")));
        }
        if k.iter().all(|&ki| ki == 0) {
            return Err(Error::param("k", "the zero mode is excluded (mean-zero fields)"));
        }
        let idx = self
            .grid
            .index_of(k)
            .filter(|&i| self.grid.is_representable(i))
            .ok_or_else(|| Error::param("k", format!("{k:?} is outside the representable lattice")))?;
        let neg = self.grid.negated_index(idx);
        for c in 0..d {
            self.comps[c][idx] = values[c];
            self.comps[c][neg] = values[c].conj();
        }
        Ok(())
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    pub fn component(&self, c: usize) -> &[Complex64] {
        &self.comps[c]
    }

    pub(crate) fn component_mut(&mut self, c: usize) -> &mut [Complex64] {
        &mut self.comps[c]
    }

    pub(crate) fn components_mut(&mut self) -> &mut [Vec<Complex64>] {
        &mut self.comps
    }

    /// Coefficient vector at flat index `idx` (unused components zero).
    pub fn coeff(&self, idx: usize) -> [Complex64; 3] {
        let mut out = [ZERO; 3];
        for (c, comp) in self.comps.iter().enumerate() {
            out[c] = comp[idx];
        }
        out
    }

    pub fn mode(&self, k: &[i64]) -> Option<[Complex64; 3]> {
        self.grid.index_of(k).map(|idx| self.coeff(idx))
    }

    pub fn is_zero(&self) -> bool {
        self.comps.iter().flatten().all(|z| *z == ZERO)
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.scale(s);
        out
    }

    pub fn scale(&mut self, s: f64) {
        for z in self.comps.iter_mut().flatten() {
            *z *= s;
        }
    }

    /// `self += a * x`.
    pub fn axpy(&mut self, a: f64, x: &SpectralField) {
        assert!(self.grid.same_as(&x.grid), "axpy on mismatched grids");
        for (dst, src) in self.comps.iter_mut().zip(&x.comps) {
            for (d, s) in dst.iter_mut().zip(src) {
                *d += s * a;
            }
        }
    }

    /// Multiplies each mode by `f(|k|^2)`.
    pub fn map_radial(&self, f: impl Fn(f64) -> f64) -> Self {
        let mut out = self.clone();
        let factors: Vec<f64> = self.grid.tables().ksq.iter().map(|&k| f(k)).collect();
        for comp in &mut out.comps {
            for (z, &s) in comp.iter_mut().zip(&factors) {
                *z *= s;
            }
        }
        out
    }

    /// `Re sum_k w(k) x_hat(k) . conj(y_hat(k))`.
    pub fn inner(&self, other: &SpectralField, kind: InnerProduct) -> Result<f64> {
        self.grid.ensure_same(&other.grid)?;
        let ksq = &self.grid.tables().ksq;
        let mut acc = 0.0;
        for (idx, &k) in ksq.iter().enumerate() {
            let w = kind.weight(k);
            let mut dot = 0.0;
            for (a, b) in self.comps.iter().zip(&other.comps) {
                dot += (a[idx] * b[idx].conj()).re;
            }
            acc += w * dot;
        }
        Ok(acc)
    }

    pub fn norm_sq(&self, kind: InnerProduct) -> f64 {
        let ksq = &self.grid.tables().ksq;
        let mut acc = 0.0;
        for (idx, &k) in ksq.iter().enumerate() {
            let e: f64 = self.comps.iter().map(|c| c[idx].norm_sqr()).sum();
            if e != 0.0 {
                acc += kind.weight(k) * e;
            }
        }
        acc
    }

    pub fn norm(&self, kind: InnerProduct) -> f64 {
        self.norm_sq(kind).sqrt()
    }

    pub fn norm_h(&self) -> f64 {
        self.norm(InnerProduct::H)
    }

    pub fn norm_v(&self) -> f64 {
        self.norm(InnerProduct::V)
    }

    pub fn norm_da(&self) -> f64 {
        self.norm(InnerProduct::DA)
    }

    pub fn norm_hm(&self, m: f64) -> f64 {
        self.norm(InnerProduct::Hm(m))
    }

    /// Maximum pointwise Euclidean magnitude on the collocation grid.
    pub fn norm_linf(&self) -> f64 {
        let phys: Vec<Vec<Complex64>> = (0..self.dim()).map(|c| self.inverse_component(&self.comps[c])).collect();
        max_magnitude(&phys)
    }

    /// `max |u| + max |grad u|` over collocation points, with `|grad u|` the
    /// Frobenius norm of the velocity gradient.
    pub fn norm_w1inf(&self) -> f64 {
        let d = self.dim();
        let phys: Vec<Vec<Complex64>> = (0..d).map(|c| self.inverse_component(&self.comps[c])).collect();
        let mut grads = Vec::with_capacity(d * d);
        for c in 0..d {
            for j in 0..d {
                let deriv: Vec<Complex64> = (0..self.grid.len())
                    .map(|idx| {
                        let k = self.grid.wavevector(idx);
                        self.comps[c][idx] * Complex64::new(0.0, k[j] as f64)
                    })
                    .collect();
                grads.push(self.inverse_component(&deriv));
            }
        }
        max_magnitude(&phys) + max_magnitude(&grads)
    }

    pub fn norms(&self, m: f64) -> NormReport {
        NormReport {
            h: self.norm_h(),
            v: self.norm_v(),
            da: self.norm_da(),
            m,
            hm: self.norm_hm(m),
            w1inf: self.norm_w1inf(),
        }
    }

    /// Leray projection: removes `k (k . u_hat) / |k|^2` from every mode.
    pub fn leray_project(&self) -> Self {
        let mut out = self.clone();
        out.leray_project_in_place();
        out
    }

    pub fn leray_project_in_place(&mut self) {
        let d = self.dim();
        for idx in 1..self.grid.len() {
            let k = self.grid.wavevector(idx);
            let ksq = (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) as f64;
            let mut dot = ZERO;
            for c in 0..d {
                dot += self.comps[c][idx] * k[c] as f64;
            }
            if dot == ZERO {
                continue;
            }
            let s = dot / ksq;
            for c in 0..d {
                self.comps[c][idx] -= s * k[c] as f64;
            }
        }
    }

    /// Stokes operator `nu A = -nu P_H Delta`, diagonal `nu |k|^2` on
    /// divergence-free torus fields.
    pub fn apply_a(&self, nu: f64) -> Result<Self> {
        check_viscosity(nu)?;
        Ok(self.map_radial(|ksq| nu * ksq))
    }

    /// `(nu A)^alpha` with multiplier `(nu |k|^2)^alpha`; the mean mode stays 0.
    pub fn apply_a_power(&self, alpha: f64, nu: f64) -> Result<Self> {
        check_viscosity(nu)?;
        Ok(self.map_radial(|ksq| if ksq == 0.0 { 0.0 } else { (nu * ksq).powf(alpha) }))
    }

    /// Largest `|k . u_hat| / (|k| |u_hat|)` over nonzero modes.
    pub fn divergence_residual(&self) -> f64 {
        let d = self.dim();
        let mut worst = 0.0f64;
        for idx in 1..self.grid.len() {
            let k = self.grid.wavevector(idx);
            let mut dot = ZERO;
            let mut mag = 0.0;
            for c in 0..d {
                dot += self.comps[c][idx] * k[c] as f64;
                mag += self.comps[c][idx].norm_sqr();
            }
            if mag > 0.0 {
                worst = worst.max(dot.norm() / (self.grid.ksq(idx).sqrt() * mag.sqrt()));
            }
        }
        worst
    }

    /// `max |u_hat(k) - conj(u_hat(-k))|` relative to the largest coefficient.
    pub fn hermitian_defect(&self) -> f64 {
        let scale = self.comps.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max);
        if scale == 0.0 {
            return 0.0;
        }
        let mut worst = 0.0f64;
        for idx in 0..self.grid.len() {
            if !self.grid.is_representable(idx) {
                continue;
            }
            let neg = self.grid.negated_index(idx);
            for comp in &self.comps {
                worst = worst.max((comp[idx] - comp[neg].conj()).norm());
            }
        }
        worst / scale
    }

    /// Projects onto real mean-zero fields: averages each conjugate pair and
    /// clears the mean and Nyquist modes.
    pub fn symmetrize(&mut self) {
        let grid = self.grid.clone();
        for comp in &mut self.comps {
            comp[0] = ZERO;
            for idx in 1..grid.len() {
                if !grid.is_representable(idx) {
                    comp[idx] = ZERO;
                    continue;
                }
                let k = grid.wavevector(idx);
                if !is_canonical(&k[..grid.dim()]) {
                    continue;
                }
                let neg = grid.negated_index(idx);
                let avg = (comp[idx] + comp[neg].conj()) * 0.5;
                comp[idx] = avg;
                comp[neg] = avg.conj();
            }
        }
    }

    /// Zeroes every mode outside the dealiasing mask.
    pub fn dealias(&self) -> Self {
        let mut out = self.clone();
        for idx in 0..self.grid.len() {
            if !self.grid.is_dealiased(idx) {
                for comp in &mut out.comps {
                    comp[idx] = ZERO;
                }
            }
        }
        out
    }

    /// True when no energy sits outside the dealiasing mask.
    pub fn is_dealiased(&self) -> bool {
        (0..self.grid.len())
            .filter(|&idx| !self.grid.is_dealiased(idx))
            .all(|idx| self.comps.iter().all(|c| c[idx] == ZERO))
    }

    pub fn to_physical(&self) -> PhysicalField {
        let comps = self
            .comps
            .iter()
            .map(|c| self.inverse_component(c).into_iter().map(|z| z.re).collect())
            .collect();
        PhysicalField {
            grid: self.grid.clone(),
            comps,
        }
    }

    /// Complex physical samples; the imaginary parts are rounding noise for
    /// Hermitian fields.
    pub fn to_physical_complex(&self) -> Vec<Vec<Complex64>> {
        self.comps.iter().map(|c| self.inverse_component(c)).collect()
    }

    fn inverse_component(&self, spectral: &[Complex64]) -> Vec<Complex64> {
        let mut data = spectral.to_vec();
        transform_nd(
            &mut data,
            self.grid.resolution(),
            self.grid.dim(),
            self.grid.fft().inverse.as_ref(),
        );
        data
    }
}

fn max_magnitude(fields: &[Vec<Complex64>]) -> f64 {
    let len = fields.first().map_or(0, |f| f.len());
    (0..len)
        .map(|i| fields.iter().map(|f| f[i].re * f[i].re).sum::<f64>())
        .fold(0.0, f64::max)
        .sqrt()
}

fn check_viscosity(nu: f64) -> Result<()> {
    if nu > 0.0 && nu.is_finite() {
        Ok(())
    } else {
        Err(Error::param("nu", format!("viscosity must be positive, got {nu}")))
    }
}

/// Unit vector orthogonal to `k`: `(-k2, k1)/|k|` in 2-D, `k x e_z` (or
/// `k x e_x` when `k` is parallel to `e_z`) normalized in 3-D.
pub fn default_polarization(k: &[i64]) -> Result<[f64; 3]> {
    let kf: Vec<f64> = k.iter().map(|&x| x as f64).collect();
    let v = match kf.len() {
        2 => [-kf[1], kf[0], 0.0],
        3 => {
            if kf[0] == 0.0 && kf[1] == 0.0 {
                // k x e_x = (0, k3, -k2)
                [0.0, kf[2], -kf[1]]
            } else {
                // k x e_z = (k2, -k1, 0)
                [kf[1], -kf[0], 0.0]
            }
        }
        _ => return Err(Error::param("k", "wavevector must have 2 or 3 components")),
    };
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    if n == 0.0 {
        return Err(Error::param("k", "the zero mode has no polarization"));
    }
    Ok([v[0] / n, v[1] / n, v[2] / n])
}

/// Real samples of a vector field on the collocation grid.
#[derive(Clone, Debug)]
pub struct PhysicalField {
    grid: TorusGrid,
    comps: Vec<Vec<f64>>,
}

impl PhysicalField {
    pub fn new(grid: &TorusGrid, comps: Vec<Vec<f64>>) -> Result<Self> {
        if comps.len() != grid.dim() || comps.iter().any(|c| c.len() != grid.len()) {
            return Err(Error::param(
                "components",
                format!("expected {} arrays of {} samples", grid.dim(), grid.len()),
            ));
        }
        Ok(Self {
            grid: grid.clone(),
            comps,
        })
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn component(&self, c: usize) -> &[f64] {
        &self.comps[c]
    }

    /// Grid average of `|u(x)|^2`.
    pub fn mean_energy(&self) -> f64 {
        let total: f64 = self.comps.iter().flatten().map(|x| x * x).sum();
        total / self.grid.len() as f64
    }

    /// Forward transform, normalized so that `to_spectral(to_physical(u)) = u`.
    /// The mean and Nyquist modes are dropped.
    pub fn to_spectral(&self) -> SpectralField {
        let scale = 1.0 / self.grid.len() as f64;
        let comps = self
            .comps
            .iter()
            .map(|c| {
                let mut data: Vec<Complex64> = c.iter().map(|&x| Complex64::new(x, 0.0)).collect();
                transform_nd(
                    &mut data,
                    self.grid.resolution(),
                    self.grid.dim(),
                    self.grid.fft().forward.as_ref(),
                );
                data.iter_mut().for_each(|z| *z *= scale);
                data
            })
            .collect();
        let mut f = SpectralField {
            grid: self.grid.clone(),
            comps,
        };
        f.symmetrize();
        f
    }
}

impl Add for &SpectralField {
    type Output = SpectralField;
    fn add(self, rhs: &SpectralField) -> SpectralField {
        let mut out = self.clone();
        out.axpy(1.0, rhs);
        out
    }
}

impl Sub for &SpectralField {
    type Output = SpectralField;
    fn sub(self, rhs: &SpectralField) -> SpectralField {
        let mut out = self.clone();
        out.axpy(-1.0, rhs);
        out
    }
}

impl Mul<f64> for &SpectralField {
    type Output = SpectralField;
    fn mul(self, rhs: f64) -> SpectralField {
        self.scaled(rhs)
    }
}

impl Neg for &SpectralField {
    type Output = SpectralField;
    fn neg(self) -> SpectralField {
        self.scaled(-1.0)
    }
}
