use rand::Rng;
use serde::Serialize;

use super::integrator::{Integrator, RngIncrements};
use super::record::PathStatus;
use super::{IncrementSource, SolverConfig};
use crate::noise::NoiseOperator;
use crate::spectral::{InnerProduct, SpectralField};
use crate::Result;

/// Diagnostics of `w = u1 - u2` for two solutions driven by the same noise.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DivergenceReport {
    pub times: Vec<f64>,
    /// `||w(t)||` (V norm) at every step.
    pub w_norm: Vec<f64>,
    pub sup_w: f64,
    /// `int |Aw|^2` (trapezoid).
    pub int_aw_sq: f64,
    /// Level `K` of the two-solution stopping time.
    pub level: f64,
    /// First grid time where
    /// `sup (||u1||^2 + ||u2||^2) + int (||u1||^2 |Au1|^2 + ||u2||^2 |Au2|^2) >= K`.
    pub xi_hit: Option<f64>,
    pub status: [PathStatus; 2],
}

/// Evolves `u0` and `u0b` under identical Wiener increments until the
/// horizon or until either run ends. Detectors in `cfg` are not consulted.
pub fn coupled_evolve<O: NoiseOperator + ?Sized, R: Rng + ?Sized>(
    u0: &SpectralField,
    u0b: &SpectralField,
    cfg: &SolverConfig,
    op: &O,
    rng: &mut R,
    level: f64,
) -> Result<DivergenceReport> {
    u0.grid().ensure_same(u0b.grid())?;
    let integ = Integrator::new(u0.grid(), cfg, op)?;
    let mut a = integ.initial_state(u0)?;
    let mut b = integ.initial_state(u0b)?;
    let mut source = RngIncrements(rng);

    let w = &a.u - &b.u;
    let mut times = vec![0.0];
    let mut w_norm = vec![w.norm_v()];
    let mut prev_aw = w.norm_sq(InnerProduct::DA);
    let mut int_aw_sq = 0.0;

    let pair = |x: &SpectralField, y: &SpectralField| {
        let (vx, vy) = (x.norm_sq(InnerProduct::V), x.norm_sq(InnerProduct::DA));
        let (wx, wy) = (y.norm_sq(InnerProduct::V), y.norm_sq(InnerProduct::DA));
        (vx + wx, vx * vy + wx * wy)
    };
    let (v0, mut prev_rate) = pair(&a.u, &b.u);
    let mut sup_v = v0;
    let mut int_rate = 0.0;
    let mut xi_hit = (sup_v >= level).then_some(0.0);
    let mut status = [None, None];

    while a.step < cfg.steps() && status.iter().all(Option::is_none) {
        let inc = source.next_increment(cfg.dt, op.directions())?;
        status[0] = integ.step(&mut a, &inc)?.status;
        status[1] = integ.step(&mut b, &inc)?.status;
        let t = a.time();
        let w = &a.u - &b.u;
        let aw = w.norm_sq(InnerProduct::DA);
        int_aw_sq += 0.5 * cfg.dt * (prev_aw + aw);
        prev_aw = aw;
        times.push(t);
        w_norm.push(w.norm_v());

        let (v, rate) = pair(&a.u, &b.u);
        sup_v = sup_v.max(v);
        int_rate += 0.5 * cfg.dt * (prev_rate + rate);
        prev_rate = rate;
        if xi_hit.is_none() && sup_v + int_rate >= level {
            xi_hit = Some(t);
        }
    }
    Ok(DivergenceReport {
        sup_w: w_norm.iter().copied().fold(0.0, f64::max),
        times,
        w_norm,
        int_aw_sq,
        level,
        xi_hit,
        status: status.map(|s| s.unwrap_or(PathStatus::Survived)),
    })
}
