use serde::Serialize;

use super::bounds::BoundParameters;
use super::runner::EnsembleResults;
use crate::{Error, Result};

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959963984540054;

/// Absolute slack allowed below the bound on the survival interval.
pub const BOUND_SLACK: f64 = 0.02;

/// Smallest ensemble the supermartingale check accepts.
pub const MIN_PATHS: usize = 30;

/// Wilson score interval for `successes` out of `n` Bernoulli trials.
pub fn wilson_interval(successes: usize, n: usize, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n_f = n as f64;
    let p = successes as f64 / n_f;
    let z2 = z * z;
    let denom = 1.0 + z2 / n_f;
    let centre = (p + z2 / (2.0 * n_f)) / denom;
    let half = z * (p * (1.0 - p) / n_f + z2 / (4.0 * n_f * n_f)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SupermartingaleReport {
    pub paths: usize,
    pub lambda: f64,
    /// Mean of `sup_{s <= T ^ sigma} ||u(s)||^lambda`.
    pub lhs: f64,
    pub standard_error: f64,
    /// `(E ||u0||)^lambda`.
    pub rhs: f64,
    pub pass: bool,
    /// Mean of `||u(T ^ sigma)||^lambda`, the stopped value without the sup.
    pub terminal_lhs: f64,
    pub terminal_standard_error: f64,
    pub terminal_pass: bool,
}

// Absorbs the rounding of a mean of identical values.
const FLOAT_SLACK: f64 = 1e-12;

/// Tests `E sup ||u(t ^ sigma)||^lambda <= (E ||u0||)^lambda` with three
/// standard errors of sampling slack. Paths that ended in an error are left
/// out; at least [`MIN_PATHS`] must remain.
pub fn check_supermartingale(results: &EnsembleResults, params: &BoundParameters) -> Result<SupermartingaleReport> {
    let ok: Vec<_> = results.paths.iter().filter(|p| p.error.is_none()).collect();
    if ok.len() < MIN_PATHS {
        return Err(Error::Refused(format!(
            "insufficient statistics: {} usable paths, need at least {MIN_PATHS}",
            ok.len()
        )));
    }
    let lam = params.lambda;
    let sups: Vec<f64> = ok.iter().map(|p| p.sup_norm.powf(lam)).collect();
    let ends: Vec<f64> = ok.iter().map(|p| p.stopped_norm.powf(lam)).collect();
    let mean_u0 = ok.iter().map(|p| p.initial_norm).sum::<f64>() / ok.len() as f64;
    let rhs = mean_u0.powf(lam);
    let (lhs, se) = mean_and_se(&sups);
    let (terminal_lhs, terminal_se) = mean_and_se(&ends);
    let limit = |se: f64| rhs + 3.0 * se + FLOAT_SLACK * rhs;
    Ok(SupermartingaleReport {
        paths: ok.len(),
        lambda: lam,
        lhs,
        standard_error: se,
        rhs,
        pass: lhs <= limit(se),
        terminal_lhs,
        terminal_standard_error: terminal_se,
        terminal_pass: terminal_lhs <= limit(terminal_se),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    Fail,
    /// The bound is `<= 0` and says nothing.
    VacuousBound,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SurvivalEstimate {
    pub paths: usize,
    pub survivors: usize,
    pub p_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub mean_initial_norm: f64,
    pub bound_value: f64,
    pub slack: f64,
    pub verdict: Verdict,
}

/// Compares the survival fraction (no threshold crossing, no blow-up by the
/// horizon) with `1 - (E||u0|| / threshold)^lambda`. Survival up to a finite
/// horizon stands in for survival forever, which can only make the estimate
/// larger.
pub fn check_probability_bound(results: &EnsembleResults, params: &BoundParameters) -> SurvivalEstimate {
    let n = results.len();
    let survivors = results.survivors();
    let (ci_low, ci_high) = wilson_interval(survivors, n, Z95);
    let mean_initial_norm = results.mean_initial_norm();
    let bound_value = params.bound_value(mean_initial_norm);
    let verdict = if !(bound_value > 0.0) {
        Verdict::VacuousBound
    } else if ci_low >= bound_value - BOUND_SLACK {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    SurvivalEstimate {
        paths: n,
        survivors,
        p_hat: survivors as f64 / n.max(1) as f64,
        ci_low,
        ci_high,
        mean_initial_norm,
        bound_value,
        slack: BOUND_SLACK,
        verdict,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub bdg_constant: f64,
    pub lambda: f64,
    pub bound_value: f64,
    pub verdict: Verdict,
}

/// Default BDG constants for [`bdg_sweep`].
pub const BDG_SWEEP: [f64; 4] = [0.5, 1.0, 2.0, 4.0];

/// The probability bound re-evaluated for each BDG constant. The stopping
/// level does not depend on it, so one ensemble serves every row.
pub fn bdg_sweep(results: &EnsembleResults, params: &BoundParameters, constants: &[f64]) -> Result<Vec<SweepRow>> {
    constants
        .iter()
        .map(|&c| {
            let p = params.with_bdg_constant(c)?;
            let est = check_probability_bound(results, &p);
            Ok(SweepRow { bdg_constant: c, lambda: p.lambda, bound_value: est.bound_value, verdict: est.verdict })
        })
        .collect()
}

/// True when no later estimate sits above an earlier one by more than their
/// intervals allow.
pub fn survival_nonincreasing(estimates: &[SurvivalEstimate]) -> bool {
    estimates
        .iter()
        .enumerate()
        .all(|(i, a)| estimates[i + 1..].iter().all(|b| b.p_hat <= a.p_hat || b.ci_low <= a.ci_high))
}
