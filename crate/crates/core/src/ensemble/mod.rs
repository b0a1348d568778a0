//! Monte Carlo ensembles and the small-data global-existence bound.
//!
//! The bound says that solutions started with `E||u0||` below a threshold
//! never reach it with probability at least `1 - (E||u0|| / threshold)^lambda`.
//! This module computes the exponents and thresholds from the noise and the
//! calibrated bilinear constants, runs ensembles, and checks the two
//! statistical consequences: the stopped supermartingale inequality and the
//! survival probability.

mod bounds;
mod calibrate;
mod initial;
mod runner;
mod stats;

pub use bounds::{
    delta_for_epsilon, derive_bound_params, derive_hm_bound_params, r_exponent, young_constant, BoundParameters,
    BoundVariant,
};
pub use calibrate::{calibrate, Calibration, CALIBRATION_SAMPLES, SAFETY_FACTOR};
pub use initial::{AmplitudeNorm, InitialCondition};
pub use runner::{run_ensemble, stopping_config, EnsembleResults, PathSummary, RunOptions, SIGMA_DETECTOR};
pub use stats::{
    bdg_sweep, check_probability_bound, check_supermartingale, survival_nonincreasing, wilson_interval,
    SupermartingaleReport, SurvivalEstimate, SweepRow, Verdict, BDG_SWEEP, BOUND_SLACK, MIN_PATHS, Z95,
};
