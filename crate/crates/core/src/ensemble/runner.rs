use rayon::prelude::*;
use serde::Serialize;

use super::bounds::{BoundParameters, BoundVariant};
use super::initial::InitialCondition;
use crate::dynamics::{evolve, Observable, PathRecord, PathStatus, SolverConfig, StopRule};
use crate::noise::{path_stream, NoiseOperator};
use crate::spectral::TorusGrid;
use crate::{Error, Result};

/// Name of the terminal detector placed at the bound's threshold.
pub const SIGMA_DETECTOR: &str = "sigma_xi";

/// Per-path quantities the statistical checks consume.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PathSummary {
    pub index: usize,
    /// `None` when the path failed with an error.
    pub status: Option<PathStatus>,
    pub initial_norm: f64,
    /// `sup_{s <= T ^ sigma} ||u(s)||` in the bound's norm, over every step.
    pub sup_norm: f64,
    /// `||u(T ^ sigma)||`.
    pub stopped_norm: f64,
    pub survived: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct EnsembleResults {
    pub base_seed: u64,
    pub threshold: f64,
    pub observable: Observable,
    pub paths: Vec<PathSummary>,
    /// Full records, kept only on request.
    #[serde(skip)]
    pub records: Vec<Option<PathRecord>>,
}

impl EnsembleResults {
    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    pub fn survivors(&self) -> usize {
        self.paths.iter().filter(|p| p.survived).count()
    }

    pub fn errors(&self) -> usize {
        self.paths.iter().filter(|p| p.error.is_some()).count()
    }

    pub fn overflowed(&self) -> usize {
        self.paths.iter().filter(|p| p.status.is_some_and(|s| s.is_failure())).count()
    }

    pub fn mean_initial_norm(&self) -> f64 {
        self.paths.iter().map(|p| p.initial_norm).sum::<f64>() / self.paths.len().max(1) as f64
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct RunOptions {
    pub keep_records: bool,
    /// Seed of the initial-field stream; the base seed when absent.
    pub initial_seed: Option<u64>,
}

/// Solver configuration with the threshold detector of `params` installed.
pub fn stopping_config(cfg: &SolverConfig, params: &BoundParameters) -> SolverConfig {
    let mut cfg = cfg.clone();
    if let BoundVariant::HmNorm { m } = params.variant {
        cfg.sobolev_order = m;
    }
    cfg.detectors.retain(|d| d.name != SIGMA_DETECTOR);
    cfg.detectors.push(StopRule {
        name: SIGMA_DETECTOR.into(),
        observable: params.observable(),
        level: params.threshold,
        terminal: true,
    });
    cfg
}

/// Runs `paths` independent trajectories. Path `i` draws its noise from
/// `path_stream(base_seed, i)`, so results do not depend on scheduling.
/// Per-path errors are recorded, never propagated.
#[allow(clippy::too_many_arguments)]
pub fn run_ensemble<O: NoiseOperator + ?Sized>(
    grid: &TorusGrid,
    cfg: &SolverConfig,
    model: &O,
    initial: &InitialCondition,
    paths: usize,
    base_seed: u64,
    params: &BoundParameters,
    opts: RunOptions,
) -> Result<EnsembleResults> {
    if paths == 0 {
        return Err(Error::param("paths", "at least one path is required"));
    }
    let cfg = stopping_config(cfg, params);
    cfg.validate()?;
    let obs = params.observable();
    let m = cfg.sobolev_order;
    let initial_seed = opts.initial_seed.unwrap_or(base_seed);

    let outcomes: Vec<(PathSummary, Option<PathRecord>)> = (0..paths)
        .into_par_iter()
        .map(|i| {
            let run = || -> Result<PathRecord> {
                let u0 = initial.build(grid, initial_seed, i as u64, m)?;
                evolve(&u0, &cfg, model, &mut path_stream(base_seed, i as u64))
            };
            match run() {
                Ok(rec) => {
                    let summary = PathSummary {
                        index: i,
                        status: Some(rec.status),
                        initial_norm: rec.first().observe(obs),
                        sup_norm: if obs == Observable::Hm { rec.sup_hm } else { rec.sup_v },
                        stopped_norm: rec.last().observe(obs),
                        survived: rec.status == PathStatus::Survived,
                        error: None,
                    };
                    (summary, opts.keep_records.then_some(rec))
                }
                Err(e) => {
                    let summary = PathSummary {
                        index: i,
                        status: None,
                        initial_norm: f64::NAN,
                        sup_norm: f64::NAN,
                        stopped_norm: f64::NAN,
                        survived: false,
                        error: Some(e.to_string()),
                    };
                    (summary, None)
                }
            }
        })
        .collect();
    let (summaries, records) = outcomes.into_iter().unzip();
    Ok(EnsembleResults {
        base_seed,
        threshold: params.threshold,
        observable: obs,
        paths: summaries,
        records,
    })
}
