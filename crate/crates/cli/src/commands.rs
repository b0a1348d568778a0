use std::path::Path;

use serde::Serialize;
use serde_json::{json, Value};
use sns_core::dynamics::{evolve, PathRecord};
use sns_core::ensemble::{
    bdg_sweep, check_probability_bound, check_supermartingale, delta_for_epsilon, derive_bound_params,
    derive_hm_bound_params, r_exponent, run_ensemble, BoundParameters, RunOptions, Verdict, BDG_SWEEP, MIN_PATHS,
};
use sns_core::noise::{path_stream, verify_hypotheses, NoiseModel, VerifyOptions};
use sns_core::nonlinearity::{bilinear_b, bilinear_b_oracle, probe_estimate_with_order, BilinearProbeReport, EstimateId};
use sns_core::spectral::{random_field, InnerProduct, SpectralField, TorusGrid};

use crate::config::ExperimentConfig;
use crate::output::OutDir;

/// Process exit statuses.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Exit {
    Ok = 0,
    Config = 1,
    Overflow = 2,
    VerifyFailed = 3,
    StatisticalFail = 4,
    Io = 5,
}

#[derive(Debug)]
pub struct Failure {
    pub exit: Exit,
    pub message: String,
}

impl Failure {
    pub fn config(message: impl Into<String>) -> Self {
        Self { exit: Exit::Config, message: message.into() }
    }

    pub fn io(message: impl Into<String>) -> Self {
        Self { exit: Exit::Io, message: message.into() }
    }
}

pub type Outcome = Result<(Exit, Value), Failure>;

fn print_json(v: &Value) {
    println!("{}", serde_json::to_string_pretty(v).expect("JSON values always serialize"));
}

pub fn simulate(cfg: &ExperimentConfig, out: &Path) -> Outcome {
    let grid = cfg.grid().map_err(Failure::config)?;
    let params = needs_bound(cfg).then(|| cfg.bound_params()).transpose().map_err(Failure::config)?;
    let ic = cfg.initial_condition(params.as_ref().map(|p| &p.0)).map_err(Failure::config)?;
    let solver = cfg.solver();
    let seed = cfg.ensemble.base_seed;
    let u0 = ic.build(&grid, cfg.initial_seed(), 0, solver.sobolev_order).map_err(|e| Failure::config(e.to_string()))?;
    let rec = evolve(&u0, &solver, &cfg.noise, &mut path_stream(seed, 0)).map_err(|e| Failure::config(e.to_string()))?;

    let dir = OutDir::create(out).map_err(Failure::io)?;
    let csv = dir.write(&PathRecord::file_name(0), rec.to_csv().as_bytes()).map_err(Failure::io)?;
    let summary = json!({
        "config": cfg,
        "seeds": {"base": seed},
        "status": rec.status,
        "terminal_time": rec.terminal_time(),
        "initial": rec.first().norms,
        "final": rec.last().norms,
        "sup_v": rec.sup_v,
        "sup_hm": rec.sup_hm,
        "hits": rec.hits,
        "csv": csv,
    });
    dir.write_json("summary.json", &summary).map_err(Failure::io)?;
    print_json(&summary);
    let exit = if rec.status.is_failure() { Exit::Overflow } else { Exit::Ok };
    Ok((exit, summary))
}

fn needs_bound(cfg: &ExperimentConfig) -> bool {
    cfg.initial.relative_to != crate::config::AmplitudeScale::Absolute
}

#[derive(Serialize)]
struct InvariantCheck {
    name: String,
    passed: bool,
    worst: f64,
    tolerance: f64,
}

impl InvariantCheck {
    fn new(name: &str, worst: f64, tolerance: f64) -> Self {
        Self { name: name.into(), passed: worst <= tolerance, worst, tolerance }
    }
}

fn relative_gap(a: &SpectralField, b: &SpectralField) -> f64 {
    let mut d = a.clone();
    d.axpy(-1.0, b);
    d.norm_h() / a.norm_h().max(b.norm_h()).max(f64::MIN_POSITIVE)
}

/// Exact identities of the discretization on a handful of random fields,
/// plus the brute-force cross-check of the convective term at `N = 4`.
fn invariant_suite(grid: &TorusGrid, seed: u64) -> Vec<InvariantCheck> {
    let mut rng = sns_core::noise::tagged_stream("cli-verify", seed, 0);
    let fields: Vec<SpectralField> = (0..8).map(|_| random_field(grid, 1.5, &mut rng)).collect();
    let worst = |f: &dyn Fn(&SpectralField, &SpectralField) -> f64| {
        fields.iter().zip(fields.iter().cycle().skip(1)).map(|(u, v)| f(u, v)).fold(0.0, f64::max)
    };
    let mut checks = vec![
        InvariantCheck::new("leray-idempotent", worst(&|u, _| relative_gap(&u.leray_project(), u)), 1e-12),
        InvariantCheck::new("divergence-free", worst(&|u, _| u.divergence_residual()), 1e-12),
        InvariantCheck::new(
            "parseval",
            worst(&|u, _| {
                let e = u.norm_sq(InnerProduct::H);
                (u.to_physical().mean_energy() - e).abs() / e
            }),
            1e-12,
        ),
        InvariantCheck::new(
            "A^1/2-is-V-norm",
            worst(&|u, _| {
                let a = u.apply_a_power(0.5, 1.0).map(|f| f.norm_h()).unwrap_or(f64::NAN);
                (a - u.norm_v()).abs() / u.norm_v()
            }),
            1e-12,
        ),
        InvariantCheck::new(
            "B1-cancellation",
            worst(&|u, v| match bilinear_b(u, v).and_then(|b| b.inner(v, InnerProduct::H)) {
                Ok(x) => x.abs() / (u.norm_v() * v.norm_sq(InnerProduct::V)),
                Err(_) => f64::INFINITY,
            }),
            1e-10,
        ),
        InvariantCheck::new(
            "B-divergence-free",
            worst(&|u, v| bilinear_b(u, v).map(|b| b.divergence_residual()).unwrap_or(f64::INFINITY)),
            1e-12,
        ),
    ];
    let oracle = TorusGrid::new(grid.dim(), 4).and_then(|small| {
        let mut worst = 0.0f64;
        for _ in 0..8 {
            let u = random_field(&small, 1.0, &mut rng);
            let v = random_field(&small, 1.0, &mut rng);
            worst = worst.max(relative_gap(&bilinear_b(&u, &v)?, &bilinear_b_oracle(&u, &v)?));
        }
        Ok(worst)
    });
    checks.push(InvariantCheck::new("oracle-N4", oracle.unwrap_or(f64::INFINITY), 1e-10));
    checks
}

pub fn verify(cfg: &ExperimentConfig, out: &Path, samples: usize) -> Outcome {
    let grid = cfg.grid().map_err(Failure::config)?;
    let seed = cfg.ensemble.base_seed;
    let m = cfg.sobolev_order();
    let invariants = invariant_suite(&grid, seed);
    let probes = probes(&grid, samples, seed, m).map_err(Failure::config)?;
    let opts = VerifyOptions { seed, sobolev_order: m, ..VerifyOptions::default() };
    let noise = verify_hypotheses(&cfg.noise, &grid, &opts).map_err(|e| Failure::config(e.to_string()))?;

    let mut first_failure: Option<String> = None;
    for c in invariants.iter().filter(|c| !c.passed) {
        first_failure.get_or_insert_with(|| format!("spectral invariant {} (worst {:e})", c.name, c.worst));
    }
    if let Some(c) = noise.failures().next() {
        first_failure.get_or_insert_with(|| format!("noise hypothesis {}: {}", c.name, c.detail));
    }
    if let Some(p) = probes.iter().find(|p| !p.max_ratio.is_finite()) {
        first_failure.get_or_insert_with(|| format!("probe {} has a non-finite ratio", p.id));
    }
    let report = json!({
        "grid": {"d": grid.dim(), "N": grid.resolution()},
        "passed": first_failure.is_none(),
        "first_failure": first_failure,
        "spectral": invariants,
        "probes": probes,
        "noise": noise,
    });
    let dir = OutDir::create(out).map_err(Failure::io)?;
    dir.write_json("verify.json", &report).map_err(Failure::io)?;
    print_json(&report);
    match first_failure {
        None => Ok((Exit::Ok, report)),
        Some(m) => Err(Failure { exit: Exit::VerifyFailed, message: format!("verification failed: {m}") }),
    }
}

fn probes(grid: &TorusGrid, samples: usize, seed: u64, m: f64) -> Result<Vec<BilinearProbeReport>, String> {
    // The (B(u,u),Au) pairing vanishes identically in two dimensions.
    let three_d = grid.companion(3).map_err(|e| e.to_string())?;
    EstimateId::ALL
        .iter()
        .map(|&id| {
            let g = if id == EstimateId::EB1 { &three_d } else { grid };
            probe_estimate_with_order(id, samples, seed, g, m).map_err(|e| e.to_string())
        })
        .collect()
}

pub fn constants(cfg: &ExperimentConfig, out: &Path, samples: usize) -> Outcome {
    let grid = cfg.grid().map_err(Failure::config)?;
    let probes = probes(&grid, samples, cfg.ensemble.base_seed, cfg.sobolev_order()).map_err(Failure::config)?;
    for p in &probes {
        println!("{}", serde_json::to_string(p).expect("probe reports serialize"));
    }
    let value = serde_json::to_value(&probes).expect("probe reports serialize");
    OutDir::create(out).and_then(|d| d.write_json("constants.json", &value)).map_err(Failure::io)?;
    Ok((Exit::Ok, value))
}

pub fn ensemble(cfg: &ExperimentConfig, out: &Path) -> Outcome {
    let grid = cfg.grid().map_err(Failure::config)?;
    let paths = cfg.ensemble.paths;
    if paths < MIN_PATHS {
        return Err(Failure::config(format!(
            "ensemble.paths = {paths}: the statistical checks need at least {MIN_PATHS} paths"
        )));
    }
    cfg.validate_bound().map_err(Failure::config)?;
    let dir = OutDir::create(out).map_err(Failure::io)?;
    let (params, calibration) = cfg.bound_params().map_err(Failure::config)?;
    let ic = cfg.initial_condition(Some(&params)).map_err(Failure::config)?;
    let solver = cfg.solver();
    let seed = cfg.ensemble.base_seed;
    let opts = RunOptions { keep_records: true, initial_seed: cfg.initial.seed };
    let results = run_ensemble(&grid, &solver, &cfg.noise, &ic, paths, seed, &params, opts)
        .map_err(|e| Failure::config(e.to_string()))?;
    for (i, rec) in results.records.iter().enumerate() {
        if let Some(rec) = rec {
            dir.write(&PathRecord::file_name(i), rec.to_csv().as_bytes()).map_err(Failure::io)?;
        }
    }
    let sm = check_supermartingale(&results, &params).map_err(|e| Failure::config(e.to_string()))?;
    let est = check_probability_bound(&results, &params);
    let sweep = if cfg.ensemble.bdg_sweep {
        Some(bdg_sweep(&results, &params, &BDG_SWEEP).map_err(|e| Failure::config(e.to_string()))?)
    } else {
        None
    };
    let failures: Vec<_> = results
        .paths
        .iter()
        .filter(|p| p.error.is_some() || p.status.is_some_and(|s| s.is_failure()))
        .collect();
    let summary = json!({
        "label": "discrete surrogate",
        "config": cfg,
        "noise": cfg.noise,
        "bound_params": params,
        "calibration": calibration,
        "paths": paths,
        "survivors": est.survivors,
        "p_hat": est.p_hat,
        "ci": [est.ci_low, est.ci_high],
        "bound_value": est.bound_value,
        "mean_initial_norm": est.mean_initial_norm,
        "probability_bound": {"verdict": est.verdict, "slack": est.slack},
        "supermartingale": {
            "lhs": sm.lhs,
            "rhs": sm.rhs,
            "standard_error": sm.standard_error,
            "pass": sm.pass,
            "terminal_lhs": sm.terminal_lhs,
            "terminal_standard_error": sm.terminal_standard_error,
            "terminal_pass": sm.terminal_pass,
        },
        "bdg_sweep": sweep,
        "failed_paths": failures,
        "seeds": {"base": seed},
    });
    dir.write_json("summary.json", &summary).map_err(Failure::io)?;
    print_json(&summary);
    let pass = sm.pass && est.verdict != Verdict::Fail;
    Ok((if pass { Exit::Ok } else { Exit::StatisticalFail }, summary))
}

/// Arguments of the `bound` command.
pub struct BoundArgs {
    pub a: f64,
    pub b: f64,
    pub c1: Option<f64>,
    pub c2: f64,
    pub hm_order: Option<f64>,
    pub c3: Option<f64>,
    pub c4: f64,
    pub sigma: Vec<f64>,
    pub epsilon: f64,
    pub points: usize,
}

pub fn bound(args: &BoundArgs) -> Result<String, Failure> {
    let model = NoiseModel::linear_diagonal(args.sigma.clone()).map_err(|e| Failure::config(e.to_string()))?;
    let params: BoundParameters = match args.hm_order {
        None => {
            let c1 = args.c1.ok_or_else(|| Failure::config("--c1 is required"))?;
            derive_bound_params(args.a, args.b, c1, args.c2, &model)
        }
        Some(m) => {
            let c3 = args.c3.ok_or_else(|| Failure::config("--c3 is required with --hm"))?;
            derive_hm_bound_params(m, c3, args.c4, &model)
        }
    }
    .map_err(|e| Failure::config(e.to_string()))?;
    let delta = delta_for_epsilon(args.epsilon, &params).map_err(|e| Failure::config(e.to_string()))?;
    if args.points < 2 {
        return Err(Failure::config("--points must be at least 2"));
    }
    let r = match args.hm_order {
        None => r_exponent(args.a, args.b),
        Some(_) => params.r,
    };
    let mut s = String::from("parameter,value\n");
    for (k, v) in [
        ("r", r),
        ("lambda", params.lambda),
        ("xi", params.xi),
        ("alpha_sq", params.alpha_sq),
        ("beta_sq", params.beta_sq),
        ("threshold", params.threshold),
        ("epsilon", args.epsilon),
        ("delta", delta),
    ] {
        s += &format!("{k},{v:.17e}\n");
    }
    s += "\nmean_initial_norm,bound_value,epsilon\n";
    let mut xs: Vec<f64> = (0..args.points).map(|i| params.threshold * i as f64 / (args.points - 1) as f64).collect();
    xs.push(delta);
    xs.sort_by(f64::total_cmp);
    for x in xs {
        let b = params.bound_value(x);
        s += &format!("{x:.17e},{b:.17e},{:.17e}\n", 1.0 - b);
    }
    Ok(s)
}
