use rayon::prelude::*;
use serde::Serialize;

use super::{hs_norm_sq, hs_pairing_sq, tagged_stream, NoiseOperator};
use crate::spectral::{random_field_with, InnerProduct, RandomFieldOptions, SpectralField, TorusGrid, DECAY_EXPONENTS};
use crate::{Error, Result};

#[derive(Clone, Debug)]
pub struct VerifyOptions {
    pub trials: usize,
    pub seed: u64,
    /// Sobolev order `m` of the H^m hypotheses.
    pub sobolev_order: f64,
    pub rel_tol: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            trials: 64,
            seed: 0,
            sobolev_order: 3.0,
            rel_tol: 1e-10,
        }
    }
}

/// Outcome of one named hypothesis.
#[derive(Clone, Debug, Serialize)]
pub struct HypothesisCheck {
    pub name: String,
    pub passed: bool,
    /// Largest observed `lhs / rhs` for upper bounds, smallest for lower bounds.
    pub worst_ratio: f64,
    /// Trial whose field gave `worst_ratio`; re-drawn from `(seed, trial)`.
    pub witness_trial: Option<usize>,
    pub detail: String,
}

/// Observed range of the HS ratios that define `alpha^2` and `beta^2` in one space.
#[derive(Clone, Debug, Serialize)]
pub struct SpaceConstants {
    pub space: String,
    pub alpha_sq_min: f64,
    pub alpha_sq_max: f64,
    pub beta_sq_min: f64,
    pub beta_sq_max: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct HypothesisReport {
    pub grid: String,
    pub trials: usize,
    pub seed: u64,
    pub alpha_sq: f64,
    pub beta_sq: f64,
    pub checks: Vec<HypothesisCheck>,
    pub constants: Vec<SpaceConstants>,
}

impl HypothesisReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &HypothesisCheck> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&HypothesisCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

// The witness fields are drawn with a spread of amplitudes so that growth
// beyond a constant envelope shows up.
fn trial_fields(grid: &TorusGrid, seed: u64, i: usize) -> (SpectralField, SpectralField) {
    let mut rng = tagged_stream("noise-verify", seed, i as u64);
    let opts = RandomFieldOptions {
        decay: DECAY_EXPONENTS[i % DECAY_EXPONENTS.len()],
        dealiased: false,
        solenoidal: true,
    };
    let scale = 10f64.powi((i % 5) as i32 - 2);
    let mut u = random_field_with(grid, &opts, &mut rng);
    let v = random_field_with(grid, &opts, &mut rng);
    let hu = u.norm_h().max(f64::MIN_POSITIVE);
    u.scale(scale / hu);
    let v = v.scaled(scale / v.norm_h().max(f64::MIN_POSITIVE));
    (u, v)
}

struct Measured {
    // (name, lhs/rhs, is_upper_bound)
    ratios: Vec<(String, f64, bool)>,
    // per space: (alpha ratio, beta ratio)
    spaces: Vec<(f64, f64)>,
    div_defect: f64,
}

fn lip_sq<O: NoiseOperator + ?Sized>(op: &O, u: &SpectralField, v: &SpectralField, space: InnerProduct) -> Result<f64> {
    let mut acc = 0.0;
    for j in 0..op.directions() {
        let d = &op.apply(u, j)? - &op.apply(v, j)?;
        acc += d.norm_sq(space);
    }
    Ok(acc)
}

fn measure<O: NoiseOperator + ?Sized>(op: &O, grid: &TorusGrid, opts: &VerifyOptions, i: usize) -> Result<Measured> {
    let (u, v) = trial_fields(grid, opts.seed, i);
    let m = opts.sobolev_order;
    let env = op.envelope();
    let (a2, b2) = (op.alpha_sq(), op.beta_sq());
    let mut ratios = Vec::new();
    let ratio = |lhs: f64, rhs: f64| if rhs > 0.0 { lhs / rhs } else if lhs > 0.0 { f64::INFINITY } else { 1.0 };

    let v_norm = u.norm_sq(InnerProduct::V);
    ratios.push(("G-H1".into(), ratio(hs_pairing_sq(&u, op, InnerProduct::V)?, b2 * v_norm * v_norm), false));
    ratios.push(("G-H2".into(), ratio(hs_norm_sq(&u, op, InnerProduct::V)?, a2 * v_norm), true));
    let hm = InnerProduct::Hm(m);
    let hm_norm = u.norm_sq(hm);
    ratios.push(("GPSm-H3".into(), ratio(hs_pairing_sq(&u, op, hm)?, b2 * hm_norm * hm_norm), false));
    ratios.push(("GPSm-H4".into(), ratio(hs_norm_sq(&u, op, hm)?, a2 * hm_norm), true));

    let bnd = |name: String, space: InnerProduct| -> Result<(String, f64, bool)> {
        let lhs = hs_norm_sq(&u, op, space)?.sqrt();
        Ok((name, ratio(lhs, env * (1.0 + u.norm_sq(space).sqrt())), true))
    };
    let lip = |name: String, space: InnerProduct| -> Result<(String, f64, bool)> {
        let lhs = lip_sq(op, &u, &v, space)?.sqrt();
        Ok((name, ratio(lhs, env * (&u - &v).norm_sq(space).sqrt()), true))
    };
    for (label, space) in [("H", InnerProduct::H), ("V", InnerProduct::V), ("DA", InnerProduct::DA)] {
        ratios.push(bnd(format!("G-Bnd({label})"), space)?);
        ratios.push(lip(format!("G-Lip({label})"), space)?);
    }
    ratios.push(bnd(format!("GPSm-H1(H^{})", m + 1.0), InnerProduct::Hm(m + 1.0))?);
    ratios.push(bnd(format!("GPSm-H1(H^{})", m + 3.0), InnerProduct::Hm(m + 3.0))?);
    ratios.push(lip(format!("GPSm-H2(H^{m})"), hm)?);
    ratios.push(lip(format!("GPSm-H2(H^{})", m - 1.0), InnerProduct::Hm(m - 1.0))?);

    let mut spaces = Vec::new();
    for space in [InnerProduct::H, InnerProduct::V, InnerProduct::DA, hm] {
        let n2 = u.norm_sq(space);
        spaces.push((
            hs_norm_sq(&u, op, space)? / n2,
            hs_pairing_sq(&u, op, space)? / (n2 * n2),
        ));
    }

    let mut div_defect = 0.0f64;
    for j in 0..op.directions() {
        let g = op.apply(&u, j)?;
        let scale = g.norm_h().max(f64::MIN_POSITIVE);
        div_defect = div_defect.max(g.divergence_residual() / scale);
    }
    Ok(Measured { ratios, spaces, div_defect })
}

/// Probe the noise hypotheses on `trials` random solenoidal fields.
///
/// The claimed `alpha^2`, `beta^2` and envelope of `op` are tested against
/// each hypothesis; every check records its worst ratio and the trial that
/// produced it.
pub fn verify_hypotheses<O: NoiseOperator + ?Sized>(
    op: &O,
    grid: &TorusGrid,
    opts: &VerifyOptions,
) -> Result<HypothesisReport> {
    if opts.trials == 0 {
        return Err(Error::param("trials", "at least one trial is required"));
    }
    if !(opts.rel_tol >= 0.0) {
        return Err(Error::param("rel_tol", format!("must be non-negative, got {}", opts.rel_tol)));
    }
    let measured: Vec<Measured> = (0..opts.trials)
        .into_par_iter()
        .map(|i| measure(op, grid, opts, i))
        .collect::<Result<_>>()?;

    let (a2, b2) = (op.alpha_sq(), op.beta_sq());
    let tol = opts.rel_tol;
    let mut checks = vec![
        HypothesisCheck {
            name: "positivity".into(),
            passed: b2 > 0.0 && a2 > 0.0 && a2.is_finite() && b2.is_finite(),
            worst_ratio: b2,
            witness_trial: None,
            detail: format!("alpha^2 = {a2:e}, beta^2 = {b2:e}; G-H3 needs beta^2 > 0"),
        },
        HypothesisCheck {
            name: "G-H3".into(),
            passed: a2 < 2.0 * b2,
            worst_ratio: if b2 > 0.0 { a2 / (2.0 * b2) } else { f64::INFINITY },
            witness_trial: None,
            detail: format!("alpha^2 = {a2:e} vs 2 beta^2 = {:e}", 2.0 * b2),
        },
    ];

    for (c, (name, _, upper)) in measured[0].ratios.iter().enumerate() {
        let mut worst = measured[0].ratios[c].1;
        let mut at = 0;
        for (i, m) in measured.iter().enumerate() {
            let r = m.ratios[c].1;
            let worse = if *upper { r > worst } else { r < worst };
            if worse || r.is_nan() {
                worst = r;
                at = i;
            }
        }
        let passed = if *upper { worst <= 1.0 + tol } else { worst >= 1.0 - tol };
        let relation = if *upper { "max lhs/rhs" } else { "min lhs/rhs" };
        checks.push(HypothesisCheck {
            name: name.clone(),
            passed: passed && !worst.is_nan(),
            worst_ratio: worst,
            witness_trial: Some(at),
            detail: format!("{relation} = {worst:.12e} over {} trials", opts.trials),
        });
    }

    let (mut worst, mut at) = (0.0f64, 0);
    for (i, m) in measured.iter().enumerate() {
        if m.div_defect > worst {
            worst = m.div_defect;
            at = i;
        }
    }
    checks.push(HypothesisCheck {
        name: "range-solenoidal".into(),
        passed: worst <= tol.max(1e-12),
        worst_ratio: worst,
        witness_trial: Some(at),
        detail: format!("max relative divergence of G(u)h_j = {worst:e}"),
    });

    let labels = ["H".to_string(), "V".into(), "DA".into(), format!("H^{}", opts.sobolev_order)];
    let constants = labels
        .iter()
        .enumerate()
        .map(|(s, label)| {
            let fold = |f: fn(f64, f64) -> f64, init: f64, pick: fn(&(f64, f64)) -> f64| {
                measured.iter().map(|m| pick(&m.spaces[s])).fold(init, f)
            };
            SpaceConstants {
                space: label.clone(),
                alpha_sq_min: fold(f64::min, f64::INFINITY, |p| p.0),
                alpha_sq_max: fold(f64::max, f64::NEG_INFINITY, |p| p.0),
                beta_sq_min: fold(f64::min, f64::INFINITY, |p| p.1),
                beta_sq_max: fold(f64::max, f64::NEG_INFINITY, |p| p.1),
            }
        })
        .collect();

    Ok(HypothesisReport {
        grid: grid.to_string(),
        trials: opts.trials,
        seed: opts.seed,
        alpha_sq: a2,
        beta_sq: b2,
        checks,
        constants,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::NoiseModel;
    use crate::spectral::GalerkinProjector;

    fn opts(trials: usize) -> VerifyOptions {
        VerifyOptions { trials, seed: 11, ..Default::default() }
    }

    #[test]
    fn linear_diagonal_passes_everything() {
        let model = NoiseModel::linear_diagonal(vec![0.1, 0.1]).unwrap();
        assert!((model.alpha_sq() - 0.02).abs() < 1e-17);
        for (d, n) in [(2, 16), (3, 8)] {
            let g = TorusGrid::new(d, n).unwrap();
            let rep = verify_hypotheses(&model, &g, &opts(10)).unwrap();
            for c in &rep.checks {
                assert!(c.passed, "{}: {}", c.name, c.detail);
            }
            for name in ["G-H1", "G-H2", "GPSm-H3", "GPSm-H4"] {
                let r = rep.check(name).unwrap().worst_ratio;
                assert!((r - 1.0).abs() < 1e-10, "{name} {r}");
            }
            for c in &rep.constants {
                for x in [c.alpha_sq_min, c.alpha_sq_max, c.beta_sq_min, c.beta_sq_max] {
                    assert!((x - 0.02).abs() < 1e-10 * 0.02, "{} {x}", c.space);
                }
            }
        }
    }

    #[test]
    fn empty_model_fails_positivity() {
        let g = TorusGrid::new(2, 8).unwrap();
        let rep = verify_hypotheses(&NoiseModel::none(), &g, &opts(2)).unwrap();
        assert!(!rep.check("positivity").unwrap().passed);
        assert!(!rep.check("G-H3").unwrap().passed);
        assert!(!rep.all_passed());
        assert!(verify_hypotheses(&NoiseModel::none(), &g, &opts(0)).is_err());
    }

    // Keeps only the lowest modes, yet claims the constants of the full
    // linear operator.
    struct Truncated {
        keep: GalerkinProjector,
        sigma: f64,
    }

    impl NoiseOperator for Truncated {
        fn directions(&self) -> usize {
            1
        }
        fn apply(&self, u: &SpectralField, _j: usize) -> Result<SpectralField> {
            Ok(self.keep.project(u).scaled(self.sigma))
        }
        fn alpha_sq(&self) -> f64 {
            self.sigma * self.sigma
        }
        fn beta_sq(&self) -> f64 {
            self.sigma * self.sigma
        }
    }

    // Quadratic growth G(u)h = |u| u breaks every constant envelope.
    struct Quadratic;

    impl NoiseOperator for Quadratic {
        fn directions(&self) -> usize {
            1
        }
        fn apply(&self, u: &SpectralField, _j: usize) -> Result<SpectralField> {
            Ok(u.scaled(u.norm_h()))
        }
        fn alpha_sq(&self) -> f64 {
            1.0
        }
        fn beta_sq(&self) -> f64 {
            1.0
        }
    }

    #[test]
    fn violations_name_hypothesis_and_witness() {
        let g = TorusGrid::new(2, 16).unwrap();
        let op = Truncated { keep: GalerkinProjector::new(&g, 4).unwrap(), sigma: 0.2 };
        let rep = verify_hypotheses(&op, &g, &opts(6)).unwrap();
        let h1 = rep.check("G-H1").unwrap();
        assert!(!h1.passed);
        assert!(h1.worst_ratio < 1.0);
        assert!(h1.witness_trial.is_some());
        assert!(rep.check("G-H2").unwrap().passed);
        assert!(!rep.check("GPSm-H3").unwrap().passed);

        let rep = verify_hypotheses(&Quadratic, &g, &opts(10)).unwrap();
        let failed: Vec<_> = rep.failures().map(|c| c.name.as_str()).collect();
        assert!(failed.contains(&"G-Bnd(H)"), "{failed:?}");
        assert!(failed.contains(&"G-Lip(V)"), "{failed:?}");
        assert!(failed.contains(&"G-H2"), "{failed:?}");
    }
}
