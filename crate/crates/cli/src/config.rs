use std::path::Path;

use serde::{Deserialize, Serialize};
use sns_core::dynamics::SolverConfig;
use sns_core::ensemble::{
    calibrate, delta_for_epsilon, derive_bound_params, derive_hm_bound_params, AmplitudeNorm, BoundParameters,
    Calibration, InitialCondition, CALIBRATION_SAMPLES,
};
use sns_core::noise::NoiseModel;
use sns_core::spectral::{GalerkinProjector, TorusGrid};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub grid: GridSection,
    pub solver: SolverConfig,
    #[serde(default = "NoiseModel::none")]
    pub noise: NoiseModel,
    #[serde(default)]
    pub initial: InitialSection,
    #[serde(default)]
    pub ensemble: EnsembleSection,
    #[serde(default)]
    pub bound: BoundSection,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub d: usize,
    #[serde(rename = "N")]
    pub n: usize,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialKind {
    #[default]
    Zero,
    SingleMode,
    RandomDecay,
}

/// What `initial.amplitude` is measured against.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AmplitudeScale {
    #[default]
    Absolute,
    /// Multiples of the bound's stopping threshold.
    Threshold,
    /// Multiples of `delta(epsilon)`.
    Delta,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    #[serde(default)]
    pub kind: InitialKind,
    #[serde(default)]
    pub amplitude: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decay: Option<f64>,
    /// Seed of the random initial field; the ensemble base seed when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<Vec<i64>>,
    #[serde(default)]
    pub norm: AmplitudeNorm,
    #[serde(default)]
    pub relative_to: AmplitudeScale,
    #[serde(default)]
    pub per_path: bool,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleSection {
    #[serde(default = "one_path")]
    pub paths: usize,
    #[serde(default)]
    pub base_seed: u64,
    /// Also evaluate the bound for several BDG constants.
    #[serde(default)]
    pub bdg_sweep: bool,
}

fn one_path() -> usize {
    1
}

impl Default for EnsembleSection {
    fn default() -> Self {
        Self { paths: 1, base_seed: 0, bdg_sweep: false }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum VariantName {
    #[default]
    #[serde(rename = "V-norm")]
    VNorm,
    #[serde(rename = "Hm-norm")]
    HmNorm,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundSection {
    #[serde(default = "three_halves")]
    pub a: f64,
    #[serde(default = "three_halves")]
    pub b: f64,
    /// Probed when absent.
    #[serde(rename = "C1", default, skip_serializing_if = "Option::is_none")]
    pub c1: Option<f64>,
    #[serde(rename = "C2", default, skip_serializing_if = "Option::is_none")]
    pub c2: Option<f64>,
    #[serde(rename = "C3", default, skip_serializing_if = "Option::is_none")]
    pub c3: Option<f64>,
    #[serde(rename = "C4", default, skip_serializing_if = "Option::is_none")]
    pub c4: Option<f64>,
    #[serde(default = "half")]
    pub epsilon: f64,
    #[serde(default)]
    pub variant: VariantName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<f64>,
    #[serde(default = "calibration_samples")]
    pub calibration_samples: usize,
    #[serde(default)]
    pub calibration_seed: u64,
}

fn three_halves() -> f64 {
    1.5
}
fn half() -> f64 {
    0.5
}
fn calibration_samples() -> usize {
    CALIBRATION_SAMPLES
}

impl Default for BoundSection {
    fn default() -> Self {
        serde_json::from_str("{}").expect("every bound field has a default")
    }
}

/// Default BDG constant when none is configured.
pub const DEFAULT_BDG: f64 = 1.0;

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        Self::parse(&text).map_err(|e| format!("{}: {e}", path.display()))
    }

    /// Parses and validates; the message is always a single line.
    pub fn parse(text: &str) -> Result<Self, String> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| e.to_string())?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn grid(&self) -> Result<TorusGrid, String> {
        TorusGrid::new(self.grid.d, self.grid.n).map_err(|e| e.to_string())
    }

    fn validate(&self) -> Result<(), String> {
        let grid = self.grid()?;
        self.solver.validate().map_err(|e| e.to_string())?;
        if let Some(n) = self.solver.galerkin_level {
            GalerkinProjector::new_dealiased(&grid, n).map_err(|e| e.to_string())?;
        }
        if self.ensemble.paths == 0 {
            return Err("ensemble.paths must be at least 1".into());
        }
        let ini = &self.initial;
        if !(ini.amplitude >= 0.0 && ini.amplitude.is_finite()) {
            return Err(format!("initial.amplitude must be finite and >= 0, got {}", ini.amplitude));
        }
        if ini.kind != InitialKind::RandomDecay && (ini.decay.is_some() || ini.per_path || ini.seed.is_some()) {
            return Err("initial.decay, initial.seed and initial.per_path apply to kind random-decay only".into());
        }
        if ini.kind != InitialKind::SingleMode && ini.mode.is_some() {
            return Err("initial.mode applies to kind single-mode only".into());
        }
        if let Some(k) = &ini.mode {
            if k.len() != grid.dim() {
                return Err(format!("initial.mode has {} entries, grid has d = {}", k.len(), grid.dim()));
            }
            grid.index_of(k)
                .filter(|&i| grid.is_dealiased(i))
                .ok_or_else(|| format!("initial.mode {k:?} is not a retained mode of the grid"))?;
        }
        if let Some(d) = ini.decay {
            if !d.is_finite() {
                return Err("initial.decay must be finite".into());
            }
        }
        let b = &self.bound;
        if !(b.epsilon > 0.0 && b.epsilon < 1.0) {
            return Err(format!("bound.epsilon must lie in (0, 1), got {}", b.epsilon));
        }
        if b.variant == VariantName::VNorm && (b.c3.is_some() || b.c4.is_some() || b.m.is_some()) {
            return Err("bound.C3, bound.C4 and bound.m apply to variant Hm-norm only".into());
        }
        if b.variant == VariantName::HmNorm && (b.c1.is_some() || b.c2.is_some()) {
            return Err("bound.C1 and bound.C2 apply to variant V-norm only".into());
        }
        if b.calibration_samples == 0 {
            return Err("bound.calibration_samples must be at least 1".into());
        }
        if ini.relative_to != AmplitudeScale::Absolute {
            self.validate_bound()?;
        }
        Ok(())
    }

    /// Domain of the bound's exponents, checked with a placeholder constant
    /// when the real one still has to be probed.
    pub fn validate_bound(&self) -> Result<(), String> {
        self.bound_params_with(self.bound.c1.or(self.bound.c3).unwrap_or(1.0)).map(|_| ())
    }

    pub fn sobolev_order(&self) -> f64 {
        self.bound.m.unwrap_or(self.solver.sobolev_order)
    }

    fn bound_params_with(&self, c: f64) -> Result<BoundParameters, String> {
        let b = &self.bound;
        let params = match b.variant {
            VariantName::VNorm => derive_bound_params(b.a, b.b, c, b.c2.unwrap_or(DEFAULT_BDG), &self.noise),
            VariantName::HmNorm => derive_hm_bound_params(self.sobolev_order(), c, b.c4.unwrap_or(DEFAULT_BDG), &self.noise),
        };
        params.and_then(|p| p.with_epsilon(b.epsilon)).map_err(|e| e.to_string())
    }

    /// Bound parameters, probing the missing constant when necessary.
    pub fn bound_params(&self) -> Result<(BoundParameters, Option<Calibration>), String> {
        let b = &self.bound;
        let given = match b.variant {
            VariantName::VNorm => b.c1,
            VariantName::HmNorm => b.c3,
        };
        match given {
            Some(c) => Ok((self.bound_params_with(c)?, None)),
            None => {
                let grid = self.grid()?;
                let cal = calibrate(&grid, b.calibration_samples, b.calibration_seed, self.sobolev_order())
                    .map_err(|e| e.to_string())?;
                let c = match b.variant {
                    VariantName::VNorm => cal.c1,
                    VariantName::HmNorm => cal.c3,
                };
                Ok((self.bound_params_with(c)?, Some(cal)))
            }
        }
    }

    /// Initial condition with the amplitude resolved to an absolute size.
    pub fn initial_condition(&self, params: Option<&BoundParameters>) -> Result<InitialCondition, String> {
        let ini = &self.initial;
        let scale = match (ini.relative_to, params) {
            (AmplitudeScale::Absolute, _) => 1.0,
            (AmplitudeScale::Threshold, Some(p)) => p.threshold,
            (AmplitudeScale::Delta, Some(p)) => delta_for_epsilon(self.bound.epsilon, p).map_err(|e| e.to_string())?,
            (_, None) => return Err("initial.relative_to needs bound parameters".into()),
        };
        let amplitude = ini.amplitude * scale;
        Ok(match ini.kind {
            InitialKind::Zero => InitialCondition::Zero,
            InitialKind::SingleMode => InitialCondition::SingleMode { mode: ini.mode.clone(), amplitude, norm: ini.norm },
            InitialKind::RandomDecay => InitialCondition::RandomDecay {
                decay: ini.decay.unwrap_or(1.5),
                amplitude,
                norm: ini.norm,
                per_path: ini.per_path,
            },
        })
    }

    /// Seed for the initial field stream.
    pub fn initial_seed(&self) -> u64 {
        self.initial.seed.unwrap_or(self.ensemble.base_seed)
    }

    /// Solver settings with the recorded `H^m` order matching the bound.
    pub fn solver(&self) -> SolverConfig {
        let mut s = self.solver.clone();
        s.sobolev_order = self.sobolev_order();
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{"grid":{"d":2,"N":8},"solver":{"nu":0.1,"dt":0.01,"T":0.1}}"#;

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = ExperimentConfig::parse(MINIMAL).unwrap();
        assert_eq!(cfg.ensemble.paths, 1);
        assert_eq!(cfg.bound.epsilon, 0.5);
        assert!(cfg.noise.is_off());
        assert_eq!(cfg.initial.kind, InitialKind::Zero);
    }

    #[test]
    fn errors_are_single_line_and_name_the_key() {
        for (text, needle) in [
            (r#"{"grid":{"d":2,"N":8},"solver":{"dt":0.01,"T":0.1}}"#, "nu"),
            (r#"{"grid":{"d":2,"N":8},"solver":{"nu":0.1,"dt":0.01,"T":0.1},"extra":1}"#, "extra"),
            (r#"{"grid":{"d":4,"N":8},"solver":{"nu":0.1,"dt":0.01,"T":0.1}}"#, "grid"),
            (r#"{"grid":{"d":2,"N":8},"solver":{"nu":-1,"dt":0.01,"T":0.1}}"#, "nu"),
            (r#"{"grid":{"d":2,"N":8},"solver":{"nu":0.1,"dt":0.01,"T":0.1},"bound":{"epsilon":1}}"#, "epsilon"),
            (r#"{"grid":{"d":2,"N":8},"solver":{"nu":0.1,"dt":0.01,"T":0.1},"initial":{"kind":"single-mode","mode":[9,0],"amplitude":1}}"#, "mode"),
            ("\u{0}\u{1}garbage", "line"),
        ] {
            let err = ExperimentConfig::parse(text).unwrap_err();
            assert!(err.contains(needle), "{err}");
            assert!(!err.contains('\n'), "{err}");
        }
    }

    #[test]
    fn relative_amplitudes() {
        let text = r#"{"grid":{"d":2,"N":8},"solver":{"nu":0.1,"dt":0.01,"T":0.1},
            "noise":{"K":2,"sigma":[0.1,0.1]},
            "initial":{"kind":"single-mode","amplitude":1,"relative_to":"delta"},
            "bound":{"C1":0.01,"epsilon":0.5}}"#;
        let cfg = ExperimentConfig::parse(text).unwrap();
        let (p, cal) = cfg.bound_params().unwrap();
        assert!(cal.is_none());
        let ic = cfg.initial_condition(Some(&p)).unwrap();
        assert_eq!(ic.amplitude(), p.delta.unwrap());
    }
}
