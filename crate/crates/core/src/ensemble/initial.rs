use serde::{Deserialize, Serialize};

use crate::dynamics::Observable;
use crate::noise::tagged_stream;
use crate::spectral::{random_field_with, RandomFieldOptions, SpectralField, TorusGrid};
use crate::{Error, Result};

/// Norm in which an initial amplitude is prescribed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum AmplitudeNorm {
    #[default]
    V,
    Hm,
}

impl From<AmplitudeNorm> for Observable {
    fn from(n: AmplitudeNorm) -> Self {
        match n {
            AmplitudeNorm::V => Observable::V,
            AmplitudeNorm::Hm => Observable::Hm,
        }
    }
}

/// Recipe for the initial state of each path.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialCondition {
    Zero,
    /// One conjugate mode pair with the default polarization.
    SingleMode {
        /// Wavevector; `(1, 0[, 0])` when absent.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        mode: Option<Vec<i64>>,
        amplitude: f64,
        #[serde(default)]
        norm: AmplitudeNorm,
    },
    /// Random solenoidal field with `|k|^{-decay}` coefficients on the
    /// dealiased modes, rescaled to `amplitude`.
    RandomDecay {
        decay: f64,
        amplitude: f64,
        #[serde(default)]
        norm: AmplitudeNorm,
        /// Draw a new field per path instead of sharing one.
        #[serde(default)]
        per_path: bool,
    },
}

impl InitialCondition {
    pub fn single_mode(mode: &[i64], amplitude: f64) -> Self {
        InitialCondition::SingleMode { mode: Some(mode.to_vec()), amplitude, norm: AmplitudeNorm::V }
    }

    pub fn amplitude(&self) -> f64 {
        match self {
            InitialCondition::Zero => 0.0,
            InitialCondition::SingleMode { amplitude, .. } | InitialCondition::RandomDecay { amplitude, .. } => *amplitude,
        }
    }

    /// Same shape, new amplitude.
    pub fn with_amplitude(&self, a: f64) -> Self {
        let mut out = self.clone();
        match &mut out {
            InitialCondition::Zero => {}
            InitialCondition::SingleMode { amplitude, .. } | InitialCondition::RandomDecay { amplitude, .. } => {
                *amplitude = a
            }
        }
        out
    }

    /// True when every path starts from the same state.
    pub fn is_deterministic(&self) -> bool {
        !matches!(self, InitialCondition::RandomDecay { per_path: true, .. })
    }

    /// Initial state of path `index`; `m` is the Sobolev order used when the
    /// amplitude is given in `H^m`.
    pub fn build(&self, grid: &TorusGrid, base_seed: u64, index: u64, m: f64) -> Result<SpectralField> {
        let amplitude = self.amplitude();
        if !(amplitude >= 0.0 && amplitude.is_finite()) {
            return Err(Error::param("amplitude", format!("must be finite and >= 0, got {amplitude}")));
        }
        let (shape, norm) = match self {
            InitialCondition::Zero => return Ok(SpectralField::zeros(grid)),
            InitialCondition::SingleMode { mode, norm, .. } => {
                let default = if grid.dim() == 2 { vec![1, 0] } else { vec![1, 0, 0] };
                let k = mode.clone().unwrap_or(default);
                (SpectralField::single_mode(grid, &k, 1.0)?, *norm)
            }
            InitialCondition::RandomDecay { decay, norm, per_path, .. } => {
                let stream_index = if *per_path { index } else { 0 };
                let mut rng = tagged_stream("initial", base_seed, stream_index);
                let opts = RandomFieldOptions { decay: *decay, dealiased: true, solenoidal: true };
                (random_field_with(grid, &opts, &mut rng), *norm)
            }
        };
        let size = match norm {
            AmplitudeNorm::V => shape.norm_v(),
            AmplitudeNorm::Hm => shape.norm_hm(m),
        };
        if size == 0.0 {
            return Err(Error::param("initial", "shape has zero norm"));
        }
        Ok(shape.scaled(amplitude / size))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn amplitudes_and_json() {
        let g = TorusGrid::new(2, 16).unwrap();
        let ic = InitialCondition::single_mode(&[5, 5], 0.02);
        let u = ic.build(&g, 0, 3, 3.0).unwrap();
        assert!((u.norm_v() - 0.02).abs() < 1e-17);
        let js = r#"{"kind":"random-decay","decay":1.5,"amplitude":0.1,"norm":"Hm","per_path":true}"#;
        let ic: InitialCondition = serde_json::from_str(js).unwrap();
        let a = ic.build(&g, 1, 0, 3.0).unwrap();
        let b = ic.build(&g, 1, 1, 3.0).unwrap();
        assert!((a.norm_hm(3.0) - 0.1).abs() < 1e-15);
        assert_ne!(a, b);
        assert!(!ic.is_deterministic());
        let shared = InitialCondition::RandomDecay { decay: 1.5, amplitude: 0.1, norm: AmplitudeNorm::V, per_path: false };
        assert_eq!(shared.build(&g, 1, 0, 3.0).unwrap(), shared.build(&g, 1, 9, 3.0).unwrap());
        assert!(serde_json::from_str::<InitialCondition>(r#"{"kind":"single-mode","amplitude":1,"x":1}"#).is_err());
        assert!(InitialCondition::Zero.build(&g, 0, 0, 3.0).unwrap().is_zero());
    }
}
