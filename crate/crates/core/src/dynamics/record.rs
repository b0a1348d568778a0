use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use super::Observable;
use crate::spectral::NormReport;
use crate::Result;

pub const CSV_HEADER: &str = "t,norm_h,norm_v,norm_da,norm_hm,norm_w1inf,theta,blowup_functional,status";

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum PathStatus {
    Survived,
    /// A terminal detector fired.
    Stopped { t: f64 },
    /// The V norm crossed the overflow guard.
    BlownUp { t: f64 },
    /// A coefficient became non-finite.
    Overflow { t: f64 },
}

impl PathStatus {
    pub fn label(&self) -> &'static str {
        match self {
            PathStatus::Survived => "survived",
            PathStatus::Stopped { .. } => "stopped",
            PathStatus::BlownUp { .. } => "blown-up",
            PathStatus::Overflow { .. } => "overflow",
        }
    }

    pub fn time(&self) -> Option<f64> {
        match *self {
            PathStatus::Survived => None,
            PathStatus::Stopped { t } | PathStatus::BlownUp { t } | PathStatus::Overflow { t } => Some(t),
        }
    }

    /// True for blow-up and overflow.
    pub fn is_failure(&self) -> bool {
        matches!(self, PathStatus::BlownUp { .. } | PathStatus::Overflow { .. })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Sample {
    pub t: f64,
    pub norms: NormReport,
    pub theta: f64,
    pub blowup_functional: f64,
}

impl Sample {
    pub fn observe(&self, obs: Observable) -> f64 {
        match obs {
            Observable::H => self.norms.h,
            Observable::V => self.norms.v,
            Observable::DA => self.norms.da,
            Observable::Hm => self.norms.hm,
            Observable::W1inf => self.norms.w1inf,
            Observable::BlowupFunctional => self.blowup_functional,
        }
    }
}

/// Sampled diagnostics of one trajectory.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PathRecord {
    pub dt: f64,
    pub samples: Vec<Sample>,
    /// Detector name to first hit time.
    pub hits: BTreeMap<String, f64>,
    pub status: PathStatus,
    /// Largest V norm over every step, not only the sampled ones.
    pub sup_v: f64,
    /// Largest `H^m` norm over every step.
    pub sup_hm: f64,
    /// `int_0^t ||u||^2 ds` (V norm, trapezoid over every step).
    pub dissipation_integral: f64,
    /// `int_0^t |u|^2 ds` (H norm, trapezoid over every step).
    pub energy_integral: f64,
}

impl PathRecord {
    pub fn first(&self) -> &Sample {
        &self.samples[0]
    }

    pub fn last(&self) -> &Sample {
        self.samples.last().expect("a record always holds the initial sample")
    }

    pub fn terminal_time(&self) -> f64 {
        self.last().t
    }

    /// Largest sampled value of `obs`.
    pub fn sup(&self, obs: Observable) -> f64 {
        self.samples.iter().map(|s| s.observe(obs)).fold(0.0, f64::max)
    }

    /// Trapezoid rule over the recorded samples of `f`.
    pub fn integral(&self, f: impl Fn(&Sample) -> f64) -> f64 {
        self.samples
            .windows(2)
            .map(|w| 0.5 * (w[1].t - w[0].t) * (f(&w[0]) + f(&w[1])))
            .sum()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(64 * (self.samples.len() + 1));
        out.push_str(CSV_HEADER);
        out.push('\n');
        let last = self.samples.len() - 1;
        for (i, s) in self.samples.iter().enumerate() {
            let status = if i == last { self.status.label() } else { "running" };
            let n = &s.norms;
            let _ = writeln!(
                out,
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{}",
                s.t, n.h, n.v, n.da, n.hm, n.w1inf, s.theta, s.blowup_functional, status
            );
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }

    /// `path_<index>.csv`.
    pub fn file_name(index: usize) -> String {
        format!("path_{index}.csv")
    }
}

/// First sampled time with `obs >= level`.
pub fn detect_sigma(path: &PathRecord, level: f64, obs: Observable) -> Option<f64> {
    path.samples.iter().find(|s| s.observe(obs) >= level).map(|s| s.t)
}
