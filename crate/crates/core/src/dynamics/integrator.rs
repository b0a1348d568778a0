use std::collections::BTreeMap;

use rand::Rng;

use super::record::{PathRecord, PathStatus, Sample};
use super::{smooth_cutoff, CutoffNorm, Observable, SolverConfig};
use crate::noise::{sample_increment, NoiseOperator, WienerIncrement};
use crate::nonlinearity::bilinear_b;
use crate::spectral::{GalerkinProjector, InnerProduct, SpectralField, TorusGrid};
use crate::{Error, Result};

/// Supplier of Wiener increments, one call per time step.
pub trait IncrementSource {
    fn next_increment(&mut self, dt: f64, k: usize) -> Result<WienerIncrement>;
}

/// Fresh `N(0, dt)` draws from a random stream.
pub struct RngIncrements<'a, R: Rng + ?Sized>(pub &'a mut R);

impl<R: Rng + ?Sized> IncrementSource for RngIncrements<'_, R> {
    fn next_increment(&mut self, dt: f64, k: usize) -> Result<WienerIncrement> {
        sample_increment(self.0, dt, k)
    }
}

/// A stored Brownian path on a uniform grid. Coarsening sums consecutive
/// increments, so runs at several step sizes can share one realization.
#[derive(Clone, Debug, PartialEq)]
pub struct BrownianPath {
    dt: f64,
    increments: Vec<Vec<f64>>,
    cursor: usize,
}

impl BrownianPath {
    pub fn sample<R: Rng + ?Sized>(rng: &mut R, dt: f64, steps: usize, k: usize) -> Result<Self> {
        let increments = (0..steps)
            .map(|_| sample_increment(rng, dt, k).map(|w| w.dw))
            .collect::<Result<_>>()?;
        Ok(Self { dt, increments, cursor: 0 })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn steps(&self) -> usize {
        self.increments.len()
    }

    pub fn increments(&self) -> &[Vec<f64>] {
        &self.increments
    }

    /// Path with step `factor * dt`; `factor` must divide the step count.
    pub fn coarsen(&self, factor: usize) -> Result<Self> {
        if factor == 0 || !self.steps().is_multiple_of(factor) {
            return Err(Error::param(
                "factor",
                format!("{factor} does not divide {} steps", self.steps()),
            ));
        }
        let increments = self
            .increments
            .chunks(factor)
            .map(|chunk| {
                let mut sum = vec![0.0; chunk[0].len()];
                for w in chunk {
                    for (a, b) in sum.iter_mut().zip(w) {
                        *a += b;
                    }
                }
                sum
            })
            .collect();
        Ok(Self { dt: self.dt * factor as f64, increments, cursor: 0 })
    }

    pub fn rewind(&mut self) {
        self.cursor = 0;
    }
}

impl IncrementSource for BrownianPath {
    fn next_increment(&mut self, dt: f64, k: usize) -> Result<WienerIncrement> {
        if (dt - self.dt).abs() > 1e-9 * self.dt {
            return Err(Error::param("dt", format!("path has step {}, solver asked for {dt}", self.dt)));
        }
        let dw = self
            .increments
            .get(self.cursor)
            .ok_or_else(|| Error::param("steps", format!("Brownian path exhausted after {} steps", self.cursor)))?;
        if dw.len() < k {
            return Err(Error::param("K", format!("path carries {} directions, need {k}", dw.len())));
        }
        self.cursor += 1;
        Ok(WienerIncrement { dt, dw: dw[..k].to_vec() })
    }
}

/// Mutable state of one trajectory.
#[derive(Clone, Debug)]
pub struct SolverState {
    pub u: SpectralField,
    /// Exact heat flow of the initial data, kept for the V-distance cut-off.
    pub heat: Option<SpectralField>,
    pub step: usize,
    dt: f64,
}

impl SolverState {
    pub fn time(&self) -> f64 {
        self.step as f64 * self.dt
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepOutcome {
    /// Cut-off factor applied during the step.
    pub theta: f64,
    /// Set when the new state overflowed or crossed the guard.
    pub status: Option<PathStatus>,
}

/// Integrating-factor Euler-Maruyama scheme for a fixed grid, configuration
/// and noise operator:
///
/// `u_hat+ = e^{-nu |k|^2 dt} (u_hat - dt theta B_hat(u,u) + theta (G(u) dW)_hat)`
///
/// followed by `P_n` and the Leray projection.
pub struct Integrator<'a, O: NoiseOperator + ?Sized> {
    cfg: SolverConfig,
    op: &'a O,
    grid: TorusGrid,
    projector: GalerkinProjector,
    decay: Vec<f64>,
}

impl<'a, O: NoiseOperator + ?Sized> Integrator<'a, O> {
    pub fn new(grid: &TorusGrid, cfg: &SolverConfig, op: &'a O) -> Result<Self> {
        cfg.validate()?;
        let level = cfg.galerkin_level.unwrap_or_else(|| grid.dealiased_pair_count());
        let projector = GalerkinProjector::new_dealiased(grid, level)?;
        let decay = (0..grid.len())
            .map(|idx| if projector.keeps(idx) { (-cfg.nu * grid.ksq(idx) * cfg.dt).exp() } else { 0.0 })
            .collect();
        Ok(Self {
            cfg: cfg.clone(),
            op,
            grid: grid.clone(),
            projector,
            decay,
        })
    }

    pub fn config(&self) -> &SolverConfig {
        &self.cfg
    }

    pub fn projector(&self) -> &GalerkinProjector {
        &self.projector
    }

    pub fn initial_state(&self, u0: &SpectralField) -> Result<SolverState> {
        self.grid.ensure_same(u0.grid())?;
        let mut u = self.projector.project(u0);
        u.leray_project_in_place();
        let heat = matches!(
            self.cfg.cutoff.map(|c| c.norm_kind),
            Some(CutoffNorm::VDistanceToHeatFlow)
        )
        .then(|| u.clone());
        Ok(SolverState { u, heat, step: 0, dt: self.cfg.dt })
    }

    /// Cut-off factor at the current state; 1 without a cut-off.
    pub fn theta(&self, state: &SolverState) -> f64 {
        let Some(c) = self.cfg.cutoff else { return 1.0 };
        let x = match c.norm_kind {
            CutoffNorm::VDistanceToHeatFlow => match &state.heat {
                Some(h) => (&state.u - h).norm_v(),
                None => state.u.norm_v(),
            },
            CutoffNorm::W1inf => state.u.norm_w1inf(),
        };
        smooth_cutoff(x, c.kappa)
    }

    pub fn step(&self, state: &mut SolverState, inc: &WienerIncrement) -> Result<StepOutcome> {
        let dt = self.cfg.dt;
        if (inc.dt - dt).abs() > 1e-9 * dt {
            return Err(Error::param("dt", format!("increment step {} differs from solver step {dt}", inc.dt)));
        }
        let k = self.op.directions();
        if inc.dw.len() < k {
            return Err(Error::param("K", format!("increment has {} directions, noise needs {k}", inc.dw.len())));
        }
        let theta = self.theta(state);
        let b = if self.cfg.nonlinear && theta != 0.0 { Some(bilinear_b(&state.u, &state.u)?) } else { None };
        let g = if theta != 0.0 && k > 0 { Some(self.op.increment(&state.u, &inc.dw[..k])?) } else { None };

        for (c, comp) in state.u.components_mut().iter_mut().enumerate() {
            let bc = b.as_ref().map(|b| b.component(c));
            let gc = g.as_ref().map(|g| g.component(c));
            for (idx, z) in comp.iter_mut().enumerate() {
                let e = self.decay[idx];
                if e == 0.0 {
                    *z = Default::default();
                    continue;
                }
                let mut v = *z;
                if let Some(bc) = bc {
                    v -= bc[idx] * (dt * theta);
                }
                if let Some(gc) = gc {
                    v += gc[idx] * theta;
                }
                *z = v * e;
            }
        }
        state.u.leray_project_in_place();
        if let Some(h) = state.heat.as_mut() {
            for comp in h.components_mut() {
                for (z, &e) in comp.iter_mut().zip(&self.decay) {
                    *z *= e;
                }
            }
        }
        state.step += 1;

        let t = state.time();
        let finite = (0..state.u.dim()).all(|c| state.u.component(c).iter().all(|z| z.re.is_finite() && z.im.is_finite()));
        let status = if !finite {
            Some(PathStatus::Overflow { t })
        } else if state.u.norm_v() > self.cfg.overflow_guard {
            Some(PathStatus::BlownUp { t })
        } else {
            None
        };
        Ok(StepOutcome { theta, status })
    }

    /// Runs from `u0` to the horizon or the first terminal event.
    pub fn run(&self, u0: &SpectralField, source: &mut dyn IncrementSource) -> Result<PathRecord> {
        let cfg = &self.cfg;
        let m = cfg.sobolev_order;
        let k = self.op.directions();
        let steps = cfg.steps();
        let mut state = self.initial_state(u0)?;

        let mut tracker = Tracker::new(&state.u, m);
        let mut samples = vec![Sample {
            t: 0.0,
            norms: state.u.norms(m),
            theta: self.theta(&state),
            blowup_functional: tracker.blowup(),
        }];
        let mut hits = BTreeMap::new();
        let mut status = self.detect(&state, &tracker, &mut hits);

        while status.is_none() && state.step < steps {
            let inc = source.next_increment(cfg.dt, k)?;
            let out = self.step(&mut state, &inc)?;
            tracker.advance(&state.u, cfg.dt);
            status = out.status.or_else(|| self.detect(&state, &tracker, &mut hits));
            if status.is_some() || state.step % cfg.sample_every == 0 || state.step == steps {
                samples.push(Sample {
                    t: state.time(),
                    norms: state.u.norms(m),
                    theta: self.theta(&state),
                    blowup_functional: tracker.blowup(),
                });
            }
        }
        Ok(PathRecord {
            dt: cfg.dt,
            samples,
            hits,
            status: status.unwrap_or(PathStatus::Survived),
            sup_v: tracker.sup_v2.sqrt(),
            sup_hm: tracker.sup_hm2.sqrt(),
            dissipation_integral: tracker.int_v2,
            energy_integral: tracker.int_h2,
        })
    }

    fn detect(&self, state: &SolverState, tracker: &Tracker, hits: &mut BTreeMap<String, f64>) -> Option<PathStatus> {
        let t = state.time();
        let mut stop = None;
        for rule in &self.cfg.detectors {
            if hits.contains_key(&rule.name) {
                continue;
            }
            let x = match rule.observable {
                Observable::H => state.u.norm_h(),
                Observable::V => state.u.norm_v(),
                Observable::DA => state.u.norm_da(),
                Observable::Hm => state.u.norm_hm(self.cfg.sobolev_order),
                Observable::W1inf => state.u.norm_w1inf(),
                Observable::BlowupFunctional => tracker.blowup(),
            };
            if x >= rule.level {
                hits.insert(rule.name.clone(), t);
                if rule.terminal && stop.is_none() {
                    stop = Some(PathStatus::Stopped { t });
                }
            }
        }
        stop
    }
}

// Running sups of ||u||^2, ||u||^2_{H^m} and trapezoid integrals of
// |Au|^2, ||u||^2, |u|^2, updated every step.
struct Tracker {
    hm_weights: Vec<f64>,
    sup_v2: f64,
    sup_hm2: f64,
    int_a2: f64,
    int_v2: f64,
    int_h2: f64,
    prev: [f64; 3],
}

impl Tracker {
    fn new(u: &SpectralField, m: f64) -> Self {
        let hm_weights = (0..u.grid().len()).map(|i| InnerProduct::Hm(m).weight(u.grid().ksq(i))).collect();
        let mut t = Self {
            hm_weights,
            sup_v2: 0.0,
            sup_hm2: 0.0,
            int_a2: 0.0,
            int_v2: 0.0,
            int_h2: 0.0,
            prev: [0.0; 3],
        };
        t.prev = t.levels(u);
        t
    }

    fn levels(&mut self, u: &SpectralField) -> [f64; 3] {
        let ksq = u.grid().ksq_table();
        let (mut a2, mut v2, mut h2, mut hm2) = (0.0, 0.0, 0.0, 0.0);
        for idx in 0..ksq.len() {
            let e: f64 = (0..u.dim()).map(|c| u.component(c)[idx].norm_sqr()).sum();
            if e != 0.0 {
                let k = ksq[idx];
                h2 += e;
                v2 += k * e;
                a2 += k * k * e;
                hm2 += self.hm_weights[idx] * e;
            }
        }
        self.sup_v2 = self.sup_v2.max(v2);
        self.sup_hm2 = self.sup_hm2.max(hm2);
        [a2, v2, h2]
    }

    fn advance(&mut self, u: &SpectralField, dt: f64) {
        let now = self.levels(u);
        self.int_a2 += 0.5 * dt * (self.prev[0] + now[0]);
        self.int_v2 += 0.5 * dt * (self.prev[1] + now[1]);
        self.int_h2 += 0.5 * dt * (self.prev[2] + now[2]);
        self.prev = now;
    }

    /// `sup ||u||^2 + int |Au|^2` with the unit-viscosity Stokes operator.
    fn blowup(&self) -> f64 {
        self.sup_v2 + self.int_a2
    }
}

/// One step of the scheme; builds a throwaway [`Integrator`].
pub fn step<O: NoiseOperator + ?Sized>(
    state: &mut SolverState,
    cfg: &SolverConfig,
    op: &O,
    inc: &WienerIncrement,
) -> Result<StepOutcome> {
    let grid = state.u.grid().clone();
    Integrator::new(&grid, cfg, op)?.step(state, inc)
}

/// Evolves `u0` with increments drawn from `rng`.
pub fn evolve<O: NoiseOperator + ?Sized, R: Rng + ?Sized>(
    u0: &SpectralField,
    cfg: &SolverConfig,
    op: &O,
    rng: &mut R,
) -> Result<PathRecord> {
    evolve_with(u0, cfg, op, &mut RngIncrements(rng))
}

pub fn evolve_with<O: NoiseOperator + ?Sized>(
    u0: &SpectralField,
    cfg: &SolverConfig,
    op: &O,
    source: &mut dyn IncrementSource,
) -> Result<PathRecord> {
    Integrator::new(u0.grid(), cfg, op)?.run(u0, source)
}
