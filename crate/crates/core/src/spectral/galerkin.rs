use super::field::SpectralField;
use super::grid::{is_canonical, TorusGrid};
use crate::{Error, Result};

/// Canonical representatives of the conjugate pairs `{k, -k}`, ordered by
/// Stokes eigenvalue `|k|^2` with lexicographic tie-break on `k`.
pub fn pair_ordering(grid: &TorusGrid) -> Vec<usize> {
    ordering(grid, false)
}

/// As [`pair_ordering`], restricted to pairs inside the dealiasing mask.
pub fn dealiased_pair_ordering(grid: &TorusGrid) -> Vec<usize> {
    ordering(grid, true)
}

fn ordering(grid: &TorusGrid, dealiased: bool) -> Vec<usize> {
    let d = grid.dim();
    let mut reps: Vec<(i64, [i64; 3], usize)> = (1..grid.len())
        .filter(|&idx| grid.is_representable(idx) && (!dealiased || grid.is_dealiased(idx)))
        .filter_map(|idx| {
            let k = grid.wavevector(idx);
            is_canonical(&k[..d]).then(|| (k[0] * k[0] + k[1] * k[1] + k[2] * k[2], k, idx))
        })
        .collect();
    reps.sort_unstable();
    reps.into_iter().map(|(_, _, idx)| idx).collect()
}

/// Projection `P_n` onto the span of the first `n` conjugate mode pairs
/// (each pair carries its full divergence-free subspace), and its
/// complement `Q_n = I - P_n`.
#[derive(Clone, Debug)]
pub struct GalerkinProjector {
    grid: TorusGrid,
    level: usize,
    keep: Vec<bool>,
    lambda_n: f64,
}

impl GalerkinProjector {
    pub fn new(grid: &TorusGrid, level: usize) -> Result<Self> {
        Self::from_order(grid, level, pair_ordering(grid))
    }

    /// `P_n` over the dealiased pairs only, the truncation used for time
    /// stepping so that the quadratic term stays alias-free.
    pub fn new_dealiased(grid: &TorusGrid, level: usize) -> Result<Self> {
        Self::from_order(grid, level, dealiased_pair_ordering(grid))
    }

    fn from_order(grid: &TorusGrid, level: usize, order: Vec<usize>) -> Result<Self> {
        if level > order.len() {
            return Err(Error::param(
                "n",
                format!("Galerkin level {level} exceeds the {} available mode pairs", order.len()),
            ));
        }
        let mut keep = vec![false; grid.len()];
        for &idx in &order[..level] {
            keep[idx] = true;
            keep[grid.negated_index(idx)] = true;
        }
        let lambda_n = if level == 0 { 0.0 } else { grid.ksq(order[level - 1]) };
        Ok(Self {
            grid: grid.clone(),
            level,
            keep,
            lambda_n,
        })
    }

    /// Projector keeping every pair inside the dealiasing mask.
    pub fn dealiased(grid: &TorusGrid) -> Self {
        Self::new_dealiased(grid, grid.dealiased_pair_count()).expect("dealiased pairs are always available")
    }

    pub fn level(&self) -> usize {
        self.level
    }

    /// Largest retained eigenvalue `lambda_n` (unit viscosity).
    pub fn lambda_n(&self) -> f64 {
        self.lambda_n
    }

    pub fn keeps(&self, idx: usize) -> bool {
        self.keep[idx]
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn project(&self, u: &SpectralField) -> SpectralField {
        let mut out = u.clone();
        self.project_in_place(&mut out);
        out
    }

    pub fn complement(&self, u: &SpectralField) -> SpectralField {
        let mut out = u.clone();
        for comp in out.components_mut() {
            for (z, &k) in comp.iter_mut().zip(&self.keep) {
                if k {
                    *z = Default::default();
                }
            }
        }
        out
    }

    pub(crate) fn project_in_place(&self, u: &mut SpectralField) {
        for comp in u.components_mut() {
            for (z, &k) in comp.iter_mut().zip(&self.keep) {
                if !k {
                    *z = Default::default();
                }
            }
        }
    }
}

pub fn galerkin_project(u: &SpectralField, n: usize) -> Result<SpectralField> {
    Ok(GalerkinProjector::new(u.grid(), n)?.project(u))
}
