use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use super::field::SpectralField;
use super::grid::{is_canonical, TorusGrid};

/// Spectral decay exponents used when sampling test fields.
pub const DECAY_EXPONENTS: [f64; 3] = [1.0, 1.5, 2.0];

#[derive(Clone, Copy, Debug)]
pub struct RandomFieldOptions {
    /// Coefficients scale like `|k|^{-decay}`.
    pub decay: f64,
    /// Restrict the support to the dealiasing mask.
    pub dealiased: bool,
    /// Apply the Leray projection.
    pub solenoidal: bool,
}

impl Default for RandomFieldOptions {
    fn default() -> Self {
        Self {
            decay: 1.5,
            dealiased: true,
            solenoidal: true,
        }
    }
}

/// Random real, mean-zero, divergence-free field supported in the dealiasing
/// mask with Gaussian coefficients of size `|k|^{-decay}`.
pub fn random_field<R: Rng + ?Sized>(grid: &TorusGrid, decay: f64, rng: &mut R) -> SpectralField {
    random_field_with(
        grid,
        &RandomFieldOptions {
            decay,
            ..Default::default()
        },
        rng,
    )
}

/// As [`random_field`] with the decay exponent drawn from [`DECAY_EXPONENTS`].
pub fn random_probe_field<R: Rng + ?Sized>(grid: &TorusGrid, rng: &mut R) -> SpectralField {
    let decay = DECAY_EXPONENTS[rng.random_range(0..DECAY_EXPONENTS.len())];
    random_field(grid, decay, rng)
}

pub fn random_field_with<R: Rng + ?Sized>(
    grid: &TorusGrid,
    opts: &RandomFieldOptions,
    rng: &mut R,
) -> SpectralField {
    let d = grid.dim();
    let mut u = SpectralField::zeros(grid);
    for idx in 1..grid.len() {
        if !grid.is_representable(idx) || (opts.dealiased && !grid.is_dealiased(idx)) {
            continue;
        }
        let k = grid.wavevector(idx);
        if !is_canonical(&k[..d]) {
            continue;
        }
        let amp = grid.ksq(idx).powf(-0.5 * opts.decay);
        let mut vals = [Complex64::new(0.0, 0.0); 3];
        for v in vals.iter_mut().take(d) {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            *v = Complex64::new(re, im) * amp;
        }
        if opts.solenoidal {
            let ksq = grid.ksq(idx);
            let dot: Complex64 = (0..d).map(|c| vals[c] * k[c] as f64).sum();
            for c in 0..d {
                vals[c] -= dot * (k[c] as f64 / ksq);
            }
        }
        u.set_mode(&k[..d], &vals[..d]).expect("representable mode");
    }
    u
}
