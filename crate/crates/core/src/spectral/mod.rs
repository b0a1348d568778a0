//! Fourier representation of divergence-free fields on the torus.

mod fft;
mod field;
mod galerkin;
mod grid;
pub mod io;
mod random;

pub use field::{default_polarization, InnerProduct, NormReport, PhysicalField, SpectralField};
pub use galerkin::{dealiased_pair_ordering, galerkin_project, pair_ordering, GalerkinProjector};
pub use grid::{is_canonical, TorusGrid, DEFAULT_DEALIAS_FRACTION, MAX_RESOLUTION};
pub use random::{random_field, random_field_with, random_probe_field, RandomFieldOptions, DECAY_EXPONENTS};

pub(crate) use fft::transform_nd;

/// Validated grid constructor.
pub fn make_grid(dim: usize, n: usize) -> crate::Result<TorusGrid> {
    TorusGrid::new(dim, n)
}
