use std::fmt;
use std::sync::{Arc, OnceLock};

use rustfft::{Fft, FftPlanner};

use crate::{Error, Result};

/// Default sharp dealiasing fraction (the 2/3 rule).
pub const DEFAULT_DEALIAS_FRACTION: f64 = 2.0 / 3.0;

/// Largest accepted resolution per axis.
pub const MAX_RESOLUTION: usize = 512;

pub(crate) struct FftPair {
    pub forward: Arc<dyn Fft<f64>>,
    pub inverse: Arc<dyn Fft<f64>>,
}

impl FftPair {
    fn plan(planner: &mut FftPlanner<f64>, len: usize) -> Self {
        Self {
            forward: planner.plan_fft_forward(len),
            inverse: planner.plan_fft_inverse(len),
        }
    }
}

// Per-mode lookup tables, built on first use.
pub(crate) struct ModeTables {
    pub ksq: Vec<f64>,
    pub representable: Vec<bool>,
    pub dealiased: Vec<bool>,
    /// Flat index of each stored mode on the padded grid.
    pub padded: Vec<usize>,
}

struct GridInner {
    dim: usize,
    n: usize,
    dealias_fraction: f64,
    dealias_kmax: i64,
    padded: usize,
    fft: FftPair,
    fft_padded: FftPair,
    tables: OnceLock<ModeTables>,
}

/// Periodic box `[0, 2 pi)^d` sampled on `N^d` collocation points.
///
/// Wavevectors are integer, stored in FFT order along every axis
/// (`0, 1, .., N/2 - 1, -N/2, .., -1`). The Nyquist plane `k_i = -N/2` is
/// part of the storage layout but never carries energy: fields keep it at
/// zero so the lattice of representable modes is closed under negation.
/// Cloning is cheap; FFT plans are shared.
#[derive(Clone)]
pub struct TorusGrid {
    inner: Arc<GridInner>,
}

impl TorusGrid {
    pub fn new(dim: usize, n: usize) -> Result<Self> {
        Self::with_dealias_fraction(dim, n, DEFAULT_DEALIAS_FRACTION)
    }

    pub fn with_dealias_fraction(dim: usize, n: usize, dealias_fraction: f64) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(Error::InvalidGrid(format!("dimension must be 2 or 3, got {dim}")));
        }
        if !n.is_multiple_of(2) || n < 4 {
            return Err(Error::InvalidGrid(format!(
                "resolution must be even and at least 4, got {n}"
            )));
        }
        if n > MAX_RESOLUTION {
            return Err(Error::InvalidGrid(format!(
                "resolution {n} exceeds the maximum of {MAX_RESOLUTION}"
            )));
        }
        if !(dealias_fraction > 0.0 && dealias_fraction <= 1.0) {
            return Err(Error::InvalidGrid(format!(
                "dealias fraction must lie in (0, 1], got {dealias_fraction}"
            )));
        }
        let half = (n / 2) as f64;
        let dealias_kmax = ((dealias_fraction * half) + 1e-9).floor() as i64;
        let dealias_kmax = dealias_kmax.min(n as i64 / 2 - 1);
        let padded = (3 * n).div_ceil(2);
        let mut planner = FftPlanner::new();
        let fft = FftPair::plan(&mut planner, n);
        let fft_padded = FftPair::plan(&mut planner, padded);
        Ok(Self {
            inner: Arc::new(GridInner {
                dim,
                n,
                dealias_fraction,
                dealias_kmax,
                padded,
                fft,
                fft_padded,
                tables: OnceLock::new(),
            }),
        })
    }

    /// Grid with the same resolution and dealiasing in another dimension.
    pub fn companion(&self, dim: usize) -> Result<Self> {
        if dim == self.dim() {
            return Ok(self.clone());
        }
        Self::with_dealias_fraction(dim, self.resolution(), self.dealias_fraction())
    }

    pub fn dim(&self) -> usize {
        self.inner.dim
    }

    pub fn resolution(&self) -> usize {
        self.inner.n
    }

    pub fn dealias_fraction(&self) -> f64 {
        self.inner.dealias_fraction
    }

    /// Largest `|k_i|` kept by the dealiasing mask.
    pub fn dealias_kmax(&self) -> i64 {
        self.inner.dealias_kmax
    }

    /// Resolution of the zero-padded grid used for quadratic products.
    pub fn padded_resolution(&self) -> usize {
        self.inner.padded
    }

    /// Number of stored modes, `N^d`.
    pub fn len(&self) -> usize {
        self.inner.n.pow(self.inner.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub(crate) fn fft(&self) -> &FftPair {
        &self.inner.fft
    }

    pub(crate) fn fft_padded(&self) -> &FftPair {
        &self.inner.fft_padded
    }

    /// `|k|^2` for every stored mode.
    pub fn ksq_table(&self) -> &[f64] {
        &self.tables().ksq
    }

    pub(crate) fn tables(&self) -> &ModeTables {
        self.inner.tables.get_or_init(|| {
            let d = self.inner.dim;
            let half = (self.inner.n / 2) as i64;
            let kmax = self.inner.dealias_kmax;
            let m = self.inner.padded as i64;
            let len = self.len();
            let mut t = ModeTables {
                ksq: Vec::with_capacity(len),
                representable: Vec::with_capacity(len),
                dealiased: Vec::with_capacity(len),
                padded: Vec::with_capacity(len),
            };
            for idx in 0..len {
                let k = self.wavevector(idx);
                let k = &k[..d];
                t.ksq.push(k.iter().map(|&x| x * x).sum::<i64>() as f64);
                t.representable.push(k.iter().all(|&x| x != -half));
                t.dealiased.push(k.iter().all(|&x| x.abs() <= kmax));
                t.padded.push(k.iter().fold(0usize, |acc, &x| acc * m as usize + x.rem_euclid(m) as usize));
            }
            t
        })
    }

    pub fn same_as(&self, other: &TorusGrid) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner) || self == other
    }

    pub(crate) fn ensure_same(&self, other: &TorusGrid) -> Result<()> {
        if self.same_as(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch {
                left: self.to_string(),
                right: other.to_string(),
            })
        }
    }

    /// Wavevector of flat index `idx`; unused trailing components are zero.
    #[inline]
    pub fn wavevector(&self, idx: usize) -> [i64; 3] {
        let n = self.inner.n;
        let mut k = [0i64; 3];
        let mut rest = idx;
        for axis in (0..self.inner.dim).rev() {
            let i = rest % n;
            rest /= n;
            k[axis] = fold(i, n);
        }
        k
    }

    /// Flat index of wavevector `k`, if it is stored (`-N/2 <= k_i < N/2`).
    pub fn index_of(&self, k: &[i64]) -> Option<usize> {
        if k.len() != self.inner.dim {
            return None;
        }
        let n = self.inner.n as i64;
        let mut idx = 0usize;
        for &ki in k {
            if ki < -n / 2 || ki >= n / 2 {
                return None;
            }
            idx = idx * n as usize + ki.rem_euclid(n) as usize;
        }
        Some(idx)
    }

    /// Index of `-k` for a representable mode `k`.
    #[inline]
    pub fn negated_index(&self, idx: usize) -> usize {
        let n = self.inner.n;
        let mut out = 0usize;
        let mut rest = idx;
        let mut scale = 1usize;
        for _ in 0..self.inner.dim {
            let i = rest % n;
            rest /= n;
            out += ((n - i) % n) * scale;
            scale *= n;
        }
        out
    }

    #[inline]
    pub fn ksq(&self, idx: usize) -> f64 {
        self.tables().ksq[idx]
    }

    /// True unless some component sits on the Nyquist plane `-N/2`.
    #[inline]
    pub fn is_representable(&self, idx: usize) -> bool {
        self.tables().representable[idx]
    }

    /// True when every `|k_i|` is within the dealiasing cutoff.
    #[inline]
    pub fn is_dealiased(&self, idx: usize) -> bool {
        self.tables().dealiased[idx]
    }

    /// Number of conjugate pairs `{k, -k}` among representable nonzero modes.
    pub fn pair_count(&self) -> usize {
        ((self.inner.n - 1).pow(self.inner.dim as u32) - 1) / 2
    }

    /// Number of conjugate pairs inside the dealiasing mask.
    pub fn dealiased_pair_count(&self) -> usize {
        let side = (2 * self.inner.dealias_kmax + 1) as usize;
        (side.pow(self.inner.dim as u32) - 1) / 2
    }

    /// Physical coordinate of collocation point `idx`.
    pub fn point(&self, idx: usize) -> [f64; 3] {
        let n = self.inner.n;
        let h = std::f64::consts::TAU / n as f64;
        let mut x = [0.0; 3];
        let mut rest = idx;
        for axis in (0..self.inner.dim).rev() {
            x[axis] = (rest % n) as f64 * h;
            rest /= n;
        }
        x
    }
}

/// True when the first nonzero component of `k` is positive; exactly one of
/// `k` and `-k` is canonical for `k != 0`.
pub fn is_canonical(k: &[i64]) -> bool {
    k.iter().find(|&&ki| ki != 0).is_some_and(|&ki| ki > 0)
}

#[inline]
fn fold(i: usize, n: usize) -> i64 {
    if i < n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

impl PartialEq for TorusGrid {
    fn eq(&self, other: &Self) -> bool {
        self.inner.dim == other.inner.dim
            && self.inner.n == other.inner.n
            && self.inner.dealias_fraction == other.inner.dealias_fraction
    }
}

impl fmt::Debug for TorusGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TorusGrid")
            .field("dim", &self.inner.dim)
            .field("n", &self.inner.n)
            .field("dealias_kmax", &self.inner.dealias_kmax)
            .field("padded", &self.inner.padded)
            .finish()
    }
}

impl fmt::Display for TorusGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "d={} N={}", self.inner.dim, self.inner.n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dealias_cutoffs() {
        assert_eq!(TorusGrid::new(2, 8).unwrap().dealias_kmax(), 2);
        assert_eq!(TorusGrid::new(3, 16).unwrap().dealias_kmax(), 5);
        assert_eq!(TorusGrid::new(2, 4).unwrap().dealias_kmax(), 1);
        assert_eq!(TorusGrid::new(2, 32).unwrap().dealias_kmax(), 10);
    }

    #[test]
    fn lattice_sizes() {
        let g = TorusGrid::new(2, 8).unwrap();
        assert_eq!(g.len(), 64);
        assert_eq!(g.padded_resolution(), 12);
        assert_eq!(g.pair_count(), 24);
        assert_eq!(g.dealiased_pair_count(), 12);
        let g = TorusGrid::new(3, 16).unwrap();
        assert_eq!(g.len(), 4096);
        assert_eq!(g.padded_resolution(), 24);
    }

    #[test]
    fn rejects_bad_resolutions() {
        assert!(TorusGrid::new(2, 7).is_err());
        assert!(TorusGrid::new(2, 2).is_err());
        assert!(TorusGrid::new(4, 8).is_err());
        assert!(TorusGrid::new(2, 514).is_err());
    }

    #[test]
    fn index_roundtrip_and_negation() {
        let g = TorusGrid::new(3, 8).unwrap();
        for idx in 0..g.len() {
            let k = g.wavevector(idx);
            assert_eq!(g.index_of(&k[..3]), Some(idx));
            if g.is_representable(idx) {
                let neg = g.negated_index(idx);
                let kn = g.wavevector(neg);
                assert_eq!([-k[0], -k[1], -k[2]], kn);
            }
        }
        assert_eq!(g.index_of(&[4, 0, 0]), None);
    }

    #[test]
    fn canonical_half() {
        assert!(is_canonical(&[1, -3]));
        assert!(!is_canonical(&[-1, 3]));
        assert!(is_canonical(&[0, 2, -1]));
        assert!(!is_canonical(&[0, 0, 0]));
    }
}
