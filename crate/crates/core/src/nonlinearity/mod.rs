//! The convective term `B(u, v) = P_H (u . grad) v`.
//!
//! [`bilinear_b`] evaluates the product pseudo-spectrally on a grid padded to
//! `ceil(3N/2)` points per axis, which reproduces the exact truncated
//! convolution for any representable inputs. The output is restricted to the
//! dealiasing mask and Leray-projected. [`bilinear_b_oracle`] computes the
//! same quantity by direct summation over mode pairs.

mod probe;

use num_complex::Complex64;

use crate::spectral::{transform_nd, InnerProduct, SpectralField, TorusGrid};
use crate::{Error, Result};

pub use probe::{probe_estimate, probe_estimate_with_order, BilinearProbeReport, EstimateId, GridInfo};

/// Largest resolution accepted by [`bilinear_b_oracle`].
pub const ORACLE_MAX_RESOLUTION: usize = 16;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Dealiased `P_H (u . grad) v`, computed in convective form.
pub fn bilinear_b(u: &SpectralField, v: &SpectralField) -> Result<SpectralField> {
    u.grid().ensure_same(v.grid())?;
    let grid = u.grid();
    let d = grid.dim();
    let m = grid.padded_resolution();
    let plen = m.pow(d as u32);

    let mut out = SpectralField::zeros(grid);
    if u.is_zero() || v.is_zero() {
        return Ok(out);
    }
    // u_j for every j, then d_j v_i for every (i, j)
    let mut inputs: Vec<(&[Complex64], Option<usize>)> = (0..d).map(|j| (u.component(j), None)).collect();
    for i in 0..d {
        for j in 0..d {
            inputs.push((v.component(i), Some(j)));
        }
    }
    let phys = padded_physical(grid, &inputs);
    let (vel, grad) = phys.split_at(d);
    let products: Vec<Vec<f64>> = (0..d)
        .map(|i| {
            let mut p = vec![0.0; plen];
            for (j, uj) in vel.iter().enumerate() {
                for ((acc, a), b) in p.iter_mut().zip(uj).zip(&grad[i * d + j]) {
                    *acc += a * b;
                }
            }
            p
        })
        .collect();

    // two real products per complex transform, split by conjugate symmetry
    let tables = grid.tables();
    let fwd = grid.fft_padded().forward.clone();
    let scale = 1.0 / plen as f64;
    let mut buf = vec![ZERO; plen];
    for pair in (0..d).step_by(2) {
        let second = (pair + 1 < d).then_some(pair + 1);
        for (k, z) in buf.iter_mut().enumerate() {
            *z = Complex64::new(products[pair][k], second.map_or(0.0, |b| products[b][k]));
        }
        transform_nd(&mut buf, m, d, fwd.as_ref());
        for idx in 0..grid.len() {
            if !tables.dealiased[idx] {
                continue;
            }
            let zk = buf[tables.padded[idx]];
            let zm = buf[tables.padded[grid.negated_index(idx)]].conj();
            out.component_mut(pair)[idx] = (zk + zm) * (0.5 * scale);
            if let Some(b) = second {
                out.component_mut(b)[idx] = (zk - zm) * Complex64::new(0.0, -0.5 * scale);
            }
        }
    }
    out.symmetrize();
    out.leray_project_in_place();
    Ok(out)
}

/// Direct convolution `P_H sum_{p+q=k} i (u_hat(p) . q) v_hat(q)` over all
/// representable `p, q`, kept on the dealiasing mask. Cost `O(N^{2d})`.
pub fn bilinear_b_oracle(u: &SpectralField, v: &SpectralField) -> Result<SpectralField> {
    u.grid().ensure_same(v.grid())?;
    let grid = u.grid();
    if grid.resolution() > ORACLE_MAX_RESOLUTION {
        return Err(Error::Refused(format!(
            "oracle limited to N <= {ORACLE_MAX_RESOLUTION}, got {}",
            grid.resolution()
        )));
    }
    let d = grid.dim();
    let support = |f: &SpectralField| -> Vec<(usize, [i64; 3])> {
        (0..grid.len())
            .filter(|&i| grid.is_representable(i) && (0..d).any(|c| f.component(c)[i] != ZERO))
            .map(|i| (i, grid.wavevector(i)))
            .collect()
    };
    let su = support(u);
    let sv = support(v);
    let mut out = SpectralField::zeros(grid);
    let kmax = grid.dealias_kmax();
    for &(ip, p) in &su {
        let up = u.coeff(ip);
        for &(iq, q) in &sv {
            let k = [p[0] + q[0], p[1] + q[1], p[2] + q[2]];
            if k[..d].iter().any(|ki| ki.abs() > kmax) {
                continue;
            }
            let ik = grid.index_of(&k[..d]).expect("inside the mask");
            let dot: Complex64 = (0..d).map(|j| up[j] * q[j] as f64).sum();
            let factor = Complex64::new(0.0, 1.0) * dot;
            let vq = v.coeff(iq);
            for i in 0..d {
                out.component_mut(i)[ik] += factor * vq[i];
            }
        }
    }
    for c in 0..d {
        out.component_mut(c)[0] = ZERO;
    }
    out.leray_project_in_place();
    Ok(out)
}

/// Weighted spectral pairing of two fields on the same grid.
pub fn pairing(kind: InnerProduct, x: &SpectralField, y: &SpectralField) -> Result<f64> {
    x.inner(y, kind)
}

/// Physical samples on the padded grid of spectral components, each
/// optionally differentiated along one axis. Real outputs are computed two
/// at a time as the real and imaginary parts of one inverse transform.
fn padded_physical(grid: &TorusGrid, inputs: &[(&[Complex64], Option<usize>)]) -> Vec<Vec<f64>> {
    let d = grid.dim();
    let m = grid.padded_resolution();
    let plen = m.pow(d as u32);
    let tables = grid.tables();
    let inv = grid.fft_padded().inverse.clone();
    let spectrum = |(coeffs, deriv): (&[Complex64], Option<usize>), idx: usize| -> Complex64 {
        let z = coeffs[idx];
        match deriv {
            Some(j) if z != ZERO => z * Complex64::new(0.0, grid.wavevector(idx)[j] as f64),
            _ => z,
        }
    };
    let mut out = Vec::with_capacity(inputs.len());
    let mut data = vec![ZERO; plen];
    for chunk in inputs.chunks(2) {
        data.iter_mut().for_each(|z| *z = ZERO);
        for idx in 0..grid.len() {
            if !tables.representable[idx] {
                continue;
            }
            let a = spectrum(chunk[0], idx);
            let b = chunk.get(1).map_or(ZERO, |&c| spectrum(c, idx));
            // a + i b has real part IFFT(a) and imaginary part IFFT(b)
            data[tables.padded[idx]] = a + Complex64::new(-b.im, b.re);
        }
        transform_nd(&mut data, m, d, inv.as_ref());
        out.push(data.iter().map(|z| z.re).collect());
        if chunk.len() == 2 {
            out.push(data.iter().map(|z| z.im).collect());
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::random_field;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rel(a: &SpectralField, b: &SpectralField) -> f64 {
        (a - b).norm_h() / b.norm_h()
    }

    #[test]
    fn shear_flow_is_steady() {
        // u = (sin y, 0): (u . grad) u = sin y d/dx (sin y, 0) = 0
        let g = TorusGrid::new(2, 16).unwrap();
        let mut u = SpectralField::zeros(&g);
        u.set_mode(&[0, 1], &[Complex64::new(0.0, -0.5), ZERO]).unwrap();
        let b = bilinear_b(&u, &u).unwrap();
        assert!(b.norm_h() < 1e-16);
    }

    #[test]
    fn bilinear_scaling() {
        let g = TorusGrid::new(2, 16).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let u = random_field(&g, 1.0, &mut rng);
        let v = random_field(&g, 1.5, &mut rng);
        let b = bilinear_b(&u, &v).unwrap();
        let b6 = bilinear_b(&u.scaled(2.0), &v.scaled(3.0)).unwrap();
        assert!(rel(&b6, &b.scaled(6.0)) < 1e-12);
    }

    #[test]
    fn oracle_agrees_on_small_grids() {
        for (d, n) in [(2, 8), (3, 4), (2, 6)] {
            let g = TorusGrid::new(d, n).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(7);
            for _ in 0..5 {
                let u = random_field(&g, 1.0, &mut rng);
                let v = random_field(&g, 2.0, &mut rng);
                let fast = bilinear_b(&u, &v).unwrap();
                let slow = bilinear_b_oracle(&u, &v).unwrap();
                assert!(rel(&fast, &slow) < 1e-12, "d={d} n={n}: {}", rel(&fast, &slow));
            }
        }
    }

    #[test]
    fn oracle_hermitian_and_zero_input() {
        let g = TorusGrid::new(2, 8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let u = random_field(&g, 1.0, &mut rng);
        let v = random_field(&g, 1.0, &mut rng);
        assert!(bilinear_b_oracle(&SpectralField::zeros(&g), &v).unwrap().is_zero());
        let b = bilinear_b_oracle(&u, &v).unwrap();
        assert!(b.hermitian_defect() < 1e-14);
        assert!(b.divergence_residual() < 1e-14);
    }

    #[test]
    fn oracle_refuses_large_grids() {
        let g = TorusGrid::new(2, 32).unwrap();
        let u = SpectralField::single_mode(&g, &[1, 0], 1.0).unwrap();
        assert!(matches!(bilinear_b_oracle(&u, &u), Err(Error::Refused(_))));
    }

    #[test]
    fn grid_mismatch_is_an_error() {
        let a = TorusGrid::new(2, 8).unwrap();
        let b = TorusGrid::new(2, 16).unwrap();
        let u = SpectralField::single_mode(&a, &[1, 0], 1.0).unwrap();
        let v = SpectralField::single_mode(&b, &[1, 0], 1.0).unwrap();
        assert!(matches!(bilinear_b(&u, &v), Err(Error::GridMismatch { .. })));
    }

    #[test]
    fn pairings() {
        let g = TorusGrid::new(2, 16).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let u = random_field(&g, 1.0, &mut rng);
        let v = random_field(&g, 1.0, &mut rng);
        let hh = pairing(InnerProduct::H, &u, &u).unwrap();
        assert!((hh - u.norm_h().powi(2)).abs() < 1e-14 * hh);
        let au = u.apply_a(1.0).unwrap();
        let lhs = pairing(InnerProduct::H, &au, &v).unwrap();
        let rhs = pairing(InnerProduct::V, &u, &v).unwrap();
        assert!((lhs - rhs).abs() < 1e-13 * u.norm_v() * v.norm_v());
        let b = bilinear_b(&u, &v).unwrap();
        let c = pairing(InnerProduct::H, &b, &v).unwrap();
        assert!(c.abs() < 1e-10 * u.norm_v() * v.norm_v().powi(2));
    }
}
