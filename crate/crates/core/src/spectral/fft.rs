//! Multidimensional complex FFTs over row-major `n^d` arrays.

use num_complex::Complex64;
use rustfft::Fft;

/// In-place unnormalized transform along every axis.
pub(crate) fn transform_nd(data: &mut [Complex64], n: usize, dim: usize, fft: &dyn Fft<f64>) {
    debug_assert_eq!(data.len(), n.pow(dim as u32));
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    // Last axis is contiguous.
    fft.process_with_scratch(data, &mut scratch);
    if dim == 1 {
        return;
    }
    let mut lines = vec![Complex64::new(0.0, 0.0); data.len()];
    for axis in 0..dim - 1 {
        let stride = n.pow((dim - 1 - axis) as u32);
        let block = stride * n;
        gather(data, &mut lines, n, stride, block);
        fft.process_with_scratch(&mut lines, &mut scratch);
        scatter(&lines, data, n, stride, block);
    }
}

fn gather(data: &[Complex64], lines: &mut [Complex64], n: usize, stride: usize, block: usize) {
    let mut line = 0;
    for base in (0..data.len()).step_by(block) {
        for offset in 0..stride {
            let dst = &mut lines[line * n..(line + 1) * n];
            for (i, d) in dst.iter_mut().enumerate() {
                *d = data[base + offset + i * stride];
            }
            line += 1;
        }
    }
}

fn scatter(lines: &[Complex64], data: &mut [Complex64], n: usize, stride: usize, block: usize) {
    let mut line = 0;
    for base in (0..data.len()).step_by(block) {
        for offset in 0..stride {
            let src = &lines[line * n..(line + 1) * n];
            for (i, s) in src.iter().enumerate() {
                data[base + offset + i * stride] = *s;
            }
            line += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rustfft::FftPlanner;

    // Direct O(n^{2d}) DFT as an independent reference.
    fn naive_dft_2d(data: &[Complex64], n: usize) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); n * n];
        for k0 in 0..n {
            for k1 in 0..n {
                let mut acc = Complex64::new(0.0, 0.0);
                for x0 in 0..n {
                    for x1 in 0..n {
                        let phase = -std::f64::consts::TAU * ((k0 * x0 + k1 * x1) as f64) / n as f64;
                        acc += data[x0 * n + x1] * Complex64::from_polar(1.0, phase);
                    }
                }
                out[k0 * n + k1] = acc;
            }
        }
        out
    }

    #[test]
    fn matches_naive_dft() {
        let n = 6;
        let data: Vec<Complex64> = (0..n * n)
            .map(|i| Complex64::new((i as f64 * 0.37).sin(), (i as f64 * 1.3).cos()))
            .collect();
        let mut fast = data.clone();
        let plan = FftPlanner::new().plan_fft_forward(n);
        transform_nd(&mut fast, n, 2, plan.as_ref());
        let slow = naive_dft_2d(&data, n);
        for (a, b) in fast.iter().zip(&slow) {
            assert!((a - b).norm() < 1e-12);
        }
    }
}
