//! Thin wrappers around `rustfft` for the d-dimensional transforms used by
//! the symbol/correlation machinery. Data is stored flattened row-major over
//! a `dims[0] x .. x dims[d-1]` grid.

use num_complex::Complex64;
use rustfft::FftPlanner;

/// In-place forward DFT along every axis: `X_r = sum_n x_n e^{-2pi i n.r/N}`.
pub fn fft_nd(data: &mut [Complex64], dims: &[usize]) {
    transform_nd(data, dims, rustfft::FftDirection::Forward);
}

/// In-place unnormalized inverse DFT along every axis; divide by the grid
/// volume to get `(1/N^d) sum_r X_r e^{+2pi i n.r/N}`.
pub fn ifft_nd(data: &mut [Complex64], dims: &[usize]) {
    transform_nd(data, dims, rustfft::FftDirection::Inverse);
}

fn transform_nd(data: &mut [Complex64], dims: &[usize], dir: rustfft::FftDirection) {
    let total: usize = dims.iter().product();
    assert_eq!(data.len(), total, "data length does not match grid dims");
    let mut planner = FftPlanner::new();
    // Axis k has stride = product of dims after it (row-major).
    let mut stride_after = vec![1usize; dims.len()];
    for k in (0..dims.len().saturating_sub(1)).rev() {
        stride_after[k] = stride_after[k + 1] * dims[k + 1];
    }
    for (k, &n) in dims.iter().enumerate() {
        if n == 1 {
            continue;
        }
        let fft = planner.plan_fft(n, dir);
        let stride = stride_after[k];
        let block = n * stride;
        let mut line = vec![Complex64::new(0.0, 0.0); n];
        for base in (0..total).step_by(block) {
            for off in 0..stride {
                for (i, l) in line.iter_mut().enumerate() {
                    *l = data[base + off + i * stride];
                }
                fft.process(&mut line);
                for (i, &l) in line.iter().enumerate() {
                    data[base + off + i * stride] = l;
                }
            }
        }
    }
}
