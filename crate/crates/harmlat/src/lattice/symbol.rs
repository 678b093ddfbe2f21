//! Fourier symbols of circulant blocks: `M(phi) = sum_n M_n e^{-i n.phi}`.
//!
//! Symbols are evaluated two ways: pointwise (for gap refinement and
//! critical-point analysis) and on uniform grids `phi_r = 2 pi r / G` via a
//! single FFT of the modulo-folded coefficient array. On grid momenta the
//! folded evaluation is exact: `e^{-i (n + G) phi_r} = e^{-i n phi_r}`, so
//! finite-lattice circulant eigenvalues come out exactly, and for analytic
//! tails the truncation error is certified by the stored tail bound.

use num_complex::Complex64;

use super::stencil::{Block, CouplingStencil, PowerLawTail};
use crate::fft::fft_nd;

/// A (possibly complex-valued) symbol of one circulant block.
#[derive(Clone, Debug)]
pub struct FourierSymbol {
    dim: usize,
    entries: Vec<([i64; 3], f64)>,
    tail: Option<PowerLawTail>,
    truncation_tol: f64,
}

/// Default tolerance for truncating analytic tails.
pub const DEFAULT_TRUNCATION_TOL: f64 = 1e-12;

/// Build the symbol of one stencil block.
pub fn fourier_symbol(stencil: &CouplingStencil, block: Block) -> FourierSymbol {
    FourierSymbol::new(stencil, block, DEFAULT_TRUNCATION_TOL)
}

impl FourierSymbol {
    pub fn new(stencil: &CouplingStencil, block: Block, truncation_tol: f64) -> Self {
        let b = stencil.block(block);
        Self {
            dim: stencil.dim(),
            entries: b.entries().map(|(k, &v)| (*k, v)).collect(),
            tail: b.tail().copied(),
            truncation_tol,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Bound on the series truncation error of tail evaluation; zero for
    /// finite-range blocks.
    pub fn tail_bound(&self) -> f64 {
        self.tail
            .map(|t| t.tail_bound(t.truncation(self.truncation_tol)))
            .unwrap_or(0.0)
    }

    /// `true` when the coefficients are symmetric under `n -> -n`, making
    /// the symbol real-valued.
    pub fn is_real(&self) -> bool {
        self.entries.iter().all(|(k, v)| {
            let neg = [-k[0], -k[1], -k[2]];
            self.entries
                .iter()
                .find(|(k2, _)| *k2 == neg)
                .map(|(_, v2)| (v - v2).abs() <= 1e-12)
                .unwrap_or(*v == 0.0)
        })
    }

    /// Pointwise evaluation of the symbol.
    pub fn eval_complex(&self, phi: &[f64]) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (k, v) in &self.entries {
            let dot: f64 = (0..self.dim).map(|d| k[d] as f64 * phi[d]).sum();
            acc += Complex64::from_polar(*v, -dot) / 1.0;
        }
        if let Some(t) = &self.tail {
            let n_max = t.truncation(self.truncation_tol);
            let mut s = t.on_site;
            let x = phi[0];
            for m in 1..=n_max {
                s += 2.0 * t.c / (m as f64).powf(t.alpha) * (m as f64 * x).cos();
            }
            acc += Complex64::new(s, 0.0);
        }
        acc
    }

    /// Pointwise evaluation of a real (point-symmetric) symbol.
    pub fn eval(&self, phi: &[f64]) -> f64 {
        let v = self.eval_complex(phi);
        debug_assert!(
            v.im.abs() <= 1e-9 * (1.0 + v.re.abs()),
            "symbol is not real at {phi:?}: {v}"
        );
        v.re
    }

    /// Sample the symbol on the uniform grid `phi_r = 2 pi r / dims`,
    /// row-major flattened, by FFT of the folded coefficients.
    pub fn sample_grid(&self, dims: &[usize]) -> Vec<Complex64> {
        assert_eq!(dims.len(), self.dim);
        let total: usize = dims.iter().product();
        let mut data = vec![Complex64::new(0.0, 0.0); total];
        for (k, v) in &self.entries {
            let mut idx = 0usize;
            for d in 0..self.dim {
                let m = k[d].rem_euclid(dims[d] as i64) as usize;
                idx = idx * dims[d] + m;
            }
            data[idx] += Complex64::new(*v, 0.0);
        }
        if let Some(t) = &self.tail {
            let g = dims[0];
            let n_max = t.truncation(self.truncation_tol);
            data[0] += Complex64::new(t.on_site, 0.0);
            for m in 1..=n_max {
                let c = t.c / (m as f64).powf(t.alpha);
                data[m % g] += Complex64::new(c, 0.0);
                data[(g - m % g) % g] += Complex64::new(c, 0.0);
            }
        }
        fft_nd(&mut data, dims);
        data
    }
}
