//! Real-space correlation sequences `[f(M)]_n` by FFT functional calculus.
//!
//! Every ground-state correlation of a translationally invariant system is
//! an instance of one formula: sample the block symbols on a uniform grid,
//! apply a scalar function pointwise, inverse-transform, and read off the
//! requested offsets. On a finite `N^d` torus the grid is the momentum
//! lattice itself and the evaluation is exact; in the thermodynamic limit
//! the grid is doubled until the requested entries stop moving (uniform-grid
//! trapezoid quadrature, spectrally accurate for smooth periodic integrands
//! and still convergent, only slower, at critical points).

use num_complex::Complex64;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::fft::ifft_nd;
use crate::lattice::{
    spectral_function_with, Block, CouplingStencil, LatticeError, SpectralFunction, SystemSize,
};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorrelationError {
    #[error(transparent)]
    Lattice(#[from] LatticeError),

    /// The requested block diverges at a critical point (e.g. the Q block of
    /// a critical chain); no finite values exist.
    #[error("correlation block {0} diverges at a critical point")]
    DivergentBlock(&'static str),

    /// The inverse transform left an imaginary residue beyond tolerance,
    /// indicating a symbol symmetry violation.
    #[error("imaginary residue {0:.3e} after inverse transform")]
    ImaginaryResidue(f64),

    #[error("out of range: {0}")]
    OutOfRange(String),
}

impl CorrelationError {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Lattice(e) => e.name(),
            Self::DivergentBlock(_) => "DivergentBlock",
            Self::ImaginaryResidue(_) => "ImaginaryResidue",
            Self::OutOfRange(_) => "OutOfRange",
        }
    }
}

pub type Result<T> = std::result::Result<T, CorrelationError>;

/// Scalar functions of the block symbols whose Fourier coefficients are the
/// standard correlation sequences. `E` is the spectral function.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum BlockFunction {
    /// `gamma_Q = P(phi) / E(phi)`
    GammaQ,
    /// `gamma_P = Q(phi) / E(phi)`
    GammaP,
    /// `gamma_QP = -M(phi) / E(phi)`
    GammaQP,
    /// `1 / E(phi)`
    InverseSpectral,
    /// `E(phi)`
    Spectral,
}

impl BlockFunction {
    pub fn label(&self) -> &'static str {
        match self {
            Self::GammaQ => "gamma_Q",
            Self::GammaP => "gamma_P",
            Self::GammaQP => "gamma_QP",
            Self::InverseSpectral => "inverse_spectral",
            Self::Spectral => "spectral",
        }
    }
}

/// Grid and tolerance knobs for the engine.
#[derive(Clone, Debug)]
pub struct EngineOptions {
    /// Starting per-dimension grid (power of two), clamped by the caps.
    pub grid_start: usize,
    /// Per-dimension grid cap.
    pub grid_cap: usize,
    /// Total sample budget across all dimensions.
    pub total_cap: usize,
    /// Doubling stops when requested entries change by less than this
    /// (gapped systems).
    pub tol_gapped: f64,
    /// Doubling threshold for critical systems.
    pub tol_critical: f64,
    /// Tail truncation tolerance for analytic tails.
    pub truncation_tol: f64,
    /// Largest tolerated imaginary residue after the inverse transform.
    pub imag_tol: f64,
}

impl Default for EngineOptions {
    fn default() -> Self {
        Self {
            grid_start: 1 << 12,
            grid_cap: 1 << 20,
            total_cap: 1 << 22,
            tol_gapped: 1e-10,
            tol_critical: 1e-8,
            truncation_tol: 1e-12,
            imag_tol: 1e-10,
        }
    }
}

impl EngineOptions {
    fn start_for(&self, dim: usize) -> usize {
        self.cap_for(dim).min(self.grid_start)
    }

    /// Per-dimension cap implied by `grid_cap` and `total_cap`.
    pub fn cap_for(&self, dim: usize) -> usize {
        let total_per_dim = 1usize << (self.total_cap.trailing_zeros() as usize / dim);
        self.grid_cap.min(total_per_dim)
    }
}

/// How the final evaluation went.
#[derive(Clone, Debug)]
pub struct ConvergenceReport {
    /// Per-dimension grid of the accepted evaluation.
    pub grid: Vec<usize>,
    /// Whether the doubling criterion was met before hitting the cap
    /// (always true for finite lattices).
    pub converged: bool,
    /// Entrywise change in the last doubling step.
    pub last_change: f64,
    /// Certified symbol truncation bound for analytic tails.
    pub tail_bound: f64,
}

/// A correlation sequence over the requested offsets.
#[derive(Clone, Debug)]
pub struct CorrelationSequence {
    pub offsets: Vec<Vec<i64>>,
    pub values: Vec<f64>,
    pub report: ConvergenceReport,
}

impl CorrelationSequence {
    /// CSV rendering: offset components then value, with a header row.
    pub fn to_csv(&self) -> String {
        let dim = self.offsets.first().map(|o| o.len()).unwrap_or(1);
        let mut out = String::new();
        for d in 0..dim {
            out.push_str(&format!("n{}", d + 1));
            out.push(',');
        }
        out.push_str("value\n");
        for (o, v) in self.offsets.iter().zip(&self.values) {
            for c in o {
                out.push_str(&format!("{c},"));
            }
            out.push_str(&format!("{v:.17e}\n"));
        }
        out
    }
}

/// Compute `[f(M)]_n` for the requested offsets.
///
/// Finite systems evaluate the exact momentum sum on the `N^d` lattice
/// (offsets must lie within `N/2` per component); the thermodynamic limit
/// uses grid doubling. Divergent blocks of critical systems are rejected
/// with [`CorrelationError::DivergentBlock`].
pub fn correlation_sequence(
    stencil: &CouplingStencil,
    f: BlockFunction,
    offsets: &[Vec<i64>],
    limit: SystemSize,
    opts: &EngineOptions,
) -> Result<CorrelationSequence> {
    let dim = stencil.dim();
    for o in offsets {
        if o.len() != dim {
            return Err(CorrelationError::OutOfRange(format!(
                "offset {o:?} has wrong dimension (expected {dim})"
            )));
        }
    }
    let sf = spectral_function_with(stencil, opts.truncation_tol)?;
    match limit {
        SystemSize::Finite(n) => {
            if n < 2 {
                return Err(CorrelationError::OutOfRange(format!("lattice size {n} < 2")));
            }
            for o in offsets {
                if o.iter().any(|&c| 2 * c.unsigned_abs() as usize > n) {
                    return Err(CorrelationError::OutOfRange(format!(
                        "offset {o:?} exceeds N/2 = {}",
                        n / 2
                    )));
                }
            }
            let dims = vec![n; dim];
            let (vals, imag) = evaluate(&sf, f, &dims)?;
            let values = extract(&vals, &dims, offsets);
            check_imag(imag, opts)?;
            Ok(CorrelationSequence {
                offsets: offsets.to_vec(),
                values: values.iter().map(|v| v.re).collect(),
                report: ConvergenceReport {
                    grid: dims,
                    converged: true,
                    last_change: 0.0,
                    tail_bound: tail_bound(&sf),
                },
            })
        }
        SystemSize::Thermodynamic => {
            check_divergence(&sf, f)?;
            let tol = if sf.is_critical() { opts.tol_critical } else { opts.tol_gapped };
            let mut g = opts.start_for(dim);
            let cap = opts.cap_for(dim);
            let mut prev: Option<Vec<Complex64>> = None;
            let mut last_change = f64::INFINITY;
            loop {
                let dims = vec![g; dim];
                let (vals, imag) = evaluate(&sf, f, &dims)?;
                let cur = extract(&vals, &dims, offsets);
                check_imag(imag, opts)?;
                if let Some(p) = &prev {
                    last_change = p
                        .iter()
                        .zip(&cur)
                        .map(|(a, b)| (a - b).norm())
                        .fold(0.0, f64::max);
                    if last_change <= tol {
                        return Ok(CorrelationSequence {
                            offsets: offsets.to_vec(),
                            values: cur.iter().map(|v| v.re).collect(),
                            report: ConvergenceReport {
                                grid: dims,
                                converged: true,
                                last_change,
                                tail_bound: tail_bound(&sf),
                            },
                        });
                    }
                }
                if g >= cap {
                    return Ok(CorrelationSequence {
                        offsets: offsets.to_vec(),
                        values: cur.iter().map(|v| v.re).collect(),
                        report: ConvergenceReport {
                            grid: dims,
                            converged: false,
                            last_change,
                            tail_bound: tail_bound(&sf),
                        },
                    });
                }
                prev = Some(cur);
                g *= 2;
            }
        }
    }
}

/// Full correlation window of a two-dimensional model: all offsets with
/// `max(|n1|, |n2|) <= radius`, plus an isotropy diagnostic comparing
/// lattice directions of equal Euclidean length.
#[derive(Clone, Debug)]
pub struct CorrelationMatrix2d {
    pub radius: i64,
    values: Vec<f64>,
    pub report: ConvergenceReport,
    /// Max over radii `>= 8` of the relative spread of values across
    /// equal-length lattice directions.
    pub anisotropy: f64,
}

impl CorrelationMatrix2d {
    pub fn value(&self, n1: i64, n2: i64) -> f64 {
        let w = (2 * self.radius + 1) as usize;
        let i = (n1 + self.radius) as usize;
        let j = (n2 + self.radius) as usize;
        self.values[i * w + j]
    }
}

pub fn correlation_matrix_2d(
    stencil: &CouplingStencil,
    f: BlockFunction,
    radius: i64,
    opts: &EngineOptions,
) -> Result<CorrelationMatrix2d> {
    if stencil.dim() != 2 {
        return Err(CorrelationError::OutOfRange(format!(
            "correlation_matrix_2d needs d = 2, got {}",
            stencil.dim()
        )));
    }
    let mut offsets = Vec::new();
    for i in -radius..=radius {
        for j in -radius..=radius {
            offsets.push(vec![i, j]);
        }
    }
    let seq = correlation_sequence(stencil, f, &offsets, SystemSize::Thermodynamic, opts)?;
    let mat = CorrelationMatrix2d {
        radius,
        anisotropy: anisotropy_diagnostic(radius, &seq.values),
        values: seq.values,
        report: seq.report,
    };
    Ok(mat)
}

fn anisotropy_diagnostic(radius: i64, values: &[f64]) -> f64 {
    let w = (2 * radius + 1) as usize;
    let value = |a: i64, b: i64| values[((a + radius) as usize) * w + (b + radius) as usize];
    use std::collections::BTreeMap;
    let mut groups: BTreeMap<i64, Vec<f64>> = BTreeMap::new();
    for a in 0..=radius {
        for b in 0..=a {
            let r2 = a * a + b * b;
            if r2 >= 64 && r2 <= radius * radius {
                groups.entry(r2).or_default().push(value(a, b));
            }
        }
    }
    let mut worst = 0.0f64;
    for vals in groups.values().filter(|v| v.len() >= 2) {
        let max = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = vals.iter().cloned().fold(f64::INFINITY, f64::min);
        let scale = vals.iter().map(|v| v.abs()).fold(0.0, f64::max);
        if scale > 0.0 {
            worst = worst.max((max - min) / scale);
        }
    }
    worst
}

fn tail_bound(sf: &SpectralFunction) -> f64 {
    Block::ALL
        .iter()
        .map(|&b| sf.block_symbol(b).tail_bound())
        .fold(0.0, f64::max)
}

fn check_imag(imag: f64, opts: &EngineOptions) -> Result<()> {
    if imag > opts.imag_tol {
        return Err(CorrelationError::ImaginaryResidue(imag));
    }
    Ok(())
}

/// Reject divergent blocks: at a zero of `E` of local order `nu` the
/// integrand `num/E` fails to be integrable in `d` dimensions when the
/// numerator stays finite and `nu >= d`.
fn check_divergence(sf: &SpectralFunction, f: BlockFunction) -> Result<()> {
    if !sf.is_critical() {
        return Ok(());
    }
    let d = sf.dim() as u32;
    for cp in sf.critical_points() {
        let nu = cp.order / 2;
        if nu < d {
            continue;
        }
        let num_scale = sf.scale().max(1.0);
        let divergent = match f {
            BlockFunction::Spectral => false,
            BlockFunction::InverseSpectral => true,
            BlockFunction::GammaQ => {
                sf.block_symbol(Block::P).eval(&cp.location).abs() > 1e-6 * num_scale
            }
            BlockFunction::GammaP => {
                sf.block_symbol(Block::Q).eval(&cp.location).abs() > 1e-6 * num_scale
            }
            BlockFunction::GammaQP => {
                sf.block_symbol(Block::QP).eval(&cp.location).abs() > 1e-6 * num_scale
            }
        };
        if divergent {
            return Err(CorrelationError::DivergentBlock(f.label()));
        }
    }
    Ok(())
}

/// Sample the symbols on the grid, apply `f` pointwise (with guarded
/// evaluation at exact zeros of `E`), inverse-transform, and return the
/// full coefficient array together with the worst imaginary residue.
fn evaluate(
    sf: &SpectralFunction,
    f: BlockFunction,
    dims: &[usize],
) -> Result<(Vec<Complex64>, f64)> {
    let qs = sf.block_symbol(Block::Q).sample_grid(dims);
    let ps = sf.block_symbol(Block::P).sample_grid(dims);
    let ms = sf.block_symbol(Block::QP).sample_grid(dims);
    let total = qs.len();
    let e_scale = sf.scale().max(f64::MIN_POSITIVE);
    let floor2 = (1e-9 * e_scale).powi(2);

    let apply = |i: usize| -> Result<Complex64> {
        let q = qs[i].re;
        let p = ps[i].re;
        let m = ms[i].re;
        let e2 = q * p - m * m;
        let v = if e2 > floor2 {
            let e = e2.sqrt();
            match f {
                BlockFunction::GammaQ => p / e,
                BlockFunction::GammaP => q / e,
                BlockFunction::GammaQP => -m / e,
                BlockFunction::InverseSpectral => 1.0 / e,
                BlockFunction::Spectral => e,
            }
        } else {
            // Exact zero of E on the grid: evaluate the limit just off the
            // node. Divergent blocks have been rejected already for the
            // thermodynamic path; a finite lattice reaching this point has
            // hit a zero mode and gets rejected here if the limit blows up.
            if matches!(f, BlockFunction::Spectral) {
                0.0
            } else {
                let phi = grid_phi(i, dims);
                let delta = 1e-7;
                let phi_d: Vec<f64> = phi.iter().map(|x| x + delta).collect();
                let q = sf.block_symbol(Block::Q).eval(&phi_d);
                let p = sf.block_symbol(Block::P).eval(&phi_d);
                let m = sf.block_symbol(Block::QP).eval(&phi_d);
                let e2 = (q * p - m * m).max(0.0);
                let e = e2.sqrt();
                let val = match f {
                    BlockFunction::GammaQ => p / e,
                    BlockFunction::GammaP => q / e,
                    BlockFunction::GammaQP => -m / e,
                    BlockFunction::InverseSpectral => 1.0 / e,
                    BlockFunction::Spectral => unreachable!(),
                };
                if !val.is_finite() || val.abs() > 1e5 * e_scale.max(1.0) {
                    return Err(CorrelationError::DivergentBlock(f.label()));
                }
                val
            }
        };
        Ok(Complex64::new(v, 0.0))
    };

    #[cfg(feature = "parallel")]
    let samples: Result<Vec<Complex64>> = (0..total).into_par_iter().map(apply).collect();
    #[cfg(not(feature = "parallel"))]
    let samples: Result<Vec<Complex64>> = (0..total).map(apply).collect();
    let mut data = samples?;

    ifft_nd(&mut data, dims);
    let scale = 1.0 / total as f64;
    let mut imag_max = 0.0f64;
    for v in &mut data {
        *v *= scale;
        imag_max = imag_max.max(v.im.abs());
    }
    Ok((data, imag_max))
}

fn grid_phi(idx: usize, dims: &[usize]) -> Vec<f64> {
    let mut rem = idx;
    let mut phi = vec![0.0; dims.len()];
    for d in (0..dims.len()).rev() {
        let c = rem % dims[d];
        rem /= dims[d];
        phi[d] = 2.0 * std::f64::consts::PI * c as f64 / dims[d] as f64;
    }
    phi
}

fn extract(data: &[Complex64], dims: &[usize], offsets: &[Vec<i64>]) -> Vec<Complex64> {
    offsets
        .iter()
        .map(|o| {
            let mut idx = 0usize;
            for (d, &c) in o.iter().enumerate() {
                idx = idx * dims[d] + c.rem_euclid(dims[d] as i64) as usize;
            }
            data[idx]
        })
        .collect()
}
