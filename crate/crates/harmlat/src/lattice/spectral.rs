//! Spectral function, gap, and critical-point analysis.
//!
//! The excitation spectrum of a symmetrized stencil is
//! `E(phi) = sqrt(Q(phi) P(phi) - M(phi)^2)` with `M` the symmetrized QP
//! symbol. The gap is found by a grid scan followed by per-axis
//! golden-section refinement; detected zeros are classified by the local
//! power `E ~ |phi - zeta|^nu` fitted on log-log samples (a genuine
//! logarithmic factor at the zero shows up as fit residual).

use super::stencil::{Block, CouplingStencil};
use super::symbol::FourierSymbol;
use super::{LatticeError, Result};

/// A zero of the spectral function.
#[derive(Clone, Debug)]
pub struct CriticalPoint {
    pub location: Vec<f64>,
    /// Order `2 nu` of the minimum of `E^2` (nearest even integer).
    pub order: u32,
    /// Raw fitted exponent of `E` before rounding.
    pub exponent: f64,
    /// RMS residual of the log-log fit; large values indicate logarithmic
    /// corrections or mixed orders.
    pub fit_residual: f64,
}

#[derive(Clone, Debug)]
pub struct GapReport {
    /// The spectral gap (exact zero for critical systems).
    pub gap: f64,
    /// Location of the minimum of `E`.
    pub location: Vec<f64>,
    /// Unclamped minimum found by refinement.
    pub raw_minimum: f64,
}

/// The spectral function of a (symmetrized) stencil, with detected critical
/// points.
#[derive(Clone, Debug)]
pub struct SpectralFunction {
    q: FourierSymbol,
    p: FourierSymbol,
    m: FourierSymbol,
    dim: usize,
    scale: f64,
    gap: GapReport,
    critical_points: Vec<CriticalPoint>,
}

/// Relative threshold under which a refined minimum counts as a zero.
const CRITICAL_REL_TOL: f64 = 1e-7;

impl SpectralFunction {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `E^2(phi) = Q P - M^2` pointwise.
    pub fn eval_squared(&self, phi: &[f64]) -> f64 {
        let q = self.q.eval(phi);
        let p = self.p.eval(phi);
        let m = self.m.eval(phi);
        q * p - m * m
    }

    /// `E(phi)`, clamped at zero within tolerance.
    pub fn eval(&self, phi: &[f64]) -> Result<f64> {
        let e2 = self.eval_squared(phi);
        if e2 < -1e-10 * self.scale * self.scale.max(1.0) {
            return Err(LatticeError::NegativeSymbol(e2));
        }
        Ok(e2.max(0.0).sqrt())
    }

    /// Largest value of `E` over the scan grid (an energy scale).
    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn gap_report(&self) -> &GapReport {
        &self.gap
    }

    pub fn is_critical(&self) -> bool {
        self.gap.gap == 0.0
    }

    pub fn critical_points(&self) -> &[CriticalPoint] {
        &self.critical_points
    }

    pub(crate) fn block_symbol(&self, block: Block) -> &FourierSymbol {
        match block {
            Block::Q => &self.q,
            Block::P => &self.p,
            Block::QP => &self.m,
        }
    }
}

/// Scan grid size per dimension, bounded by the total sample budget 2^22.
pub(crate) fn scan_grid(dim: usize) -> usize {
    match dim {
        1 => 1 << 12,
        2 => 1 << 11,
        _ => 1 << 7,
    }
}

/// Build the spectral function of `stencil` (the QP block is symmetrized
/// first) and locate its gap and critical points.
pub fn spectral_function(stencil: &CouplingStencil) -> Result<SpectralFunction> {
    spectral_function_with(stencil, super::symbol::DEFAULT_TRUNCATION_TOL)
}

/// [`spectral_function`] with an explicit tail truncation tolerance.
pub fn spectral_function_with(
    stencil: &CouplingStencil,
    truncation_tol: f64,
) -> Result<SpectralFunction> {
    let sym = stencil.point_symmetrize();
    let dim = sym.dim();
    let q = FourierSymbol::new(&sym, Block::Q, truncation_tol);
    let p = FourierSymbol::new(&sym, Block::P, truncation_tol);
    let m = FourierSymbol::new(&sym, Block::QP, truncation_tol);

    let g = scan_grid(dim);
    let dims = vec![g; dim];
    let qs = q.sample_grid(&dims);
    let ps = p.sample_grid(&dims);
    let ms = m.sample_grid(&dims);
    let total = qs.len();
    let mut e2 = vec![0.0f64; total];
    let mut max_e2 = 0.0f64;
    let mut min_e2 = f64::INFINITY;
    for i in 0..total {
        let v = qs[i].re * ps[i].re - ms[i].re * ms[i].re;
        e2[i] = v;
        max_e2 = max_e2.max(v);
        min_e2 = min_e2.min(v);
    }
    let scale = max_e2.max(0.0).sqrt();
    if min_e2 < -1e-10 * max_e2.max(1.0) {
        return Err(LatticeError::NegativeSymbol(min_e2));
    }

    let mut sf = SpectralFunction {
        q,
        p,
        m,
        dim,
        scale,
        gap: GapReport { gap: 0.0, location: vec![0.0; dim], raw_minimum: 0.0 },
        critical_points: Vec::new(),
    };

    // Local minima of E^2 on the scan grid.
    let minima = grid_local_minima(&e2, &dims);
    let spacing = 2.0 * std::f64::consts::PI / g as f64;
    let mut refined: Vec<(Vec<f64>, f64)> = Vec::new();
    let candidate_tol = (1e-3 * scale.max(f64::MIN_POSITIVE)).powi(2);
    let global_grid_min = minima
        .iter()
        .map(|&i| e2[i])
        .fold(f64::INFINITY, f64::min);
    for &idx in &minima {
        if e2[idx] > candidate_tol && e2[idx] > global_grid_min {
            continue;
        }
        let phi0 = index_to_phi(idx, &dims);
        let phi = refine_minimum(&sf, phi0, spacing);
        let val = sf.eval_squared(&phi).max(0.0).sqrt();
        refined.push((phi, val));
    }
    refined.sort_by(|a, b| a.1.total_cmp(&b.1));
    dedupe_locations(&mut refined);

    // Criticality threshold: relative floor plus the certified symbol
    // truncation error (analytic tails bound how exactly zero E^2 can get).
    let tail_total: f64 = [&sf.q, &sf.p, &sf.m].iter().map(|s| s.tail_bound()).sum();
    let crit_tol2 = (CRITICAL_REL_TOL * scale.max(f64::MIN_POSITIVE)).powi(2)
        + 10.0 * tail_total * (1.0 + scale * scale);
    let crit_tol = crit_tol2.sqrt();
    let (best_phi, best_val) = refined
        .first()
        .cloned()
        .unwrap_or((vec![0.0; dim], scale));
    let critical = best_val <= crit_tol;
    sf.gap = GapReport {
        gap: if critical { 0.0 } else { best_val },
        location: best_phi,
        raw_minimum: best_val,
    };
    if critical {
        for (phi, val) in refined.iter().filter(|(_, v)| *v <= crit_tol) {
            let cp = classify_zero(&sf, phi);
            sf.critical_points.push(cp);
            let _ = val;
        }
    }
    Ok(sf)
}

/// The spectral gap and its location.
pub fn gap(stencil: &CouplingStencil) -> Result<GapReport> {
    Ok(spectral_function(stencil)?.gap_report().clone())
}

fn index_to_phi(idx: usize, dims: &[usize]) -> Vec<f64> {
    let mut rem = idx;
    let mut phi = vec![0.0; dims.len()];
    for d in (0..dims.len()).rev() {
        let c = rem % dims[d];
        rem /= dims[d];
        phi[d] = 2.0 * std::f64::consts::PI * c as f64 / dims[d] as f64;
    }
    phi
}

fn grid_local_minima(e2: &[f64], dims: &[usize]) -> Vec<usize> {
    let dim = dims.len();
    let total = e2.len();
    let mut strides = vec![1usize; dim];
    for d in (0..dim.saturating_sub(1)).rev() {
        strides[d] = strides[d + 1] * dims[d + 1];
    }
    (0..total)
        .filter(|&i| {
            let mut rem = i;
            let mut coord = vec![0usize; dim];
            for d in (0..dim).rev() {
                coord[d] = rem % dims[d];
                rem /= dims[d];
            }
            (0..dim).all(|d| {
                let up = (coord[d] + 1) % dims[d];
                let down = (coord[d] + dims[d] - 1) % dims[d];
                let i_up = i + (up + dims[d] - coord[d]) % dims[d] * strides[d]
                    - (0) * strides[d];
                // recompute flat indices directly
                let mut cu = coord.clone();
                cu[d] = up;
                let mut cd = coord.clone();
                cd[d] = down;
                let flat = |c: &[usize]| -> usize {
                    c.iter().zip(strides.iter()).map(|(a, s)| a * s).sum()
                };
                let _ = i_up;
                e2[i] <= e2[flat(&cu)] && e2[i] <= e2[flat(&cd)]
            })
        })
        .collect()
}

/// Cyclic per-axis golden-section refinement of a minimum of `E^2`.
fn refine_minimum(sf: &SpectralFunction, mut phi: Vec<f64>, spacing: f64) -> Vec<f64> {
    let golden: f64 = (5f64.sqrt() - 1.0) / 2.0;
    let rounds = if sf.dim == 1 { 1 } else { 4 };
    for _ in 0..rounds {
        for d in 0..sf.dim {
            let mut a = phi[d] - 2.0 * spacing;
            let mut b = phi[d] + 2.0 * spacing;
            let eval = |x: f64, phi: &[f64]| {
                let mut p = phi.to_vec();
                p[d] = x;
                sf.eval_squared(&p)
            };
            let mut c = b - golden * (b - a);
            let mut dd = a + golden * (b - a);
            let mut fc = eval(c, &phi);
            let mut fd = eval(dd, &phi);
            while (b - a).abs() > 1e-13 {
                if fc < fd {
                    b = dd;
                    dd = c;
                    fd = fc;
                    c = b - golden * (b - a);
                    fc = eval(c, &phi);
                } else {
                    a = c;
                    c = dd;
                    fc = fd;
                    dd = a + golden * (b - a);
                    fd = eval(dd, &phi);
                }
            }
            phi[d] = 0.5 * (a + b);
        }
    }
    phi
}

fn dedupe_locations(points: &mut Vec<(Vec<f64>, f64)>) {
    let mut out: Vec<(Vec<f64>, f64)> = Vec::new();
    for (phi, val) in points.drain(..) {
        let dup = out.iter().any(|(p, _)| {
            p.iter()
                .zip(&phi)
                .all(|(a, b)| angular_distance(*a, *b) < 1e-6)
        });
        if !dup {
            out.push((phi, val));
        }
    }
    *points = out;
}

fn angular_distance(a: f64, b: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let d = (a - b).rem_euclid(two_pi);
    d.min(two_pi - d)
}

/// Fit `log E` against `log |delta|` over a decade along each axis and
/// report the nearest even order of the `E^2` minimum.
fn classify_zero(sf: &SpectralFunction, zeta: &[f64]) -> CriticalPoint {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let n_pts = 12;
    for d in 0..sf.dim {
        for sign in [-1.0, 1.0] {
            for k in 0..n_pts {
                let delta = 1e-3 * 10f64.powf(k as f64 / (n_pts - 1) as f64);
                let mut phi = zeta.to_vec();
                phi[d] += sign * delta;
                let e2 = sf.eval_squared(&phi).max(0.0);
                if e2 > 0.0 {
                    xs.push(delta.ln());
                    ys.push(0.5 * e2.ln());
                }
            }
        }
    }
    let (slope, residual) = linear_fit(&xs, &ys);
    let nu = slope.max(0.5).round().max(1.0);
    CriticalPoint {
        location: zeta.to_vec(),
        order: 2 * nu as u32,
        exponent: slope,
        fit_residual: residual,
    }
}

fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.len() < 2 {
        return (f64::NAN, f64::NAN);
    }
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let r = y - slope * x - intercept;
            r * r
        })
        .sum();
    (slope, (rss / n).sqrt())
}
