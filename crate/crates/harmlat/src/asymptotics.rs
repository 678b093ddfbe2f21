//! Correlation lengths and decay laws.
//!
//! For a gapped 1D chain with finite-range couplings the spectral function
//! squared extends to a rational function `g(z) = sum c_n (z^n + z^-n)/2`
//! with `g(e^{i phi}) = E^2(phi)`. Ground-state correlations decay with
//! `xi = -1/log|z~|` where `z~` is the zero of `g` of largest modulus inside
//! the unit circle; the local order of that zero decides between the
//! `e^{-n/xi}/sqrt(n)` envelope (order one), pure exponential (even order),
//! and an upper-bound-only classification (odd order above one). Near
//! criticality the dominant zero sits at distance `sqrt(gap * m*)` from the
//! circle, giving the prediction `xi ~ 1/sqrt(gap * m*)` with `m*` the
//! inverse curvature of the band at the gap.
//!
//! [`fit_decay`] provides the regression side: least squares on
//! log-transformed data for exponential and power-law families (with
//! logarithmic corrections `s` in `{0, 1/2, 1}`), and residual-based model
//! selection with a 10% superiority margin.

use num_complex::Complex64;
use serde_json::{json, Value};
use thiserror::Error;

use crate::lattice::{
    spectral_function, Block, CouplingStencil, GapReport, LatticeError,
};
use crate::linalg::poly_roots;

#[derive(Debug, Error)]
pub enum AsymptoticsError {
    #[error(transparent)]
    Lattice(#[from] LatticeError),

    /// A zero of `g` sits on the unit circle: the chain is critical and has
    /// no finite correlation length.
    #[error("zero of g on the unit circle (|z| - 1 = {0:.3e}); input is critical")]
    CriticalInput(f64),

    /// `g` has no zeros inside the unit circle (on-site-only stencil).
    #[error("g(z) has no zeros inside the unit circle")]
    EmptyInterior,

    /// The band is flat at the gap: `m* = infinity`, i.e. `xi = 0`.
    #[error("flat band: E''(phi_gap) = {0:.3e} <= 1e-10")]
    FlatBand(f64),

    #[error("analytic tails are not supported; finite-range stencil required")]
    TailsUnsupported,

    #[error("operation requires d = 1, got d = {0}")]
    DimensionUnsupported(usize),

    #[error("insufficient data: {0} usable points")]
    InsufficientData(usize),

    /// Sign-alternating data cannot be fitted by a raw power law without
    /// envelope extraction.
    #[error("zero crossing inside the fit window with envelope extraction disabled")]
    ZeroCrossingInWindow,
}

impl AsymptoticsError {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Lattice(e) => e.name(),
            Self::CriticalInput(_) => "CriticalInput",
            Self::EmptyInterior => "EmptyInterior",
            Self::FlatBand(_) => "FlatBand",
            Self::TailsUnsupported => "TailsUnsupported",
            Self::DimensionUnsupported(_) => "DimensionUnsupported",
            Self::InsufficientData(_) => "InsufficientData",
            Self::ZeroCrossingInWindow => "ZeroCrossingInWindow",
        }
    }
}

pub type Result<T> = std::result::Result<T, AsymptoticsError>;

/// Decay classification per the order of the dominant zero.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum DecayClass {
    /// Simple zero: tight `e^{-n/xi}/sqrt(n)` envelope.
    ExpOverSqrtN,
    /// Even-order zero: pure exponential envelope.
    PureExp,
    /// Odd order above one: only `o(e^{-n/(xi+eps)})` upper bounds.
    ExpUpperBound,
}

impl DecayClass {
    pub fn label(&self) -> &'static str {
        match self {
            Self::ExpOverSqrtN => "exp_over_sqrt_n",
            Self::PureExp => "pure_exp",
            Self::ExpUpperBound => "exp_upper_bound",
        }
    }
}

/// Correlation length extracted from the zeros of `g`.
#[derive(Clone, Debug)]
pub struct CorrLengthReport {
    /// `xi = -1/log|z~|` in lattice sites.
    pub xi: f64,
    /// Dominant zero inside the unit circle.
    pub dominant_zero: Complex64,
    /// Multiplicity of the dominant zero.
    pub order: usize,
    pub classification: DecayClass,
    /// All zeros of `g` (clustered) with multiplicities.
    pub zeros: Vec<(Complex64, usize)>,
}

impl CorrLengthReport {
    pub fn to_json_value(&self) -> Value {
        json!({
            "xi": self.xi,
            "zTilde": { "re": self.dominant_zero.re, "im": self.dominant_zero.im },
            "order": self.order,
            "classification": self.classification.label(),
            "zeros": self.zeros.iter().map(|(z, m)| json!({
                "re": z.re, "im": z.im, "multiplicity": m,
            })).collect::<Vec<_>>(),
        })
    }
}

/// Cosine coefficients `c_n` of `E^2(phi) = sum_n c_n cos(n phi)` by exact
/// convolution of the (symmetrized) stencil coefficients.
fn spectral_square_cosine_coefficients(stencil: &CouplingStencil) -> Result<Vec<f64>> {
    if stencil.dim() != 1 {
        return Err(AsymptoticsError::DimensionUnsupported(stencil.dim()));
    }
    if !stencil.is_finite_range() {
        return Err(AsymptoticsError::TailsUnsupported);
    }
    let sym = stencil.point_symmetrize();
    let grab = |b: Block| -> Vec<(i64, f64)> {
        sym.block(b).entries().map(|(k, &v)| (k[0], v)).collect()
    };
    let q = grab(Block::Q);
    let p = grab(Block::P);
    let m = grab(Block::QP);
    let range = sym.range();
    let l = (2 * range) as usize;
    // Laurent coefficients e_k of Q(phi)P(phi) - M(phi)^2, k in [-l, l]
    let mut e = vec![0.0f64; 2 * l + 1];
    let mut add = |a: &[(i64, f64)], b: &[(i64, f64)], sign: f64| {
        for &(ka, va) in a {
            for &(kb, vb) in b {
                e[(ka + kb + l as i64) as usize] += sign * va * vb;
            }
        }
    };
    add(&q, &p, 1.0);
    add(&m, &m, -1.0);
    // symmetry check: e_k = e_-k
    for k in 1..=l {
        debug_assert!((e[l + k] - e[l - k]).abs() < 1e-12);
    }
    let mut c = vec![e[l]];
    for k in 1..=l {
        c.push(2.0 * e[l + k]);
    }
    Ok(c)
}

/// Correlation length of a gapped finite-range 1D chain from the dominant
/// zero of the complexified spectral function.
pub fn correlation_length_from_zeros(stencil: &CouplingStencil) -> Result<CorrLengthReport> {
    let c = spectral_square_cosine_coefficients(stencil)?;
    let l = c.len() - 1;
    // z^l g(z) = sum_{k=-l..l} e_k z^{l+k} with e_0 = c_0, e_k = c_k / 2
    let mut coeffs = vec![0.0f64; 2 * l + 1];
    coeffs[l] = c[0];
    for k in 1..=l {
        coeffs[l + k] = 0.5 * c[k];
        coeffs[l - k] = 0.5 * c[k];
    }
    let raw = poly_roots(&coeffs);
    // discard the artificial roots at the origin from trimmed coefficients
    let roots: Vec<Complex64> = raw.into_iter().filter(|z| z.norm() > 1e-12).collect();
    if roots.is_empty() {
        return Err(AsymptoticsError::EmptyInterior);
    }
    for z in &roots {
        let d = z.norm() - 1.0;
        if d.abs() <= 1e-9 {
            return Err(AsymptoticsError::CriticalInput(d));
        }
    }
    let zeros = cluster_roots(&roots, 1e-13);
    let interior: Vec<&(Complex64, usize)> =
        zeros.iter().filter(|(z, _)| z.norm() < 1.0 - 1e-9).collect();
    let dominant = interior
        .iter()
        .max_by(|a, b| a.0.norm().total_cmp(&b.0.norm()))
        .ok_or(AsymptoticsError::EmptyInterior)?;
    let (z_tilde, order) = **dominant;
    let classification = match order {
        1 => DecayClass::ExpOverSqrtN,
        o if o % 2 == 0 => DecayClass::PureExp,
        _ => DecayClass::ExpUpperBound,
    };
    Ok(CorrLengthReport {
        xi: -1.0 / z_tilde.norm().ln(),
        dominant_zero: z_tilde,
        order,
        classification,
        zeros,
    })
}

/// Multiplicity-aware root clustering. An m-fold zero scatters the
/// companion eigenvalues over a disc of radius roughly `eps^(1/m)`, so a
/// flat radius cannot resolve multiplicities above two. For each hypothesis
/// `m = 6, .., 2` (largest first) we merge any group of roots whose total
/// count is exactly `m` and which fits inside a ball of radius
/// `base^(1/m) * (1 + |z|)`.
fn cluster_roots(roots: &[Complex64], base: f64) -> Vec<(Complex64, usize)> {
    let mut clusters: Vec<(Complex64, usize)> = roots.iter().map(|&z| (z, 1usize)).collect();
    for m_test in (2..=6usize).rev() {
        'stable: loop {
            for i in 0..clusters.len() {
                let center = clusters[i].0 / clusters[i].1 as f64;
                let radius = base.powf(1.0 / m_test as f64) * (1.0 + center.norm());
                let ball: Vec<usize> = (0..clusters.len())
                    .filter(|&j| {
                        (clusters[j].0 / clusters[j].1 as f64 - center).norm() <= radius
                    })
                    .collect();
                let count: usize = ball.iter().map(|&j| clusters[j].1).sum();
                if ball.len() > 1 && count == m_test {
                    let sum: Complex64 = ball.iter().map(|&j| clusters[j].0).sum();
                    for &j in ball.iter().rev() {
                        clusters.remove(j);
                    }
                    clusters.push((sum, count));
                    continue 'stable;
                }
            }
            break;
        }
    }
    clusters
        .into_iter()
        .map(|(sum, m)| (sum / m as f64, m))
        .collect()
}

/// Gap, effective mass, and the predicted correlation length
/// `xi_pred = 1/sqrt(gap * m*)`.
#[derive(Clone, Debug)]
pub struct GapLawPrediction {
    pub gap: f64,
    /// `m* = 1/E''(phi_gap)`.
    pub effective_mass: f64,
    pub xi_pred: f64,
    /// Which band minimum was used (the one giving the largest `xi_pred`).
    pub phi_at_gap: f64,
}

impl GapLawPrediction {
    pub fn to_json_value(&self) -> Value {
        json!({
            "gap": self.gap,
            "effectiveMass": self.effective_mass,
            "xiPred": self.xi_pred,
            "phiAtGap": self.phi_at_gap,
        })
    }
}

pub fn gap_law_prediction(stencil: &CouplingStencil) -> Result<GapLawPrediction> {
    if stencil.dim() != 1 {
        return Err(AsymptoticsError::DimensionUnsupported(stencil.dim()));
    }
    let sf = spectral_function(stencil)?;
    let report: &GapReport = sf.gap_report();
    if sf.is_critical() {
        return Err(AsymptoticsError::CriticalInput(0.0));
    }
    let delta = report.gap;

    // Gather all band minima at the gap value; with several, keep the one
    // giving the largest predicted xi (the zero closest to the unit circle).
    let e = |phi: f64| sf.eval(&[phi]).unwrap_or(f64::INFINITY);
    let mut candidates = vec![report.location[0]];
    let scan = 1usize << 10;
    let mut vals: Vec<f64> = Vec::with_capacity(scan);
    for r in 0..scan {
        vals.push(e(2.0 * std::f64::consts::PI * r as f64 / scan as f64));
    }
    for r in 0..scan {
        let prev = vals[(r + scan - 1) % scan];
        let next = vals[(r + 1) % scan];
        if vals[r] <= prev && vals[r] <= next && vals[r] <= delta * (1.0 + 1e-6) + 1e-12 {
            let phi = 2.0 * std::f64::consts::PI * r as f64 / scan as f64;
            if candidates
                .iter()
                .all(|&c| angular_distance(c, phi) > 4.0 * std::f64::consts::PI / scan as f64)
            {
                candidates.push(phi);
            }
        }
    }

    let mut best: Option<GapLawPrediction> = None;
    let mut flat = f64::INFINITY;
    for phi0 in candidates {
        let curvature = second_derivative(&e, phi0);
        if curvature <= 1e-10 {
            flat = flat.min(curvature);
            continue;
        }
        let m_star = 1.0 / curvature;
        let xi_pred = 1.0 / (delta * m_star).sqrt();
        if best.as_ref().map(|b| xi_pred > b.xi_pred).unwrap_or(true) {
            best = Some(GapLawPrediction {
                gap: delta,
                effective_mass: m_star,
                xi_pred,
                phi_at_gap: phi0,
            });
        }
    }
    best.ok_or(AsymptoticsError::FlatBand(flat))
}

fn angular_distance(a: f64, b: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let d = (a - b).rem_euclid(two_pi);
    d.min(two_pi - d)
}

/// Five-point central second derivative with one Richardson refinement
/// sweep over decreasing step sizes.
fn second_derivative<F: Fn(f64) -> f64>(f: &F, x: f64) -> f64 {
    let d2 = |h: f64| {
        (-f(x - 2.0 * h) + 16.0 * f(x - h) - 30.0 * f(x) + 16.0 * f(x + h) - f(x + 2.0 * h))
            / (12.0 * h * h)
    };
    let mut best = f64::NAN;
    let mut best_change = f64::INFINITY;
    let mut prev: Option<f64> = None;
    let mut h = 1e-2;
    while h > 2e-5 {
        // Richardson step for the 4th-order stencil: error ~ h^4
        let val = (16.0 * d2(h / 2.0) - d2(h)) / 15.0;
        if let Some(p) = prev {
            let change = (val - p).abs();
            if change < best_change {
                best_change = change;
                best = val;
            }
        }
        prev = Some(val);
        h /= 2.0;
    }
    best
}

// --- decay fitting ---------------------------------------------------------

/// Candidate decay models for [`fit_decay`].
#[derive(Copy, Clone, Debug, PartialEq)]
pub enum ModelSpec {
    /// `A e^{-n/xi} n^p` with `A`, `xi`, `p` free.
    Exp,
    /// `A n^{-beta} (log n)^s` with `A`, `beta` free and `s` fixed.
    Power { s: f64 },
    /// `A n^{-beta} (log n)^s` with the exponent pinned.
    PowerFixed { beta: f64, s: f64 },
}

/// The power-law family with the log-correction exponents the theory
/// singles out: `s` in `{0, 1/2, 1}`.
pub fn power_family() -> Vec<ModelSpec> {
    vec![
        ModelSpec::Power { s: 0.0 },
        ModelSpec::Power { s: 0.5 },
        ModelSpec::Power { s: 1.0 },
    ]
}

/// A fitted model with parameters in natural units.
#[derive(Clone, Debug, PartialEq)]
pub enum DecayModel {
    Exp { amplitude: f64, xi: f64, power: f64 },
    Power { amplitude: f64, beta: f64, s: f64, beta_fixed: bool },
}

impl DecayModel {
    pub fn to_json_value(&self) -> Value {
        match self {
            Self::Exp { amplitude, xi, power } => json!({
                "model": "exp",
                "params": { "amplitude": amplitude, "xi": xi, "power": power },
            }),
            Self::Power { amplitude, beta, s, beta_fixed } => json!({
                "model": if *s == 0.0 { "power" } else { "power_log" },
                "params": {
                    "amplitude": amplitude, "beta": beta, "s": s,
                    "betaFixed": beta_fixed,
                },
            }),
        }
    }
}

/// Options for [`fit_decay`].
#[derive(Clone, Debug)]
pub struct FitOptions {
    /// Fit window `[n_min, n_max]`; defaults to `[8, n_max(data)]`.
    pub window: Option<(i64, i64)>,
    /// Extract the envelope (|values| at local maxima) when signs alternate.
    pub envelope: bool,
    /// Discard points with `|value|` at or below this floor.
    pub noise_floor: f64,
    /// Also report a re-fit on `[16, n_max]`.
    pub sensitivity: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { window: None, envelope: true, noise_floor: 0.0, sensitivity: true }
    }
}

/// Result of decay-law fitting with model selection.
#[derive(Clone, Debug)]
pub struct DecayFit {
    pub model: DecayModel,
    /// RMS residual on log-transformed data.
    pub residual: f64,
    pub window: (i64, i64),
    pub runner_up: Option<(DecayModel, f64)>,
    /// Whether the winner beats the runner-up by the 10% margin.
    pub decisive: bool,
    /// Re-fit on the `[16, n_max]` window, when requested and feasible.
    pub sensitivity: Option<Box<DecayFit>>,
}

impl DecayFit {
    pub fn to_json_value(&self) -> Value {
        let mut v = self.model.to_json_value();
        let obj = v.as_object_mut().unwrap();
        obj.insert("residual".into(), json!(self.residual));
        obj.insert("window".into(), json!([self.window.0, self.window.1]));
        obj.insert("decisive".into(), json!(self.decisive));
        if let Some((m, r)) = &self.runner_up {
            let mut ru = m.to_json_value();
            ru.as_object_mut().unwrap().insert("residual".into(), json!(r));
            obj.insert("runnerUp".into(), ru);
        }
        if let Some(s) = &self.sensitivity {
            obj.insert("sensitivity".into(), s.to_json_value());
        }
        v
    }
}

/// Fit decay models to `(n, value)` data and select the best by residual.
///
/// Values may oscillate in sign; the fit then runs on the `|value|`
/// envelope (restricted to local maxima when the oscillation is slower
/// than strict alternation). At least 12 data points are required.
pub fn fit_decay(
    data: &[(i64, f64)],
    candidates: &[ModelSpec],
    opts: &FitOptions,
) -> Result<DecayFit> {
    if data.len() < 12 {
        return Err(AsymptoticsError::InsufficientData(data.len()));
    }
    let n_max = data.iter().map(|&(n, _)| n).max().unwrap();
    let window = opts.window.unwrap_or((8, n_max));
    let fit = fit_in_window(data, candidates, opts, window)?;
    let mut fit = fit;
    if opts.sensitivity && window.0 < 16 && window.1 > 16 + 4 {
        let mut sens_opts = opts.clone();
        sens_opts.sensitivity = false;
        sens_opts.window = Some((16, window.1));
        if let Ok(s) = fit_decay(data, candidates, &sens_opts) {
            fit.sensitivity = Some(Box::new(s));
        }
    }
    Ok(fit)
}

fn fit_in_window(
    data: &[(i64, f64)],
    candidates: &[ModelSpec],
    opts: &FitOptions,
    window: (i64, i64),
) -> Result<DecayFit> {
    let in_window: Vec<(i64, f64)> = data
        .iter()
        .copied()
        .filter(|&(n, v)| n >= window.0 && n <= window.1 && v.abs() > opts.noise_floor && n >= 2)
        .collect();
    let signs_change = in_window.windows(2).any(|w| w[0].1 * w[1].1 < 0.0);
    let points: Vec<(f64, f64)> = if signs_change {
        if !opts.envelope {
            return Err(AsymptoticsError::ZeroCrossingInWindow);
        }
        envelope_points(&in_window)
    } else {
        in_window.iter().map(|&(n, v)| (n as f64, v.abs().ln())).collect()
    };
    if points.len() < 4 {
        return Err(AsymptoticsError::InsufficientData(points.len()));
    }

    let mut fits: Vec<(DecayModel, f64)> = Vec::new();
    for spec in candidates {
        if let Some(fit) = fit_one(&points, *spec) {
            fits.push(fit);
        }
    }
    if fits.is_empty() {
        return Err(AsymptoticsError::InsufficientData(points.len()));
    }
    fits.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (model, residual) = fits[0].clone();
    let runner_up = fits.get(1).cloned();
    let decisive = runner_up
        .as_ref()
        .map(|(_, r2)| *r2 >= 1.1 * residual)
        .unwrap_or(true);
    Ok(DecayFit { model, residual, window, runner_up, decisive, sensitivity: None })
}

/// `|value|` at local maxima; falls back to all `|value|` when the data
/// alternates strictly (the modulus is then already the envelope).
fn envelope_points(data: &[(i64, f64)]) -> Vec<(f64, f64)> {
    let abs: Vec<(i64, f64)> = data.iter().map(|&(n, v)| (n, v.abs())).collect();
    let maxima: Vec<(f64, f64)> = abs
        .windows(3)
        .filter(|w| w[1].1 >= w[0].1 && w[1].1 >= w[2].1 && w[1].1 > 0.0)
        .map(|w| (w[1].0 as f64, w[1].1.ln()))
        .collect();
    if maxima.len() >= 4 {
        maxima
    } else {
        abs.iter()
            .filter(|&&(_, v)| v > 0.0)
            .map(|&(n, v)| (n as f64, v.ln()))
            .collect()
    }
}

/// Least-squares fit of one model on `(n, log|v|)` points; returns the model
/// and the RMS residual.
fn fit_one(points: &[(f64, f64)], spec: ModelSpec) -> Option<(DecayModel, f64)> {
    use nalgebra::{DMatrix, DVector};
    let n = points.len();
    let (design, target): (Vec<Vec<f64>>, Vec<f64>) = match spec {
        ModelSpec::Exp => (
            points.iter().map(|&(x, _)| vec![1.0, x, x.ln()]).collect(),
            points.iter().map(|&(_, y)| y).collect(),
        ),
        ModelSpec::Power { s } => (
            points.iter().map(|&(x, _)| vec![1.0, x.ln()]).collect(),
            points
                .iter()
                .map(|&(x, y)| y - s * x.ln().max(f64::MIN_POSITIVE).ln())
                .collect(),
        ),
        ModelSpec::PowerFixed { beta, s } => (
            points.iter().map(|_| vec![1.0]).collect(),
            points
                .iter()
                .map(|&(x, y)| y + beta * x.ln() - s * x.ln().max(f64::MIN_POSITIVE).ln())
                .collect(),
        ),
    };
    let cols = design[0].len();
    let a = DMatrix::from_fn(n, cols, |i, j| design[i][j]);
    let b = DVector::from_vec(target);
    let svd = a.clone().svd(true, true);
    let coef = svd.solve(&b, 1e-12).ok()?;
    let pred = &a * &coef;
    let rss: f64 = (&b - &pred).iter().map(|r| r * r).sum();
    let residual = (rss / n as f64).sqrt();
    let model = match spec {
        ModelSpec::Exp => DecayModel::Exp {
            amplitude: coef[0].exp(),
            xi: -1.0 / coef[1],
            power: coef[2],
        },
        ModelSpec::Power { s } => DecayModel::Power {
            amplitude: coef[0].exp(),
            beta: -coef[1],
            s,
            beta_fixed: false,
        },
        ModelSpec::PowerFixed { beta, s } => DecayModel::Power {
            amplitude: coef[0].exp(),
            beta,
            s,
            beta_fixed: true,
        },
    };
    Some((model, residual))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{klein_gordon, BlockStencil, CouplingStencil};

    fn kg_z_tilde(kappa: f64) -> f64 {
        (1.0 - (1.0 - kappa * kappa).sqrt()) / kappa
    }

    #[test]
    fn klein_gordon_dominant_zero_closed_form() {
        for kappa in [0.3, 0.5, 0.9] {
            let rep = correlation_length_from_zeros(&klein_gordon(kappa).unwrap()).unwrap();
            let expect = kg_z_tilde(kappa);
            assert!(
                (rep.dominant_zero.re - expect).abs() < 1e-10 && rep.dominant_zero.im.abs() < 1e-10,
                "kappa={kappa}: {} vs {expect}",
                rep.dominant_zero
            );
            assert_eq!(rep.order, 1);
            assert_eq!(rep.classification, DecayClass::ExpOverSqrtN);
        }
    }

    #[test]
    fn klein_gordon_half_frozen_xi() {
        // z~ = 2 - sqrt(3), xi = -1/log z~ (independent high-precision value)
        let rep = correlation_length_from_zeros(&klein_gordon(0.5).unwrap()).unwrap();
        assert!((rep.dominant_zero.re - 0.267_949_192_431_122_7).abs() < 1e-12);
        assert!((rep.xi - 0.759_325_717_500_206_9).abs() < 1e-10);
    }

    #[test]
    fn zeros_pair_under_inversion() {
        let stencils = [
            klein_gordon(0.4).unwrap(),
            klein_gordon(0.85).unwrap(),
            squared_band_stencil(),
        ];
        for s in stencils {
            let rep = correlation_length_from_zeros(&s).unwrap();
            for (z, _) in rep.zeros.iter().filter(|(z, _)| z.norm() < 1.0) {
                let target = 1.0 / z.norm();
                let found = rep
                    .zeros
                    .iter()
                    .any(|(w, _)| (w.norm() - target).abs() / target <= 1e-6);
                assert!(found, "no inversion partner for {z}");
            }
        }
    }

    #[test]
    fn g_matches_spectral_function_on_circle() {
        let s = klein_gordon(0.7).unwrap();
        let c = spectral_square_cosine_coefficients(&s).unwrap();
        let sf = crate::lattice::spectral_function(&s).unwrap();
        for r in 0..1024 {
            let phi = 2.0 * std::f64::consts::PI * r as f64 / 1024.0;
            let g: f64 = c
                .iter()
                .enumerate()
                .map(|(n, cn)| cn * (n as f64 * phi).cos())
                .sum();
            assert!((g - sf.eval_squared(&[phi])).abs() < 1e-10);
        }
    }

    /// H = V (+) 1 with V = X^2, X the banded symbol 2.5 - 2 cos(phi):
    /// g(z) = x(z)^2 has a double zero at 1/2.
    fn squared_band_stencil() -> CouplingStencil {
        // X stencil {0: 2.5, +-1: -1}; V = X^2 -> {0: 8.25, +-1: -5, +-2: 1}
        let q = BlockStencil::from_entries(
            1,
            [
                (vec![0], 2.5 * 2.5 + 2.0),
                (vec![1], -5.0),
                (vec![-1], -5.0),
                (vec![2], 1.0),
                (vec![-2], 1.0),
            ],
        )
        .unwrap();
        let p = BlockStencil::from_entries(1, [(vec![0], 1.0)]).unwrap();
        CouplingStencil::new(1, q, p, BlockStencil::default()).unwrap()
    }

    #[test]
    fn even_order_zero_classifies_pure_exp() {
        let rep = correlation_length_from_zeros(&squared_band_stencil()).unwrap();
        assert_eq!(rep.order, 2, "double zero expected, got {:?}", rep.zeros);
        assert!((rep.dominant_zero.re - 0.5).abs() < 1e-7);
        assert_eq!(rep.classification, DecayClass::PureExp);
        assert!((rep.xi - -1.0 / 0.5f64.ln()).abs() < 1e-6);
    }

    #[test]
    fn odd_high_order_zero_classifies_upper_bound() {
        // V = X^3 with the same X: triple zero at 1/2
        // X^3 coefficients: conv of {2.5, -1} three times
        let x = [(0i64, 2.5f64), (1, -1.0), (-1, -1.0)];
        let mut sq = std::collections::BTreeMap::<i64, f64>::new();
        for &(a, va) in &x {
            for &(b, vb) in &x {
                *sq.entry(a + b).or_insert(0.0) += va * vb;
            }
        }
        let mut cube = std::collections::BTreeMap::<i64, f64>::new();
        for (&a, &va) in &sq {
            for &(b, vb) in &x {
                *cube.entry(a + b).or_insert(0.0) += va * vb;
            }
        }
        let q = BlockStencil::from_entries(1, cube.into_iter().map(|(k, v)| (vec![k], v)))
            .unwrap();
        let p = BlockStencil::from_entries(1, [(vec![0], 1.0)]).unwrap();
        let s = CouplingStencil::new(1, q, p, BlockStencil::default()).unwrap();
        let rep = correlation_length_from_zeros(&s).unwrap();
        assert_eq!(rep.order, 3, "{:?}", rep.zeros);
        assert_eq!(rep.classification, DecayClass::ExpUpperBound);
    }

    #[test]
    fn critical_input_rejected() {
        match correlation_length_from_zeros(&klein_gordon(1.0).unwrap()) {
            Err(AsymptoticsError::CriticalInput(_)) => {}
            other => panic!("expected CriticalInput, got {other:?}"),
        }
    }

    #[test]
    fn on_site_only_has_empty_interior() {
        let s = klein_gordon(0.0).unwrap();
        match correlation_length_from_zeros(&s) {
            Err(AsymptoticsError::EmptyInterior) => {}
            other => panic!("expected EmptyInterior, got {other:?}"),
        }
    }

    #[test]
    fn scaling_leaves_zeros_invariant() {
        let s = klein_gordon(0.6).unwrap();
        let a = correlation_length_from_zeros(&s).unwrap();
        let b = correlation_length_from_zeros(&s.scaled(3.7)).unwrap();
        assert!((a.xi - b.xi).abs() < 1e-10);
        assert!((a.dominant_zero - b.dominant_zero).norm() < 1e-9);
        assert_eq!(a.classification, b.classification);
    }

    #[test]
    fn gap_law_klein_gordon_closed_forms() {
        // Delta = sqrt(1 - |k|), m* = 2 sqrt(1 - |k|)/|k|
        for kappa in [0.5f64, 0.8, 0.995] {
            let pred = gap_law_prediction(&klein_gordon(kappa).unwrap()).unwrap();
            let delta = (1.0 - kappa).sqrt();
            let m_star = 2.0 * (1.0 - kappa).sqrt() / kappa;
            assert!((pred.gap - delta).abs() < 1e-10, "kappa={kappa}");
            assert!(
                (pred.effective_mass - m_star).abs() < 1e-6 * m_star,
                "kappa={kappa}: m* {} vs {m_star}",
                pred.effective_mass
            );
        }
    }

    #[test]
    fn gap_law_agrees_with_zero_based_xi_near_criticality() {
        let s = klein_gordon(0.995).unwrap();
        let pred = gap_law_prediction(&s).unwrap();
        let rep = correlation_length_from_zeros(&s).unwrap();
        let rel = (pred.xi_pred - rep.xi).abs() / rep.xi;
        assert!(rel < 0.05, "xi_pred {} vs xi {} ({rel:.3})", pred.xi_pred, rep.xi);
    }

    #[test]
    fn flat_band_rejected() {
        match gap_law_prediction(&klein_gordon(0.0).unwrap()) {
            Err(AsymptoticsError::FlatBand(_)) => {}
            other => panic!("expected FlatBand, got {other:?}"),
        }
    }

    #[test]
    fn exact_exponential_data() {
        let data: Vec<(i64, f64)> = (1..=40).map(|n| (n, 2f64.powi(-(n as i32)))).collect();
        let fit = fit_decay(&data, &[ModelSpec::Exp], &FitOptions::default()).unwrap();
        match fit.model {
            DecayModel::Exp { xi, power, .. } => {
                assert!((xi - 1.0 / 2f64.ln()).abs() < 1e-10);
                assert!(power.abs() < 1e-8);
            }
            other => panic!("unexpected model {other:?}"),
        }
        assert!(fit.residual < 1e-12);
    }

    #[test]
    fn critical_kg_closed_form_selects_pure_power() {
        // (gamma_P)_n = -(2 sqrt 2/pi)/(4n^2-1): beta = 2, s = 0
        let data: Vec<(i64, f64)> = (1..=200)
            .map(|n| {
                let v = -(2.0 * 2f64.sqrt() / std::f64::consts::PI)
                    / (4.0 * (n as f64).powi(2) - 1.0);
                (n, v)
            })
            .collect();
        let fit = fit_decay(&data, &power_family(), &FitOptions::default()).unwrap();
        match fit.model {
            DecayModel::Power { beta, s, .. } => {
                assert!((beta - 2.0).abs() < 0.01, "beta {beta}");
                assert_eq!(s, 0.0);
            }
            other => panic!("unexpected model {other:?}"),
        }
        assert!(fit.decisive, "expected decisive selection");
    }

    #[test]
    fn synthetic_log_correction_selects_half() {
        let data: Vec<(i64, f64)> = (2..=200)
            .map(|n| {
                let x = n as f64;
                (n, x.powi(-2) * x.ln().sqrt())
            })
            .collect();
        let candidates = [
            ModelSpec::PowerFixed { beta: 2.0, s: 0.0 },
            ModelSpec::PowerFixed { beta: 2.0, s: 0.5 },
            ModelSpec::PowerFixed { beta: 2.0, s: 1.0 },
        ];
        let fit = fit_decay(&data, &candidates, &FitOptions::default()).unwrap();
        match fit.model {
            DecayModel::Power { s, .. } => assert_eq!(s, 0.5),
            other => panic!("unexpected model {other:?}"),
        }
        assert!(fit.decisive);
        assert!(fit.residual < 1e-10);
    }

    #[test]
    fn alternating_data_without_envelope_errors() {
        let data: Vec<(i64, f64)> = (1..=30)
            .map(|n| (n, (-1f64).powi(n as i32) * (n as f64).powi(-2)))
            .collect();
        let opts = FitOptions { envelope: false, ..Default::default() };
        match fit_decay(&data, &power_family(), &opts) {
            Err(AsymptoticsError::ZeroCrossingInWindow) => {}
            other => panic!("expected ZeroCrossingInWindow, got {other:?}"),
        }
        // with envelope extraction the fit succeeds
        let fit = fit_decay(&data, &power_family(), &FitOptions::default()).unwrap();
        match fit.model {
            DecayModel::Power { beta, .. } => assert!((beta - 2.0).abs() < 0.01),
            other => panic!("unexpected model {other:?}"),
        }
    }

    #[test]
    fn too_few_points() {
        let data: Vec<(i64, f64)> = (1..=5).map(|n| (n, 1.0 / n as f64)).collect();
        assert!(matches!(
            fit_decay(&data, &power_family(), &FitOptions::default()),
            Err(AsymptoticsError::InsufficientData(_))
        ));
    }

    #[test]
    fn sensitivity_refit_present() {
        let data: Vec<(i64, f64)> = (1..=60).map(|n| (n, (n as f64).powi(-3))).collect();
        let fit = fit_decay(&data, &power_family(), &FitOptions::default()).unwrap();
        let sens = fit.sensitivity.as_ref().expect("sensitivity refit");
        assert_eq!(sens.window.0, 16);
    }
}
