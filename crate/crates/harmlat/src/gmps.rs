//! Gaussian matrix product states.
//!
//! A translationally invariant GMPS is built from one pure covariance matrix
//! `Gamma` per site over mode groups `A` (left ports), `B` (right ports) and
//! `C` (output), with adjacent sites glued by projecting `(A_{i+1}, B_i)`
//! onto the EPR state. In covariance-matrix language the projection is:
//! partially transpose one mode, add the two 2x2 blocks (collapse), and take
//! the Schur complement of the collapsed mode. For a ring of `N` identical
//! sites the whole construction reduces to one Schur complement of
//! `Pi (sum Gamma) Pi^T` with a circulant-shift collapse map `Pi`, and in
//! Fourier space to a closed 2x2 form per momentum.
//!
//! Pure single-output GMPS have Fourier symbols whose entries are rational
//! functions of `cos(phi)` with a common denominator `d` and the purity
//! constraint `p q - r^2 = d^2`. That representation exposes the correlation
//! length (largest zero of the complexified denominator inside the unit
//! circle, via residue calculus) and a parent Hamiltonian whose spectral
//! function is `d(cos phi)` and whose ground state is the GMPS itself.
//!
//! This module works in the interleaved ordering `(Q_1, P_1, ..)` with modes
//! grouped `[A.., B.., C..]`; conversions to the blocked ordering used
//! elsewhere happen at the boundary.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lattice::{BlockStencil, CouplingStencil};
use crate::linalg::{max_abs, poly_roots};
use crate::symplectic::{interleaved_to_blocked, CovarianceMatrix, SymplecticForm};

#[derive(Debug, Error)]
pub enum GmpsError {
    #[error("denominator matrix is singular (min |eig| = {0:.3e})")]
    SingularDenominator(f64),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// The collapsed block of an EPR projection is singular; for a ring this
    /// indicates a critical GMPS.
    #[error("collapsed block is singular (min |eig| = {0:.3e}); critical GMPS")]
    SingularCollapse(f64),

    #[error("Fourier-space denominator singular at phi (min |eig| = {0:.3e})")]
    SingularAtPhi(f64),

    /// The sampling system of the rational fit has more than one (near-)null
    /// direction.
    #[error("rational sampling system is rank deficient (gap {0:.3e})")]
    RankDeficientSampling(f64),

    /// The purity identity `p q - r^2 = d^2` fails beyond tolerance.
    #[error("purity identity violated (residual {0:.3e})")]
    PurityViolation(f64),

    /// The denominator has a zero on (or numerically at) the unit circle.
    #[error("denominator root on the unit circle (distance {0:.3e}); critical state")]
    CriticalDenominator(f64),

    #[error("covariance matrix is not pure (residual {0:.3e})")]
    NotPure(f64),

    #[error("serialization: {0}")]
    Serialization(String),
}

impl GmpsError {
    pub fn name(&self) -> &'static str {
        match self {
            Self::SingularDenominator(_) => "SingularDenominator",
            Self::DimensionMismatch(_) => "DimensionMismatch",
            Self::SingularCollapse(_) => "SingularCollapse",
            Self::SingularAtPhi(_) => "SingularAtPhi",
            Self::RankDeficientSampling(_) => "RankDeficientSampling",
            Self::PurityViolation(_) => "PurityViolation",
            Self::CriticalDenominator(_) => "CriticalDenominator",
            Self::NotPure(_) => "NotPure",
            Self::Serialization(_) => "Serialization",
        }
    }
}

pub type Result<T> = std::result::Result<T, GmpsError>;

/// Per-mode partial transposition `theta = diag(1, -1)` on a set of
/// interleaved modes.
fn theta(modes: usize) -> DMatrix<f64> {
    DMatrix::from_fn(2 * modes, 2 * modes, |i, j| {
        if i != j {
            0.0
        } else if i % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    })
}

/// Purity residual `max_abs((gamma sigma)^2 + 1)` in interleaved ordering.
pub fn purity_residual_interleaved(gamma: &DMatrix<f64>) -> f64 {
    let modes = gamma.nrows() / 2;
    let sigma = SymplecticForm::interleaved(modes).matrix();
    let gs = gamma * sigma;
    max_abs(&(&gs * &gs + DMatrix::<f64>::identity(2 * modes, 2 * modes)))
}

/// The Jamiolkowski state of a Gaussian map: a pure covariance matrix over
/// mode groups `[A (left ports), B (right ports), C (outputs)]` in
/// interleaved ordering. Plain input/output channels have `left = 0`.
#[derive(Clone, Debug)]
pub struct GaussianChannel {
    cm: DMatrix<f64>,
    left: usize,
    right: usize,
    out: usize,
}

impl GaussianChannel {
    pub fn new(cm: DMatrix<f64>, left: usize, right: usize, out: usize) -> Result<Self> {
        let modes = left + right + out;
        if cm.nrows() != 2 * modes || cm.ncols() != 2 * modes {
            return Err(GmpsError::DimensionMismatch(format!(
                "cm is {}x{}, expected {} modes = {}",
                cm.nrows(),
                cm.ncols(),
                modes,
                2 * modes
            )));
        }
        let purity = purity_residual_interleaved(&cm);
        if purity > 1e-8 * (1.0 + max_abs(&cm).powi(2)) {
            return Err(GmpsError::NotPure(purity));
        }
        Ok(Self { cm, left, right, out })
    }

    /// Pure channel from a symplectic generator: `Gamma = e^A (e^A)^T` with
    /// `A = sigma * sym` (deterministic way to build arbitrary pure states).
    pub fn from_generator(sym: &DMatrix<f64>, left: usize, right: usize, out: usize) -> Result<Self> {
        let modes = left + right + out;
        if sym.nrows() != 2 * modes {
            return Err(GmpsError::DimensionMismatch(format!(
                "generator is {}x{}, expected {}",
                sym.nrows(),
                sym.ncols(),
                2 * modes
            )));
        }
        let sigma = SymplecticForm::interleaved(modes).matrix();
        let s = (&sigma * ((sym + sym.transpose()) * 0.5)).exp();
        Self::new(&s * s.transpose(), left, right, out)
    }

    pub fn bonds(&self) -> usize {
        self.right
    }

    pub fn left_ports(&self) -> usize {
        self.left
    }

    pub fn outputs(&self) -> usize {
        self.out
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.cm
    }

    pub fn to_json(&self) -> String {
        let rows: Vec<Vec<f64>> = (0..self.cm.nrows())
            .map(|i| (0..self.cm.ncols()).map(|j| self.cm[(i, j)]).collect())
            .collect();
        serde_json::to_string_pretty(&ChannelDoc {
            bond_count: self.right,
            left_ports: self.left,
            output_modes: self.out,
            cm: rows,
        })
        .expect("channel serialization")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let doc: ChannelDoc =
            serde_json::from_str(s).map_err(|e| GmpsError::Serialization(e.to_string()))?;
        let n = doc.cm.len();
        let cm = DMatrix::from_fn(n, n, |i, j| doc.cm[i][j]);
        Self::new(cm, doc.left_ports, doc.bond_count, doc.output_modes)
    }
}

#[derive(Serialize, Deserialize)]
struct ChannelDoc {
    #[serde(rename = "bondCount")]
    bond_count: usize,
    #[serde(rename = "leftPorts", default)]
    left_ports: usize,
    #[serde(rename = "outputModes")]
    output_modes: usize,
    cm: Vec<Vec<f64>>,
}

/// Two-mode squeezed covariance matrix (interleaved): `x1 - x2` and
/// `p1 + p2` squeezed, the standard EPR approximation.
pub fn two_mode_squeezed(r: f64) -> DMatrix<f64> {
    let c = (2.0 * r).cosh();
    let s = (2.0 * r).sinh();
    DMatrix::from_row_slice(
        4,
        4,
        &[
            c, 0.0, s, 0.0, //
            0.0, c, 0.0, -s, //
            s, 0.0, c, 0.0, //
            0.0, -s, 0.0, c,
        ],
    )
}

/// The Jamiolkowski state of the (finitely squeezed) identity channel:
/// `x1 + x2` and `p1 - p2` squeezed. Applying it through
/// [`channel_apply`] reproduces the input as `r` grows.
pub fn identity_channel(r: f64) -> Result<GaussianChannel> {
    let c = (2.0 * r).cosh();
    let s = (2.0 * r).sinh();
    let cm = DMatrix::from_row_slice(
        4,
        4,
        &[
            c, 0.0, -s, 0.0, //
            0.0, c, 0.0, s, //
            -s, 0.0, c, 0.0, //
            0.0, s, 0.0, c,
        ],
    );
    GaussianChannel::new(cm, 0, 1, 1)
}

/// Apply a `B -> C` channel to an input state (interleaved CM on the `B`
/// modes): `out = Gamma_C - Gamma_CB (Gamma_B + theta gamma theta)^{-1}
/// Gamma_BC`.
pub fn channel_apply(channel: &GaussianChannel, gamma_in: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if channel.left != 0 {
        return Err(GmpsError::DimensionMismatch(
            "channel_apply needs a channel with groups B, C only".into(),
        ));
    }
    let nb = 2 * channel.right;
    let nc = 2 * channel.out;
    if gamma_in.nrows() != nb || gamma_in.ncols() != nb {
        return Err(GmpsError::DimensionMismatch(format!(
            "input has {} rows, channel expects {}",
            gamma_in.nrows(),
            nb
        )));
    }
    let g = &channel.cm;
    let g_b = g.view((0, 0), (nb, nb)).into_owned();
    let g_bc = g.view((0, nb), (nb, nc)).into_owned();
    let g_c = g.view((nb, nb), (nc, nc)).into_owned();
    let th = theta(channel.right);
    let denom = &g_b + &th * gamma_in * &th;
    let min_abs_eig = crate::linalg::symmetric_eigen_sorted(&denom)
        .0
        .iter()
        .fold(f64::INFINITY, |a, &v| a.min(v.abs()));
    if min_abs_eig <= 1e-10 {
        return Err(GmpsError::SingularDenominator(min_abs_eig));
    }
    let inv = denom
        .try_inverse()
        .ok_or(GmpsError::SingularDenominator(min_abs_eig))?;
    Ok(&g_c - g_bc.transpose() * inv * &g_bc)
}

/// Project modes `(a, b)` of an interleaved CM onto the EPR state: partial
/// transposition of `b`, collapse of the pair, Schur complement of the
/// collapsed mode. Returns the CM on the remaining modes (original order).
pub fn epr_measure(gamma: &DMatrix<f64>, a: usize, b: usize) -> Result<DMatrix<f64>> {
    let modes = gamma.nrows() / 2;
    if a == b || a >= modes || b >= modes {
        return Err(GmpsError::DimensionMismatch(format!(
            "invalid mode pair ({a}, {b}) for {modes} modes"
        )));
    }
    // theta on mode b only
    let mut g = gamma.clone();
    for k in 0..2 * modes {
        g[(2 * b + 1, k)] = -g[(2 * b + 1, k)];
    }
    for k in 0..2 * modes {
        g[(k, 2 * b + 1)] = -g[(k, 2 * b + 1)];
    }
    // collapse: rows/cols of a and b added; order modes [collapsed, rest]
    let rest: Vec<usize> = (0..modes).filter(|&m| m != a && m != b).collect();
    let pick = |m: usize, x: usize| 2 * m + x;
    let dim = 2 * (rest.len() + 1);
    let mut p = DMatrix::zeros(dim, gamma.nrows());
    for x in 0..2 {
        p[(x, pick(a, x))] = 1.0;
        p[(x, pick(b, x))] = 1.0;
    }
    for (k, &m) in rest.iter().enumerate() {
        for x in 0..2 {
            p[(2 * (k + 1) + x, pick(m, x))] = 1.0;
        }
    }
    let collapsed = &p * g * p.transpose();
    schur_complement_head(&collapsed, 2)
}

/// Schur complement removing the first `head` rows/columns.
fn schur_complement_head(m: &DMatrix<f64>, head: usize) -> Result<DMatrix<f64>> {
    let rest = m.nrows() - head;
    let a = m.view((0, 0), (head, head)).into_owned();
    let b = m.view((0, head), (head, rest)).into_owned();
    let d = m.view((head, head), (rest, rest)).into_owned();
    let min_abs_eig = crate::linalg::symmetric_eigen_sorted(&a)
        .0
        .iter()
        .fold(f64::INFINITY, |acc, &v| acc.min(v.abs()));
    if min_abs_eig <= 1e-10 {
        return Err(GmpsError::SingularCollapse(min_abs_eig));
    }
    let a_inv = a.try_inverse().ok_or(GmpsError::SingularCollapse(min_abs_eig))?;
    Ok(&d - b.transpose() * a_inv * &b)
}

/// Assemble a translationally invariant GMPS ring of `n` sites.
///
/// Builds `Pi (sum_i Gamma) Pi^T` with the circulant collapse
/// `A'_i = A_i + theta B_{i-1}` and takes the Schur complement of the `A'`
/// block; the result is the `n * M_out`-mode covariance matrix of the state
/// (interleaved, site-major).
pub fn build_gmps_ring(channel: &GaussianChannel, n: usize) -> Result<DMatrix<f64>> {
    if channel.left != channel.right {
        return Err(GmpsError::DimensionMismatch(
            "ring sites need matching left/right port counts".into(),
        ));
    }
    if n < 2 {
        return Err(GmpsError::DimensionMismatch("ring needs at least 2 sites".into()));
    }
    let m = channel.right;
    let mo = channel.out;
    let site = 2 * (2 * m + mo);
    let big_dim = n * site;
    let mut big = DMatrix::zeros(big_dim, big_dim);
    for i in 0..n {
        big.view_mut((i * site, i * site), (site, site)).copy_from(&channel.cm);
    }
    // Pi: rows [A'_1..A'_n | C_1..C_n], columns site-major [A_i, B_i, C_i]
    let rows = n * 2 * (m + mo);
    let mut pi = DMatrix::zeros(rows, big_dim);
    let a_col = |i: usize, x: usize| i * site + x; // x < 2m
    let b_col = |i: usize, x: usize| i * site + 2 * m + x; // x < 2m
    let c_col = |i: usize, x: usize| i * site + 4 * m + x; // x < 2mo
    for i in 0..n {
        let prev = (i + n - 1) % n;
        for x in 0..2 * m {
            let row = i * 2 * m + x;
            pi[(row, a_col(i, x))] = 1.0;
            // theta flips the P component of each bond mode
            let sign = if x % 2 == 0 { 1.0 } else { -1.0 };
            pi[(row, b_col(prev, x))] = sign;
        }
        for x in 0..2 * mo {
            pi[(n * 2 * m + i * 2 * mo + x, c_col(i, x))] = 1.0;
        }
    }
    let collapsed = &pi * big * pi.transpose();
    schur_complement_head(&collapsed, n * 2 * m)
}

/// The Fourier symbol of an infinite translationally invariant GMPS:
/// `gamma(phi) = Gamma_C - Gamma_{C,AB} L^dag (L Gamma_AB L^dag)^{-1} L
/// Gamma_{AB,C}` with `L = [1_A | e^{i phi} theta_B]`.
pub fn gmps_fourier(channel: &GaussianChannel, phi: f64) -> Result<DMatrix<Complex64>> {
    if channel.left != channel.right {
        return Err(GmpsError::DimensionMismatch(
            "fourier form needs matching left/right port counts".into(),
        ));
    }
    let m = channel.right;
    let mo = channel.out;
    let nab = 4 * m;
    let nc = 2 * mo;
    let to_c = |m: &DMatrix<f64>| m.map(|x| Complex64::new(x, 0.0));
    let g_ab = to_c(&channel.cm.view((0, 0), (nab, nab)).into_owned());
    let g_abc = to_c(&channel.cm.view((0, nab), (nab, nc)).into_owned());
    let g_c = to_c(&channel.cm.view((nab, nab), (nc, nc)).into_owned());
    let mut lambda = DMatrix::<Complex64>::zeros(2 * m, nab);
    let e_iphi = Complex64::from_polar(1.0, phi);
    for x in 0..2 * m {
        lambda[(x, x)] = Complex64::new(1.0, 0.0);
        let sign = if x % 2 == 0 { 1.0 } else { -1.0 };
        lambda[(x, 2 * m + x)] = e_iphi * sign;
    }
    let lam_h = lambda.adjoint();
    let denom = &lambda * &g_ab * &lam_h;
    let det_scale = denom.norm();
    let inv = denom.try_inverse().ok_or(GmpsError::SingularAtPhi(det_scale))?;
    Ok(&g_c - g_abc.adjoint() * &lam_h * inv * &lambda * &g_abc)
}

/// Translationally invariant pure Gaussian state whose Fourier symbol is
/// rational in `cos(phi)` with common denominator:
///
/// ```text
/// gamma(phi) = [[q, r], [r, p]](cos phi) / d(cos phi)
/// ```
///
/// Coefficients ascending in `x = cos(phi)`; normalization `d(1) = 1`;
/// purity `p q - r^2 = d^2` as a polynomial identity.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrigRationalState {
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    pub r: Vec<f64>,
    pub d: Vec<f64>,
}

impl TrigRationalState {
    /// Validate and canonicalize: trims trailing zeros, fixes the sign and
    /// scale so `d(1) = 1`, and checks the purity identity.
    pub fn new(p: Vec<f64>, q: Vec<f64>, r: Vec<f64>, d: Vec<f64>) -> Result<Self> {
        let mut s = Self { p, q, r, d };
        s.trim();
        let d1: f64 = s.d.iter().sum();
        if d1.abs() < 1e-12 {
            return Err(GmpsError::CriticalDenominator(d1.abs()));
        }
        // (p, q, r, d) -> -(p, q, r, d) leaves the state invariant; the
        // scale is fixed by d(1) = 1 (rational elements are scale-free).
        for v in [&mut s.p, &mut s.q, &mut s.r, &mut s.d] {
            for c in v.iter_mut() {
                *c /= d1;
            }
        }
        let resid = s.purity_residual();
        if resid > 1e-7 {
            return Err(GmpsError::PurityViolation(resid));
        }
        Ok(s)
    }

    fn trim(&mut self) {
        let scale = [&self.p, &self.q, &self.r, &self.d]
            .iter()
            .flat_map(|v| v.iter())
            .fold(0.0f64, |a, &b| a.max(b.abs()));
        for v in [&mut self.p, &mut self.q, &mut self.r, &mut self.d] {
            while v.len() > 1 && v.last().unwrap().abs() <= 1e-9 * scale {
                v.pop();
            }
            if v.is_empty() {
                v.push(0.0);
            }
        }
    }

    /// Largest polynomial degree.
    pub fn degree(&self) -> usize {
        [&self.p, &self.q, &self.r, &self.d]
            .iter()
            .map(|v| v.len().saturating_sub(1))
            .max()
            .unwrap()
    }

    /// Coefficientwise residual of `p q - r^2 - d^2`.
    pub fn purity_residual(&self) -> f64 {
        let mut resid = poly_mul(&self.p, &self.q);
        poly_sub_assign(&mut resid, &poly_mul(&self.r, &self.r));
        poly_sub_assign(&mut resid, &poly_mul(&self.d, &self.d));
        resid.iter().fold(0.0f64, |a, &b| a.max(b.abs()))
    }

    /// Evaluate the 2x2 symbol at angle `phi`.
    pub fn eval(&self, phi: f64) -> DMatrix<f64> {
        let x = phi.cos();
        let ev = |c: &[f64]| poly_eval(c, x);
        let d = ev(&self.d);
        DMatrix::from_row_slice(
            2,
            2,
            &[ev(&self.q) / d, ev(&self.r) / d, ev(&self.r) / d, ev(&self.p) / d],
        )
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("state serialization")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let raw: TrigRationalState =
            serde_json::from_str(s).map_err(|e| GmpsError::Serialization(e.to_string()))?;
        Self::new(raw.p, raw.q, raw.r, raw.d)
    }
}

fn poly_eval(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &k| acc * x + k)
}

fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn poly_sub_assign(a: &mut Vec<f64>, b: &[f64]) {
    if a.len() < b.len() {
        a.resize(b.len(), 0.0);
    }
    for (x, y) in a.iter_mut().zip(b) {
        *x -= y;
    }
}

/// Fit a [`TrigRationalState`] of degree at most `max_degree` to samples of
/// a 2x2 symbol, by the null space of the linear sampling system
/// (`gamma_el * d - el = 0` at each node, smallest singular vector).
///
/// The degree is swept upward and the first value with a one-dimensional
/// null space wins: at larger degrees the null space also contains
/// common-polynomial-factor multiples of the minimal solution. If no degree
/// yields an exact null direction the best least-squares direction at
/// `max_degree` is still canonicalized, so non-representable symbols fail
/// the purity identity rather than silently returning garbage.
pub fn fit_rational_symbol(
    samples: &[(f64, [f64; 3])], // (phi, [gamma_QQ, gamma_PP, gamma_QP])
    max_degree: usize,
) -> Result<TrigRationalState> {
    let mut best: Option<(f64, DVector<f64>, usize)> = None;
    for l in 0..=max_degree {
        let (sv_min, sv_next, sv_max, null) = sampling_system_null(samples, l)?;
        if best.as_ref().map(|(b, _, _)| sv_min < *b).unwrap_or(true) {
            best = Some((sv_min, null.clone(), l));
        }
        if sv_min <= 1e-10 * sv_max.max(1e-300) {
            if sv_next <= 1e-8 * sv_max.max(1e-300) {
                return Err(GmpsError::RankDeficientSampling(sv_next / sv_max.max(1e-300)));
            }
            let take = |k: usize| null.as_slice()[k * (l + 1)..(k + 1) * (l + 1)].to_vec();
            return TrigRationalState::new(take(2), take(1), take(3), take(0));
        }
    }
    let (_, null, l) = best.expect("at least one degree tried");
    let take = |k: usize| null.as_slice()[k * (l + 1)..(k + 1) * (l + 1)].to_vec();
    TrigRationalState::new(take(2), take(1), take(3), take(0))
}

/// Smallest and second-smallest singular values, the largest one, and the
/// right singular vector of the smallest, for the sampling system at fixed
/// degree `l`.
fn sampling_system_null(
    samples: &[(f64, [f64; 3])],
    l: usize,
) -> Result<(f64, f64, f64, DVector<f64>)> {
    let cols = 4 * (l + 1);
    let rows = 3 * samples.len();
    if rows < cols {
        return Err(GmpsError::DimensionMismatch(format!(
            "need at least {} samples for degree {l}",
            cols.div_ceil(3)
        )));
    }
    // columns: [d | q | p | r]
    let mut a = DMatrix::<f64>::zeros(rows, cols);
    for (k, (phi, g)) in samples.iter().enumerate() {
        let x = phi.cos();
        let pow: Vec<f64> = (0..=l)
            .scan(1.0, |st, _| {
                let v = *st;
                *st *= x;
                Some(v)
            })
            .collect();
        let [gqq, gpp, gqp] = *g;
        for j in 0..=l {
            a[(3 * k, j)] = gqq * pow[j];
            a[(3 * k, l + 1 + j)] = -pow[j];
            a[(3 * k + 1, j)] = gpp * pow[j];
            a[(3 * k + 1, 2 * (l + 1) + j)] = -pow[j];
            a[(3 * k + 2, j)] = gqp * pow[j];
            a[(3 * k + 2, 3 * (l + 1) + j)] = -pow[j];
        }
    }
    let svd = a.svd(false, true);
    let sv = &svd.singular_values;
    let v_t = svd.v_t.as_ref().expect("svd v_t");
    let n_sv = sv.len();
    let null: DVector<f64> = v_t.row(n_sv - 1).transpose();
    let sv_next = if n_sv >= 2 { sv[n_sv - 2] } else { sv[n_sv - 1] };
    Ok((sv[n_sv - 1], sv_next, sv[0], null))
}

/// Convert a pure single-output GMPS channel to its trig-rational form,
/// sampling the Fourier symbol and solving for the coefficients. Degrees are
/// bounded by `2 M + 1` for `M` bonds.
pub fn gmps_to_rational(channel: &GaussianChannel) -> Result<TrigRationalState> {
    if channel.out != 1 {
        return Err(GmpsError::DimensionMismatch(
            "rational form requires a single output mode".into(),
        ));
    }
    let m = channel.bonds();
    let l = 2 * m + 1;
    let n_nodes = (4 * m + 4).max(4 * (l + 1)).max(16);
    let mut samples = Vec::with_capacity(n_nodes);
    for k in 0..n_nodes {
        let phi = std::f64::consts::PI * (k as f64 + 0.5) / n_nodes as f64;
        let g = gmps_fourier(channel, phi)?;
        let imag = g.iter().map(|c| c.im.abs()).fold(0.0, f64::max);
        if imag > 1e-8 {
            return Err(GmpsError::PurityViolation(imag));
        }
        samples.push((phi, [g[(0, 0)].re, g[(1, 1)].re, g[(0, 1)].re]));
    }
    fit_rational_symbol(&samples, l)
}

/// Which rational element to transform.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum RationalElement {
    /// `q/d = gamma_QQ`
    QQ,
    /// `p/d = gamma_PP`
    PP,
    /// `r/d = gamma_QP`
    QP,
}

/// Correlation `(gamma_el)_n` of a trig-rational state by residue calculus.
///
/// Substitutes `cos phi = (z + 1/z)/2`, clears the pole at the origin with
/// `z^K`, and sums the residues of `s(z) z^{n-1} / d(z)` over the zeros of
/// the denominator inside the unit circle (derivative formula for multiple
/// zeros, series division for a pole at the origin).
pub fn rational_correlations(
    state: &TrigRationalState,
    element: RationalElement,
    n: i64,
) -> Result<f64> {
    if n < 0 {
        return rational_correlations(state, element, -n);
    }
    let s_coeffs = match element {
        RationalElement::QQ => &state.q,
        RationalElement::PP => &state.p,
        RationalElement::QP => &state.r,
    };
    let k = state.d.len().max(s_coeffs.len()) - 1;
    let s_t = laurent_clear(s_coeffs, k);
    let d_t = laurent_clear(&state.d, k);
    let roots = denominator_roots(&d_t)?;

    let d_c: Vec<Complex64> = d_t.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    let s_c: Vec<Complex64> = s_t.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    let mut acc = Complex64::new(0.0, 0.0);
    for (z, mult) in roots.iter().filter(|(z, _)| z.norm() < 1.0 - 1e-9) {
        acc += residue_at_pole(&s_c, &d_c, *z, *mult, n);
    }
    acc += residue_at_origin(&s_c, &d_c, n);
    if acc.im.abs() > 1e-9 * (1.0 + acc.re.abs()) {
        return Err(GmpsError::PurityViolation(acc.im.abs()));
    }
    Ok(acc.re)
}

/// Correlation length of a trig-rational state: `-1/log|z|` for the largest
/// denominator zero inside the unit circle.
pub fn rational_correlation_length(state: &TrigRationalState) -> Result<f64> {
    let k = state.d.len() - 1;
    let d_t = laurent_clear(&state.d, k);
    let roots = denominator_roots(&d_t)?;
    let z_max = roots
        .iter()
        .filter(|(z, _)| z.norm() < 1.0 - 1e-9)
        .map(|(z, _)| z.norm())
        .fold(0.0f64, f64::max);
    if z_max == 0.0 {
        return Ok(0.0); // on-site state: no decay scale
    }
    Ok(-1.0 / z_max.ln())
}

fn denominator_roots(d_t: &[f64]) -> Result<Vec<(Complex64, usize)>> {
    // check d > 0 on [-1, 1] indirectly via roots near the unit circle
    let raw = poly_roots(d_t);
    let mut clusters: Vec<(Complex64, usize)> = Vec::new();
    for z in raw.into_iter().filter(|z| z.norm() > 1e-12) {
        let dist = (z.norm() - 1.0).abs();
        if dist <= 1e-9 {
            return Err(GmpsError::CriticalDenominator(dist));
        }
        if let Some((c, m)) = clusters
            .iter_mut()
            .find(|(c, m)| (*c / *m as f64 - z).norm() < 1e-5 * (1.0 + z.norm()))
        {
            *c += z;
            *m += 1;
        } else {
            clusters.push((z, 1));
        }
    }
    Ok(clusters.into_iter().map(|(c, m)| (c / m as f64, m)).collect())
}

/// `z^K s((z + 1/z)/2)` as a polynomial in `z` (degree `2K`).
fn laurent_clear(coeffs: &[f64], k: usize) -> Vec<f64> {
    // (z + 1/z)^j expands to binomials at z^{-j}..z^j; shift by K.
    let mut out = vec![0.0f64; 2 * k + 1];
    for (j, &c) in coeffs.iter().enumerate() {
        // c * (z + 1/z)^j / 2^j
        let scale = c / 2f64.powi(j as i32);
        let mut binom = 1.0f64;
        for t in 0..=j {
            // coefficient of z^{j - 2t}
            out[k + j - 2 * t] += scale * binom;
            binom *= (j - t) as f64 / (t + 1) as f64;
        }
    }
    out
}

/// Taylor coefficients of `p(z0 + w)` by repeated synthetic division.
fn taylor_shift(p: &[Complex64], z0: Complex64) -> Vec<Complex64> {
    let mut work = p.to_vec();
    let n = p.len();
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    for c in out.iter_mut() {
        // divide work by (z - z0): remainder is the next Taylor coefficient
        let mut rem = Complex64::new(0.0, 0.0);
        for k in (0..work.len()).rev() {
            let tmp = work[k];
            work[k] = rem;
            rem = tmp + rem * z0;
        }
        *c = rem;
        work.pop();
        if work.is_empty() {
            break;
        }
    }
    out
}

/// Residue of `s(z) z^{n-1} / d(z)` at an `m`-fold zero `z0` of `d`.
fn residue_at_pole(
    s: &[Complex64],
    d: &[Complex64],
    z0: Complex64,
    m: usize,
    n: i64,
) -> Complex64 {
    let dd = taylor_shift(d, z0);
    // d(z) = w^m u(w) with u(0) != 0
    let u: Vec<Complex64> = dd[m..].to_vec();
    let u = series_truncate(&u, m);
    let ss = series_truncate(&taylor_shift(s, z0), m);
    // (z0 + w)^{n-1} series
    let mut zp = vec![Complex64::new(0.0, 0.0); m];
    let mut term = z0.powi((n - 1) as i32);
    for (k, t) in zp.iter_mut().enumerate() {
        *t = term;
        let kk = k as f64;
        term = term * ((n - 1) as f64 - kk) / (kk + 1.0) / z0;
    }
    let num = series_mul(&ss, &zp, m);
    let inv_u = series_inverse(&u, m);
    let full = series_mul(&num, &inv_u, m);
    full[m - 1]
}

/// Residue at the origin: coefficient of `z^{t - n}` in `s(z)/u(z)` where
/// `d(z) = z^t u(z)`.
fn residue_at_origin(s: &[Complex64], d: &[Complex64], n: i64) -> Complex64 {
    let scale = d.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let t = d.iter().take_while(|c| c.norm() <= 1e-12 * scale).count();
    let needed = t as i64 - n;
    if needed < 0 {
        return Complex64::new(0.0, 0.0);
    }
    let order = needed as usize + 1;
    let u = series_truncate(&d[t..].to_vec(), order);
    let ss = series_truncate(s, order);
    let res = series_mul(&ss, &series_inverse(&u, order), order);
    res[needed as usize]
}

fn series_truncate(a: &[Complex64], m: usize) -> Vec<Complex64> {
    let mut out = a.to_vec();
    out.resize(m, Complex64::new(0.0, 0.0));
    out
}

fn series_mul(a: &[Complex64], b: &[Complex64], m: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); m];
    for i in 0..m.min(a.len()) {
        for j in 0..(m - i).min(b.len()) {
            out[i + j] += a[i] * b[j];
        }
    }
    out
}

fn series_inverse(u: &[Complex64], m: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); m];
    out[0] = 1.0 / u[0];
    for k in 1..m {
        let mut acc = Complex64::new(0.0, 0.0);
        for j in 1..=k.min(u.len() - 1) {
            acc += u[j] * out[k - j];
        }
        out[k] = -acc / u[0];
    }
    out
}

/// The local parent Hamiltonian of a trig-rational state: Fourier blocks
/// `H_Q = p`, `H_P = q`, `H_QP = -r` (as polynomials in `cos phi`), whose
/// spectral function is `d(cos phi)` and whose ground state is the state
/// itself. The interaction range is the polynomial degree.
pub fn parent_hamiltonian(state: &TrigRationalState) -> Result<CouplingStencil> {
    let resid = state.purity_residual();
    if resid > 1e-7 {
        return Err(GmpsError::PurityViolation(resid));
    }
    let to_entries = |poly: &[f64], sign: f64| -> Vec<(Vec<i64>, f64)> {
        let cheb = monomial_to_cosine(poly);
        let mut entries = Vec::new();
        for (j, &c) in cheb.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            if j == 0 {
                entries.push((vec![0i64], sign * c));
            } else {
                entries.push((vec![j as i64], sign * c / 2.0));
                entries.push((vec![-(j as i64)], sign * c / 2.0));
            }
        }
        if entries.is_empty() {
            entries.push((vec![0], 0.0));
        }
        entries
    };
    let q_block = BlockStencil::from_entries(1, to_entries(&state.p, 1.0))
        .map_err(|e| GmpsError::Serialization(e.to_string()))?;
    let p_block = BlockStencil::from_entries(1, to_entries(&state.q, 1.0))
        .map_err(|e| GmpsError::Serialization(e.to_string()))?;
    let qp_block = BlockStencil::from_entries(1, to_entries(&state.r, -1.0))
        .map_err(|e| GmpsError::Serialization(e.to_string()))?;
    CouplingStencil::new(1, q_block, p_block, qp_block)
        .map_err(|e| GmpsError::Serialization(e.to_string()))
}

/// Exact monomial-to-cosine-series conversion: returns `a_j` with
/// `sum_k c_k x^k = sum_j a_j cos(j phi)` for `x = cos(phi)`, using
/// `cos^k = 2^{1-k} sum' C(k, (k-j)/2) cos(j phi)` (primed sum halves j=0).
fn monomial_to_cosine(coeffs: &[f64]) -> Vec<f64> {
    let deg = coeffs.len() - 1;
    let mut out = vec![0.0f64; deg + 1];
    for (k, &c) in coeffs.iter().enumerate() {
        if c == 0.0 {
            continue;
        }
        // binomials C(k, t)
        let mut binom = 1.0f64;
        for t in 0..=k {
            let j = k as i64 - 2 * t as i64;
            if j >= 0 {
                let w = if j == 0 { 0.5 } else { 1.0 };
                out[j as usize] += c * 2f64.powi(1 - k as i32) * binom * w;
            }
            binom *= (k - t) as f64 / (t + 1) as f64;
        }
    }
    out
}

/// Convert an interleaved GMPS covariance matrix to the crate-standard
/// blocked [`CovarianceMatrix`].
pub fn to_blocked_cm(gamma_interleaved: &DMatrix<f64>) -> Result<CovarianceMatrix> {
    CovarianceMatrix::new(interleaved_to_blocked(gamma_interleaved))
        .map_err(|e| GmpsError::Serialization(e.to_string()))
}
