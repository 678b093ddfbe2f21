//! Symplectic linear algebra for bosonic phase space.
//!
//! A system of `N` modes is described by canonical operators collected in the
//! blocked order `(Q_1, .., Q_N, P_1, .., P_N)`; the commutation relations are
//! encoded by the antisymmetric form `sigma` with `sigma^2 = -1`. A quadratic
//! Hamiltonian is a real symmetric PSD matrix `H` on phase space, and its
//! normal-mode decomposition is a symplectic congruence
//!
//! ```text
//! S H S^T = diag(e_1, .., e_I, 0, .., 0) (+) diag(e_1, .., e_I, 1, .., 1)
//! ```
//!
//! with `I` oscillator modes of symplectic eigenvalue `e_i > 0` and `J`
//! zero modes (free-particle directions). Ground-state covariance matrices,
//! energies and gaps all follow from this decomposition; for zero modes the
//! ground state is an infinite-squeezing limit which we represent by explicit
//! divergence directions instead of large sentinel entries.
//!
//! Everything in this module is a pure function of dense `nalgebra` matrices;
//! the canonical ordering is blocked throughout, with the interleaved order
//! `(Q_1, P_1, ..)` available via explicit permutations at the boundary.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::linalg::{hermitian_min_eig, max_abs, max_abs_diff, symmetric_eigen_sorted};

#[derive(Debug, Error)]
pub enum SymplecticError {
    /// The Hamiltonian matrix has an eigenvalue below the PSD tolerance.
    #[error("hamiltonian matrix is not positive semidefinite (min eigenvalue {0:.3e})")]
    NotPositiveSemidefinite(f64),

    /// The doubled spectrum of `sigma H sigma^T H` could not be paired.
    #[error("spectrum of sigma H sigma^T H does not pair within tolerance (defect {0:.3e})")]
    PairingFailure(f64),

    /// The kernel of `H` contains a full canonical pair, i.e. a normal mode
    /// on which the Hamiltonian does not act at all. Such modes have no
    /// unique ground state and are rejected.
    #[error("hamiltonian contains irrelevant normal modes (kernel is not isotropic)")]
    IrrelevantNormalModes,

    /// The blocks passed to the simultaneous-diagonalization route do not
    /// commute (or the QP block is not symmetric).
    #[error("blocks are not simultaneously diagonalizable (residual {0:.3e})")]
    NotSimultaneouslyDiagonalizable(f64),

    /// The spectral matrix `sqrt(H_Q H_P - H_QP^2)` is singular and the
    /// critical limit cannot be represented for these blocks.
    #[error("spectral matrix is singular (min eigenvalue {0:.3e})")]
    SingularSpectralMatrix(f64),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not symmetric (residual {0:.3e})")]
    NotSymmetric(f64),
}

impl SymplecticError {
    /// Stable machine-readable name of the error variant.
    pub fn name(&self) -> &'static str {
        match self {
            Self::NotPositiveSemidefinite(_) => "NotPositiveSemidefinite",
            Self::PairingFailure(_) => "PairingFailure",
            Self::IrrelevantNormalModes => "IrrelevantNormalModes",
            Self::NotSimultaneouslyDiagonalizable(_) => "NotSimultaneouslyDiagonalizable",
            Self::SingularSpectralMatrix(_) => "SingularSpectralMatrix",
            Self::DimensionMismatch(_) => "DimensionMismatch",
            Self::NotSymmetric(_) => "NotSymmetric",
        }
    }
}

pub type Result<T> = std::result::Result<T, SymplecticError>;

/// Numerical tolerances used throughout the module. All defaults can be
/// overridden field-by-field.
#[derive(Clone, Debug)]
pub struct Tolerances {
    /// Lower bound on the smallest eigenvalue of an admissible `H`.
    pub psd: f64,
    /// Relative pairing tolerance for the doubled symplectic spectrum.
    pub pairing: f64,
    /// Relative threshold below which a symplectic eigenvalue counts as a
    /// zero mode.
    pub zero_mode: f64,
    /// Regularization added to `H` when it is PSD but not positive definite.
    pub regularization: f64,
    /// Bound on pairwise block commutators for the simultaneous route.
    pub simultaneous: f64,
    /// Absolute singularity threshold on the spectral matrix.
    pub singular: f64,
    /// Validity threshold on the minimum eigenvalue of `gamma + i sigma`.
    pub validity: f64,
    /// Purity threshold on `max_abs((gamma sigma)^2 + 1)`.
    pub purity: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            psd: 1e-10,
            pairing: 1e-8,
            // sqrt of the eigenvalue roundoff in sigma H sigma^T H: exact
            // zero modes surface numerically as eps ~ 1e-8 * eps_max.
            zero_mode: 1e-7,
            regularization: 1e-12,
            simultaneous: 1e-9,
            singular: 1e-12,
            validity: 1e-9,
            purity: 1e-8,
        }
    }
}

/// Canonical operator orderings on phase space.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum CanonicalOrdering {
    /// `(Q_1, .., Q_N, P_1, .., P_N)` — the ordering used by every routine
    /// in this crate.
    Blocked,
    /// `(Q_1, P_1, .., Q_N, P_N)`.
    Interleaved,
}

/// The symplectic form for `N` modes in a given ordering. The matrix itself
/// is derived on demand.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct SymplecticForm {
    modes: usize,
    ordering: CanonicalOrdering,
}

impl SymplecticForm {
    pub fn blocked(modes: usize) -> Self {
        Self { modes, ordering: CanonicalOrdering::Blocked }
    }

    pub fn interleaved(modes: usize) -> Self {
        Self { modes, ordering: CanonicalOrdering::Interleaved }
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn ordering(&self) -> CanonicalOrdering {
        self.ordering
    }

    /// The matrix of the form, `sigma^T = -sigma`, `sigma^2 = -1`.
    pub fn matrix(&self) -> DMatrix<f64> {
        let n = self.modes;
        let mut s = DMatrix::zeros(2 * n, 2 * n);
        match self.ordering {
            CanonicalOrdering::Blocked => {
                for i in 0..n {
                    s[(i, n + i)] = 1.0;
                    s[(n + i, i)] = -1.0;
                }
            }
            CanonicalOrdering::Interleaved => {
                for i in 0..n {
                    s[(2 * i, 2 * i + 1)] = 1.0;
                    s[(2 * i + 1, 2 * i)] = -1.0;
                }
            }
        }
        s
    }
}

/// Index permutation taking blocked coordinates to interleaved ones:
/// `interleaved[perm[k]] = blocked[k]`.
fn blocked_to_interleaved_perm(modes: usize) -> Vec<usize> {
    let mut p = vec![0; 2 * modes];
    for i in 0..modes {
        p[i] = 2 * i;
        p[modes + i] = 2 * i + 1;
    }
    p
}

/// Re-express a blocked-ordered phase-space matrix in interleaved ordering.
pub fn blocked_to_interleaved(m: &DMatrix<f64>) -> DMatrix<f64> {
    let modes = m.nrows() / 2;
    let p = blocked_to_interleaved_perm(modes);
    let mut out = DMatrix::zeros(m.nrows(), m.ncols());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out[(p[i], p[j])] = m[(i, j)];
        }
    }
    out
}

/// Inverse of [`blocked_to_interleaved`].
pub fn interleaved_to_blocked(m: &DMatrix<f64>) -> DMatrix<f64> {
    let modes = m.nrows() / 2;
    let p = blocked_to_interleaved_perm(modes);
    let mut out = DMatrix::zeros(m.nrows(), m.ncols());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out[(i, j)] = m[(p[i], p[j])];
        }
    }
    out
}

/// A quadratic Hamiltonian `H = [[H_Q, H_QP], [H_QP^T, H_P]]` in blocked
/// ordering. `H_Q` and `H_P` are symmetric; positivity is checked on demand.
#[derive(Clone, Debug)]
pub struct QuadraticHamiltonian {
    h_q: DMatrix<f64>,
    h_p: DMatrix<f64>,
    h_qp: DMatrix<f64>,
}

impl QuadraticHamiltonian {
    pub fn new(h_q: DMatrix<f64>, h_p: DMatrix<f64>, h_qp: DMatrix<f64>) -> Result<Self> {
        let n = h_q.nrows();
        for (name, m) in [("H_Q", &h_q), ("H_P", &h_p), ("H_QP", &h_qp)] {
            if m.nrows() != n || m.ncols() != n {
                return Err(SymplecticError::DimensionMismatch(format!(
                    "{name} must be {n}x{n}, got {}x{}",
                    m.nrows(),
                    m.ncols()
                )));
            }
        }
        for m in [&h_q, &h_p] {
            let asym = max_abs_diff(m, &m.transpose());
            if asym > 1e-10 * (1.0 + max_abs(m)) {
                return Err(SymplecticError::NotSymmetric(asym));
            }
        }
        Ok(Self { h_q, h_p, h_qp })
    }

    pub fn modes(&self) -> usize {
        self.h_q.nrows()
    }

    pub fn h_q(&self) -> &DMatrix<f64> {
        &self.h_q
    }

    pub fn h_p(&self) -> &DMatrix<f64> {
        &self.h_p
    }

    pub fn h_qp(&self) -> &DMatrix<f64> {
        &self.h_qp
    }

    /// Assemble the full `2N x 2N` Hamiltonian matrix in blocked ordering.
    pub fn assemble(&self) -> DMatrix<f64> {
        let n = self.modes();
        let mut h = DMatrix::zeros(2 * n, 2 * n);
        h.view_mut((0, 0), (n, n)).copy_from(&self.h_q);
        h.view_mut((0, n), (n, n)).copy_from(&self.h_qp);
        h.view_mut((n, 0), (n, n)).copy_from(&self.h_qp.transpose());
        h.view_mut((n, n), (n, n)).copy_from(&self.h_p);
        h
    }

    /// Split an assembled `2N x 2N` matrix back into blocks.
    pub fn from_assembled(h: &DMatrix<f64>) -> Result<Self> {
        if h.nrows() != h.ncols() || h.nrows() % 2 != 0 {
            return Err(SymplecticError::DimensionMismatch(format!(
                "assembled matrix must be square with even dimension, got {}x{}",
                h.nrows(),
                h.ncols()
            )));
        }
        let n = h.nrows() / 2;
        Self::new(
            h.view((0, 0), (n, n)).into_owned(),
            h.view((n, n), (n, n)).into_owned(),
            h.view((0, n), (n, n)).into_owned(),
        )
    }

    /// `true` when the Hamiltonian only contains `a^dag a` terms, i.e.
    /// `H_Q = H_P` and `H_QP` antisymmetric.
    pub fn is_number_preserving(&self, tol: f64) -> bool {
        max_abs_diff(&self.h_q, &self.h_p) <= tol
            && max_abs(&(&self.h_qp + self.h_qp.transpose())) <= tol
    }

    /// `true` when `H_QP` is symmetric (point/reflection symmetry).
    pub fn is_point_symmetric(&self, tol: f64) -> bool {
        max_abs_diff(&self.h_qp, &self.h_qp.transpose()) <= tol
    }

    fn check_psd(&self, tols: &Tolerances) -> Result<DMatrix<f64>> {
        let h = self.assemble();
        let min = crate::linalg::min_eig_symmetric(&h);
        if min < -tols.psd {
            return Err(SymplecticError::NotPositiveSemidefinite(min));
        }
        Ok(h)
    }
}

/// A covariance matrix in blocked ordering, dimensionless with the vacuum
/// normalized to the identity. Critical (zero-mode) ground states carry
/// explicit divergence directions: the true matrix is the limit
/// `mat + s * sum_j v_j v_j^T` as `s -> infinity`.
#[derive(Clone, Debug)]
pub struct CovarianceMatrix {
    mat: DMatrix<f64>,
    divergent: Vec<DVector<f64>>,
}

/// Diagnostics from [`validate_cm`].
#[derive(Clone, Copy, Debug)]
pub struct CmDiagnostics {
    /// Minimum eigenvalue of `gamma + i sigma`; validity requires it to be
    /// nonnegative up to tolerance.
    pub heisenberg_min_eig: f64,
    /// `max_abs((gamma sigma)^2 + 1)`; zero for pure states.
    pub purity_residual: f64,
    pub valid: bool,
    pub pure: bool,
}

impl CovarianceMatrix {
    pub fn new(mat: DMatrix<f64>) -> Result<Self> {
        if mat.nrows() != mat.ncols() || mat.nrows() % 2 != 0 {
            return Err(SymplecticError::DimensionMismatch(format!(
                "covariance matrix must be square with even dimension, got {}x{}",
                mat.nrows(),
                mat.ncols()
            )));
        }
        let asym = max_abs_diff(&mat, &mat.transpose());
        if asym > 1e-9 * (1.0 + max_abs(&mat)) {
            return Err(SymplecticError::NotSymmetric(asym));
        }
        Ok(Self { mat, divergent: Vec::new() })
    }

    pub fn with_divergent(mat: DMatrix<f64>, divergent: Vec<DVector<f64>>) -> Result<Self> {
        let mut cm = Self::new(mat)?;
        cm.divergent = divergent;
        Ok(cm)
    }

    pub fn modes(&self) -> usize {
        self.mat.nrows() / 2
    }

    /// The finite part of the covariance matrix.
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.mat
    }

    /// Directions along which the state is infinitely squeezed.
    pub fn divergent_directions(&self) -> &[DVector<f64>] {
        &self.divergent
    }

    pub fn is_critical(&self) -> bool {
        !self.divergent.is_empty()
    }

    /// Validity and purity diagnostics; only meaningful for non-critical
    /// states (the divergent limit is valid by construction).
    pub fn validate(&self, tols: &Tolerances) -> CmDiagnostics {
        validate_cm(&self.mat, tols)
    }
}

/// Check `gamma >= i sigma` (Heisenberg uncertainty) and the purity relation
/// `(gamma sigma)^2 = -1` for a symmetric matrix in blocked ordering.
pub fn validate_cm(gamma: &DMatrix<f64>, tols: &Tolerances) -> CmDiagnostics {
    let modes = gamma.nrows() / 2;
    let sigma = SymplecticForm::blocked(modes).matrix();
    // gamma + i sigma is Hermitian; its minimum eigenvalue via real embedding.
    let min_eig = hermitian_min_eig(gamma, &sigma);
    let gs = gamma * &sigma;
    let purity = max_abs(&(&gs * &gs + DMatrix::<f64>::identity(2 * modes, 2 * modes)));
    CmDiagnostics {
        heisenberg_min_eig: min_eig,
        purity_residual: purity,
        valid: min_eig >= -tols.validity,
        pure: purity <= tols.purity,
    }
}

/// Result of the normal-mode (Williamson) decomposition: a symplectic `S`
/// with `S H S^T` in normal form.
#[derive(Clone, Debug)]
pub struct WilliamsonResult {
    /// The symplectic congruence transform, `S sigma S^T = sigma`.
    pub transform: DMatrix<f64>,
    /// Symplectic eigenvalues `e_i > 0`, ascending, one per oscillator mode.
    pub symplectic_eigenvalues: Vec<f64>,
    /// Number of zero modes `J`.
    pub zero_modes: usize,
}

impl WilliamsonResult {
    /// The blocked normal form `diag(e, 0_J) (+) diag(e, 1_J)`.
    pub fn normal_form(&self) -> DMatrix<f64> {
        let i = self.symplectic_eigenvalues.len();
        let n = i + self.zero_modes;
        let mut d = DMatrix::zeros(2 * n, 2 * n);
        for (k, &e) in self.symplectic_eigenvalues.iter().enumerate() {
            d[(k, k)] = e;
            d[(n + k, n + k)] = e;
        }
        for j in 0..self.zero_modes {
            d[(n + i + j, n + i + j)] = 1.0;
        }
        d
    }
}

/// Reject Hamiltonians whose kernel contains a full canonical pair. The
/// kernel of an admissible PSD Hamiltonian must be isotropic: the symplectic
/// form restricted to it vanishes.
fn check_no_irrelevant_modes(h: &DMatrix<f64>, scale: f64) -> Result<()> {
    let n2 = h.nrows();
    let (vals, vecs) = symmetric_eigen_sorted(h);
    let tol = 1e-10 * scale.max(1.0);
    let kernel: Vec<usize> = (0..n2).filter(|&k| vals[k].abs() <= tol).collect();
    if kernel.len() < 2 {
        return Ok(());
    }
    let sigma = SymplecticForm::blocked(n2 / 2).matrix();
    for (a, &ka) in kernel.iter().enumerate() {
        for &kb in kernel.iter().skip(a + 1) {
            let overlap = (vecs.column(ka).transpose() * &sigma * vecs.column(kb))[(0, 0)];
            if overlap.abs() > 1e-8 {
                return Err(SymplecticError::IrrelevantNormalModes);
            }
        }
    }
    Ok(())
}

/// Symplectic eigenvalues of a PSD quadratic Hamiltonian.
///
/// The doubled spectrum of `sigma H sigma^T H` is computed through the
/// similar symmetric matrix `M M^T` with `M = H^{1/2} sigma H^{1/2}`,
/// deduplicated by pairing, and split into `J` zero modes and the positive
/// eigenvalues (returned ascending).
pub fn symplectic_eigenvalues(
    h: &QuadraticHamiltonian,
    tols: &Tolerances,
) -> Result<(Vec<f64>, usize)> {
    let hm = h.check_psd(tols)?;
    let scale = max_abs(&hm);
    check_no_irrelevant_modes(&hm, scale)?;
    let sqrt_h = crate::linalg::sqrt_psd(&hm);
    let sigma = SymplecticForm::blocked(h.modes()).matrix();
    let m = &sqrt_h * &sigma * &sqrt_h;
    let w = &m * m.transpose();
    let (vals, _) = symmetric_eigen_sorted(&w);
    let mut eps: Vec<f64> = vals.iter().map(|&v| v.max(0.0).sqrt()).collect();
    eps.sort_by(|a, b| b.total_cmp(a));
    let eps_max = eps.first().copied().unwrap_or(0.0);
    let mut unique = Vec::with_capacity(h.modes());
    let mut worst = 0.0f64;
    for pair in eps.chunks(2) {
        let defect = (pair[0] - pair[1]).abs();
        worst = worst.max(defect);
        if defect > tols.pairing * eps_max.max(1.0) {
            return Err(SymplecticError::PairingFailure(worst));
        }
        unique.push(0.5 * (pair[0] + pair[1]));
    }
    let zero_tol = tols.zero_mode * eps_max.max(f64::MIN_POSITIVE);
    let zero_modes = unique.iter().filter(|&&e| e <= zero_tol).count();
    unique.truncate(unique.len() - zero_modes);
    unique.reverse();
    Ok((unique, zero_modes))
}

/// Orthogonal pairing decomposition of a real antisymmetric matrix `A`:
/// returns columns `(u_k, v_k)` with `A u_k = -mu_k v_k`, `A v_k = mu_k u_k`
/// and `mu_k > 0`, ordered by descending `mu`.
///
/// Computed from the Hermitian matrix `iA` through its real embedding, which
/// keeps the construction orthogonal even for (near-)degenerate `mu`.
fn antisymmetric_pairs(a: &DMatrix<f64>) -> Result<Vec<(DVector<f64>, DVector<f64>, f64)>> {
    let n2 = a.nrows();
    let n = n2 / 2;
    let mut emb = DMatrix::zeros(2 * n2, 2 * n2);
    emb.view_mut((0, n2), (n2, n2)).copy_from(&(-a));
    emb.view_mut((n2, 0), (n2, n2)).copy_from(a);
    // emb = [[0, -A], [A, 0]] is symmetric; eigenvector (x; y) with
    // eigenvalue mu > 0 satisfies A x = mu y, A y = -mu x.
    let (vals, vecs) = symmetric_eigen_sorted(&emb);
    let mut pairs: Vec<(DVector<f64>, DVector<f64>, f64)> = Vec::with_capacity(n);
    // Descending positive eigenvalues; each pair appears twice (z and iz).
    for k in (0..2 * n2).rev() {
        if pairs.len() == n {
            break;
        }
        let mu = vals[k];
        if mu <= 0.0 {
            break;
        }
        let x = vecs.column(k).rows(0, n2).into_owned();
        // Remove overlap with already accepted pairs; duplicates project to
        // zero, fresh directions survive.
        let mut u = x;
        for (pu, pv, _) in &pairs {
            let cu = pu.dot(&u);
            let cv = pv.dot(&u);
            u -= pu * cu + pv * cv;
        }
        let norm = u.norm();
        if norm < 1e-6 {
            continue;
        }
        u /= norm;
        let av = a * &u;
        let mu_exact = av.norm();
        if mu_exact <= 0.0 {
            return Err(SymplecticError::PairingFailure(mu));
        }
        let v = -av / mu_exact;
        pairs.push((u, v, mu_exact));
    }
    if pairs.len() != n {
        return Err(SymplecticError::PairingFailure(f64::NAN));
    }
    Ok(pairs)
}

/// Williamson pairing on a positive definite form `h` with an arbitrary
/// antisymmetric orthogonal-similar form `sigma`: returns rows of the
/// congruence `S h S^T = diag(e) (+) diag(e)` with `S sigma S^T` canonical.
fn definite_normal_form(
    h: &DMatrix<f64>,
    sigma: &DMatrix<f64>,
    floor: f64,
) -> Result<(DMatrix<f64>, Vec<f64>)> {
    let n2 = h.nrows();
    let n = n2 / 2;
    let k_inv = symmetric_matrix_function_floor(h, floor);
    let m_tilde = &k_inv * sigma * &k_inv;
    let mut pairs = antisymmetric_pairs(&m_tilde)?;
    pairs.sort_by(|a, b| b.2.total_cmp(&a.2)); // descending mu = ascending e
    let mut o = DMatrix::zeros(n2, n2);
    let mut eps = Vec::with_capacity(n);
    for (k, (u, v, mu)) in pairs.iter().enumerate() {
        o.set_column(k, u);
        o.set_column(n + k, v);
        eps.push(1.0 / mu);
    }
    let sqrt_e = DMatrix::from_diagonal(&DVector::from_iterator(
        n2,
        eps.iter().chain(eps.iter()).map(|&e| e.sqrt()),
    ));
    Ok((sqrt_e * o.transpose() * k_inv, eps))
}

/// `h^{-1/2}` with eigenvalues floored away from zero.
fn symmetric_matrix_function_floor(h: &DMatrix<f64>, floor: f64) -> DMatrix<f64> {
    crate::linalg::symmetric_matrix_function(h, |x| 1.0 / x.max(floor).sqrt())
}

/// Normal-mode decomposition of a PSD quadratic Hamiltonian.
///
/// Positive definite Hamiltonians go through the antisymmetric pairing of
/// `H^{-1/2} sigma H^{-1/2}` directly. Zero modes (detected from the
/// spectrum of `sigma H sigma^T H`) are split off exactly first: the kernel
/// directions become the zero-mode Q coordinates, their symplectic
/// conjugates are completed to P coordinates that are H-orthogonal to the
/// oscillator sector, and the pairing runs on the remaining symplectic
/// complement where `H` is definite. The returned transform then satisfies
/// `S sigma S^T = sigma` and `S H S^T = normal_form()` to working precision
/// in all blocks, including the free-particle `[[0, 0], [0, 1]]` ones.
pub fn williamson(h: &QuadraticHamiltonian, tols: &Tolerances) -> Result<WilliamsonResult> {
    let (_, zero_modes) = symplectic_eigenvalues(h, tols)?;
    let hm = h.assemble();
    let n = h.modes();
    let scale = max_abs(&hm).max(1.0);
    let sigma = SymplecticForm::blocked(n).matrix();
    let floor = 1e-14 * scale;

    if zero_modes == 0 {
        let (s, eps) = definite_normal_form(&hm, &sigma, floor)?;
        return Ok(WilliamsonResult { transform: s, symplectic_eigenvalues: eps, zero_modes });
    }

    // Kernel basis A (orthonormal); conjugate directions C = sigma^T A.
    let (vals, vecs) = symmetric_eigen_sorted(&hm);
    let j = zero_modes;
    let kernel_dim = vals.iter().filter(|&&v| v.abs() <= 1e-9 * scale).count();
    if kernel_dim != j {
        return Err(SymplecticError::PairingFailure(kernel_dim as f64 - j as f64));
    }
    let a = vecs.columns(0, j).into_owned();
    let c = sigma.transpose() * &a;

    // Orthonormal basis W of the symplectic complement = the orthogonal
    // complement of span{A, C} (A, C are jointly orthonormal).
    let mut proj = DMatrix::<f64>::identity(2 * n, 2 * n);
    proj -= &a * a.transpose();
    proj -= &c * c.transpose();
    let (pvals, pvecs) = symmetric_eigen_sorted(&proj);
    let dim_w = 2 * (n - j);
    let mut w = DMatrix::zeros(2 * n, dim_w);
    let mut col = 0;
    for k in (0..2 * n).rev() {
        if pvals[k] > 0.5 && col < dim_w {
            w.set_column(col, &pvecs.column(k));
            col += 1;
        }
    }
    if col != dim_w {
        return Err(SymplecticError::PairingFailure(col as f64 - dim_w as f64));
    }

    let h_w = w.transpose() * &hm * &w;
    let sigma_w = w.transpose() * &sigma * &w;
    let (s_w, eps) = definite_normal_form(&h_w, &sigma_w, floor)?;
    let s_osc = s_w * w.transpose(); // 2(n-j) x 2n, oscillator rows

    // Zero-mode P rows: conjugates made H-orthogonal to the oscillator
    // sector, with residual symplectic self-pairing cancelled along the
    // kernel and normalized so the P block of the normal form is exactly 1.
    let h_w_inv = h_w
        .clone()
        .try_inverse()
        .ok_or(SymplecticError::SingularSpectralMatrix(0.0))?;
    let z = -&h_w_inv * w.transpose() * &hm * &c; // dim_w x j
    let p_prime = &c + &w * &z;
    let omega = z.transpose() * &sigma_w * &z;
    let y = omega * (-0.5);
    let p_second = &p_prime + &a * y;
    let gram = p_second.transpose() * &hm * &p_second;
    let chol = gram
        .clone()
        .cholesky()
        .ok_or(SymplecticError::SingularSpectralMatrix(min_eig_of(&gram)))?;
    let l = chol.l();
    let p_rows = &p_second * l.transpose().try_inverse().unwrap(); // columns = rows of S
    let q_rows = &a * &l;

    let i = n - j;
    let mut s = DMatrix::zeros(2 * n, 2 * n);
    for k in 0..i {
        s.row_mut(k).copy_from(&s_osc.row(k));
        s.row_mut(n + k).copy_from(&s_osc.row(i + k));
    }
    for k in 0..j {
        s.row_mut(i + k).copy_from(&q_rows.column(k).transpose());
        s.row_mut(n + i + k).copy_from(&p_rows.column(k).transpose());
    }
    Ok(WilliamsonResult { transform: s, symplectic_eigenvalues: eps, zero_modes })
}

fn min_eig_of(m: &DMatrix<f64>) -> f64 {
    crate::linalg::min_eig_symmetric(m)
}

/// Ground state of a PSD quadratic Hamiltonian: covariance matrix, the
/// ground-state energy `E0 = sum(e_i)/2`, and the gap `min(e_i)` (zero for
/// critical systems).
///
/// Non-critical: `gamma = S^T S`. With `J > 0` zero modes the `s -> inf`
/// squeezing limit is returned as a finite part plus `J` divergence
/// directions on the affected Q coordinates.
pub fn ground_state(
    h: &QuadraticHamiltonian,
    tols: &Tolerances,
) -> Result<(CovarianceMatrix, f64, f64)> {
    let w = williamson(h, tols)?;
    let n = h.modes();
    let i = w.symplectic_eigenvalues.len();
    let e0 = 0.5 * w.symplectic_eigenvalues.iter().sum::<f64>();
    let gap = if w.zero_modes == 0 {
        w.symplectic_eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
    } else {
        0.0
    };
    let s = &w.transform;
    if w.zero_modes == 0 {
        let gamma = s.transpose() * s;
        return Ok((CovarianceMatrix::new(gamma)?, e0, gap));
    }
    // Finite part: drop both canonical directions of every zero mode (the
    // 1/s entry vanishes in the limit); record Q divergence directions.
    let mut keep = DMatrix::<f64>::zeros(2 * n, 2 * n);
    for k in 0..i {
        keep[(k, k)] = 1.0;
        keep[(n + k, n + k)] = 1.0;
    }
    let finite = s.transpose() * keep * s;
    let divergent: Vec<DVector<f64>> =
        (i..n).map(|j| s.row(j).transpose().into_owned()).collect();
    Ok((CovarianceMatrix::with_divergent(finite, divergent)?, e0, gap))
}

/// Ground state through the simultaneous-diagonalization closed form.
///
/// Requires `H_QP` symmetric and all three blocks pairwise commuting. With
/// `E = sqrt(H_Q H_P - H_QP^2)` the ground state is
/// `gamma = (E (+) E)^{-1} sigma H sigma^T`, `E0 = tr(E)/2`, and the gap is
/// the smallest eigenvalue of `E`. For singular `E` with `H_QP = 0` the
/// critical limit is returned with Q (or P) divergence flags; otherwise the
/// computation fails with [`SymplecticError::SingularSpectralMatrix`].
pub fn ground_state_simultaneous(
    h: &QuadraticHamiltonian,
    tols: &Tolerances,
) -> Result<(CovarianceMatrix, f64, f64)> {
    let n = h.modes();
    let qp_asym = max_abs_diff(h.h_qp(), &h.h_qp().transpose());
    if qp_asym > tols.simultaneous {
        return Err(SymplecticError::NotSimultaneouslyDiagonalizable(qp_asym));
    }
    let comm = |a: &DMatrix<f64>, b: &DMatrix<f64>| max_abs(&(a * b - b * a));
    let resid = comm(h.h_q(), h.h_p())
        .max(comm(h.h_q(), h.h_qp()))
        .max(comm(h.h_p(), h.h_qp()));
    let scale = max_abs(h.h_q()).max(max_abs(h.h_p())).max(max_abs(h.h_qp())).max(1.0);
    if resid > tols.simultaneous * scale {
        return Err(SymplecticError::NotSimultaneouslyDiagonalizable(resid));
    }
    h.check_psd(tols)?;

    // Joint eigenbasis from a generic fixed combination of the blocks;
    // degenerate subspaces shared by all blocks are harmless because the
    // blocks restrict to multiples of the identity there.
    let combos: [(f64, f64, f64); 2] =
        [(1.0, 0.739_085_133_215_160_7, 0.567_143_290_409_783_8), (0.31, 1.0, 0.77)];
    let mut basis = None;
    'combo: for (cq, cp, cm) in combos {
        let t = h.h_q() * cq + h.h_p() * cp + h.h_qp() * cm;
        let (_, vecs) = symmetric_eigen_sorted(&t);
        for block in [h.h_q(), h.h_p(), h.h_qp()] {
            let d = vecs.transpose() * block * &vecs;
            let off = (0..n)
                .flat_map(|a| (0..n).filter(move |&b| b != a).map(move |b| (a, b)))
                .fold(0.0f64, |acc, (a, b)| acc.max(d[(a, b)].abs()));
            if off > 1e-8 * scale {
                continue 'combo;
            }
        }
        basis = Some(vecs);
        break;
    }
    let vecs =
        basis.ok_or(SymplecticError::NotSimultaneouslyDiagonalizable(f64::NAN))?;

    let diag_of = |m: &DMatrix<f64>| -> Vec<f64> {
        let d = vecs.transpose() * m * &vecs;
        (0..n).map(|k| d[(k, k)]).collect()
    };
    let q = diag_of(h.h_q());
    let p = diag_of(h.h_p());
    let m = diag_of(h.h_qp());

    let mut e = Vec::with_capacity(n);
    for k in 0..n {
        let e2 = q[k] * p[k] - m[k] * m[k];
        if e2 < -tols.psd * scale * scale {
            return Err(SymplecticError::NotPositiveSemidefinite(e2));
        }
        e.push(e2.max(0.0).sqrt());
    }
    let e_min = e.iter().copied().fold(f64::INFINITY, f64::min);
    let e0 = 0.5 * e.iter().sum::<f64>();

    let qp_zero = max_abs(h.h_qp()) <= tols.simultaneous;
    let singular = e_min < tols.singular;
    if singular && !qp_zero {
        return Err(SymplecticError::SingularSpectralMatrix(e_min));
    }

    // Blockwise gamma_Q = H_P/E, gamma_P = H_Q/E, gamma_QP = -H_QP/E in the
    // joint basis; divergent directions flagged instead of evaluated.
    let mut gq = vec![0.0; n];
    let mut gp = vec![0.0; n];
    let mut gm = vec![0.0; n];
    let mut divergent = Vec::new();
    for k in 0..n {
        if e[k] >= tols.singular {
            gq[k] = p[k] / e[k];
            gp[k] = q[k] / e[k];
            gm[k] = -m[k] / e[k];
        } else if p[k] > tols.singular {
            // Q direction diverges; P entry has the finite limit
            // sqrt(q/p) = 0 at criticality.
            gp[k] = (q[k].max(0.0) / p[k]).sqrt();
            let mut dir = DVector::zeros(2 * n);
            dir.rows_mut(0, n).copy_from(&vecs.column(k));
            divergent.push(dir);
        } else if q[k] > tols.singular {
            gq[k] = (p[k].max(0.0) / q[k]).sqrt();
            let mut dir = DVector::zeros(2 * n);
            dir.rows_mut(n, n).copy_from(&vecs.column(k));
            divergent.push(dir);
        } else {
            return Err(SymplecticError::IrrelevantNormalModes);
        }
    }
    let undiag = |d: &[f64]| -> DMatrix<f64> {
        &vecs * DMatrix::from_diagonal(&DVector::from_row_slice(d)) * vecs.transpose()
    };
    let mut gamma = DMatrix::zeros(2 * n, 2 * n);
    gamma.view_mut((0, 0), (n, n)).copy_from(&undiag(&gq));
    gamma.view_mut((n, n), (n, n)).copy_from(&undiag(&gp));
    let off = undiag(&gm);
    gamma.view_mut((0, n), (n, n)).copy_from(&off);
    gamma.view_mut((n, 0), (n, n)).copy_from(&off.transpose());
    let gap = if singular { 0.0 } else { e_min };
    Ok((CovarianceMatrix::with_divergent(gamma, divergent)?, e0, gap))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn tols() -> Tolerances {
        Tolerances::default()
    }

    fn random_symmetric(rng: &mut impl Rng, n: usize) -> DMatrix<f64> {
        let a = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        (&a + a.transpose()) * 0.5
    }

    fn random_psd_hamiltonian(rng: &mut impl Rng, n: usize) -> QuadraticHamiltonian {
        let a = DMatrix::from_fn(2 * n, 2 * n, |_, _| rng.gen_range(-1.0..1.0));
        let h = a.transpose() * &a + DMatrix::identity(2 * n, 2 * n) * 0.1;
        QuadraticHamiltonian::from_assembled(&h).unwrap()
    }

    /// Dense Klein-Gordon chain: H_Q = circulant(1, -k/2, 0, .., -k/2),
    /// H_P = 1, H_QP = 0.
    fn klein_gordon_dense(kappa: f64, n: usize) -> QuadraticHamiltonian {
        let mut h_q = DMatrix::identity(n, n);
        for i in 0..n {
            h_q[(i, (i + 1) % n)] += -kappa / 2.0;
            h_q[((i + 1) % n, i)] += -kappa / 2.0;
        }
        QuadraticHamiltonian::new(h_q, DMatrix::identity(n, n), DMatrix::zeros(n, n)).unwrap()
    }

    #[test]
    fn sigma_is_symplectic_form() {
        for ordering in [SymplecticForm::blocked(3), SymplecticForm::interleaved(3)] {
            let s = ordering.matrix();
            assert_eq!(max_abs(&(&s + s.transpose())), 0.0);
            let s2 = &s * &s;
            assert!(max_abs(&(s2 + DMatrix::<f64>::identity(6, 6))) == 0.0);
        }
    }

    #[test]
    fn ordering_conversion_round_trips() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let m = random_symmetric(&mut rng, 6);
        let back = interleaved_to_blocked(&blocked_to_interleaved(&m));
        assert_eq!(max_abs_diff(&back, &m), 0.0);
        // sigma in one ordering maps to sigma in the other
        let si = blocked_to_interleaved(&SymplecticForm::blocked(3).matrix());
        assert_eq!(max_abs_diff(&si, &SymplecticForm::interleaved(3).matrix()), 0.0);
    }

    #[test]
    fn symplectic_eigenvalues_identity() {
        let h = QuadraticHamiltonian::from_assembled(&DMatrix::identity(6, 6)).unwrap();
        let (eps, j) = symplectic_eigenvalues(&h, &tols()).unwrap();
        assert_eq!(j, 0);
        assert_eq!(eps.len(), 3);
        for e in eps {
            assert!((e - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn symplectic_eigenvalues_diagonal_blocks() {
        // H_Q = H_P = diag(4): sigma H sigma^T H = 16*1, eps = 4.
        let h = QuadraticHamiltonian::new(
            DMatrix::from_element(1, 1, 4.0),
            DMatrix::from_element(1, 1, 4.0),
            DMatrix::zeros(1, 1),
        )
        .unwrap();
        let (eps, j) = symplectic_eigenvalues(&h, &tols()).unwrap();
        assert_eq!((eps.len(), j), (1, 0));
        assert!((eps[0] - 4.0).abs() < 1e-12);
    }

    #[test]
    fn symplectic_eigenvalues_critical_klein_gordon() {
        let h = klein_gordon_dense(1.0, 4);
        let (eps, j) = symplectic_eigenvalues(&h, &tols()).unwrap();
        assert!(j >= 1, "expected a zero mode at phi = 0");
        // spectrum at phi = 2 pi r / 4: sqrt(1 - cos phi) = 0, 1, sqrt(2), 1
        let mut expect = vec![1.0, 1.0, std::f64::consts::SQRT_2];
        expect.sort_by(f64::total_cmp);
        for (e, x) in eps.iter().zip(expect) {
            assert!((e - x).abs() < 1e-10, "eps {e} vs {x}");
        }
    }

    #[test]
    fn rejects_non_psd() {
        let h = QuadraticHamiltonian::from_assembled(
            &(DMatrix::identity(4, 4) * -1.0),
        )
        .unwrap();
        match symplectic_eigenvalues(&h, &tols()) {
            Err(SymplecticError::NotPositiveSemidefinite(_)) => {}
            other => panic!("expected NotPositiveSemidefinite, got {other:?}"),
        }
    }

    #[test]
    fn rejects_irrelevant_normal_modes() {
        // Second mode absent from H entirely: kernel contains (Q2, P2).
        let h = QuadraticHamiltonian::new(
            DMatrix::from_diagonal(&DVector::from_row_slice(&[1.0, 0.0])),
            DMatrix::from_diagonal(&DVector::from_row_slice(&[1.0, 0.0])),
            DMatrix::zeros(2, 2),
        )
        .unwrap();
        match symplectic_eigenvalues(&h, &tols()) {
            Err(SymplecticError::IrrelevantNormalModes) => {}
            other => panic!("expected IrrelevantNormalModes, got {other:?}"),
        }
    }

    #[test]
    fn williamson_identity() {
        let h = QuadraticHamiltonian::from_assembled(&DMatrix::identity(8, 8)).unwrap();
        let w = williamson(&h, &tols()).unwrap();
        assert_eq!(w.zero_modes, 0);
        for &e in &w.symplectic_eigenvalues {
            assert!((e - 1.0).abs() < 1e-12);
        }
        // S is orthogonal-symplectic
        let s = &w.transform;
        assert!(max_abs(&(s * s.transpose() - DMatrix::<f64>::identity(8, 8))) < 1e-10);
    }

    #[test]
    fn williamson_random_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let sigma = SymplecticForm::blocked(4).matrix();
        for _ in 0..20 {
            let h = random_psd_hamiltonian(&mut rng, 4);
            let w = williamson(&h, &tols()).unwrap();
            let s = &w.transform;
            assert!(max_abs(&(s * &sigma * s.transpose() - &sigma)) < 1e-10);
            let nf = s * h.assemble() * s.transpose();
            assert!(max_abs_diff(&nf, &w.normal_form()) < 1e-9);
            // reconstruct H = S^-1 (normal form) S^-T
            let s_inv = s.clone().try_inverse().unwrap();
            let rec = &s_inv * w.normal_form() * s_inv.transpose();
            assert!(max_abs_diff(&rec, &h.assemble()) < 1e-9);
        }
    }

    #[test]
    fn williamson_squeezer() {
        // H = V (+) 1 with V = diag(9): eps = 3, S squeezes by sqrt(3),
        // gamma = V^{-1/2} (+) V^{1/2}.
        let h = QuadraticHamiltonian::new(
            DMatrix::from_element(1, 1, 9.0),
            DMatrix::identity(1, 1),
            DMatrix::zeros(1, 1),
        )
        .unwrap();
        let w = williamson(&h, &tols()).unwrap();
        assert!((w.symplectic_eigenvalues[0] - 3.0).abs() < 1e-12);
        let (cm, _, _) = ground_state(&h, &tols()).unwrap();
        assert!((cm.matrix()[(0, 0)] - 1.0 / 3.0).abs() < 1e-12);
        assert!((cm.matrix()[(1, 1)] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn williamson_zero_mode_normal_form() {
        let h = klein_gordon_dense(1.0, 4);
        let w = williamson(&h, &tols()).unwrap();
        assert_eq!(w.zero_modes, 1);
        let s = &w.transform;
        let sigma = SymplecticForm::blocked(4).matrix();
        assert!(max_abs(&(s * &sigma * s.transpose() - &sigma)) < 1e-10);
        let nf = s * h.assemble() * s.transpose();
        // the [[0,0],[0,1]] free-particle block
        assert!(nf[(3, 3)].abs() < 1e-12, "Q entry {}", nf[(3, 3)]);
        assert!((nf[(7, 7)] - 1.0).abs() < 1e-10, "P entry {}", nf[(7, 7)]);
        assert!(max_abs_diff(&nf, &w.normal_form()) < 1e-10);
    }

    #[test]
    fn ground_state_number_preserving_is_vacuum() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 4;
        let a = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        let h_q = a.transpose() * &a + DMatrix::identity(n, n);
        let b = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-0.2..0.2));
        let h_qp = (&b - b.transpose()) * 0.5;
        let h = QuadraticHamiltonian::new(h_q.clone(), h_q.clone(), h_qp).unwrap();
        assert!(h.is_number_preserving(1e-12));
        let (cm, e0, _) = ground_state(&h, &tols()).unwrap();
        assert!(max_abs(&(cm.matrix() - DMatrix::<f64>::identity(2 * n, 2 * n))) < 1e-10);
        assert!((e0 - 0.25 * h.assemble().trace()).abs() < 1e-9);
    }

    #[test]
    fn ground_state_block_diagonal_closed_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 3;
        let a = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        let h_q = a.transpose() * &a + DMatrix::identity(n, n) * 0.5;
        let b = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        let h_p = b.transpose() * &b + DMatrix::identity(n, n) * 0.5;
        let h = QuadraticHamiltonian::new(h_q.clone(), h_p.clone(), DMatrix::zeros(n, n)).unwrap();
        let (cm, e0, _) = ground_state(&h, &tols()).unwrap();
        // X = H_Q^{-1/2} sqrt(H_Q^{1/2} H_P H_Q^{1/2}) H_Q^{-1/2}
        let rq = crate::linalg::sqrt_psd(&h_q);
        let rq_inv = crate::linalg::inv_sqrt_pd(&h_q);
        let x = &rq_inv * crate::linalg::sqrt_psd(&(&rq * &h_p * &rq)) * &rq_inv;
        let gamma = cm.matrix();
        assert!(max_abs_diff(&gamma.view((0, 0), (n, n)).into_owned(), &x) < 1e-9);
        let x_inv = x.try_inverse().unwrap();
        assert!(max_abs_diff(&gamma.view((n, n), (n, n)).into_owned(), &x_inv) < 1e-9);
        // E0 = tr[sqrt(H_Q^{1/2} H_P H_Q^{1/2})]/2, the similarity-corrected
        // form of tr[sqrt(H_Q) sqrt(H_P)]/2 (exact for commuting blocks only)
        let e0_expect = 0.5 * crate::linalg::sqrt_psd(&(&rq * &h_p * &rq)).trace();
        assert!((e0 - e0_expect).abs() < 1e-9);
    }

    #[test]
    fn ground_state_commuting_blocks_trace_formula() {
        // For commuting blocks, E0 = tr[sqrt(H_Q) sqrt(H_P)]/2 exactly.
        let n = 4;
        let circ = |c0: f64, c1: f64| {
            DMatrix::from_fn(n, n, |i, j| {
                let d = (j + n - i) % n;
                match d.min(n - d) {
                    0 => c0,
                    1 => c1,
                    _ => 0.0,
                }
            })
        };
        let h_q = circ(3.0, 0.7);
        let h_p = circ(2.0, -0.4);
        let h = QuadraticHamiltonian::new(h_q.clone(), h_p.clone(), DMatrix::zeros(n, n)).unwrap();
        let (_, e0, _) = ground_state(&h, &tols()).unwrap();
        let e0_expect =
            0.5 * (crate::linalg::sqrt_psd(&h_q) * crate::linalg::sqrt_psd(&h_p)).trace();
        assert!((e0 - e0_expect).abs() < 1e-10);
    }

    #[test]
    fn ground_state_identity() {
        let h = QuadraticHamiltonian::from_assembled(&DMatrix::identity(6, 6)).unwrap();
        let (cm, e0, gap) = ground_state(&h, &tols()).unwrap();
        assert!(max_abs(&(cm.matrix() - DMatrix::<f64>::identity(6, 6))) < 1e-12);
        assert!((e0 - 1.5).abs() < 1e-12);
        assert!((gap - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ground_state_properties_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..20 {
            let n = rng.gen_range(2..=6);
            let h = random_psd_hamiltonian(&mut rng, n);
            let (cm, e0, _) = ground_state(&h, &tols()).unwrap();
            let d = cm.validate(&tols());
            assert!(d.valid, "heisenberg min eig {}", d.heisenberg_min_eig);
            assert!(d.pure, "purity residual {}", d.purity_residual);
            // E0 = tr(gamma H)/4
            let tr = (cm.matrix() * h.assemble()).trace();
            assert!((0.25 * tr - e0).abs() < 1e-9);
        }
    }

    #[test]
    fn ground_state_critical_klein_gordon_flags() {
        let h = klein_gordon_dense(1.0, 4);
        let (cm, e0, gap) = ground_state(&h, &tols()).unwrap();
        assert!(cm.is_critical());
        assert_eq!(cm.divergent_directions().len(), 1);
        assert_eq!(gap, 0.0);
        let expect_e0 = 0.5 * (1.0 + 1.0 + std::f64::consts::SQRT_2);
        assert!((e0 - expect_e0).abs() < 1e-9);
        // the divergent direction is the uniform Q mode (kernel of H)
        let dir = &cm.divergent_directions()[0];
        let h_dir = h.assemble() * dir;
        assert!(h_dir.norm() < 1e-5 * dir.norm());
    }

    #[test]
    fn simultaneous_matches_williamson() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        // circulant symmetric blocks commute
        let n = 8;
        let circ = |c0: f64, c1: f64, c2: f64| {
            DMatrix::from_fn(n, n, |i, j| {
                let d = (j + n - i) % n;
                match d.min(n - d) {
                    0 => c0,
                    1 => c1,
                    2 => c2,
                    _ => 0.0,
                }
            })
        };
        for _ in 0..5 {
            let h_q = circ(2.0 + rng.gen_range(0.0..1.0), rng.gen_range(-0.3..0.3), 0.1);
            let h_p = circ(1.5, rng.gen_range(-0.2..0.2), 0.0);
            let h_qp = circ(0.1, rng.gen_range(-0.05..0.05), 0.0);
            let h = QuadraticHamiltonian::new(h_q, h_p, h_qp).unwrap();
            let (cm1, e1, g1) = ground_state(&h, &tols()).unwrap();
            let (cm2, e2, g2) = ground_state_simultaneous(&h, &tols()).unwrap();
            assert!(max_abs_diff(cm1.matrix(), cm2.matrix()) < 1e-9);
            assert!((e1 - e2).abs() < 1e-9);
            assert!((g1 - g2).abs() < 1e-9);
        }
    }

    #[test]
    fn simultaneous_block_diagonal_v() {
        // H = V (+) 1 with V = diag(9) in a 2-mode circulant disguise
        let v = DMatrix::from_row_slice(2, 2, &[5.0, 4.0, 4.0, 5.0]);
        let h = QuadraticHamiltonian::new(v.clone(), DMatrix::identity(2, 2), DMatrix::zeros(2, 2))
            .unwrap();
        let (cm, _, _) = ground_state_simultaneous(&h, &tols()).unwrap();
        let v_sqrt = crate::linalg::sqrt_psd(&v);
        let v_isqrt = crate::linalg::inv_sqrt_pd(&v);
        assert!(max_abs_diff(&cm.matrix().view((0, 0), (2, 2)).into_owned(), &v_isqrt) < 1e-10);
        assert!(max_abs_diff(&cm.matrix().view((2, 2), (2, 2)).into_owned(), &v_sqrt) < 1e-10);
    }

    #[test]
    fn simultaneous_rejects_noncommuting() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let h_q = random_symmetric(&mut rng, 3) + DMatrix::identity(3, 3) * 4.0;
        let h_p = random_symmetric(&mut rng, 3) + DMatrix::identity(3, 3) * 4.0;
        let h = QuadraticHamiltonian::new(h_q, h_p, DMatrix::zeros(3, 3)).unwrap();
        match ground_state_simultaneous(&h, &tols()) {
            Err(SymplecticError::NotSimultaneouslyDiagonalizable(_)) => {}
            other => panic!("expected NotSimultaneouslyDiagonalizable, got {other:?}"),
        }
    }

    #[test]
    fn simultaneous_critical_gives_flags() {
        let h = klein_gordon_dense(1.0, 4);
        let (cm, _, gap) = ground_state_simultaneous(&h, &tols()).unwrap();
        assert_eq!(gap, 0.0);
        assert_eq!(cm.divergent_directions().len(), 1);
        // P block stays finite and matches the dense route
        let (cm_dense, _, _) = ground_state(&h, &tols()).unwrap();
        let p1 = cm.matrix().view((4, 4), (4, 4)).into_owned();
        let p2 = cm_dense.matrix().view((4, 4), (4, 4)).into_owned();
        assert!(max_abs_diff(&p1, &p2) < 1e-6);
    }

    #[test]
    fn validate_cm_examples() {
        let t = tols();
        let d = validate_cm(&DMatrix::identity(4, 4), &t);
        assert!(d.valid && d.pure);
        let d = validate_cm(&(DMatrix::identity(4, 4) * 0.5), &t);
        assert!(!d.valid, "gamma = 1/2 violates uncertainty");
        // two-mode squeezed state: gamma = S S^T is valid and pure for any r
        let r: f64 = 1.5;
        let (c, s) = ((2.0 * r).cosh(), (2.0 * r).sinh());
        let gamma = DMatrix::from_row_slice(
            4,
            4,
            &[c, s, 0.0, 0.0, s, c, 0.0, 0.0, 0.0, 0.0, c, -s, 0.0, 0.0, -s, c],
        );
        let d = validate_cm(&gamma, &t);
        assert!(d.valid && d.pure, "{d:?}");
    }
}
