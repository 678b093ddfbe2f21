//! Small dense linear-algebra helpers shared across modules.
//!
//! Everything here operates on `nalgebra` dynamic matrices at desk scale
//! (dimensions of a few hundred at most), so plain eigendecompositions are
//! always affordable.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

/// Eigendecomposition of a real symmetric matrix with eigenvalues sorted
/// ascending. Columns of the returned matrix are the matching eigenvectors.
pub fn symmetric_eigen_sorted(m: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let n = m.nrows();
    let eig = m.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vecs = DMatrix::zeros(n, n);
    for (j, &i) in order.iter().enumerate() {
        vecs.set_column(j, &eig.eigenvectors.column(i));
    }
    (vals, vecs)
}

/// Apply a scalar function to a real symmetric matrix through its
/// eigendecomposition.
pub fn symmetric_matrix_function<F: Fn(f64) -> f64>(m: &DMatrix<f64>, f: F) -> DMatrix<f64> {
    let (vals, vecs) = symmetric_eigen_sorted(m);
    let d = DMatrix::from_diagonal(&vals.map(f));
    &vecs * d * vecs.transpose()
}

/// Principal square root of a symmetric PSD matrix. Eigenvalues below zero
/// are clamped; callers are expected to have checked positivity beforehand.
pub fn sqrt_psd(m: &DMatrix<f64>) -> DMatrix<f64> {
    symmetric_matrix_function(m, |x| x.max(0.0).sqrt())
}

/// Inverse square root of a symmetric positive definite matrix.
pub fn inv_sqrt_pd(m: &DMatrix<f64>) -> DMatrix<f64> {
    symmetric_matrix_function(m, |x| 1.0 / x.max(f64::MIN_POSITIVE).sqrt())
}

/// Smallest eigenvalue of a real symmetric matrix.
pub fn min_eig_symmetric(m: &DMatrix<f64>) -> f64 {
    m.clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .fold(f64::INFINITY, |a, &b| a.min(b))
}

/// Smallest eigenvalue of the Hermitian matrix `re + i*im` (with `re`
/// symmetric and `im` antisymmetric), computed through the real embedding
/// `[[re, -im], [im, re]]`, whose spectrum is that of `re + i*im` doubled.
pub fn hermitian_min_eig(re: &DMatrix<f64>, im: &DMatrix<f64>) -> f64 {
    let n = re.nrows();
    let mut emb = DMatrix::zeros(2 * n, 2 * n);
    emb.view_mut((0, 0), (n, n)).copy_from(re);
    emb.view_mut((n, n), (n, n)).copy_from(re);
    emb.view_mut((0, n), (n, n)).copy_from(&(-im));
    emb.view_mut((n, 0), (n, n)).copy_from(im);
    min_eig_symmetric(&emb)
}

/// Operator (spectral) norm: the largest singular value.
pub fn op_norm(m: &DMatrix<f64>) -> f64 {
    m.clone().singular_values().max()
}

/// Largest absolute entry.
pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |a: f64, &b| a.max(b.abs()))
}

/// Largest absolute entry of the difference.
pub fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    max_abs(&(a - b))
}

/// Evaluate a polynomial with complex coefficients (ascending order) by
/// Horner's scheme.
pub fn polyval(coeffs: &[Complex64], z: Complex64) -> Complex64 {
    coeffs
        .iter()
        .rev()
        .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
}

/// Derivative coefficients of a polynomial (ascending order).
pub fn polyder(coeffs: &[Complex64]) -> Vec<Complex64> {
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, &c)| c * k as f64)
        .collect()
}

/// All complex roots of a polynomial with real coefficients (ascending
/// order), via the companion-matrix eigenvalues followed by one Newton
/// polish per root. Leading and trailing coefficients that vanish relative
/// to the largest one are trimmed; trailing zeros contribute roots at 0.
pub fn poly_roots(coeffs: &[f64]) -> Vec<Complex64> {
    let scale = coeffs.iter().fold(0.0f64, |a, &c| a.max(c.abs()));
    if scale == 0.0 {
        return Vec::new();
    }
    let tol = 1e-14 * scale;
    let mut hi = coeffs.len();
    while hi > 0 && coeffs[hi - 1].abs() <= tol {
        hi -= 1;
    }
    let mut lo = 0;
    while lo < hi && coeffs[lo].abs() <= tol {
        lo += 1;
    }
    let mut roots: Vec<Complex64> = (0..lo).map(|_| Complex64::new(0.0, 0.0)).collect();
    let trimmed = &coeffs[lo..hi];
    let deg = trimmed.len().saturating_sub(1);
    if deg == 0 {
        return roots;
    }
    // Companion matrix of the monic polynomial.
    let lead = trimmed[deg];
    let mut comp = DMatrix::<f64>::zeros(deg, deg);
    for i in 1..deg {
        comp[(i, i - 1)] = 1.0;
    }
    for i in 0..deg {
        comp[(i, deg - 1)] = -trimmed[i] / lead;
    }
    let eigs = comp.complex_eigenvalues();
    let ccoeffs: Vec<Complex64> = trimmed.iter().map(|&c| Complex64::new(c, 0.0)).collect();
    let dcoeffs = polyder(&ccoeffs);
    for &e in eigs.iter() {
        let mut z = Complex64::new(e.re, e.im);
        // One Newton step; skipped when the derivative is tiny (multiple root).
        let dp = polyval(&dcoeffs, z);
        if dp.norm() > 1e-300 {
            let step = polyval(&ccoeffs, z) / dp;
            if step.norm() < 0.1 * (1.0 + z.norm()) {
                z -= step;
            }
        }
        roots.push(z);
    }
    roots
}
