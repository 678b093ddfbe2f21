//! Numerical toolkit for translationally invariant quadratic bosonic
//! Hamiltonians on cubic lattices.
//!
//! The crate is organized around the phase-space (covariance matrix)
//! description of Gaussian states:
//!
//! - [`symplectic`]: symplectic linear algebra on dense matrices — normal
//!   forms, symplectic eigenvalues, ground-state covariance matrices,
//!   validity and purity diagnostics.
//! - [`lattice`]: translationally invariant Hamiltonians defined by coupling
//!   stencils on `Z_N^d`, their Fourier symbols, excitation spectra and gaps,
//!   and ground states in the finite and thermodynamic limits.
//! - [`correlations`]: real-space correlation sequences `[f(M)]_n` for
//!   arbitrary functions of circulant blocks, via FFT functional calculus.
//! - [`asymptotics`]: correlation lengths from the zeros of the complexified
//!   spectral function, the gap/effective-mass prediction, and decay-law
//!   fitting with model selection.
//! - [`gmps`]: Gaussian matrix product states — Jamiolkowski channels, EPR
//!   projections, ring assembly, the Fourier closed form, trig-rational
//!   states, residue correlations, and parent Hamiltonians.
//! - [`trotter`]: generators of translation/reflection invariant symplectic
//!   transformations, commutator block algebra, Lie-Trotter products, and a
//!   compiler that synthesizes target evolutions from a restricted gate set.
//!
//! All operations are pure functions on immutable value types; results are
//! deterministic for fixed inputs and grid parameters.

pub mod asymptotics;
pub mod correlations;
mod fft;
pub mod gmps;
pub mod lattice;
pub mod linalg;
pub mod symplectic;
pub mod trotter;

pub use lattice::{klein_gordon, power_law, CouplingStencil};
pub use symplectic::{CovarianceMatrix, QuadraticHamiltonian};



