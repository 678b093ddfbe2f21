//! Translationally invariant quadratic Hamiltonians on `Z_N^d`.
//!
//! A Hamiltonian is specified by a [`CouplingStencil`]: per block (`Q`, `P`,
//! `QP`) a finite map from lattice offsets to coupling coefficients, plus an
//! optional power-law tail for infinite-range interactions. Circulant
//! structure makes every block diagonal in Fourier space with symbol
//! `M(phi) = sum_n M_n e^{-i n.phi}`; the excitation spectrum is the
//! spectral function `E(phi) = sqrt(Q(phi) P(phi) - QP(phi)^2)` and the gap
//! is its minimum over the torus.

mod ground_state;
mod spectral;
mod stencil;
mod symbol;

pub use ground_state::{ground_state_tinv, DivergentBlocks, SystemSize, TinvGroundState};
pub use spectral::{gap, spectral_function, spectral_function_with, CriticalPoint, GapReport, SpectralFunction};
pub use stencil::{
    dirichlet_eta, klein_gordon, power_law, riemann_zeta, Block, BlockStencil, CouplingStencil,
    PowerLawTail,
};
pub use symbol::{fourier_symbol, FourierSymbol};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LatticeError {
    #[error("parameter out of range: {0}")]
    OutOfRange(String),

    /// Power-law couplings with `alpha <= d` are not absolutely summable.
    #[error("power-law exponent {alpha} is not summable in dimension {dim}")]
    NonSummable { alpha: f64, dim: usize },

    /// `H_Q(phi) H_P(phi) - H_QP(phi)^2` dropped below tolerance somewhere
    /// on the grid; the Hamiltonian is not PSD.
    #[error("spectral function squared is negative ({0:.3e}); hamiltonian is invalid")]
    NegativeSymbol(f64),

    #[error("stencil block {0} must be symmetric under n -> -n")]
    AsymmetricBlock(&'static str),

    #[error("dimension {0} is not supported (d must be 1, 2, or 3)")]
    UnsupportedDimension(usize),

    /// Analytic tails are only defined for one-dimensional stencils.
    #[error("power-law tails require d = 1, got d = {0}")]
    TailDimension(usize),

    #[error("offset {0:?} does not fit dimension {1}")]
    BadOffset(Vec<i64>, usize),

    #[error("serialization: {0}")]
    Serialization(String),
}

impl LatticeError {
    pub fn name(&self) -> &'static str {
        match self {
            Self::OutOfRange(_) => "OutOfRange",
            Self::NonSummable { .. } => "NonSummable",
            Self::NegativeSymbol(_) => "NegativeSymbol",
            Self::AsymmetricBlock(_) => "AsymmetricBlock",
            Self::UnsupportedDimension(_) => "UnsupportedDimension",
            Self::TailDimension(_) => "TailDimension",
            Self::BadOffset(..) => "BadOffset",
            Self::Serialization(_) => "Serialization",
        }
    }
}

pub type Result<T> = std::result::Result<T, LatticeError>;
