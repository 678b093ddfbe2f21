//! Ground states of translationally invariant Hamiltonians, expressed as
//! covariance block entries `gamma_Q(n)`, `gamma_P(n)`, `gamma_QP(n)`.
//!
//! The Fourier-space closed form is `gamma_Q = P/E`, `gamma_P = Q/E`,
//! `gamma_QP = -M/E` with `E` the spectral function of the symmetrized
//! stencil; entries follow by the correlation engine. Critical systems only
//! return the blocks that stay finite, flagging the divergent ones.

use super::spectral::spectral_function;
use super::stencil::CouplingStencil;
use crate::correlations::{
    correlation_sequence, BlockFunction, ConvergenceReport, CorrelationError, EngineOptions,
};

/// Finite `N^d` torus or the thermodynamic limit.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum SystemSize {
    Finite(usize),
    Thermodynamic,
}

/// Which covariance blocks diverge (critical systems only).
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq)]
pub struct DivergentBlocks {
    pub q: bool,
    pub p: bool,
    pub qp: bool,
}

/// Ground-state data of a translationally invariant Hamiltonian.
#[derive(Clone, Debug)]
pub struct TinvGroundState {
    pub offsets: Vec<Vec<i64>>,
    /// `gamma_Q(n)`; `None` when the block diverges at a critical point.
    pub gamma_q: Option<Vec<f64>>,
    pub gamma_p: Option<Vec<f64>>,
    pub gamma_qp: Option<Vec<f64>>,
    pub divergent: DivergentBlocks,
    /// Ground-state energy per site, `E0/N^d = mean(E)/2`.
    pub e0_per_site: f64,
    /// Spectral gap of the symmetrized Hamiltonian.
    pub gap: f64,
    pub report: ConvergenceReport,
}

/// Compute ground-state covariance entries at the requested offsets.
pub fn ground_state_tinv(
    stencil: &CouplingStencil,
    size: SystemSize,
    offsets: &[Vec<i64>],
    opts: &EngineOptions,
) -> Result<TinvGroundState, CorrelationError> {
    let sf = spectral_function(stencil)?;
    let mut divergent = DivergentBlocks::default();
    let run = |f: BlockFunction, flag: &mut bool| -> Result<
        Option<(Vec<f64>, ConvergenceReport)>,
        CorrelationError,
    > {
        match correlation_sequence(stencil, f, offsets, size, opts) {
            Ok(seq) => Ok(Some((seq.values, seq.report))),
            Err(CorrelationError::DivergentBlock(_)) => {
                *flag = true;
                Ok(None)
            }
            Err(e) => Err(e),
        }
    };
    let q = run(BlockFunction::GammaQ, &mut divergent.q)?;
    let p = run(BlockFunction::GammaP, &mut divergent.p)?;
    let qp = run(BlockFunction::GammaQP, &mut divergent.qp)?;

    let report = [&q, &p, &qp]
        .iter()
        .filter_map(|r| r.as_ref().map(|(_, rep)| rep.clone()))
        .reduce(|a, b| ConvergenceReport {
            grid: if a.grid >= b.grid { a.grid.clone() } else { b.grid.clone() },
            converged: a.converged && b.converged,
            last_change: a.last_change.max(b.last_change),
            tail_bound: a.tail_bound.max(b.tail_bound),
        })
        .unwrap_or(ConvergenceReport {
            grid: vec![],
            converged: true,
            last_change: 0.0,
            tail_bound: 0.0,
        });

    let e0_per_site = energy_per_site(&sf, size, opts);
    Ok(TinvGroundState {
        offsets: offsets.to_vec(),
        gamma_q: q.map(|(v, _)| v),
        gamma_p: p.map(|(v, _)| v),
        gamma_qp: qp.map(|(v, _)| v),
        divergent,
        e0_per_site,
        gap: sf.gap_report().gap,
        report,
    })
}

/// `E0 / N^d = mean of E over the momentum grid / 2`.
fn energy_per_site(
    sf: &super::spectral::SpectralFunction,
    size: SystemSize,
    opts: &EngineOptions,
) -> f64 {
    let dim = sf.dim();
    let mean_on = |g: usize| -> f64 {
        let dims = vec![g; dim];
        let qs = sf.block_symbol(super::Block::Q).sample_grid(&dims);
        let ps = sf.block_symbol(super::Block::P).sample_grid(&dims);
        let ms = sf.block_symbol(super::Block::QP).sample_grid(&dims);
        let mut acc = 0.0;
        for i in 0..qs.len() {
            acc += (qs[i].re * ps[i].re - ms[i].re * ms[i].re).max(0.0).sqrt();
        }
        acc / qs.len() as f64
    };
    match size {
        SystemSize::Finite(n) => 0.5 * mean_on(n),
        SystemSize::Thermodynamic => {
            let mut g = (1usize << 12).min(opts.cap_for(dim));
            let mut prev = mean_on(g);
            loop {
                if g >= opts.cap_for(dim) {
                    return 0.5 * prev;
                }
                g *= 2;
                let cur = mean_on(g);
                if (cur - prev).abs() <= 1e-10 {
                    return 0.5 * cur;
                }
                prev = cur;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::klein_gordon;
    use crate::symplectic::{ground_state, Tolerances};

    fn offsets(n: i64) -> Vec<Vec<i64>> {
        (0..=n).map(|k| vec![k]).collect()
    }

    #[test]
    fn decoupled_chain_is_vacuum() {
        let s = klein_gordon(0.0).unwrap();
        let gs = ground_state_tinv(
            &s,
            SystemSize::Thermodynamic,
            &offsets(4),
            &EngineOptions::default(),
        )
        .unwrap();
        let gq = gs.gamma_q.unwrap();
        let gp = gs.gamma_p.unwrap();
        assert!((gq[0] - 1.0).abs() < 1e-12 && (gp[0] - 1.0).abs() < 1e-12);
        for k in 1..=4 {
            assert!(gq[k].abs() < 1e-12 && gp[k].abs() < 1e-12);
        }
        assert!((gs.e0_per_site - 0.5).abs() < 1e-12);
        assert!((gs.gap - 1.0).abs() < 1e-12);
    }

    #[test]
    fn critical_klein_gordon_closed_form() {
        // (gamma_P)_n = -(2 sqrt(2)/pi) (sgn kappa)^n / (4 n^2 - 1)
        for kappa in [1.0f64, -1.0] {
            let s = klein_gordon(kappa).unwrap();
            let gs = ground_state_tinv(
                &s,
                SystemSize::Thermodynamic,
                &offsets(12),
                &EngineOptions::default(),
            )
            .unwrap();
            assert!(gs.divergent.q && !gs.divergent.p);
            assert!(gs.gamma_q.is_none());
            let gp = gs.gamma_p.unwrap();
            for (n, v) in gp.iter().enumerate() {
                let expect = -(2.0 * 2f64.sqrt() / std::f64::consts::PI) * kappa.signum().powi(n as i32)
                    / (4.0 * (n as f64).powi(2) - 1.0);
                assert!((v - expect).abs() < 1e-8, "kappa={kappa} n={n}: {v} vs {expect}");
            }
        }
    }

    #[test]
    fn finite_n_matches_dense_oracle() {
        let s = klein_gordon(0.5).unwrap();
        let n = 16;
        let gs = ground_state_tinv(
            &s,
            SystemSize::Finite(n),
            &offsets(8),
            &EngineOptions::default(),
        )
        .unwrap();
        let t = Tolerances::default();
        let h = s.dense_hamiltonian(n).unwrap();
        let (cm, e0, _) = ground_state(&h, &t).unwrap();
        let gq = gs.gamma_q.unwrap();
        let gp = gs.gamma_p.unwrap();
        for k in 0..=8usize {
            assert!((gq[k] - cm.matrix()[(k, 0)]).abs() < 1e-10);
            assert!((gp[k] - cm.matrix()[(n + k, n)]).abs() < 1e-10);
        }
        assert!((gs.e0_per_site - e0 / n as f64).abs() < 1e-10);
    }

    #[test]
    fn point_symmetrized_ground_state_equals_original() {
        // random non-symmetric QP stencil: S(H) has the same ground state
        use crate::lattice::BlockStencil;
        let q = BlockStencil::from_entries(1, [(vec![0], 2.0), (vec![1], 0.3), (vec![-1], 0.3)])
            .unwrap();
        let p = BlockStencil::from_entries(1, [(vec![0], 1.5), (vec![1], -0.2), (vec![-1], -0.2)])
            .unwrap();
        let qp = BlockStencil::from_entries(1, [(vec![1], 0.15)]).unwrap();
        let s = crate::lattice::CouplingStencil::new(1, q, p, qp).unwrap();
        let n = 8;
        let t = Tolerances::default();
        let h = s.dense_hamiltonian(n).unwrap();
        let h_sym = s.point_symmetrize().dense_hamiltonian(n).unwrap();
        let (cm, e0, _) = ground_state(&h, &t).unwrap();
        let (cm_sym, e0_sym, _) = ground_state(&h_sym, &t).unwrap();
        assert!(crate::linalg::max_abs_diff(cm.matrix(), cm_sym.matrix()) < 1e-9);
        assert!((e0 - e0_sym).abs() < 1e-9);
        // and the tinv path against the dense oracle of the symmetrized H
        let gs = ground_state_tinv(
            &s,
            SystemSize::Finite(n),
            &offsets(4),
            &EngineOptions::default(),
        )
        .unwrap();
        let gq = gs.gamma_q.unwrap();
        for k in 0..=4usize {
            assert!((gq[k] - cm.matrix()[(k, 0)]).abs() < 1e-9);
        }
    }

    #[test]
    fn qp_block_point_symmetric_output() {
        use crate::lattice::BlockStencil;
        let q = BlockStencil::from_entries(1, [(vec![0], 2.0)]).unwrap();
        let p = BlockStencil::from_entries(1, [(vec![0], 1.0)]).unwrap();
        let qp = BlockStencil::from_entries(1, [(vec![1], 0.2)]).unwrap();
        let s = crate::lattice::CouplingStencil::new(1, q, p, qp).unwrap();
        let offs: Vec<Vec<i64>> = vec![vec![2], vec![-2]];
        let gs = ground_state_tinv(
            &s,
            SystemSize::Thermodynamic,
            &offs,
            &EngineOptions::default(),
        )
        .unwrap();
        let gqp = gs.gamma_qp.unwrap();
        assert!((gqp[0] - gqp[1]).abs() < 1e-10, "gamma_QP(n) = gamma_QP(-n)");
    }
}
