//! Coupling stencils: offset-indexed coefficients defining circulant
//! Hamiltonian blocks, with optional analytic power-law tails.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{LatticeError, Result};
use crate::symplectic::QuadraticHamiltonian;

pub(crate) const MAX_DIM: usize = 3;

/// Which block of the Hamiltonian a coefficient belongs to.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Block {
    Q,
    P,
    QP,
}

impl Block {
    pub const ALL: [Block; 3] = [Block::Q, Block::P, Block::QP];

    pub fn label(&self) -> &'static str {
        match self {
            Block::Q => "Q",
            Block::P => "P",
            Block::QP => "QP",
        }
    }
}

/// Analytic tail `c / |n|^alpha` for `n != 0` plus an on-site value,
/// describing an infinite-range one-dimensional coupling.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerLawTail {
    pub alpha: f64,
    pub c: f64,
    #[serde(rename = "onSite")]
    pub on_site: f64,
}

impl PowerLawTail {
    /// Truncation point such that the discarded tail of the symbol series is
    /// below `tol`: `2|c| n^(1-alpha) / (alpha-1) <= tol`.
    pub fn truncation(&self, tol: f64) -> usize {
        let c = self.c.abs();
        if c == 0.0 {
            return 1;
        }
        let n = (2.0 * c / ((self.alpha - 1.0) * tol)).powf(1.0 / (self.alpha - 1.0));
        (n.ceil() as usize).clamp(16, 1 << 24)
    }

    /// Bound on the discarded part of the symbol series after truncating at
    /// `n_max`.
    pub fn tail_bound(&self, n_max: usize) -> f64 {
        2.0 * self.c.abs() * (n_max as f64).powf(1.0 - self.alpha) / (self.alpha - 1.0)
    }
}

/// One circulant block: a finite offset map plus an optional tail.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct BlockStencil {
    entries: BTreeMap<[i64; 3], f64>,
    tail: Option<PowerLawTail>,
}

impl BlockStencil {
    pub fn from_entries<I: IntoIterator<Item = (Vec<i64>, f64)>>(
        dim: usize,
        entries: I,
    ) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (off, val) in entries {
            if off.len() != dim {
                return Err(LatticeError::BadOffset(off, dim));
            }
            if val != 0.0 {
                *map.entry(pad(&off)).or_insert(0.0) += val;
            }
        }
        Ok(Self { entries: map, tail: None })
    }

    pub fn with_tail(mut self, tail: PowerLawTail) -> Self {
        self.tail = Some(tail);
        self
    }

    pub fn entries(&self) -> impl Iterator<Item = (&[i64; 3], &f64)> {
        self.entries.iter()
    }

    pub fn tail(&self) -> Option<&PowerLawTail> {
        self.tail.as_ref()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty() && self.tail.is_none()
    }

    /// Total coefficient at an offset (finite entry plus tail contribution).
    pub fn coefficient(&self, offset: &[i64]) -> f64 {
        let key = pad(offset);
        let mut v = self.entries.get(&key).copied().unwrap_or(0.0);
        if let Some(t) = &self.tail {
            let n = key[0];
            if key[1] == 0 && key[2] == 0 {
                v += if n == 0 { t.on_site } else { t.c / (n.abs() as f64).powf(t.alpha) };
            }
        }
        v
    }

    /// Largest infinity-norm of the finite offsets.
    pub fn finite_range(&self) -> i64 {
        self.entries
            .keys()
            .map(|k| k.iter().map(|x| x.abs()).max().unwrap())
            .max()
            .unwrap_or(0)
    }

    fn is_point_symmetric(&self, tol: f64) -> bool {
        self.entries.iter().all(|(k, &v)| {
            let neg = [-k[0], -k[1], -k[2]];
            (self.entries.get(&neg).copied().unwrap_or(0.0) - v).abs() <= tol
        })
    }

    fn point_symmetrized(&self) -> Self {
        let mut map: BTreeMap<[i64; 3], f64> = BTreeMap::new();
        for (k, &v) in &self.entries {
            let neg = [-k[0], -k[1], -k[2]];
            let avg = 0.5 * (v + self.entries.get(&neg).copied().unwrap_or(0.0));
            if avg != 0.0 {
                map.insert(*k, avg);
                map.insert(neg, avg);
            }
        }
        Self { entries: map, tail: self.tail }
    }

    fn scaled(&self, s: f64) -> Self {
        Self {
            entries: self.entries.iter().map(|(k, v)| (*k, v * s)).collect(),
            tail: self.tail.map(|t| PowerLawTail {
                alpha: t.alpha,
                c: t.c * s,
                on_site: t.on_site * s,
            }),
        }
    }

    /// Fold all coefficients (finite and tail, truncated at `tol`) into the
    /// first row of the `n^d` circulant: `row[k] = sum_{m = k mod n} c_m`.
    pub(crate) fn folded_first_row(&self, dim: usize, n: usize, tol: f64) -> Vec<f64> {
        let total = n.pow(dim as u32);
        let mut row = vec![0.0; total];
        for (k, &v) in &self.entries {
            row[fold_index(k, dim, n)] += v;
        }
        if let Some(t) = &self.tail {
            let n_max = t.truncation(tol);
            row[0] += t.on_site;
            for m in 1..=n_max as i64 {
                let c = t.c / (m as f64).powf(t.alpha);
                row[(m as usize) % n] += c;
                row[(n - (m as usize) % n) % n] += c;
            }
        }
        row
    }
}

fn pad(offset: &[i64]) -> [i64; 3] {
    let mut k = [0i64; 3];
    for (i, &o) in offset.iter().enumerate().take(MAX_DIM) {
        k[i] = o;
    }
    k
}

fn fold_index(k: &[i64; 3], dim: usize, n: usize) -> usize {
    let mut idx = 0usize;
    for d in 0..dim {
        let m = k[d].rem_euclid(n as i64) as usize;
        idx = idx * n + m;
    }
    idx
}

/// A translationally invariant quadratic Hamiltonian on `Z_N^d`, defined by
/// per-block coupling stencils. `Q` and `P` blocks must be symmetric under
/// `n -> -n`; the `QP` block may be asymmetric (see
/// [`CouplingStencil::point_symmetrize`]).
#[derive(Clone, Debug, PartialEq)]
pub struct CouplingStencil {
    dim: usize,
    q: BlockStencil,
    p: BlockStencil,
    qp: BlockStencil,
}

impl CouplingStencil {
    pub fn new(dim: usize, q: BlockStencil, p: BlockStencil, qp: BlockStencil) -> Result<Self> {
        if !(1..=MAX_DIM).contains(&dim) {
            return Err(LatticeError::UnsupportedDimension(dim));
        }
        for (b, name) in [(&q, "Q"), (&p, "P")] {
            if !b.is_point_symmetric(1e-12) {
                return Err(LatticeError::AsymmetricBlock(name));
            }
        }
        for b in [&q, &p, &qp] {
            if let Some(t) = b.tail() {
                if dim != 1 {
                    return Err(LatticeError::TailDimension(dim));
                }
                if t.alpha <= dim as f64 {
                    return Err(LatticeError::NonSummable { alpha: t.alpha, dim });
                }
            }
        }
        Ok(Self { dim, q, p, qp })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn block(&self, b: Block) -> &BlockStencil {
        match b {
            Block::Q => &self.q,
            Block::P => &self.p,
            Block::QP => &self.qp,
        }
    }

    /// `true` when no block carries an analytic tail.
    pub fn is_finite_range(&self) -> bool {
        Block::ALL.iter().all(|&b| self.block(b).tail().is_none())
    }

    /// Largest finite offset over all blocks.
    pub fn range(&self) -> i64 {
        Block::ALL.iter().map(|&b| self.block(b).finite_range()).max().unwrap()
    }

    /// Replace the QP block by its reflection average
    /// `(H_QP + H_QP^T)/2`; the Q and P blocks are unchanged. The ground
    /// state and ground-state energy are invariant under this operation.
    pub fn point_symmetrize(&self) -> Self {
        Self {
            dim: self.dim,
            q: self.q.clone(),
            p: self.p.clone(),
            qp: self.qp.point_symmetrized(),
        }
    }

    /// Multiply every coefficient by `s > 0` (an overall energy rescaling).
    pub fn scaled(&self, s: f64) -> Self {
        Self {
            dim: self.dim,
            q: self.q.scaled(s),
            p: self.p.scaled(s),
            qp: self.qp.scaled(s),
        }
    }

    /// Assemble the dense circulant Hamiltonian on the `n^d` torus
    /// (offsets folded modulo `n`). Intended for small systems as an oracle
    /// for the Fourier-space routines.
    pub fn dense_hamiltonian(&self, n: usize) -> Result<QuadraticHamiltonian> {
        let total = n.pow(self.dim as u32);
        let tol = 1e-14;
        let rows: Vec<Vec<f64>> = [&self.q, &self.p, &self.qp]
            .iter()
            .map(|b| b.folded_first_row(self.dim, n, tol))
            .collect();
        // A_{kl} = a_{k-l}
        let build = |row: &Vec<f64>| {
            DMatrix::from_fn(total, total, |i, j| {
                row[self.wrapped_difference(i, j, n)]
            })
        };
        QuadraticHamiltonian::new(build(&rows[0]), build(&rows[1]), build(&rows[2]))
            .map_err(|e| LatticeError::Serialization(e.to_string()))
    }

    /// Flattened index of the offset `site(i) - site(j)` modulo `n`.
    fn wrapped_difference(&self, i: usize, j: usize, n: usize) -> usize {
        let mut rem_i = i;
        let mut rem_j = j;
        let mut idx = 0usize;
        // row-major: first coordinate has the largest stride
        let mut coords = [0usize; MAX_DIM];
        for d in (0..self.dim).rev() {
            let ci = rem_i % n;
            let cj = rem_j % n;
            rem_i /= n;
            rem_j /= n;
            coords[d] = (ci + n - cj) % n;
        }
        for c in coords.iter().take(self.dim) {
            idx = idx * n + c;
        }
        idx
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&StencilDoc::from(self)).expect("stencil serialization")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let doc: StencilDoc =
            serde_json::from_str(s).map_err(|e| LatticeError::Serialization(e.to_string()))?;
        doc.try_into()
    }
}

/// Nearest-neighbor chain `sum_i (Q_i^2 + P_i^2 - kappa Q_i Q_{i+1}) / 2`:
/// the discretized Klein-Gordon field. Gapped for `|kappa| < 1`, critical at
/// `kappa = +-1`.
pub fn klein_gordon(kappa: f64) -> Result<CouplingStencil> {
    if !(-1.0..=1.0).contains(&kappa) || !kappa.is_finite() {
        return Err(LatticeError::OutOfRange(format!("kappa = {kappa} not in [-1, 1]")));
    }
    let q = BlockStencil::from_entries(
        1,
        [
            (vec![0], 1.0),
            (vec![1], -kappa / 2.0),
            (vec![-1], -kappa / 2.0),
        ],
    )?;
    let p = BlockStencil::from_entries(1, [(vec![0], 1.0)])?;
    CouplingStencil::new(1, q, p, BlockStencil::default())
}

/// One-dimensional `H = V (+) 1` with power-law coupling `V_n = c/|n|^alpha`.
///
/// When `on_site` is omitted the critical value is chosen: the symbol
/// `V(phi)` then has a zero at `phi = pi` for `c > 0` (on-site `2 c eta(alpha)`,
/// which is `3 c zeta(3)/2` at `alpha = 3`) and at `phi = 0` for `c < 0`
/// (on-site `2 |c| zeta(alpha)`).
pub fn power_law(alpha: f64, c: f64, dim: usize, on_site: Option<f64>) -> Result<CouplingStencil> {
    if !(1..=MAX_DIM).contains(&dim) {
        return Err(LatticeError::UnsupportedDimension(dim));
    }
    if dim != 1 {
        return Err(LatticeError::TailDimension(dim));
    }
    if alpha <= dim as f64 {
        return Err(LatticeError::NonSummable { alpha, dim });
    }
    let v0 = on_site.unwrap_or_else(|| {
        if c >= 0.0 {
            2.0 * c * dirichlet_eta(alpha)
        } else {
            2.0 * c.abs() * riemann_zeta(alpha)
        }
    });
    let q = BlockStencil::default().with_tail(PowerLawTail { alpha, c, on_site: v0 });
    let p = BlockStencil::from_entries(1, [(vec![0], 1.0)])?;
    CouplingStencil::new(1, q, p, BlockStencil::default())
}

/// Riemann zeta for real `s > 1`, by direct summation with Euler-Maclaurin
/// tail corrections.
pub fn riemann_zeta(s: f64) -> f64 {
    assert!(s > 1.0, "zeta(s) needs s > 1");
    let n = 100_000usize;
    let mut sum = 0.0;
    for k in 1..=n {
        sum += (k as f64).powf(-s);
    }
    let nf = n as f64;
    sum += nf.powf(1.0 - s) / (s - 1.0) - 0.5 * nf.powf(-s) + s / 12.0 * nf.powf(-s - 1.0)
        - s * (s + 1.0) * (s + 2.0) / 720.0 * nf.powf(-s - 3.0);
    sum
}

/// Dirichlet eta: `sum (-1)^(n-1) n^-s = (1 - 2^(1-s)) zeta(s)`.
pub fn dirichlet_eta(s: f64) -> f64 {
    (1.0 - 2f64.powf(1.0 - s)) * riemann_zeta(s)
}

// --- JSON document layout -------------------------------------------------

#[derive(Serialize, Deserialize)]
struct StencilDoc {
    dimension: usize,
    blocks: BlocksDoc,
}

#[derive(Serialize, Deserialize)]
struct BlocksDoc {
    #[serde(rename = "Q")]
    q: BlockDoc,
    #[serde(rename = "P")]
    p: BlockDoc,
    #[serde(rename = "QP")]
    qp: BlockDoc,
}

#[derive(Serialize, Deserialize)]
struct BlockDoc {
    entries: Vec<EntryDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    tail: Option<PowerLawTail>,
}

#[derive(Serialize, Deserialize)]
struct EntryDoc {
    offset: Vec<i64>,
    value: f64,
}

impl From<&CouplingStencil> for StencilDoc {
    fn from(s: &CouplingStencil) -> Self {
        let block = |b: &BlockStencil| BlockDoc {
            entries: b
                .entries()
                .map(|(k, &v)| EntryDoc { offset: k[..s.dim].to_vec(), value: v })
                .collect(),
            tail: b.tail().copied(),
        };
        StencilDoc {
            dimension: s.dim,
            blocks: BlocksDoc { q: block(&s.q), p: block(&s.p), qp: block(&s.qp) },
        }
    }
}

impl TryFrom<StencilDoc> for CouplingStencil {
    type Error = LatticeError;

    fn try_from(doc: StencilDoc) -> Result<Self> {
        let block = |b: BlockDoc| -> Result<BlockStencil> {
            let mut st = BlockStencil::from_entries(
                doc.dimension,
                b.entries.into_iter().map(|e| (e.offset, e.value)),
            )?;
            if let Some(t) = b.tail {
                st = st.with_tail(t);
            }
            Ok(st)
        };
        CouplingStencil::new(
            doc.dimension,
            block(doc.blocks.q)?,
            block(doc.blocks.p)?,
            block(doc.blocks.qp)?,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zeta_reference_values() {
        assert!((riemann_zeta(2.0) - std::f64::consts::PI.powi(2) / 6.0).abs() < 1e-12);
        assert!((riemann_zeta(3.0) - 1.202_056_903_159_594_3).abs() < 1e-12);
        assert!((dirichlet_eta(3.0) - 0.75 * riemann_zeta(3.0)).abs() < 1e-12);
    }

    #[test]
    fn klein_gordon_coefficients() {
        let s = klein_gordon(0.5).unwrap();
        assert_eq!(s.block(Block::Q).coefficient(&[0]), 1.0);
        assert_eq!(s.block(Block::Q).coefficient(&[1]), -0.25);
        assert_eq!(s.block(Block::Q).coefficient(&[-1]), -0.25);
        assert_eq!(s.block(Block::P).coefficient(&[0]), 1.0);
        assert!(s.block(Block::QP).is_empty());
        assert!(klein_gordon(1.5).is_err());
    }

    #[test]
    fn power_law_needs_summable_exponent() {
        assert!(matches!(
            power_law(1.0, 0.5, 1, None),
            Err(LatticeError::NonSummable { .. })
        ));
        let s = power_law(3.0, 0.5, 1, None).unwrap();
        // positive sign: on-site 3 c zeta(3)/2
        let v0 = s.block(Block::Q).coefficient(&[0]);
        assert!((v0 - 1.5 * 0.5 * riemann_zeta(3.0)).abs() < 1e-12);
        assert!((s.block(Block::Q).coefficient(&[2]) - 0.5 / 8.0).abs() < 1e-15);
    }

    #[test]
    fn point_symmetrize_splits_single_offset() {
        // QP with a single +1 coefficient g becomes +-1 with g/2 each
        let qp = BlockStencil::from_entries(1, [(vec![1], 0.8)]).unwrap();
        let s = CouplingStencil::new(
            1,
            BlockStencil::from_entries(1, [(vec![0], 1.0)]).unwrap(),
            BlockStencil::from_entries(1, [(vec![0], 1.0)]).unwrap(),
            qp,
        )
        .unwrap();
        let sym = s.point_symmetrize();
        assert!((sym.block(Block::QP).coefficient(&[1]) - 0.4).abs() < 1e-15);
        assert!((sym.block(Block::QP).coefficient(&[-1]) - 0.4).abs() < 1e-15);
        // already symmetric stencil is unchanged
        let again = sym.point_symmetrize();
        assert_eq!(again.block(Block::QP), sym.block(Block::QP));
    }

    #[test]
    fn dense_hamiltonian_is_circulant_and_symmetric() {
        let s = klein_gordon(0.3).unwrap();
        let h = s.dense_hamiltonian(6).unwrap();
        let hq = h.h_q();
        for i in 0..6 {
            assert_eq!(hq[(i, i)], 1.0);
            assert_eq!(hq[(i, (i + 1) % 6)], -0.15);
        }
    }

    #[test]
    fn dense_2d_wrapping() {
        // 2D nearest-neighbor: on-site 2, four neighbors -1/2
        let q = BlockStencil::from_entries(
            2,
            [
                (vec![0, 0], 2.0),
                (vec![1, 0], -0.5),
                (vec![-1, 0], -0.5),
                (vec![0, 1], -0.5),
                (vec![0, -1], -0.5),
            ],
        )
        .unwrap();
        let p = BlockStencil::from_entries(2, [(vec![0, 0], 1.0)]).unwrap();
        let s = CouplingStencil::new(2, q, p, BlockStencil::default()).unwrap();
        let n = 4;
        let h = s.dense_hamiltonian(n).unwrap();
        let hq = h.h_q();
        // site (0,0) couples to (1,0), (3,0), (0,1), (0,3)
        assert_eq!(hq[(0, 0)], 2.0);
        assert_eq!(hq[(0, 1 * n)], -0.5);
        assert_eq!(hq[(0, 3 * n)], -0.5);
        assert_eq!(hq[(0, 1)], -0.5);
        assert_eq!(hq[(0, 3)], -0.5);
        assert_eq!(hq[(0, 2)], 0.0);
    }

    #[test]
    fn json_round_trip() {
        let s = power_law(3.0, -0.5, 1, None).unwrap();
        let json = s.to_json();
        assert!(json.contains("\"dimension\""));
        assert!(json.contains("\"onSite\""));
        let back = CouplingStencil::from_json(&json).unwrap();
        assert_eq!(back, s);
        let kg = klein_gordon(0.7).unwrap();
        let back = CouplingStencil::from_json(&kg.to_json()).unwrap();
        assert_eq!(back, kg);
    }

    #[test]
    fn rejects_asymmetric_q_block() {
        let q = BlockStencil::from_entries(1, [(vec![0], 1.0), (vec![1], 0.5)]).unwrap();
        let p = BlockStencil::from_entries(1, [(vec![0], 1.0)]).unwrap();
        assert!(matches!(
            CouplingStencil::new(1, q, p, BlockStencil::default()),
            Err(LatticeError::AsymmetricBlock("Q"))
        ));
    }
}
