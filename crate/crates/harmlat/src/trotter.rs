//! Generators of translation (and reflection) invariant symplectic
//! transformations, their commutator algebra, and Lie-Trotter compilation.
//!
//! A one-parameter symplectic group `e^{tA}` has `A sigma` symmetric, so
//! every generator is
//!
//! ```text
//! A = [[-C, P], [-Q, C^T]]
//! ```
//!
//! with `P`, `Q` symmetric and, for the translation invariant ring, all
//! blocks circulant (`C` additionally symmetric under reflection symmetry).
//! Circulants commute, which collapses the commutator of two generators to
//! closed block formulas. The compiler uses those commutators — realized
//! physically by group-commutator product formulas — to span the full
//! reflection-symmetric generator space starting from local generators plus
//! one nearest-neighbor interaction, then emits a first-order product
//! approximation of a target evolution with a measured operator-norm error.

use std::collections::HashMap;

use nalgebra::DMatrix;
use serde_json::{json, Value};
use thiserror::Error;

use crate::linalg::{max_abs, op_norm};
use crate::symplectic::QuadraticHamiltonian;

#[derive(Debug, Error)]
pub enum TrotterError {
    #[error("matrix block is not circulant (defect {0:.3e})")]
    NotCirculant(f64),

    #[error("blocks must be symmetric circulants: {0}")]
    BadBlock(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// The gate set does not generate the reflection-symmetric algebra (the
    /// interaction is purely local, or the target lies outside the span).
    #[error("gate set is not universal for this target (residual {0:.3e})")]
    NotUniversalGateSet(f64),

    /// The adaptive compiler hit its gate budget; carries the best error.
    #[error("gate budget exceeded; best achieved error {0:.3e}")]
    BudgetExceeded(f64),
}

impl TrotterError {
    pub fn name(&self) -> &'static str {
        match self {
            Self::NotCirculant(_) => "NotCirculant",
            Self::BadBlock(_) => "BadBlock",
            Self::DimensionMismatch(_) => "DimensionMismatch",
            Self::NotUniversalGateSet(_) => "NotUniversalGateSet",
            Self::BudgetExceeded(_) => "BudgetExceeded",
        }
    }
}

pub type Result<T> = std::result::Result<T, TrotterError>;

/// Cyclic convolution of circulant first rows (the product of circulants).
fn circ_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let n = a.len();
    let mut out = vec![0.0; n];
    for (i, &x) in a.iter().enumerate() {
        if x == 0.0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            out[(i + j) % n] += x * y;
        }
    }
    out
}

/// First row of the transpose of a circulant.
fn circ_transpose(a: &[f64]) -> Vec<f64> {
    let n = a.len();
    (0..n).map(|k| a[(n - k) % n]).collect()
}

fn circ_is_symmetric(a: &[f64], tol: f64) -> bool {
    let n = a.len();
    (0..n).all(|k| (a[k] - a[(n - k) % n]).abs() <= tol)
}

/// Dense circulant from its first row: `M[i][j] = row[(i - j) mod n]`.
fn circ_dense(row: &[f64]) -> DMatrix<f64> {
    let n = row.len();
    DMatrix::from_fn(n, n, |i, j| row[(i + n - j) % n])
}

/// A generator of translationally invariant symplectic transformations,
/// stored as the circulant first rows of its `P`, `Q`, `C` blocks.
#[derive(Clone, Debug, PartialEq)]
pub struct Generator {
    p: Vec<f64>,
    q: Vec<f64>,
    c: Vec<f64>,
}

impl Generator {
    /// Build from first rows; `P` and `Q` must be symmetric circulants.
    pub fn new(p: Vec<f64>, q: Vec<f64>, c: Vec<f64>) -> Result<Self> {
        let n = p.len();
        if q.len() != n || c.len() != n {
            return Err(TrotterError::DimensionMismatch(format!(
                "block rows have lengths {}, {}, {}",
                p.len(),
                q.len(),
                c.len()
            )));
        }
        for (row, name) in [(&p, "P"), (&q, "Q")] {
            if !circ_is_symmetric(row, 1e-12) {
                return Err(TrotterError::BadBlock(format!("{name} is not symmetric")));
            }
        }
        Ok(Self { p, q, c })
    }

    pub fn zero(n: usize) -> Self {
        Self { p: vec![0.0; n], q: vec![0.0; n], c: vec![0.0; n] }
    }

    /// A local generator: all blocks proportional to the identity.
    pub fn local(n: usize, p0: f64, q0: f64, c0: f64) -> Self {
        let mut g = Self::zero(n);
        g.p[0] = p0;
        g.q[0] = q0;
        g.c[0] = c0;
        g
    }

    pub fn sites(&self) -> usize {
        self.p.len()
    }

    pub fn p_row(&self) -> &[f64] {
        &self.p
    }

    pub fn q_row(&self) -> &[f64] {
        &self.q
    }

    pub fn c_row(&self) -> &[f64] {
        &self.c
    }

    /// `C = C^T` (reflection symmetry).
    pub fn is_reflection_symmetric(&self, tol: f64) -> bool {
        circ_is_symmetric(&self.c, tol)
    }

    /// Dense `A = [[-C, P], [-Q, C^T]]` in blocked ordering.
    pub fn assemble(&self) -> DMatrix<f64> {
        let n = self.sites();
        let mut a = DMatrix::zeros(2 * n, 2 * n);
        let c = circ_dense(&self.c);
        a.view_mut((0, 0), (n, n)).copy_from(&(-&c));
        a.view_mut((0, n), (n, n)).copy_from(&circ_dense(&self.p));
        a.view_mut((n, 0), (n, n)).copy_from(&(-circ_dense(&self.q)));
        a.view_mut((n, n), (n, n)).copy_from(&c.transpose());
        a
    }

    /// `e^{A t}` (dense).
    pub fn exp(&self, t: f64) -> DMatrix<f64> {
        (self.assemble() * t).exp()
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            p: self.p.iter().map(|x| x * s).collect(),
            q: self.q.iter().map(|x| x * s).collect(),
            c: self.c.iter().map(|x| x * s).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            p: self.p.iter().zip(&other.p).map(|(a, b)| a + b).collect(),
            q: self.q.iter().zip(&other.q).map(|(a, b)| a + b).collect(),
            c: self.c.iter().zip(&other.c).map(|(a, b)| a + b).collect(),
        }
    }

    /// Coordinates in the reflection-symmetric coefficient space: the
    /// distinct offsets `0..=n/2` of each block.
    pub fn coefficient_vector(&self) -> Vec<f64> {
        let n = self.sites();
        let k = n / 2 + 1;
        let mut v = Vec::with_capacity(3 * k);
        for row in [&self.p, &self.q, &self.c] {
            for off in 0..k {
                // average the two representatives for robustness
                v.push(0.5 * (row[off] + row[(n - off) % n]));
            }
        }
        v
    }

    fn norm(&self) -> f64 {
        self.coefficient_vector().iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    fn blocks_json(&self) -> Value {
        json!({ "P": self.p, "Q": self.q, "C": self.c })
    }
}

fn circulant_first_row(m: &DMatrix<f64>) -> Result<Vec<f64>> {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            worst = worst.max((m[(i, j)] - m[((i + 1) % n, (j + 1) % n)]).abs());
        }
    }
    if worst > 1e-10 * (1.0 + max_abs(m)) {
        return Err(TrotterError::NotCirculant(worst));
    }
    Ok((0..n).map(|i| m[(i, 0)]).collect())
}

/// The generator of the time evolution of a translationally invariant
/// Hamiltonian: `A = sigma H`, i.e. `P = H_P`, `Q = H_Q`, `C = -H_QP^T`.
pub fn generator_from_hamiltonian(h: &QuadraticHamiltonian) -> Result<Generator> {
    let p = circulant_first_row(h.h_p())?;
    let q = circulant_first_row(h.h_q())?;
    let c_row = circulant_first_row(&(-h.h_qp().transpose()))?;
    Generator::new(p, q, c_row)
}

/// Commutator `A'' = [A, A']` of circulant generators, by the block
/// formulas (circulants commute):
///
/// ```text
/// P'' = C'P - CP' + PC'^T - P'C^T
/// Q'' = C^T Q' + Q'C - QC' - C'^T Q
/// C'' = PQ' - P'Q
/// ```
///
/// With reflection-symmetric inputs these reduce to `P'' = 2(C'P - CP')`
/// and `Q'' = 2(CQ' - C'Q)`; `C''` is symmetric even for asymmetric `C`,
/// `C'`, so the commutator never leaves the reflection-symmetric algebra.
pub fn commutator_blocks(a: &Generator, b: &Generator) -> Result<Generator> {
    if a.sites() != b.sites() {
        return Err(TrotterError::DimensionMismatch(format!(
            "{} vs {} sites",
            a.sites(),
            b.sites()
        )));
    }
    let ct = circ_transpose(&a.c);
    let bt = circ_transpose(&b.c);
    let sub = |x: Vec<f64>, y: Vec<f64>| -> Vec<f64> {
        x.into_iter().zip(y).map(|(u, v)| u - v).collect()
    };
    let add = |x: Vec<f64>, y: Vec<f64>| -> Vec<f64> {
        x.into_iter().zip(y).map(|(u, v)| u + v).collect()
    };
    let p2 = add(
        sub(circ_mul(&b.c, &a.p), circ_mul(&a.c, &b.p)),
        sub(circ_mul(&a.p, &bt), circ_mul(&b.p, &ct)),
    );
    let q2 = sub(
        add(circ_mul(&ct, &b.q), circ_mul(&b.q, &a.c)),
        add(circ_mul(&a.q, &b.c), circ_mul(&bt, &a.q)),
    );
    let c2 = sub(circ_mul(&a.p, &b.q), circ_mul(&b.p, &a.q));
    Generator::new(p2, q2, c2)
}

/// Which block to extract.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum BlockKind {
    P,
    Q,
    C,
}

/// Isolate one block of a reflection-symmetric generator by the exact
/// commutator sequences with local generators:
///
/// - `P`: commute with `C' = 1/2` (gives `(P, -Q, 0)`), then `Q' = 1`
///   (gives `(0, 0, P)`), then `P' = -1/2`.
/// - `Q`: commute with `C' = 1/2`, then `P' = 1` (gives `(0, 0, Q)`), then
///   `Q' = 1/2`.
/// - `C`: subtract the extracted `P` and `Q` parts from `A` (a linear
///   combination, realizable by the first-order product formula).
pub fn extract_block(a: &Generator, which: BlockKind) -> Result<Generator> {
    let n = a.sites();
    let loc = |p0: f64, q0: f64, c0: f64| Generator::local(n, p0, q0, c0);
    match which {
        BlockKind::P => {
            let x1 = commutator_blocks(a, &loc(0.0, 0.0, 0.5))?;
            let x2 = commutator_blocks(&x1, &loc(0.0, 1.0, 0.0))?;
            commutator_blocks(&x2, &loc(-0.5, 0.0, 0.0))
        }
        BlockKind::Q => {
            let y1 = commutator_blocks(a, &loc(0.0, 0.0, 0.5))?;
            let y2 = commutator_blocks(&y1, &loc(1.0, 0.0, 0.0))?;
            commutator_blocks(&y2, &loc(0.0, 0.5, 0.0))
        }
        BlockKind::C => {
            let p = extract_block(a, BlockKind::P)?;
            let q = extract_block(a, BlockKind::Q)?;
            Ok(a.add(&p.scaled(-1.0)).add(&q.scaled(-1.0)))
        }
    }
}

/// Result of a first-order product evaluation.
#[derive(Clone, Debug)]
pub struct TrotterResult {
    pub product: DMatrix<f64>,
    pub exact: DMatrix<f64>,
    /// `|product - exact|` in operator norm.
    pub error: f64,
}

/// First-order Lie-Trotter product `(prod_k e^{A_k w_k t/n})^n` against the
/// exact `e^{sum A_k w_k t}`.
pub fn trotter_product(terms: &[(Generator, f64)], t: f64, steps: usize) -> TrotterResult {
    let n2 = 2 * terms[0].0.sites();
    let mut step = DMatrix::<f64>::identity(n2, n2);
    for (g, w) in terms {
        step = step * g.exp(w * t / steps as f64);
    }
    let mut product = DMatrix::<f64>::identity(n2, n2);
    for _ in 0..steps {
        product = &product * &step;
    }
    let mut total = Generator::zero(terms[0].0.sites());
    for (g, w) in terms {
        total = total.add(&g.scaled(*w));
    }
    let exact = total.exp(t);
    let error = op_norm(&(&product - &exact));
    TrotterResult { product, exact, error }
}

/// Group-commutator approximant
/// `(e^{A/sqrt(n)} e^{B/sqrt(n)} e^{-A/sqrt(n)} e^{-B/sqrt(n)})^n`
/// against `e^{[A, B]}`; the error decays as `1/sqrt(n)`.
pub fn commutator_approximant(a: &Generator, b: &Generator, steps: usize) -> Result<TrotterResult> {
    let comm = commutator_blocks(a, b)?;
    let n2 = 2 * a.sites();
    let s = 1.0 / (steps as f64).sqrt();
    let cycle = a.exp(s) * b.exp(s) * a.exp(-s) * b.exp(-s);
    let mut product = DMatrix::<f64>::identity(n2, n2);
    for _ in 0..steps {
        product = &product * &cycle;
    }
    let exact = comm.exp(1.0);
    let error = op_norm(&(&product - &exact));
    Ok(TrotterResult { product, exact, error })
}

/// One gate of a compiled sequence: a primitive generator id with a signed
/// duration.
#[derive(Clone, Debug)]
pub struct Gate {
    pub id: String,
    pub duration: f64,
}

/// A compiled simulation sequence with its measured error.
#[derive(Clone, Debug)]
pub struct GateSequence {
    pub gates: Vec<Gate>,
    pub achieved_error: f64,
    pub target: Generator,
    /// Errors measured at each adaptive refinement (monotone up to jitter).
    pub error_history: Vec<f64>,
}

impl GateSequence {
    pub fn to_json_value(&self) -> Value {
        json!({
            "gates": self.gates.iter().map(|g| json!({
                "id": g.id, "duration": g.duration,
            })).collect::<Vec<_>>(),
            "achievedError": self.achieved_error,
            "target": self.target.blocks_json(),
        })
    }
}

/// Knobs for the adaptive compiler.
#[derive(Clone, Debug)]
pub struct CompileOptions {
    /// Initial first-order Trotter steps.
    pub initial_steps: usize,
    /// Initial group-commutator cycles per nesting level.
    pub initial_commutator_steps: usize,
    /// Abort when the emitted sequence would exceed this many gates.
    pub max_gates: usize,
}

impl Default for CompileOptions {
    fn default() -> Self {
        Self { initial_steps: 2, initial_commutator_steps: 2, max_gates: 1 << 21 }
    }
}

/// The realizable expression of a basis generator.
#[derive(Clone, Debug)]
enum Expr {
    Prim(usize),
    Comm(Box<Expr>, Box<Expr>),
}

struct Realized {
    gen: Generator,
    expr: Expr,
}

const GATE_IDS: [&str; 4] = ["local_p", "local_q", "local_c", "int"];

/// Compile a target evolution `e^{A t}` from the gate set
/// `{local generators} + {one nearest-neighbor interaction}`.
///
/// Iterated commutators of the gate set (realized by group-commutator
/// product formulas) span the reflection-symmetric circulant algebra; the
/// target is expressed as a linear combination of the generated basis and
/// emitted as a first-order product whose operator-norm error is measured
/// densely and driven below `eps` by doubling the step counts.
pub fn compile_simulation(
    target: &Generator,
    a_int: &Generator,
    t: f64,
    eps: f64,
    opts: &CompileOptions,
) -> Result<GateSequence> {
    let n = target.sites();
    if a_int.sites() != n {
        return Err(TrotterError::DimensionMismatch(format!(
            "target has {n} sites, interaction {}",
            a_int.sites()
        )));
    }
    for (g, name) in [(target, "target"), (a_int, "interaction")] {
        if !g.is_reflection_symmetric(1e-10) {
            return Err(TrotterError::BadBlock(format!("{name} is not reflection symmetric")));
        }
    }
    let primitives = [
        Generator::local(n, 1.0, 0.0, 0.0),
        Generator::local(n, 0.0, 1.0, 0.0),
        Generator::local(n, 0.0, 0.0, 1.0),
        a_int.clone(),
    ];

    // --- span closure over iterated commutators --------------------------
    let dim = 3 * (n / 2 + 1);
    let mut realized: Vec<Realized> = primitives
        .iter()
        .enumerate()
        .map(|(k, g)| Realized { gen: g.clone(), expr: Expr::Prim(k) })
        .collect();
    let mut basis: Vec<Vec<f64>> = Vec::new(); // orthonormalized coefficient vectors
    let mut member_of_span: Vec<usize> = Vec::new(); // realized idx per basis vector
    for (k, r) in realized.iter().enumerate() {
        if let Some(v) = orthonormal_residual(&basis, &r.gen.coefficient_vector()) {
            basis.push(v);
            member_of_span.push(k);
        }
    }
    let mut frontier = 0;
    while basis.len() < dim {
        let mut grown = false;
        let upto = realized.len();
        for i in frontier..upto {
            for j in 0..upto {
                if i == j {
                    continue;
                }
                let cand = commutator_blocks(&realized[i].gen, &realized[j].gen)?;
                let scale = realized[i].gen.norm() * realized[j].gen.norm();
                if cand.norm() <= 1e-10 * scale.max(1e-300) {
                    continue;
                }
                if let Some(v) = orthonormal_residual(&basis, &cand.coefficient_vector()) {
                    basis.push(v);
                    member_of_span.push(realized.len());
                    realized.push(Realized {
                        gen: cand,
                        expr: Expr::Comm(
                            Box::new(realized[i].expr.clone()),
                            Box::new(realized[j].expr.clone()),
                        ),
                    });
                    grown = true;
                    if basis.len() == dim {
                        break;
                    }
                }
            }
            if basis.len() == dim {
                break;
            }
        }
        if !grown {
            break;
        }
        frontier = 0; // revisit all pairs with the enlarged set
        if realized.len() > 16 * dim {
            break;
        }
    }

    // --- express the target in the realized set --------------------------
    let members: Vec<&Realized> = member_of_span.iter().map(|&k| &realized[k]).collect();
    let cols = members.len();
    let a = DMatrix::from_fn(dim, cols, |r, c| members[c].gen.coefficient_vector()[r]);
    let b = nalgebra::DVector::from_vec(target.coefficient_vector());
    let svd = a.clone().svd(true, true);
    let lambda = svd
        .solve(&b, 1e-12)
        .map_err(|_| TrotterError::NotUniversalGateSet(f64::INFINITY))?;
    let residual = op_norm(&DMatrix::from_column_slice(dim, 1, (&a * &lambda - &b).as_slice()));
    if residual > 1e-10 * target.norm().max(1.0) {
        return Err(TrotterError::NotUniversalGateSet(residual));
    }
    let terms: Vec<(&Realized, f64)> = members
        .iter()
        .zip(lambda.iter())
        .filter(|(_, &l)| l.abs() > 1e-12 * target.norm().max(1.0))
        .map(|(m, &l)| (*m, l))
        .collect();

    // --- adaptive emission ------------------------------------------------
    let exact = target.exp(t);
    let mut steps = opts.initial_steps;
    let mut comm_steps = opts.initial_commutator_steps;
    let mut cache: HashMap<(usize, u64), DMatrix<f64>> = HashMap::new();
    let mut history = Vec::new();
    let mut best: Option<GateSequence> = None;
    loop {
        let mut gates: Vec<Gate> = Vec::new();
        let mut overflow = false;
        'emit: for _ in 0..steps {
            for (m, l) in &terms {
                emit(&m.expr, l * t / steps as f64, comm_steps, &mut gates);
                if gates.len() > opts.max_gates {
                    overflow = true;
                    break 'emit;
                }
            }
        }
        if !overflow {
            let product = evaluate_gates(&gates, &primitives, &mut cache);
            let error = op_norm(&(&product - &exact));
            history.push(error);
            let seq = GateSequence {
                gates,
                achieved_error: error,
                target: target.clone(),
                error_history: history.clone(),
            };
            let better = best
                .as_ref()
                .map(|b| error < b.achieved_error)
                .unwrap_or(true);
            if better {
                best = Some(seq);
            }
            if error <= eps {
                return Ok(best.unwrap());
            }
        }
        if overflow && best.is_some() {
            return Err(TrotterError::BudgetExceeded(best.unwrap().achieved_error));
        }
        if overflow {
            return Err(TrotterError::BudgetExceeded(f64::INFINITY));
        }
        steps *= 2;
        comm_steps *= 2;
    }
}

/// Emit gates realizing `e^{G s}` for a realized expression.
///
/// Commutators use the symmetrized group-commutator cycle
/// `GC(a) GC(-a) = e^{2 a^2 [X, Y]} + O(a^4)` with
/// `GC(a) = e^{aX} e^{aY} e^{-aX} e^{-aY}`: the odd-order error of the
/// plain cycle cancels, turning the `1/sqrt(n)` convergence into `1/n`,
/// which keeps nested commutators within a realistic gate budget.
fn emit(expr: &Expr, s: f64, comm_steps: usize, gates: &mut Vec<Gate>) {
    match expr {
        Expr::Prim(k) => gates.push(Gate { id: GATE_IDS[*k].to_string(), duration: s }),
        Expr::Comm(x, y) => {
            // negative s through [Y, X] = -[X, Y]
            let (x, y) = if s >= 0.0 { (x, y) } else { (y, x) };
            let a = (s.abs() / (2.0 * comm_steps as f64)).sqrt();
            for _ in 0..comm_steps {
                for sign in [1.0, -1.0] {
                    emit(x, sign * a, comm_steps, gates);
                    emit(y, sign * a, comm_steps, gates);
                    emit(x, -sign * a, comm_steps, gates);
                    emit(y, -sign * a, comm_steps, gates);
                }
            }
        }
    }
}

/// Dense product of a sequence's exact gate exponentials against the gate
/// set defined by one interaction generator (the locals are implied). This
/// is the verification path of the compiler, exposed for re-checking
/// sequences.
pub fn evaluate_sequence(gates: &[Gate], a_int: &Generator) -> DMatrix<f64> {
    let n = a_int.sites();
    let primitives = [
        Generator::local(n, 1.0, 0.0, 0.0),
        Generator::local(n, 0.0, 1.0, 0.0),
        Generator::local(n, 0.0, 0.0, 1.0),
        a_int.clone(),
    ];
    let mut cache = HashMap::new();
    evaluate_gates(gates, &primitives, &mut cache)
}

fn evaluate_gates(
    gates: &[Gate],
    primitives: &[Generator; 4],
    cache: &mut HashMap<(usize, u64), DMatrix<f64>>,
) -> DMatrix<f64> {
    let n2 = 2 * primitives[0].sites();
    let mut product = DMatrix::<f64>::identity(n2, n2);
    for g in gates {
        let k = GATE_IDS.iter().position(|&id| id == g.id).expect("known gate id");
        let key = (k, g.duration.to_bits());
        let u = cache
            .entry(key)
            .or_insert_with(|| primitives[k].exp(g.duration));
        product = product * &*u;
    }
    product
}

/// Gram-Schmidt residual against an orthonormal set; `None` when the vector
/// lies in the span.
fn orthonormal_residual(basis: &[Vec<f64>], v: &[f64]) -> Option<Vec<f64>> {
    let mut r = v.to_vec();
    for b in basis {
        let dot: f64 = b.iter().zip(&r).map(|(x, y)| x * y).sum();
        for (ri, bi) in r.iter_mut().zip(b) {
            *ri -= dot * bi;
        }
    }
    let norm: f64 = r.iter().map(|x| x * x).sum::<f64>().sqrt();
    let scale: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 1e-10 * scale.max(1.0) {
        for x in r.iter_mut() {
            *x /= norm;
        }
        Some(r)
    } else {
        None
    }
}
