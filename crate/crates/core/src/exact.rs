//! Exhaustive solver for the k-th orthogonal sparse component.
//!
//! For every support `Y` with `|Y| = p` the previous components are
//! restricted to `Y`, orthonormalized, and the top eigenpair of
//! `P_Y Q_Y P_Y` gives the best unit vector on `Y` orthogonal to all of them.
//! The best support wins; ties go to the lexicographically smallest `Y`.

use std::fmt;
use std::ops::AddAssign;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bnb::KthSolver;
use crate::error::{Result, SpcaError};
use crate::linalg::{
    canonical_sign, complement_projector, embed, gram_schmidt, normalize, restrict, sym_eig_max, Combinations,
    IndexSet, MatrixFingerprint, OrthonormalBasis, SymMatrix, GS_DROP_TOL,
};

/// Two support values closer than this are treated as tied.
pub const TIE_TOL: f64 = 1e-12;
/// Below this norm a projected eigenvector is considered to have vanished.
pub const VANISH_TOL: f64 = 1e-10;

const CHUNK: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverMode {
    Exact,
    Bnb,
    Threshold,
    Deflation,
}

impl SolverMode {
    /// Whether the mode enforces orthogonality between components.
    pub fn is_orthogonal(self) -> bool {
        !matches!(self, SolverMode::Deflation)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SolverMode::Exact => "exact",
            SolverMode::Bnb => "bnb",
            SolverMode::Threshold => "threshold",
            SolverMode::Deflation => "deflation",
        }
    }
}

impl fmt::Display for SolverMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SolverMode {
    type Err = SpcaError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "exact" => Ok(SolverMode::Exact),
            "bnb" => Ok(SolverMode::Bnb),
            "threshold" => Ok(SolverMode::Threshold),
            "deflation" => Ok(SolverMode::Deflation),
            other => Err(SpcaError::InvalidInput(format!("unknown solver mode '{other}'"))),
        }
    }
}

/// A unit vector stored by its support and the values on it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseComponent {
    pub support: IndexSet,
    pub values: Vec<f64>,
    /// `xᵀQx` for the matrix the component was computed against.
    pub variance: f64,
    /// Set when no `p`-sparse direction was feasible and a dense
    /// orthogonal direction was used instead.
    pub sparsity_relaxed: bool,
}

impl SparseComponent {
    /// Wraps a dense vector, keeping its nonzero coordinates as the support.
    pub fn from_dense(q: &SymMatrix, x: &[f64], sparsity_relaxed: bool) -> Result<Self> {
        if x.len() != q.n() {
            return Err(SpcaError::DimensionMismatch {
                expected: q.n(),
                got: x.len(),
            });
        }
        let support = IndexSet::from_mask(&x.iter().map(|v| *v != 0.0).collect::<Vec<_>>());
        let values = restrict(x, &support)?;
        Ok(Self {
            support,
            values,
            variance: q.quad_form(x),
            sparsity_relaxed,
        })
    }

    /// Zero-padded vector in `ℝⁿ`.
    pub fn dense(&self) -> Vec<f64> {
        let mut v = vec![0.0; self.support.parent_dim()];
        for (&j, &x) in self.support.indices().iter().zip(&self.values) {
            v[j] = x;
        }
        v
    }

    pub fn dim(&self) -> usize {
        self.support.parent_dim()
    }

    /// Number of exactly nonzero values.
    pub fn nnz(&self) -> usize {
        self.values.iter().filter(|v| **v != 0.0).count()
    }
}

/// Work counters accumulated by the solvers.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolveStats {
    /// Supports on which a reduced eigenproblem was solved.
    pub support_evaluations: u64,
    pub nodes_explored: u64,
    pub nodes_pruned: u64,
}

impl AddAssign for SolveStats {
    fn add_assign(&mut self, rhs: Self) {
        self.support_evaluations += rhs.support_evaluations;
        self.nodes_explored += rhs.nodes_explored;
        self.nodes_pruned += rhs.nodes_pruned;
    }
}

/// An ordered sequence of sparse components for one matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpcaSolution {
    pub components: Vec<SparseComponent>,
    pub matrix: MatrixFingerprint,
    pub p: usize,
    pub mode: SolverMode,
    /// Per-subproblem optimality tolerance; 0 for exact solves.
    pub eps: f64,
    /// Threshold used by the block decomposition; 0 otherwise.
    pub delta: f64,
    pub stats: SolveStats,
}

impl SpcaSolution {
    pub fn new(q: &SymMatrix, p: usize, mode: SolverMode, eps: f64) -> Self {
        Self {
            components: Vec::new(),
            matrix: q.fingerprint(),
            p,
            mode,
            eps,
            delta: 0.0,
            stats: SolveStats::default(),
        }
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn variances(&self) -> Vec<f64> {
        self.components.iter().map(|c| c.variance).collect()
    }

    pub fn total_variance(&self) -> f64 {
        self.components.iter().map(|c| c.variance).sum()
    }

    pub fn dense_components(&self) -> Vec<Vec<f64>> {
        self.components.iter().map(SparseComponent::dense).collect()
    }

    /// Per-step suboptimality the producing solver guarantees: `2pδ + ε`.
    pub fn guarantee_slack(&self) -> f64 {
        self.eps + 2.0 * self.p as f64 * self.delta
    }

    pub fn any_relaxed(&self) -> bool {
        self.components.iter().any(|c| c.sparsity_relaxed)
    }
}

/// Outcome of the reduced eigenproblem on one support.
#[derive(Debug, Clone, PartialEq)]
pub enum ReducedPca {
    Feasible {
        /// `zᵀ Q_Y z`, the largest attainable variance on the support.
        lambda: f64,
        /// Unit vector in support coordinates, orthogonal to every restricted
        /// previous component.
        z: Vec<f64>,
        /// Dimension of the span of the restricted previous components.
        m: usize,
    },
    /// The restricted previous components span the whole support.
    Infeasible { m: usize },
}

impl ReducedPca {
    pub fn lambda(&self) -> Option<f64> {
        match self {
            ReducedPca::Feasible { lambda, .. } => Some(*lambda),
            ReducedPca::Infeasible { .. } => None,
        }
    }
}

/// Best unit vector supported on `support` and orthogonal to `previous`.
pub fn reduced_pca_on_support(q: &SymMatrix, support: &IndexSet, previous: &[SparseComponent]) -> Result<ReducedPca> {
    check_support(q, support)?;
    let prev = dense_previous(q, previous)?;
    Ok(reduced_pca_dense(q, support, &prev))
}

pub(crate) fn check_support(q: &SymMatrix, support: &IndexSet) -> Result<()> {
    if support.parent_dim() != q.n() {
        return Err(SpcaError::DimensionMismatch {
            expected: q.n(),
            got: support.parent_dim(),
        });
    }
    if support.is_empty() {
        return Err(SpcaError::InvalidInput("support must be non-empty".into()));
    }
    Ok(())
}

pub(crate) fn dense_previous(q: &SymMatrix, previous: &[SparseComponent]) -> Result<Vec<Vec<f64>>> {
    previous
        .iter()
        .map(|c| {
            if c.dim() == q.n() {
                Ok(c.dense())
            } else {
                Err(SpcaError::DimensionMismatch {
                    expected: q.n(),
                    got: c.dim(),
                })
            }
        })
        .collect()
}

/// Orthonormal basis of the previous components restricted to `support`.
pub(crate) fn restricted_basis(support: &IndexSet, previous: &[Vec<f64>]) -> OrthonormalBasis {
    let mut basis = OrthonormalBasis::empty(support.len());
    let mut v = vec![0.0; support.len()];
    for x in previous {
        for (slot, &j) in v.iter_mut().zip(support.indices()) {
            *slot = x[j];
        }
        if v.iter().any(|c| *c != 0.0) {
            basis.push(&v, GS_DROP_TOL);
        }
    }
    basis
}

pub(crate) fn reduced_pca_dense(q: &SymMatrix, support: &IndexSet, previous: &[Vec<f64>]) -> ReducedPca {
    let qy = q.principal_submatrix(support);
    let basis = restricted_basis(support, previous);
    let m = basis.len();
    if basis.spans_ambient() {
        return ReducedPca::Infeasible { m };
    }
    let mut z = if basis.is_empty() {
        sym_eig_max(&qy).1
    } else {
        let projected = qy.sandwich(&complement_projector(&basis));
        let (_, w) = sym_eig_max(&projected);
        let mut z = basis.project_out(&w);
        if normalize(&mut z) <= VANISH_TOL {
            // every direction left on the support has non-positive curvature,
            // so the top eigenvector of P Q P sits in span(U); search the
            // complement directly
            z = top_direction_in(&qy, &basis.complement());
        }
        z
    };
    canonical_sign(&mut z);
    ReducedPca::Feasible {
        lambda: qy.quad_form(&z),
        z,
        m,
    }
}

/// Top eigenvector of `Vᵀ M V`, mapped back through `V`.
pub(crate) fn top_direction_in(m: &SymMatrix, span: &OrthonormalBasis) -> Vec<f64> {
    let vs = span.vectors();
    let mv: Vec<Vec<f64>> = vs.iter().map(|v| m.mul_vec(v)).collect();
    let compressed = SymMatrix::from_upper_fn(vs.len(), |a, b| crate::linalg::dot(&vs[a], &mv[b]));
    let (_, y) = sym_eig_max(&compressed);
    let mut x = vec![0.0; span.ambient_dim()];
    for (coef, v) in y.iter().zip(vs) {
        for (xi, vi) in x.iter_mut().zip(v) {
            *xi += coef * vi;
        }
    }
    normalize(&mut x);
    x
}

pub(crate) fn validate_p(q: &SymMatrix, p: usize) -> Result<()> {
    if p == 0 || p > q.n() {
        return Err(SpcaError::InvalidSparsity { p, n: q.n() });
    }
    Ok(())
}

pub(crate) fn validate_k(q: &SymMatrix, k: usize) -> Result<()> {
    if k == 0 || k > q.n() {
        return Err(SpcaError::InvalidComponentCount { k, n: q.n() });
    }
    Ok(())
}

#[derive(Debug, Clone)]
struct Candidate {
    lambda: f64,
    support: Vec<usize>,
    z: Vec<f64>,
}

/// Keeps `incumbent` unless `challenger` beats it by more than [`TIE_TOL`].
/// Callers feed challengers in lexicographic support order.
fn keep_better(incumbent: Option<Candidate>, challenger: Option<Candidate>) -> Option<Candidate> {
    match (incumbent, challenger) {
        (Some(a), Some(b)) => Some(if b.lambda > a.lambda + TIE_TOL { b } else { a }),
        (a, b) => a.or(b),
    }
}

/// Optimal k-th component given `previous`, by enumerating all `C(n, p)`
/// supports.
///
/// When no support admits a direction orthogonal to `previous`, the best
/// dense orthogonal direction is returned with `sparsity_relaxed` set.
pub fn solve_kth_exact(q: &SymMatrix, p: usize, previous: &[SparseComponent]) -> Result<SparseComponent> {
    solve_kth_exact_counted(q, p, previous).map(|(c, _)| c)
}

/// [`solve_kth_exact`] plus the number of supports evaluated.
pub fn solve_kth_exact_counted(
    q: &SymMatrix,
    p: usize,
    previous: &[SparseComponent],
) -> Result<(SparseComponent, u64)> {
    validate_p(q, p)?;
    let prev = dense_previous(q, previous)?;
    let supports: Vec<Vec<usize>> = Combinations::new(q.n(), p).collect();
    let evaluated = supports.len() as u64;
    let n = q.n();

    let chunk_best: Vec<Option<Candidate>> = supports
        .par_chunks(CHUNK)
        .map(|chunk| {
            chunk.iter().fold(None, |best, s| {
                let set = IndexSet::new(s.clone(), n).expect("combinations are sorted");
                let cand = match reduced_pca_dense(q, &set, &prev) {
                    ReducedPca::Feasible { lambda, z, .. } => Some(Candidate {
                        lambda,
                        support: s.clone(),
                        z,
                    }),
                    ReducedPca::Infeasible { .. } => None,
                };
                keep_better(best, cand)
            })
        })
        .collect();
    let best = chunk_best.into_iter().fold(None, keep_better);

    let component = match best {
        Some(c) => SparseComponent {
            support: IndexSet::new(c.support, n)?,
            values: c.z,
            variance: c.lambda,
            sparsity_relaxed: false,
        },
        None => dense_fallback(q, &prev)?,
    };
    Ok((component, evaluated))
}

/// Best dense unit vector orthogonal to `previous`.
pub(crate) fn dense_fallback(q: &SymMatrix, previous: &[Vec<f64>]) -> Result<SparseComponent> {
    let n = q.n();
    let basis = gram_schmidt(n, previous, GS_DROP_TOL)?;
    if basis.spans_ambient() {
        return Err(SpcaError::NoOrthogonalDirection);
    }
    let mut x = top_direction_in(q, &basis.complement());
    x = basis.project_out(&x);
    normalize(&mut x);
    canonical_sign(&mut x);
    let support = IndexSet::full(n);
    let values = restrict(&x, &support)?;
    debug_assert_eq!(embed(&values, &support)?, x);
    Ok(SparseComponent {
        support,
        values,
        variance: q.quad_form(&x),
        sparsity_relaxed: true,
    })
}

/// First `k` orthogonal sparse components by repeated exhaustive solves.
pub fn solve_sequence(q: &SymMatrix, p: usize, k: usize) -> Result<SpcaSolution> {
    solve_sequence_from(q, p, k, Vec::new())
}

/// Extends a given prefix to `k` components with exhaustive solves.
///
/// Used to follow an alternative optimal path: fix the first component(s)
/// and let the solver continue from there.
pub fn solve_sequence_from(q: &SymMatrix, p: usize, k: usize, prefix: Vec<SparseComponent>) -> Result<SpcaSolution> {
    solve_sequence_with(q, p, k, prefix, &KthSolver::Exact)
}

/// Sequential driver shared by the exhaustive and branch-and-bound modes.
pub fn solve_sequence_with(
    q: &SymMatrix,
    p: usize,
    k: usize,
    prefix: Vec<SparseComponent>,
    solver: &KthSolver,
) -> Result<SpcaSolution> {
    validate_p(q, p)?;
    validate_k(q, k)?;
    if prefix.len() > k {
        return Err(SpcaError::InvalidInput(format!(
            "prefix has {} components but only {k} were requested",
            prefix.len()
        )));
    }
    let mut sol = SpcaSolution::new(q, p, solver.mode(), solver.eps());
    sol.components = prefix;
    while sol.components.len() < k {
        let (c, stats) = solver.solve(q, p, &sol.components)?;
        sol.stats += stats;
        sol.components.push(c);
    }
    Ok(sol)
}
