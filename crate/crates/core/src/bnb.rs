//! ε-optimal best-first branch-and-bound for the k-th component.
//!
//! A node fixes part of the support through a pair of binary masks
//! `lower ≤ y ≤ upper`. Children fix one more free index to 0 or 1. A node
//! whose `lower` or `upper` mask already has `p` entries determines the
//! support and is solved exactly; any other node gets
//!
//! * an upper bound `λ_max(P Q_U P)` on the coordinates `U` still allowed,
//!   with `P` projecting out the previous components restricted to `U`;
//! * a lower bound from a concrete feasible witness.
//!
//! The search stops once the best remaining upper bound is within `eps` of
//! the incumbent.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SpcaError};
use crate::exact::{
    dense_fallback, dense_previous, reduced_pca_dense, restricted_basis, solve_kth_exact_counted, solve_sequence_with,
    validate_p, ReducedPca, SolveStats, SolverMode, SparseComponent, SpcaSolution, TIE_TOL, VANISH_TOL,
};
use crate::linalg::{canonical_sign, complement_projector, normalize, sym_eig_max, IndexSet, SymMatrix};

/// Partially determined support: `lower[j] ≤ y[j] ≤ upper[j]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportBounds {
    pub lower: Vec<bool>,
    pub upper: Vec<bool>,
    /// Cached bound from the last evaluation; `+∞` until evaluated.
    pub upper_bound: f64,
}

impl SupportBounds {
    pub fn root(n: usize) -> Self {
        Self {
            lower: vec![false; n],
            upper: vec![true; n],
            upper_bound: f64::INFINITY,
        }
    }

    pub fn new(lower: Vec<bool>, upper: Vec<bool>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(SpcaError::DimensionMismatch {
                expected: lower.len(),
                got: upper.len(),
            });
        }
        if let Some(j) = lower.iter().zip(&upper).position(|(l, u)| *l && !*u) {
            return Err(SpcaError::InvalidInput(format!(
                "lower bound exceeds upper bound at index {j}"
            )));
        }
        Ok(Self {
            lower,
            upper,
            upper_bound: f64::INFINITY,
        })
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower_count(&self) -> usize {
        self.lower.iter().filter(|b| **b).count()
    }

    pub fn upper_count(&self) -> usize {
        self.upper.iter().filter(|b| **b).count()
    }

    /// Indices with `lower = 0, upper = 1`.
    pub fn free(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.dim()).filter(|&j| !self.lower[j] && self.upper[j])
    }

    /// Whether some support of size `p` fits between the masks.
    pub fn is_live(&self, p: usize) -> bool {
        self.lower_count() <= p && self.upper_count() >= p
    }

    /// The support forced by the masks, if `p` entries are already fixed.
    pub fn determined_support(&self, p: usize) -> Option<IndexSet> {
        if self.lower_count() == p {
            Some(IndexSet::from_mask(&self.lower))
        } else if self.upper_count() == p {
            Some(IndexSet::from_mask(&self.upper))
        } else {
            None
        }
    }

    fn with_fixed(&self, j: usize, value: bool) -> Self {
        let mut child = self.clone();
        child.lower[j] = value;
        child.upper[j] = value;
        child.upper_bound = f64::INFINITY;
        child
    }
}

/// Final bracket of a branch-and-bound run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BnbCertificate {
    /// Variance of the returned component.
    pub lb: f64,
    /// Upper bound on the subproblem optimum at termination.
    pub ub: f64,
    pub eps: f64,
    pub nodes_explored: u64,
    pub nodes_pruned: u64,
    /// True when no sparse direction existed and a dense one was returned.
    pub relaxed: bool,
}

impl BnbCertificate {
    pub fn gap(&self) -> f64 {
        self.ub - self.lb
    }
}

fn check_node(q: &SymMatrix, p: usize, node: &SupportBounds) -> Result<()> {
    validate_p(q, p)?;
    if node.dim() != q.n() {
        return Err(SpcaError::DimensionMismatch {
            expected: q.n(),
            got: node.dim(),
        });
    }
    if node.lower.iter().zip(&node.upper).any(|(l, u)| *l && !*u) {
        return Err(SpcaError::InvalidInput("node has lower > upper".into()));
    }
    Ok(())
}

/// Upper bound on `xᵀQx` over all unit `x` feasible at `node`.
///
/// Returns 0 when the restricted previous components span every allowed
/// coordinate.
pub fn upper_bound(q: &SymMatrix, p: usize, previous: &[SparseComponent], node: &SupportBounds) -> Result<f64> {
    check_node(q, p, node)?;
    let prev = dense_previous(q, previous)?;
    Ok(upper_bound_dense(q, p, &prev, node))
}

fn upper_bound_dense(q: &SymMatrix, p: usize, prev: &[Vec<f64>], node: &SupportBounds) -> f64 {
    let allowed = if node.lower_count() == p {
        IndexSet::from_mask(&node.lower)
    } else {
        IndexSet::from_mask(&node.upper)
    };
    if allowed.is_empty() {
        return 0.0;
    }
    let qu = q.principal_submatrix(&allowed);
    let basis = restricted_basis(&allowed, prev);
    if basis.spans_ambient() {
        0.0
    } else if basis.is_empty() {
        sym_eig_max(&qu).0
    } else {
        sym_eig_max(&qu.sandwich(&complement_projector(&basis))).0
    }
}

/// Support used for the lower-bound witness: the fixed indices, then free
/// indices by decreasing diagonal (lowest index first on ties).
fn witness_support(q: &SymMatrix, p: usize, node: &SupportBounds) -> Option<IndexSet> {
    let mut chosen: Vec<usize> = (0..node.dim()).filter(|&j| node.lower[j]).collect();
    let mut free: Vec<usize> = node.free().collect();
    free.sort_by(|&a, &b| q.get(b, b).total_cmp(&q.get(a, a)).then(a.cmp(&b)));
    let need = p.checked_sub(chosen.len())?;
    if free.len() < need {
        return None;
    }
    chosen.extend_from_slice(&free[..need]);
    IndexSet::from_unsorted(chosen, node.dim()).ok()
}

/// A feasible component at `node` and its variance, or `None` when the
/// witness construction finds no direction orthogonal to `previous`.
///
/// For a node that already determines its support this is the exact
/// reduced solve; otherwise the top eigenvector of `Q_Y` on the heuristic
/// support `Y` is projected onto the complement of the restricted previous
/// components.
pub fn lower_bound(
    q: &SymMatrix,
    p: usize,
    previous: &[SparseComponent],
    node: &SupportBounds,
) -> Result<Option<(f64, SparseComponent)>> {
    check_node(q, p, node)?;
    let prev = dense_previous(q, previous)?;
    Ok(lower_bound_dense(q, p, &prev, node))
}

fn lower_bound_dense(
    q: &SymMatrix,
    p: usize,
    prev: &[Vec<f64>],
    node: &SupportBounds,
) -> Option<(f64, SparseComponent)> {
    if let Some(support) = node.determined_support(p) {
        return solve_leaf(q, &support, prev);
    }
    let support = witness_support(q, p, node)?;
    let qy = q.principal_submatrix(&support);
    let basis = restricted_basis(&support, prev);
    if basis.spans_ambient() {
        return None;
    }
    let (_, w) = sym_eig_max(&qy);
    let mut z = basis.project_out(&w);
    if normalize(&mut z) <= VANISH_TOL {
        return None;
    }
    canonical_sign(&mut z);
    let variance = qy.quad_form(&z);
    Some((
        variance,
        SparseComponent {
            support,
            values: z,
            variance,
            sparsity_relaxed: false,
        },
    ))
}

fn solve_leaf(q: &SymMatrix, support: &IndexSet, prev: &[Vec<f64>]) -> Option<(f64, SparseComponent)> {
    match reduced_pca_dense(q, support, prev) {
        ReducedPca::Feasible { lambda, z, .. } => Some((
            lambda,
            SparseComponent {
                support: support.clone(),
                values: z,
                variance: lambda,
                sparsity_relaxed: false,
            },
        )),
        ReducedPca::Infeasible { .. } => None,
    }
}

struct Frontier {
    ub: f64,
    seq: u64,
    node: SupportBounds,
}

impl PartialEq for Frontier {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Frontier {}

impl PartialOrd for Frontier {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Frontier {
    // max-heap: larger bound first, then older node
    fn cmp(&self, other: &Self) -> Ordering {
        self.ub.total_cmp(&other.ub).then(other.seq.cmp(&self.seq))
    }
}

struct Search<'a> {
    q: &'a SymMatrix,
    p: usize,
    prev: &'a [Vec<f64>],
    lb: f64,
    incumbent: Option<SparseComponent>,
    heap: BinaryHeap<Frontier>,
    seq: u64,
    stats: SolveStats,
}

impl Search<'_> {
    fn offer(&mut self, witness: Option<(f64, SparseComponent)>) {
        if let Some((value, c)) = witness {
            if value > self.lb + TIE_TOL || self.incumbent.is_none() {
                self.lb = value;
                self.incumbent = Some(c);
            }
        }
    }

    /// Evaluates a node and queues it if it may still beat the incumbent.
    fn visit(&mut self, mut node: SupportBounds) {
        if !node.is_live(self.p) {
            self.stats.nodes_pruned += 1;
            return;
        }
        if let Some(support) = node.determined_support(self.p) {
            self.stats.support_evaluations += 1;
            let leaf = solve_leaf(self.q, &support, self.prev);
            if leaf.is_none() {
                self.stats.nodes_pruned += 1;
            }
            self.offer(leaf);
            return;
        }
        let witness = lower_bound_dense(self.q, self.p, self.prev, &node);
        self.offer(witness);
        node.upper_bound = upper_bound_dense(self.q, self.p, self.prev, &node);
        if node.upper_bound > self.lb {
            self.seq += 1;
            self.heap.push(Frontier {
                ub: node.upper_bound,
                seq: self.seq,
                node,
            });
        } else {
            self.stats.nodes_pruned += 1;
        }
    }

    /// Current global upper bound after discarding dominated nodes.
    fn global_upper(&mut self) -> f64 {
        while self.heap.peek().is_some_and(|top| top.ub <= self.lb) {
            self.heap.pop();
            self.stats.nodes_pruned += 1;
        }
        self.heap.peek().map_or(self.lb, |top| top.ub)
    }
}

/// Branching index: the free index with the largest diagonal entry.
fn branch_index(q: &SymMatrix, node: &SupportBounds) -> Option<usize> {
    node.free().fold(None, |best: Option<usize>, j| match best {
        Some(b) if q.get(b, b) >= q.get(j, j) => Some(b),
        _ => Some(j),
    })
}

/// ε-optimal k-th component by best-first branch-and-bound.
///
/// The returned variance is within `eps` of the subproblem optimum; the
/// certificate records the final `[lb, ub]` bracket.
pub fn solve_kth_bnb(
    q: &SymMatrix,
    p: usize,
    previous: &[SparseComponent],
    eps: f64,
) -> Result<(SparseComponent, BnbCertificate)> {
    solve_kth_bnb_counted(q, p, previous, eps).map(|(c, cert, _)| (c, cert))
}

pub(crate) fn solve_kth_bnb_counted(
    q: &SymMatrix,
    p: usize,
    previous: &[SparseComponent],
    eps: f64,
) -> Result<(SparseComponent, BnbCertificate, SolveStats)> {
    validate_p(q, p)?;
    if !(eps.is_finite() && eps >= 0.0) {
        return Err(SpcaError::InvalidTolerance(eps));
    }
    let prev = dense_previous(q, previous)?;
    let mut search = Search {
        q,
        p,
        prev: &prev,
        lb: f64::NEG_INFINITY,
        incumbent: None,
        heap: BinaryHeap::new(),
        seq: 0,
        stats: SolveStats::default(),
    };
    search.visit(SupportBounds::root(q.n()));

    let mut ub = search.global_upper();
    while ub - search.lb > eps {
        let Some(Frontier { node, .. }) = search.heap.pop() else {
            break;
        };
        search.stats.nodes_explored += 1;
        let j = branch_index(q, &node).expect("undetermined live node has a free index");
        search.visit(node.with_fixed(j, false));
        search.visit(node.with_fixed(j, true));
        ub = search.global_upper();
    }

    let stats = search.stats;
    match search.incumbent {
        Some(c) => {
            let cert = BnbCertificate {
                lb: search.lb,
                ub: ub.max(search.lb),
                eps,
                nodes_explored: stats.nodes_explored,
                nodes_pruned: stats.nodes_pruned,
                relaxed: false,
            };
            Ok((c, cert, stats))
        }
        None => {
            let c = dense_fallback(q, &prev)?;
            let cert = BnbCertificate {
                lb: c.variance,
                ub: c.variance,
                eps,
                nodes_explored: stats.nodes_explored,
                nodes_pruned: stats.nodes_pruned,
                relaxed: true,
            };
            Ok((c, cert, stats))
        }
    }
}

/// Per-component solver used by the sequential and block drivers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KthSolver {
    Exact,
    Bnb { eps: f64 },
}

impl KthSolver {
    pub fn mode(&self) -> SolverMode {
        match self {
            KthSolver::Exact => SolverMode::Exact,
            KthSolver::Bnb { .. } => SolverMode::Bnb,
        }
    }

    pub fn eps(&self) -> f64 {
        match self {
            KthSolver::Exact => 0.0,
            KthSolver::Bnb { eps } => *eps,
        }
    }

    pub fn solve(
        &self,
        q: &SymMatrix,
        p: usize,
        previous: &[SparseComponent],
    ) -> Result<(SparseComponent, SolveStats)> {
        match *self {
            KthSolver::Exact => {
                let (c, evals) = solve_kth_exact_counted(q, p, previous)?;
                Ok((
                    c,
                    SolveStats {
                        support_evaluations: evals,
                        ..SolveStats::default()
                    },
                ))
            }
            KthSolver::Bnb { eps } => solve_kth_bnb_counted(q, p, previous, eps).map(|(c, _, s)| (c, s)),
        }
    }
}

/// First `k` components, each ε-optimal given its prefix.
pub fn solve_sequence_bnb(q: &SymMatrix, p: usize, k: usize, eps: f64) -> Result<SpcaSolution> {
    solve_sequence_with(q, p, k, Vec::new(), &KthSolver::Bnb { eps })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{reduced_pca_on_support, solve_kth_exact};

    fn fixture() -> SymMatrix {
        SymMatrix::from_rows(&[vec![5.0, 1.0, 0.0], vec![1.0, 5.0, 2.0], vec![0.0, 2.0, 2.0]]).unwrap()
    }

    #[test]
    fn root_upper_bound_is_lambda_max() {
        let q = fixture();
        let ub = upper_bound(&q, 2, &[], &SupportBounds::root(3)).unwrap();
        assert!((ub - sym_eig_max(&q).0).abs() < 1e-12);
        assert!(ub >= 6.0);
    }

    #[test]
    fn determined_node_bounds_match_reduced_solve() {
        let q = fixture();
        let node = SupportBounds::new(vec![false; 3], vec![false, true, true]).unwrap();
        let ub = upper_bound(&q, 2, &[], &node).unwrap();
        let (lb, w) = lower_bound(&q, 2, &[], &node).unwrap().unwrap();
        let set = IndexSet::new(vec![1, 2], 3).unwrap();
        let exact = reduced_pca_on_support(&q, &set, &[]).unwrap();
        assert!((ub - 6.0).abs() < 1e-12);
        assert_eq!(exact.lambda(), Some(lb));
        assert_eq!(w.support, set);
    }

    #[test]
    fn identity_bounds() {
        let q = SymMatrix::identity(4);
        let node = SupportBounds::new(vec![true, false, false, false], vec![true, true, false, true]).unwrap();
        assert!((upper_bound(&q, 2, &[], &node).unwrap() - 1.0).abs() < 1e-12);
        // previous components covering the allowed coordinates leave nothing
        let e = |j: usize| {
            let mut v = vec![0.0; 4];
            v[j] = 1.0;
            SparseComponent::from_dense(&q, &v, false).unwrap()
        };
        let prev = vec![e(0), e(1), e(3)];
        assert_eq!(upper_bound(&q, 2, &prev, &node).unwrap(), 0.0);
        assert!(lower_bound(&q, 2, &prev, &node).unwrap().is_none());
    }

    #[test]
    fn root_lower_bound_on_fixture() {
        let q = fixture();
        let (v, w) = lower_bound(&q, 2, &[], &SupportBounds::root(3)).unwrap().unwrap();
        assert!((v - 6.0).abs() < 1e-12);
        assert_eq!(w.support.indices(), &[0, 1]);
    }

    #[test]
    fn bnb_fixture_optimum() {
        let q = fixture();
        let (c, cert) = solve_kth_bnb(&q, 2, &[], 0.0).unwrap();
        assert!((c.variance - 6.0).abs() < 1e-12);
        assert!(cert.gap() <= 1e-9);
        assert_eq!(cert.lb, c.variance);
    }

    #[test]
    fn huge_eps_stops_at_root() {
        let q = fixture();
        let lmax = sym_eig_max(&q).0;
        let (c, cert) = solve_kth_bnb(&q, 2, &[], lmax).unwrap();
        assert_eq!(cert.nodes_explored, 0);
        assert!(c.variance >= lmax - lmax);
    }

    #[test]
    fn p_equal_n_is_a_single_leaf() {
        let q = fixture();
        let (c, cert) = solve_kth_bnb(&q, 3, &[], 0.0).unwrap();
        assert!((c.variance - sym_eig_max(&q).0).abs() < 1e-10);
        assert_eq!(cert.nodes_explored, 0);
    }

    #[test]
    fn bnb_matches_exact_with_previous() {
        let q = fixture();
        let x1 = solve_kth_exact(&q, 2, &[]).unwrap();
        let (c, _) = solve_kth_bnb(&q, 2, std::slice::from_ref(&x1), 0.0).unwrap();
        let e = solve_kth_exact(&q, 2, &[x1]).unwrap();
        assert!((c.variance - e.variance).abs() < 1e-9);
    }

    #[test]
    fn negative_eps_rejected() {
        assert!(solve_kth_bnb(&fixture(), 2, &[], -1.0).is_err());
        assert!(solve_kth_bnb(&fixture(), 2, &[], f64::NAN).is_err());
    }

    #[test]
    fn bounds_validate_shape() {
        assert!(SupportBounds::new(vec![true], vec![false]).is_err());
        assert!(SupportBounds::new(vec![true], vec![true, false]).is_err());
        let q = fixture();
        assert!(upper_bound(&q, 2, &[], &SupportBounds::root(2)).is_err());
    }
}
