//! Thresholding, block-diagonalization and the block-wise solvers.
//!
//! Entries of `Q` with `|Q_ij| < δ` are zeroed; the connected components of
//! the remaining sparsity graph give a permutation `Π` with
//! `Π Qᵟ Πᵀ = diag(A₁, …, A_d)`. Each block is solved on its own and the
//! per-block sequences are merged by variance, either all at once
//! ([`merge_sorted`]) or lazily through a [`CandidatePool`] that only
//! recomputes the block that just contributed a component.

use num_bigint::BigUint;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bnb::KthSolver;
use crate::error::{Result, SpcaError};
use crate::exact::{
    dense_fallback, validate_k, validate_p, SolveStats, SolverMode, SparseComponent, SpcaSolution, TIE_TOL,
};
use crate::linalg::{IndexSet, SymMatrix};

/// `Qᵟ`: entries with `|Q_ij| ≥ δ` kept, all others (diagonal included) zeroed.
pub fn threshold_matrix(q: &SymMatrix, delta: f64) -> Result<SymMatrix> {
    check_delta(delta)?;
    Ok(SymMatrix::from_upper_fn(q.n(), |i, j| {
        let v = q.get(i, j);
        if v.abs() >= delta {
            v
        } else {
            0.0
        }
    }))
}

fn check_delta(delta: f64) -> Result<()> {
    if delta.is_finite() && delta >= 0.0 {
        Ok(())
    } else {
        Err(SpcaError::InvalidTolerance(delta))
    }
}

struct DisjointSet {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            rank: vec![0; n],
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            std::cmp::Ordering::Less => self.parent[ra] = rb,
            std::cmp::Ordering::Greater => self.parent[rb] = ra,
            std::cmp::Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
    }
}

/// Connected components of the graph with an edge wherever an off-diagonal
/// entry is nonzero. Components are sorted internally and ordered by their
/// smallest member.
pub fn connected_components(qd: &SymMatrix) -> Vec<IndexSet> {
    let n = qd.n();
    let mut dsu = DisjointSet::new(n);
    for i in 0..n {
        for j in (i + 1)..n {
            if qd.get(i, j) != 0.0 {
                dsu.union(i, j);
            }
        }
    }
    let mut slot_of_root = vec![usize::MAX; n];
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for i in 0..n {
        let r = dsu.find(i);
        if slot_of_root[r] == usize::MAX {
            slot_of_root[r] = groups.len();
            groups.push(Vec::new());
        }
        groups[slot_of_root[r]].push(i);
    }
    groups
        .into_iter()
        .map(|g| IndexSet::new(g, n).expect("indices visited in increasing order"))
        .collect()
}

/// Result of block-diagonalizing `Qᵟ`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockStructure {
    /// `permutation[a]` is the original index placed at position `a`.
    pub permutation: Vec<usize>,
    /// Original indices of each block, in block order.
    pub components: Vec<IndexSet>,
    pub blocks: Vec<SymMatrix>,
    pub delta: f64,
    pub n: usize,
}

impl BlockStructure {
    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn block_sizes(&self) -> Vec<usize> {
        self.blocks.iter().map(SymMatrix::n).collect()
    }

    /// Position of each block's first row in the permuted coordinates.
    pub fn offsets(&self) -> Vec<usize> {
        self.blocks
            .iter()
            .scan(0, |acc, b| {
                let start = *acc;
                *acc += b.n();
                Some(start)
            })
            .collect()
    }

    /// `Π M Πᵀ`.
    pub fn permute(&self, m: &SymMatrix) -> SymMatrix {
        let perm = &self.permutation;
        SymMatrix::from_upper_fn(self.n, |a, b| m.get(perm[a], perm[b]))
    }

    /// `Πᵀ M Π`.
    pub fn unpermute(&self, m: &SymMatrix) -> SymMatrix {
        let mut pos = vec![0; self.n];
        for (a, &orig) in self.permutation.iter().enumerate() {
            pos[orig] = a;
        }
        SymMatrix::from_upper_fn(self.n, |i, j| m.get(pos[i], pos[j]))
    }

    /// `A = diag(A₁, …, A_d)`.
    pub fn block_matrix(&self) -> SymMatrix {
        let mut owner = vec![(0, 0); self.n];
        for (b, off) in self.offsets().into_iter().enumerate() {
            for local in 0..self.blocks[b].n() {
                owner[off + local] = (b, local);
            }
        }
        SymMatrix::from_upper_fn(self.n, |a, c| {
            let ((ba, la), (bc, lc)) = (owner[a], owner[c]);
            if ba == bc {
                self.blocks[ba].get(la, lc)
            } else {
                0.0
            }
        })
    }

    /// `Πᵀ z`: a vector in permuted coordinates mapped back to the original ones.
    pub fn to_original(&self, z: &[f64]) -> Vec<f64> {
        let mut u = vec![0.0; self.n];
        for (a, &orig) in self.permutation.iter().enumerate() {
            u[orig] = z[a];
        }
        u
    }

    /// Maps a block-local component to original coordinates, re-evaluating
    /// its variance on `q`.
    fn lift_to_original(&self, block: usize, c: &SparseComponent, q: &SymMatrix) -> SparseComponent {
        let ids = self.components[block].indices();
        let support = IndexSet::new(c.support.indices().iter().map(|&l| ids[l]).collect(), self.n)
            .expect("block indices are increasing");
        let mut out = SparseComponent {
            support,
            values: c.values.clone(),
            variance: 0.0,
            sparsity_relaxed: c.sparsity_relaxed,
        };
        out.variance = q.quad_form(&out.dense());
        out
    }

    /// Zero-pads a block-local component into the permuted coordinates of `A`.
    fn lift_to_permuted(&self, offset: usize, c: &SparseComponent) -> SparseComponent {
        let support = IndexSet::new(c.support.indices().iter().map(|&l| offset + l).collect(), self.n)
            .expect("offsets are increasing");
        SparseComponent {
            support,
            values: c.values.clone(),
            variance: c.variance,
            sparsity_relaxed: c.sparsity_relaxed,
        }
    }
}

/// Thresholds `q` at `delta` and permutes it into block-diagonal form.
pub fn block_diagonalize(q: &SymMatrix, delta: f64) -> Result<BlockStructure> {
    let qd = threshold_matrix(q, delta)?;
    let components = connected_components(&qd);
    let permutation: Vec<usize> = components.iter().flat_map(|c| c.indices().iter().copied()).collect();
    let blocks = components.iter().map(|c| qd.principal_submatrix(c)).collect();
    Ok(BlockStructure {
        permutation,
        components,
        blocks,
        delta,
        n: q.n(),
    })
}

/// Merges complete or partial per-block solutions into one sequence for
/// `A = diag(blocks)`, ordered by decreasing variance. Block order breaks
/// ties, and each block's own order is preserved.
///
/// Components are returned zero-padded in the permuted coordinates of `A`.
pub fn merge_sorted(block_solutions: &[SpcaSolution], structure: &BlockStructure) -> Result<SpcaSolution> {
    if block_solutions.len() != structure.num_blocks() {
        return Err(SpcaError::InvalidInput(format!(
            "expected {} block solutions, got {}",
            structure.num_blocks(),
            block_solutions.len()
        )));
    }
    for (sol, block) in block_solutions.iter().zip(&structure.blocks) {
        if sol.matrix != block.fingerprint() {
            return Err(SpcaError::InvalidInput(format!(
                "block solution for a {}x{} matrix does not match its {}x{} block",
                sol.matrix.n,
                sol.matrix.n,
                block.n(),
                block.n()
            )));
        }
    }
    let a = structure.block_matrix();
    let first = block_solutions.first().ok_or(SpcaError::EmptyMatrix)?;
    let mut merged = SpcaSolution::new(
        &a,
        block_solutions.iter().map(|s| s.p).max().unwrap_or(1),
        first.mode,
        block_solutions.iter().map(|s| s.eps).fold(0.0, f64::max),
    );
    let offsets = structure.offsets();
    let mut cursor = vec![0usize; block_solutions.len()];
    loop {
        let mut pick: Option<(usize, f64)> = None;
        for (b, sol) in block_solutions.iter().enumerate() {
            if let Some(c) = sol.components.get(cursor[b]) {
                if pick.is_none_or(|(_, best)| c.variance > best + TIE_TOL) {
                    pick = Some((b, c.variance));
                }
            }
        }
        let Some((b, _)) = pick else { break };
        let c = &block_solutions[b].components[cursor[b]];
        merged.components.push(structure.lift_to_permuted(offsets[b], c));
        cursor[b] += 1;
    }
    for sol in block_solutions {
        merged.stats += sol.stats;
    }
    Ok(merged)
}

#[derive(Debug, Clone)]
struct BlockSlot {
    p: usize,
    emitted: Vec<SparseComponent>,
    candidate: Option<SparseComponent>,
}

/// Next-component candidates, one per non-exhausted block.
#[derive(Debug, Clone)]
pub struct CandidatePool<'a> {
    structure: &'a BlockStructure,
    solver: KthSolver,
    slots: Vec<BlockSlot>,
    stats: SolveStats,
    /// Block whose slot was emptied by the last `emit` and is refilled by the
    /// following one.
    pending: Option<usize>,
}

impl<'a> CandidatePool<'a> {
    /// Solves the first component of every block (in parallel).
    pub fn new(structure: &'a BlockStructure, p: usize, solver: KthSolver) -> Result<Self> {
        if p == 0 {
            return Err(SpcaError::InvalidSparsity { p, n: structure.n });
        }
        let firsts: Vec<Result<(SparseComponent, SolveStats)>> = structure
            .blocks
            .par_iter()
            .map(|block| solver.solve(block, p.min(block.n()), &[]))
            .collect();
        let mut stats = SolveStats::default();
        let mut slots = Vec::with_capacity(firsts.len());
        for (block, first) in structure.blocks.iter().zip(firsts) {
            let (c, s) = first?;
            stats += s;
            slots.push(BlockSlot {
                p: p.min(block.n()),
                emitted: Vec::new(),
                candidate: Some(c),
            });
        }
        Ok(Self {
            structure,
            solver,
            slots,
            stats,
            pending: None,
        })
    }

    /// `(block, variance)` of every live candidate, variance measured on the
    /// block matrix.
    pub fn candidates(&self) -> Vec<(usize, f64)> {
        self.slots
            .iter()
            .enumerate()
            .filter_map(|(b, s)| s.candidate.as_ref().map(|c| (b, c.variance)))
            .collect()
    }

    /// Components already emitted from each block.
    pub fn emitted_counts(&self) -> Vec<usize> {
        self.slots.iter().map(|s| s.emitted.len()).collect()
    }

    pub fn stats(&self) -> SolveStats {
        self.stats
    }

    /// Emits the highest-variance candidate (lowest block index on ties).
    /// Returns the block index and the component in block-local
    /// coordinates, or `None` once every block is exhausted.
    ///
    /// The emitting block's next candidate is solved on the following call,
    /// so `K` emissions cost the initial solves plus `K − 1` refills.
    pub fn emit(&mut self) -> Result<Option<(usize, SparseComponent)>> {
        if let Some(b) = self.pending.take() {
            let block = &self.structure.blocks[b];
            let slot = &mut self.slots[b];
            if slot.emitted.len() < block.n() {
                let (c, s) = self.solver.solve(block, slot.p, &slot.emitted)?;
                self.stats += s;
                slot.candidate = Some(c);
            }
        }
        let mut pick: Option<(usize, f64)> = None;
        for (b, v) in self.candidates() {
            if pick.is_none_or(|(_, best)| v > best + TIE_TOL) {
                pick = Some((b, v));
            }
        }
        let Some((b, _)) = pick else { return Ok(None) };
        let slot = &mut self.slots[b];
        let chosen = slot.candidate.take().expect("picked slot has a candidate");
        slot.emitted.push(chosen.clone());
        self.pending = Some(b);
        Ok(Some((b, chosen)))
    }

    /// [`Self::emit`] mapped back to the original coordinates of `q`.
    pub fn emit_original(&mut self, q: &SymMatrix) -> Result<Option<SparseComponent>> {
        Ok(self.emit()?.map(|(b, c)| self.structure.lift_to_original(b, &c, q)))
    }
}

/// Output of [`threshold_spca`].
#[derive(Debug, Clone)]
pub struct ThresholdOutput {
    /// Components in the original coordinates, variances measured on `Q`.
    pub solution: SpcaSolution,
    pub structure: BlockStructure,
}

/// First `k` components of `q` through thresholding at `delta` and the
/// block candidate pool.
///
/// `KthSolver::Bnb { eps }` with `eps > 0` solves blocks by
/// branch-and-bound; `eps = 0` always uses the exhaustive solver. Each
/// returned `u_k` satisfies `u_kᵀQu_k ≥ v_k* − (2pδ + eps)` given the
/// returned prefix.
pub fn threshold_spca(q: &SymMatrix, p: usize, delta: f64, k: usize, solver: KthSolver) -> Result<ThresholdOutput> {
    validate_p(q, p)?;
    validate_k(q, k)?;
    check_delta(delta)?;
    let solver = match solver {
        KthSolver::Bnb { eps } if eps > 0.0 => KthSolver::Bnb { eps },
        KthSolver::Bnb { eps } if eps.is_nan() || eps < 0.0 => return Err(SpcaError::InvalidTolerance(eps)),
        _ => KthSolver::Exact,
    };
    let structure = block_diagonalize(q, delta)?;
    let mut sol = SpcaSolution::new(q, p, SolverMode::Threshold, solver.eps());
    sol.delta = delta;
    {
        let mut pool = CandidatePool::new(&structure, p, solver)?;
        while sol.components.len() < k {
            match pool.emit_original(q)? {
                Some(c) => sol.components.push(c),
                None => {
                    let prev = sol.dense_components();
                    sol.components.push(dense_fallback(q, &prev)?);
                }
            }
        }
        sol.stats = pool.stats();
    }
    Ok(ThresholdOutput {
        solution: sol,
        structure,
    })
}

/// Binomial coefficient as an exact integer.
pub fn binomial(n: usize, k: usize) -> BigUint {
    if k > n {
        return BigUint::ZERO;
    }
    let k = k.min(n - k);
    let mut acc = BigUint::from(1u32);
    for i in 0..k {
        acc *= BigUint::from(n - i);
        acc /= BigUint::from(i + 1);
    }
    acc
}

/// Support counts for one exhaustive solve: `(C(n, p), Σᵢ C(nᵢ, min(p, nᵢ)))`.
pub fn predicted_cost(structure: &BlockStructure, p: usize) -> (BigUint, BigUint) {
    let full = binomial(structure.n, p);
    let decomposed = structure
        .block_sizes()
        .into_iter()
        .map(|ni| binomial(ni, p.min(ni)))
        .sum();
    (full, decomposed)
}

/// Serializable summary of a block structure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockSummary {
    pub d: usize,
    pub delta: f64,
    pub sizes: Vec<usize>,
    pub components: Vec<Vec<usize>>,
    pub permutation: Vec<usize>,
    /// `C(n, p)` as a decimal string.
    pub predicted_cost_full: String,
    /// `Σᵢ C(nᵢ, min(p, nᵢ))` as a decimal string.
    pub predicted_cost_decomposed: String,
}

impl BlockSummary {
    pub fn new(structure: &BlockStructure, p: usize) -> Self {
        let (full, dec) = predicted_cost(structure, p);
        Self {
            d: structure.num_blocks(),
            delta: structure.delta,
            sizes: structure.block_sizes(),
            components: structure.components.iter().map(|c| c.indices().to_vec()).collect(),
            permutation: structure.permutation.clone(),
            predicted_cost_full: full.to_string(),
            predicted_cost_decomposed: dec.to_string(),
        }
    }
}
