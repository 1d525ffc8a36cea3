//! Dense symmetric linear algebra used by every solver: a cyclic Jacobi
//! eigensolver, Gram–Schmidt with re-orthogonalization, complement
//! projectors and the restriction/zero-padding maps between `ℝⁿ` and a
//! coordinate subset.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SpcaError};

/// Relative asymmetry accepted (and averaged away) at construction.
pub const SYMMETRY_TOL: f64 = 1e-9;
/// Default residual norm below which Gram–Schmidt drops a vector.
pub const GS_DROP_TOL: f64 = 1e-10;

const JACOBI_OFF_TOL: f64 = 1e-12;
const JACOBI_MAX_SWEEPS: usize = 100;

/// Dense symmetric `n × n` matrix stored row-major.
///
/// `get(i, j) == get(j, i)` holds bit-for-bit: every constructor either
/// averages the two triangles or writes both from a single value.
#[derive(Clone, PartialEq)]
pub struct SymMatrix {
    n: usize,
    data: Vec<f64>,
}

impl fmt::Debug for SymMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SymMatrix")
            .field("n", &self.n)
            .field("rows", &self.to_rows())
            .finish()
    }
}

impl SymMatrix {
    /// Builds a matrix from row-major entries.
    ///
    /// Asymmetry up to `1e-9 · max|entry|` is averaged out; anything larger is
    /// rejected with the location of the worst pair.
    pub fn from_row_major(n: usize, data: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(SpcaError::EmptyMatrix);
        }
        if data.len() != n * n {
            return Err(SpcaError::BadLength {
                n,
                expected: n * n,
                got: data.len(),
            });
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(SpcaError::NonFinite {
                row: pos / n,
                col: pos % n,
            });
        }
        let max_abs = data.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let tol = SYMMETRY_TOL * max_abs;
        let mut worst = (0, 0, 0.0_f64);
        for i in 0..n {
            for j in (i + 1)..n {
                let gap = (data[i * n + j] - data[j * n + i]).abs();
                if gap > worst.2 {
                    worst = (i, j, gap);
                }
            }
        }
        if worst.2 > tol {
            return Err(SpcaError::Asymmetric {
                i: worst.0,
                j: worst.1,
                gap: worst.2,
                tol,
            });
        }
        let mut sym = data;
        for i in 0..n {
            for j in (i + 1)..n {
                let avg = 0.5 * (sym[i * n + j] + sym[j * n + i]);
                sym[i * n + j] = avg;
                sym[j * n + i] = avg;
            }
        }
        Ok(Self { n, data: sym })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(SpcaError::EmptyMatrix);
        }
        for (row, r) in rows.iter().enumerate() {
            if r.len() != n {
                return Err(SpcaError::NotSquare {
                    rows: n,
                    row,
                    cols: r.len(),
                });
            }
        }
        Self::from_row_major(n, rows.concat())
    }

    /// Builds a matrix from the upper triangle of `f`, mirroring it exactly.
    pub(crate) fn from_upper_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        assert!(n > 0, "matrix dimension must be positive");
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let v = f(i, j);
                data[i * n + j] = v;
                data[j * n + i] = v;
            }
        }
        Self { n, data }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_upper_fn(n, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    pub fn diagonal(diag: &[f64]) -> Self {
        Self::from_upper_fn(diag.len(), |i, j| if i == j { diag[i] } else { 0.0 })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.n).map(<[f64]>::to_vec).collect()
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Principal submatrix `M[Y, Y]`.
    pub fn principal_submatrix(&self, set: &IndexSet) -> Self {
        let idx = set.indices();
        Self::from_upper_fn(idx.len(), |a, b| self.get(idx[a], idx[b]))
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.n, "vector length must match matrix dimension");
        self.data.chunks(self.n).map(|row| dot(row, v)).collect()
    }

    /// `vᵀ M v`.
    pub fn quad_form(&self, v: &[f64]) -> f64 {
        dot(v, &self.mul_vec(v))
    }

    /// `P M P` for a symmetric `P`, symmetrized to absorb rounding.
    pub fn sandwich(&self, p: &SymMatrix) -> SymMatrix {
        assert_eq!(self.n, p.n, "sandwich requires equal dimensions");
        let n = self.n;
        // t = M P
        let mut t = vec![0.0; n * n];
        for i in 0..n {
            for k in 0..n {
                let m_ik = self.get(i, k);
                if m_ik == 0.0 {
                    continue;
                }
                for j in 0..n {
                    t[i * n + j] += m_ik * p.get(k, j);
                }
            }
        }
        // P t, averaged over both triangles
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for k in 0..n {
                let p_ik = p.get(i, k);
                if p_ik == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out[i * n + j] += p_ik * t[k * n + j];
                }
            }
        }
        Self::from_upper_fn(n, |i, j| 0.5 * (out[i * n + j] + out[j * n + i]))
    }

    pub fn fingerprint(&self) -> MatrixFingerprint {
        MatrixFingerprint::of(self)
    }
}

/// Dimension plus a 64-bit FNV-1a hash of the entry bit patterns.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MatrixFingerprint {
    pub n: usize,
    pub hash: String,
}

impl MatrixFingerprint {
    pub fn of(m: &SymMatrix) -> Self {
        const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
        const PRIME: u64 = 0x0000_0100_0000_01b3;
        let mut h = OFFSET;
        let mut feed = |bytes: [u8; 8]| {
            for b in bytes {
                h ^= u64::from(b);
                h = h.wrapping_mul(PRIME);
            }
        };
        feed((m.n as u64).to_le_bytes());
        for v in &m.data {
            // +0.0 and -0.0 hash alike
            let v = if *v == 0.0 { 0.0_f64 } else { *v };
            feed(v.to_bits().to_le_bytes());
        }
        Self {
            n: m.n,
            hash: format!("{h:016x}"),
        }
    }
}

/// Strictly increasing coordinate subset of `{0, …, parent_dim − 1}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct IndexSet {
    indices: Vec<usize>,
    parent_dim: usize,
}

impl IndexSet {
    pub fn new(indices: Vec<usize>, parent_dim: usize) -> Result<Self> {
        let sorted = indices.windows(2).all(|w| w[0] < w[1]);
        let in_range = indices.last().is_none_or(|&last| last < parent_dim);
        if !sorted || !in_range {
            return Err(SpcaError::InvalidIndexSet { indices, parent_dim });
        }
        Ok(Self { indices, parent_dim })
    }

    /// Builds a set from unordered indices, sorting and deduplicating them.
    pub fn from_unsorted(mut indices: Vec<usize>, parent_dim: usize) -> Result<Self> {
        indices.sort_unstable();
        indices.dedup();
        Self::new(indices, parent_dim)
    }

    pub fn full(n: usize) -> Self {
        Self {
            indices: (0..n).collect(),
            parent_dim: n,
        }
    }

    /// Set of indices where `mask` is true.
    pub fn from_mask(mask: &[bool]) -> Self {
        Self {
            indices: mask.iter().enumerate().filter_map(|(i, &b)| b.then_some(i)).collect(),
            parent_dim: mask.len(),
        }
    }

    #[inline]
    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    #[inline]
    pub fn parent_dim(&self) -> usize {
        self.parent_dim
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.indices.binary_search(&i).is_ok()
    }
}

/// Lexicographic `p`-subsets of `{0, …, n − 1}`.
#[derive(Debug, Clone)]
pub struct Combinations {
    n: usize,
    current: Option<Vec<usize>>,
}

impl Combinations {
    pub fn new(n: usize, p: usize) -> Self {
        let current = (p <= n).then(|| (0..p).collect());
        Self { n, current }
    }
}

impl Iterator for Combinations {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let out = self.current.take()?;
        let p = out.len();
        let mut next = out.clone();
        // rightmost position that can still move right
        let mut i = p;
        while i > 0 {
            i -= 1;
            if next[i] < self.n - p + i {
                next[i] += 1;
                for j in (i + 1)..p {
                    next[j] = next[j - 1] + 1;
                }
                self.current = Some(next);
                return Some(out);
            }
        }
        Some(out)
    }
}

/// Ordered orthonormal vectors in a common ambient space.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthonormalBasis {
    ambient_dim: usize,
    vectors: Vec<Vec<f64>>,
}

impl OrthonormalBasis {
    pub fn empty(ambient_dim: usize) -> Self {
        Self {
            ambient_dim,
            vectors: Vec::new(),
        }
    }

    #[inline]
    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    #[inline]
    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    /// Number of vectors (the dimension of the spanned subspace).
    #[inline]
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn spans_ambient(&self) -> bool {
        self.vectors.len() == self.ambient_dim
    }

    /// `v − U Uᵀ v`, with one re-orthogonalization pass.
    pub fn project_out(&self, v: &[f64]) -> Vec<f64> {
        let mut r = v.to_vec();
        for _ in 0..2 {
            for u in &self.vectors {
                let c = dot(u, &r);
                for (ri, ui) in r.iter_mut().zip(u) {
                    *ri -= c * ui;
                }
            }
        }
        r
    }

    /// Orthogonalizes `v` against the basis and appends it unless its
    /// residual norm falls below `tol`. Returns whether it was kept.
    pub fn push(&mut self, v: &[f64], tol: f64) -> bool {
        assert_eq!(v.len(), self.ambient_dim, "vector dimension mismatch");
        if self.spans_ambient() {
            return false;
        }
        let mut r = self.project_out(v);
        let nrm = norm(&r);
        if nrm < tol {
            return false;
        }
        r.iter_mut().for_each(|x| *x /= nrm);
        self.vectors.push(r);
        true
    }

    /// Orthonormal basis of the orthogonal complement, completed from the
    /// standard basis in index order.
    pub fn complement(&self) -> OrthonormalBasis {
        let mut full = self.clone();
        let mut out = OrthonormalBasis::empty(self.ambient_dim);
        let mut e = vec![0.0; self.ambient_dim];
        for i in 0..self.ambient_dim {
            if full.spans_ambient() {
                break;
            }
            e[i] = 1.0;
            // 0.5 rather than the rank tolerance: a unit axis always leaves a
            // residual ≥ 1/√n along some axis not yet covered
            if full.push(&e, 0.5 / (self.ambient_dim as f64).sqrt()) {
                out.vectors.push(full.vectors.last().cloned().unwrap_or_default());
            }
            e[i] = 0.0;
        }
        out
    }
}

/// Orthonormal basis of `span(vectors)` by modified Gram–Schmidt with one
/// re-orthogonalization pass; vectors whose residual norm is below `tol` are
/// treated as dependent and dropped.
pub fn gram_schmidt(ambient_dim: usize, vectors: &[Vec<f64>], tol: f64) -> Result<OrthonormalBasis> {
    if !(tol.is_finite() && tol > 0.0) {
        return Err(SpcaError::InvalidTolerance(tol));
    }
    let mut basis = OrthonormalBasis::empty(ambient_dim);
    for v in vectors {
        if v.len() != ambient_dim {
            return Err(SpcaError::DimensionMismatch {
                expected: ambient_dim,
                got: v.len(),
            });
        }
        basis.push(v, tol);
    }
    Ok(basis)
}

/// `I − U Uᵀ`.
pub fn complement_projector(basis: &OrthonormalBasis) -> SymMatrix {
    let vs = basis.vectors();
    SymMatrix::from_upper_fn(basis.ambient_dim().max(1), |i, j| {
        let uu: f64 = vs.iter().map(|u| u[i] * u[j]).sum();
        if i == j {
            1.0 - uu
        } else {
            -uu
        }
    })
}

/// `(v[j])_{j ∈ Y}`.
pub fn restrict(v: &[f64], set: &IndexSet) -> Result<Vec<f64>> {
    if v.len() != set.parent_dim() {
        return Err(SpcaError::DimensionMismatch {
            expected: set.parent_dim(),
            got: v.len(),
        });
    }
    Ok(set.indices().iter().map(|&j| v[j]).collect())
}

/// Zero-padding of `w` from `Y` coordinates back to `ℝⁿ`.
pub fn embed(w: &[f64], set: &IndexSet) -> Result<Vec<f64>> {
    if w.len() != set.len() {
        return Err(SpcaError::DimensionMismatch {
            expected: set.len(),
            got: w.len(),
        });
    }
    let mut v = vec![0.0; set.parent_dim()];
    for (&j, &x) in set.indices().iter().zip(w) {
        v[j] = x;
    }
    Ok(v)
}

/// Largest eigenvalue and a unit eigenvector of a symmetric matrix.
///
/// The eigenvector is normalized so that its entry of largest magnitude is
/// positive (lowest index wins a magnitude tie).
pub fn sym_eig_max(m: &SymMatrix) -> (f64, Vec<f64>) {
    let n = m.n();
    if n == 1 {
        return (m.get(0, 0), vec![1.0]);
    }
    let (values, vectors) = jacobi_eigen(m);
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    let mut v: Vec<f64> = (0..n).map(|r| vectors[r * n + best]).collect();
    normalize(&mut v);
    canonical_sign(&mut v);
    (values[best], v)
}

/// Cyclic Jacobi. Returns eigenvalues and the row-major matrix whose columns
/// are the matching eigenvectors.
fn jacobi_eigen(m: &SymMatrix) -> (Vec<f64>, Vec<f64>) {
    let n = m.n();
    let mut a = m.as_slice().to_vec();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let scale = m.frobenius();
    if scale == 0.0 {
        return (vec![0.0; n], v);
    }
    for _ in 0..JACOBI_MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i * n + j] * a[i * n + j])
            .sum::<f64>()
            .sqrt();
        if off <= JACOBI_OFF_TOL * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    ((0..n).map(|i| a[i * n + i]).collect(), v)
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Scales `v` to unit length and returns the original norm.
pub fn normalize(v: &mut [f64]) -> f64 {
    let nrm = norm(v);
    if nrm > 0.0 {
        v.iter_mut().for_each(|x| *x /= nrm);
    }
    nrm
}

/// Flips `v` so its largest-magnitude entry is positive.
pub(crate) fn canonical_sign(v: &mut [f64]) {
    let mut best = 0;
    for i in 1..v.len() {
        if v[i].abs() > v[best].abs() {
            best = i;
        }
    }
    if v.get(best).is_some_and(|&x| x < 0.0) {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const S2: f64 = std::f64::consts::FRAC_1_SQRT_2;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn eig_two_by_two() {
        let m = SymMatrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        let (l, v) = sym_eig_max(&m);
        assert!((l - 3.0).abs() < 1e-12);
        assert!(close(&v, &[S2, S2], 1e-12));
    }

    #[test]
    fn eig_identity_uses_first_axis() {
        let (l, v) = sym_eig_max(&SymMatrix::identity(3));
        assert_eq!(l, 1.0);
        assert_eq!(v, vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn eig_scalar() {
        let m = SymMatrix::from_rows(&[vec![-4.0]]).unwrap();
        assert_eq!(sym_eig_max(&m), (-4.0, vec![1.0]));
    }

    #[test]
    fn eig_sign_convention_flips_negative_peak() {
        // top eigenvector is ±(0, 1)
        let m = SymMatrix::diagonal(&[1.0, 7.0]);
        let (_, v) = sym_eig_max(&m);
        assert_eq!(v, vec![0.0, 1.0]);
    }

    #[test]
    fn gram_schmidt_examples() {
        let b = gram_schmidt(3, &[vec![1.0, 0.0, 0.0], vec![1.0, 1.0, 0.0]], GS_DROP_TOL).unwrap();
        assert_eq!(b.len(), 2);
        assert!(close(&b.vectors()[0], &[1.0, 0.0, 0.0], 1e-15));
        assert!(close(&b.vectors()[1], &[0.0, 1.0, 0.0], 1e-15));

        let b = gram_schmidt(2, &[vec![1.0, 0.0], vec![2.0, 0.0]], GS_DROP_TOL).unwrap();
        assert_eq!(b.len(), 1);
        assert_eq!(b.vectors()[0], vec![1.0, 0.0]);

        assert!(gram_schmidt(4, &[], GS_DROP_TOL).unwrap().is_empty());
    }

    #[test]
    fn gram_schmidt_rejects_bad_input() {
        assert!(matches!(
            gram_schmidt(2, &[vec![1.0]], GS_DROP_TOL),
            Err(SpcaError::DimensionMismatch { .. })
        ));
        assert!(gram_schmidt(2, &[], 0.0).is_err());
    }

    #[test]
    fn projector_examples() {
        assert_eq!(
            complement_projector(&OrthonormalBasis::empty(3)),
            SymMatrix::identity(3)
        );
        let b = gram_schmidt(2, &[vec![1.0, 0.0]], GS_DROP_TOL).unwrap();
        assert_eq!(complement_projector(&b), SymMatrix::diagonal(&[0.0, 1.0]));
        let b = gram_schmidt(2, &[vec![1.0, 1.0], vec![1.0, -2.0]], GS_DROP_TOL).unwrap();
        assert!(complement_projector(&b).max_abs() < 1e-15);
    }

    #[test]
    fn complement_completes_basis() {
        let b = gram_schmidt(3, &[vec![1.0, 1.0, 1.0]], GS_DROP_TOL).unwrap();
        let c = b.complement();
        assert_eq!(c.len(), 2);
        for u in c.vectors() {
            assert!(dot(u, &b.vectors()[0]).abs() < 1e-14);
            assert!((norm(u) - 1.0).abs() < 1e-14);
        }
        assert!(dot(&c.vectors()[0], &c.vectors()[1]).abs() < 1e-14);
    }

    #[test]
    fn restrict_and_embed() {
        let y = IndexSet::new(vec![0, 2], 3).unwrap();
        assert_eq!(restrict(&[3.0, 0.0, 5.0], &y).unwrap(), vec![3.0, 5.0]);
        assert_eq!(embed(&[3.0, 5.0], &y).unwrap(), vec![3.0, 0.0, 5.0]);
        assert_eq!(embed(&[0.0, 0.0], &y).unwrap(), vec![0.0; 3]);
        let y1 = IndexSet::new(vec![1], 2).unwrap();
        assert_eq!(restrict(&[1.0, 1.0], &y1).unwrap(), vec![1.0]);
        assert!(restrict(&[1.0], &y1).is_err());
        assert!(embed(&[1.0, 2.0], &y1).is_err());
    }

    #[test]
    fn index_set_validation() {
        assert!(IndexSet::new(vec![1, 1], 3).is_err());
        assert!(IndexSet::new(vec![2, 1], 3).is_err());
        assert!(IndexSet::new(vec![3], 3).is_err());
        assert_eq!(IndexSet::from_unsorted(vec![2, 0, 2], 3).unwrap().indices(), &[0, 2]);
        assert_eq!(IndexSet::from_mask(&[true, false, true]).indices(), &[0, 2]);
    }

    #[test]
    fn combinations_are_lexicographic() {
        let all: Vec<_> = Combinations::new(4, 2).collect();
        assert_eq!(
            all,
            vec![vec![0, 1], vec![0, 2], vec![0, 3], vec![1, 2], vec![1, 3], vec![2, 3]]
        );
        assert_eq!(Combinations::new(3, 3).count(), 1);
        assert_eq!(Combinations::new(3, 0).count(), 1);
        assert_eq!(Combinations::new(2, 3).count(), 0);
    }

    #[test]
    fn construction_symmetrizes_or_rejects() {
        let m = SymMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0 + 1e-12, 1.0]]).unwrap();
        assert_eq!(m.get(0, 1), m.get(1, 0));
        let err = SymMatrix::from_rows(&[vec![1.0, 2.0], vec![2.1, 1.0]]).unwrap_err();
        assert!(matches!(err, SpcaError::Asymmetric { i: 0, j: 1, .. }));
        assert!(matches!(
            SymMatrix::from_rows(&[vec![1.0, 2.0, 3.0], vec![1.0, 2.0, 3.0]]),
            Err(SpcaError::NotSquare { .. })
        ));
        assert!(SymMatrix::from_rows(&[]).is_err());
        assert!(SymMatrix::from_row_major(1, vec![f64::NAN]).is_err());
    }

    #[test]
    fn fingerprint_tracks_content() {
        let a = SymMatrix::diagonal(&[1.0, 2.0]);
        let b = SymMatrix::diagonal(&[1.0, 2.5]);
        assert_eq!(a.fingerprint(), a.clone().fingerprint());
        assert_ne!(a.fingerprint(), b.fingerprint());
    }
}
