//! Test-local oracles. Nothing here calls into the library's solvers.
#![allow(clippy::needless_range_loop)]
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Dense = Vec<Vec<f64>>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `GᵀG / n` with uniform entries in [-1, 1].
pub fn psd(rng: &mut ChaCha8Rng, n: usize) -> Dense {
    let g: Dense = (0..n)
        .map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| (0..n).map(|t| g[t][i] * g[t][j]).sum::<f64>() / n as f64)
                .collect()
        })
        .collect()
}

pub fn symmetric(rng: &mut ChaCha8Rng, n: usize) -> Dense {
    let mut m = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i..n {
            let v = rng.random_range(-1.0..1.0);
            m[i][j] = v;
            m[j][i] = v;
        }
    }
    m
}

/// Number of eigenvalues of `m` strictly below `sigma`, from the signs of the
/// pivots of `m − σI` (Sylvester's law of inertia).
fn count_below(m: &Dense, sigma: f64) -> usize {
    let n = m.len();
    let mut a: Dense = m.clone();
    for (i, row) in a.iter_mut().enumerate() {
        row[i] -= sigma;
    }
    let scale = m.iter().flatten().fold(1.0f64, |s, v| s.max(v.abs()));
    let mut negatives = 0;
    for k in 0..n {
        let mut piv = a[k][k];
        if piv.abs() < 1e-300 {
            piv = -1e-14 * scale;
        }
        if piv < 0.0 {
            negatives += 1;
        }
        for i in k + 1..n {
            let f = a[i][k] / piv;
            for j in k + 1..n {
                a[i][j] -= f * a[k][j];
            }
        }
    }
    negatives
}

/// Largest eigenvalue by bisection on the inertia count.
pub fn lambda_max(m: &Dense) -> f64 {
    let n = m.len();
    let radius = (0..n)
        .map(|i| m[i][i].abs() + (0..n).filter(|&j| j != i).map(|j| m[i][j].abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let (mut lo, mut hi) = (-radius - 1.0, radius + 1.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if count_below(m, mid) == n {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 1e-15 * (1.0 + hi.abs()) {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Orthonormal basis of span(vs) by modified Gram–Schmidt, dropping
/// residuals at or below `tol`.
pub fn orthonormal(vs: &[Vec<f64>], tol: f64) -> Dense {
    let mut basis: Dense = Vec::new();
    for v in vs {
        let mut w = v.clone();
        for _ in 0..2 {
            for b in &basis {
                let c: f64 = w.iter().zip(b).map(|(x, y)| x * y).sum();
                for (x, y) in w.iter_mut().zip(b) {
                    *x -= c * y;
                }
            }
        }
        let nrm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if nrm > tol {
            basis.push(w.into_iter().map(|x| x / nrm).collect());
        }
    }
    basis
}

/// Max of `xᵀQx` over unit `x` supported in `ys`, orthogonal to `prefix`.
/// `None` if no such `x` exists. Valid for PSD `q`.
pub fn support_optimum(q: &Dense, ys: &[usize], prefix: &[Vec<f64>]) -> Option<f64> {
    let m = ys.len();
    let restricted: Dense = prefix.iter().map(|x| ys.iter().map(|&i| x[i]).collect()).collect();
    let basis = orthonormal(&restricted, 1e-10);
    if basis.len() >= m {
        return None;
    }
    let proj: Dense = (0..m)
        .map(|i| {
            (0..m)
                .map(|j| (if i == j { 1.0 } else { 0.0 }) - basis.iter().map(|b| b[i] * b[j]).sum::<f64>())
                .collect()
        })
        .collect();
    let qy: Dense = ys.iter().map(|&i| ys.iter().map(|&j| q[i][j]).collect()).collect();
    let pq = matmul(&proj, &qy);
    Some(lambda_max(&matmul(&pq, &proj)))
}

/// Exhaustive prefix-conditional optimum over every support of size `p`,
/// enumerated by bitmask. Valid for PSD `q` and `n < 64`.
pub fn oracle_optimum(q: &Dense, p: usize, prefix: &[Vec<f64>]) -> Option<f64> {
    let n = q.len();
    let mut best: Option<f64> = None;
    for mask in 0u64..(1u64 << n) {
        if mask.count_ones() as usize != p {
            continue;
        }
        let ys: Vec<usize> = (0..n).filter(|&i| mask >> i & 1 == 1).collect();
        if let Some(v) = support_optimum(q, &ys, prefix) {
            best = Some(best.map_or(v, |b: f64| b.max(v)));
        }
    }
    best
}

pub fn matmul(a: &Dense, b: &Dense) -> Dense {
    let (r, k, c) = (a.len(), b.len(), b.first().map_or(0, Vec::len));
    (0..r)
        .map(|i| (0..c).map(|j| (0..k).map(|t| a[i][t] * b[t][j]).sum()).collect())
        .collect()
}

pub fn quad(q: &Dense, x: &[f64]) -> f64 {
    (0..q.len())
        .map(|i| x[i] * (0..q.len()).map(|j| q[i][j] * x[j]).sum::<f64>())
        .sum()
}

pub fn trace(q: &Dense) -> f64 {
    (0..q.len()).map(|i| q[i][i]).sum()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Numerical rank by Gaussian elimination with full pivoting.
pub fn rank(vs: &[Vec<f64>], tol: f64) -> usize {
    let mut a: Dense = vs.to_vec();
    let rows = a.len();
    let cols = a.first().map_or(0, Vec::len);
    let mut r = 0;
    for _ in 0..rows.min(cols) {
        let mut best = (0.0, 0, 0);
        for (i, row) in a.iter().enumerate().skip(r) {
            for (j, v) in row.iter().enumerate() {
                if v.abs() > best.0 {
                    best = (v.abs(), i, j);
                }
            }
        }
        if best.0 <= tol {
            break;
        }
        a.swap(r, best.1);
        for row in a.iter_mut() {
            row.swap(r, best.2);
        }
        for i in r + 1..rows {
            let f = a[i][r] / a[r][r];
            for j in r..cols {
                a[i][j] -= f * a[r][j];
            }
        }
        r += 1;
    }
    r
}
