#![allow(clippy::needless_range_loop)]

mod common;

use common::{dot, lambda_max, oracle_optimum, psd, quad, rank, rng, support_optimum, symmetric, trace};
use ortho_spca::{
    block_diagonalize, check_solution, complement_projector, embed, exhaustive_optimum, gram_schmidt, lower_bound,
    restrict, solve_kth_bnb, solve_kth_exact, solve_sequence, sym_eig_max, threshold_matrix, threshold_spca,
    upper_bound, IndexSet, KthSolver, SparseComponent, SupportBounds, SymMatrix,
};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;

fn sym(rows: &[Vec<f64>]) -> SymMatrix {
    SymMatrix::from_rows(rows).unwrap()
}

fn random_unit(r: &mut impl Rng, n: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..n).map(|_| r.random_range(-1.0..1.0)).collect();
    let nrm = dot(&v, &v).sqrt().max(1e-300);
    v.iter_mut().for_each(|x| *x /= nrm);
    v
}

fn max_abs_inner(xs: &[Vec<f64>]) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..xs.len() {
        for j in i + 1..xs.len() {
            worst = worst.max(dot(&xs[i], &xs[j]).abs());
        }
    }
    worst
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn rayleigh_dominance(seed in any::<u64>(), n in 1usize..=12) {
        let mut r = rng(seed);
        let m = sym(&symmetric(&mut r, n));
        let (lambda, v) = sym_eig_max(&m);
        prop_assert!((dot(&v, &v) - 1.0).abs() < 1e-10);
        for _ in 0..1000 {
            let u = random_unit(&mut r, n);
            prop_assert!(m.quad_form(&u) <= lambda + 1e-10);
        }
    }

    #[test]
    fn eigenvalue_matches_bisection(seed in any::<u64>(), n in 1usize..=8) {
        let mut r = rng(seed);
        let rows = symmetric(&mut r, n);
        let (lambda, v) = sym_eig_max(&sym(&rows));
        prop_assert!((lambda - lambda_max(&rows)).abs() < 1e-9);
        prop_assert!((quad(&rows, &v) - lambda).abs() < 1e-9);
    }

    #[test]
    fn projector_is_idempotent(seed in any::<u64>(), n in 1usize..=8, k in 0usize..=8) {
        let mut r = rng(seed);
        let vs: Vec<Vec<f64>> = (0..k.min(n)).map(|_| random_unit(&mut r, n)).collect();
        let basis = gram_schmidt(n, &vs, 1e-10).unwrap();
        let p = complement_projector(&basis);
        let pp = p.sandwich(&SymMatrix::identity(n));
        let p2: Vec<Vec<f64>> = (0..n).map(|i| p.mul_vec(pp.row(i))).collect();
        for i in 0..n {
            for j in 0..n {
                prop_assert!((p2[i][j] - p.get(i, j)).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn gram_schmidt_rank_matches_elimination(seed in any::<u64>(), n in 1usize..=7, base in 1usize..=7, extra in 0usize..=4) {
        let mut r = rng(seed);
        let base = base.min(n);
        let gens: Vec<Vec<f64>> = (0..base).map(|_| random_unit(&mut r, n)).collect();
        let mut vs = gens.clone();
        for _ in 0..extra {
            let mut v = vec![0.0; n];
            for g in &gens {
                let c: f64 = r.random_range(-1.0..1.0);
                v.iter_mut().zip(g).for_each(|(x, y)| *x += c * y);
            }
            vs.push(v);
        }
        vs.shuffle(&mut r);
        let basis = gram_schmidt(n, &vs, 1e-10).unwrap();
        prop_assert_eq!(basis.len(), rank(&vs, 1e-9));
        for a in 0..basis.len() {
            for b in 0..basis.len() {
                let want = if a == b { 1.0 } else { 0.0 };
                prop_assert!((dot(&basis.vectors()[a], &basis.vectors()[b]) - want).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn embed_restrict_round_trip(mask in proptest::collection::vec(any::<bool>(), 1..12), seed in any::<u64>()) {
        let set = IndexSet::from_mask(&mask);
        let mut r = rng(seed);
        let w: Vec<f64> = (0..set.len()).map(|_| r.random_range(-5.0..5.0)).collect();
        let x = embed(&w, &set).unwrap();
        prop_assert_eq!(restrict(&x, &set).unwrap(), w);
        for (i, v) in x.iter().enumerate() {
            if !set.contains(i) {
                prop_assert_eq!(*v, 0.0);
            }
        }
    }

    #[test]
    fn threshold_error_bounds(seed in any::<u64>(), n in 2usize..=10, delta in 0.0f64..0.8) {
        let mut r = rng(seed);
        let rows = symmetric(&mut r, n);
        let q = sym(&rows);
        let qd = threshold_matrix(&q, delta).unwrap();
        for i in 0..n {
            for j in 0..n {
                prop_assert!((q.get(i, j) - qd.get(i, j)).abs() <= delta);
            }
        }
        let p = r.random_range(1..=n);
        for _ in 0..50 {
            let mut idx: Vec<usize> = (0..n).collect();
            idx.shuffle(&mut r);
            let set = IndexSet::from_unsorted(idx[..p].to_vec(), n).unwrap();
            let u = embed(&random_unit(&mut r, p), &set).unwrap();
            let gap = (q.quad_form(&u) - qd.quad_form(&u)).abs();
            prop_assert!(gap <= p as f64 * delta + 1e-12);
        }
    }

    #[test]
    fn permutation_round_trip_is_exact(seed in any::<u64>(), n in 2usize..=10, delta in 0.0f64..0.6) {
        let mut r = rng(seed);
        let q = sym(&symmetric(&mut r, n));
        let s = block_diagonalize(&q, delta).unwrap();
        let qd = threshold_matrix(&q, delta).unwrap();
        prop_assert_eq!(s.unpermute(&s.permute(&qd)), qd.clone());
        prop_assert_eq!(s.permute(&qd), s.block_matrix());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn exact_sequence_invariants(seed in any::<u64>(), n in 2usize..=6, p_frac in 0.0f64..1.0) {
        let mut r = rng(seed);
        let rows = psd(&mut r, n);
        let q = sym(&rows);
        let p = 1 + ((n as f64 - 1.0) * p_frac) as usize;
        let sol = solve_sequence(&q, p, n).unwrap();
        let xs = sol.dense_components();
        prop_assert!(max_abs_inner(&xs) <= 1e-8);
        let v = sol.variances();
        // a relaxed (dense) component optimizes over a larger set
        for w in sol.components.windows(2) {
            if !w[0].sparsity_relaxed && !w[1].sparsity_relaxed {
                prop_assert!(w[1].variance <= w[0].variance + 1e-9);
            }
        }
        let tr = trace(&rows);
        prop_assert!((v.iter().sum::<f64>() - tr).abs() <= 1e-8 * tr.max(1.0));
        let again = solve_sequence(&q, p, n).unwrap();
        let supports: Vec<_> = sol.components.iter().map(|c| c.support.clone()).collect();
        let supports2: Vec<_> = again.components.iter().map(|c| c.support.clone()).collect();
        prop_assert_eq!(supports, supports2);
        prop_assert!(check_solution(&q, p, &sol, 1e-8).passed);
    }

    #[test]
    fn exact_step_matches_oracle(seed in any::<u64>(), n in 2usize..=7, p in 1usize..=3, steps in 1usize..=3) {
        let p = p.min(n);
        let mut r = rng(seed);
        let rows = psd(&mut r, n);
        let q = sym(&rows);
        let mut prev: Vec<SparseComponent> = Vec::new();
        for _ in 0..steps.min(n) {
            let xs: Vec<Vec<f64>> = prev.iter().map(SparseComponent::dense).collect();
            let c = solve_kth_exact(&q, p, &prev).unwrap();
            if let Some(opt) = oracle_optimum(&rows, p, &xs) {
                prop_assert!(!c.sparsity_relaxed);
                prop_assert!((c.variance - opt).abs() <= 1e-9, "{} vs {}", c.variance, opt);
                let lib = exhaustive_optimum(&q, p, &xs).unwrap();
                prop_assert!((lib - opt).abs() <= 1e-9);
            } else {
                prop_assert!(c.sparsity_relaxed);
            }
            prev.push(c);
        }
    }

    #[test]
    fn bnb_matches_oracle(seed in any::<u64>(), n in 2usize..=7, p in 1usize..=3, eps_idx in 0usize..3) {
        let eps = [0.0, 0.01, 0.1][eps_idx];
        let p = p.min(n);
        let mut r = rng(seed);
        let rows = psd(&mut r, n);
        let q = sym(&rows);
        let mut prev: Vec<SparseComponent> = Vec::new();
        for _ in 0..n.min(3) {
            let xs: Vec<Vec<f64>> = prev.iter().map(SparseComponent::dense).collect();
            let (c, cert) = solve_kth_bnb(&q, p, &prev, eps).unwrap();
            prop_assert!(cert.ub - cert.lb <= eps + 1e-12);
            prop_assert!((cert.lb - c.variance).abs() <= 1e-10);
            let x = c.dense();
            prop_assert!((dot(&x, &x) - 1.0).abs() <= 1e-9);
            for y in &xs {
                prop_assert!(dot(&x, y).abs() <= 1e-9);
            }
            if let Some(opt) = oracle_optimum(&rows, p, &xs) {
                prop_assert!(c.nnz() <= p);
                prop_assert!(opt - c.variance <= eps + 1e-9);
                if eps == 0.0 {
                    prop_assert!((opt - c.variance).abs() <= 1e-9);
                }
            }
            prev.push(c);
        }
    }

    #[test]
    fn node_bounds_are_sound(seed in any::<u64>(), n in 2usize..=7, p in 1usize..=3) {
        let p = p.min(n);
        let mut r = rng(seed);
        let rows = psd(&mut r, n);
        let q = sym(&rows);
        let prev = if r.random_bool(0.5) {
            vec![solve_kth_exact(&q, p, &[]).unwrap()]
        } else {
            Vec::new()
        };
        let xs: Vec<Vec<f64>> = prev.iter().map(SparseComponent::dense).collect();
        for _ in 0..10 {
            let mut lower = vec![false; n];
            let mut upper = vec![true; n];
            for j in 0..n {
                match r.random_range(0..4) {
                    0 => lower[j] = true,
                    1 => upper[j] = false,
                    _ => {}
                }
            }
            let (lc, uc) = (lower.iter().filter(|b| **b).count(), upper.iter().filter(|b| **b).count());
            if lc > p || uc < p {
                continue;
            }
            let node = SupportBounds::new(lower.clone(), upper.clone()).unwrap();
            let mut node_opt: Option<f64> = None;
            for mask in 0u32..(1 << n) {
                let ys: Vec<usize> = (0..n).filter(|&i| mask >> i & 1 == 1).collect();
                if ys.len() != p || ys.iter().any(|&i| !upper[i]) || (0..n).any(|i| lower[i] && mask >> i & 1 == 0) {
                    continue;
                }
                if let Some(v) = support_optimum(&rows, &ys, &xs) {
                    node_opt = Some(node_opt.map_or(v, |b: f64| b.max(v)));
                }
            }
            let ub = upper_bound(&q, p, &prev, &node).unwrap();
            if let Some(opt) = node_opt {
                prop_assert!(opt <= ub + 1e-9, "opt {} ub {}", opt, ub);
            }
            if let Some((lb, c)) = lower_bound(&q, p, &prev, &node).unwrap() {
                let opt = node_opt.expect("a witness implies a feasible support");
                prop_assert!(lb <= opt + 1e-9);
                prop_assert!(c.nnz() <= p);
                prop_assert!(c.support.indices().iter().all(|&i| upper[i]));
            }
        }
    }

    #[test]
    fn threshold_guarantee_holds(seed in any::<u64>(), delta in 0.0f64..0.3, p in 1usize..=3) {
        let mut r = rng(seed);
        let n = r.random_range(3..=8);
        let rows = psd(&mut r, n);
        let q = sym(&rows);
        let k = r.random_range(1..=n);
        let out = threshold_spca(&q, p.min(n), delta, k, KthSolver::Exact).unwrap();
        let sol = &out.solution;
        prop_assert!(check_solution(&q, p.min(n), sol, 1e-8).passed);
        let slack = 2.0 * p.min(n) as f64 * delta;
        let xs = sol.dense_components();
        for (i, c) in sol.components.iter().enumerate() {
            prop_assert!((quad(&rows, &xs[i]) - c.variance).abs() < 1e-9);
            if let Some(opt) = oracle_optimum(&rows, p.min(n), &xs[..i]) {
                prop_assert!(c.variance >= opt - slack - 1e-8, "k={} {} < {} - {}", i + 1, c.variance, opt, slack);
            }
        }
    }
}
