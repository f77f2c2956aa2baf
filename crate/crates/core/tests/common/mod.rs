//! Dense oracles and fixtures shared by the integration tests.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::seq::SliceRandom;
use rand::Rng;
use spectral_schwarz::partition::{Partition, SubdomainMap};
use spectral_schwarz::precond::{Combine, OneLevel, SchwarzPreconditioner};
use spectral_schwarz::sparse::Graph;
use std::io::Write;

/// Writes one verdict line straight to stderr so it is shown even for passing tests.
pub fn verdict(id: &str, pass: bool, detail: &str) {
    let tag = if pass { "PASS" } else { "FAIL" };
    let _ = writeln!(std::io::stderr(), "{id} {tag}: {detail}");
}

/// Random connected-growth partition into `k` nonempty parts of a connected graph.
pub fn random_partition(g: &Graph, k: usize, rng: &mut impl Rng) -> Partition {
    let n = g.n();
    let mut owner = vec![usize::MAX; n];
    let mut nodes: Vec<usize> = (0..n).collect();
    nodes.shuffle(rng);
    let mut frontier: Vec<(usize, usize)> = Vec::new();
    for (p, &s) in nodes.iter().take(k).enumerate() {
        owner[s] = p;
        frontier.extend(g.neighbors(s).iter().map(|&v| (v, p)));
    }
    while let Some(pos) = (!frontier.is_empty()).then(|| rng.gen_range(0..frontier.len())) {
        let (v, p) = frontier.swap_remove(pos);
        if owner[v] == usize::MAX {
            owner[v] = p;
            frontier.extend(g.neighbors(v).iter().filter(|&&w| owner[w] == usize::MAX).map(|&w| (w, p)));
        }
    }
    for o in owner.iter_mut().filter(|o| **o == usize::MAX) {
        *o = 0;
    }
    Partition::from_owner(owner, k).unwrap()
}

/// `R_i^T L R_i` for a local matrix `L` in subdomain order.
pub fn lift(n: usize, idx: &[usize], local: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(n, n);
    for (p, &i) in idx.iter().enumerate() {
        for (q, &j) in idx.iter().enumerate() {
            out[(i, j)] += local[(p, q)];
        }
    }
    out
}

pub fn principal(a: &DMatrix<f64>, idx: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(idx.len(), idx.len(), |p, q| a[(idx[p], idx[q])])
}

/// Smallest eigenvalue, computed on `M + ‖M‖_F I` because the plain QL sweep
/// can underflow on large blocks of exact zeros.
pub fn min_eig(m: &DMatrix<f64>) -> f64 {
    let s = (m + m.transpose()) * 0.5;
    let shift = s.norm();
    let n = s.nrows();
    SymmetricEigen::new(s + DMatrix::identity(n, n) * shift).eigenvalues.min() - shift
}

pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    m.clone().singular_values().max()
}

/// Dense `Σ R_i^T (D_i) A_ii^{-1} R_i`.
pub fn dense_one_level(a: &DMatrix<f64>, maps: &[SubdomainMap], ras: bool) -> DMatrix<f64> {
    let n = a.nrows();
    let mut m = DMatrix::zeros(n, n);
    for s in maps {
        let idx = s.indices();
        let mut inv = principal(a, idx).lu().try_inverse().unwrap();
        if ras {
            for r in s.n_interior()..idx.len() {
                inv.row_mut(r).fill(0.0);
            }
        }
        m += lift(n, idx, &inv);
    }
    m
}

/// Dense matrix of the preconditioner assembled from its definition.
pub fn dense_preconditioner(a_sparse: &spectral_schwarz::SparseMat, pre: &SchwarzPreconditioner) -> DMatrix<f64> {
    let a = a_sparse.to_dense().unwrap();
    let n = a.nrows();
    let m1 = dense_one_level(&a, pre.maps(), pre.one_level_kind() == OneLevel::Ras);
    let Some(cs) = pre.coarse() else { return m1 };
    let r0t = cs.r0t().to_dense().unwrap();
    let a00 = r0t.transpose() * &a * &r0t;
    let q = &r0t * a00.lu().solve(&r0t.transpose()).unwrap();
    match pre.combine() {
        Combine::Additive => m1 + q,
        Combine::Deflated => {
            let p = DMatrix::identity(n, n) - &q * &a;
            let pt = DMatrix::identity(n, n) - &a * &q;
            &q + p * m1 * pt
        }
    }
}

pub fn rel_diff(x: &[f64], y: &[f64]) -> f64 {
    let d: f64 = x.iter().zip(y).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    let s: f64 = y.iter().map(|b| b * b).sum::<f64>().sqrt();
    d / s.max(f64::MIN_POSITIVE)
}

pub fn random_vec(n: usize, rng: &mut impl Rng) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

pub fn dv(x: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(x)
}
