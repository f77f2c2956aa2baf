//! Dense local algebra: factorizations and symmetric eigendecomposition.

use crate::error::{Error, Result};
use nalgebra::{Cholesky, DVectorViewMut, Dyn, SymmetricEigen, LU};

pub type DenseMat = nalgebra::DMatrix<f64>;

/// Relative pivot size below which an LU factor is treated as singular.
const LU_PIVOT_RTOL: f64 = 1e-14;

#[derive(Debug, Clone)]
enum Factor {
    Cholesky(Cholesky<f64, Dyn>),
    Lu(LU<f64, Dyn, Dyn>),
}

/// A factored square matrix ready for repeated solves.
#[derive(Debug, Clone)]
pub struct Factorization {
    n: usize,
    factor: Factor,
}

impl Factorization {
    /// Cholesky when `spd` is set, partial-pivot LU otherwise.
    pub fn new(m: DenseMat, spd: bool) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::NotSquare { nrows: m.nrows(), ncols: m.ncols() });
        }
        let n = m.nrows();
        if spd {
            return Cholesky::new(m)
                .map(|c| Factorization { n, factor: Factor::Cholesky(c) })
                .ok_or_else(|| Error::NotSpd(format!("Cholesky factorization of a {n}x{n} block failed")));
        }
        let lu = m.lu();
        let u = lu.u();
        let d = u.diagonal();
        let max = d.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        let min = d.iter().fold(f64::INFINITY, |a, x| a.min(x.abs()));
        if u.nrows() > 0 && (max == 0.0 || min <= LU_PIVOT_RTOL * max) {
            return Err(Error::Singular(format!(
                "LU pivot ratio {:.3e} on a {}x{} block",
                if max == 0.0 { 0.0 } else { min / max },
                u.nrows(),
                u.nrows()
            )));
        }
        Ok(Factorization { n, factor: Factor::Lu(lu) })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn is_cholesky(&self) -> bool {
        matches!(self.factor, Factor::Cholesky(_))
    }

    /// Overwrites `b` with the solution of `M x = b`.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = b.len();
        let mut v = DVectorViewMut::from_slice(b, n);
        match &self.factor {
            Factor::Cholesky(c) => c.solve_mut(&mut v),
            Factor::Lu(l) => {
                let ok = l.solve_mut(&mut v);
                debug_assert!(ok);
            }
        }
    }

    /// Solves for every column of `b` in place.
    pub fn solve_mat(&self, b: &mut DenseMat) {
        match &self.factor {
            Factor::Cholesky(c) => c.solve_mut(b),
            Factor::Lu(l) => {
                let ok = l.solve_mut(b);
                debug_assert!(ok);
            }
        }
    }
}

/// `(M + M^T) / 2`.
pub fn symmetrize(m: &DenseMat) -> DenseMat {
    (m + m.transpose()) * 0.5
}

/// Flips each column so its first entry of largest magnitude is positive.
pub fn fix_signs(v: &mut DenseMat) {
    for mut col in v.column_iter_mut() {
        let mut best = 0.0f64;
        let mut sign = 1.0;
        for &x in col.iter() {
            if x.abs() > best {
                best = x.abs();
                sign = x.signum();
            }
        }
        if sign < 0.0 {
            col.neg_mut();
        }
    }
}

/// Eigen-decomposition of a symmetric matrix; values descending, vectors
/// orthonormal with the sign convention of [`fix_signs`].
pub fn sym_eig(m: &DenseMat) -> Result<(Vec<f64>, DenseMat)> {
    if !m.is_square() {
        return Err(Error::NotSquare { nrows: m.nrows(), ncols: m.ncols() });
    }
    let n = m.nrows();
    if n == 0 {
        return Ok((Vec::new(), DenseMat::zeros(0, 0)));
    }
    let sym = symmetrize(m);
    let maxit = 1000 * n.max(10);
    let finite = |e: &SymmetricEigen<f64, Dyn>| {
        e.eigenvalues.iter().chain(e.eigenvectors.iter()).all(|x| x.is_finite())
    };
    let mut eig = SymmetricEigen::try_new(sym.clone(), f64::EPSILON, maxit).filter(finite);
    if eig.is_none() {
        // The QL sweep underflows on clusters of exactly zero eigenvalues;
        // a shift by the norm moves them away from zero.
        let shift = sym.norm();
        let shifted = &sym + DenseMat::identity(n, n) * shift;
        eig = SymmetricEigen::try_new(shifted, f64::EPSILON, maxit).filter(finite).map(|mut e| {
            e.eigenvalues.add_scalar_mut(-shift);
            e
        });
    }
    let eig = eig.ok_or_else(|| Error::NoConvergence(format!("symmetric eigensolver on a {n}x{n} matrix")))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vecs = eig.eigenvectors.select_columns(order.iter());
    fix_signs(&mut vecs);
    Ok((values, vecs))
}

/// Smallest and largest eigenvalue of a symmetric matrix.
pub fn sym_extreme_eigs(m: &DenseMat) -> Result<(f64, f64)> {
    let (vals, _) = sym_eig(m)?;
    match (vals.last(), vals.first()) {
        (Some(&lo), Some(&hi)) => Ok((lo, hi)),
        _ => Err(Error::InvalidArgument("empty matrix has no eigenvalues".into())),
    }
}

/// Spectral norm (largest singular value).
pub fn norm2(m: &DenseMat) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.singular_values().max()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cholesky_and_lu_solve() {
        let a = DenseMat::from_row_slice(3, 3, &[4.0, 1.0, 0.0, 1.0, 3.0, 1.0, 0.0, 1.0, 2.0]);
        let x = [1.0, -2.0, 0.5];
        let b: Vec<f64> = (&a * nalgebra::DVector::from_column_slice(&x)).iter().copied().collect();
        for spd in [true, false] {
            let f = Factorization::new(a.clone(), spd).unwrap();
            assert_eq!(f.dim(), 3);
            let mut y = b.clone();
            f.solve_in_place(&mut y);
            for (yi, xi) in y.iter().zip(x) {
                assert!((yi - xi).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn factorization_failures() {
        let indef = DenseMat::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(Factorization::new(indef, true), Err(Error::NotSpd(_))));
        let sing = DenseMat::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert!(matches!(Factorization::new(sing, false), Err(Error::Singular(_))));
    }

    #[test]
    fn eig_is_sorted_and_signed() {
        let m = DenseMat::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        let (vals, vecs) = sym_eig(&m).unwrap();
        assert!((vals[0] - 3.0).abs() < 1e-14 && (vals[1] - 1.0).abs() < 1e-14);
        let s = 1.0 / 2f64.sqrt();
        assert!((vecs[(0, 0)] - s).abs() < 1e-14 && (vecs[(1, 0)] - s).abs() < 1e-14);
        let d = DenseMat::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 5.0]);
        let (_, v) = sym_eig(&d).unwrap();
        assert_eq!(v, DenseMat::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]));
    }

    #[test]
    fn eig_with_many_zero_rows() {
        let t = [
            (0, 0, 2.5213123810905174),
            (0, 29, -4.084883949201269e-5),
            (29, 29, 2.12187809906243),
            (0, 31, -1.3770084941872262e-3),
            (29, 31, -1.6670532954376243e-4),
            (31, 31, 2.809575222886038),
            (31, 32, 6.955526045792397e-1),
            (32, 32, 3.135992298041953),
        ];
        let mut m = DenseMat::zeros(33, 33);
        for &(i, j, v) in &t {
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
        let (vals, vecs) = sym_eig(&m).unwrap();
        assert!(vals.iter().all(|v| v.is_finite()));
        let idx = [0, 29, 31, 32];
        let block = DenseMat::from_fn(4, 4, |p, q| m[(idx[p], idx[q])]);
        let (bv, _) = sym_eig(&block).unwrap();
        for k in 0..4 {
            assert!((vals[k] - bv[k]).abs() < 1e-14);
        }
        assert!(vals[4..].iter().all(|v| v.abs() < 1e-13));
        let resid = &m * &vecs - &vecs * DenseMat::from_diagonal(&nalgebra::DVector::from_vec(vals));
        assert!(resid.norm() < 1e-13);
    }
}
