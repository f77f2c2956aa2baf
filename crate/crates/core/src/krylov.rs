//! Preconditioned conjugate gradients, right-preconditioned GMRES and
//! condition-number estimation.

use crate::dense::{sym_eig, symmetrize, DenseMat};
use crate::error::{Error, Result};
use crate::precond::Preconditioner;
use crate::sparse::{axpy, dot, norm2, SparseMat};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::fmt::Write as _;
use std::time::{Duration, Instant};

/// True residual is recomputed every this many CG iterations.
const RESIDUAL_REPLACEMENT: usize = 25;
/// Largest Krylov basis GMRES may build.
pub const GMRES_MAX_ITERATIONS: usize = 1000;
/// Orthogonality loss that triggers a second Gram–Schmidt pass.
const REORTH_TOL: f64 = 1e-8;
/// Largest order for which condition numbers are computed densely.
pub const DENSE_CONDITION_LIMIT: usize = 400;

/// Convergence record of one solve.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub iterations: usize,
    /// `‖b - A x_k‖ / ‖b‖` for `k = 0..=iterations`, as tracked by the
    /// recurrence; convergence is confirmed on the true residual.
    pub residuals: Vec<f64>,
    pub converged: bool,
    /// Extreme Ritz value ratio from the CG Lanczos coefficients.
    pub condition_estimate: Option<f64>,
    pub wall_time: Duration,
}

impl SolveReport {
    pub fn final_residual(&self) -> f64 {
        *self.residuals.last().unwrap_or(&0.0)
    }

    /// Two columns: iteration, relative residual.
    pub fn history(&self) -> String {
        let mut s = String::new();
        for (k, r) in self.residuals.iter().enumerate() {
            let _ = writeln!(s, "{k} {r:.16e}");
        }
        s
    }

    /// Turns a non-converged report into an error.
    pub fn ensure_converged(&self) -> Result<()> {
        if self.converged {
            Ok(())
        } else {
            Err(Error::NotConverged { iterations: self.iterations, residual: self.final_residual() })
        }
    }
}

fn check_dims(a: &SparseMat, m: &dyn Preconditioner, b: &[f64]) -> Result<()> {
    if !a.is_square() {
        return Err(Error::NotSquare { nrows: a.nrows(), ncols: a.ncols() });
    }
    if b.len() != a.nrows() || m.dim() != a.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "matrix of order {}, right-hand side of length {}, preconditioner of order {}",
            a.nrows(),
            b.len(),
            m.dim()
        )));
    }
    Ok(())
}

fn true_residual(a: &SparseMat, b: &[f64], x: &[f64], r: &mut [f64]) {
    a.spmv_into(x, r);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
}

/// Preconditioned CG from `x0 = 0`, calling `monitor(k, x_k)` after every
/// iteration. Returns the iterate and report whether or not it converged.
pub fn pcg_monitored(
    a: &SparseMat,
    m: &dyn Preconditioner,
    b: &[f64],
    tol: f64,
    maxit: usize,
    monitor: &mut dyn FnMut(usize, &[f64]),
) -> Result<(Vec<f64>, SolveReport)> {
    check_dims(a, m, b)?;
    if !m.is_symmetric() {
        return Err(Error::InvalidArgument("CG requires a symmetric preconditioner".into()));
    }
    let start = Instant::now();
    let n = b.len();
    let bnorm = norm2(b);
    let mut x = vec![0.0; n];
    let mut report = SolveReport {
        iterations: 0,
        residuals: vec![if bnorm == 0.0 { 0.0 } else { 1.0 }],
        converged: bnorm == 0.0,
        condition_estimate: None,
        wall_time: Duration::ZERO,
    };
    if report.converged {
        report.wall_time = start.elapsed();
        return Ok((x, report));
    }
    let mut r = b.to_vec();
    let mut z = vec![0.0; n];
    m.apply(&r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut q = vec![0.0; n];
    let mut alphas = Vec::new();
    let mut betas = Vec::new();

    for k in 1..=maxit {
        a.spmv_into(&p, &mut q);
        let pq = dot(&p, &q);
        if !(pq > 0.0) {
            return Err(Error::Breakdown { iteration: k, msg: format!("p^T A p = {pq:.3e}") });
        }
        let alpha = rz / pq;
        alphas.push(alpha);
        axpy(alpha, &p, &mut x);
        axpy(-alpha, &q, &mut r);
        if k % RESIDUAL_REPLACEMENT == 0 {
            true_residual(a, b, &x, &mut r);
        }
        let mut rel = norm2(&r) / bnorm;
        let mut converged = false;
        if rel <= tol {
            let mut t = vec![0.0; n];
            true_residual(a, b, &x, &mut t);
            let true_rel = norm2(&t) / bnorm;
            if true_rel <= tol {
                converged = true;
            } else {
                r = t;
                rel = true_rel;
            }
        }
        report.residuals.push(rel);
        report.iterations = k;
        monitor(k, &x);
        if converged {
            report.converged = true;
            break;
        }
        m.apply(&r, &mut z);
        let rz_new = dot(&r, &z);
        if !(rz_new > 0.0) {
            return Err(Error::Breakdown { iteration: k, msg: format!("r^T M^-1 r = {rz_new:.3e}") });
        }
        let beta = rz_new / rz;
        betas.push(beta);
        rz = rz_new;
        for (pi, zi) in p.iter_mut().zip(&z) {
            *pi = zi + beta * *pi;
        }
    }
    report.condition_estimate = lanczos_ratio(&alphas, &betas);
    report.wall_time = start.elapsed();
    Ok((x, report))
}

/// Preconditioned CG; errors when `maxit` is exhausted.
pub fn pcg(a: &SparseMat, m: &dyn Preconditioner, b: &[f64], tol: f64, maxit: usize) -> Result<(Vec<f64>, SolveReport)> {
    let (x, report) = pcg_monitored(a, m, b, tol, maxit, &mut |_, _| {})?;
    report.ensure_converged()?;
    Ok((x, report))
}

/// Ratio of extreme eigenvalues of the CG Lanczos tridiagonal matrix.
fn lanczos_ratio(alphas: &[f64], betas: &[f64]) -> Option<f64> {
    let k = alphas.len();
    if k == 0 {
        return None;
    }
    let mut t = DenseMat::zeros(k, k);
    for j in 0..k {
        t[(j, j)] = 1.0 / alphas[j] + if j > 0 { betas[j - 1] / alphas[j - 1] } else { 0.0 };
        if j + 1 < k {
            let off = betas[j].sqrt() / alphas[j];
            t[(j, j + 1)] = off;
            t[(j + 1, j)] = off;
        }
    }
    let (vals, _) = sym_eig(&t).ok()?;
    let (hi, lo) = (vals[0], vals[k - 1]);
    (lo > 0.0).then(|| hi / lo)
}

/// Unrestarted right-preconditioned GMRES from `x0 = 0`.
///
/// Returns the iterate and report whether or not it converged.
pub fn gmres_right_unchecked(
    a: &SparseMat,
    m: &dyn Preconditioner,
    b: &[f64],
    tol: f64,
    maxit: usize,
) -> Result<(Vec<f64>, SolveReport)> {
    check_dims(a, m, b)?;
    if maxit > GMRES_MAX_ITERATIONS {
        return Err(Error::InvalidArgument(format!(
            "GMRES without restart is limited to {GMRES_MAX_ITERATIONS} iterations, {maxit} requested"
        )));
    }
    let start = Instant::now();
    let n = b.len();
    let bnorm = norm2(b);
    let mut report = SolveReport {
        iterations: 0,
        residuals: vec![if bnorm == 0.0 { 0.0 } else { 1.0 }],
        converged: bnorm == 0.0,
        condition_estimate: None,
        wall_time: Duration::ZERO,
    };
    let mut x = vec![0.0; n];
    if report.converged {
        report.wall_time = start.elapsed();
        return Ok((x, report));
    }
    let mut basis: Vec<Vec<f64>> = vec![b.iter().map(|v| v / bnorm).collect()];
    // Hessenberg columns, already rotated
    let mut h: Vec<Vec<f64>> = Vec::new();
    let mut cs: Vec<(f64, f64)> = Vec::new();
    let mut g = vec![bnorm];
    let mut z = vec![0.0; n];
    let mut w = vec![0.0; n];

    for j in 0..maxit {
        m.apply(&basis[j], &mut z);
        a.spmv_into(&z, &mut w);
        let wnorm0 = norm2(&w);
        let mut col = vec![0.0; j + 2];
        for (i, v) in basis.iter().enumerate() {
            let hij = dot(v, &w);
            col[i] = hij;
            axpy(-hij, v, &mut w);
        }
        let wn = norm2(&w);
        let loss = basis.iter().map(|v| dot(v, &w).abs()).fold(0.0, f64::max);
        if wn > 0.0 && loss > REORTH_TOL * wn {
            for (i, v) in basis.iter().enumerate() {
                let c = dot(v, &w);
                col[i] += c;
                axpy(-c, v, &mut w);
            }
        }
        let hnext = norm2(&w);
        col[j + 1] = hnext;
        for (i, &(c, s)) in cs.iter().enumerate() {
            let (u, v) = (col[i], col[i + 1]);
            col[i] = c * u + s * v;
            col[i + 1] = -s * u + c * v;
        }
        let (u, v) = (col[j], col[j + 1]);
        let rho = u.hypot(v);
        let (c, s) = if rho == 0.0 { (1.0, 0.0) } else { (u / rho, v / rho) };
        col[j] = rho;
        col[j + 1] = 0.0;
        cs.push((c, s));
        let gj = g[j];
        g[j] = c * gj;
        g.push(-s * gj);
        h.push(col);

        let rel = g[j + 1].abs() / bnorm;
        report.iterations = j + 1;
        let happy = hnext <= f64::EPSILON * wnorm0.max(f64::MIN_POSITIVE);
        if rel <= tol || happy || j + 1 == maxit {
            x = solution(&h, &g, &basis, m, n);
            let mut r = vec![0.0; n];
            true_residual(a, b, &x, &mut r);
            let true_rel = norm2(&r) / bnorm;
            report.residuals.push(rel);
            if true_rel <= tol || happy {
                report.converged = true;
                break;
            }
            if j + 1 == maxit {
                break;
            }
        } else {
            report.residuals.push(rel);
        }
        basis.push(w.iter().map(|v| v / hnext).collect());
    }
    report.wall_time = start.elapsed();
    Ok((x, report))
}

/// `x = M^{-1} V y` with `R y = g` from the rotated Hessenberg matrix.
fn solution(h: &[Vec<f64>], g: &[f64], basis: &[Vec<f64>], m: &dyn Preconditioner, n: usize) -> Vec<f64> {
    let k = h.len();
    let mut y = vec![0.0; k];
    for i in (0..k).rev() {
        let mut s = g[i];
        for j in i + 1..k {
            s -= h[j][i] * y[j];
        }
        y[i] = if h[i][i] != 0.0 { s / h[i][i] } else { 0.0 };
    }
    let mut v = vec![0.0; n];
    for (yi, bi) in y.iter().zip(basis) {
        axpy(*yi, bi, &mut v);
    }
    let mut x = vec![0.0; n];
    m.apply(&v, &mut x);
    x
}

/// Right-preconditioned GMRES; errors when `maxit` is exhausted.
pub fn gmres_right(a: &SparseMat, m: &dyn Preconditioner, b: &[f64], tol: f64, maxit: usize) -> Result<(Vec<f64>, SolveReport)> {
    let (x, report) = gmres_right_unchecked(a, m, b, tol, maxit)?;
    report.ensure_converged()?;
    Ok((x, report))
}

/// How a condition number was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConditionMethod {
    Dense,
    Lanczos,
}

/// `κ(M^{-1} A)` for SPD `A` and symmetric `M^{-1}`.
///
/// Exact (dense) up to order [`DENSE_CONDITION_LIMIT`], a CG Lanczos
/// estimate above it.
pub fn estimate_condition(a: &SparseMat, m: &dyn Preconditioner) -> Result<(f64, ConditionMethod)> {
    if !a.is_symmetric() || !m.is_symmetric() {
        return Err(Error::InvalidArgument("condition estimation needs a symmetric matrix and preconditioner".into()));
    }
    if a.nrows() <= DENSE_CONDITION_LIMIT {
        return dense_condition(a, m).map(|k| (k, ConditionMethod::Dense));
    }
    let steps = a.nrows().min(GMRES_MAX_ITERATIONS);
    lanczos_condition(a, m, steps, 0).map(|k| (k, ConditionMethod::Lanczos))
}

/// Dense preconditioner matrix, one column per unit vector.
pub fn dense_operator(m: &dyn Preconditioner) -> DenseMat {
    let n = m.dim();
    let mut out = DenseMat::zeros(n, n);
    let mut e = vec![0.0; n];
    let mut z = vec![0.0; n];
    for j in 0..n {
        e[j] = 1.0;
        m.apply(&e, &mut z);
        out.column_mut(j).copy_from_slice(&z);
        e[j] = 0.0;
    }
    out
}

/// Exact `κ(M^{-1} A)` through the symmetric form `L^T M^{-1} L`, `A = L L^T`.
pub fn dense_condition(a: &SparseMat, m: &dyn Preconditioner) -> Result<f64> {
    let ad = a.to_dense()?;
    let l = nalgebra::Cholesky::new(ad)
        .ok_or_else(|| Error::NotSpd("matrix in condition estimate".into()))?
        .unpack();
    let minv = symmetrize(&dense_operator(m));
    let s = l.transpose() * minv * &l;
    let (vals, _) = sym_eig(&s)?;
    let (hi, lo) = (vals[0], vals[vals.len() - 1]);
    if !(lo > 0.0) {
        return Err(Error::NotSpd(format!("preconditioned operator has eigenvalue {lo:.3e}")));
    }
    Ok(hi / lo)
}

/// Ritz-value ratio from `steps` CG iterations on a seeded random right-hand side.
pub fn lanczos_condition(a: &SparseMat, m: &dyn Preconditioner, steps: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let b: Vec<f64> = (0..a.nrows()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let (_, report) = pcg_monitored(a, m, &b, 1e-14, steps, &mut |_, _| {})?;
    report
        .condition_estimate
        .ok_or_else(|| Error::InvalidArgument("no CG iterations were performed".into()))
}
