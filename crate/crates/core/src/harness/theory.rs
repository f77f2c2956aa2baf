//! Constants and condition-number bounds for the two-level method.

use crate::dense::DenseMat;
use crate::error::{Error, Result};
use crate::krylov::{dense_condition, pcg, DENSE_CONDITION_LIMIT};
use crate::partition::SubdomainMap;
use crate::precond::{CoarseKind, Combine, IdentityPreconditioner, OneLevel, SchwarzPreconditioner};
use crate::sparse::{dot, norm2, SparseMat};
use crate::spectral::{select_pou_modes, sym_gevp};
use crate::subdomain::local_matrix;

/// Relative change at which the power iteration for `λ*` stops.
pub const POWER_TOL: f64 = 1e-6;
const POWER_MAXIT: usize = 500;

/// How a quantity was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Dense,
    Estimated,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Dense => "dense",
            Method::Estimated => "estimated",
        }
    }
}

/// `Σ R_i^T A_ii R_i` as a sparse matrix.
pub fn overlap_sum(a: &SparseMat, maps: &[SubdomainMap]) -> Result<SparseMat> {
    let mut t = Vec::new();
    for m in maps {
        let idx = m.indices();
        let pos: std::collections::HashMap<usize, usize> = idx.iter().enumerate().map(|(k, &g)| (g, k)).collect();
        for &gi in idx {
            let (cols, vals) = a.row(gi);
            for (&gj, &v) in cols.iter().zip(vals) {
                if pos.contains_key(&gj) {
                    t.push((gi, gj, v));
                }
            }
        }
    }
    SparseMat::from_triplets(a.nrows(), a.ncols(), t)
}

/// Largest eigenvalue of `Σ R_i^T A_ii R_i u = λ A u`.
pub fn lambda_star(a: &SparseMat, maps: &[SubdomainMap]) -> Result<(f64, Method)> {
    if !a.is_symmetric() {
        return Err(Error::InvalidArgument("lambda* needs a symmetric matrix".into()));
    }
    let b = overlap_sum(a, maps)?;
    if a.nrows() <= DENSE_CONDITION_LIMIT {
        let (vals, _) = sym_gevp(&b.to_dense()?, &a.to_dense()?)?;
        return Ok((vals[0], Method::Dense));
    }
    // power iteration on A^{-1} B
    let n = a.nrows();
    let id = IdentityPreconditioner(n);
    let mut x: Vec<f64> = (0..n).map(|i| 1.0 + (i % 7) as f64 / 7.0).collect();
    let mut lambda = 0.0;
    for _ in 0..POWER_MAXIT {
        let bx = b.spmv(&x)?;
        let (y, _) = pcg(a, &id, &bx, 1e-10, 10 * n)?;
        let ay = a.spmv(&y)?;
        let next = dot(&y, &b.spmv(&y)?) / dot(&y, &ay);
        let s = norm2(&y);
        x = y.iter().map(|v| v / s).collect();
        if (next - lambda).abs() <= POWER_TOL * next.abs() {
            return Ok((next, Method::Estimated));
        }
        lambda = next;
    }
    Err(Error::NoConvergence(format!("power iteration for lambda* after {POWER_MAXIT} steps")))
}

/// Which condition number estimate applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundVariant {
    /// Every harmonic extension in the coarse space.
    Full,
    /// Selected harmonic modes only.
    Shrunk,
}

impl BoundVariant {
    pub fn name(self) -> &'static str {
        match self {
            BoundVariant::Full => "full",
            BoundVariant::Shrunk => "shrunk",
        }
    }
}

/// Constants entering the bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundInputs {
    pub k_c: usize,
    pub nu: f64,
    pub tau: f64,
    pub lambda_star: f64,
}

/// `(k_c+1)(2+(2k_c+1)k_c ν)` or `(k_c+1)(2+(2k_c+1)ν(k_c+λ*(2τ+τ²)))`.
pub fn theoretical_bound(inputs: &BoundInputs, variant: BoundVariant) -> f64 {
    let k = inputs.k_c as f64;
    let inner = match variant {
        BoundVariant::Full => k,
        BoundVariant::Shrunk => k + inputs.lambda_star * (2.0 * inputs.tau + inputs.tau * inputs.tau),
    };
    (k + 1.0) * (2.0 + (2.0 * k + 1.0) * inputs.nu * inner)
}

/// Largest partition-of-unity eigenvalue left out of the coarse space, at least 1.
///
/// With `nu = None` nothing is selected and this is the largest eigenvalue.
pub fn data_nu(a: &SparseMat, maps: &[SubdomainMap], nu: Option<f64>) -> Result<f64> {
    let mut out: f64 = 1.0;
    for (i, m) in maps.iter().enumerate() {
        let b = local_matrix(a, m).map_err(|e| e.in_subdomain(i))?;
        let basis = select_pou_modes(&b, nu.unwrap_or(f64::INFINITY)).map_err(|e| e.in_subdomain(i))?;
        if let Some(v) = basis.largest_rejected() {
            out = out.max(v);
        }
    }
    Ok(out)
}

/// Largest harmonic singular value left out of the coarse space, 0 when none was.
pub fn data_tau(pre: &SchwarzPreconditioner) -> f64 {
    let rep = pre.report();
    let worst = rep.subdomains.iter().filter_map(|s| s.harmonic_rejected).fold(0.0, f64::max);
    match rep.coarse {
        CoarseKind::Gevp => worst.max(0.0).sqrt(),
        CoarseKind::Svd => worst,
        _ => 0.0,
    }
}

/// Measured condition number next to its theoretical bound.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundCheck {
    pub variant: BoundVariant,
    pub inputs: BoundInputs,
    pub lambda_method: Method,
    pub kappa: f64,
    pub bound: f64,
}

impl BoundCheck {
    pub fn holds(&self) -> bool {
        self.kappa <= self.bound
    }
}

/// Checks the bound for an additive ASM two-level preconditioner on an SPD matrix
/// of order at most [`DENSE_CONDITION_LIMIT`]. `nu` is the threshold used at setup.
pub fn check_bound(a: &SparseMat, pre: &SchwarzPreconditioner, nu: Option<f64>) -> Result<BoundCheck> {
    if !a.is_symmetric() {
        return Err(Error::InvalidArgument("bound check needs a symmetric matrix".into()));
    }
    if pre.one_level_kind() != OneLevel::Asm || pre.combine() != Combine::Additive {
        return Err(Error::InvalidArgument("bound check applies to the additive ASM variant".into()));
    }
    if a.nrows() > DENSE_CONDITION_LIMIT {
        return Err(Error::DenseTooLarge { rows: a.nrows(), limit: DENSE_CONDITION_LIMIT });
    }
    let variant = match pre.report().coarse {
        CoarseKind::Full => BoundVariant::Full,
        CoarseKind::Gevp | CoarseKind::Svd => BoundVariant::Shrunk,
        k => return Err(Error::InvalidArgument(format!("no bound for coarse space '{}'", k.name()))),
    };
    let (lambda_star, lambda_method) = lambda_star(a, pre.maps())?;
    let inputs = BoundInputs {
        k_c: pre.report().k_c,
        nu: data_nu(a, pre.maps(), nu)?,
        tau: data_tau(pre),
        lambda_star,
    };
    let kappa = dense_condition(a, pre)?;
    Ok(BoundCheck { variant, inputs, lambda_method, kappa, bound: theoretical_bound(&inputs, variant) })
}

/// Dense `Σ R_i^T A_ii R_i`; convenience for oracles.
pub fn overlap_sum_dense(a: &SparseMat, maps: &[SubdomainMap]) -> Result<DenseMat> {
    overlap_sum(a, maps)?.to_dense()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::generators::laplace_1d;
    use crate::partition::{extend_overlap, Partition};
    use crate::sparse::symmetrized_graph;

    fn maps_1d(n: usize, cut: usize, delta: usize) -> (SparseMat, Vec<SubdomainMap>) {
        let a = laplace_1d(n);
        let owner = (0..n).map(|i| usize::from(i >= cut)).collect();
        let p = Partition::from_owner(owner, 2).unwrap();
        let maps = extend_overlap(&symmetrized_graph(&a).unwrap(), &p, delta).unwrap();
        (a, maps)
    }

    #[test]
    fn bound_arithmetic() {
        let b = |k_c, nu, tau, ls, v| theoretical_bound(&BoundInputs { k_c, nu, tau, lambda_star: ls }, v);
        assert_eq!(b(2, 1.0, 0.0, 1.0, BoundVariant::Shrunk), 36.0);
        assert_eq!(b(1, 1.0, 0.0, 1.0, BoundVariant::Full), 10.0);
        assert!((b(2, 1.5, 0.1, 2.0, BoundVariant::Shrunk) - 60.45).abs() < 1e-12);
    }

    #[test]
    fn lambda_star_single_subdomain() {
        let a = laplace_1d(8);
        let maps = vec![SubdomainMap::new((0..8).collect(), vec![]).unwrap()];
        let (l, method) = lambda_star(&a, &maps).unwrap();
        assert_eq!(method, Method::Dense);
        assert!((l - 1.0).abs() < 1e-12);
    }

    #[test]
    fn lambda_star_block_diagonal() {
        let a = SparseMat::from_triplets(4, 4, vec![(0, 0, 2.0), (1, 1, 3.0), (2, 2, 1.0), (3, 3, 5.0), (0, 1, 1.0), (1, 0, 1.0)])
            .unwrap();
        let maps = vec![
            SubdomainMap::new(vec![0, 1], vec![]).unwrap(),
            SubdomainMap::new(vec![2, 3], vec![]).unwrap(),
        ];
        let (l, _) = lambda_star(&a, &maps).unwrap();
        assert!((l - 1.0).abs() < 1e-12);
    }

    #[test]
    fn lambda_star_1d_overlap() {
        let (a, maps) = maps_1d(10, 5, 1);
        let (l, _) = lambda_star(&a, &maps).unwrap();
        // oracle: generalized eigenvalues via A^{-1} B in plain nalgebra
        let ad = a.to_dense().unwrap();
        let mut bd = DenseMat::zeros(10, 10);
        for m in &maps {
            let idx = m.indices();
            for &i in idx {
                for &j in idx {
                    bd[(i, j)] += ad[(i, j)];
                }
            }
        }
        let c = ad.clone().lu().solve(&bd).unwrap();
        let ev = c.complex_eigenvalues();
        let max = ev.iter().map(|z| z.re).fold(f64::MIN, f64::max);
        assert!((l - max).abs() < 1e-10 * max, "{l} vs {max}");
        assert!(l >= 1.0);
    }

    #[test]
    fn nonsymmetric_lambda_star_rejected() {
        let a = crate::harness::generators::example_7x7();
        let maps = vec![SubdomainMap::new((0..7).collect(), vec![]).unwrap()];
        assert!(lambda_star(&a, &maps).is_err());
    }

    #[test]
    fn data_constants_respect_guards() {
        let (a, maps) = maps_1d(12, 6, 2);
        let nu = data_nu(&a, &maps, None).unwrap();
        assert!(nu >= 1.0);
        let nu_sel = data_nu(&a, &maps, Some(nu * 0.999)).unwrap();
        assert!(nu_sel <= nu);
    }
}
