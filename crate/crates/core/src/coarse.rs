//! Global coarse basis assembly, rank filtering and the Galerkin coarse operator.

use crate::dense::{symmetrize, DenseMat, Factorization};
use crate::error::{Error, Result};
use crate::partition::SubdomainMap;
use crate::spectral::{ModeKind, SpectralBasis};
use crate::sparse::{Graph, SparseMat};
use crate::subdomain::HarmonicFactor;
use std::ops::Range;

/// Default relative tolerance of [`rank_filter`].
pub const DEFAULT_DROP_TOL: f64 = 1e-10;

/// Coarse basis `R_0^T` (columns grouped by subdomain) and, once formed,
/// the factored Galerkin operator `A_00 = R_0 A R_0^T`.
#[derive(Debug, Clone)]
pub struct CoarseSpace {
    r0t: SparseMat,
    r0: SparseMat,
    ranges: Vec<Range<usize>>,
    a00: Option<DenseMat>,
    a00_nnz: usize,
    factor: Option<Factorization>,
}

impl CoarseSpace {
    fn from_r0t(r0t: SparseMat, ranges: Vec<Range<usize>>) -> Self {
        let r0 = r0t.transpose();
        CoarseSpace { r0t, r0, ranges, a00: None, a00_nnz: 0, factor: None }
    }

    pub fn n(&self) -> usize {
        self.r0t.nrows()
    }

    /// Coarse dimension `n_C`.
    pub fn dim(&self) -> usize {
        self.r0t.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.dim() == 0
    }

    pub fn r0t(&self) -> &SparseMat {
        &self.r0t
    }

    pub fn r0(&self) -> &SparseMat {
        &self.r0
    }

    /// Column range contributed by each subdomain.
    pub fn ranges(&self) -> &[Range<usize>] {
        &self.ranges
    }

    pub fn a00(&self) -> Option<&DenseMat> {
        self.a00.as_ref()
    }

    /// Structural nonzeros of the sparse product `R_0 A R_0^T`.
    pub fn a00_nnz(&self) -> usize {
        self.a00_nnz
    }

    pub fn factor(&self) -> Option<&Factorization> {
        self.factor.as_ref()
    }

    /// `A_00^{-1} R_0 r` lifted back: `R_0^T A_00^{-1} R_0 r`.
    pub fn correction(&self, r: &[f64]) -> Vec<f64> {
        let f = self.factor.as_ref().expect("coarse operator has been formed");
        let mut y = vec![0.0; self.dim()];
        self.r0.spmv_into(r, &mut y);
        f.solve_in_place(&mut y);
        let mut z = vec![0.0; self.n()];
        self.r0t.spmv_into(&y, &mut z);
        z
    }
}

/// `D Π W` for a harmonic eigenbasis, or the singular vectors themselves.
pub fn harmonic_columns(f: &HarmonicFactor, basis: &SpectralBasis, n_interior: usize) -> DenseMat {
    let n = f.len();
    let mut out = DenseMat::zeros(n, basis.len());
    match basis.kind {
        ModeKind::HarmonicSvd => {
            out.view_mut((0, 0), (n_interior, basis.len()))
                .copy_from(&basis.vectors.rows(0, n_interior));
        }
        _ => {
            let wb = basis.vectors.rows(f.n_inner(), f.n_boundary());
            let pw = f.interior_extension() * wb;
            out.view_mut((0, 0), (n_interior, basis.len())).copy_from(&pw);
        }
    }
    out
}

/// `D H`: every harmonic extension column, restricted to the interior.
pub fn full_harmonic_columns(f: &HarmonicFactor, n_interior: usize) -> DenseMat {
    let mut out = DenseMat::zeros(f.len(), f.n_boundary());
    out.view_mut((0, 0), (n_interior, f.n_boundary())).copy_from(&f.interior_extension());
    out
}

/// `D Z` for a partition-of-unity eigenbasis.
pub fn pou_columns(basis: &SpectralBasis, n_interior: usize) -> DenseMat {
    let mut out = DenseMat::zeros(basis.vectors.nrows(), basis.len());
    out.view_mut((0, 0), (n_interior, basis.len())).copy_from(&basis.vectors.rows(0, n_interior));
    out
}

/// Scatters per-subdomain local columns to global indices; all-zero columns are dropped.
pub fn assemble_coarse_basis(n: usize, maps: &[SubdomainMap], locals: &[DenseMat]) -> Result<CoarseSpace> {
    if maps.len() != locals.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} subdomains but {} local contributions",
            maps.len(),
            locals.len()
        )));
    }
    let mut trip = Vec::new();
    let mut ranges = Vec::with_capacity(maps.len());
    let mut col = 0;
    for (i, (m, loc)) in maps.iter().zip(locals).enumerate() {
        if loc.nrows() != m.len() {
            return Err(Error::DimensionMismatch(format!(
                "local columns have {} rows on a subdomain of size {}",
                loc.nrows(),
                m.len()
            ))
            .in_subdomain(i));
        }
        let start = col;
        for c in loc.column_iter() {
            if c.iter().all(|&x| x == 0.0) {
                continue;
            }
            for (k, &x) in c.iter().enumerate() {
                if x != 0.0 {
                    trip.push((m.indices()[k], col, x));
                }
            }
            col += 1;
        }
        ranges.push(start..col);
    }
    Ok(CoarseSpace::from_r0t(SparseMat::from_triplets(n, col, trip)?, ranges))
}

/// Column-norm-pivoted Gram–Schmidt on `cols`: a column is dropped once its
/// residual norm falls below `threshold`. Returns the kept indices (ascending)
/// and an orthonormal basis of their span.
fn pivoted_orthonormalize(mut cols: Vec<Vec<f64>>, threshold: f64) -> (Vec<usize>, Vec<Vec<f64>>) {
    let k = cols.len();
    let mut active: Vec<usize> = (0..k).collect();
    let mut keep = Vec::new();
    let mut basis: Vec<Vec<f64>> = Vec::new();
    while !active.is_empty() {
        let norms: Vec<f64> = active.iter().map(|&c| crate::sparse::norm2(&cols[c])).collect();
        let (pos, &best) = norms
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(&a.0)))
            .unwrap();
        if best < threshold {
            break;
        }
        let p = active.remove(pos);
        keep.push(p);
        let mut q: Vec<f64> = cols[p].iter().map(|x| x / best).collect();
        // two passes keep the basis orthogonal to working precision
        for _ in 0..2 {
            for prev in &basis {
                let h = crate::sparse::dot(prev, &q);
                crate::sparse::axpy(-h, prev, &mut q);
            }
        }
        let qn = crate::sparse::norm2(&q);
        q.iter_mut().for_each(|x| *x /= qn);
        for _ in 0..2 {
            for &c in &active {
                let h = crate::sparse::dot(&q, &cols[c]);
                crate::sparse::axpy(-h, &q, &mut cols[c]);
            }
        }
        basis.push(q);
    }
    keep.sort_unstable();
    (keep, basis)
}

/// Removes numerically dependent columns of `R_0^T`.
///
/// Columns sharing a row are grouped (connected components); each group is
/// factored by column-norm-pivoted Gram–Schmidt and a column is dropped when
/// its pivot falls below `drop_tol` times the largest column norm. The kept
/// columns of a group are replaced by an orthonormal basis of their span, so
/// supports and per-subdomain counts are preserved while `A_00` stays as well
/// conditioned as `A`. Returns the filtered space and the number of dropped
/// columns.
pub fn rank_filter(cs: &CoarseSpace, drop_tol: f64) -> Result<(CoarseSpace, usize)> {
    if !(drop_tol >= 0.0) {
        return Err(Error::InvalidArgument(format!("drop tolerance must be non-negative, got {drop_tol}")));
    }
    let nc = cs.dim();
    let r0 = cs.r0();
    let mut edges = Vec::new();
    let mut first_col = vec![usize::MAX; cs.n()];
    let mut norm_max = 0.0f64;
    for c in 0..nc {
        let (rows, vals) = r0.row(c);
        norm_max = norm_max.max(crate::sparse::norm2(vals));
        for &r in rows {
            if first_col[r] == usize::MAX {
                first_col[r] = c;
            } else {
                edges.push((first_col[r], c));
            }
        }
    }
    let threshold = drop_tol * norm_max;
    let groups = Graph::from_edges(nc, edges).components();
    let mut keep = vec![false; nc];
    let mut replacement: Vec<Option<Vec<(usize, f64)>>> = vec![None; nc];
    for group in groups {
        let mut rows: Vec<usize> = group.iter().flat_map(|&c| r0.row(c).0.iter().copied()).collect();
        rows.sort_unstable();
        rows.dedup();
        let cols: Vec<Vec<f64>> = group
            .iter()
            .map(|&c| {
                let mut v = vec![0.0; rows.len()];
                let (ri, rv) = r0.row(c);
                for (&r, &x) in ri.iter().zip(rv) {
                    v[rows.binary_search(&r).unwrap()] = x;
                }
                v
            })
            .collect();
        let (kept, basis) = pivoted_orthonormalize(cols, threshold);
        for (k, q) in kept.into_iter().zip(basis) {
            keep[group[k]] = true;
            replacement[group[k]] = Some(rows.iter().copied().zip(q).filter(|&(_, x)| x != 0.0).collect());
        }
    }
    let mut remap = vec![usize::MAX; nc];
    let mut next = 0;
    for c in 0..nc {
        if keep[c] {
            remap[c] = next;
            next += 1;
        }
    }
    let remap = &remap;
    let trip = replacement
        .iter()
        .enumerate()
        .filter_map(|(c, col)| col.as_ref().map(|col| (c, col)))
        .flat_map(|(c, col)| col.iter().map(move |&(r, v)| (r, remap[c], v)));
    let r0t = SparseMat::from_triplets(cs.n(), next, trip)?;
    let ranges = cs
        .ranges
        .iter()
        .map(|rg| {
            let kept_before = keep[..rg.start].iter().filter(|&&k| k).count();
            let kept_in = keep[rg.clone()].iter().filter(|&&k| k).count();
            kept_before..kept_before + kept_in
        })
        .collect();
    Ok((CoarseSpace::from_r0t(r0t, ranges), nc - next))
}

/// Forms and factors `A_00 = R_0 A R_0^T`.
///
/// Symmetrized and Cholesky-factored when `A` is symmetric, LU otherwise.
pub fn galerkin_coarse(a: &SparseMat, cs: CoarseSpace) -> Result<CoarseSpace> {
    if a.nrows() != cs.n() || !a.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "coarse basis has {} rows, matrix is {}x{}",
            cs.n(),
            a.nrows(),
            a.ncols()
        )));
    }
    if cs.is_empty() {
        return Err(Error::InvalidArgument("coarse basis is empty".into()));
    }
    let prod = cs.r0.matmul(&a.matmul(&cs.r0t)?)?;
    let mut a00 = prod.to_dense()?;
    if a.is_symmetric() {
        a00 = symmetrize(&a00);
    }
    let factor = Factorization::new(a00.clone(), a.is_symmetric()).map_err(|e| match e {
        Error::NotSpd(_) => Error::NotSpd("coarse operator is not positive definite".into()),
        Error::Singular(m) => Error::Singular(format!("coarse operator: {m}")),
        e => e,
    })?;
    Ok(CoarseSpace { a00: Some(a00), a00_nnz: prod.nnz(), factor: Some(factor), ..cs })
}

/// Grid and operator complexities as exact ratios.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Complexity {
    pub n: usize,
    pub n_c: usize,
    pub nnz_a: usize,
    pub nnz_a00: usize,
}

impl Complexity {
    /// `1 + n_C / n`.
    pub fn gc(&self) -> f64 {
        1.0 + self.n_c as f64 / self.n as f64
    }

    /// `1 + nnz(A_00) / nnz(A)`.
    pub fn oc(&self) -> f64 {
        1.0 + self.nnz_a00 as f64 / self.nnz_a as f64
    }
}
