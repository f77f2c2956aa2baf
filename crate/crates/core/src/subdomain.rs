//! Local subdomain matrices, the harmonic extension and the local SPSD splitting.

use crate::dense::{symmetrize, DenseMat, Factorization};
use crate::error::{Error, Result};
use crate::partition::SubdomainMap;
use crate::sparse::SparseMat;

/// Dense `A_ii = R_i A R_i^T` in subdomain order with its block boundaries.
///
/// Local order is interior, inner rings (distance 1..δ-1), outermost ring.
#[derive(Debug, Clone)]
pub struct LocalBlocks {
    a: DenseMat,
    n_interior: usize,
    n_inner: usize,
    symmetric: bool,
}

impl LocalBlocks {
    pub fn new(a: DenseMat, n_interior: usize, n_inner: usize, symmetric: bool) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::NotSquare { nrows: a.nrows(), ncols: a.ncols() });
        }
        if n_interior == 0 || n_interior > n_inner || n_inner > a.nrows() {
            return Err(Error::InvalidArgument(format!(
                "inconsistent local split {n_interior}/{n_inner}/{}",
                a.nrows()
            )));
        }
        Ok(LocalBlocks { a, n_interior, n_inner, symmetric })
    }

    pub fn matrix(&self) -> &DenseMat {
        &self.a
    }

    pub fn len(&self) -> usize {
        self.a.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.a.nrows() == 0
    }

    pub fn n_interior(&self) -> usize {
        self.n_interior
    }

    pub fn n_inner(&self) -> usize {
        self.n_inner
    }

    pub fn n_boundary(&self) -> usize {
        self.len() - self.n_inner
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    /// Boolean partition of unity weights in local order.
    pub fn pou(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.len()];
        d[..self.n_interior].fill(1.0);
        d
    }
}

/// Extracts the local block of `A` for one subdomain.
pub fn local_matrix(a: &SparseMat, s: &SubdomainMap) -> Result<LocalBlocks> {
    let idx = s.indices();
    let block = a.submatrix(idx, idx)?;
    LocalBlocks::new(block, s.n_interior(), s.n_inner(), a.is_symmetric())
}

/// Factored harmonic extension from the outermost ring into the subdomain.
///
/// Stores `E = -A_inner^{-1} A_{inner,Γδ}` so that `Π v = [E v_Γ; v_Γ]`.
#[derive(Debug, Clone)]
pub struct HarmonicFactor {
    inner: Factorization,
    coupling: DenseMat,
    extension: DenseMat,
    n_interior: usize,
}

impl HarmonicFactor {
    pub fn n_inner(&self) -> usize {
        self.extension.nrows()
    }

    pub fn n_boundary(&self) -> usize {
        self.extension.ncols()
    }

    pub fn len(&self) -> usize {
        self.n_inner() + self.n_boundary()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Factor of the inner block `A_{Ω_{1:δ-1}, Ω_{1:δ-1}}`.
    pub fn inner_factor(&self) -> &Factorization {
        &self.inner
    }

    /// `A_{Ω_{1:δ-1}, Γ_δ}`.
    pub fn coupling(&self) -> &DenseMat {
        &self.coupling
    }

    /// `E = -A_inner^{-1} A_{inner,Γδ}` (inner rows, boundary columns).
    pub fn extension(&self) -> &DenseMat {
        &self.extension
    }

    /// Rows of `E` belonging to the interior, i.e. the nonzero block of `D Π`.
    pub fn interior_extension(&self) -> DenseMat {
        self.extension.rows(0, self.n_interior).into_owned()
    }

    /// `H = [E; I]`, the nonzero columns of `Π`.
    pub fn harmonic_columns(&self) -> DenseMat {
        let (ni, nb) = (self.n_inner(), self.n_boundary());
        let mut h = DenseMat::zeros(ni + nb, nb);
        h.view_mut((0, 0), (ni, nb)).copy_from(&self.extension);
        for k in 0..nb {
            h[(ni + k, k)] = 1.0;
        }
        h
    }

    /// `Π v` for a local vector.
    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.len() {
            return Err(Error::DimensionMismatch(format!(
                "harmonic apply: vector of length {} on a subdomain of size {}",
                v.len(),
                self.len()
            )));
        }
        let ni = self.n_inner();
        let vb = nalgebra::DVector::from_column_slice(&v[ni..]);
        let mut out = vec![0.0; self.len()];
        out[..ni].copy_from_slice((&self.extension * vb).as_slice());
        out[ni..].copy_from_slice(&v[ni..]);
        Ok(out)
    }

    /// Dense `Π`.
    pub fn matrix(&self) -> DenseMat {
        let n = self.len();
        let mut p = DenseMat::zeros(n, n);
        p.view_mut((0, self.n_inner()), (n, self.n_boundary())).copy_from(&self.harmonic_columns());
        p
    }
}

/// Factors the inner block and forms the harmonic extension.
pub fn build_harmonic(b: &LocalBlocks) -> Result<HarmonicFactor> {
    let ni = b.n_inner();
    let nb = b.n_boundary();
    let a = b.matrix();
    let inner = Factorization::new(a.view((0, 0), (ni, ni)).into_owned(), b.is_symmetric())?;
    let coupling = a.view((0, ni), (ni, nb)).into_owned();
    let mut extension = -coupling.clone();
    inner.solve_mat(&mut extension);
    Ok(HarmonicFactor { inner, coupling, extension, n_interior: b.n_interior() })
}

/// `Ã_ii = (I - Π)^T A_ii (I - Π)` for symmetric `A_ii`.
///
/// In inner/boundary blocks this is `[[A_II, C], [C^T, C^T A_II^{-1} C]]`
/// with `C` the coupling block.
pub fn spsd_local(b: &LocalBlocks, f: &HarmonicFactor) -> Result<DenseMat> {
    if !b.is_symmetric() {
        return Err(Error::InvalidArgument("local SPSD splitting requires a symmetric matrix".into()));
    }
    if f.len() != b.len() {
        return Err(Error::DimensionMismatch("harmonic factor does not match the local block".into()));
    }
    let ni = f.n_inner();
    let nb = f.n_boundary();
    let mut t = b.matrix().clone();
    let corner = -(f.coupling().transpose() * f.extension());
    t.view_mut((ni, ni), (nb, nb)).copy_from(&corner);
    Ok(symmetrize(&t))
}
