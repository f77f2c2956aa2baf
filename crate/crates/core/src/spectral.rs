//! Local spectral problems and the selection of coarse vectors.

use crate::dense::{fix_signs, sym_eig, symmetrize, DenseMat};
use crate::error::{Error, Result};
use crate::subdomain::{HarmonicFactor, LocalBlocks};
use nalgebra::{Cholesky, SVD};

/// Relative guard applied to selection thresholds so borderline values do not flap.
pub const TIE_GUARD: f64 = 1e-12;

/// Which local problem produced a basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModeKind {
    /// `D A D u = λ A u`, keep `λ > ν`.
    PouGevp,
    /// `Π^T D A D Π w = λ² A w`, keep `λ² > τ²`.
    HarmonicGevp,
    /// Left singular vectors of `D Π`, keep `σ > τ`.
    HarmonicSvd,
}

impl ModeKind {
    pub fn name(self) -> &'static str {
        match self {
            ModeKind::PouGevp => "pou-gevp",
            ModeKind::HarmonicGevp => "harmonic-gevp",
            ModeKind::HarmonicSvd => "harmonic-svd",
        }
    }
}

/// Selected local vectors with their values.
#[derive(Debug, Clone)]
pub struct SpectralBasis {
    pub kind: ModeKind,
    /// Columns are local vectors over the whole overlapping subdomain.
    pub vectors: DenseMat,
    /// Values of the selected vectors, descending (`λ`, `λ²` or `σ`).
    pub values: Vec<f64>,
    /// Threshold the values were compared against (`ν`, `τ²` or `τ`).
    pub threshold: f64,
    /// Every computed value, descending.
    pub spectrum: Vec<f64>,
}

impl SpectralBasis {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Largest computed value that was not selected.
    pub fn largest_rejected(&self) -> Option<f64> {
        self.spectrum.get(self.values.len()).copied()
    }

    fn empty(kind: ModeKind, n: usize, threshold: f64, spectrum: Vec<f64>) -> Self {
        SpectralBasis { kind, vectors: DenseMat::zeros(n, 0), values: Vec::new(), threshold, spectrum }
    }
}

/// Number of leading (descending) values strictly above `threshold`.
pub fn count_above(values: &[f64], threshold: f64) -> usize {
    values.iter().take_while(|&&v| v > threshold * (1.0 + TIE_GUARD)).count()
}

/// All eigenpairs of `B u = λ M u` for symmetric `B` and SPD `M`.
///
/// Values are descending; vectors are `M`-orthonormal.
pub fn sym_gevp(b: &DenseMat, m: &DenseMat) -> Result<(Vec<f64>, DenseMat)> {
    if !b.is_square() || b.shape() != m.shape() {
        return Err(Error::DimensionMismatch(format!(
            "pencil of shapes {:?} and {:?}",
            b.shape(),
            m.shape()
        )));
    }
    let n = b.nrows();
    let chol = Cholesky::new(symmetrize(m))
        .ok_or_else(|| Error::NotSpd(format!("right-hand matrix of a {n}x{n} pencil")))?;
    let l = chol.l();
    let singular = || Error::Singular("triangular solve in pencil reduction".into());
    let x = l.solve_lower_triangular(&symmetrize(b)).ok_or_else(singular)?;
    let c = l.solve_lower_triangular(&x.transpose()).ok_or_else(singular)?;
    let (values, y) = sym_eig(&symmetrize(&c))?;
    let mut v = l.tr_solve_lower_triangular(&y).ok_or_else(singular)?;
    fix_signs(&mut v);
    Ok((values, v))
}

/// Eigenvectors of `D A_ii D u = λ A_ii u` with `λ > ν`.
pub fn select_pou_modes(b: &LocalBlocks, nu: f64) -> Result<SpectralBasis> {
    if !(nu > 1.0) {
        return Err(Error::InvalidArgument(format!("nu must exceed 1, got {nu}")));
    }
    if !b.is_symmetric() {
        return Err(Error::InvalidArgument("the partition of unity eigenproblem needs a symmetric matrix".into()));
    }
    let a = b.matrix();
    let ni = b.n_interior();
    let mut dad = DenseMat::zeros(b.len(), b.len());
    dad.view_mut((0, 0), (ni, ni)).copy_from(&a.view((0, 0), (ni, ni)));
    let (spectrum, vecs) = sym_gevp(&dad, a)?;
    let k = count_above(&spectrum, nu);
    Ok(SpectralBasis {
        kind: ModeKind::PouGevp,
        vectors: vecs.columns(0, k).into_owned(),
        values: spectrum[..k].to_vec(),
        threshold: nu,
        spectrum,
    })
}

/// Eigenvectors of `Π^T D A_ii D Π w = λ² A_ii w` with `λ² > τ²`.
///
/// Solved through the equivalent boundary-sized pencil `K y = μ S y` with
/// `K = E_I^T A_{I,I} E_I` and `S = H^T A_ii H`; the full-space eigenvectors
/// are `w = H y` and inherit `A_ii`-orthonormality from `y^T S y = I`.
pub fn select_harmonic_modes(b: &LocalBlocks, f: &HarmonicFactor, tau: f64) -> Result<SpectralBasis> {
    check_tau(tau)?;
    if !b.is_symmetric() {
        return Err(Error::InvalidArgument("the harmonic eigenproblem needs a symmetric matrix".into()));
    }
    let n = b.len();
    let thr = tau * tau;
    if f.n_boundary() == 0 {
        return Ok(SpectralBasis::empty(ModeKind::HarmonicGevp, n, thr, Vec::new()));
    }
    let ni = b.n_interior();
    let a = b.matrix();
    let ei = f.interior_extension();
    let k = ei.transpose() * a.view((0, 0), (ni, ni)) * &ei;
    let h = f.harmonic_columns();
    let s = h.transpose() * a * &h;
    let (spectrum, y) = sym_gevp(&k, &s)?;
    let sel = count_above(&spectrum, thr);
    let mut w = &h * y.columns(0, sel);
    fix_signs(&mut w);
    Ok(SpectralBasis {
        kind: ModeKind::HarmonicGevp,
        vectors: w,
        values: spectrum[..sel].to_vec(),
        threshold: thr,
        spectrum,
    })
}

/// Left singular vectors of `D Π` with `σ > τ`, supported on the interior.
pub fn svd_harmonic_modes(b: &LocalBlocks, f: &HarmonicFactor, tau: f64) -> Result<SpectralBasis> {
    check_tau(tau)?;
    let n = b.len();
    let ni = b.n_interior();
    if f.n_boundary() == 0 {
        return Ok(SpectralBasis::empty(ModeKind::HarmonicSvd, n, tau, Vec::new()));
    }
    let ei = f.interior_extension();
    let svd = SVD::try_new(ei, true, false, f64::EPSILON, 0)
        .ok_or_else(|| Error::NoConvergence("singular value decomposition".into()))?;
    let u = svd.u.as_ref().expect("left vectors requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&p, &q| svd.singular_values[q].total_cmp(&svd.singular_values[p]));
    let spectrum: Vec<f64> = order.iter().map(|&k| svd.singular_values[k]).collect();
    let sel = count_above(&spectrum, tau);
    let mut vectors = DenseMat::zeros(n, sel);
    for (c, &k) in order.iter().take(sel).enumerate() {
        vectors.view_mut((0, c), (ni, 1)).copy_from(&u.column(k));
    }
    fix_signs(&mut vectors);
    Ok(SpectralBasis {
        kind: ModeKind::HarmonicSvd,
        vectors,
        values: spectrum[..sel].to_vec(),
        threshold: tau,
        spectrum,
    })
}

fn check_tau(tau: f64) -> Result<()> {
    if tau.is_finite() && tau > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("tau must be positive, got {tau}")))
    }
}
