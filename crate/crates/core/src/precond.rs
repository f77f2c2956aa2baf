//! One-level and two-level overlapping Schwarz preconditioners.

use crate::coarse::{
    assemble_coarse_basis, full_harmonic_columns, galerkin_coarse, harmonic_columns, pou_columns, rank_filter,
    CoarseSpace, Complexity, DEFAULT_DROP_TOL,
};
use crate::dense::{DenseMat, Factorization};
use crate::error::{Error, Result};
use crate::partition::{color_subdomains, extend_overlap, partition_graph, Partition, SubdomainMap};
use crate::spectral::{select_harmonic_modes, select_pou_modes, svd_harmonic_modes, SpectralBasis};
use crate::sparse::{symmetrized_graph, SparseMat};
use crate::subdomain::{build_harmonic, local_matrix};
use rayon::prelude::*;
use std::fmt;

/// A linear operator approximating `A^{-1}`.
pub trait Preconditioner: Sync {
    fn dim(&self) -> usize;

    /// `z = M^{-1} r`.
    fn apply(&self, r: &[f64], z: &mut [f64]);

    /// True when the operator is symmetric, as required by CG.
    fn is_symmetric(&self) -> bool;
}

/// `M^{-1} = I`.
#[derive(Debug, Clone, Copy)]
pub struct IdentityPreconditioner(pub usize);

impl Preconditioner for IdentityPreconditioner {
    fn dim(&self) -> usize {
        self.0
    }

    fn apply(&self, r: &[f64], z: &mut [f64]) {
        z.copy_from_slice(r);
    }

    fn is_symmetric(&self) -> bool {
        true
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum OneLevel {
    Asm,
    Ras,
}

/// How the coarse correction is combined with the one-level operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Combine {
    Additive,
    Deflated,
}

/// Which coarse space to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum CoarseKind {
    None,
    /// Every harmonic extension column.
    Full,
    /// Harmonic generalized eigenvectors.
    Gevp,
    /// Left singular vectors of `D Π`.
    Svd,
    /// `Gevp` for symmetric matrices, `Svd` otherwise.
    Auto,
}

impl OneLevel {
    pub fn name(self) -> &'static str {
        match self {
            OneLevel::Asm => "asm",
            OneLevel::Ras => "ras",
        }
    }
}

impl Combine {
    pub fn name(self) -> &'static str {
        match self {
            Combine::Additive => "additive",
            Combine::Deflated => "deflated",
        }
    }
}

impl CoarseKind {
    pub fn name(self) -> &'static str {
        match self {
            CoarseKind::None => "none",
            CoarseKind::Full => "full",
            CoarseKind::Gevp => "gevp",
            CoarseKind::Svd => "svd",
            CoarseKind::Auto => "auto",
        }
    }
}

/// Preconditioner configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct SchwarzConfig {
    pub n_subdomains: usize,
    pub delta: usize,
    /// Harmonic selection threshold.
    pub tau: f64,
    /// Partition-of-unity eigenproblem threshold; `None` skips that problem.
    pub nu: Option<f64>,
    pub coarse: CoarseKind,
    pub one_level: OneLevel,
    pub combine: Combine,
    pub drop_tol: f64,
}

impl Default for SchwarzConfig {
    fn default() -> Self {
        SchwarzConfig {
            n_subdomains: 4,
            delta: 2,
            tau: 0.1,
            nu: None,
            coarse: CoarseKind::Auto,
            one_level: OneLevel::Asm,
            combine: Combine::Additive,
            drop_tol: DEFAULT_DROP_TOL,
        }
    }
}

/// Per-subdomain setup statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct SubdomainStats {
    pub size: usize,
    pub interior: usize,
    pub boundary: usize,
    pub harmonic_modes: usize,
    pub pou_modes: usize,
    /// Largest harmonic value (`λ²` or `σ`) that was not selected.
    pub harmonic_rejected: Option<f64>,
    /// Largest partition-of-unity eigenvalue that was not selected.
    pub pou_rejected: Option<f64>,
}

/// Summary of a preconditioner setup.
#[derive(Debug, Clone, PartialEq)]
pub struct SetupReport {
    pub n: usize,
    pub n_subdomains: usize,
    pub delta: usize,
    pub coarse: CoarseKind,
    pub one_level: OneLevel,
    pub combine: Combine,
    pub n_c: usize,
    pub k_c: usize,
    pub complexity: Complexity,
    pub dropped_columns: usize,
    pub subdomains: Vec<SubdomainStats>,
    pub warnings: Vec<String>,
}

impl fmt::Display for SetupReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = &self.complexity;
        writeln!(f, "setup.n={}", self.n)?;
        writeln!(f, "setup.N={}", self.n_subdomains)?;
        writeln!(f, "setup.delta={}", self.delta)?;
        writeln!(f, "setup.coarse={}", self.coarse.name())?;
        writeln!(f, "setup.one_level={}", self.one_level.name())?;
        writeln!(f, "setup.combine={}", self.combine.name())?;
        writeln!(f, "setup.n_C={}", self.n_c)?;
        writeln!(f, "setup.k_c={}", self.k_c)?;
        writeln!(f, "setup.GC={:.6} ({}/{} + 1)", c.gc(), c.n_c, c.n)?;
        writeln!(f, "setup.OC={:.6} ({}/{} + 1)", c.oc(), c.nnz_a00, c.nnz_a)?;
        writeln!(f, "setup.dropped_columns={}", self.dropped_columns)?;
        let opt = |v: Option<f64>| v.map_or_else(|| "none".to_string(), |x| format!("{x:.6e}"));
        for (i, s) in self.subdomains.iter().enumerate() {
            writeln!(
                f,
                "subdomain.{i}=size:{} interior:{} boundary:{} harmonic_modes:{} pou_modes:{} harmonic_rejected:{} pou_rejected:{}",
                s.size,
                s.interior,
                s.boundary,
                s.harmonic_modes,
                s.pou_modes,
                opt(s.harmonic_rejected),
                opt(s.pou_rejected)
            )?;
        }
        for w in &self.warnings {
            writeln!(f, "setup.warning={w}")?;
        }
        Ok(())
    }
}

struct LocalSetup {
    factor: Factorization,
    columns: DenseMat,
    stats: SubdomainStats,
}

/// Overlapping Schwarz preconditioner with an optional spectral coarse level.
pub struct SchwarzPreconditioner {
    a: SparseMat,
    maps: Vec<SubdomainMap>,
    factors: Vec<Factorization>,
    coarse: Option<CoarseSpace>,
    one_level: OneLevel,
    combine: Combine,
    report: SetupReport,
}

impl SchwarzPreconditioner {
    /// Partitions the graph of `A` and builds the preconditioner.
    pub fn setup(a: &SparseMat, cfg: &SchwarzConfig) -> Result<Self> {
        Self::setup_with_partition(a, cfg, None)
    }

    /// Builds the preconditioner, optionally from a given nonoverlapping partition.
    pub fn setup_with_partition(a: &SparseMat, cfg: &SchwarzConfig, partition: Option<Partition>) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::NotSquare { nrows: a.nrows(), ncols: a.ncols() });
        }
        let n = a.nrows();
        let g = symmetrized_graph(a)?;
        let partition = match partition {
            Some(p) => {
                if p.owner().len() != n {
                    return Err(Error::DimensionMismatch(format!(
                        "partition has {} entries for a matrix of order {n}",
                        p.owner().len()
                    )));
                }
                p
            }
            None => partition_graph(&g, cfg.n_subdomains)?,
        };
        let maps = extend_overlap(&g, &partition, cfg.delta)?;
        Self::setup_with_maps(a, cfg, maps)
    }

    /// Builds the preconditioner on explicitly given overlapping subdomains.
    pub fn setup_with_maps(a: &SparseMat, cfg: &SchwarzConfig, maps: Vec<SubdomainMap>) -> Result<Self> {
        let n = a.nrows();
        let symmetric = a.is_symmetric();
        let mut warnings = Vec::new();
        let coarse_kind = match (cfg.coarse, symmetric) {
            (CoarseKind::Auto, true) => CoarseKind::Gevp,
            (CoarseKind::Auto, false) => CoarseKind::Svd,
            (CoarseKind::Gevp, false) => {
                warnings.push("matrix is nonsymmetric: harmonic modes taken from the SVD variant".into());
                CoarseKind::Svd
            }
            (k, _) => k,
        };
        let nu = match cfg.nu {
            Some(_) if !symmetric => {
                warnings.push("matrix is nonsymmetric: partition of unity eigenproblem skipped".into());
                None
            }
            Some(_) if coarse_kind == CoarseKind::None => None,
            nu => nu,
        };

        let locals: Vec<LocalSetup> = maps
            .par_iter()
            .enumerate()
            .map(|(i, m)| local_setup(a, m, coarse_kind, cfg.tau, nu).map_err(|e| e.in_subdomain(i)))
            .collect::<Result<_>>()?;

        let k_c = color_subdomains(&maps).k_c;
        let mut factors = Vec::with_capacity(locals.len());
        let mut columns = Vec::with_capacity(locals.len());
        let mut stats = Vec::with_capacity(locals.len());
        for l in locals {
            factors.push(l.factor);
            columns.push(l.columns);
            stats.push(l.stats);
        }

        let mut dropped = 0;
        let coarse = if coarse_kind == CoarseKind::None {
            None
        } else {
            let cs = assemble_coarse_basis(n, &maps, &columns)?;
            let (cs, d) = rank_filter(&cs, cfg.drop_tol)?;
            dropped = d;
            if cs.is_empty() {
                warnings.push("coarse space is empty: running one-level only".into());
                None
            } else {
                Some(galerkin_coarse(a, cs)?)
            }
        };

        let complexity = Complexity {
            n,
            n_c: coarse.as_ref().map_or(0, |c| c.dim()),
            nnz_a: a.nnz(),
            nnz_a00: coarse.as_ref().map_or(0, |c| c.a00_nnz()),
        };
        let report = SetupReport {
            n,
            n_subdomains: maps.len(),
            delta: cfg.delta,
            coarse: coarse_kind,
            one_level: cfg.one_level,
            combine: cfg.combine,
            n_c: complexity.n_c,
            k_c,
            complexity,
            dropped_columns: dropped,
            subdomains: stats,
            warnings,
        };
        Ok(SchwarzPreconditioner {
            a: a.clone(),
            maps,
            factors,
            coarse,
            one_level: cfg.one_level,
            combine: cfg.combine,
            report,
        })
    }

    pub fn report(&self) -> &SetupReport {
        &self.report
    }

    pub fn maps(&self) -> &[SubdomainMap] {
        &self.maps
    }

    pub fn coarse(&self) -> Option<&CoarseSpace> {
        self.coarse.as_ref()
    }

    pub fn one_level_kind(&self) -> OneLevel {
        self.one_level
    }

    pub fn combine(&self) -> Combine {
        self.combine
    }

    /// `Σ R_i^T (D_i) A_ii^{-1} R_i r`, accumulated in subdomain order.
    pub fn apply_one_level(&self, r: &[f64], z: &mut [f64]) {
        let ras = self.one_level == OneLevel::Ras;
        let locals: Vec<Vec<f64>> = self
            .maps
            .par_iter()
            .zip(self.factors.par_iter())
            .map(|(m, f)| {
                let mut x = m.restrict(r);
                f.solve_in_place(&mut x);
                if ras {
                    x.truncate(m.n_interior());
                }
                x
            })
            .collect();
        z.fill(0.0);
        for (m, x) in self.maps.iter().zip(&locals) {
            for (&g, &v) in m.indices().iter().zip(x) {
                z[g] += v;
            }
        }
    }

    /// Two-level apply; equals the one-level apply when there is no coarse level.
    pub fn apply_two_level(&self, r: &[f64], z: &mut [f64]) {
        let Some(cs) = &self.coarse else {
            self.apply_one_level(r, z);
            return;
        };
        match self.combine {
            Combine::Additive => {
                self.apply_one_level(r, z);
                let q = cs.correction(r);
                crate::sparse::axpy(1.0, &q, z);
            }
            Combine::Deflated => {
                // z = Q r + (I - Q A) M1 (r - A Q r)
                let n = r.len();
                let q = cs.correction(r);
                let mut t = vec![0.0; n];
                self.a.spmv_into(&q, &mut t);
                for (ti, ri) in t.iter_mut().zip(r) {
                    *ti = ri - *ti;
                }
                let mut y = vec![0.0; n];
                self.apply_one_level(&t, &mut y);
                let mut ay = vec![0.0; n];
                self.a.spmv_into(&y, &mut ay);
                let qay = cs.correction(&ay);
                for i in 0..n {
                    z[i] = q[i] + y[i] - qay[i];
                }
            }
        }
    }
}

impl Preconditioner for SchwarzPreconditioner {
    fn dim(&self) -> usize {
        self.a.nrows()
    }

    fn apply(&self, r: &[f64], z: &mut [f64]) {
        self.apply_two_level(r, z);
    }

    fn is_symmetric(&self) -> bool {
        self.a.is_symmetric() && self.one_level == OneLevel::Asm
    }
}

fn local_setup(a: &SparseMat, m: &SubdomainMap, kind: CoarseKind, tau: f64, nu: Option<f64>) -> Result<LocalSetup> {
    let b = local_matrix(a, m)?;
    let factor = Factorization::new(b.matrix().clone(), b.is_symmetric())?;
    let ni = b.n_interior();
    let mut stats = SubdomainStats {
        size: b.len(),
        interior: ni,
        boundary: b.n_boundary(),
        harmonic_modes: 0,
        pou_modes: 0,
        harmonic_rejected: None,
        pou_rejected: None,
    };
    let mut cols: Vec<DenseMat> = Vec::new();
    if kind != CoarseKind::None {
        let f = build_harmonic(&b)?;
        let harmonic = match kind {
            CoarseKind::Full => {
                cols.push(full_harmonic_columns(&f, ni));
                None
            }
            CoarseKind::Gevp => Some(select_harmonic_modes(&b, &f, tau)?),
            CoarseKind::Svd => Some(svd_harmonic_modes(&b, &f, tau)?),
            CoarseKind::None | CoarseKind::Auto => unreachable!("resolved before local setup"),
        };
        if let Some(h) = harmonic {
            stats.harmonic_modes = h.len();
            stats.harmonic_rejected = h.largest_rejected();
            cols.push(harmonic_columns(&f, &h, ni));
        } else {
            stats.harmonic_modes = f.n_boundary();
        }
        if let Some(nu) = nu {
            let z: SpectralBasis = select_pou_modes(&b, nu)?;
            stats.pou_modes = z.len();
            stats.pou_rejected = z.largest_rejected();
            cols.push(pou_columns(&z, ni));
        }
    }
    let total: usize = cols.iter().map(|c| c.ncols()).sum();
    let mut columns = DenseMat::zeros(b.len(), total);
    let mut at = 0;
    for c in cols {
        columns.view_mut((0, at), (b.len(), c.ncols())).copy_from(&c);
        at += c.ncols();
    }
    Ok(LocalSetup { factor, columns, stats })
}
