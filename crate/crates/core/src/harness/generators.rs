//! Finite-difference test problems and small fixtures.
//!
//! All grids use homogeneous Dirichlet boundaries with `m` interior points
//! per direction and spacing `h = 1/(m+1)`; unknowns are numbered
//! lexicographically with x fastest.

use crate::error::{Error, Result};
use crate::sparse::SparseMat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Test problem description.
#[derive(Debug, Clone, PartialEq)]
pub enum ProblemSpec {
    Poisson2d { m: usize },
    Poisson3d { m: usize },
    /// Diffusion with high-coefficient horizontal channels.
    Hetero2d { m: usize, contrast: f64, seed: u64 },
    /// `-eps Δu + v·∇u` with first-order upwinding.
    Advection2d { m: usize, eps: f64, velocity: (f64, f64) },
}

impl ProblemSpec {
    pub fn grid_size(&self) -> usize {
        match *self {
            ProblemSpec::Poisson2d { m }
            | ProblemSpec::Poisson3d { m }
            | ProblemSpec::Hetero2d { m, .. }
            | ProblemSpec::Advection2d { m, .. } => m,
        }
    }
}

/// Builds the matrix and the right-hand side `b = A·1`.
pub fn generate(spec: &ProblemSpec) -> Result<(SparseMat, Vec<f64>)> {
    let m = spec.grid_size();
    if m < 2 {
        return Err(Error::InvalidArgument(format!("grid size m={m} is too small (need m >= 2)")));
    }
    let a = match *spec {
        ProblemSpec::Poisson2d { m } => poisson2d(m),
        ProblemSpec::Poisson3d { m } => poisson3d(m),
        ProblemSpec::Hetero2d { m, contrast, seed } => hetero2d(m, contrast, seed)?,
        ProblemSpec::Advection2d { m, eps, velocity } => advection2d(m, eps, velocity)?,
    };
    let b = a.spmv(&vec![1.0; a.ncols()])?;
    Ok((a, b))
}

fn idx2(m: usize, i: usize, j: usize) -> usize {
    j * m + i
}

pub fn poisson2d(m: usize) -> SparseMat {
    let h2 = ((m + 1) as f64).powi(2);
    let mut t = Vec::with_capacity(5 * m * m);
    for j in 0..m {
        for i in 0..m {
            let r = idx2(m, i, j);
            t.push((r, r, 4.0 * h2));
            if i > 0 {
                t.push((r, idx2(m, i - 1, j), -h2));
            }
            if i + 1 < m {
                t.push((r, idx2(m, i + 1, j), -h2));
            }
            if j > 0 {
                t.push((r, idx2(m, i, j - 1), -h2));
            }
            if j + 1 < m {
                t.push((r, idx2(m, i, j + 1), -h2));
            }
        }
    }
    SparseMat::from_triplets(m * m, m * m, t).expect("stencil indices are in range")
}

pub fn poisson3d(m: usize) -> SparseMat {
    let h2 = ((m + 1) as f64).powi(2);
    let id = |i: usize, j: usize, k: usize| (k * m + j) * m + i;
    let mut t = Vec::with_capacity(7 * m * m * m);
    for k in 0..m {
        for j in 0..m {
            for i in 0..m {
                let r = id(i, j, k);
                t.push((r, r, 6.0 * h2));
                let mut nb = |c: usize| t.push((r, c, -h2));
                if i > 0 {
                    nb(id(i - 1, j, k));
                }
                if i + 1 < m {
                    nb(id(i + 1, j, k));
                }
                if j > 0 {
                    nb(id(i, j - 1, k));
                }
                if j + 1 < m {
                    nb(id(i, j + 1, k));
                }
                if k > 0 {
                    nb(id(i, j, k - 1));
                }
                if k + 1 < m {
                    nb(id(i, j, k + 1));
                }
            }
        }
    }
    let n = m * m * m;
    SparseMat::from_triplets(n, n, t).expect("stencil indices are in range")
}

/// Nodal coefficient field: 1 in the background, `contrast` on
/// `max(1, m/5)` randomly placed full-width horizontal channels.
pub fn channel_coefficients(m: usize, contrast: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows: Vec<usize> = (0..m).collect();
    let count = (m / 5).max(1).min(m);
    for k in 0..count {
        let pick = rng.gen_range(k..m);
        rows.swap(k, pick);
    }
    let mut kappa = vec![1.0; m * m];
    for &j in &rows[..count] {
        for i in 0..m {
            kappa[idx2(m, i, j)] = contrast;
        }
    }
    kappa
}

/// Variable-coefficient 5-point diffusion with harmonic-mean edge weights.
pub fn hetero2d(m: usize, contrast: f64, seed: u64) -> Result<SparseMat> {
    if !(contrast.is_finite() && contrast > 0.0) {
        return Err(Error::InvalidArgument(format!("contrast must be positive, got {contrast}")));
    }
    let kappa = channel_coefficients(m, contrast, seed);
    let h2 = ((m + 1) as f64).powi(2);
    let hm = |a: f64, b: f64| 2.0 * a * b / (a + b);
    let mut t = Vec::with_capacity(5 * m * m);
    for j in 0..m {
        for i in 0..m {
            let r = idx2(m, i, j);
            let kr = kappa[r];
            let mut diag = 0.0;
            let nbrs = [
                (i > 0).then(|| idx2(m, i.wrapping_sub(1), j)),
                (i + 1 < m).then(|| idx2(m, i + 1, j)),
                (j > 0).then(|| idx2(m, i, j.wrapping_sub(1))),
                (j + 1 < m).then(|| idx2(m, i, j + 1)),
            ];
            for nb in nbrs {
                match nb {
                    Some(c) => {
                        let w = hm(kr, kappa[c]) * h2;
                        diag += w;
                        t.push((r, c, -w));
                    }
                    // Dirichlet neighbour carries the node's own coefficient
                    None => diag += kr * h2,
                }
            }
            t.push((r, r, diag));
        }
    }
    SparseMat::from_triplets(m * m, m * m, t)
}

/// Upwind advection plus `eps`-scaled 5-point diffusion.
pub fn advection2d(m: usize, eps: f64, velocity: (f64, f64)) -> Result<SparseMat> {
    if !(eps.is_finite() && eps > 0.0) {
        return Err(Error::InvalidArgument(format!("diffusion eps must be positive, got {eps}")));
    }
    let h = 1.0 / (m + 1) as f64;
    let d = eps / (h * h);
    let (vx, vy) = velocity;
    let mut t = Vec::with_capacity(5 * m * m);
    for j in 0..m {
        for i in 0..m {
            let r = idx2(m, i, j);
            t.push((r, r, 4.0 * d + (vx.abs() + vy.abs()) / h));
            // upwind side of each direction takes the convective coupling
            let west = -d - vx.max(0.0) / h;
            let east = -d + vx.min(0.0) / h;
            let south = -d - vy.max(0.0) / h;
            let north = -d + vy.min(0.0) / h;
            if i > 0 {
                t.push((r, idx2(m, i - 1, j), west));
            }
            if i + 1 < m {
                t.push((r, idx2(m, i + 1, j), east));
            }
            if j > 0 {
                t.push((r, idx2(m, i, j - 1), south));
            }
            if j + 1 < m {
                t.push((r, idx2(m, i, j + 1), north));
            }
        }
    }
    SparseMat::from_triplets(m * m, m * m, t)
}

/// `tridiag(-1, 2, -1)` of order `n`.
pub fn laplace_1d(n: usize) -> SparseMat {
    let mut t = Vec::with_capacity(3 * n);
    for i in 0..n {
        t.push((i, i, 2.0));
        if i > 0 {
            t.push((i, i - 1, -1.0));
        }
        if i + 1 < n {
            t.push((i, i + 1, -1.0));
        }
    }
    SparseMat::from_triplets(n, n, t).expect("indices are in range")
}

/// Random sparse SPD matrix: a path backbone plus about `extra_per_row`
/// random edges per row, random off-diagonal values in `[-1, 1]` and a
/// strictly dominant diagonal.
pub fn random_sparse_spd(n: usize, extra_per_row: f64, seed: u64) -> SparseMat {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges: Vec<(usize, usize)> = (1..n).map(|i| (i - 1, i)).collect();
    let extra = (extra_per_row * n as f64).round() as usize;
    for _ in 0..extra {
        let i = rng.gen_range(0..n);
        let j = rng.gen_range(0..n);
        if i != j {
            edges.push((i.min(j), i.max(j)));
        }
    }
    edges.sort_unstable();
    edges.dedup();
    let mut diag = vec![0.0; n];
    let mut t = Vec::with_capacity(2 * edges.len() + n);
    for (i, j) in edges {
        let mut v: f64 = rng.gen_range(-1.0..1.0);
        if v == 0.0 {
            v = 0.5;
        }
        t.push((i, j, v));
        t.push((j, i, v));
        diag[i] += v.abs();
        diag[j] += v.abs();
    }
    for (i, d) in diag.into_iter().enumerate() {
        t.push((i, i, d + rng.gen_range(0.05..1.0)));
    }
    SparseMat::from_triplets(n, n, t).expect("indices are in range")
}

/// Nonsymmetric 7x7 tridiagonal fixture with entries 1..20 filled row by row.
pub fn example_7x7() -> SparseMat {
    let rows: [&[(usize, f64)]; 7] = [
        &[(0, 1.0), (1, 2.0)],
        &[(0, 3.0), (1, 4.0), (2, 5.0)],
        &[(1, 7.0), (2, 8.0), (3, 9.0)],
        &[(2, 10.0), (3, 11.0), (4, 12.0)],
        &[(3, 13.0), (4, 14.0), (5, 15.0)],
        &[(4, 16.0), (5, 17.0), (6, 18.0)],
        &[(5, 19.0), (6, 20.0)],
    ];
    let trip = rows
        .iter()
        .enumerate()
        .flat_map(|(i, r)| r.iter().map(move |&(j, v)| (i, j, v)));
    SparseMat::from_triplets(7, 7, trip).expect("indices are in range")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::sym_extreme_eigs;

    #[test]
    fn poisson2d_m2() {
        let a = poisson2d(2);
        let h2 = 9.0;
        assert_eq!(a.nrows(), 4);
        for i in 0..4 {
            assert_eq!(a.get(i, i), 4.0 * h2);
        }
        assert_eq!(a.get(0, 1), -h2);
        assert_eq!(a.get(0, 2), -h2);
        assert_eq!(a.get(0, 3), 0.0);
        assert_eq!(a.get(1, 2), 0.0);
        assert!(a.is_symmetric());
    }

    #[test]
    fn manufactured_rhs() {
        let specs = [
            ProblemSpec::Poisson2d { m: 5 },
            ProblemSpec::Poisson3d { m: 3 },
            ProblemSpec::Hetero2d { m: 6, contrast: 1e6, seed: 3 },
            ProblemSpec::Advection2d { m: 5, eps: 1e-2, velocity: (1.0, 0.0) },
        ];
        for s in &specs {
            let (a, b) = generate(s).unwrap();
            assert_eq!(a.spmv(&vec![1.0; a.nrows()]).unwrap(), b);
        }
        assert!(generate(&ProblemSpec::Poisson2d { m: 1 }).is_err());
    }

    #[test]
    fn advection_is_nonsymmetric() {
        let a = advection2d(20, 1e-2, (1.0, 0.0)).unwrap();
        assert!(!a.is_symmetric());
        assert!(a.asymmetry_norm() > 0.0);
    }

    #[test]
    fn diffusion_kinds_are_spd() {
        for a in [poisson2d(6), poisson3d(3), hetero2d(6, 1e4, 1).unwrap(), random_sparse_spd(40, 2.0, 9)] {
            assert!(a.is_symmetric());
            let (lo, _) = sym_extreme_eigs(&a.to_dense().unwrap()).unwrap();
            assert!(lo > 0.0);
        }
    }

    #[test]
    fn channels_have_contrast() {
        let k = channel_coefficients(20, 1e4, 5);
        assert_eq!(k.iter().filter(|&&x| x == 1e4).count(), 4 * 20);
        assert_eq!(k, channel_coefficients(20, 1e4, 5));
    }
}
