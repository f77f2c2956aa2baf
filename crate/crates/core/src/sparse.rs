//! Compressed sparse row storage and the symmetrized sparsity graph.

use crate::dense::DenseMat;
use crate::error::{Error, Result};

/// Largest block (in rows) that may be converted to dense storage.
pub const DENSE_ROW_LIMIT: usize = 5000;

/// Real sparse matrix in CSR layout.
///
/// Column indices are strictly increasing within each row. The `symmetric`
/// flag is computed at construction by an exact entrywise comparison, so a set
/// flag always means `value(i, j) == value(j, i)` for every stored entry.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMat {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
    symmetric: bool,
}

impl SparseMat {
    /// Builds a matrix from `(row, col, value)` triplets; duplicates are summed.
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        triplets: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self> {
        let mut entries: Vec<(usize, usize, f64)> = triplets.into_iter().collect();
        for &(i, j, v) in &entries {
            if i >= nrows || j >= ncols {
                return Err(Error::InvalidArgument(format!(
                    "entry ({i}, {j}) out of range for a {nrows}x{ncols} matrix"
                )));
            }
            if !v.is_finite() {
                return Err(Error::InvalidArgument(format!("non-finite value at ({i}, {j})")));
            }
        }
        entries.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));

        let mut row_ptr = vec![0usize; nrows + 1];
        let mut col_idx = Vec::with_capacity(entries.len());
        let mut values: Vec<f64> = Vec::with_capacity(entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in entries {
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(j);
                values.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..nrows {
            row_ptr[i + 1] += row_ptr[i];
        }
        Ok(Self::from_parts(nrows, ncols, row_ptr, col_idx, values))
    }

    fn from_parts(
        nrows: usize,
        ncols: usize,
        row_ptr: Vec<usize>,
        col_idx: Vec<usize>,
        values: Vec<f64>,
    ) -> Self {
        let mut m = SparseMat { nrows, ncols, row_ptr, col_idx, values, symmetric: false };
        m.symmetric = m.check_symmetry();
        m
    }

    pub fn identity(n: usize) -> Self {
        Self::from_parts(n, n, (0..=n).collect(), (0..n).collect(), vec![1.0; n])
    }

    pub fn from_dense(d: &DenseMat) -> Self {
        let mut trip = Vec::new();
        for i in 0..d.nrows() {
            for j in 0..d.ncols() {
                let v = d[(i, j)];
                if v != 0.0 {
                    trip.push((i, j, v));
                }
            }
        }
        Self::from_triplets(d.nrows(), d.ncols(), trip).expect("dense entries are in range")
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn is_square(&self) -> bool {
        self.nrows == self.ncols
    }

    /// True when the matrix is exactly symmetric (checked at construction).
    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[r.clone()], &self.values[r])
    }

    /// Stored value at `(i, j)`, zero when the entry is structurally absent.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(k) => vals[k],
            Err(_) => 0.0,
        }
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows).flat_map(move |i| {
            let (cols, vals) = self.row(i);
            cols.iter().zip(vals).map(move |(&j, &v)| (i, j, v))
        })
    }

    fn check_symmetry(&self) -> bool {
        if !self.is_square() {
            return false;
        }
        self.triplets().all(|(i, j, v)| i == j || self.get(j, i) == v)
    }

    /// `y = A x`.
    pub fn spmv(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.ncols {
            return Err(Error::DimensionMismatch(format!(
                "spmv: vector of length {} against {} columns",
                x.len(),
                self.ncols
            )));
        }
        let mut y = vec![0.0; self.nrows];
        self.spmv_into(x, &mut y);
        Ok(y)
    }

    /// Unchecked `y = A x` for hot loops; lengths are asserted in debug builds.
    pub fn spmv_into(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.ncols);
        debug_assert_eq!(y.len(), self.nrows);
        for (i, yi) in y.iter_mut().enumerate() {
            let (cols, vals) = self.row(i);
            *yi = cols.iter().zip(vals).map(|(&j, &v)| v * x[j]).sum();
        }
    }

    pub fn transpose(&self) -> SparseMat {
        let mut counts = vec![0usize; self.ncols + 1];
        for &j in &self.col_idx {
            counts[j + 1] += 1;
        }
        for j in 0..self.ncols {
            counts[j + 1] += counts[j];
        }
        let row_ptr = counts.clone();
        let mut next = counts;
        let mut col_idx = vec![0usize; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        for i in 0..self.nrows {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                let p = next[j];
                col_idx[p] = i;
                values[p] = v;
                next[j] += 1;
            }
        }
        SparseMat {
            nrows: self.ncols,
            ncols: self.nrows,
            row_ptr,
            col_idx,
            values,
            symmetric: self.symmetric,
        }
    }

    /// Sparse product `self * other` (row-by-row accumulation).
    pub fn matmul(&self, other: &SparseMat) -> Result<SparseMat> {
        if self.ncols != other.nrows {
            return Err(Error::DimensionMismatch(format!(
                "matmul: {}x{} times {}x{}",
                self.nrows, self.ncols, other.nrows, other.ncols
            )));
        }
        let mut row_ptr = vec![0usize; self.nrows + 1];
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        let mut acc = vec![0.0; other.ncols];
        let mut mark = vec![usize::MAX; other.ncols];
        let mut touched: Vec<usize> = Vec::new();
        for i in 0..self.nrows {
            touched.clear();
            let (ac, av) = self.row(i);
            for (&k, &a) in ac.iter().zip(av) {
                let (bc, bv) = other.row(k);
                for (&j, &b) in bc.iter().zip(bv) {
                    if mark[j] != i {
                        mark[j] = i;
                        acc[j] = 0.0;
                        touched.push(j);
                    }
                    acc[j] += a * b;
                }
            }
            touched.sort_unstable();
            for &j in &touched {
                col_idx.push(j);
                values.push(acc[j]);
            }
            row_ptr[i + 1] = col_idx.len();
        }
        Ok(Self::from_parts(self.nrows, other.ncols, row_ptr, col_idx, values))
    }

    /// Dense copy, refused above [`DENSE_ROW_LIMIT`] rows.
    pub fn to_dense(&self) -> Result<DenseMat> {
        if self.nrows > DENSE_ROW_LIMIT {
            return Err(Error::DenseTooLarge { rows: self.nrows, limit: DENSE_ROW_LIMIT });
        }
        let mut d = DenseMat::zeros(self.nrows, self.ncols);
        for (i, j, v) in self.triplets() {
            d[(i, j)] = v;
        }
        Ok(d)
    }

    /// Dense block `A[rows, cols]`, in the given index order.
    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> Result<DenseMat> {
        if rows.len() > DENSE_ROW_LIMIT {
            return Err(Error::DenseTooLarge { rows: rows.len(), limit: DENSE_ROW_LIMIT });
        }
        let mut pos = vec![usize::MAX; self.ncols];
        for (k, &c) in cols.iter().enumerate() {
            if c >= self.ncols {
                return Err(Error::InvalidArgument(format!("column index {c} out of range")));
            }
            pos[c] = k;
        }
        let mut d = DenseMat::zeros(rows.len(), cols.len());
        for (li, &r) in rows.iter().enumerate() {
            if r >= self.nrows {
                return Err(Error::InvalidArgument(format!("row index {r} out of range")));
            }
            let (rc, rv) = self.row(r);
            for (&j, &v) in rc.iter().zip(rv) {
                let lj = pos[j];
                if lj != usize::MAX {
                    d[(li, lj)] = v;
                }
            }
        }
        Ok(d)
    }

    /// Frobenius norm of `A - A^T`.
    pub fn asymmetry_norm(&self) -> f64 {
        let t = self.transpose();
        let mut s = 0.0;
        for (i, j, v) in self.triplets() {
            let d = v - t.get(i, j);
            s += d * d;
        }
        for (i, j, v) in t.triplets() {
            if self.row(i).0.binary_search(&j).is_err() {
                s += v * v;
            }
        }
        s.sqrt()
    }
}

/// Undirected graph of the sparsity pattern of `A + A^T`, without self-loops.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    xadj: Vec<usize>,
    adjncy: Vec<usize>,
}

impl Graph {
    /// Builds a graph from an edge list; edges are symmetrized and deduplicated.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (i, j) in edges {
            if i != j {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
        let mut xadj = Vec::with_capacity(n + 1);
        let mut adjncy = Vec::new();
        xadj.push(0);
        for mut nb in adj {
            nb.sort_unstable();
            nb.dedup();
            adjncy.extend(nb);
            xadj.push(adjncy.len());
        }
        Graph { xadj, adjncy }
    }

    pub fn n(&self) -> usize {
        self.xadj.len() - 1
    }

    pub fn num_edges(&self) -> usize {
        self.adjncy.len() / 2
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adjncy[self.xadj[v]..self.xadj[v + 1]]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.xadj[v + 1] - self.xadj[v]
    }

    /// Breadth-first distances from a set of sources (`usize::MAX` if unreachable).
    pub fn bfs_distances(&self, sources: &[usize]) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.n()];
        let mut queue = std::collections::VecDeque::new();
        for &s in sources {
            if dist[s] == usize::MAX {
                dist[s] = 0;
                queue.push_back(s);
            }
        }
        while let Some(v) = queue.pop_front() {
            for &w in self.neighbors(v) {
                if dist[w] == usize::MAX {
                    dist[w] = dist[v] + 1;
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    /// Connected components, each sorted ascending, ordered by smallest node.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.n()];
        let mut comps = Vec::new();
        for s in 0..self.n() {
            if seen[s] {
                continue;
            }
            seen[s] = true;
            let mut comp = vec![s];
            let mut head = 0;
            while head < comp.len() {
                let v = comp[head];
                head += 1;
                for &w in self.neighbors(v) {
                    if !seen[w] {
                        seen[w] = true;
                        comp.push(w);
                    }
                }
            }
            comp.sort_unstable();
            comps.push(comp);
        }
        comps
    }
}

/// Sparsity graph of `A + A^T`; structural entries holding an explicit zero are ignored.
pub fn symmetrized_graph(a: &SparseMat) -> Result<Graph> {
    if !a.is_square() {
        return Err(Error::NotSquare { nrows: a.nrows(), ncols: a.ncols() });
    }
    Ok(Graph::from_edges(
        a.nrows(),
        a.triplets().filter(|&(i, j, v)| i != j && v != 0.0).map(|(i, j, _)| (i, j)),
    ))
}

pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

pub fn norm2(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

/// `y += alpha * x`
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}
