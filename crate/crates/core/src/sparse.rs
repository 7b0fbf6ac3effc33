//! Compressed sparse row operators with complex entries.

use nalgebra::DMatrix;

use crate::C64;

/// Square sparse matrix in CSR layout.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOperator {
    dim: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<C64>,
}

impl SparseOperator {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            indptr: vec![0; dim + 1],
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::diagonal_real(&vec![1.0; dim])
    }

    pub fn diagonal_real(diag: &[f64]) -> Self {
        Self::diagonal(&diag.iter().map(|&d| C64::new(d, 0.0)).collect::<Vec<_>>())
    }

    pub fn diagonal(diag: &[C64]) -> Self {
        let trips = diag
            .iter()
            .enumerate()
            .map(|(i, &d)| (i, i, d))
            .collect::<Vec<_>>();
        Self::from_triplets(diag.len(), trips)
    }

    /// Builds from `(row, col, value)` triplets; duplicates are summed and exact
    /// zeros removed.
    pub fn from_triplets(dim: usize, mut trips: Vec<(usize, usize, C64)>) -> Self {
        trips.sort_unstable_by_key(|t| (t.0, t.1));
        let mut indptr = vec![0usize; dim + 1];
        let mut indices = Vec::with_capacity(trips.len());
        let mut values: Vec<C64> = Vec::with_capacity(trips.len());
        let mut rows = Vec::with_capacity(trips.len());
        for (r, c, v) in trips {
            assert!(r < dim && c < dim, "triplet ({r}, {c}) outside dimension {dim}");
            if let (Some(&lr), Some(&lc)) = (rows.last(), indices.last()) {
                if lr == r && lc == c {
                    *values.last_mut().unwrap() += v;
                    continue;
                }
            }
            rows.push(r);
            indices.push(c);
            values.push(v);
        }
        let mut kept_idx = Vec::with_capacity(indices.len());
        let mut kept_val = Vec::with_capacity(values.len());
        for ((r, c), v) in rows.into_iter().zip(indices).zip(values) {
            if v != C64::new(0.0, 0.0) {
                indptr[r + 1] += 1;
                kept_idx.push(c);
                kept_val.push(v);
            }
        }
        for r in 0..dim {
            indptr[r + 1] += indptr[r];
        }
        Self {
            dim,
            indptr,
            indices: kept_idx,
            values: kept_val,
        }
    }

    /// Converts a dense matrix, dropping entries with modulus `<= drop_tol`.
    pub fn from_dense(m: &DMatrix<C64>, drop_tol: f64) -> Self {
        assert_eq!(m.nrows(), m.ncols());
        let mut trips = Vec::new();
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                let v = m[(r, c)];
                if v.norm() > drop_tol {
                    trips.push((r, c, v));
                }
            }
        }
        Self::from_triplets(m.nrows(), trips)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Iterates over stored `(row, col, value)` entries in row order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.dim).flat_map(move |r| {
            (self.indptr[r]..self.indptr[r + 1]).map(move |k| (r, self.indices[k], self.values[k]))
        })
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        let row = &self.indices[self.indptr[r]..self.indptr[r + 1]];
        match row.binary_search(&c) {
            Ok(k) => self.values[self.indptr[r] + k],
            Err(_) => C64::new(0.0, 0.0),
        }
    }

    /// `y = A x`.
    pub fn apply_into(&self, x: &[C64], y: &mut [C64]) {
        assert_eq!(x.len(), self.dim);
        assert_eq!(y.len(), self.dim);
        for r in 0..self.dim {
            let mut acc = C64::new(0.0, 0.0);
            for k in self.indptr[r]..self.indptr[r + 1] {
                acc += self.values[k] * x[self.indices[k]];
            }
            y[r] = acc;
        }
    }

    pub fn apply(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![C64::new(0.0, 0.0); self.dim];
        self.apply_into(x, &mut y);
        y
    }

    /// `<x, A x>`.
    pub fn expectation(&self, x: &[C64]) -> C64 {
        let y = self.apply(x);
        x.iter().zip(&y).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn adjoint(&self) -> Self {
        let trips = self.entries().map(|(r, c, v)| (c, r, v.conj())).collect();
        Self::from_triplets(self.dim, trips)
    }

    pub fn scale(&self, s: C64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= s);
        out
    }

    /// `a * self + b * other`.
    pub fn lin_comb(&self, a: C64, other: &Self, b: C64) -> Self {
        assert_eq!(self.dim, other.dim);
        let trips = self
            .entries()
            .map(|(r, c, v)| (r, c, a * v))
            .chain(other.entries().map(|(r, c, v)| (r, c, b * v)))
            .collect();
        Self::from_triplets(self.dim, trips)
    }

    pub fn add(&self, other: &Self) -> Self {
        self.lin_comb(C64::new(1.0, 0.0), other, C64::new(1.0, 0.0))
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.lin_comb(C64::new(1.0, 0.0), other, C64::new(-1.0, 0.0))
    }

    /// `diag(d) * self`.
    pub fn scale_rows(&self, d: &[f64]) -> Self {
        assert_eq!(d.len(), self.dim);
        let trips = self.entries().map(|(r, c, v)| (r, c, v * d[r])).collect();
        Self::from_triplets(self.dim, trips)
    }

    /// `self * diag(d)`.
    pub fn scale_cols(&self, d: &[f64]) -> Self {
        assert_eq!(d.len(), self.dim);
        let trips = self.entries().map(|(r, c, v)| (r, c, v * d[c])).collect();
        Self::from_triplets(self.dim, trips)
    }

    /// Sparse product `self * other`.
    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        let mut trips = Vec::new();
        for r in 0..self.dim {
            for k in self.indptr[r]..self.indptr[r + 1] {
                let mid = self.indices[k];
                let a = self.values[k];
                for kk in other.indptr[mid]..other.indptr[mid + 1] {
                    trips.push((r, other.indices[kk], a * other.values[kk]));
                }
            }
        }
        Self::from_triplets(self.dim, trips)
    }

    /// Largest `|A_rc - conj(A_cr)|`.
    pub fn hermiticity_defect(&self) -> f64 {
        self.entries()
            .map(|(r, c, v)| (v - self.get(c, r).conj()).norm())
            .fold(0.0, f64::max)
    }

    /// Largest stored modulus.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for (r, c, v) in self.entries() {
            m[(r, c)] += v;
        }
        m
    }

    /// Keeps only entries whose `(row, col)` satisfy `keep`.
    pub fn filter(&self, keep: impl Fn(usize, usize) -> bool) -> Self {
        let trips = self.entries().filter(|&(r, c, _)| keep(r, c)).collect();
        Self::from_triplets(self.dim, trips)
    }
}
