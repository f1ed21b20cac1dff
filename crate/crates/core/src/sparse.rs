//! Square sparse complex matrices in compressed-row form.
//!
//! Entries within a row are sorted by column and unique, so two operators
//! built from the same terms in the same order are bitwise identical.

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

#[derive(Debug, Clone, PartialEq)]
pub struct SparseOperator {
    dim: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<C64>,
}

impl SparseOperator {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            row_ptr: vec![0; dim + 1],
            col_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            dim,
            row_ptr: (0..=dim).collect(),
            col_idx: (0..dim).collect(),
            values: vec![ONE; dim],
        }
    }

    /// Builds an operator from `(row, col, value)` triplets. Duplicate
    /// positions are summed; exact zeros are dropped unless they sit on the
    /// diagonal and `keep_diagonal` is requested via [`Self::from_triplets_keep_diagonal`].
    pub fn from_triplets(dim: usize, triplets: Vec<(usize, usize, C64)>) -> Self {
        Self::build(dim, triplets, false)
    }

    /// Same as [`Self::from_triplets`] but every diagonal position is stored,
    /// even when its value is zero. Fixes the sparsity pattern so that
    /// shifted copies `A + sI` share one symbolic factorization.
    pub fn from_triplets_keep_diagonal(dim: usize, mut triplets: Vec<(usize, usize, C64)>) -> Self {
        triplets.extend((0..dim).map(|k| (k, k, ZERO)));
        Self::build(dim, triplets, true)
    }

    fn build(dim: usize, mut triplets: Vec<(usize, usize, C64)>, keep_diagonal: bool) -> Self {
        triplets.sort_unstable_by_key(|t| (t.0, t.1));
        let mut row_ptr = vec![0usize; dim + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values: Vec<C64> = Vec::with_capacity(triplets.len());
        let mut rows: Vec<usize> = Vec::with_capacity(triplets.len());
        for (r, c, v) in triplets {
            assert!(r < dim && c < dim, "triplet ({r}, {c}) outside dimension {dim}");
            if let (Some(&lr), Some(&lc)) = (rows.last(), col_idx.last()) {
                if lr == r && lc == c {
                    *values.last_mut().unwrap() += v;
                    continue;
                }
            }
            rows.push(r);
            col_idx.push(c);
            values.push(v);
        }
        // drop exact cancellations
        let mut keep_r = Vec::with_capacity(rows.len());
        let mut keep_c = Vec::with_capacity(rows.len());
        let mut keep_v = Vec::with_capacity(rows.len());
        for ((r, c), v) in rows.into_iter().zip(col_idx).zip(values) {
            if v != ZERO || (keep_diagonal && r == c) {
                keep_r.push(r);
                keep_c.push(c);
                keep_v.push(v);
            }
        }
        for &r in &keep_r {
            row_ptr[r + 1] += 1;
        }
        for k in 0..dim {
            row_ptr[k + 1] += row_ptr[k];
        }
        Self {
            dim,
            row_ptr,
            col_idx: keep_c,
            values: keep_v,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    /// Iterates `(row, col, value)` in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.dim).flat_map(move |r| {
            (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |k| (r, self.col_idx[k], self.values[k]))
        })
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |k| (self.col_idx[k], self.values[k]))
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        let cols = &self.col_idx[self.row_ptr[r]..self.row_ptr[r + 1]];
        match cols.binary_search(&c) {
            Ok(k) => self.values[self.row_ptr[r] + k],
            Err(_) => ZERO,
        }
    }

    fn check_dim(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        Ok(())
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        let triplets = self.iter().map(|(r, c, v)| (c, r, v.conj())).collect();
        Self::from_triplets(self.dim, triplets)
    }

    /// Plain transpose (no conjugation).
    pub fn transpose(&self) -> Self {
        let triplets = self.iter().map(|(r, c, v)| (c, r, v)).collect();
        Self::from_triplets(self.dim, triplets)
    }

    pub fn scale(&self, s: C64) -> Self {
        if s == ZERO {
            return Self::zeros(self.dim);
        }
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= s);
        out
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        let triplets = self.iter().chain(other.iter()).collect();
        Ok(Self::from_triplets(self.dim, triplets))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(-ONE))
    }

    /// Sparse product `self · other`.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        let mut triplets = Vec::new();
        let mut acc = vec![ZERO; self.dim];
        let mut touched: Vec<usize> = Vec::new();
        let mut flag = vec![false; self.dim];
        for r in 0..self.dim {
            for (k, a) in self.row(r) {
                for (c, b) in other.row(k) {
                    if !flag[c] {
                        flag[c] = true;
                        touched.push(c);
                    }
                    acc[c] += a * b;
                }
            }
            touched.sort_unstable();
            for &c in &touched {
                triplets.push((r, c, acc[c]));
                acc[c] = ZERO;
                flag[c] = false;
            }
            touched.clear();
        }
        Ok(Self::from_triplets(self.dim, triplets))
    }

    /// `y = A x`.
    pub fn matvec(&self, x: &[C64]) -> Result<Vec<C64>> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: x.len(),
            });
        }
        let row_dot = |r: usize| self.row(r).fold(ZERO, |acc, (c, v)| acc + v * x[c]);
        #[cfg(feature = "parallel")]
        {
            use rayon::prelude::*;
            if self.nnz() > 1 << 16 {
                return Ok((0..self.dim).into_par_iter().map(row_dot).collect());
            }
        }
        Ok((0..self.dim).map(row_dot).collect())
    }

    /// Largest `|A[i,j] - conj(A[j,i])|`.
    pub fn hermiticity_error(&self) -> f64 {
        let adj = self.adjoint();
        self.iter()
            .chain(adj.iter())
            .map(|(r, c, _)| (self.get(r, c) - adj.get(r, c)).norm())
            .fold(0.0, f64::max)
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Row-major dense copy; only sensible for small operators.
    pub fn to_dense(&self) -> Vec<Vec<C64>> {
        let mut out = vec![vec![ZERO; self.dim]; self.dim];
        for (r, c, v) in self.iter() {
            out[r][c] = v;
        }
        out
    }

    /// Dense `faer` copy.
    pub fn to_mat(&self) -> faer::Mat<C64> {
        let mut out = faer::Mat::zeros(self.dim, self.dim);
        for (r, c, v) in self.iter() {
            out[(r, c)] = v;
        }
        out
    }
}
