use std::io::Write;

use faer::Mat;

use super::{LinearOperator, C64, ZERO};
use crate::error::{LabError, Result};

/// Compressed sparse row matrix with complex entries.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<C64>,
}

impl SparseMatrix {
    /// Builds from `(row, col, value)` triplets. Duplicates are summed and
    /// exact zeros dropped.
    pub fn from_triplets(nrows: usize, ncols: usize, mut t: Vec<(usize, usize, C64)>) -> Self {
        t.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut indptr = vec![0usize; nrows + 1];
        let mut indices = Vec::with_capacity(t.len());
        let mut values: Vec<C64> = Vec::with_capacity(t.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in t {
            assert!(r < nrows && c < ncols, "triplet ({r},{c}) out of bounds");
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                indices.push(c);
                values.push(v);
                indptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..nrows {
            indptr[r + 1] += indptr[r];
        }
        Self {
            nrows,
            ncols,
            indptr,
            indices,
            values,
        }
        .pruned()
    }

    fn pruned(self) -> Self {
        if self.values.iter().all(|v| *v != ZERO) {
            return self;
        }
        let mut t = Vec::with_capacity(self.values.len());
        for (r, c, v) in self.triplets() {
            if v != ZERO {
                t.push((r, c, v));
            }
        }
        let mut indptr = vec![0usize; self.nrows + 1];
        for &(r, _, _) in &t {
            indptr[r + 1] += 1;
        }
        for r in 0..self.nrows {
            indptr[r + 1] += indptr[r];
        }
        Self {
            nrows: self.nrows,
            ncols: self.ncols,
            indptr,
            indices: t.iter().map(|x| x.1).collect(),
            values: t.iter().map(|x| x.2).collect(),
        }
    }

    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            indptr: vec![0; nrows + 1],
            indices: vec![],
            values: vec![],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::diagonal(&vec![1.0; n])
    }

    pub fn diagonal(d: &[f64]) -> Self {
        let t = d
            .iter()
            .enumerate()
            .map(|(i, &v)| (i, i, C64::new(v, 0.0)))
            .collect();
        Self::from_triplets(d.len(), d.len(), t)
    }

    pub fn from_dense(m: &Mat<C64>, drop_below: f64) -> Self {
        let mut t = Vec::new();
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                let v = m[(i, j)];
                if v.norm() > drop_below {
                    t.push((i, j, v));
                }
            }
        }
        Self::from_triplets(m.nrows(), m.ncols(), t)
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

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.nrows).flat_map(move |r| {
            (self.indptr[r]..self.indptr[r + 1]).map(move |k| (r, self.indices[k], self.values[k]))
        })
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        let lo = self.indptr[r];
        let hi = self.indptr[r + 1];
        match self.indices[lo..hi].binary_search(&c) {
            Ok(k) => self.values[lo + k],
            Err(_) => ZERO,
        }
    }

    /// `y <- A x`
    pub fn mul_vec(&self, x: &[C64], y: &mut [C64]) {
        for (r, yr) in y.iter_mut().enumerate().take(self.nrows) {
            let mut acc = ZERO;
            for k in self.indptr[r]..self.indptr[r + 1] {
                acc += self.values[k] * x[self.indices[k]];
            }
            *yr = acc;
        }
    }

    pub fn adjoint(&self) -> Self {
        let t = self.triplets().map(|(r, c, v)| (c, r, v.conj())).collect();
        Self::from_triplets(self.ncols, self.nrows, t)
    }

    pub fn scale(&self, a: C64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= a);
        out.pruned()
    }

    /// `self + a * other`
    pub fn add_scaled(&self, a: C64, other: &Self) -> Self {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        let mut t: Vec<_> = self.triplets().collect();
        t.extend(other.triplets().map(|(r, c, v)| (r, c, a * v)));
        Self::from_triplets(self.nrows, self.ncols, t)
    }

    pub fn add(&self, other: &Self) -> Self {
        self.add_scaled(C64::new(1.0, 0.0), other)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add_scaled(C64::new(-1.0, 0.0), other)
    }

    /// Sparse product `self * other`.
    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.ncols, other.nrows);
        let mut acc = vec![ZERO; other.ncols];
        let mut mark = vec![usize::MAX; other.ncols];
        let mut t = Vec::new();
        for r in 0..self.nrows {
            let mut cols = Vec::new();
            for k in self.indptr[r]..self.indptr[r + 1] {
                let a = self.values[k];
                let m = self.indices[k];
                for kk in other.indptr[m]..other.indptr[m + 1] {
                    let c = other.indices[kk];
                    if mark[c] != r {
                        mark[c] = r;
                        acc[c] = ZERO;
                        cols.push(c);
                    }
                    acc[c] += a * other.values[kk];
                }
            }
            for c in cols {
                t.push((r, c, acc[c]));
            }
        }
        Self::from_triplets(self.nrows, other.ncols, t)
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &Self) -> Self {
        let mut t = Vec::with_capacity(self.nnz() * other.nnz());
        for (r1, c1, v1) in self.triplets() {
            for (r2, c2, v2) in other.triplets() {
                t.push((r1 * other.nrows + r2, c1 * other.ncols + c2, v1 * v2));
            }
        }
        Self::from_triplets(self.nrows * other.nrows, self.ncols * other.ncols, t)
    }

    pub fn to_dense(&self) -> Mat<C64> {
        let mut m = Mat::<C64>::zeros(self.nrows, self.ncols);
        for (r, c, v) in self.triplets() {
            m[(r, c)] += v;
        }
        m
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |a, v| a.max(v.norm()))
    }

    /// Largest absolute row sum, an upper bound on the spectral norm of a
    /// Hermitian matrix.
    pub fn row_sum_bound(&self) -> f64 {
        (0..self.nrows)
            .map(|r| {
                (self.indptr[r]..self.indptr[r + 1])
                    .map(|k| self.values[k].norm())
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
    }

    /// Gershgorin enclosure `[lo, hi]` of the spectrum of a Hermitian matrix.
    pub fn gershgorin(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for r in 0..self.nrows {
            let mut d = 0.0;
            let mut off = 0.0;
            for k in self.indptr[r]..self.indptr[r + 1] {
                if self.indices[k] == r {
                    d = self.values[k].re;
                } else {
                    off += self.values[k].norm();
                }
            }
            lo = lo.min(d - off);
            hi = hi.max(d + off);
        }
        if self.nrows == 0 {
            (0.0, 0.0)
        } else {
            (lo, hi)
        }
    }

    /// Largest entry of `A - A^*`.
    pub fn hermiticity_defect(&self) -> f64 {
        self.sub(&self.adjoint()).max_abs()
    }

    /// Writes the nonzero entries as `row col re im` lines.
    pub fn write_coordinates<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{} {} {}", self.nrows, self.ncols, self.nnz())?;
        for (r, c, v) in self.triplets() {
            writeln!(w, "{r} {c} {:.17e} {:.17e}", v.re, v.im)?;
        }
        Ok(())
    }
}

impl LinearOperator for SparseMatrix {
    fn dim(&self) -> usize {
        self.nrows
    }

    fn apply(&self, x: &[C64], y: &mut [C64]) {
        self.mul_vec(x, y)
    }

    fn to_dense(&self) -> Mat<C64> {
        SparseMatrix::to_dense(self)
    }
}

/// Tensor factor dimensions of `L2_grid ⊗ C^spinor ⊗ Fock`, in that order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct FactorShape {
    pub electron: usize,
    pub spinor: usize,
    pub fock: usize,
}

impl FactorShape {
    pub fn dim(&self) -> usize {
        self.electron * self.spinor * self.fock
    }

    pub fn index(&self, x: usize, s: usize, f: usize) -> usize {
        (x * self.spinor + s) * self.fock + f
    }

    pub fn split(&self, i: usize) -> (usize, usize, usize) {
        let f = i % self.fock;
        let rest = i / self.fock;
        (rest / self.spinor, rest % self.spinor, f)
    }
}

/// Sparse matrix known to be Hermitian, tagged with its tensor factor shape.
#[derive(Clone, Debug)]
pub struct SparseHermitian {
    pub matrix: SparseMatrix,
    pub shape: FactorShape,
}

impl SparseHermitian {
    pub fn new(matrix: SparseMatrix, shape: FactorShape) -> Result<Self> {
        if matrix.nrows() != shape.dim() || matrix.ncols() != shape.dim() {
            return Err(LabError::DimensionMismatch {
                expected: shape.dim(),
                found: matrix.nrows(),
            });
        }
        let defect = matrix.hermiticity_defect();
        let scale = matrix.max_abs().max(1.0);
        if defect > 1e-12 * scale {
            return Err(LabError::Precondition(format!(
                "matrix is not Hermitian: defect {defect:e}"
            )));
        }
        Ok(Self { matrix, shape })
    }

    pub fn dim(&self) -> usize {
        self.shape.dim()
    }
}

impl LinearOperator for SparseHermitian {
    fn dim(&self) -> usize {
        self.shape.dim()
    }

    fn apply(&self, x: &[C64], y: &mut [C64]) {
        self.matrix.mul_vec(x, y)
    }

    fn to_dense(&self) -> Mat<C64> {
        self.matrix.to_dense()
    }
}
