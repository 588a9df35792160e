//! Complex linear algebra shared by all operator assemblies: a matrix-free
//! operator trait, CSR sparse matrices, dense Hermitian eigendecomposition and
//! Chebyshev matrix functions.

mod chebyshev;
mod sparse;

pub use chebyshev::ChebyshevFunction;
pub use sparse::{FactorShape, SparseHermitian, SparseMatrix};

use faer::{Mat, Side};
use rand::Rng;

use crate::error::{LabError, Result};

pub use num_complex::Complex64 as C64;

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };
pub const I: C64 = C64 { re: 0.0, im: 1.0 };

/// A linear map on `C^dim`, applied without materializing a matrix.
pub trait LinearOperator: Sync {
    fn dim(&self) -> usize;

    /// `y <- A x`. `y` is overwritten.
    fn apply(&self, x: &[C64], y: &mut [C64]);

    /// Dense matrix obtained by applying the operator to unit vectors.
    fn to_dense(&self) -> Mat<C64> {
        let n = self.dim();
        let mut out = Mat::<C64>::zeros(n, n);
        let mut e = vec![ZERO; n];
        let mut col = vec![ZERO; n];
        for j in 0..n {
            e[j] = ONE;
            self.apply(&e, &mut col);
            for (i, v) in col.iter().enumerate() {
                out[(i, j)] = *v;
            }
            e[j] = ZERO;
        }
        out
    }
}

impl LinearOperator for Mat<C64> {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply(&self, x: &[C64], y: &mut [C64]) {
        y.iter_mut().for_each(|v| *v = ZERO);
        for j in 0..self.ncols() {
            let xj = x[j];
            if xj == ZERO {
                continue;
            }
            let col = self.col(j);
            for (i, yi) in y.iter_mut().enumerate() {
                *yi += col[i] * xj;
            }
        }
    }

    fn to_dense(&self) -> Mat<C64> {
        self.clone()
    }
}

/// Sum of a base operator and a real diagonal.
pub struct ShiftedDiagonal<'a, O: LinearOperator> {
    pub base: &'a O,
    pub diagonal: &'a [f64],
}

impl<O: LinearOperator> LinearOperator for ShiftedDiagonal<'_, O> {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn apply(&self, x: &[C64], y: &mut [C64]) {
        self.base.apply(x, y);
        for ((yi, xi), d) in y.iter_mut().zip(x).zip(self.diagonal) {
            *yi += xi * d;
        }
    }
}

/// Hermitian inner product `<a, b>`, antilinear in `a`.
pub fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm(a: &[C64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// `y <- y + alpha x`
pub fn axpy(alpha: C64, x: &[C64], y: &mut [C64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn normalize(a: &mut [C64]) -> f64 {
    let n = norm(a);
    if n > 0.0 {
        a.iter_mut().for_each(|v| *v /= n);
    }
    n
}

pub fn random_vector<R: Rng>(dim: usize, rng: &mut R) -> Vec<C64> {
    (0..dim)
        .map(|_| C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
        .collect()
}

/// Eigendecomposition of a Hermitian matrix; eigenvalues ascending.
pub fn hermitian_eigen(m: &Mat<C64>) -> Result<(Vec<f64>, Mat<C64>)> {
    let evd = m
        .self_adjoint_eigen(Side::Lower)
        .map_err(|_| LabError::Eigendecomposition)?;
    let vals = (0..m.nrows()).map(|i| evd.S()[i].re).collect();
    Ok((vals, evd.U().to_owned()))
}

pub fn hermitian_eigenvalues(m: &Mat<C64>) -> Result<Vec<f64>> {
    m.self_adjoint_eigenvalues(Side::Lower)
        .map_err(|_| LabError::Eigendecomposition)
}

/// `U f(Lambda) U^*` for a real function applied to the spectrum.
pub fn spectral_function(vals: &[f64], vecs: &Mat<C64>, f: impl Fn(f64) -> f64) -> Mat<C64> {
    let n = vecs.nrows();
    let scaled = Mat::<C64>::from_fn(n, vals.len(), |i, j| vecs[(i, j)] * f(vals[j]));
    &scaled * vecs.adjoint()
}

/// Largest entry modulus of a dense matrix.
pub fn max_abs(m: &Mat<C64>) -> f64 {
    let mut best = 0.0f64;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            best = best.max(m[(i, j)].norm());
        }
    }
    best
}

/// Largest entry modulus of `a - b`.
pub fn max_abs_diff(a: &Mat<C64>, b: &Mat<C64>) -> f64 {
    max_abs(&(a - b))
}

/// Frobenius norm of a dense matrix.
pub fn frobenius(m: &Mat<C64>) -> f64 {
    let mut s = 0.0;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            s += m[(i, j)].norm_sqr();
        }
    }
    s.sqrt()
}

/// `(M + M^*) / 2`, used to wash out roundoff asymmetry before a Hermitian solve.
pub fn hermitize(m: &Mat<C64>) -> Mat<C64> {
    let half = C64::new(0.5, 0.0);
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| {
        (m[(i, j)] + m[(j, i)].conj()) * half
    })
}
