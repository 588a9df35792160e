//! Pauli-Fierz gauge transformation `U = Π_a exp(i x_a A^{(a)}(0))`.
//!
//! With `β_j(x) = Σ_a x_a c_{j,a}` and `c_{j,a}` the coefficient of `a_j^*`
//! in `A^{(a)}(0)`, one has `U a_j U^* = a_j - i β_j`, hence
//! `U H_f U^* = H_f + Σ_j ω_j (i conj(β_j) a_j - i β_j a_j^* + |β_j|^2)`
//! and `U Π_a U^* = p_a + Ã^{(a)}(x) + s_a(x)` with `Ã` the field of the
//! gauge-shifted coupling and `s_a` a real c-number function of `x`. The
//! last two identities are exact on the untruncated Fock space and for the
//! continuum derivative; on a truncation they hold on low-occupation,
//! smooth, centered states.

use faer::Mat;

use super::{assemble_dirac, push_spin_embed, rows4, System};
use crate::electron::dirac_matrices;
use crate::error::{LabError, Result};
use crate::linalg::{
    hermitian_eigen, FactorShape, SparseHermitian, SparseMatrix, C64, I, ONE, ZERO,
};
use crate::modes::Gauge;

/// Residual above which a block exponential is rejected.
const UNITARITY_TOL: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct GaugeTransform {
    /// `U` on `grid ⊗ Fock`, block diagonal in `x`.
    pub unitary: SparseMatrix,
    /// `H̃_f` on `grid ⊗ Fock`, assembled term by term.
    pub transformed_field_energy: SparseMatrix,
    fock_dim: usize,
}

impl GaugeTransform {
    /// `U ⊗ 1` lifted to `grid ⊗ C^ns ⊗ Fock`.
    pub fn spinor_unitary(&self, ns: usize) -> SparseMatrix {
        let id: Vec<Vec<C64>> = (0..ns)
            .map(|s| (0..ns).map(|t| if s == t { ONE } else { ZERO }).collect())
            .collect();
        super::spin_embed(&self.unitary, &id, self.fock_dim)
    }

    /// `max |U^* U - 1|`.
    pub fn unitarity_residual(&self) -> f64 {
        let n = self.unitary.nrows();
        self.unitary
            .adjoint()
            .matmul(&self.unitary)
            .sub(&SparseMatrix::identity(n))
            .max_abs()
    }

    /// `U H U^*` for a dense operator on `grid ⊗ C^ns ⊗ Fock`.
    pub fn conjugate(&self, h: &Mat<C64>, ns: usize) -> Mat<C64> {
        let u = self.spinor_unitary(ns).to_dense();
        &u * h * u.adjoint()
    }
}

/// Coefficient vectors `c_{j,a}` of `A^{(a)}(0)` in the system's gauge.
fn origin_coefficients(sys: &System) -> Result<[Vec<C64>; 3]> {
    if sys.gauge == Gauge::PauliFierz {
        return Err(LabError::Precondition(
            "gauge transformation starts from an x-independent-modulus coupling".into(),
        ));
    }
    Ok(std::array::from_fn(|a| {
        sys.modes.field_coefficients([0.0; 3], a, sys.gauge)
    }))
}

fn beta(coeffs: &[Vec<C64>; 3], x: [f64; 3], j: usize) -> C64 {
    (0..3).map(|a| coeffs[a][j] * x[a]).sum()
}

pub fn gauge_transform(sys: &System) -> Result<GaugeTransform> {
    let coeffs = origin_coefficients(sys)?;
    let nf = sys.fock.dim();
    let eig: Vec<(Vec<f64>, Mat<C64>)> = coeffs
        .iter()
        .map(|c| hermitian_eigen(&sys.fock.field_operator(c).to_dense()))
        .collect::<Result<_>>()?;
    let mut t = Vec::new();
    let mut worst = 0.0f64;
    for x in 0..sys.electron.grid_dim() {
        let p = sys.electron.point(x);
        let mut u = Mat::<C64>::identity(nf, nf);
        for (a, (vals, vecs)) in eig.iter().enumerate() {
            if p[a] == 0.0 {
                continue;
            }
            let mut scaled = vecs.clone();
            for (c, lam) in vals.iter().enumerate() {
                let ph = C64::from_polar(1.0, p[a] * lam);
                for r in 0..nf {
                    scaled[(r, c)] *= ph;
                }
            }
            u = &u * (&scaled * vecs.adjoint());
        }
        let res = &u.adjoint() * &u - Mat::<C64>::identity(nf, nf);
        worst = worst.max(crate::linalg::max_abs(&res));
        let off = x * nf;
        for r in 0..nf {
            for c in 0..nf {
                let v = u[(r, c)];
                if v != ZERO {
                    t.push((off + r, off + c, v));
                }
            }
        }
    }
    if worst > UNITARITY_TOL {
        return Err(LabError::ExpNotConverged(worst));
    }
    let n = sys.scalar_dim();
    Ok(GaugeTransform {
        unitary: SparseMatrix::from_triplets(n, n, t),
        transformed_field_energy: transformed_field_energy(sys)?,
        fock_dim: nf,
    })
}

/// `H̃_f` on `grid ⊗ Fock` from its defining terms.
pub fn transformed_field_energy(sys: &System) -> Result<SparseMatrix> {
    let coeffs = origin_coefficients(sys)?;
    let nf = sys.fock.dim();
    let omega = sys.dispersion();
    let hf = sys.fock.dgamma_diagonal(&omega);
    let entries: Vec<_> = (0..sys.modes.len())
        .map(|j| sys.fock.annihilation_entries(j))
        .collect();
    let mut t = Vec::new();
    for x in 0..sys.electron.grid_dim() {
        let p = sys.electron.point(x);
        let off = x * nf;
        let mut shift = 0.0;
        for (j, w) in omega.iter().enumerate() {
            let b = beta(&coeffs, p, j);
            shift += w * b.norm_sqr();
            if b == ZERO {
                continue;
            }
            for &(r, c, v) in &entries[j] {
                // i conj(β) a_j and its adjoint -i β a_j^*
                t.push((off + r, off + c, I * b.conj() * (w * v)));
                t.push((off + c, off + r, -I * b * (w * v)));
            }
        }
        for (f, e) in hf.iter().enumerate() {
            t.push((off + f, off + f, C64::new(e + shift, 0.0)));
        }
    }
    let n = sys.scalar_dim();
    Ok(SparseMatrix::from_triplets(n, n, t))
}

/// `s_a(x) = Σ_j 2 Im(conj(g_{j,a}(x)) β_j(x))`, the c-number left over by
/// conjugating `A^{(a)}(x)` with `U`.
pub fn field_shift(sys: &System, a: usize) -> Result<Vec<f64>> {
    let coeffs = origin_coefficients(sys)?;
    Ok((0..sys.electron.grid_dim())
        .map(|x| {
            let p = sys.electron.point(x);
            let g = sys.field_coefficients(x, a, sys.gauge);
            (0..sys.modes.len())
                .map(|j| 2.0 * (g[j].conj() * beta(&coeffs, p, j)).im)
                .sum()
        })
        .collect())
}

/// `Σ_a α_a (p_a + Ã^{(a)}(x) + s_a(x)) + β`, the Dirac operator expected
/// from conjugating `D_A` with `U`, assembled directly. On a grid with
/// `d < 3` the components `a >= d` keep `A^{(a)}(0)`, since `U` only
/// involves the coordinates the grid carries.
pub fn transformed_dirac(sys: &System) -> Result<SparseHermitian> {
    let shifted = System::with_gauge(
        sys.electron.clone(),
        sys.fock.clone(),
        sys.modes.clone(),
        Gauge::PauliFierz,
    )?;
    let base = assemble_dirac(&shifted)?;
    let alg = dirac_matrices();
    let nf = sys.fock.dim();
    let mut t: Vec<(usize, usize, C64)> = base.matrix.triplets().collect();
    let coeffs = origin_coefficients(sys)?;
    for a in 0..3 {
        let s = field_shift(sys, a)?;
        let diag: Vec<f64> = (0..sys.scalar_dim()).map(|i| s[i / nf]).collect();
        let mut op = SparseMatrix::diagonal(&diag);
        if a >= sys.electron.d() {
            // U does not depend on x_a, so A^{(a)}(0) is not removed
            let origin = sys.fock.field_operator(&coeffs[a]);
            op = op.add(&SparseMatrix::identity(sys.electron.grid_dim()).kron(&origin));
        }
        push_spin_embed(&mut t, &op, &rows4(&alg.alpha[a]), nf, ONE);
    }
    let n = sys.dim();
    SparseHermitian::new(
        SparseMatrix::from_triplets(n, n, t),
        FactorShape {
            electron: sys.electron.grid_dim(),
            spinor: 4,
            fock: nf,
        },
    )
}
