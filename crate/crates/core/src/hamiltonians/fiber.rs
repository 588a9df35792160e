//! Fiber operators at fixed total momentum on `C^4 ⊗ Fock`:
//! `D̂(P) = Σ_a α_a (P_a - dΓ(k_a) + A^{(a)}(0)) + β`.
//!
//! Only the first `axes` components carry `P_a - dΓ(k_a)`; the remaining
//! ones keep the field term alone, matching an electron confined to a
//! line or plane.

use faer::Mat;
use serde::{Deserialize, Serialize};

use super::models::DenseHermitian;
use super::split::{spectral_split, SplitBackend};
use super::{push_spin_embed, rows4};
use crate::electron::dirac_matrices;
use crate::error::{LabError, Result};
use crate::fock::FockBasis;
use crate::linalg::{hermitize, FactorShape, SparseHermitian, SparseMatrix, C64, ONE};
use crate::modes::{polarization_parity, ModeSet};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FiberKind {
    Pf,
    Np,
}

fn shape(fb: &FockBasis) -> FactorShape {
    FactorShape {
        electron: 1,
        spinor: 4,
        fock: fb.dim(),
    }
}

fn check(fb: &FockBasis, ms: &ModeSet, axes: usize) -> Result<()> {
    if fb.num_modes() != ms.len() {
        return Err(LabError::IncompatibleModes(format!(
            "Fock basis has {} modes, mode set has {}",
            fb.num_modes(),
            ms.len()
        )));
    }
    if axes > 3 {
        return Err(LabError::InvalidParameter(format!("axes = {axes} > 3")));
    }
    Ok(())
}

pub fn fiber_dirac(
    fb: &FockBasis,
    ms: &ModeSet,
    p: [f64; 3],
    axes: usize,
) -> Result<SparseHermitian> {
    check(fb, ms, axes)?;
    let alg = dirac_matrices();
    let nf = fb.dim();
    let gauge = ms.native_gauge();
    let mut t = Vec::new();
    for a in 0..3 {
        let field = fb.field_operator(&ms.field_coefficients([0.0; 3], a, gauge));
        let op = if a < axes {
            let ka: Vec<f64> = ms.modes.iter().map(|m| m.k[a]).collect();
            let kin: Vec<f64> = fb.dgamma_diagonal(&ka).iter().map(|v| p[a] - v).collect();
            field.add(&SparseMatrix::diagonal(&kin))
        } else {
            field
        };
        push_spin_embed(&mut t, &op, &rows4(&alg.alpha[a]), nf, ONE);
    }
    push_spin_embed(
        &mut t,
        &SparseMatrix::identity(nf),
        &rows4(&alg.beta),
        nf,
        ONE,
    );
    SparseHermitian::new(SparseMatrix::from_triplets(4 * nf, 4 * nf, t), shape(fb))
}

/// `pf`: `|D̂(P)| + H_f` on `C^4 ⊗ Fock`. `np`: `D̂(P) + H_f` compressed to
/// `Ran P̂+(P)`, whose shape is recorded as a single factor of that rank.
pub fn fiber_hamiltonian(
    fb: &FockBasis,
    ms: &ModeSet,
    p: [f64; 3],
    kind: FiberKind,
    axes: usize,
) -> Result<DenseHermitian> {
    let d = fiber_dirac(fb, ms, p, axes)?;
    let split = spectral_split(&d, SplitBackend::DenseEig)?;
    let omega: Vec<f64> = ms.modes.iter().map(|m| m.omega).collect();
    let hf = fb.dgamma_diagonal(&omega);
    let nf = fb.dim();
    let add_hf = |m: &mut Mat<C64>| {
        for i in 0..m.nrows() {
            m[(i, i)] += hf[i % nf];
        }
    };
    match kind {
        FiberKind::Pf => {
            let mut m = split.abs.clone();
            add_hf(&mut m);
            Ok(DenseHermitian {
                matrix: hermitize(&m),
                shape: shape(fb),
            })
        }
        FiberKind::Np => {
            let mut m = d.matrix.to_dense();
            add_hf(&mut m);
            let u = &split.basis_plus;
            let rank = u.ncols();
            Ok(DenseHermitian {
                matrix: hermitize(&(u.adjoint() * &m * u)),
                shape: FactorShape {
                    electron: 1,
                    spinor: 1,
                    fock: rank,
                },
            })
        }
    }
}

/// `W = β ⊗ U'` with `U' a_j U'^{-1} = -s_j a_{partner(j)}`, so that
/// `W D̂(P) W^{-1} = D̂(-P)` and `W H_f W^{-1} = H_f`.
pub fn fiber_parity_map(fb: &FockBasis, ms: &ModeSet) -> Result<SparseMatrix> {
    check(fb, ms, 0)?;
    let perm: Vec<usize> = ms.modes.iter().map(|m| m.partner).collect();
    for (j, m) in ms.modes.iter().enumerate() {
        let q = &ms.modes[m.partner];
        if q.partner != j || q.lambda != m.lambda {
            return Err(LabError::Precondition(
                "mode set not closed under k -> -k".into(),
            ));
        }
    }
    let signs: Vec<f64> = ms
        .modes
        .iter()
        .map(|m| -polarization_parity(m.lambda))
        .collect();
    let target = fb.mode_permutation(&perm);
    let nf = fb.dim();
    let mut t = Vec::new();
    for (i, &r) in target.iter().enumerate() {
        let phase: f64 = fb
            .state(i)
            .iter()
            .zip(&signs)
            .map(|(&n, s)| s.powi(n as i32))
            .product();
        for s in 0..4 {
            let b = if s < 2 { 1.0 } else { -1.0 };
            t.push((s * nf + r, s * nf + i, C64::new(b * phase, 0.0)));
        }
    }
    Ok(SparseMatrix::from_triplets(4 * nf, 4 * nf, t))
}
