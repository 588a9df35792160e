//! Coupled operators on `grid ⊗ C^4 ⊗ Fock`: the minimally coupled Dirac
//! operator, its spectral split, the Pauli-Fierz and no-pair Hamiltonians,
//! the Brown-Ravenhall operator, fiber Hamiltonians, the Pauli-Fierz gauge
//! transformation and the Kramers involution.
//!
//! Basis index order is `(x, spinor, fock)` with the Fock index fastest, as
//! recorded in [`FactorShape`]. Operators on `grid ⊗ Fock` (no spinor
//! factor) use the same order with the spinor slot removed.

mod fiber;
mod gauge;
mod kramers;
mod models;
mod split;

pub use fiber::{fiber_dirac, fiber_hamiltonian, fiber_parity_map, FiberKind};
pub use gauge::{
    field_shift, gauge_transform, transformed_dirac, transformed_field_energy, GaugeTransform,
};
pub use kramers::{kramers_involution, plus_minus_map, AntiUnitary};
pub use models::{
    assemble_no_pair, assemble_pauli_fierz, brown_ravenhall, BrownRavenhall, DenseHermitian,
    NoPair, NoPairOperator, PauliFierzOperator,
};
pub use split::{
    abs_floor, multishift_cg, spectral_split, squared_gap, AbsOperator, SignOperator,
    SpectralSplit, SplitBackend, SplitDiagnostics, GAP_BOUND,
};

use crate::electron::{dirac_matrices, pauli, DiracAlgebra, ElectronBasis, PotentialSpec};
use crate::error::{LabError, Result};
use crate::fock::FockBasis;
use crate::linalg::{FactorShape, SparseHermitian, SparseMatrix, C64, I, ONE, ZERO};
use crate::modes::{Gauge, ModeSet};

/// Electron grid, truncated Fock space and photon modes of one truncation.
#[derive(Clone, Debug)]
pub struct System {
    pub electron: ElectronBasis,
    pub fock: FockBasis,
    pub modes: ModeSet,
    /// Coupling function used for the field `A(x)`.
    pub gauge: Gauge,
}

impl System {
    /// Couples with the native gauge of the mode set.
    pub fn new(electron: ElectronBasis, fock: FockBasis, modes: ModeSet) -> Result<Self> {
        let gauge = modes.native_gauge();
        Self::with_gauge(electron, fock, modes, gauge)
    }

    pub fn with_gauge(
        electron: ElectronBasis,
        fock: FockBasis,
        modes: ModeSet,
        gauge: Gauge,
    ) -> Result<Self> {
        if fock.num_modes() != modes.len() {
            return Err(LabError::IncompatibleModes(format!(
                "Fock basis has {} modes, mode set has {}",
                fock.num_modes(),
                modes.len()
            )));
        }
        Ok(Self {
            electron,
            fock,
            modes,
            gauge,
        })
    }

    pub fn shape(&self) -> FactorShape {
        FactorShape {
            electron: self.electron.grid_dim(),
            spinor: 4,
            fock: self.fock.dim(),
        }
    }

    pub fn dim(&self) -> usize {
        self.shape().dim()
    }

    /// Dimension of `grid ⊗ Fock`.
    pub fn scalar_dim(&self) -> usize {
        self.electron.grid_dim() * self.fock.dim()
    }

    /// Field coefficients of component `a` at grid point `x`. Points on the
    /// face `x_b = -L/2` are their own mirror image; there the coupling is
    /// averaged over the periodic images `x_b = ±L/2`, which keeps
    /// `A(-x) = conj(A(x))` exact on the grid.
    pub fn field_coefficients(&self, x: usize, a: usize, gauge: Gauge) -> Vec<C64> {
        let p = self.electron.point(x);
        let ax = self.electron.axes(x);
        let faces: Vec<usize> = (0..self.electron.d()).filter(|&b| ax[b] == 0).collect();
        if faces.is_empty() {
            return self.modes.field_coefficients(p, a, gauge);
        }
        let images = 1usize << faces.len();
        let mut acc = vec![ZERO; self.modes.len()];
        for mask in 0..images {
            let mut q = p;
            for (bit, &b) in faces.iter().enumerate() {
                if mask >> bit & 1 == 1 {
                    q[b] += self.electron.box_len();
                }
            }
            for (s, c) in acc
                .iter_mut()
                .zip(self.modes.field_coefficients(q, a, gauge))
            {
                *s += c;
            }
        }
        acc.iter().map(|c| c / images as f64).collect()
    }

    /// `A^{(a)}(x)` on `grid ⊗ Fock`, block diagonal in `x`.
    pub fn field_component(&self, a: usize) -> SparseMatrix {
        let nf = self.fock.dim();
        let entries: Vec<Vec<(usize, usize, f64)>> = (0..self.modes.len())
            .map(|j| self.fock.annihilation_entries(j))
            .collect();
        let mut t = Vec::new();
        for x in 0..self.electron.grid_dim() {
            let c = self.field_coefficients(x, a, self.gauge);
            let off = x * nf;
            for (j, cj) in c.iter().enumerate() {
                if *cj == ZERO {
                    continue;
                }
                for &(r, col, v) in &entries[j] {
                    t.push((off + r, off + col, cj.conj() * v));
                    t.push((off + col, off + r, cj * v));
                }
            }
        }
        SparseMatrix::from_triplets(self.scalar_dim(), self.scalar_dim(), t)
    }

    /// `p_a ⊗ 1` on `grid ⊗ Fock`; zero for axes the grid does not carry.
    pub fn grid_momentum(&self, a: usize) -> SparseMatrix {
        let nf = self.fock.dim();
        if a < self.electron.d() {
            self.electron
                .momentum_operator(a)
                .kron(&SparseMatrix::identity(nf))
        } else {
            SparseMatrix::zeros(self.scalar_dim(), self.scalar_dim())
        }
    }

    /// Kinetic momenta `Π_a = p_a + A^{(a)}(x)` on `grid ⊗ Fock`.
    pub fn kinetic_momenta(&self) -> [SparseMatrix; 3] {
        std::array::from_fn(|a| self.grid_momentum(a).add(&self.field_component(a)))
    }

    /// Dispersion weights used in `H_f = dΓ(ω)`.
    pub fn dispersion(&self) -> Vec<f64> {
        self.modes.modes.iter().map(|m| m.omega).collect()
    }

    /// Diagonal of `1 ⊗ 1 ⊗ H_f` on the full space.
    pub fn field_energy_diagonal(&self) -> Vec<f64> {
        let hf = self.fock.dgamma_diagonal(&self.dispersion());
        (0..self.dim()).map(|i| hf[i % hf.len()]).collect()
    }

    /// Diagonal of `V ⊗ 1 ⊗ 1` on the full space.
    pub fn potential_diagonal(&self, v: &PotentialSpec) -> Result<Vec<f64>> {
        let vals = v.values(&self.electron)?;
        let per_x = 4 * self.fock.dim();
        Ok((0..self.dim()).map(|i| vals[i / per_x]).collect())
    }

    /// Largest `|V(x) - V(-x)|` and whether the mode set is closed under
    /// `k -> -k`.
    pub fn parity_defects(&self, v: &PotentialSpec) -> Result<(f64, bool)> {
        let asym = v.asymmetry(&self.electron)?;
        let closed = self.modes.modes.iter().enumerate().all(|(j, m)| {
            let p = &self.modes.modes[m.partner];
            p.partner == j && p.lambda == m.lambda && (0..3).all(|i| p.k[i] == -m.k[i])
        });
        Ok((asym, closed))
    }
}

/// Embeds an operator on `grid ⊗ Fock` into `grid ⊗ C^ns ⊗ Fock` through the
/// `ns x ns` spinor matrix `spin`.
pub fn spin_embed(op: &SparseMatrix, spin: &[Vec<C64>], nf: usize) -> SparseMatrix {
    let ns = spin.len();
    let mut t = Vec::new();
    push_spin_embed(&mut t, op, spin, nf, ONE);
    let n = op.nrows() / nf * ns * nf;
    SparseMatrix::from_triplets(n, n, t)
}

fn push_spin_embed(
    t: &mut Vec<(usize, usize, C64)>,
    op: &SparseMatrix,
    spin: &[Vec<C64>],
    nf: usize,
    scale: C64,
) {
    let ns = spin.len();
    for (r, c, v) in op.triplets() {
        let (xr, fr) = (r / nf, r % nf);
        let (xc, fc) = (c / nf, c % nf);
        for (s, row) in spin.iter().enumerate() {
            for (s2, w) in row.iter().enumerate() {
                if *w != ZERO {
                    t.push((
                        (xr * ns + s) * nf + fr,
                        (xc * ns + s2) * nf + fc,
                        v * w * scale,
                    ));
                }
            }
        }
    }
}

fn rows4(m: &[[C64; 4]; 4]) -> Vec<Vec<C64>> {
    m.iter().map(|r| r.to_vec()).collect()
}

fn rows2(m: &[[C64; 2]; 2]) -> Vec<Vec<C64>> {
    m.iter().map(|r| r.to_vec()).collect()
}

/// `D_A = Σ_a α_a ⊗ Π_a + β ⊗ 1`.
pub fn assemble_dirac(sys: &System) -> Result<SparseHermitian> {
    let alg = dirac_matrices();
    let nf = sys.fock.dim();
    let pis = sys.kinetic_momenta();
    let mut t = Vec::new();
    for (a, pi) in pis.iter().enumerate() {
        push_spin_embed(&mut t, pi, &rows4(&alg.alpha[a]), nf, ONE);
    }
    let id = SparseMatrix::identity(sys.scalar_dim());
    push_spin_embed(&mut t, &id, &rows4(&alg.beta), nf, ONE);
    let n = sys.dim();
    SparseHermitian::new(SparseMatrix::from_triplets(n, n, t), sys.shape())
}

/// The Pauli operator `T_A = (σ·Π)^2 + 1` on `grid ⊗ C^2 ⊗ Fock`, assembled
/// as `Σ_a Π_a Π_a + i Σ_c σ_c [Π_{c+1}, Π_{c+2}] + 1`.
pub fn assemble_pauli_operator(sys: &System) -> SparseMatrix {
    let nf = sys.fock.dim();
    let pis = sys.kinetic_momenta();
    let sig = pauli();
    let id2 = vec![vec![ONE, ZERO], vec![ZERO, ONE]];
    let mut t = Vec::new();
    let mut scalar = SparseMatrix::identity(sys.scalar_dim());
    for pi in &pis {
        scalar = scalar.add(&pi.matmul(pi));
    }
    push_spin_embed(&mut t, &scalar, &id2, nf, ONE);
    for c in 0..3 {
        let (a, b) = ((c + 1) % 3, (c + 2) % 3);
        let comm = pis[a].matmul(&pis[b]).sub(&pis[b].matmul(&pis[a]));
        push_spin_embed(&mut t, &comm, &rows2(&sig[c]), nf, I);
    }
    let n = 2 * sys.scalar_dim();
    SparseMatrix::from_triplets(n, n, t)
}

/// `τ_A = Σ_a Π_a Π_a` on `grid ⊗ Fock` (no spin term, no mass).
pub fn assemble_tau(sys: &System) -> SparseMatrix {
    let pis = sys.kinetic_momenta();
    let mut acc = SparseMatrix::zeros(sys.scalar_dim(), sys.scalar_dim());
    for pi in &pis {
        acc = acc.add(&pi.matmul(pi));
    }
    acc
}

/// Relative deviation between `D_A^2` (computed by squaring) and the direct
/// sum `T_A ⊕ T_A`, as max-entry norm of the difference over that of `D_A^2`.
pub fn block_identity_residual(sys: &System) -> Result<f64> {
    let d = assemble_dirac(sys)?;
    let d2 = d.matrix.matmul(&d.matrix);
    let ta = assemble_pauli_operator(sys);
    let nf = sys.fock.dim();
    // T_A ⊕ T_A: spinor block diag(T, T) with T on upper and lower pairs
    let mut t = Vec::new();
    for (r, c, v) in ta.triplets() {
        let (xr, rest_r) = (r / (2 * nf), r % (2 * nf));
        let (xc, rest_c) = (c / (2 * nf), c % (2 * nf));
        let (sr, fr) = (rest_r / nf, rest_r % nf);
        let (sc, fc) = (rest_c / nf, rest_c % nf);
        for off in [0, 2] {
            t.push((
                (xr * 4 + sr + off) * nf + fr,
                (xc * 4 + sc + off) * nf + fc,
                v,
            ));
        }
    }
    let n = sys.dim();
    let direct = SparseMatrix::from_triplets(n, n, t);
    let diff = d2.sub(&direct).max_abs();
    Ok(diff / d2.max_abs().max(f64::MIN_POSITIVE))
}

/// Part of a state on `grid ⊗ C^4 ⊗ Fock` in the vacuum sector, and the
/// free Dirac operator compressed there: `<Ω| D_A |Ω> = D_0`.
pub fn vacuum_compression(sys: &System, d: &SparseMatrix) -> SparseMatrix {
    let nf = sys.fock.dim();
    let keep: Vec<usize> = (0..sys.dim()).filter(|i| i % nf == 0).collect();
    let mut pos = vec![usize::MAX; sys.dim()];
    for (k, &i) in keep.iter().enumerate() {
        pos[i] = k;
    }
    let t = d
        .triplets()
        .filter(|(r, c, _)| pos[*r] != usize::MAX && pos[*c] != usize::MAX)
        .map(|(r, c, v)| (pos[r], pos[c], v))
        .collect();
    SparseMatrix::from_triplets(keep.len(), keep.len(), t)
}

/// Largest entry of `α_a` anticommutators minus `2 δ`: re-exported for the
/// verification suite.
pub fn clifford_residual() -> f64 {
    DiracAlgebra::clifford_residual(&dirac_matrices())
}
