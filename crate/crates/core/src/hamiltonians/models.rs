//! Pauli-Fierz, no-pair and Brown-Ravenhall operators.

use faer::Mat;

use super::split::{SignOperator, SpectralSplit};
use super::{AbsOperator, System};
use crate::electron::{pauli, ElectronBasis, PotentialSpec};
use crate::error::{LabError, Result};
use crate::linalg::{hermitize, FactorShape, LinearOperator, SparseHermitian, C64, ZERO};

/// Dense Hermitian matrix tagged with its tensor shape.
#[derive(Clone, Debug)]
pub struct DenseHermitian {
    pub matrix: Mat<C64>,
    pub shape: FactorShape,
}

impl LinearOperator for DenseHermitian {
    fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    fn apply(&self, x: &[C64], y: &mut [C64]) {
        self.matrix.apply(x, y)
    }

    fn to_dense(&self) -> Mat<C64> {
        self.matrix.clone()
    }
}

fn add_diagonal(m: &mut Mat<C64>, diag: &[f64]) {
    for (i, d) in diag.iter().enumerate() {
        m[(i, i)] += d;
    }
}

/// `H^PF_V = |D_A| + V + H_f` from a dense split of `D_A`.
pub fn assemble_pauli_fierz(
    sys: &System,
    v: &PotentialSpec,
    split: &SpectralSplit,
) -> Result<DenseHermitian> {
    if split.abs.nrows() != sys.dim() {
        return Err(LabError::DimensionMismatch {
            expected: sys.dim(),
            found: split.abs.nrows(),
        });
    }
    let mut m = split.abs.clone();
    add_diagonal(&mut m, &sys.potential_diagonal(v)?);
    add_diagonal(&mut m, &sys.field_energy_diagonal());
    Ok(DenseHermitian {
        matrix: hermitize(&m),
        shape: sys.shape(),
    })
}

/// Matrix-free `|D_A| + V + H_f` with `|D_A|` from a Chebyshev expansion.
pub struct PauliFierzOperator<'a> {
    abs: AbsOperator<'a>,
    diagonal: Vec<f64>,
}

impl<'a> PauliFierzOperator<'a> {
    pub fn new(sys: &System, d: &'a SparseHermitian, v: &PotentialSpec, tol: f64) -> Result<Self> {
        let bound = d.matrix.row_sum_bound();
        let mut diagonal = sys.potential_diagonal(v)?;
        for (a, b) in diagonal.iter_mut().zip(sys.field_energy_diagonal()) {
            *a += b;
        }
        Ok(Self {
            abs: AbsOperator::new(&d.matrix, bound, tol),
            diagonal,
        })
    }
}

impl LinearOperator for PauliFierzOperator<'_> {
    fn dim(&self) -> usize {
        self.diagonal.len()
    }

    fn apply(&self, x: &[C64], y: &mut [C64]) {
        self.abs.apply(x, y);
        for ((yi, xi), d) in y.iter_mut().zip(x).zip(&self.diagonal) {
            *yi += xi * d;
        }
    }
}

/// The no-pair operator compressed to `Ran P+`, its negative-space companion
/// on `Ran P-`, and their direct sum on the full space.
#[derive(Clone, Debug)]
pub struct NoPair {
    /// `U+^* (D_A + V + H_f) U+`
    pub h_plus: Mat<C64>,
    /// `U-^* (|D_A| + H_f) U-`
    pub h_minus: Mat<C64>,
    pub h_hat: DenseHermitian,
    pub basis_plus: Mat<C64>,
    pub basis_minus: Mat<C64>,
}

pub fn assemble_no_pair(
    sys: &System,
    d: &SparseHermitian,
    v: &PotentialSpec,
    split: &SpectralSplit,
) -> Result<NoPair> {
    let n = sys.dim();
    let (up, um) = (&split.basis_plus, &split.basis_minus);
    if up.ncols() + um.ncols() != n {
        return Err(LabError::RankDeficiency {
            found: up.ncols() + um.ncols(),
            dim: n,
        });
    }
    let hf = sys.field_energy_diagonal();
    let mut h = d.matrix.to_dense();
    add_diagonal(&mut h, &sys.potential_diagonal(v)?);
    add_diagonal(&mut h, &hf);
    let mut k = split.abs.clone();
    add_diagonal(&mut k, &hf);
    let h_plus = hermitize(&(up.adjoint() * &h * up));
    let h_minus = hermitize(&(um.adjoint() * &k * um));
    let full = up * &h_plus * up.adjoint() + um * &h_minus * um.adjoint();
    Ok(NoPair {
        h_plus,
        h_minus,
        h_hat: DenseHermitian {
            matrix: hermitize(&full),
            shape: sys.shape(),
        },
        basis_plus: up.clone(),
        basis_minus: um.clone(),
    })
}

/// Matrix-free `P+ (D_A + V + H_f) P+ + c P-`. With `c` above the energies of
/// interest, the low spectrum is that of the no-pair operator on `Ran P+`.
pub struct NoPairOperator<'a> {
    d: &'a SparseHermitian,
    sign: SignOperator<'a>,
    diagonal: Vec<f64>,
    shift: f64,
}

impl<'a> NoPairOperator<'a> {
    pub fn new(
        sys: &System,
        d: &'a SparseHermitian,
        v: &PotentialSpec,
        shift: f64,
        tol: f64,
    ) -> Result<Self> {
        let bound = d.matrix.row_sum_bound();
        let mut diagonal = sys.potential_diagonal(v)?;
        for (a, b) in diagonal.iter_mut().zip(sys.field_energy_diagonal()) {
            *a += b;
        }
        Ok(Self {
            d,
            sign: SignOperator::new(&d.matrix, bound, tol),
            diagonal,
            shift,
        })
    }

    fn project(&self, x: &[C64], plus: &mut [C64], minus: &mut [C64]) {
        self.sign.apply(x, plus);
        for i in 0..x.len() {
            let s = plus[i];
            plus[i] = (x[i] + s) * 0.5;
            minus[i] = (x[i] - s) * 0.5;
        }
    }
}

impl LinearOperator for NoPairOperator<'_> {
    fn dim(&self) -> usize {
        self.diagonal.len()
    }

    fn apply(&self, x: &[C64], y: &mut [C64]) {
        let n = x.len();
        let mut plus = vec![ZERO; n];
        let mut minus = vec![ZERO; n];
        self.project(x, &mut plus, &mut minus);
        let mut h = vec![ZERO; n];
        self.d.apply(&plus, &mut h);
        for i in 0..n {
            h[i] += plus[i] * self.diagonal[i];
        }
        let mut hp = vec![ZERO; n];
        let mut hm = vec![ZERO; n];
        self.project(&h, &mut hp, &mut hm);
        for i in 0..n {
            y[i] = hp[i] + minus[i] * self.shift;
        }
    }
}

/// Electronic Brown-Ravenhall operator `Λ+ (D_0 + V) Λ+` on `Ran Λ+`, in
/// momentum space. At each momentum `Ran Λ+(p)` is spanned by
/// `u_s(p) = N (χ_s, σ·p χ_s / (E + 1))` with `N = ((E + 1) / 2E)^{1/2}`, so
/// states carry two components per momentum and the kinetic part is `E(p)`.
pub struct BrownRavenhall {
    basis: ElectronBasis,
    energy: Vec<f64>,
    spinors: Vec<[[C64; 4]; 2]>,
    potential: Vec<f64>,
}

impl BrownRavenhall {
    pub fn new(eb: &ElectronBasis, v: &PotentialSpec) -> Result<Self> {
        let sig = pauli();
        let n = eb.grid_dim();
        let mut energy = Vec::with_capacity(n);
        let mut spinors = Vec::with_capacity(n);
        for i in 0..n {
            let p = eb.momentum(i);
            let e = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2] + 1.0).sqrt();
            let norm = ((e + 1.0) / (2.0 * e)).sqrt();
            let mut u = [[ZERO; 4]; 2];
            for (s, us) in u.iter_mut().enumerate() {
                us[s] = C64::new(norm, 0.0);
                for r in 0..2 {
                    let mut sp = ZERO;
                    for a in 0..3 {
                        sp += sig[a][r][s] * p[a];
                    }
                    us[2 + r] = sp * (norm / (e + 1.0));
                }
            }
            energy.push(e);
            spinors.push(u);
        }
        Ok(Self {
            basis: eb.clone(),
            energy,
            spinors,
            potential: v.values(eb)?,
        })
    }

    /// `B_γ` with the Coulomb potential `-γ / |x|` regularized at `h/2`.
    pub fn coulomb(eb: &ElectronBasis, gamma: f64) -> Result<Self> {
        Self::new(eb, &PotentialSpec::Coulomb { gamma })
    }

    /// The 4-spinor field `Σ_s u_s(p) φ_s(p)` of a two-component state.
    pub fn spinor_field(&self, phi: &[C64]) -> Vec<[C64; 4]> {
        (0..self.energy.len())
            .map(|q| {
                let mut out = [ZERO; 4];
                for s in 0..2 {
                    for c in 0..4 {
                        out[c] += self.spinors[q][s][c] * phi[2 * q + s];
                    }
                }
                out
            })
            .collect()
    }

    pub fn basis(&self) -> &ElectronBasis {
        &self.basis
    }
}

impl LinearOperator for BrownRavenhall {
    fn dim(&self) -> usize {
        2 * self.energy.len()
    }

    fn apply(&self, x: &[C64], y: &mut [C64]) {
        let n = self.energy.len();
        let psi = self.spinor_field(x);
        let mut vpsi = vec![[ZERO; 4]; n];
        let mut line = vec![ZERO; n];
        for c in 0..4 {
            for q in 0..n {
                line[q] = psi[q][c];
            }
            self.basis.fourier(&mut line, true);
            for (l, v) in line.iter_mut().zip(&self.potential) {
                *l *= v;
            }
            self.basis.fourier(&mut line, false);
            for q in 0..n {
                vpsi[q][c] = line[q];
            }
        }
        for q in 0..n {
            for s in 0..2 {
                let mut acc = x[2 * q + s] * self.energy[q];
                for c in 0..4 {
                    acc += self.spinors[q][s][c].conj() * vpsi[q][c];
                }
                y[2 * q + s] = acc;
            }
        }
    }
}

/// Dense Brown-Ravenhall matrix; convenience for small grids.
pub fn brown_ravenhall(eb: &ElectronBasis, gamma: f64) -> Result<SparseHermitian> {
    let br = BrownRavenhall::coulomb(eb, gamma)?;
    let m = crate::linalg::SparseMatrix::from_dense(&hermitize(&br.to_dense()), 0.0);
    SparseHermitian::new(
        m,
        FactorShape {
            electron: eb.grid_dim(),
            spinor: 2,
            fock: 1,
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::FockBasis;
    use crate::hamiltonians::{assemble_dirac, spectral_split, SplitBackend};
    use crate::linalg::hermitian_eigenvalues;
    use crate::modes::ModeSet;
    use crate::spectral::lowest_eigenpairs;

    /// `D_0 = α·p + β` at one momentum.
    fn free_dirac_symbol(p: [f64; 3]) -> [[C64; 4]; 4] {
        let alg = crate::electron::dirac_matrices();
        let mut m = alg.beta;
        for a in 0..3 {
            for r in 0..4 {
                for c in 0..4 {
                    m[r][c] += alg.alpha[a][r][c] * p[a];
                }
            }
        }
        m
    }

    fn system(d: usize, n: usize, charge: f64, n_max: usize, modes: usize) -> System {
        let eb = ElectronBasis::new(d, 10.0, n).unwrap();
        let ms = ModeSet::build(0.5, 1.0, 0.4, charge)
            .unwrap()
            .lowest(modes)
            .unwrap();
        let fb = FockBasis::new(ms.len(), n_max).unwrap();
        System::new(eb, fb, ms).unwrap()
    }

    #[test]
    fn spinors_diagonalize_free_dirac() {
        let eb = ElectronBasis::new(3, 5.0, 4).unwrap();
        let br = BrownRavenhall::new(&eb, &PotentialSpec::None).unwrap();
        for q in 0..eb.grid_dim() {
            let m = free_dirac_symbol(eb.momentum(q));
            for s in 0..2 {
                let u = br.spinors[q][s];
                for r in 0..4 {
                    let mut v = ZERO;
                    for c in 0..4 {
                        v += m[r][c] * u[c];
                    }
                    assert!((v - u[r] * br.energy[q]).norm() < 1e-12);
                }
                for t in 0..2 {
                    let g: C64 = (0..4).map(|c| br.spinors[q][t][c].conj() * u[c]).sum();
                    let want = if s == t { 1.0 } else { 0.0 };
                    assert!((g - want).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn free_pauli_fierz_ground_is_one() {
        let sys = system(1, 8, 0.0, 0, 2);
        let d = assemble_dirac(&sys).unwrap();
        let split = spectral_split(&d, SplitBackend::DenseEig).unwrap();
        let h = assemble_pauli_fierz(&sys, &PotentialSpec::None, &split).unwrap();
        let r = lowest_eigenpairs(&h, 1, 1e-10).unwrap();
        assert!((r.ground() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn pauli_fierz_positive_and_monotone_in_confinement() {
        let sys = system(1, 8, 0.9, 1, 4);
        let d = assemble_dirac(&sys).unwrap();
        let split = spectral_split(&d, SplitBackend::DenseEig).unwrap();
        let e0 = lowest_eigenpairs(
            &assemble_pauli_fierz(&sys, &PotentialSpec::None, &split).unwrap(),
            1,
            1e-9,
        )
        .unwrap()
        .ground();
        assert!(e0 >= 1.0 - 1e-9);
        let mut last = e0;
        for c in [0.01, 0.05, 0.2] {
            let e = lowest_eigenpairs(
                &assemble_pauli_fierz(&sys, &PotentialSpec::Harmonic { c }, &split).unwrap(),
                1,
                1e-9,
            )
            .unwrap()
            .ground();
            assert!(e > last);
            last = e;
        }
    }

    #[test]
    fn matrix_free_operators_match_dense() {
        let sys = system(1, 8, 0.9, 1, 4);
        let d = assemble_dirac(&sys).unwrap();
        let split = spectral_split(&d, SplitBackend::DenseEig).unwrap();
        let v = PotentialSpec::SoftCoulomb { gamma: 0.4, s: 1.0 };
        let dense = assemble_pauli_fierz(&sys, &v, &split).unwrap();
        let mf = PauliFierzOperator::new(&sys, &d, &v, 1e-12).unwrap();
        assert!(crate::linalg::max_abs_diff(&mf.to_dense(), &dense.matrix) < 1e-9);
        let np = assemble_no_pair(&sys, &d, &v, &split).unwrap();
        let npo = NoPairOperator::new(&sys, &d, &v, 50.0, 1e-12).unwrap();
        let a = hermitian_eigenvalues(&np.h_plus).unwrap();
        let b = hermitian_eigenvalues(&crate::linalg::hermitize(&npo.to_dense())).unwrap();
        for i in 0..5 {
            assert!((a[i] - b[i]).abs() < 1e-8);
        }
    }

    #[test]
    fn no_pair_reduces_to_brown_ravenhall_when_decoupled() {
        let sys = system(1, 16, 0.0, 1, 2);
        let v = PotentialSpec::SoftCoulomb { gamma: 0.5, s: 1.0 };
        let d = assemble_dirac(&sys).unwrap();
        let split = spectral_split(&d, SplitBackend::DenseEig).unwrap();
        let np = assemble_no_pair(&sys, &d, &v, &split).unwrap();
        let got = hermitian_eigenvalues(&np.h_plus).unwrap();
        let br = BrownRavenhall::new(&sys.electron, &v).unwrap();
        let b = hermitian_eigenvalues(&hermitize(&br.to_dense())).unwrap();
        let hf = sys.fock.dgamma_diagonal(&sys.dispersion());
        let mut want: Vec<f64> = b
            .iter()
            .flat_map(|e| hf.iter().map(move |f| e + f))
            .collect();
        want.sort_by(f64::total_cmp);
        assert_eq!(got.len(), want.len());
        for (a, b) in got.iter().zip(&want) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn brown_ravenhall_basic_properties() {
        let eb = ElectronBasis::new(1, 20.0, 32).unwrap();
        let e0 = lowest_eigenpairs(&brown_ravenhall(&eb, 0.0).unwrap(), 1, 1e-10)
            .unwrap()
            .ground();
        assert!((e0 - 1.0).abs() < 1e-10);
        let mut last = e0;
        for g in [0.1, 0.2, 0.4] {
            let e = lowest_eigenpairs(&brown_ravenhall(&eb, g).unwrap(), 1, 1e-10)
                .unwrap()
                .ground();
            assert!(e < last);
            last = e;
        }
    }
}
