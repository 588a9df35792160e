//! Anti-unitary symmetries: the Kramers involution `ϑ = J α_2 C R` and the
//! plus/minus map `τ = α_2 C R`.
//!
//! `C` is complex conjugation in the position/occupation basis and `R` the
//! grid parity `x -> -x`. `C R` commutes with every multiplier of real
//! symbol and maps `A(x)` to itself, since the field coefficients are
//! `real · e^{-ik·x}`; no permutation of the Fock modes is needed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::System;
use crate::electron::{dirac_matrices, PotentialSpec};
use crate::error::{LabError, Result};
use crate::linalg::{dot, norm, random_vector, LinearOperator, C64, ZERO};

/// Largest `|V(x) - V(-x)|` accepted as reflection symmetric.
const PARITY_TOL: f64 = 1e-12;

/// `ψ ↦ w ⊙ conj(ψ ∘ π)`: a monomial matrix times complex conjugation.
#[derive(Clone, Debug)]
pub struct AntiUnitary {
    source: Vec<usize>,
    weight: Vec<C64>,
}

impl AntiUnitary {
    fn from_spinor(sys: &System, m: &[[C64; 4]; 4]) -> Self {
        let nf = sys.fock.dim();
        let n = sys.dim();
        let mut source = vec![0; n];
        let mut weight = vec![ZERO; n];
        for x in 0..sys.electron.grid_dim() {
            let rx = sys.electron.parity(x);
            for (s, row) in m.iter().enumerate() {
                let t = row
                    .iter()
                    .position(|v| *v != ZERO)
                    .expect("monomial spinor matrix");
                for f in 0..nf {
                    let i = (x * 4 + s) * nf + f;
                    source[i] = (rx * 4 + t) * nf + f;
                    weight[i] = row[t];
                }
            }
        }
        Self { source, weight }
    }

    pub fn dim(&self) -> usize {
        self.source.len()
    }

    pub fn apply(&self, psi: &[C64]) -> Vec<C64> {
        self.source
            .iter()
            .zip(&self.weight)
            .map(|(&j, w)| w * psi[j].conj())
            .collect()
    }

    /// Seeded unit-norm probe vectors.
    pub fn probes(&self, count: usize, seed: u64) -> Vec<Vec<C64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count)
            .map(|_| {
                let mut v = random_vector(self.dim(), &mut rng);
                crate::linalg::normalize(&mut v);
                v
            })
            .collect()
    }

    /// `max ‖Θ²ψ - sign·ψ‖` over the probes.
    pub fn square_residual(&self, probes: &[Vec<C64>], sign: f64) -> f64 {
        probes
            .iter()
            .map(|p| {
                let q = self.apply(&self.apply(p));
                q.iter()
                    .zip(p)
                    .map(|(a, b)| (a - b * sign).norm_sqr())
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0, f64::max)
    }

    /// `max |<Θψ, ψ>|` over the probes.
    pub fn orthogonality_residual(&self, probes: &[Vec<C64>]) -> f64 {
        probes
            .iter()
            .map(|p| dot(&self.apply(p), p).norm())
            .fold(0.0, f64::max)
    }

    /// `max ‖HΘψ - Θ Hψ‖ / ‖Hψ‖` over the probes.
    pub fn commutator_residual(&self, h: &dyn LinearOperator, probes: &[Vec<C64>]) -> f64 {
        self.twisted_residual(h, probes, 1.0)
    }

    /// `max ‖HΘψ + Θ Hψ‖ / ‖Hψ‖` over the probes.
    pub fn anticommutator_residual(&self, h: &dyn LinearOperator, probes: &[Vec<C64>]) -> f64 {
        self.twisted_residual(h, probes, -1.0)
    }

    fn twisted_residual(&self, h: &dyn LinearOperator, probes: &[Vec<C64>], sign: f64) -> f64 {
        let n = self.dim();
        let mut worst = 0.0f64;
        for p in probes {
            let mut hp = vec![ZERO; n];
            h.apply(p, &mut hp);
            let mut htp = vec![ZERO; n];
            h.apply(&self.apply(p), &mut htp);
            let thp = self.apply(&hp);
            let diff: Vec<C64> = htp.iter().zip(&thp).map(|(a, b)| a - b * sign).collect();
            worst = worst.max(norm(&diff) / norm(&hp).max(f64::MIN_POSITIVE));
        }
        worst
    }
}

/// `ϑ = J α_2 C R`; refuses asymmetric potentials and mode sets not closed
/// under `k -> -k`.
pub fn kramers_involution(sys: &System, v: &PotentialSpec) -> Result<AntiUnitary> {
    let (asym, closed) = sys.parity_defects(v)?;
    if asym > PARITY_TOL {
        return Err(LabError::Precondition(format!(
            "potential not reflection symmetric (defect {asym:e})"
        )));
    }
    if !closed {
        return Err(LabError::Precondition(
            "mode set not closed under k -> -k".into(),
        ));
    }
    Ok(AntiUnitary::from_spinor(
        sys,
        &dirac_matrices().kramers_matrix(),
    ))
}

/// `τ = α_2 C R`, anticommuting with `D_A` and commuting with `|D_A|`, `H_f`
/// and symmetric `V`; it maps `Ran P+` onto `Ran P-`.
pub fn plus_minus_map(sys: &System) -> AntiUnitary {
    AntiUnitary::from_spinor(sys, &dirac_matrices().alpha[1])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::electron::ElectronBasis;
    use crate::fock::FockBasis;
    use crate::hamiltonians::{
        assemble_dirac, assemble_no_pair, assemble_pauli_fierz, spectral_split, SplitBackend,
    };
    use crate::linalg::hermitian_eigenvalues;
    use crate::modes::ModeSet;
    use crate::spectral::{degeneracy_groups, lowest_eigenpairs, DEGENERACY_TOL};

    fn system(d: usize, n: usize, charge: f64, n_max: usize, modes: usize) -> System {
        let eb = ElectronBasis::new(d, 6.0, n).unwrap();
        let ms = ModeSet::build(0.5, 1.0, 0.4, charge)
            .unwrap()
            .lowest(modes)
            .unwrap();
        let fb = FockBasis::new(ms.len(), n_max).unwrap();
        System::new(eb, fb, ms).unwrap()
    }

    #[test]
    fn algebraic_identities() {
        let sys = system(3, 4, 0.5, 1, 4);
        let th = kramers_involution(&sys, &PotentialSpec::Coulomb { gamma: 0.3 }).unwrap();
        let probes = th.probes(5, 1);
        assert!(th.square_residual(&probes, -1.0) < 1e-15);
        assert!(th.orthogonality_residual(&probes) < 1e-13);
        let tau = plus_minus_map(&sys);
        assert!(tau.square_residual(&probes, -1.0) < 1e-15);
    }

    #[test]
    fn symmetries_of_dirac_operator() {
        for d in [1, 3] {
            let n = if d == 1 { 8 } else { 4 };
            let sys = system(d, n, 0.8, 1, 4);
            let dir = assemble_dirac(&sys).unwrap();
            let th = kramers_involution(&sys, &PotentialSpec::None).unwrap();
            let probes = th.probes(4, 2);
            assert!(th.commutator_residual(&dir, &probes) < 1e-12);
            let tau = plus_minus_map(&sys);
            assert!(tau.anticommutator_residual(&dir, &probes) < 1e-12);
        }
    }

    #[test]
    fn asymmetric_inputs_refused() {
        let sys = system(1, 8, 0.5, 1, 4);
        let samples: Vec<f64> = (0..8).map(|i| i as f64).collect();
        assert!(matches!(
            kramers_involution(&sys, &PotentialSpec::Custom { samples }),
            Err(LabError::Precondition(_))
        ));
        let full = ModeSet::build(0.5, 1.0, 0.4, 0.5).unwrap();
        assert!(full.subset(&[0]).is_err());
    }

    #[test]
    fn even_multiplicities() {
        let sys = system(1, 8, 0.9, 1, 4);
        let v = PotentialSpec::SoftCoulomb { gamma: 0.5, s: 1.0 };
        let d = assemble_dirac(&sys).unwrap();
        let split = spectral_split(&d, SplitBackend::DenseEig).unwrap();
        let pf = assemble_pauli_fierz(&sys, &v, &split).unwrap();
        let r = lowest_eigenpairs(&pf, 6, 1e-9).unwrap();
        for m in r.multiplicities() {
            assert_eq!(m % 2, 0);
        }
        let np = assemble_no_pair(&sys, &d, &v, &split).unwrap();
        let e = hermitian_eigenvalues(&np.h_plus).unwrap();
        for g in degeneracy_groups(&e, DEGENERACY_TOL) {
            assert_eq!(g.len() % 2, 0, "{g:?}");
        }
    }

    #[test]
    fn plus_minus_spectra_coincide() {
        let sys = system(1, 8, 0.9, 1, 4);
        let d = assemble_dirac(&sys).unwrap();
        let split = spectral_split(&d, SplitBackend::DenseEig).unwrap();
        let np = assemble_no_pair(&sys, &d, &PotentialSpec::None, &split).unwrap();
        let a = hermitian_eigenvalues(&np.h_plus).unwrap();
        let b = hermitian_eigenvalues(&np.h_minus).unwrap();
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-8);
        }
    }
}
