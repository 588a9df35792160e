//! Truncated bosonic Fock space: occupation-number basis with a cap on the
//! total photon number, ladder operators, second quantization and fields.
//!
//! Creation operators annihilate states already at the cap, so every
//! operator is defined on the whole truncated space. The canonical
//! commutation relations then hold exactly on states whose total occupation
//! is below the cap.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::linalg::{SparseMatrix, C64, ZERO};

/// Largest truncated Fock space we agree to enumerate.
pub const MAX_FOCK_DIM: u128 = 10_000_000;

/// Occupation-number basis `{n : Σ n_j <= n_max}` in graded lexicographic
/// order: by total occupation, then descending lexicographic, so the vacuum
/// comes first and the one-photon state of mode `j` sits at index `1 + j`.
#[derive(Clone, Debug)]
pub struct FockBasis {
    num_modes: usize,
    n_max: usize,
    states: Vec<u16>,
    index: HashMap<Vec<u16>, usize>,
}

/// `C(n + k, k)` with overflow reported as `None`.
pub fn binomial_dim(num_modes: usize, n_max: usize) -> Option<u128> {
    let mut acc: u128 = 1;
    for i in 1..=n_max as u128 {
        acc = acc.checked_mul(num_modes as u128 + i)? / i;
    }
    Some(acc)
}

impl FockBasis {
    pub fn new(num_modes: usize, n_max: usize) -> Result<Self> {
        if num_modes == 0 {
            return Err(LabError::InvalidParameter(
                "Fock basis needs at least one mode".into(),
            ));
        }
        let dim = binomial_dim(num_modes, n_max).unwrap_or(u128::MAX);
        if dim > MAX_FOCK_DIM {
            return Err(LabError::FockOverflow(dim));
        }
        let mut states = Vec::with_capacity(dim as usize * num_modes);
        let mut cur = vec![0u16; num_modes];
        for total in 0..=n_max {
            fill_layer(&mut cur, 0, total, &mut states);
        }
        let index = states
            .chunks(num_modes)
            .enumerate()
            .map(|(i, s)| (s.to_vec(), i))
            .collect();
        Ok(Self {
            num_modes,
            n_max,
            states,
            index,
        })
    }

    pub fn dim(&self) -> usize {
        self.states.len() / self.num_modes
    }

    pub fn num_modes(&self) -> usize {
        self.num_modes
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn state(&self, i: usize) -> &[u16] {
        &self.states[i * self.num_modes..(i + 1) * self.num_modes]
    }

    pub fn index_of(&self, occ: &[u16]) -> Option<usize> {
        self.index.get(occ).copied()
    }

    pub fn total(&self, i: usize) -> usize {
        self.state(i).iter().map(|&n| n as usize).sum()
    }

    /// `(row, col, value)` of the annihilator `a_j`.
    pub fn annihilation_entries(&self, j: usize) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        let mut buf = vec![0u16; self.num_modes];
        for col in 0..self.dim() {
            let s = self.state(col);
            if s[j] == 0 {
                continue;
            }
            buf.copy_from_slice(s);
            buf[j] -= 1;
            out.push((self.index[&buf], col, (s[j] as f64).sqrt()));
        }
        out
    }

    /// `a_j`, or its adjoint `a_j^*` with the cap convention.
    pub fn ladder(&self, j: usize, dir: Ladder) -> SparseMatrix {
        assert!(j < self.num_modes, "mode index out of range");
        let t = self
            .annihilation_entries(j)
            .into_iter()
            .map(|(r, c, v)| match dir {
                Ladder::Annihilate => (r, c, C64::new(v, 0.0)),
                Ladder::Create => (c, r, C64::new(v, 0.0)),
            })
            .collect();
        SparseMatrix::from_triplets(self.dim(), self.dim(), t)
    }

    /// Diagonal of `dΓ(w)`: `Σ_j n_j w_j` per basis state.
    pub fn dgamma_diagonal(&self, weights: &[f64]) -> Vec<f64> {
        assert_eq!(weights.len(), self.num_modes);
        (0..self.dim())
            .map(|i| {
                self.state(i)
                    .iter()
                    .zip(weights)
                    .map(|(&n, w)| n as f64 * w)
                    .sum()
            })
            .collect()
    }

    pub fn dgamma(&self, weights: &[f64]) -> SparseMatrix {
        SparseMatrix::diagonal(&self.dgamma_diagonal(weights))
    }

    pub fn number(&self) -> SparseMatrix {
        self.dgamma(&vec![1.0; self.num_modes])
    }

    /// `a^*(c) + a(c) = Σ_j (c_j a_j^* + conj(c_j) a_j)`.
    pub fn field_operator(&self, coeffs: &[C64]) -> SparseMatrix {
        assert_eq!(coeffs.len(), self.num_modes);
        let mut t = Vec::new();
        for (j, &c) in coeffs.iter().enumerate() {
            if c == ZERO {
                continue;
            }
            for (r, col, v) in self.annihilation_entries(j) {
                t.push((r, col, c.conj() * v));
                t.push((col, r, c * v));
            }
        }
        SparseMatrix::from_triplets(self.dim(), self.dim(), t)
    }

    /// `<psi, a_j^* a_j psi>` for a state on this basis.
    pub fn mode_occupancy(&self, state: &[C64], j: usize) -> Result<f64> {
        if state.len() != self.dim() {
            return Err(LabError::DimensionMismatch {
                expected: self.dim(),
                found: state.len(),
            });
        }
        let nrm: f64 = state.iter().map(|v| v.norm_sqr()).sum();
        if (nrm - 1.0).abs() > 1e-8 {
            return Err(LabError::NotNormalized(nrm.sqrt()));
        }
        Ok(state
            .iter()
            .enumerate()
            .map(|(i, v)| self.state(i)[j] as f64 * v.norm_sqr())
            .sum())
    }

    /// Occupancy of mode `j` for a vector on `X ⊗ Fock` whose Fock index
    /// runs fastest, summing over the outer factor.
    pub fn tensor_occupancy(&self, state: &[C64], j: usize) -> f64 {
        let f = self.dim();
        state
            .iter()
            .enumerate()
            .map(|(i, v)| self.state(i % f)[j] as f64 * v.norm_sqr())
            .sum()
    }

    /// Basis permutation induced by relabeling modes `j -> perm[j]`.
    pub fn mode_permutation(&self, perm: &[usize]) -> Vec<usize> {
        assert_eq!(perm.len(), self.num_modes);
        let mut buf = vec![0u16; self.num_modes];
        (0..self.dim())
            .map(|i| {
                for (j, &n) in self.state(i).iter().enumerate() {
                    buf[perm[j]] = n;
                }
                self.index[&buf]
            })
            .collect()
    }

    /// Indices of states with total occupation `< n_max`, where the
    /// commutation relations hold exactly.
    pub fn interior_states(&self) -> Vec<usize> {
        (0..self.dim())
            .filter(|&i| self.total(i) < self.n_max)
            .collect()
    }
}

fn fill_layer(cur: &mut [u16], pos: usize, remaining: usize, out: &mut Vec<u16>) {
    if pos + 1 == cur.len() {
        cur[pos] = remaining as u16;
        out.extend_from_slice(cur);
        cur[pos] = 0;
        return;
    }
    for n in (0..=remaining).rev() {
        cur[pos] = n as u16;
        fill_layer(cur, pos + 1, remaining - n, out);
    }
    cur[pos] = 0;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Ladder {
    Annihilate,
    Create,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{max_abs_diff, LinearOperator};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn dimensions_match_binomials() {
        assert_eq!(FockBasis::new(2, 0).unwrap().dim(), 1);
        assert_eq!(FockBasis::new(2, 2).unwrap().dim(), 6);
        assert_eq!(FockBasis::new(12, 2).unwrap().dim(), 91);
        assert!(matches!(
            FockBasis::new(200, 6),
            Err(LabError::FockOverflow(_))
        ));
    }

    #[test]
    fn basis_order_and_index() {
        let fb = FockBasis::new(3, 2).unwrap();
        assert_eq!(fb.state(0), &[0, 0, 0]);
        assert_eq!(fb.state(1), &[1, 0, 0]);
        assert_eq!(fb.state(3), &[0, 0, 1]);
        assert_eq!(fb.state(4), &[2, 0, 0]);
        for i in 0..fb.dim() {
            assert_eq!(fb.index_of(fb.state(i)), Some(i));
        }
    }

    #[test]
    fn ladder_basics() {
        let fb = FockBasis::new(3, 2).unwrap();
        for j in 0..3 {
            let a = fb.ladder(j, Ladder::Annihilate);
            let ad = fb.ladder(j, Ladder::Create);
            assert_eq!(a.adjoint(), ad);
            assert_eq!(a.get(0, 0), ZERO);
            assert!((0..fb.dim()).all(|r| a.get(r, 0) == ZERO));
            assert_eq!(ad.get(1 + j, 0), C64::new(1.0, 0.0));
        }
    }

    #[test]
    fn ccr_on_interior_states() {
        let fb = FockBasis::new(4, 3).unwrap();
        let inner = fb.interior_states();
        for i in 0..4 {
            for j in 0..4 {
                let ai = fb.ladder(i, Ladder::Annihilate);
                let aj = fb.ladder(j, Ladder::Annihilate);
                let adj = fb.ladder(j, Ladder::Create);
                let comm = ai.matmul(&adj).sub(&adj.matmul(&ai));
                let aa = ai.matmul(&aj).sub(&aj.matmul(&ai));
                assert_eq!(aa.nnz(), 0);
                for &c in &inner {
                    for r in 0..fb.dim() {
                        let want = if i == j && r == c { 1.0 } else { 0.0 };
                        assert!((comm.get(r, c) - want).norm() < 1e-14);
                    }
                }
            }
        }
    }

    #[test]
    fn dgamma_examples() {
        let fb = FockBasis::new(3, 2).unwrap();
        let w = [0.7, 1.1, 0.2];
        let h = fb.dgamma_diagonal(&w);
        assert_eq!(h[0], 0.0);
        assert!((h[fb.index_of(&[2, 0, 0]).unwrap()] - 1.4).abs() < 1e-15);
        let lower = fb.dgamma_diagonal(&[0.5, 1.0, 0.2]);
        assert!(h.iter().zip(&lower).all(|(a, b)| a >= b));
    }

    #[test]
    fn number_conservation() {
        let fb = FockBasis::new(3, 3).unwrap();
        let w = fb.dgamma(&[0.5, 0.5, 2.0]);
        let hop = fb
            .ladder(0, Ladder::Create)
            .matmul(&fb.ladder(1, Ladder::Annihilate));
        let comm = w.matmul(&hop).sub(&hop.matmul(&w));
        assert!(comm.max_abs() < 1e-15);
    }

    #[test]
    fn field_vacuum_expectation() {
        let fb = FockBasis::new(4, 1).unwrap();
        let c = [
            C64::new(0.3, 0.1),
            C64::new(-0.2, 0.0),
            C64::new(0.0, 0.5),
            C64::new(1.0, -1.0),
        ];
        let f = fb.field_operator(&c);
        assert!(f.hermiticity_defect() == 0.0);
        let f2 = f.matmul(&f);
        let want: f64 = c.iter().map(|v| v.norm_sqr()).sum();
        assert!((f2.get(0, 0).re - want).abs() < 1e-14);
        assert_eq!(fb.field_operator(&[ZERO; 4]).nnz(), 0);
    }

    #[test]
    fn occupancy_identities() {
        let fb = FockBasis::new(3, 2).unwrap();
        let mut vac = vec![ZERO; fb.dim()];
        vac[0] = C64::new(1.0, 0.0);
        assert!((0..3).all(|j| fb.mode_occupancy(&vac, j).unwrap() == 0.0));
        let mut one = vec![ZERO; fb.dim()];
        one[2] = C64::new(0.0, 1.0);
        assert_eq!(fb.mode_occupancy(&one, 1).unwrap(), 1.0);
        assert_eq!(fb.mode_occupancy(&one, 0).unwrap(), 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut psi: Vec<C64> = (0..fb.dim())
            .map(|_| C64::new(rng.gen(), rng.gen()))
            .collect();
        crate::linalg::normalize(&mut psi);
        let total: f64 = (0..3).map(|j| fb.mode_occupancy(&psi, j).unwrap()).sum();
        let mut npsi = vec![ZERO; fb.dim()];
        fb.number().apply(&psi, &mut npsi);
        assert!((total - crate::linalg::dot(&psi, &npsi).re).abs() < 1e-14);
        assert!(fb.mode_occupancy(&vec![ZERO; fb.dim()], 0).is_err());
    }

    #[test]
    fn mode_permutation_conjugates_ladders() {
        let fb = FockBasis::new(3, 2).unwrap();
        let perm = [2, 0, 1];
        let p = fb.mode_permutation(&perm);
        let a0 = fb.ladder(0, Ladder::Annihilate).to_dense();
        let a2 = fb.ladder(2, Ladder::Annihilate).to_dense();
        // (P a_0 P^{-1})_{p(r), p(c)} = (a_0)_{r,c} equals a_{perm[0]}
        let moved = faer::Mat::from_fn(fb.dim(), fb.dim(), |r, c| {
            let r0 = p.iter().position(|&x| x == r).unwrap();
            let c0 = p.iter().position(|&x| x == c).unwrap();
            a0[(r0, c0)]
        });
        assert!(max_abs_diff(&moved, &a2) == 0.0);
    }

    proptest! {
        #[test]
        fn relative_bound_below_cap(seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let fb = FockBasis::new(3, 3).unwrap();
            let omega: Vec<f64> = (0..3).map(|_| rng.gen_range(0.2..2.0)).collect();
            let c: Vec<C64> = (0..3).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
            let mut psi = vec![ZERO; fb.dim()];
            for i in fb.interior_states() {
                psi[i] = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            }
            crate::linalg::normalize(&mut psi);
            let mut apsi = vec![ZERO; fb.dim()];
            fb.field_operator(&c).apply(&psi, &mut apsi);
            let lhs: f64 = apsi.iter().map(|v| v.norm_sqr()).sum();
            let hf = fb.dgamma_diagonal(&omega);
            let hf_form: f64 = psi.iter().zip(&hf).map(|(v, h)| v.norm_sqr() * h).sum();
            let dm1 = 2.0 * c.iter().zip(&omega).map(|(v, w)| v.norm_sqr() / w).sum::<f64>();
            let d0 = 2.0 * c.iter().map(|v| v.norm_sqr()).sum::<f64>();
            prop_assert!(lhs <= 2.0 * (dm1 * hf_form + d0) + 1e-12);
        }
    }
}
