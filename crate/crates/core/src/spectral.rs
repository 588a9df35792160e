//! Lowest eigenpairs of Hermitian operators, degeneracy bookkeeping and
//! quadratic forms.
//!
//! Large problems use Lanczos with full reorthogonalization, thick restarts
//! and locking of converged pairs. Locked vectors are deflated from every
//! later Krylov space. After each lock the iteration restarts explicitly with
//! a small fresh random component, so further copies of a degenerate
//! eigenvalue are found.

use std::io::Write;
use std::path::Path;

use faer::Mat;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::linalg::{
    axpy, dot, hermitian_eigen, norm, normalize, random_vector, LinearOperator, C64, ZERO,
};

/// Eigenvalues closer than this are grouped as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-7;

/// Below this dimension the operator is diagonalized densely.
pub const DENSE_THRESHOLD: usize = 2000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenOptions {
    pub count: usize,
    /// Absolute residual bound `|Hv - λv|`.
    pub tol: f64,
    pub seed: u64,
    pub max_restarts: usize,
    /// Krylov space size per restart cycle.
    pub krylov: usize,
    pub dense_threshold: usize,
}

impl EigenOptions {
    pub fn new(count: usize, tol: f64) -> Self {
        Self {
            count,
            tol,
            seed: 0x5eed,
            max_restarts: 200,
            krylov: 120,
            dense_threshold: DENSE_THRESHOLD,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn iterative(mut self) -> Self {
        self.dense_threshold = 0;
        self
    }
}

#[derive(Clone, Debug)]
pub struct SpectralResult {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Vec<Vec<C64>>,
    pub residuals: Vec<f64>,
    pub groups: Vec<Vec<usize>>,
}

#[derive(Serialize)]
struct SpectralRecord<'a> {
    eigenvalues: &'a [f64],
    residuals: &'a [f64],
    groups: &'a [Vec<usize>],
}

#[derive(Serialize)]
struct VectorHeader {
    rows: usize,
    columns: usize,
    layout: &'static str,
}

impl SpectralResult {
    pub fn ground(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn multiplicities(&self) -> Vec<usize> {
        self.groups.iter().map(Vec::len).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&SpectralRecord {
            eigenvalues: &self.eigenvalues,
            residuals: &self.residuals,
            groups: &self.groups,
        })?)
    }

    /// Writes eigenvectors as little-endian `(re, im)` pairs, column after
    /// column, to `<stem>.bin` with a JSON header in `<stem>.json`.
    pub fn write_eigenvectors(&self, stem: &Path) -> Result<()> {
        let rows = self.eigenvectors.first().map_or(0, Vec::len);
        let header = VectorHeader {
            rows,
            columns: self.eigenvectors.len(),
            layout: "column-major complex128 little-endian",
        };
        std::fs::write(
            stem.with_extension("json"),
            serde_json::to_string_pretty(&header)?,
        )?;
        let mut f = std::io::BufWriter::new(std::fs::File::create(stem.with_extension("bin"))?);
        for v in &self.eigenvectors {
            for c in v {
                f.write_all(&c.re.to_le_bytes())?;
                f.write_all(&c.im.to_le_bytes())?;
            }
        }
        f.flush()?;
        Ok(())
    }
}

/// Greedy clustering of ascending eigenvalues: a new group starts whenever
/// the gap to the previous value is at least `tol`.
pub fn degeneracy_groups(eigs: &[f64], tol: f64) -> Vec<Vec<usize>> {
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for (i, &e) in eigs.iter().enumerate() {
        match groups.last_mut() {
            Some(g) if e - eigs[i - 1] < tol => g.push(i),
            _ => groups.push(vec![i]),
        }
    }
    groups
}

/// Makes the first entry of largest modulus real and positive.
pub fn fix_phase(v: &mut [C64]) {
    let mut best = 0usize;
    let mut big = -1.0f64;
    for (i, c) in v.iter().enumerate() {
        // tolerance so that ties resolve to the first index deterministically
        if c.norm() > big * (1.0 + 1e-12) {
            big = c.norm();
            best = i;
        }
    }
    if big > 0.0 {
        let ph = v[best].conj() / v[best].norm();
        v.iter_mut().for_each(|c| *c *= ph);
    }
}

/// Lowest `count` eigenpairs with residuals below `tol`.
pub fn lowest_eigenpairs(
    op: &dyn LinearOperator,
    count: usize,
    tol: f64,
) -> Result<SpectralResult> {
    lowest_eigenpairs_with(op, &EigenOptions::new(count, tol))
}

pub fn lowest_eigenpairs_with(
    op: &dyn LinearOperator,
    opts: &EigenOptions,
) -> Result<SpectralResult> {
    let n = op.dim();
    if opts.count == 0 || opts.count > n {
        return Err(LabError::InvalidParameter(format!(
            "requested {} eigenpairs of a {n}-dimensional operator",
            opts.count
        )));
    }
    let (vals, mut vecs) = if n < opts.dense_threshold {
        dense_lowest(op, opts.count)?
    } else {
        lanczos(op, opts)?
    };
    let mut residuals = Vec::with_capacity(vals.len());
    let mut w = vec![ZERO; n];
    for (v, &l) in vecs.iter_mut().zip(&vals) {
        fix_phase(v);
        op.apply(v, &mut w);
        axpy(C64::new(-l, 0.0), v, &mut w);
        residuals.push(norm(&w));
    }
    let worst = residuals.iter().cloned().fold(0.0, f64::max);
    if worst > opts.tol {
        return Err(LabError::EigenNotConverged {
            iterations: 0,
            history: vec![worst],
        });
    }
    Ok(SpectralResult {
        groups: degeneracy_groups(&vals, DEGENERACY_TOL),
        eigenvalues: vals,
        eigenvectors: vecs,
        residuals,
    })
}

fn dense_lowest(op: &dyn LinearOperator, count: usize) -> Result<(Vec<f64>, Vec<Vec<C64>>)> {
    let m = op.to_dense();
    let (vals, vecs) = hermitian_eigen(&crate::linalg::hermitize(&m))?;
    let cols = (0..count)
        .map(|j| (0..m.nrows()).map(|i| vecs[(i, j)]).collect())
        .collect();
    Ok((vals[..count].to_vec(), cols))
}

/// Orthogonalizes `v` against the union of two orthonormal families, in two
/// classical Gram-Schmidt passes.
fn orthogonalize(v: &mut [C64], first: &[Vec<C64>], second: &[Vec<C64>]) {
    for _ in 0..2 {
        for b in first.iter().chain(second) {
            let c = dot(b, v);
            axpy(-c, b, v);
        }
    }
}

fn lanczos(op: &dyn LinearOperator, opts: &EigenOptions) -> Result<(Vec<f64>, Vec<Vec<C64>>)> {
    let n = op.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut locked: Vec<Vec<C64>> = Vec::new();
    let mut locked_vals: Vec<f64> = Vec::new();
    let mut history = Vec::new();
    let mut w = vec![ZERO; n];
    // thick restart: basis = kept Ritz vectors followed by Krylov vectors;
    // `proj` is the Galerkin matrix on the span, filled column by column
    let mut basis: Vec<Vec<C64>> = Vec::new();
    let mut proj: Vec<Vec<C64>> = Vec::new();
    let mut next = random_vector(n, &mut rng);
    for _cycle in 0..opts.max_restarts {
        let m = opts.krylov.min(n - locked.len());
        orthogonalize(&mut next, &locked, &basis);
        if normalize(&mut next) < 1e-12 {
            next = random_vector(n, &mut rng);
            orthogonalize(&mut next, &locked, &basis);
            normalize(&mut next);
        }
        basis.push(next.clone());
        let mut applied = proj.len();
        loop {
            // fill the Galerkin columns of every vector not yet applied
            while applied < basis.len() {
                op.apply(&basis[applied], &mut w);
                let col: Vec<C64> = basis.iter().map(|b| dot(b, &w)).collect();
                let k = basis.len();
                proj.iter_mut().for_each(|row| row.resize(k, ZERO));
                proj.resize(k, vec![ZERO; k]);
                for (i, c) in col.iter().enumerate() {
                    proj[i][applied] = *c;
                    proj[applied][i] = c.conj();
                }
                proj[applied][applied] = C64::new(col[applied].re, 0.0);
                applied += 1;
            }
            orthogonalize(&mut w, &locked, &basis);
            let b = norm(&w);
            next = w.iter().map(|c| c / b.max(1e-300)).collect();
            if basis.len() >= m || b < 1e-13 {
                break;
            }
            basis.push(next.clone());
        }
        let k = basis.len();
        let h = Mat::<C64>::from_fn(k, k, |i, j| proj[i][j]);
        let (theta, y) = hermitian_eigen(&h)?;
        history.push(theta[0]);
        let ritz: Vec<Vec<C64>> = (0..k)
            .map(|c| {
                let mut x = vec![ZERO; n];
                for (i, b) in basis.iter().enumerate() {
                    axpy(y[(i, c)], b, &mut x);
                }
                normalize(&mut x);
                x
            })
            .collect();
        let wanted = opts.count - locked.len();
        let mut first_open = 0;
        while first_open < wanted.min(k) {
            op.apply(&ritz[first_open], &mut w);
            axpy(C64::new(-theta[first_open], 0.0), &ritz[first_open], &mut w);
            if norm(&w) > 0.5 * opts.tol {
                break;
            }
            first_open += 1;
        }
        for c in 0..first_open {
            locked.push(ritz[c].clone());
            locked_vals.push(theta[c]);
        }
        if locked.len() >= opts.count {
            let mut order: Vec<usize> = (0..locked.len()).collect();
            order.sort_by(|&a, &b| locked_vals[a].total_cmp(&locked_vals[b]));
            let vals = order[..opts.count]
                .iter()
                .map(|&i| locked_vals[i])
                .collect();
            let vecs = order[..opts.count]
                .iter()
                .map(|&i| locked[i].clone())
                .collect();
            return Ok((vals, vecs));
        }
        if first_open > 0 {
            // Explicit restart after locking: the open Ritz vectors plus a
            // random admixture, so that copies of a degenerate eigenvalue
            // orthogonal to the old Krylov space (and hence to every locked
            // vector) can appear.
            next = random_vector(n, &mut rng);
            normalize(&mut next);
            next.iter_mut().for_each(|c| *c *= 1e-2);
            for x in &ritz[first_open..k.min(opts.count - locked.len() + first_open + 1)] {
                axpy(C64::new(1.0, 0.0), x, &mut next);
            }
            basis.clear();
            proj.clear();
            continue;
        }
        // thick restart keeping the lowest Ritz vectors; `next` is the
        // residual direction shared by all of them
        let keep = (wanted + 20).min(m / 2).min(k);
        basis = ritz[..keep].to_vec();
        proj = (0..keep)
            .map(|i| {
                let mut row = vec![ZERO; keep];
                row[i] = C64::new(theta[i], 0.0);
                row
            })
            .collect();
    }
    Err(LabError::EigenNotConverged {
        iterations: opts.max_restarts,
        history,
    })
}

/// Value of `<ψ, H ψ>` with the imaginary part kept as a diagnostic.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadraticForm {
    pub value: f64,
    pub imaginary: f64,
}

pub fn quadratic_form(op: &dyn LinearOperator, state: &[C64]) -> Result<QuadraticForm> {
    if state.len() != op.dim() {
        return Err(LabError::DimensionMismatch {
            expected: op.dim(),
            found: state.len(),
        });
    }
    let nrm = norm(state);
    if (nrm - 1.0).abs() > 1e-10 {
        return Err(LabError::NotNormalized(nrm));
    }
    let mut w = vec![ZERO; state.len()];
    op.apply(state, &mut w);
    let q = dot(state, &w);
    Ok(QuadraticForm {
        value: q.re,
        imaginary: q.im,
    })
}

/// Bottom of the spectrum of the potential-free operator on the same
/// truncation.
pub fn ionization_threshold(h0: &dyn LinearOperator, tol: f64) -> Result<f64> {
    Ok(lowest_eigenpairs(h0, 1, tol)?.ground())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::SparseMatrix;
    use proptest::prelude::*;
    use rand::Rng;

    fn random_hermitian(n: usize, seed: u64) -> Mat<C64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = Mat::<C64>::from_fn(n, n, |_, _| {
            C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
        });
        crate::linalg::hermitize(&a)
    }

    #[test]
    fn diagonal_three_by_three() {
        let d = SparseMatrix::diagonal(&[3.0, 1.0, 2.0]);
        let r = lowest_eigenpairs(&d, 1, 1e-12).unwrap();
        assert_eq!(r.eigenvalues, vec![1.0]);
        assert_eq!(r.residuals, vec![0.0]);
    }

    #[test]
    fn lanczos_matches_dense_on_random_hermitian() {
        let a = random_hermitian(500, 11);
        let dense = crate::linalg::hermitian_eigenvalues(&a).unwrap();
        let opts = EigenOptions::new(5, 1e-9).iterative();
        let r = lowest_eigenpairs_with(&a, &opts).unwrap();
        for i in 0..5 {
            assert!((r.eigenvalues[i] - dense[i]).abs() < 1e-9);
        }
        for i in 0..5 {
            for j in 0..5 {
                let g = dot(&r.eigenvectors[i], &r.eigenvectors[j]);
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((g - want).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn lanczos_finds_degenerate_copies() {
        let mut d: Vec<f64> = (0..3000).map(|i| 1.0 + i as f64 * 0.01).collect();
        d[7] = 0.5;
        d[1500] = 0.5;
        let op = SparseMatrix::diagonal(&d);
        let r = lowest_eigenpairs_with(&op, &EigenOptions::new(3, 1e-9)).unwrap();
        assert!((r.eigenvalues[0] - 0.5).abs() < 1e-10);
        assert!((r.eigenvalues[1] - 0.5).abs() < 1e-10);
        assert!((r.eigenvalues[2] - 1.0).abs() < 1e-10);
        assert_eq!(r.multiplicities(), vec![2, 1]);
    }

    #[test]
    fn seeded_runs_are_bitwise_identical() {
        let a = random_hermitian(300, 3);
        let opts = EigenOptions::new(2, 1e-9).iterative().with_seed(9);
        let r1 = lowest_eigenpairs_with(&a, &opts).unwrap();
        let r2 = lowest_eigenpairs_with(&a, &opts).unwrap();
        assert_eq!(r1.eigenvalues, r2.eigenvalues);
    }

    #[test]
    fn groups() {
        assert_eq!(
            degeneracy_groups(&[1.0, 1.0 + 1e-9, 2.0], 1e-7),
            vec![vec![0, 1], vec![2]]
        );
        assert_eq!(
            degeneracy_groups(&[1.0, 1.0, 2.0], 0.0),
            vec![vec![0], vec![1], vec![2]]
        );
    }

    #[test]
    fn quadratic_form_of_eigenvector() {
        let a = random_hermitian(40, 5);
        let r = lowest_eigenpairs(&a, 1, 1e-10).unwrap();
        let q = quadratic_form(&a, &r.eigenvectors[0]).unwrap();
        assert!((q.value - r.ground()).abs() < 1e-12);
        assert!(q.imaginary.abs() < 1e-12);
        let bad = vec![C64::new(2.0, 0.0); 40];
        assert!(matches!(
            quadratic_form(&a, &bad),
            Err(LabError::NotNormalized(_))
        ));
    }

    #[test]
    fn json_has_groups() {
        let d = SparseMatrix::diagonal(&[1.0, 1.0, 3.0]);
        let r = lowest_eigenpairs(&d, 3, 1e-12).unwrap();
        let s = r.to_json().unwrap();
        assert!(s.contains("groups"));
        let dir = tempfile::tempdir().unwrap();
        r.write_eigenvectors(&dir.path().join("vecs")).unwrap();
        let bytes = std::fs::read(dir.path().join("vecs.bin")).unwrap();
        assert_eq!(bytes.len(), 3 * 3 * 16);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn rayleigh_quotient_above_ground(seed in 0u64..1000) {
            let a = random_hermitian(30, 77);
            let r = lowest_eigenpairs(&a, 1, 1e-10).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut psi = random_vector(30, &mut rng);
            normalize(&mut psi);
            let q = quadratic_form(&a, &psi).unwrap();
            prop_assert!(q.value >= r.ground() - r.residuals[0] - 1e-12);
        }
    }
}
