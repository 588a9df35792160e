//! Spectral split of a Dirac-type operator with a gap around zero: sign,
//! absolute value and the projections onto its positive and negative parts.
//!
//! Two dense backends are available. `DenseEig` diagonalizes. The resolvent
//! backend evaluates the principal value integral for the sign,
//!
//! ```text
//! S = (1/π) ∫ D (D² + y²)^{-1} dy = (1/π) ∫_{-π/2}^{π/2} D (D² cos²θ + sin²θ)^{-1} dθ,
//! ```
//!
//! after `y = tan θ`, with Gauss-Legendre nodes on `θ`. The odd part of the
//! resolvent `(D - iy)^{-1}` integrates to zero, nodes `±θ` share one shift
//! `tan²θ`, and all shifts are solved together by multi-shift conjugate
//! gradients on `D²`, which is positive with spectrum in `[1, ‖D‖²]`.
//!
//! For operators too large for dense storage [`AbsOperator`] and
//! [`SignOperator`] apply `|D| = (D²)^{1/2}` and `D (D²)^{-1/2}` through
//! Chebyshev expansions on `[1, b²]`, with `b` a row-sum bound on `‖D‖`.

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::linalg::{
    axpy, dot, hermitian_eigen, hermitize, max_abs, norm, spectral_function, ChebyshevFunction,
    FactorShape, LinearOperator, SparseHermitian, SparseMatrix, C64, ONE, ZERO,
};
use crate::quadrature::gauss_legendre;
use crate::spectral::{lowest_eigenpairs, EigenOptions};

/// Smallest admissible `|eigenvalue|` of the operator being split.
pub const GAP_BOUND: f64 = 1.0 - 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum SplitBackend {
    DenseEig,
    /// `nodes` Gauss points on each half `θ ∈ (0, π/2)` (so `2 nodes` in all).
    ResolventQuadrature {
        nodes: usize,
    },
}

impl SplitBackend {
    pub fn quadrature() -> Self {
        SplitBackend::ResolventQuadrature { nodes: 200 }
    }
}

#[derive(Clone, Debug)]
pub struct SpectralSplit {
    pub abs: Mat<C64>,
    pub sign: Mat<C64>,
    pub p_plus: Mat<C64>,
    pub p_minus: Mat<C64>,
    /// Orthonormal bases of `Ran P+` and `Ran P-`, one vector per column.
    pub basis_plus: Mat<C64>,
    pub basis_minus: Mat<C64>,
    pub backend: SplitBackend,
    /// Smallest `|eigenvalue|` of the operator.
    pub gap: f64,
    pub shape: FactorShape,
}

/// Invariant residuals of a split, all max-entry norms.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitDiagnostics {
    pub backend: SplitBackend,
    pub dim: usize,
    pub rank_plus: usize,
    pub rank_minus: usize,
    pub gap: f64,
    pub resolution: f64,
    pub idempotence: f64,
    pub orthogonality: f64,
    pub abs_identity: f64,
    pub involution: f64,
    pub abs_min: f64,
}

impl SpectralSplit {
    pub fn rank_plus(&self) -> usize {
        self.basis_plus.ncols()
    }

    pub fn rank_minus(&self) -> usize {
        self.basis_minus.ncols()
    }

    pub fn diagnostics(&self, d: &SparseMatrix) -> Result<SplitDiagnostics> {
        let n = self.sign.nrows();
        let id = Mat::<C64>::identity(n, n);
        let dd = d.to_dense();
        let abs_eigs = crate::linalg::hermitian_eigenvalues(&hermitize(&self.abs))?;
        Ok(SplitDiagnostics {
            backend: self.backend,
            dim: n,
            rank_plus: self.rank_plus(),
            rank_minus: self.rank_minus(),
            gap: self.gap,
            resolution: max_abs(&(&self.p_plus + &self.p_minus - &id)),
            idempotence: max_abs(&(&self.p_plus * &self.p_plus - &self.p_plus)),
            orthogonality: max_abs(&(&self.p_plus * &self.p_minus)),
            abs_identity: max_abs(&(&self.abs - &self.sign * &dd)),
            involution: max_abs(&(&self.sign * &self.sign - &id)),
            abs_min: abs_eigs[0],
        })
    }

    pub fn diagnostics_json(&self, d: &SparseMatrix) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.diagnostics(d)?)?)
    }
}

/// Splits `d` into its positive and negative spectral parts.
pub fn spectral_split(d: &SparseHermitian, backend: SplitBackend) -> Result<SpectralSplit> {
    match backend {
        SplitBackend::DenseEig => dense_split(d),
        SplitBackend::ResolventQuadrature { nodes } => quadrature_split(d, nodes),
    }
}

fn dense_split(d: &SparseHermitian) -> Result<SpectralSplit> {
    let (vals, vecs) = hermitian_eigen(&d.matrix.to_dense())?;
    let gap = vals.iter().fold(f64::INFINITY, |a, v| a.min(v.abs()));
    if gap < GAP_BOUND {
        return Err(LabError::GapViolation(gap));
    }
    let n = vals.len();
    let sign = spectral_function(&vals, &vecs, f64::signum);
    let abs = spectral_function(&vals, &vecs, f64::abs);
    let (p_plus, p_minus) = projections(&sign);
    let neg = vals.iter().filter(|v| **v < 0.0).count();
    let basis_minus = Mat::from_fn(n, neg, |i, j| vecs[(i, j)]);
    let basis_plus = Mat::from_fn(n, n - neg, |i, j| vecs[(i, neg + j)]);
    Ok(SpectralSplit {
        abs,
        sign,
        p_plus,
        p_minus,
        basis_plus,
        basis_minus,
        backend: SplitBackend::DenseEig,
        gap,
        shape: d.shape,
    })
}

fn projections(sign: &Mat<C64>) -> (Mat<C64>, Mat<C64>) {
    let n = sign.nrows();
    let half = C64::new(0.5, 0.0);
    let p = Mat::from_fn(n, n, |i, j| {
        let id = if i == j { ONE } else { ZERO };
        (id + sign[(i, j)]) * half
    });
    let m = Mat::from_fn(n, n, |i, j| {
        let id = if i == j { ONE } else { ZERO };
        (id - sign[(i, j)]) * half
    });
    (p, m)
}

/// `D²` applied as two products with `D`.
pub struct Squared<'a, O: LinearOperator + ?Sized> {
    pub inner: &'a O,
}

impl<O: LinearOperator + ?Sized> LinearOperator for Squared<'_, O> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn apply(&self, x: &[C64], y: &mut [C64]) {
        let mut tmp = vec![ZERO; x.len()];
        self.inner.apply(x, &mut tmp);
        self.inner.apply(&tmp, y);
    }
}

/// Smallest eigenvalue of `D²`, i.e. the squared gap.
pub fn squared_gap(d: &dyn LinearOperator) -> Result<f64> {
    let sq = Squared { inner: d };
    let opts = EigenOptions::new(1, 1e-9);
    Ok(crate::spectral::lowest_eigenpairs_with(&sq, &opts)?.ground())
}

fn quadrature_split(d: &SparseHermitian, nodes: usize) -> Result<SpectralSplit> {
    if nodes == 0 {
        return Err(LabError::InvalidParameter(
            "quadrature needs at least one node".into(),
        ));
    }
    let gap2 = squared_gap(&d.matrix)?;
    if gap2 < GAP_BOUND * GAP_BOUND {
        return Err(LabError::GapViolation(gap2.max(0.0).sqrt()));
    }
    // positive half of the 2K-point rule on (-π/2, π/2), weights doubled
    let rule: Vec<(f64, f64)> = gauss_legendre(
        2 * nodes,
        -std::f64::consts::FRAC_PI_2,
        std::f64::consts::FRAC_PI_2,
    )
    .into_iter()
    .filter(|(t, _)| *t > 0.0)
    .collect();
    let shifts: Vec<f64> = rule.iter().map(|(t, _)| t.tan().powi(2)).collect();
    let coef: Vec<f64> = rule
        .iter()
        .map(|(t, w)| 2.0 * w / (std::f64::consts::PI * t.cos().powi(2)))
        .collect();
    let n = d.dim();
    let sq = Squared { inner: &d.matrix };
    let mut sign = Mat::<C64>::zeros(n, n);
    let mut e = vec![ZERO; n];
    let mut col = vec![ZERO; n];
    for j in 0..n {
        e[j] = ONE;
        let xs = multishift_cg(&sq, &shifts, &e, 1e-14, 20 * n + 1000)?;
        let mut z = vec![ZERO; n];
        for (x, c) in xs.iter().zip(&coef) {
            axpy(C64::new(*c, 0.0), x, &mut z);
        }
        d.matrix.mul_vec(&z, &mut col);
        for i in 0..n {
            sign[(i, j)] = col[i];
        }
        e[j] = ZERO;
    }
    let sign = hermitize(&sign);
    let dd = d.matrix.to_dense();
    let abs = hermitize(&(&sign * &dd));
    let (p_plus, p_minus) = projections(&sign);
    let basis_plus = range_basis(&p_plus)?;
    let basis_minus = range_basis(&p_minus)?;
    if basis_plus.ncols() + basis_minus.ncols() != n {
        return Err(LabError::RankDeficiency {
            found: basis_plus.ncols() + basis_minus.ncols(),
            dim: n,
        });
    }
    Ok(SpectralSplit {
        abs,
        sign,
        p_plus,
        p_minus,
        basis_plus,
        basis_minus,
        backend: SplitBackend::ResolventQuadrature { nodes },
        gap: gap2.sqrt(),
        shape: d.shape,
    })
}

/// Orthonormal basis of the range of an (approximate) orthogonal projection:
/// eigenvectors with eigenvalue above one half.
fn range_basis(p: &Mat<C64>) -> Result<Mat<C64>> {
    let (vals, vecs) = hermitian_eigen(&hermitize(p))?;
    let first = vals.iter().position(|v| *v > 0.5).unwrap_or(vals.len());
    let n = p.nrows();
    Ok(Mat::from_fn(n, vals.len() - first, |i, j| {
        vecs[(i, first + j)]
    }))
}

/// Solves `(A + σ_s) x_s = b` for all shifts at once by conjugate gradients
/// on the smallest shift. `A` must be Hermitian with `A + min σ` positive
/// definite. Converged when every shifted residual is below `tol |b|`.
pub fn multishift_cg(
    a: &dyn LinearOperator,
    shifts: &[f64],
    b: &[C64],
    tol: f64,
    max_iter: usize,
) -> Result<Vec<Vec<C64>>> {
    let n = b.len();
    let ns = shifts.len();
    let base = shifts.iter().cloned().fold(f64::INFINITY, f64::min);
    let bnorm = norm(b);
    let mut xs = vec![vec![ZERO; n]; ns];
    if bnorm == 0.0 {
        return Ok(xs);
    }
    let mut r = b.to_vec();
    let mut p0 = b.to_vec();
    let mut ps = vec![b.to_vec(); ns];
    let mut zeta = vec![1.0f64; ns];
    let mut zeta_prev = vec![1.0f64; ns];
    let (mut alpha_prev, mut beta_prev) = (1.0f64, 0.0f64);
    let mut rr = dot(&r, &r).re;
    let mut ap = vec![ZERO; n];
    let mut done = vec![false; ns];
    for _ in 0..max_iter {
        a.apply(&p0, &mut ap);
        axpy(C64::new(base, 0.0), &p0, &mut ap);
        let alpha = rr / dot(&p0, &ap).re;
        let mut zeta_next = vec![0.0f64; ns];
        for s in 0..ns {
            if done[s] {
                continue;
            }
            let delta = shifts[s] - base;
            let den = alpha * beta_prev * (zeta_prev[s] - zeta[s])
                + zeta_prev[s] * alpha_prev * (1.0 + delta * alpha);
            zeta_next[s] = zeta[s] * zeta_prev[s] * alpha_prev / den;
            let alpha_s = alpha * zeta_next[s] / zeta[s];
            axpy(C64::new(alpha_s, 0.0), &ps[s], &mut xs[s]);
        }
        axpy(C64::new(-alpha, 0.0), &ap, &mut r);
        let rr_new = dot(&r, &r).re;
        let beta = rr_new / rr;
        let rnorm = rr_new.sqrt();
        let mut all = true;
        for s in 0..ns {
            if done[s] {
                continue;
            }
            let beta_s = beta * (zeta_next[s] / zeta[s]).powi(2);
            for i in 0..n {
                ps[s][i] = r[i] * zeta_next[s] + ps[s][i] * beta_s;
            }
            zeta_prev[s] = zeta[s];
            zeta[s] = zeta_next[s];
            if (zeta[s] * rnorm).abs() <= tol * bnorm {
                done[s] = true;
            } else {
                all = false;
            }
        }
        for i in 0..n {
            p0[i] = r[i] + p0[i] * beta;
        }
        rr = rr_new;
        alpha_prev = alpha;
        beta_prev = beta;
        if all {
            return Ok(xs);
        }
    }
    Err(LabError::SolveNotConverged {
        residual: rr.sqrt() / bnorm,
        iterations: max_iter,
    })
}

/// `|D| = (D²)^{1/2}` applied through a Chebyshev expansion.
pub struct AbsOperator<'a> {
    d: &'a dyn LinearOperator,
    cheb: ChebyshevFunction,
}

/// `sign(D) = D (D²)^{-1/2}` applied through a Chebyshev expansion.
pub struct SignOperator<'a> {
    d: &'a dyn LinearOperator,
    cheb: ChebyshevFunction,
}

/// Spectral interval `[lo, b²]` of `D²` for a gapped `D` with `‖D‖ <= b`.
fn squared_interval(bound: f64) -> (f64, f64) {
    (GAP_BOUND * GAP_BOUND, (bound * bound).max(1.0 + 1e-9))
}

impl<'a> AbsOperator<'a> {
    /// `bound` must dominate `‖D‖`, e.g. a Gershgorin row-sum bound; the
    /// caller is responsible for the gap of `D`.
    pub fn new(d: &'a dyn LinearOperator, bound: f64, tol: f64) -> Self {
        let (lo, hi) = squared_interval(bound);
        Self {
            d,
            cheb: ChebyshevFunction::fit(f64::sqrt, lo, hi, tol),
        }
    }

    pub fn degree(&self) -> usize {
        self.cheb.degree()
    }
}

impl LinearOperator for AbsOperator<'_> {
    fn dim(&self) -> usize {
        self.d.dim()
    }

    fn apply(&self, x: &[C64], y: &mut [C64]) {
        let sq = Squared { inner: self.d };
        self.cheb.apply(|v, w| sq.apply(v, w), x, y);
    }
}

impl<'a> SignOperator<'a> {
    pub fn new(d: &'a dyn LinearOperator, bound: f64, tol: f64) -> Self {
        let (lo, hi) = squared_interval(bound);
        Self {
            d,
            cheb: ChebyshevFunction::fit(|t| 1.0 / t.sqrt(), lo, hi, tol),
        }
    }

    pub fn degree(&self) -> usize {
        self.cheb.degree()
    }
}

impl LinearOperator for SignOperator<'_> {
    fn dim(&self) -> usize {
        self.d.dim()
    }

    fn apply(&self, x: &[C64], y: &mut [C64]) {
        let sq = Squared { inner: self.d };
        let mut tmp = vec![ZERO; x.len()];
        self.cheb.apply(|v, w| sq.apply(v, w), x, &mut tmp);
        self.d.apply(&tmp, y);
    }
}

/// Lowest eigenvalue of `|D|` by Lanczos on the Chebyshev operator; used as
/// a matrix-free gap check.
pub fn abs_floor(abs: &AbsOperator<'_>) -> Result<f64> {
    Ok(lowest_eigenpairs(abs, 1, 1e-8)?.ground())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::electron::{free_dirac, free_projection, ElectronBasis};
    use crate::fock::FockBasis;
    use crate::hamiltonians::{assemble_dirac, System};
    use crate::linalg::{max_abs_diff, random_vector};
    use crate::modes::ModeSet;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn system(charge: f64) -> System {
        let eb = ElectronBasis::new(1, 6.0, 4).unwrap();
        let ms = ModeSet::build(0.5, 1.0, 0.4, charge)
            .unwrap()
            .lowest(16)
            .unwrap();
        let fb = FockBasis::new(ms.len(), 1).unwrap();
        System::new(eb, fb, ms).unwrap()
    }

    #[test]
    fn multishift_matches_direct_solves() {
        let eb = ElectronBasis::new(1, 6.0, 16).unwrap();
        let d = free_dirac(&eb);
        let sq = Squared { inner: &d };
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let b = random_vector(d.nrows(), &mut rng);
        let shifts = [0.0, 0.3, 5.0, 1e4];
        let xs = multishift_cg(&sq, &shifts, &b, 1e-13, 1000).unwrap();
        let mut w = vec![ZERO; b.len()];
        for (x, s) in xs.iter().zip(&shifts) {
            sq.apply(x, &mut w);
            axpy(C64::new(*s, 0.0), x, &mut w);
            axpy(C64::new(-1.0, 0.0), &b, &mut w);
            assert!(norm(&w) < 1e-11 * norm(&b));
        }
    }

    #[test]
    fn free_projection_matches_closed_form() {
        let eb = ElectronBasis::new(1, 6.0, 8).unwrap();
        let d = SparseHermitian::new(
            free_dirac(&eb),
            FactorShape {
                electron: 8,
                spinor: 4,
                fock: 1,
            },
        )
        .unwrap();
        let split = spectral_split(&d, SplitBackend::DenseEig).unwrap();
        // P+ in plane-wave basis: block diagonal with the 4x4 closed form
        let n = eb.grid_dim();
        for q in 0..n {
            let p = eb.momentum(q);
            let want = free_projection(p);
            // plane wave e^{ipx}/sqrt(n) ⊗ spinor
            let wave: Vec<C64> = (0..n)
                .map(|i| C64::from_polar(1.0 / (n as f64).sqrt(), p[0] * eb.point(i)[0]))
                .collect();
            for s in 0..4 {
                for t in 0..4 {
                    let mut v = ZERO;
                    for i in 0..n {
                        for j in 0..n {
                            v += wave[i].conj() * split.p_plus[(4 * i + s, 4 * j + t)] * wave[j];
                        }
                    }
                    assert!((v - want[(s, t)]).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn dense_split_invariants() {
        let sys = system(0.8);
        let d = assemble_dirac(&sys).unwrap();
        let split = spectral_split(&d, SplitBackend::DenseEig).unwrap();
        let diag = split.diagnostics(&d.matrix).unwrap();
        assert!(diag.resolution < 1e-12);
        assert!(diag.idempotence < 1e-9);
        assert!(diag.orthogonality < 1e-9);
        assert!(diag.abs_identity < 1e-9);
        assert!(diag.involution < 1e-9);
        assert!(diag.abs_min >= 1.0 - 1e-9);
        assert_eq!(diag.rank_plus + diag.rank_minus, diag.dim);
    }

    #[test]
    fn backends_agree() {
        let sys = system(0.8);
        let d = assemble_dirac(&sys).unwrap();
        let a = spectral_split(&d, SplitBackend::DenseEig).unwrap();
        let b = spectral_split(&d, SplitBackend::ResolventQuadrature { nodes: 200 }).unwrap();
        assert!(max_abs_diff(&a.sign, &b.sign) < 1e-8);
        assert_eq!(a.rank_plus(), b.rank_plus());
    }

    #[test]
    fn chebyshev_operators_match_dense() {
        let sys = system(0.8);
        let d = assemble_dirac(&sys).unwrap();
        let split = spectral_split(&d, SplitBackend::DenseEig).unwrap();
        let bound = d.matrix.row_sum_bound();
        let abs = AbsOperator::new(&d.matrix, bound, 1e-12);
        let sign = SignOperator::new(&d.matrix, bound, 1e-12);
        assert!(max_abs_diff(&abs.to_dense(), &split.abs) < 1e-9);
        assert!(max_abs_diff(&sign.to_dense(), &split.sign) < 1e-9);
        assert!(abs_floor(&abs).unwrap() >= 1.0 - 1e-8);
    }

    #[test]
    fn gapless_operator_refused() {
        let m = SparseMatrix::diagonal(&[0.5, -2.0]);
        let h = SparseHermitian::new(
            m,
            FactorShape {
                electron: 1,
                spinor: 2,
                fock: 1,
            },
        )
        .unwrap();
        assert!(matches!(
            spectral_split(&h, SplitBackend::DenseEig),
            Err(LabError::GapViolation(_))
        ));
        assert!(matches!(
            spectral_split(&h, SplitBackend::quadrature()),
            Err(LabError::GapViolation(_))
        ));
    }
}
