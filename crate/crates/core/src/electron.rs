//! Electron basis: a periodic grid in one or three dimensions with its dual
//! plane-wave lattice, four spinor components, Dirac matrices, Fourier
//! multipliers and potentials.
//!
//! Grid points are `x_i = (i - n/2) h` per axis with `h = L/n`, so the grid
//! contains the origin and parity `x -> -x` is the index map `i -> (n - i) mod n`.
//! Momenta are `2π m / L` with `-n/2 <= m < n/2` in FFT order.

use std::f64::consts::PI;
use std::io::Write;
use std::sync::Arc;

use faer::Mat;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::linalg::{LinearOperator, SparseMatrix, C64, ONE, ZERO};

/// Periodic spatial grid with a 4-component spinor factor.
#[derive(Clone)]
pub struct ElectronBasis {
    d: usize,
    box_len: f64,
    n: usize,
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for ElectronBasis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ElectronBasis")
            .field("d", &self.d)
            .field("box_len", &self.box_len)
            .field("n", &self.n)
            .finish()
    }
}

impl PartialEq for ElectronBasis {
    fn eq(&self, other: &Self) -> bool {
        self.d == other.d && self.box_len == other.box_len && self.n == other.n
    }
}

impl ElectronBasis {
    pub fn new(d: usize, box_len: f64, n: usize) -> Result<Self> {
        if d != 1 && d != 3 {
            return Err(LabError::InvalidParameter(format!(
                "dimension must be 1 or 3, got {d}"
            )));
        }
        if n < 4 || n % 2 == 1 {
            return Err(LabError::InvalidParameter(format!(
                "grid size must be even and >= 4, got {n}"
            )));
        }
        if !(box_len > 0.0) || !box_len.is_finite() {
            return Err(LabError::InvalidParameter(format!(
                "box length must be positive, got {box_len}"
            )));
        }
        let mut planner = FftPlanner::new();
        Ok(Self {
            d,
            box_len,
            n,
            fft: planner.plan_fft_forward(n),
            ifft: planner.plan_fft_inverse(n),
        })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn box_len(&self) -> f64 {
        self.box_len
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn spacing(&self) -> f64 {
        self.box_len / self.n as f64
    }

    /// Number of grid points `n^d`.
    pub fn grid_dim(&self) -> usize {
        self.n.pow(self.d as u32)
    }

    /// Dimension including the spinor factor.
    pub fn dim(&self) -> usize {
        4 * self.grid_dim()
    }

    /// Per-axis indices of a flat grid index (first axis slowest); unused
    /// axes are zero.
    pub fn axes(&self, idx: usize) -> [usize; 3] {
        if self.d == 1 {
            [idx, 0, 0]
        } else {
            let n = self.n;
            [idx / (n * n), (idx / n) % n, idx % n]
        }
    }

    pub fn flat(&self, ax: [usize; 3]) -> usize {
        if self.d == 1 {
            ax[0]
        } else {
            (ax[0] * self.n + ax[1]) * self.n + ax[2]
        }
    }

    /// Position of a grid point, trailing coordinates zero for `d = 1`.
    pub fn point(&self, idx: usize) -> [f64; 3] {
        let h = self.spacing();
        let half = (self.n / 2) as f64;
        let ax = self.axes(idx);
        let mut x = [0.0; 3];
        for a in 0..self.d {
            x[a] = (ax[a] as f64 - half) * h;
        }
        x
    }

    pub fn points(&self) -> Vec<[f64; 3]> {
        (0..self.grid_dim()).map(|i| self.point(i)).collect()
    }

    fn freq(&self, i: usize) -> f64 {
        let m = if i < self.n / 2 {
            i as f64
        } else {
            i as f64 - self.n as f64
        };
        2.0 * PI * m / self.box_len
    }

    /// Momentum attached to a flat index in FFT order.
    pub fn momentum(&self, idx: usize) -> [f64; 3] {
        let ax = self.axes(idx);
        let mut p = [0.0; 3];
        for a in 0..self.d {
            p[a] = self.freq(ax[a]);
        }
        p
    }

    /// Grid index of `-x`.
    pub fn parity(&self, idx: usize) -> usize {
        let ax = self.axes(idx);
        let mut out = [0; 3];
        for a in 0..self.d {
            out[a] = (self.n - ax[a]) % self.n;
        }
        self.flat(out)
    }

    /// Unitary discrete Fourier transform of a grid function, in place.
    pub fn fourier(&self, data: &mut [C64], inverse: bool) {
        assert_eq!(data.len(), self.grid_dim());
        let plan = if inverse { &self.ifft } else { &self.fft };
        let n = self.n;
        if self.d == 1 {
            plan.process(data);
        } else {
            let mut line = vec![ZERO; n];
            for stride in [n * n, n, 1] {
                for base in 0..self.grid_dim() {
                    // first index of each line along this axis
                    if (base / stride) % n != 0 {
                        continue;
                    }
                    for t in 0..n {
                        line[t] = data[base + t * stride];
                    }
                    plan.process(&mut line);
                    for t in 0..n {
                        data[base + t * stride] = line[t];
                    }
                }
            }
        }
        let s = 1.0 / (self.grid_dim() as f64).sqrt();
        data.iter_mut().for_each(|v| *v *= s);
    }

    /// Applies the Fourier multiplier with the given symbol (FFT order) to
    /// a grid function.
    pub fn apply_multiplier(&self, symbol: &[f64], x: &[C64], y: &mut [C64]) {
        y.copy_from_slice(x);
        self.fourier(y, false);
        for (v, s) in y.iter_mut().zip(symbol) {
            *v *= s;
        }
        self.fourier(y, true);
    }

    pub fn symbol(&self, f: impl Fn([f64; 3]) -> f64) -> Vec<f64> {
        (0..self.grid_dim()).map(|i| f(self.momentum(i))).collect()
    }

    /// Grid representation of a Fourier multiplier: a circulant matrix with
    /// kernel `c[δ] = N^{-1} Σ_p f(p) e^{2πi m·δ/n}`. Entries below `drop`
    /// are omitted.
    pub fn multiplier_matrix(&self, symbol: &[f64], drop: f64) -> SparseMatrix {
        let nd = self.grid_dim();
        let mut kernel: Vec<C64> = symbol.iter().map(|&s| C64::new(s, 0.0)).collect();
        // unitary inverse transform scaled to the plain 1/N convention
        self.fourier(&mut kernel, true);
        let s = 1.0 / (nd as f64).sqrt();
        kernel.iter_mut().for_each(|v| *v *= s);
        let n = self.n;
        let mut t = Vec::new();
        for i in 0..nd {
            let ai = self.axes(i);
            for j in 0..nd {
                let aj = self.axes(j);
                let mut delta = [0; 3];
                for a in 0..self.d {
                    delta[a] = (ai[a] + n - aj[a]) % n;
                }
                let v = kernel[self.flat(delta)];
                if v.norm() > drop {
                    t.push((i, j, v));
                }
            }
        }
        SparseMatrix::from_triplets(nd, nd, t)
    }

    /// `-i ∂_axis` on grid functions.
    pub fn momentum_operator(&self, axis: usize) -> SparseMatrix {
        assert!(axis < self.d, "axis out of range");
        let sym = self.symbol(|p| p[axis]);
        self.multiplier_matrix(&sym, 1e-15)
    }

    /// `sqrt(1 - Δ)` on grid functions.
    pub fn free_sqrt_operator(&self) -> SparseMatrix {
        let sym = self.symbol(|p| (p[0] * p[0] + p[1] * p[1] + p[2] * p[2] + 1.0).sqrt());
        self.multiplier_matrix(&sym, 1e-15)
    }

    /// `|p| = sqrt(-Δ)` on grid functions.
    pub fn abs_momentum_operator(&self) -> SparseMatrix {
        let sym = self.symbol(|p| (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt());
        self.multiplier_matrix(&sym, 1e-15)
    }

    /// Largest momentum modulus on the dual lattice.
    pub fn p_max(&self) -> f64 {
        PI / self.spacing() * (self.d as f64).sqrt()
    }

    /// Writes a vector on `grid ⊗ C^components` as CSV with columns
    /// `x1..xd, component, re, im`.
    pub fn write_csv<W: Write>(&self, mut w: W, psi: &[C64], components: usize) -> Result<()> {
        if psi.len() != self.grid_dim() * components {
            return Err(LabError::DimensionMismatch {
                expected: self.grid_dim() * components,
                found: psi.len(),
            });
        }
        let names: Vec<String> = (1..=self.d).map(|a| format!("x{a}")).collect();
        writeln!(w, "{},component,re,im", names.join(","))?;
        for i in 0..self.grid_dim() {
            let x = self.point(i);
            let coords: Vec<String> = x[..self.d].iter().map(|v| format!("{v}")).collect();
            for s in 0..components {
                let v = psi[i * components + s];
                writeln!(w, "{},{s},{:e},{:e}", coords.join(","), v.re, v.im)?;
            }
        }
        Ok(())
    }
}

/// The Dirac matrices `α_1, α_2, α_3, β` in the standard representation.
#[derive(Clone, Debug)]
pub struct DiracAlgebra {
    pub alpha: [[[C64; 4]; 4]; 3],
    pub beta: [[C64; 4]; 4],
}

pub fn pauli() -> [[[C64; 2]; 2]; 3] {
    let z = ZERO;
    let o = ONE;
    let i = C64::new(0.0, 1.0);
    [[[z, o], [o, z]], [[z, -i], [i, z]], [[o, z], [z, -o]]]
}

pub fn dirac_matrices() -> DiracAlgebra {
    let s = pauli();
    let mut alpha = [[[ZERO; 4]; 4]; 3];
    for (j, sj) in s.iter().enumerate() {
        for r in 0..2 {
            for c in 0..2 {
                alpha[j][r][c + 2] = sj[r][c];
                alpha[j][r + 2][c] = sj[r][c];
            }
        }
    }
    let mut beta = [[ZERO; 4]; 4];
    for r in 0..4 {
        beta[r][r] = if r < 2 { ONE } else { -ONE };
    }
    DiracAlgebra { alpha, beta }
}

impl DiracAlgebra {
    /// `α_0 = β, α_1, α_2, α_3`.
    pub fn all(&self) -> [[[C64; 4]; 4]; 4] {
        [self.beta, self.alpha[0], self.alpha[1], self.alpha[2]]
    }

    pub fn as_sparse(m: &[[C64; 4]; 4]) -> SparseMatrix {
        let mut t = Vec::new();
        for (r, row) in m.iter().enumerate() {
            for (c, v) in row.iter().enumerate() {
                t.push((r, c, *v));
            }
        }
        SparseMatrix::from_triplets(4, 4, t)
    }

    /// Largest entry of `α_i α_j + α_j α_i - 2 δ_ij` over all pairs.
    pub fn clifford_residual(&self) -> f64 {
        let all = self.all();
        let mut worst = 0.0f64;
        for i in 0..4 {
            for j in 0..4 {
                for r in 0..4 {
                    for c in 0..4 {
                        let mut v = ZERO;
                        for k in 0..4 {
                            v += all[i][r][k] * all[j][k][c] + all[j][r][k] * all[i][k][c];
                        }
                        if i == j && r == c {
                            v -= 2.0;
                        }
                        worst = worst.max(v.norm());
                    }
                }
            }
        }
        worst
    }

    /// `J α_2 = diag(σ_2, -σ_2)` with `J = [[0, 1], [-1, 0]]` in 2x2 blocks:
    /// the matrix part of the Kramers involution.
    pub fn kramers_matrix(&self) -> [[C64; 4]; 4] {
        let mut j = [[ZERO; 4]; 4];
        for r in 0..2 {
            j[r][r + 2] = ONE;
            j[r + 2][r] = -ONE;
        }
        let mut out = [[ZERO; 4]; 4];
        for r in 0..4 {
            for c in 0..4 {
                for k in 0..4 {
                    out[r][c] += j[r][k] * self.alpha[1][k][c];
                }
            }
        }
        out
    }
}

/// External potential, evaluated at the minimal-image distance to the origin.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PotentialSpec {
    None,
    /// `-γ / max(|x|, h/2)`
    Coulomb {
        gamma: f64,
    },
    /// `-γ / sqrt(|x|^2 + s^2)`
    SoftCoulomb {
        gamma: f64,
        s: f64,
    },
    /// `c |x|^2`
    Harmonic {
        c: f64,
    },
    /// Explicit values per grid point.
    Custom {
        samples: Vec<f64>,
    },
}

impl PotentialSpec {
    pub fn values(&self, eb: &ElectronBasis) -> Result<Vec<f64>> {
        let r0 = 0.5 * eb.spacing();
        let radius = |i: usize| {
            let x = eb.point(i);
            (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt()
        };
        let n = eb.grid_dim();
        Ok(match self {
            PotentialSpec::None => vec![0.0; n],
            PotentialSpec::Coulomb { gamma } => {
                (0..n).map(|i| -gamma / radius(i).max(r0)).collect()
            }
            PotentialSpec::SoftCoulomb { gamma, s } => (0..n)
                .map(|i| -gamma / (radius(i).powi(2) + s * s).sqrt())
                .collect(),
            PotentialSpec::Harmonic { c } => (0..n).map(|i| c * radius(i).powi(2)).collect(),
            PotentialSpec::Custom { samples } => {
                if samples.len() != n {
                    return Err(LabError::DimensionMismatch {
                        expected: n,
                        found: samples.len(),
                    });
                }
                samples.clone()
            }
        })
    }

    pub fn is_zero(&self) -> bool {
        match self {
            PotentialSpec::None => true,
            PotentialSpec::Coulomb { gamma } | PotentialSpec::SoftCoulomb { gamma, .. } => {
                *gamma == 0.0
            }
            PotentialSpec::Harmonic { c } => *c == 0.0,
            PotentialSpec::Custom { samples } => samples.iter().all(|v| *v == 0.0),
        }
    }

    /// Largest `|V(x) - V(-x)|` over the grid.
    pub fn asymmetry(&self, eb: &ElectronBasis) -> Result<f64> {
        let v = self.values(eb)?;
        Ok((0..v.len())
            .map(|i| (v[i] - v[eb.parity(i)]).abs())
            .fold(0.0, f64::max))
    }
}

pub fn potential_operator(eb: &ElectronBasis, spec: &PotentialSpec) -> Result<SparseMatrix> {
    Ok(SparseMatrix::diagonal(&spec.values(eb)?))
}

/// `h_V = sqrt(1 - Δ) + V` on scalar grid functions.
pub fn electronic_comparison(eb: &ElectronBasis, spec: &PotentialSpec) -> Result<SparseMatrix> {
    Ok(eb.free_sqrt_operator().add(&potential_operator(eb, spec)?))
}

/// Matrix-free `f(p) + V(x)` on scalar grid functions.
pub struct MultiplierPlusPotential<'a> {
    pub basis: &'a ElectronBasis,
    pub symbol: Vec<f64>,
    pub potential: Vec<f64>,
}

impl LinearOperator for MultiplierPlusPotential<'_> {
    fn dim(&self) -> usize {
        self.basis.grid_dim()
    }

    fn apply(&self, x: &[C64], y: &mut [C64]) {
        self.basis.apply_multiplier(&self.symbol, x, y);
        for ((yi, xi), v) in y.iter_mut().zip(x).zip(&self.potential) {
            *yi += xi * v;
        }
    }
}

/// Free Dirac operator `α·p + β` on `grid ⊗ C^4`.
pub fn free_dirac(eb: &ElectronBasis) -> SparseMatrix {
    let alg = dirac_matrices();
    let mut d = SparseMatrix::identity(eb.grid_dim()).kron(&DiracAlgebra::as_sparse(&alg.beta));
    for a in 0..eb.d() {
        let p = eb.momentum_operator(a);
        d = d.add(&p.kron(&DiracAlgebra::as_sparse(&alg.alpha[a])));
    }
    d
}

/// The positive-energy projection of `α·p + β` at one momentum.
pub fn free_projection(p: [f64; 3]) -> Mat<C64> {
    let alg = dirac_matrices();
    let e = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2] + 1.0).sqrt();
    Mat::from_fn(4, 4, |r, c| {
        let mut v = alg.beta[r][c];
        for a in 0..3 {
            v += alg.alpha[a][r][c] * p[a];
        }
        let id = if r == c { ONE } else { ZERO };
        (id + v / e) * 0.5
    })
}
