//! Photon mode sets: discretized momentum cells with infra-red and
//! ultra-violet cutoffs, polarization vectors and coupling functions.
//!
//! A lattice mode set tiles momentum space with cubes of side `eps` whose
//! centers sit at `eps (nu + 1/2)` in a fixed rotated frame. The half-integer
//! offset makes `k -> -k` map cells onto cells (`nu -> -nu - 1`), and the
//! rotation keeps every representative off the third coordinate axis where
//! the polarization vectors are undefined. Every cell that meets the shell
//! `m <= |k| <= uv` contributes one mode per polarization.
//!
//! Because the discretized coupling is constant on each cell, the field built
//! from these modes is the exact restriction of the continuum field to
//! cell-constant one-photon functions, with normalized cell modes
//! `a_j = |Q_j|^{-1/2} ∫_Q a(k) dk`.

use std::collections::HashMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::linalg::C64;
use crate::quadrature::{box_shell_volume, gauss_legendre};

/// Orthogonal map from the lattice frame to physical momentum coordinates.
pub const ROTATION: [[f64; 3]; 3] = rotation_matrix();

const fn rotation_matrix() -> [[f64; 3]; 3] {
    // Rodrigues rotation by 0.5 rad about (1, 2, 3)/sqrt(14), precomputed
    [
        [0.886326664612489, -0.3669073891114443, 0.2824960378701332],
        [
            0.40188379999990925,
            0.9125589727788377,
            -0.07566724851919487,
        ],
        [
            -0.23003142153743583,
            0.18059648118458965,
            0.9562794863894188,
        ],
    ]
}

fn rotate(v: [f64; 3]) -> [f64; 3] {
    let r = &ROTATION;
    [
        r[0][0] * v[0] + r[0][1] * v[1] + r[0][2] * v[2],
        r[1][0] * v[0] + r[1][1] * v[1] + r[1][2] * v[2],
        r[2][0] * v[0] + r[2][1] * v[1] + r[2][2] * v[2],
    ]
}

fn rotate_back(v: [f64; 3]) -> [f64; 3] {
    let r = &ROTATION;
    [
        r[0][0] * v[0] + r[1][0] * v[1] + r[2][0] * v[2],
        r[0][1] * v[0] + r[1][1] * v[1] + r[2][1] * v[2],
        r[0][2] * v[0] + r[1][2] * v[1] + r[2][2] * v[2],
    ]
}

pub fn norm3(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

pub fn dot3(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn cross3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn neg3(v: [f64; 3]) -> [f64; 3] {
    [-v[0], -v[1], -v[2]]
}

/// The two transverse polarization vectors `(e0, e1)` with
/// `e0 = k_perp / |k_perp|`, `k_perp = (k2, -k1, 0)` and `e1 = k/|k| ∧ e0`.
pub fn polarization_vectors(k: [f64; 3]) -> Result<([f64; 3], [f64; 3])> {
    let kn = norm3(k);
    let perp = (k[0] * k[0] + k[1] * k[1]).sqrt();
    if kn == 0.0 || perp <= 1e-12 * kn {
        return Err(LabError::PolarizationUndefined(k));
    }
    let e0 = [k[1] / perp, -k[0] / perp, 0.0];
    let e1 = cross3([k[0] / kn, k[1] / kn, k[2] / kn], e0);
    Ok((e0, e1))
}

pub fn polarization(k: [f64; 3], lambda: u8) -> Result<[f64; 3]> {
    let (e0, e1) = polarization_vectors(k)?;
    Ok(if lambda == 0 { e0 } else { e1 })
}

/// Sign `s` with `e_lambda(-k) = s e_lambda(k)`: the first polarization is odd
/// in `k`, the second even.
pub fn polarization_parity(lambda: u8) -> f64 {
    if lambda == 0 {
        -1.0
    } else {
        1.0
    }
}

/// Which coupling function to evaluate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gauge {
    /// `-e 1{|k|<=uv} |k|^{-1/2} e^{-ik.x} e(k) / 2pi`
    Standard,
    /// As `Standard` with the additional infra-red cutoff `|k| >= m`.
    Massive,
    /// Cell average of the massive amplitude, phase at the representative.
    Discretized,
    /// `(e^{-ik.x} - 1)` times the set's native coupling at `x = 0`.
    PauliFierz,
}

/// One photon mode: a momentum cell with a polarization.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Mode {
    pub k: [f64; 3],
    pub lambda: u8,
    pub omega: f64,
    pub cell_volume: f64,
    pub partner: usize,
    /// Real amplitude multiplying `-e e^{-ik.x} / 2pi` in the native coupling.
    #[serde(skip)]
    amplitude: [f64; 3],
    /// `1 / <1/|k|>` over the cell.
    #[serde(skip)]
    k_eff: f64,
    #[serde(skip)]
    cell: Option<[i64; 3]>,
}

impl Mode {
    pub fn amplitude(&self) -> [f64; 3] {
        self.amplitude
    }

    pub fn k_eff(&self) -> f64 {
        self.k_eff
    }

    pub fn cell(&self) -> Option<[i64; 3]> {
        self.cell
    }
}

/// Angular and radial resolution of a reference quadrature set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReferenceGrid {
    pub radial: usize,
    pub polar: usize,
    pub azimuth: usize,
}

impl Default for ReferenceGrid {
    fn default() -> Self {
        Self {
            radial: 24,
            polar: 16,
            azimuth: 32,
        }
    }
}

/// A finite set of photon modes covering the shell `m <= |k| <= uv`.
#[derive(Clone, Debug, Serialize)]
pub struct ModeSet {
    pub m: f64,
    pub uv: f64,
    pub eps: f64,
    pub charge: f64,
    pub modes: Vec<Mode>,
    #[serde(skip)]
    cells: HashMap<[i64; 3], usize>,
}

#[derive(Deserialize)]
struct ModeSetRecord {
    m: f64,
    uv: f64,
    eps: f64,
    charge: f64,
    modes: Vec<Mode>,
}

struct CellData {
    kappa: [f64; 3],
    omega: f64,
    volume: f64,
    amplitude: [[f64; 3]; 2],
    k_eff: f64,
}

impl ModeSet {
    /// Lattice discretization with spacing `eps`.
    pub fn build(m: f64, uv: f64, eps: f64, charge: f64) -> Result<Self> {
        if !(m > 0.0) {
            return Err(LabError::InvalidParameter(format!(
                "lattice mode sets need a positive infra-red cutoff, got m = {m}"
            )));
        }
        if !(m < uv) || !uv.is_finite() {
            return Err(LabError::InvalidParameter(format!(
                "need m < uv, got m = {m}, uv = {uv}"
            )));
        }
        if !(eps > 0.0) || !eps.is_finite() {
            return Err(LabError::InvalidParameter(format!(
                "lattice spacing must be positive, got {eps}"
            )));
        }
        if !charge.is_finite() {
            return Err(LabError::InvalidParameter("charge must be finite".into()));
        }
        let n = (uv / eps).ceil() as i64;
        if n > 200 {
            return Err(LabError::InvalidParameter(format!(
                "lattice spacing {eps} too fine for cutoff {uv}"
            )));
        }
        let mut cells: Vec<([i64; 3], CellData)> = Vec::new();
        for a in -n..n {
            for b in -n..n {
                for c in -n..n {
                    let nu = [a, b, c];
                    let mirror = [-a - 1, -b - 1, -c - 1];
                    if nu < mirror {
                        continue;
                    }
                    if let Some(data) = cell_data(nu, eps, m, uv)? {
                        let partner = CellData {
                            kappa: neg3(data.kappa),
                            omega: data.omega,
                            volume: data.volume,
                            amplitude: [neg3(data.amplitude[0]), data.amplitude[1]],
                            k_eff: data.k_eff,
                        };
                        cells.push((mirror, partner));
                        cells.push((nu, data));
                    }
                }
            }
        }
        cells.sort_by(|p, q| p.0.cmp(&q.0));
        let mut index = HashMap::with_capacity(cells.len());
        for (i, (nu, _)) in cells.iter().enumerate() {
            index.insert(*nu, 2 * i);
        }
        let mut modes = Vec::with_capacity(2 * cells.len());
        for (nu, d) in &cells {
            let mirror = [-nu[0] - 1, -nu[1] - 1, -nu[2] - 1];
            let p = index[&mirror];
            for lambda in 0..2u8 {
                modes.push(Mode {
                    k: d.kappa,
                    lambda,
                    omega: d.omega,
                    cell_volume: d.volume,
                    partner: p + lambda as usize,
                    amplitude: d.amplitude[lambda as usize],
                    k_eff: d.k_eff,
                    cell: Some(*nu),
                });
            }
        }
        Ok(Self {
            m,
            uv,
            eps,
            charge,
            modes,
            cells: index,
        })
    }

    /// Pointwise quadrature set (`eps = 0`): Gauss nodes in `|k|` and
    /// `cos(theta)`, uniform in the azimuth, with quadrature weights as cell
    /// volumes. Its coupling is the massive one evaluated at the nodes.
    pub fn reference(m: f64, uv: f64, charge: f64, grid: ReferenceGrid) -> Result<Self> {
        if !(m >= 0.0) || !(m < uv) || !uv.is_finite() {
            return Err(LabError::InvalidParameter(format!(
                "need 0 <= m < uv, got m = {m}, uv = {uv}"
            )));
        }
        if grid.radial == 0 || grid.polar == 0 || grid.polar % 2 == 1 || grid.azimuth == 0 {
            return Err(LabError::InvalidParameter(
                "reference grid needs positive counts and an even polar count".into(),
            ));
        }
        let radial = gauss_legendre(grid.radial, m, uv);
        let polar = gauss_legendre(grid.polar, -1.0, 1.0);
        let mut modes = Vec::new();
        let dphi = 2.0 * PI / grid.azimuth as f64;
        // upper hemisphere first, lower hemisphere as exact negatives
        let mut upper = Vec::new();
        for &(r, wr) in &radial {
            for &(ct, wt) in polar.iter().filter(|p| p.0 > 0.0) {
                let st = (1.0 - ct * ct).sqrt();
                for j in 0..grid.azimuth {
                    let phi = dphi * (j as f64 + 0.5);
                    let k = [r * st * phi.cos(), r * st * phi.sin(), r * ct];
                    upper.push((k, wr * wt * dphi * r * r));
                }
            }
        }
        let half = upper.len();
        for (sign, list) in [(1.0, &upper), (-1.0, &upper)] {
            for (k, w) in list.iter() {
                let k = [sign * k[0], sign * k[1], sign * k[2]];
                let kn = norm3(k);
                for lambda in 0..2u8 {
                    modes.push(Mode {
                        k,
                        lambda,
                        omega: kn,
                        cell_volume: *w,
                        partner: 0,
                        amplitude: pointwise_amplitude(k, lambda)?,
                        k_eff: kn,
                        cell: None,
                    });
                }
            }
        }
        for j in 0..modes.len() {
            modes[j].partner = (j + 2 * half) % (4 * half);
        }
        Ok(Self {
            m,
            uv,
            eps: 0.0,
            charge,
            modes,
            cells: HashMap::new(),
        })
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn is_reference(&self) -> bool {
        self.eps == 0.0
    }

    pub fn with_charge(&self, charge: f64) -> Self {
        let mut out = self.clone();
        out.charge = charge;
        out
    }

    /// Volume of the shell `m <= |k| <= uv`.
    pub fn shell_volume(&self) -> f64 {
        4.0 * PI * (self.uv.powi(3) - self.m.powi(3)) / 3.0
    }

    /// Restriction to a partner-closed subset of modes, renumbered in the
    /// given order.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let mut pos = HashMap::new();
        for (i, &j) in indices.iter().enumerate() {
            if j >= self.len() || pos.insert(j, i).is_some() {
                return Err(LabError::InvalidParameter(format!("bad mode index {j}")));
            }
        }
        let mut modes = Vec::with_capacity(indices.len());
        for &j in indices {
            let mut md = self.modes[j].clone();
            md.partner = *pos.get(&md.partner).ok_or_else(|| {
                LabError::InvalidParameter(format!("subset is not closed under k -> -k (mode {j})"))
            })?;
            modes.push(md);
        }
        let mut cells = HashMap::new();
        for (i, md) in modes.iter().enumerate() {
            if let (Some(nu), 0) = (md.cell, md.lambda) {
                cells.insert(nu, i);
            }
        }
        Ok(Self {
            m: self.m,
            uv: self.uv,
            eps: self.eps,
            charge: self.charge,
            modes,
            cells,
        })
    }

    /// The `count` modes of smallest dispersion, completed to a set closed
    /// under `k -> -k` (ties broken by index). The result no longer
    /// partitions the shell.
    pub fn lowest(&self, count: usize) -> Result<Self> {
        let mut idx: Vec<usize> = (0..self.len()).collect();
        idx.sort_by(|&a, &b| {
            self.modes[a]
                .omega
                .total_cmp(&self.modes[b].omega)
                .then(a.cmp(&b))
        });
        let mut chosen = Vec::new();
        for j in idx {
            if chosen.len() >= count {
                break;
            }
            if !chosen.contains(&j) {
                chosen.push(j);
                if !chosen.contains(&self.modes[j].partner) {
                    chosen.push(self.modes[j].partner);
                }
            }
        }
        chosen.sort_unstable();
        self.subset(&chosen)
    }

    /// Index of the first-polarization mode whose cell contains `k`, if any.
    pub fn cell_of(&self, k: [f64; 3]) -> Option<usize> {
        if self.is_reference() {
            return None;
        }
        let q = rotate_back(k);
        let nu = [
            (q[0] / self.eps).floor() as i64,
            (q[1] / self.eps).floor() as i64,
            (q[2] / self.eps).floor() as i64,
        ];
        self.cells.get(&nu).copied()
    }

    fn prefactor(&self) -> f64 {
        -self.charge / (2.0 * PI)
    }

    /// Coupling function of mode `j` at position `x` (unused trailing
    /// coordinates zero, so a one-dimensional grid sees only `k1 x1`).
    pub fn coupling_at(&self, x: [f64; 3], j: usize, gauge: Gauge) -> [C64; 3] {
        let md = &self.modes[j];
        let phase = C64::from_polar(1.0, -dot3(md.k, x));
        match gauge {
            Gauge::Standard | Gauge::Massive => {
                let kn = norm3(md.k);
                let inside = kn <= self.uv && (gauge == Gauge::Standard || kn >= self.m);
                let amp = match (inside, polarization(md.k, md.lambda)) {
                    (true, Ok(e)) => e.map(|c| c / kn.sqrt()),
                    _ => [0.0; 3],
                };
                amp.map(|c| phase * (self.prefactor() * c))
            }
            Gauge::Discretized => md.amplitude.map(|c| phase * (self.prefactor() * c)),
            Gauge::PauliFierz => {
                let f = phase - 1.0;
                md.amplitude.map(|c| f * (self.prefactor() * c))
            }
        }
    }

    /// Native coupling of the set: the cell average for lattice sets, the
    /// pointwise massive coupling for reference sets.
    pub fn native_gauge(&self) -> Gauge {
        if self.is_reference() {
            Gauge::Massive
        } else {
            Gauge::Discretized
        }
    }

    /// Field coefficients `c_j = G_x(k_j) sqrt(|Q_j|)` for one vector component.
    pub fn field_coefficients(&self, x: [f64; 3], component: usize, gauge: Gauge) -> Vec<C64> {
        (0..self.len())
            .map(|j| self.coupling_at(x, j, gauge)[component] * self.modes[j].cell_volume.sqrt())
            .collect()
    }

    /// Coupling of the set at an arbitrary momentum `k` with polarization
    /// `lambda`: cell lookup for lattice sets, pointwise for reference sets.
    pub fn coupling_at_momentum(&self, x: [f64; 3], k: [f64; 3], lambda: u8) -> [C64; 3] {
        let kn = norm3(k);
        if kn < self.m || kn > self.uv {
            return [C64::new(0.0, 0.0); 3];
        }
        if self.is_reference() {
            let phase = C64::from_polar(1.0, -dot3(k, x));
            return match polarization(k, lambda) {
                Ok(e) => e.map(|c| phase * (self.prefactor() * c / kn.sqrt())),
                Err(_) => [C64::new(0.0, 0.0); 3],
            };
        }
        match self.cell_of(k) {
            Some(j) => self.coupling_at(x, j + lambda as usize, Gauge::Discretized),
            None => [C64::new(0.0, 0.0); 3],
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Parses a serialized set. Lattice sets are rebuilt from their
    /// parameters and must match the stored modes; reference sets recompute
    /// their amplitudes from the stored momenta.
    pub fn from_json(s: &str) -> Result<Self> {
        let rec: ModeSetRecord = serde_json::from_str(s)?;
        if rec.eps > 0.0 {
            let built = Self::build(rec.m, rec.uv, rec.eps, rec.charge)?;
            let same = built.modes.len() == rec.modes.len()
                && built.modes.iter().zip(&rec.modes).all(|(a, b)| {
                    a.lambda == b.lambda
                        && a.partner == b.partner
                        && (0..3).all(|i| (a.k[i] - b.k[i]).abs() <= 1e-12 * rec.uv)
                        && (a.omega - b.omega).abs() <= 1e-12 * rec.uv
                        && (a.cell_volume - b.cell_volume).abs()
                            <= 1e-12 * a.cell_volume.max(1e-300)
                });
            if !same {
                return Err(LabError::MalformedConfig(vec![
                    "modes do not match the lattice implied by (m, uv, eps)".into(),
                ]));
            }
            return Ok(built);
        }
        let mut modes = rec.modes;
        let n = modes.len();
        for j in 0..n {
            let md = &modes[j];
            let p = md.partner;
            if p >= n
                || modes[p].partner != j
                || modes[p].lambda != md.lambda
                || modes[p].k != neg3(md.k)
            {
                return Err(LabError::MalformedConfig(vec![format!(
                    "mode {j}: invalid partner"
                )]));
            }
        }
        for md in modes.iter_mut() {
            md.amplitude = pointwise_amplitude(md.k, md.lambda)?;
            md.k_eff = norm3(md.k);
            md.cell = None;
        }
        Ok(Self {
            m: rec.m,
            uv: rec.uv,
            eps: 0.0,
            charge: rec.charge,
            modes,
            cells: HashMap::new(),
        })
    }
}

/// `|k|^{-1/2} e_lambda(k)`
fn pointwise_amplitude(k: [f64; 3], lambda: u8) -> Result<[f64; 3]> {
    let s = 1.0 / norm3(k).sqrt();
    Ok(polarization(k, lambda)?.map(|c| c * s))
}

/// Representative, dispersion, exact volume and Gauss-averaged amplitudes of
/// lattice cell `nu`, or `None` if the cell misses the shell.
fn cell_data(nu: [i64; 3], eps: f64, m: f64, uv: f64) -> Result<Option<CellData>> {
    let lo = nu.map(|v| v as f64 * eps);
    let hi = nu.map(|v| (v + 1) as f64 * eps);
    let nearest: [f64; 3] = std::array::from_fn(|i| 0.0f64.clamp(lo[i], hi[i]));
    let far: [f64; 3] = std::array::from_fn(|i| {
        if lo[i].abs() > hi[i].abs() {
            lo[i]
        } else {
            hi[i]
        }
    });
    let (dn, df) = (norm3(nearest), norm3(far));
    if dn >= uv || df <= m {
        return Ok(None);
    }
    let interior = dn >= m && df <= uv;
    let volume = if interior {
        eps * eps * eps
    } else {
        box_shell_volume(lo, hi, m, uv)
    };
    if volume <= 1e-14 * eps * eps * eps {
        return Ok(None);
    }
    let kappa_lattice = if dn >= m {
        nearest
    } else {
        let center: [f64; 3] = std::array::from_fn(|i| 0.5 * (lo[i] + hi[i]));
        let cn = norm3(center);
        let radial = center.map(|c| m * c / cn);
        if (0..3).all(|i| radial[i] >= lo[i] && radial[i] <= hi[i]) {
            radial
        } else {
            // |nearest + t (far - nearest)| = m on the segment
            let d: [f64; 3] = std::array::from_fn(|i| far[i] - nearest[i]);
            let a = dot3(d, d);
            let b = 2.0 * dot3(nearest, d);
            let c = dot3(nearest, nearest) - m * m;
            let t = (-b + (b * b - 4.0 * a * c).sqrt()) / (2.0 * a);
            std::array::from_fn(|i| nearest[i] + t * d[i])
        }
    };
    let kappa = rotate(kappa_lattice);
    polarization_vectors(kappa)?;
    let omega = norm3(kappa).max(m);

    // tensor Gauss average over the part of the cell inside the shell;
    // boundary cells use a 2x2x2 composite rule
    let split = if interior { 1 } else { 2 };
    let mut wsum = 0.0;
    let mut acc = [[0.0f64; 3]; 2];
    let mut inv_k = 0.0;
    let h = eps / split as f64;
    for sx in 0..split {
        for sy in 0..split {
            for sz in 0..split {
                let sub_lo = [
                    lo[0] + sx as f64 * h,
                    lo[1] + sy as f64 * h,
                    lo[2] + sz as f64 * h,
                ];
                let rules: Vec<_> = (0..3)
                    .map(|i| gauss_legendre(3, sub_lo[i], sub_lo[i] + h))
                    .collect();
                for &(qx, wx) in &rules[0] {
                    for &(qy, wy) in &rules[1] {
                        for &(qz, wz) in &rules[2] {
                            let p = rotate([qx, qy, qz]);
                            let pn = norm3(p);
                            if pn < m || pn > uv {
                                continue;
                            }
                            let Ok((e0, e1)) = polarization_vectors(p) else {
                                continue;
                            };
                            let w = wx * wy * wz;
                            let s = w / pn.sqrt();
                            for i in 0..3 {
                                acc[0][i] += s * e0[i];
                                acc[1][i] += s * e1[i];
                            }
                            inv_k += w / pn;
                            wsum += w;
                        }
                    }
                }
            }
        }
    }
    let (amplitude, k_eff) = if wsum > 0.0 {
        (acc.map(|a| a.map(|c| c / wsum)), wsum / inv_k)
    } else {
        // sliver cell without interior nodes: evaluate at the representative
        let (e0, e1) = polarization_vectors(kappa)?;
        let s = omega.powf(-0.5);
        ([e0.map(|c| c * s), e1.map(|c| c * s)], omega)
    };
    Ok(Some(CellData {
        kappa,
        omega,
        volume,
        amplitude,
        k_eff,
    }))
}

/// Constants `d_l` of the relative bounds for the field built from `ms`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CouplingNorms {
    pub d_minus1: f64,
    pub d_0: f64,
    pub d_1: f64,
    pub d_2: f64,
}

/// `d_l^2 = 2 Σ_j |Q_j| w_j^l sup_x |G_x(k_j)|^2` with the sup over `x_grid`
/// and `w_j` the mode's dispersion. `d_1` also dominates the curl condition
/// `2 Σ |Q_j| sup_x |k_j ∧ G_x(k_j)|^2 / w_j`.
///
/// For the massive gauge on a lattice set the cell integrals of `|k|^l |G|^2`
/// are evaluated with the exact cell volume times the tensor-Gauss average
/// over the part of the cell inside the shell, so the sum approximates the
/// continuum integral rather than a representative-point rule.
pub fn coupling_norms(ms: &ModeSet, x_grid: &[[f64; 3]], gauge: Gauge) -> CouplingNorms {
    let mut s = [0.0f64; 4];
    let mut curl = 0.0;
    let origin = [[0.0; 3]];
    let xs: &[[f64; 3]] = if x_grid.is_empty() { &origin } else { x_grid };
    let pre2 = (ms.charge / (2.0 * PI)).powi(2);
    for (j, md) in ms.modes.iter().enumerate() {
        if gauge == Gauge::Massive && !ms.is_reference() {
            let cell = md.cell.expect("lattice mode");
            let (ints, c) = massive_cell_moments(cell, ms.eps, ms.m, ms.uv, md.lambda);
            for l in 0..4 {
                s[l] += pre2 * ints[l] * md.cell_volume;
            }
            curl += pre2 * c * md.cell_volume;
            continue;
        }
        let mut sup = 0.0f64;
        let mut sup_curl = 0.0f64;
        for &x in xs {
            let g = ms.coupling_at(x, j, gauge);
            let n2: f64 = g.iter().map(|v| v.norm_sqr()).sum();
            sup = sup.max(n2);
            let k = md.k.map(|c| C64::new(c, 0.0));
            let kg = [
                k[1] * g[2] - k[2] * g[1],
                k[2] * g[0] - k[0] * g[2],
                k[0] * g[1] - k[1] * g[0],
            ];
            sup_curl = sup_curl.max(kg.iter().map(|v| v.norm_sqr()).sum());
        }
        let w = match gauge {
            Gauge::Standard | Gauge::Massive => norm3(md.k),
            _ => md.omega,
        };
        for (l, p) in [-1i32, 0, 1, 2].iter().enumerate() {
            s[l] += md.cell_volume * w.powi(*p) * sup;
        }
        curl += md.cell_volume * sup_curl / w;
    }
    let d = s.map(|v| (2.0 * v).sqrt());
    CouplingNorms {
        d_minus1: d[0],
        d_0: d[1],
        d_1: d[2].max((2.0 * curl).sqrt()),
        d_2: d[3],
    }
}

/// Cell averages of `|k|^l |e_lambda(k)|^2 / |k|` for `l = -1, 0, 1, 2`, and of
/// the curl integrand, over the part of the cell inside the shell.
fn massive_cell_moments(nu: [i64; 3], eps: f64, m: f64, uv: f64, lambda: u8) -> ([f64; 4], f64) {
    let lo = nu.map(|v| v as f64 * eps);
    let split = 2;
    let h = eps / split as f64;
    let mut acc = [0.0; 4];
    let mut curl = 0.0;
    let mut wsum = 0.0;
    for sx in 0..split {
        for sy in 0..split {
            for sz in 0..split {
                let sub_lo = [
                    lo[0] + sx as f64 * h,
                    lo[1] + sy as f64 * h,
                    lo[2] + sz as f64 * h,
                ];
                let rules: Vec<_> = (0..3)
                    .map(|i| gauss_legendre(4, sub_lo[i], sub_lo[i] + h))
                    .collect();
                for &(qx, wx) in &rules[0] {
                    for &(qy, wy) in &rules[1] {
                        for &(qz, wz) in &rules[2] {
                            let p = rotate([qx, qy, qz]);
                            let r = norm3(p);
                            if r < m || r > uv || polarization(p, lambda).is_err() {
                                continue;
                            }
                            let w = wx * wy * wz;
                            for (l, e) in [-1i32, 0, 1, 2].iter().enumerate() {
                                acc[l] += w * r.powi(e - 1);
                            }
                            // |k ∧ e|^2 / |k| / |k| = 1 for transverse e
                            curl += w;
                            wsum += w;
                        }
                    }
                }
            }
        }
    }
    if wsum == 0.0 {
        let r = m.max(norm3(lo)).min(uv);
        return ([-1i32, 0, 1, 2].map(|e| r.powi(e - 1)), 1.0);
    }
    (acc.map(|a| a / wsum), curl / wsum)
}

/// `Δ^2 = Σ_λ ∫ (|k| + |k|^{-1}) sup_x |G_a - G_b|^2 dk` for two sets with
/// identical ultra-violet cutoff and charge, integrated on a composite
/// spherical product grid whose radial pieces break at every cutoff.
pub fn discretization_error(
    a: &ModeSet,
    b: &ModeSet,
    x_grid: &[[f64; 3]],
    grid: ReferenceGrid,
) -> Result<f64> {
    if a.uv != b.uv || a.charge != b.charge {
        return Err(LabError::IncompatibleModes(format!(
            "cutoff or charge differ: ({}, {}) vs ({}, {})",
            a.uv, a.charge, b.uv, b.charge
        )));
    }
    let origin = [[0.0; 3]];
    let xs: &[[f64; 3]] = if x_grid.is_empty() { &origin } else { x_grid };
    let mut breaks = vec![0.0, a.m, b.m, a.uv];
    // lattice discontinuities are resolved by subdividing the radial range
    for s in [a, b] {
        if s.eps > 0.0 {
            let mut r = 0.0;
            while r < s.uv {
                breaks.push(r);
                r += 0.5 * s.eps;
            }
        }
    }
    breaks.sort_by(f64::total_cmp);
    breaks.dedup_by(|p, q| (*p - *q).abs() < 1e-14);
    let polar = gauss_legendre(grid.polar, -1.0, 1.0);
    let dphi = 2.0 * PI / grid.azimuth as f64;
    let mut total = 0.0;
    for w in breaks.windows(2) {
        for (r, wr) in gauss_legendre(grid.radial, w[0], w[1]) {
            for &(ct, wt) in &polar {
                let st = (1.0 - ct * ct).sqrt();
                for j in 0..grid.azimuth {
                    let phi = dphi * (j as f64 + 0.5);
                    let k = [r * st * phi.cos(), r * st * phi.sin(), r * ct];
                    let weight = wr * wt * dphi * r * r * (r + 1.0 / r);
                    for lambda in 0..2u8 {
                        let mut sup = 0.0f64;
                        for &x in xs {
                            let ga = a.coupling_at_momentum(x, k, lambda);
                            let gb = b.coupling_at_momentum(x, k, lambda);
                            let d2: f64 = (0..3).map(|i| (ga[i] - gb[i]).norm_sqr()).sum();
                            sup = sup.max(d2);
                        }
                        total += weight * sup;
                    }
                }
            }
        }
    }
    Ok(total.sqrt())
}

/// `Δ(m)^2 = (e^2 / 2π^2) 4π (m^3/3 + m)`, the squared distance between the
/// massive and the standard coupling.
pub fn delta_m_squared(m: f64, charge: f64) -> f64 {
    charge * charge / (2.0 * PI * PI) * 4.0 * PI * (m.powi(3) / 3.0 + m)
}
