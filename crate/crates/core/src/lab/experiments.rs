//! Physics experiments. Each returns report rows plus plot-ready series;
//! failures inside an experiment become failed rows rather than errors.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, Ladder, LadderParameter, Model};
use super::report::{ReportRow, Series};
use super::{eigen_options, electronic_spectrum, par_map, solve};
use crate::electron::{ElectronBasis, PotentialSpec};
use crate::error::{LabError, Result};
use crate::fock::FockBasis;
use crate::hamiltonians::{fiber_hamiltonian, gauge_transform, FiberKind, System};
use crate::linalg::{hermitian_eigenvalues, SparseMatrix, C64};
use crate::modes::norm3;
use crate::spectral::{quadratic_form, EigenOptions, SpectralResult};

/// Below this an electronic ground energy counts as a bound state.
const BOUND_MARGIN: f64 = 1e-9;
/// Fraction `δ` by which the fitted rate is reduced in the admissibility test.
pub const DECAY_DELTA: f64 = 0.05;
/// Minimum quality of the exponential fit.
pub const DECAY_R2: f64 = 0.99;
/// Largest probability mass allowed in the outer boundary zone.
pub const TAIL_MASS_LIMIT: f64 = 1e-6;
/// Boundary zone: points with some `|x_b| >= BOUNDARY_ZONE * L`.
const BOUNDARY_ZONE: f64 = 0.45;
/// Relative agreement of the decoupled decay rate with `sqrt(1 - E²)`.
pub const DECAY_ORACLE_TOL: f64 = 0.05;
/// Exact decoupled binding identity.
pub const DECOUPLED_TOL: f64 = 1e-9;
/// Largest relative growth of the soft-photon constant along the m-ladder.
pub const SOFT_PHOTON_DRIFT: f64 = 0.10;
/// Collapse threshold for the slope of E against ln n.
pub const COLLAPSE_SLOPE: f64 = -0.05;
/// Largest accepted width of the supercritical bracket.
pub const BRACKET_WIDTH: f64 = 0.1;
/// Default last Cauchy difference of a convergence ladder.
pub const CAUCHY_TOL: f64 = 1e-4;
/// Agreement of `Σ` with the minimum over fibers.
pub const FIBER_TOL: f64 = 1e-2;

/// Rows and series produced by one experiment.
#[derive(Clone, Debug, Default)]
pub struct Outcome {
    pub rows: Vec<ReportRow>,
    pub series: Vec<Series>,
}

impl Outcome {
    fn fail(h: &str, name: &str, e: LabError) -> Self {
        Self {
            rows: vec![ReportRow::failed(h, name, e.to_string())],
            series: Vec::new(),
        }
    }

    pub fn extend(&mut self, other: Outcome) {
        self.rows.extend(other.rows);
        self.series.extend(other.series);
    }

    pub fn write_series(&self, dir: &Path) -> Result<()> {
        for s in &self.series {
            s.write(dir)?;
        }
        Ok(())
    }
}

fn stamp(mut out: Outcome, start: std::time::Instant) -> Outcome {
    let ms = start.elapsed().as_millis() as u64;
    for r in &mut out.rows {
        r.runtime_ms = ms;
    }
    out
}

fn run(name: &str, cfg: &ExperimentConfig, f: impl FnOnce(&str) -> Result<Outcome>) -> Outcome {
    let h = cfg.hash();
    let t = std::time::Instant::now();
    let out = f(&h).unwrap_or_else(|e| Outcome::fail(&h, name, e));
    stamp(out, t)
}

fn max_residual(r: &SpectralResult) -> f64 {
    r.residuals.iter().cloned().fold(0.0, f64::max)
}

// ---------------------------------------------------------------- spectrum

pub fn spectrum_experiment(cfg: &ExperimentConfig) -> (Option<SpectralResult>, Outcome) {
    let mut result = None;
    let out = run("spectrum", cfg, |h| {
        let r = solve(
            &cfg.system()?,
            cfg.model,
            &cfg.potential,
            cfg.backend.split(),
            &eigen_options(cfg),
        )?;
        let mut s = Series::new("spectrum", &["index", "eigenvalue", "residual", "group"]);
        for (g, members) in r.groups.iter().enumerate() {
            for &i in members {
                s.push(vec![i as f64, r.eigenvalues[i], r.residuals[i], g as f64]);
            }
        }
        let rows = vec![
            ReportRow::info(h, "ground_energy", r.ground()),
            ReportRow::info(h, "ground_multiplicity", r.multiplicities()[0] as f64),
            ReportRow::at_most(h, "eigen_residual", max_residual(&r), cfg.solver.tol),
        ];
        result = Some(r);
        Ok(Outcome {
            rows,
            series: vec![s],
        })
    });
    (result, out)
}

// ----------------------------------------------------------------- binding

/// Energies entering the binding inequality on one truncation.
#[derive(Clone, Debug)]
pub struct Binding {
    /// `E_V`
    pub energy: f64,
    /// `Σ`, the bottom of the potential-free operator.
    pub threshold: f64,
    /// `inf spec h_V` on the same grid.
    pub electronic: f64,
    /// Eigen residuals plus the change of `Σ - E_V` under `n_max -> n_max - 1`.
    pub slack: f64,
    pub ground: SpectralResult,
}

impl Binding {
    pub fn binding_energy(&self) -> f64 {
        self.threshold - self.energy
    }
}

fn energies(cfg: &ExperimentConfig, v: &PotentialSpec) -> Result<SpectralResult> {
    solve(
        &cfg.system()?,
        cfg.model,
        v,
        cfg.backend.split(),
        &eigen_options(cfg),
    )
}

/// `None` when `h_V` has no eigenvalue below 1.
pub fn measure_binding(cfg: &ExperimentConfig) -> Result<Option<Binding>> {
    let opts = EigenOptions::new(1, cfg.solver.tol).with_seed(cfg.seed);
    let electronic =
        electronic_spectrum(&cfg.electron_basis()?, cfg.model, &cfg.potential, &opts)?.ground();
    if electronic >= 1.0 - BOUND_MARGIN {
        return Ok(None);
    }
    let pair = |c: &ExperimentConfig| -> Result<(SpectralResult, SpectralResult)> {
        Ok((
            energies(c, &cfg.potential)?,
            energies(c, &PotentialSpec::None)?,
        ))
    };
    let (ground, free) = pair(cfg)?;
    let mut slack = ground.residuals[0] + free.residuals[0];
    if cfg.charge != 0.0 && cfg.n_max > 0 {
        let mut coarse = cfg.clone();
        coarse.n_max -= 1;
        let (g, f) = pair(&coarse)?;
        let here = free.ground() - ground.ground();
        slack += (here - (f.ground() - g.ground())).abs();
    }
    Ok(Some(Binding {
        energy: ground.ground(),
        threshold: free.ground(),
        electronic,
        slack,
        ground,
    }))
}

pub fn binding_experiment(cfg: &ExperimentConfig) -> Outcome {
    run("binding", cfg, |h| {
        let Some(b) = measure_binding(cfg)? else {
            return Ok(Outcome {
                rows: vec![ReportRow::skipped(
                    h,
                    "binding_inequality",
                    "electronic operator has no bound state",
                )],
                series: Vec::new(),
            });
        };
        let gap = 1.0 - b.electronic;
        let mut rows = vec![
            ReportRow::info(h, "ground_energy", b.energy),
            ReportRow::info(h, "ionization_threshold", b.threshold),
            ReportRow::info(h, "electronic_ground", b.electronic),
            ReportRow::info(h, "binding_energy", b.binding_energy()),
            ReportRow::info(h, "binding_slack", b.slack)
                .with_note("eigen residuals + n_max sensitivity"),
            ReportRow::at_least(h, "binding_inequality", b.binding_energy(), gap - b.slack)
                .with_note(format!(
                    "target 1 - inf spec h_V = {gap:.12}, slack {:.3e}",
                    b.slack
                )),
        ];
        if cfg.charge == 0.0 {
            rows.push(
                ReportRow::near(
                    h,
                    "decoupled_binding_identity",
                    b.binding_energy(),
                    gap,
                    DECOUPLED_TOL,
                )
                .with_note("e = 0: both sides are the same operator difference"),
            );
        }
        let strict = b.binding_energy() - b.slack;
        rows.push(
            ReportRow::info(h, "strict_binding_margin", strict).with_note(if strict > 0.0 {
                "strict binding holds on this truncation"
            } else {
                "strict binding not resolved on this truncation"
            }),
        );
        Ok(Outcome {
            rows,
            series: Vec::new(),
        })
    })
}

// ------------------------------------------------------------------- decay

/// `ρ(a) = 1 - sqrt(1 - a²)`, saturating at 1 for `|a| >= 1`.
pub fn rho(a: f64) -> f64 {
    let a = a.abs().min(1.0);
    1.0 - (1.0 - a * a).sqrt()
}

/// Exponential tail fit of `‖φ(x)‖`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayModel {
    pub a_fit: f64,
    pub rho: f64,
    pub window: [f64; 2],
    pub r2: f64,
    /// Power of `r` in the prefactor `r^ν e^{-a r}`.
    pub power: f64,
}

/// Radial profile `(r, sqrt(mean ‖φ(x)‖²))` over shells of width `h`.
pub fn radial_profile(eb: &ElectronBasis, state: &[C64]) -> Vec<(f64, f64)> {
    let per_x = state.len() / eb.grid_dim();
    let h = eb.spacing();
    let mut shells: BTreeMap<i64, (f64, f64, usize)> = BTreeMap::new();
    for x in 0..eb.grid_dim() {
        let w: f64 = state[x * per_x..(x + 1) * per_x]
            .iter()
            .map(|v| v.norm_sqr())
            .sum();
        let r = norm3(eb.point(x));
        let e = shells
            .entry((r / h).round() as i64)
            .or_insert((0.0, 0.0, 0));
        e.0 += r;
        e.1 += w;
        e.2 += 1;
    }
    shells
        .values()
        .map(|(r, w, c)| {
            (
                r / *c as f64,
                (w / *c as f64 / h.powi(eb.d() as i32)).sqrt(),
            )
        })
        .collect()
}

/// Probability mass of points with some `|x_b| >= BOUNDARY_ZONE * L`.
pub fn boundary_mass(eb: &ElectronBasis, state: &[C64]) -> f64 {
    let per_x = state.len() / eb.grid_dim();
    let edge = BOUNDARY_ZONE * eb.box_len();
    (0..eb.grid_dim())
        .filter(|&x| eb.point(x)[..eb.d()].iter().any(|c| c.abs() >= edge))
        .map(|x| {
            state[x * per_x..(x + 1) * per_x]
                .iter()
                .map(|v| v.norm_sqr())
                .sum::<f64>()
        })
        .sum()
}

/// Least squares of `y` on the given basis columns; returns coefficients
/// and `r²`.
pub fn least_squares(columns: &[Vec<f64>], y: &[f64]) -> Option<(Vec<f64>, f64)> {
    let k = columns.len();
    if y.len() <= k {
        return None;
    }
    let mut a = vec![vec![0.0; k + 1]; k];
    for i in 0..k {
        for j in 0..k {
            a[i][j] = columns[i].iter().zip(&columns[j]).map(|(u, v)| u * v).sum();
        }
        a[i][k] = columns[i].iter().zip(y).map(|(u, v)| u * v).sum();
    }
    // Gauss-Jordan with partial pivoting on the normal equations
    for c in 0..k {
        let p = (c..k).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))?;
        a.swap(c, p);
        if a[c][c].abs() < 1e-300 {
            return None;
        }
        for r in 0..k {
            if r != c {
                let f = a[r][c] / a[c][c];
                for j in c..=k {
                    a[r][j] -= f * a[c][j];
                }
            }
        }
    }
    let coef: Vec<f64> = (0..k).map(|i| a[i][k] / a[i][i]).collect();
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let (mut ss_res, mut ss_tot) = (0.0, 0.0);
    for (i, yi) in y.iter().enumerate() {
        let fit: f64 = (0..k).map(|c| coef[c] * columns[c][i]).sum();
        ss_res += (yi - fit).powi(2);
        ss_tot += (yi - mean).powi(2);
    }
    let r2 = if ss_tot > 0.0 {
        1.0 - ss_res / ss_tot
    } else {
        1.0
    };
    Some((coef, r2))
}

/// Fits `log ‖φ‖ = c - a r + ν log r` on the window. With `power = false`
/// the prefactor term is dropped.
pub fn fit_decay(profile: &[(f64, f64)], window: [f64; 2], power: bool) -> Option<DecayModel> {
    let pts: Vec<(f64, f64)> = profile
        .iter()
        .filter(|(r, v)| *r >= window[0] && *r <= window[1] && *v > 0.0)
        .map(|(r, v)| (*r, v.ln()))
        .collect();
    let ones = vec![1.0; pts.len()];
    let rs: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
    let mut cols = vec![ones, rs.clone()];
    if power {
        cols.push(rs.iter().map(|r| r.ln()).collect());
    }
    let (coef, r2) = least_squares(&cols, &ys)?;
    let a = -coef[1];
    Some(DecayModel {
        a_fit: a,
        rho: rho(a),
        window,
        r2,
        power: if power { coef[2] } else { 0.0 },
    })
}

fn default_window(cfg: &ExperimentConfig) -> [f64; 2] {
    cfg.experiment
        .window
        .unwrap_or([0.1 * cfg.box_len, 0.35 * cfg.box_len])
}

pub fn decay_experiment(cfg: &ExperimentConfig) -> (Option<DecayModel>, Outcome) {
    let mut model = None;
    let out = run("decay", cfg, |h| {
        let Some(b) = measure_binding(cfg)? else {
            return Ok(Outcome {
                rows: vec![ReportRow::skipped(
                    h,
                    "decay_fit",
                    "no electronic bound state",
                )],
                series: Vec::new(),
            });
        };
        if b.binding_energy() <= 0.0 {
            return Ok(Outcome {
                rows: vec![ReportRow::skipped(h, "decay_fit", "binding not verified")],
                series: Vec::new(),
            });
        }
        let eb = cfg.electron_basis()?;
        let phi = &b.ground.eigenvectors[0];
        let profile = radial_profile(&eb, phi);
        let mut s = Series::new("decay_profile", &["r", "norm"]);
        for (r, v) in &profile {
            s.push(vec![*r, *v]);
        }
        let window = default_window(cfg);
        let mut rows = Vec::new();
        let Some(fit) = fit_decay(&profile, window, true) else {
            rows.push(ReportRow::failed(
                h,
                "decay_fit_r2",
                "no clean exponential window",
            ));
            return Ok(Outcome {
                rows,
                series: vec![s],
            });
        };
        let r2_row = ReportRow::at_least(h, "decay_fit_r2", fit.r2, DECAY_R2);
        rows.push(if fit.r2 < DECAY_R2 {
            r2_row.with_note("no clean exponential window")
        } else {
            r2_row.with_note(format!("window [{}, {}]", window[0], window[1]))
        });
        rows.push(ReportRow::info(h, "decay_rate", fit.a_fit));
        rows.push(ReportRow::info(h, "decay_prefactor_power", fit.power));
        let eps = b.binding_energy() - rho(fit.a_fit * (1.0 - DECAY_DELTA));
        rows.push(
            ReportRow::at_least(h, "decay_admissibility", eps, 0.0)
                .with_note(format!("Sigma - E - rho(a (1 - {DECAY_DELTA}))")),
        );
        rows.push(ReportRow::at_most(
            h,
            "decay_boundary_mass",
            boundary_mass(&eb, phi),
            TAIL_MASS_LIMIT,
        ));
        if cfg.charge == 0.0 {
            let exact = (1.0 - b.electronic * b.electronic).max(0.0).sqrt();
            rows.push(
                ReportRow::near(
                    h,
                    "decay_rate_decoupled_oracle",
                    fit.a_fit,
                    exact,
                    DECAY_ORACLE_TOL * exact,
                )
                .with_note("sqrt(1 - E0^2) of the electronic operator"),
            );
        }
        model = Some(fit);
        Ok(Outcome {
            rows,
            series: vec![s],
        })
    });
    (model, out)
}

// ------------------------------------------------------------ soft photons

/// Per-mode occupancy profile of one rung of the soft-photon ladder.
#[derive(Clone, Debug)]
pub struct SoftPhotonRung {
    pub m: f64,
    pub k: Vec<f64>,
    pub k_eff: Vec<f64>,
    pub occupancy: Vec<f64>,
    pub density: Vec<f64>,
    /// Same in the Pauli-Fierz gauge.
    pub gauge_density: Vec<f64>,
    pub number_identity: f64,
    pub shells: usize,
    pub derivative: f64,
}

impl SoftPhotonRung {
    pub fn constant(&self) -> f64 {
        max_weighted(&self.density, &self.k_eff)
    }

    pub fn gauge_constant(&self) -> f64 {
        max_weighted(&self.gauge_density, &self.k_eff)
    }
}

fn max_weighted(d: &[f64], k: &[f64]) -> f64 {
    d.iter().zip(k).map(|(a, b)| a * b).fold(0.0, f64::max)
}

fn occupancies(sys: &System, state: &[C64]) -> Vec<f64> {
    (0..sys.modes.len())
        .map(|j| sys.fock.tensor_occupancy(state, j))
        .collect()
}

pub fn soft_photon_rung(cfg: &ExperimentConfig, m: f64) -> Result<SoftPhotonRung> {
    let mut c = cfg.clone();
    c.modes.m = m;
    if let Some(r) = cfg.experiment.eps_ratio {
        c.modes.eps = r * m;
    }
    let sys = c.system()?;
    let r = solve(
        &sys,
        c.model,
        &c.potential,
        c.backend.split(),
        &eigen_options(&c),
    )?;
    let phi = &r.eigenvectors[0];
    let occupancy = occupancies(&sys, phi);
    let vol: Vec<f64> = sys.modes.modes.iter().map(|md| md.cell_volume).collect();
    let k: Vec<f64> = sys.modes.modes.iter().map(|md| norm3(md.k)).collect();
    let density: Vec<f64> = occupancy.iter().zip(&vol).map(|(o, v)| o / v).collect();
    let u = gauge_transform(&sys)?.spinor_unitary(4);
    let mut uphi = vec![C64::new(0.0, 0.0); phi.len()];
    u.mul_vec(phi, &mut uphi);
    let gauge_density: Vec<f64> = occupancies(&sys, &uphi)
        .iter()
        .zip(&vol)
        .map(|(o, v)| o / v)
        .collect();
    let nf = sys.fock.dim();
    let number = sys.fock.dgamma_diagonal(&vec![1.0; sys.modes.len()]);
    let full: Vec<f64> = (0..sys.dim()).map(|i| number[i % nf]).collect();
    let q = quadratic_form(&SparseMatrix::diagonal(&full), phi)?.value;
    let number_identity = (q - occupancy.iter().sum::<f64>()).abs();
    let k_eff: Vec<f64> = sys.modes.modes.iter().map(|md| md.k_eff()).collect();
    // cut cells all sit at |k| = m; their effective momenta still differ
    let mut shells: Vec<f64> = k_eff.clone();
    shells.sort_by(f64::total_cmp);
    shells.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    // finite differences of ρ|k| between face-adjacent cells of one polarization
    let mut derivative = 0.0f64;
    let modes = &sys.modes.modes;
    for i in 0..modes.len() {
        for j in i + 1..modes.len() {
            if modes[i].lambda != modes[j].lambda {
                continue;
            }
            if let (Some(a), Some(b)) = (modes[i].cell(), modes[j].cell()) {
                let dist: i64 = (0..3).map(|t| (a[t] - b[t]).abs()).sum();
                if dist == 1 {
                    let diff = (density[i] * k_eff[i] - density[j] * k_eff[j]).abs();
                    derivative = derivative.max(diff / c.modes.eps);
                }
            }
        }
    }
    Ok(SoftPhotonRung {
        m,
        k,
        k_eff,
        occupancy,
        density,
        gauge_density,
        number_identity,
        shells: shells.len(),
        derivative,
    })
}

/// Growth `max_i C_i / C_0 - 1` of the constant along the ladder, zero when
/// every constant vanishes.
pub fn ladder_drift(c: &[f64]) -> f64 {
    let base = c[0];
    if c.iter().all(|v| v.abs() < 1e-14) {
        return 0.0;
    }
    c.iter()
        .map(|v| v / base.abs().max(1e-300) - 1.0)
        .fold(0.0, f64::max)
}

pub fn soft_photon_experiment(cfg: &ExperimentConfig) -> Outcome {
    run("soft_photon", cfg, |h| {
        let ladder = cfg.experiment.m_ladder.clone().unwrap_or_else(|| {
            let m = cfg.modes.m;
            vec![m, m / 2.0, m / 4.0]
        });
        let rungs = par_map(&ladder, |&m| soft_photon_rung(cfg, m))
            .into_iter()
            .collect::<Result<Vec<_>>>()?;
        let mut rows = Vec::new();
        let mut s = Series::new(
            "softphoton_profile",
            &[
                "m",
                "mode",
                "k",
                "k_eff",
                "occupancy",
                "density_k",
                "gauge_density_k",
            ],
        );
        for r in &rungs {
            for j in 0..r.k.len() {
                s.push(vec![
                    r.m,
                    j as f64,
                    r.k[j],
                    r.k_eff[j],
                    r.occupancy[j],
                    r.density[j] * r.k_eff[j],
                    r.gauge_density[j] * r.k_eff[j],
                ]);
            }
            rows.push(ReportRow::info(
                h,
                &format!("softphoton_constant_m{}", r.m),
                r.constant(),
            ));
            rows.push(ReportRow::info(
                h,
                &format!("softphoton_gauge_constant_m{}", r.m),
                r.gauge_constant(),
            ));
            rows.push(ReportRow::at_most(
                h,
                &format!("photon_number_identity_m{}", r.m),
                r.number_identity,
                1e-10,
            ));
            rows.push(
                ReportRow::info(h, &format!("photon_derivative_m{}", r.m), r.derivative)
                    .with_note("finite differences between adjacent cells; reported only"),
            );
        }
        if rungs.iter().any(|r| r.shells < 3) {
            rows.push(ReportRow::skipped(
                h,
                "softphoton_drift",
                "fewer than 3 momentum shells: inconclusive",
            ));
        } else {
            let c: Vec<f64> = rungs.iter().map(SoftPhotonRung::constant).collect();
            let g: Vec<f64> = rungs.iter().map(SoftPhotonRung::gauge_constant).collect();
            rows.push(ReportRow::at_most(
                h,
                "softphoton_drift",
                ladder_drift(&c),
                SOFT_PHOTON_DRIFT,
            ));
            rows.push(ReportRow::at_most(
                h,
                "softphoton_gauge_drift",
                ladder_drift(&g),
                SOFT_PHOTON_DRIFT,
            ));
        }
        Ok(Outcome {
            rows,
            series: vec![s],
        })
    })
}

// ------------------------------------------------------------- convergence

fn ladder_name(p: LadderParameter) -> &'static str {
    match p {
        LadderParameter::M => "m",
        LadderParameter::Eps => "eps",
        LadderParameter::NMax => "n_max",
        LadderParameter::N => "n",
    }
}

/// The config with one ladder parameter replaced.
pub fn with_parameter(cfg: &ExperimentConfig, p: LadderParameter, v: f64) -> ExperimentConfig {
    let mut c = cfg.clone();
    match p {
        LadderParameter::M => c.modes.m = v,
        LadderParameter::Eps => c.modes.eps = v,
        LadderParameter::NMax => c.n_max = v.round() as usize,
        LadderParameter::N => c.n = v.round() as usize,
    }
    c
}

/// One rung: `E`, `Σ` and `<φ, H_f² φ>`.
pub fn convergence_rung(cfg: &ExperimentConfig) -> Result<[f64; 3]> {
    let sys = cfg.system()?;
    let split = cfg.backend.split();
    let opts = eigen_options(cfg);
    let g = solve(&sys, cfg.model, &cfg.potential, split, &opts)?;
    let f = solve(&sys, cfg.model, &PotentialSpec::None, split, &opts)?;
    let hf = sys.field_energy_diagonal();
    let moment: f64 = g.eigenvectors[0]
        .iter()
        .zip(&hf)
        .map(|(v, w)| v.norm_sqr() * w * w)
        .sum();
    Ok([g.ground(), f.ground(), moment])
}

pub fn convergence_sweep(cfg: &ExperimentConfig, ladder: &Ladder) -> Outcome {
    let name = ladder_name(ladder.parameter);
    run(&format!("converge_{name}"), cfg, |h| {
        if ladder.values.len() < 3 {
            return Err(LabError::InvalidParameter(
                "a convergence ladder needs at least 3 rungs".into(),
            ));
        }
        let configs: Vec<ExperimentConfig> = ladder
            .values
            .iter()
            .map(|&v| with_parameter(cfg, ladder.parameter, v))
            .collect();
        for c in &configs {
            let p = c.problems();
            if !p.is_empty() {
                return Err(LabError::MalformedConfig(p));
            }
        }
        let vals = par_map(&configs, convergence_rung)
            .into_iter()
            .collect::<Result<Vec<_>>>()?;
        let tol = cfg.experiment.cauchy_tol.unwrap_or(CAUCHY_TOL);
        let mut s = Series::new(
            &format!("converge_{name}"),
            &[name, "energy", "threshold", "field_moment", "cauchy_diff"],
        );
        let diffs: Vec<f64> = vals.windows(2).map(|w| (w[1][0] - w[0][0]).abs()).collect();
        for (i, v) in vals.iter().enumerate() {
            let d = if i == 0 { f64::NAN } else { diffs[i - 1] };
            s.push(vec![ladder.values[i], v[0], v[1], v[2], d]);
        }
        let last = diffs[diffs.len() - 1];
        let prev = diffs[diffs.len() - 2];
        let sdiff = (vals[vals.len() - 1][1] - vals[vals.len() - 2][1]).abs();
        let mut rows = vec![
            ReportRow::at_most(h, &format!("converge_{name}_final_diff"), last, tol),
            ReportRow::at_most(
                h,
                &format!("converge_{name}_cauchy_ratio"),
                if prev > 0.0 {
                    last / prev
                } else if last > 0.0 {
                    f64::INFINITY
                } else {
                    0.0
                },
                1.0,
            )
            .with_note(format!("diffs {diffs:?}")),
            ReportRow::info(h, &format!("converge_{name}_threshold_diff"), sdiff),
        ];
        for (i, v) in vals.iter().enumerate() {
            rows.push(ReportRow::info(
                h,
                &format!("converge_{name}_field_moment_{}", ladder.values[i]),
                v[2],
            ));
        }
        Ok(Outcome {
            rows,
            series: vec![s],
        })
    })
}

/// Default ladders when the config names none: halving m and eps, and
/// n_max up to the configured cap.
pub fn default_ladders(cfg: &ExperimentConfig) -> Vec<Ladder> {
    let m = cfg.modes.m;
    let e = cfg.modes.eps;
    let top = cfg.n_max.max(3) as f64;
    vec![
        Ladder {
            parameter: LadderParameter::M,
            values: vec![m, m / 2.0, m / 4.0],
        },
        Ladder {
            parameter: LadderParameter::Eps,
            values: vec![e, e / 2.0, e / 4.0],
        },
        Ladder {
            parameter: LadderParameter::NMax,
            values: vec![top - 2.0, top - 1.0, top],
        },
    ]
}

pub fn convergence_sweeps(cfg: &ExperimentConfig) -> Outcome {
    let ladders = cfg
        .experiment
        .ladders
        .clone()
        .unwrap_or_else(|| default_ladders(cfg));
    let mut out = Outcome::default();
    for l in &ladders {
        out.extend(convergence_sweep(cfg, l));
    }
    out
}

// ----------------------------------------------------------- supercritical

/// Critical coupling: `2/π` for `pf`, `2/(2/π + π/2)` for `np`.
pub fn critical_coupling(model: Model) -> f64 {
    use std::f64::consts::PI;
    match model {
        Model::Pf => 2.0 / PI,
        Model::Np => 2.0 / (2.0 / PI + PI / 2.0),
    }
}

/// Ground energies of the decoupled Coulomb operator along the grid ladder
/// and the least-squares slope of E against ln n over the last three rungs.
pub fn coulomb_ladder(cfg: &ExperimentConfig, gamma: f64, ns: &[usize]) -> Result<(Vec<f64>, f64)> {
    let opts = EigenOptions::new(1, cfg.solver.tol.max(1e-8)).with_seed(cfg.seed);
    let v = PotentialSpec::Coulomb { gamma };
    let e = par_map(ns, |&n| {
        let eb = ElectronBasis::new(cfg.d, cfg.box_len, n)?;
        Ok(electronic_spectrum(&eb, cfg.model, &v, &opts)?.ground())
    })
    .into_iter()
    .collect::<Result<Vec<f64>>>()?;
    let k = ns.len();
    let xs: Vec<f64> = ns[k - 3..].iter().map(|&n| (n as f64).ln()).collect();
    let (coef, _) = least_squares(&[vec![1.0; 3], xs], &e[k - 3..])
        .ok_or_else(|| LabError::InvalidParameter("degenerate grid ladder".into()))?;
    Ok((e, coef[1]))
}

pub fn supercritical_probe(cfg: &ExperimentConfig) -> Outcome {
    run("supercritical", cfg, |h| {
        let ns = cfg
            .experiment
            .n_ladder
            .clone()
            .unwrap_or_else(|| vec![12, 16, 20, 24]);
        if ns.len() < 4 {
            return Ok(Outcome {
                rows: vec![ReportRow::skipped(
                    h,
                    "supercritical",
                    "ladder shorter than 4 rungs: inconclusive",
                )],
                series: Vec::new(),
            });
        }
        let gc = critical_coupling(cfg.model);
        let gammas = cfg.experiment.gammas.clone().unwrap_or_default();
        let note = "decoupled electronic operator (e = 0)";
        let mut rows = Vec::new();
        let mut cols = vec!["gamma".to_string(), "slope".to_string()];
        cols.extend(ns.iter().map(|n| format!("e_n{n}")));
        let col_refs: Vec<&str> = cols.iter().map(String::as_str).collect();
        let mut s = Series::new("supercritical", &col_refs);
        let record = |g: f64, e: &[f64], slope: f64, s: &mut Series| {
            let mut row = vec![g, slope];
            row.extend_from_slice(e);
            s.push(row);
        };
        for &g in &gammas {
            let (e, slope) = coulomb_ladder(cfg, g, &ns)?;
            record(g, &e, slope, &mut s);
            let name = format!("supercritical_slope_g{g}");
            let row = if g > gc + BRACKET_WIDTH {
                ReportRow::at_most(h, &name, slope, COLLAPSE_SLOPE).with_note("collapse expected")
            } else if g < gc - BRACKET_WIDTH {
                ReportRow::at_least(h, &name, slope, COLLAPSE_SLOPE).with_note("stable expected")
            } else {
                ReportRow::info(h, &name, slope).with_note("near critical coupling")
            };
            rows.push(row);
        }
        let [mut lo, mut hi] = cfg.experiment.bracket.unwrap_or([0.5, 1.5]);
        let collapses = |g: f64, s: &mut Series| -> Result<bool> {
            let (e, slope) = coulomb_ladder(cfg, g, &ns)?;
            record(g, &e, slope, s);
            Ok(slope < COLLAPSE_SLOPE)
        };
        if collapses(lo, &mut s)? || !collapses(hi, &mut s)? {
            rows.push(
                ReportRow::failed(
                    h,
                    "supercritical_bracket",
                    "initial bracket does not straddle the transition",
                )
                .with_note(note),
            );
        } else {
            while hi - lo > BRACKET_WIDTH {
                let mid = 0.5 * (lo + hi);
                if collapses(mid, &mut s)? {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            rows.push(ReportRow::info(h, "supercritical_bracket_lo", lo).with_note(note));
            rows.push(ReportRow::info(h, "supercritical_bracket_hi", hi).with_note(note));
            rows.push(ReportRow::at_most(
                h,
                "supercritical_bracket_width",
                hi - lo,
                BRACKET_WIDTH,
            ));
            rows.push(
                ReportRow::near(
                    h,
                    "supercritical_bracket_contains_critical",
                    gc,
                    0.5 * (lo + hi),
                    0.5 * (hi - lo),
                )
                .with_note(format!("critical coupling {gc:.4}")),
            );
        }
        Ok(Outcome {
            rows,
            series: vec![s],
        })
    })
}

// ------------------------------------------------------------------ fibers

pub fn fiber_experiment(cfg: &ExperimentConfig) -> Outcome {
    run("fiber", cfg, |h| {
        let grid = cfg
            .experiment
            .p_grid
            .clone()
            .unwrap_or_else(|| (0..11).map(|i| -0.5 + 0.1 * i as f64).collect());
        let ms = cfg.mode_set()?;
        let fb = FockBasis::new(ms.len(), cfg.n_max)?;
        let kind = match cfg.model {
            Model::Pf => FiberKind::Pf,
            Model::Np => FiberKind::Np,
        };
        let energies = par_map(&grid, |&p| -> Result<f64> {
            let f = fiber_hamiltonian(&fb, &ms, [p, 0.0, 0.0], kind, cfg.d)?;
            Ok(hermitian_eigenvalues(&f.matrix)?[0])
        })
        .into_iter()
        .collect::<Result<Vec<f64>>>()?;
        let mut s = Series::new("fiber", &["p", "energy"]);
        for (p, e) in grid.iter().zip(&energies) {
            s.push(vec![*p, *e]);
        }
        let mut even = 0.0f64;
        for (i, p) in grid.iter().enumerate() {
            if let Some(j) = grid.iter().position(|q| (q + p).abs() < 1e-12) {
                even = even.max((energies[i] - energies[j]).abs());
            }
        }
        let min = energies.iter().cloned().fold(f64::INFINITY, f64::min);
        let sigma = solve(
            &cfg.system()?,
            cfg.model,
            &PotentialSpec::None,
            cfg.backend.split(),
            &eigen_options(cfg),
        )?
        .ground();
        Ok(Outcome {
            rows: vec![
                ReportRow::at_most(h, "fiber_evenness", even, 1e-10),
                ReportRow::info(h, "fiber_minimum", min),
                ReportRow::near(h, "fiber_threshold_agreement", sigma, min, FIBER_TOL)
                    .with_note("Sigma of the full operator vs min over fibers"),
            ],
            series: vec![s],
        })
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(charge: f64) -> ExperimentConfig {
        let mut cfg = ExperimentConfig::desk();
        cfg.n = 16;
        cfg.box_len = 16.0;
        cfg.n_max = 1;
        cfg.charge = charge;
        cfg
    }

    #[test]
    fn rho_limits() {
        assert_eq!(rho(0.0), 0.0);
        assert!((rho(1.0 - 1e-12) - 1.0).abs() < 1e-5);
        assert!((rho(0.6) - 0.2).abs() < 1e-15);
    }

    #[test]
    fn fit_recovers_planted_tail() {
        let prof: Vec<(f64, f64)> = (1..60)
            .map(|i| {
                let r = i as f64 * 0.5;
                (r, 3.0 * r.powf(0.7) * (-0.45 * r).exp())
            })
            .collect();
        let m = fit_decay(&prof, [4.0, 25.0], true).unwrap();
        assert!((m.a_fit - 0.45).abs() < 1e-10);
        assert!((m.power - 0.7).abs() < 1e-9);
        assert!(m.r2 > 0.999_999);
    }

    #[test]
    fn decoupled_binding_is_exact() {
        let out = binding_experiment(&tiny(0.0));
        let row = out
            .rows
            .iter()
            .find(|r| r.observable == "decoupled_binding_identity")
            .unwrap();
        assert!(row.passed(), "{row:?}");
        assert!(out.rows.iter().all(ReportRow::passed));
    }

    #[test]
    fn unbound_potential_is_skipped() {
        let mut cfg = tiny(0.0);
        cfg.potential = PotentialSpec::None;
        let out = binding_experiment(&cfg);
        assert_eq!(out.rows[0].status, super::super::Status::Skipped);
    }

    #[test]
    fn decoupled_photons_have_no_occupancy() {
        let mut cfg = tiny(0.0);
        cfg.n = 8;
        cfg.box_len = 8.0;
        let r = soft_photon_rung(&cfg, 0.2).unwrap();
        assert!(r.occupancy.iter().all(|o| o.abs() < 1e-20));
        assert_eq!(ladder_drift(&[0.0, 0.0]), 0.0);
    }

    #[test]
    fn decoupled_n_max_ladder_is_flat() {
        let mut cfg = tiny(0.0);
        cfg.n = 8;
        cfg.box_len = 8.0;
        let out = convergence_sweep(
            &cfg,
            &Ladder {
                parameter: LadderParameter::NMax,
                values: vec![0.0, 1.0, 2.0],
            },
        );
        let s = &out.series[0];
        for r in &s.rows {
            assert!((r[1] - s.rows[0][1]).abs() < 1e-10);
        }
    }
}
