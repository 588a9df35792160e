//! Experiment runner: configuration, ground-state solves, the verification
//! suite, physics experiments and report persistence.

pub mod config;
pub mod experiments;
pub mod report;
pub mod verify;

use std::sync::Mutex;

use faer::Mat;

pub use config::{
    load_config, save_config, Backend, ExperimentConfig, ExperimentParams, Ladder, LadderParameter,
    Model, ModesConfig, SolverConfig, SCHEMA_VERSION,
};
pub use experiments::{
    binding_experiment, convergence_sweep, convergence_sweeps, decay_experiment, fiber_experiment,
    rho, soft_photon_experiment, spectrum_experiment, supercritical_probe, DecayModel, Outcome,
};
pub use report::{all_passed, persist_report, ReportRow, Series, Status};
pub use verify::{kato_constant, kato_tix_rows, run_verification_suite, Tier};

use crate::electron::{ElectronBasis, MultiplierPlusPotential, PotentialSpec};
use crate::error::Result;
use crate::hamiltonians::{
    assemble_dirac, assemble_no_pair, assemble_pauli_fierz, spectral_split, BrownRavenhall,
    DenseHermitian, NoPairOperator, PauliFierzOperator, SplitBackend, System,
};
use crate::linalg::{FactorShape, C64, ZERO};
use crate::spectral::{
    degeneracy_groups, lowest_eigenpairs_with, EigenOptions, SpectralResult, DEGENERACY_TOL,
    DENSE_THRESHOLD,
};

/// Accuracy of the Chebyshev expansions inside matrix-free operators.
const EXPANSION_TOL: f64 = 1e-12;

/// Level of the spurious `Ran P-` block in the matrix-free no-pair operator.
const NO_PAIR_SHIFT: f64 = 8.0;

/// Lowest eigenpairs of the configured model on `sys`. Small spaces are split
/// and diagonalized densely; larger ones use Chebyshev-expanded `|D_A|` or
/// `sign(D_A)` inside Lanczos. No-pair eigenvectors are returned on the full
/// space, inside `Ran P+`.
pub fn solve(
    sys: &System,
    model: Model,
    v: &PotentialSpec,
    backend: SplitBackend,
    opts: &EigenOptions,
) -> Result<SpectralResult> {
    let d = assemble_dirac(sys)?;
    if sys.dim() < DENSE_THRESHOLD {
        let split = spectral_split(&d, backend)?;
        return match model {
            Model::Pf => lowest_eigenpairs_with(&assemble_pauli_fierz(sys, v, &split)?, opts),
            Model::Np => {
                let np = assemble_no_pair(sys, &d, v, &split)?;
                let u = &np.basis_plus;
                let h = DenseHermitian {
                    shape: FactorShape {
                        electron: 1,
                        spinor: 1,
                        fock: u.ncols(),
                    },
                    matrix: np.h_plus,
                };
                let mut r = lowest_eigenpairs_with(&h, opts)?;
                r.eigenvectors = r.eigenvectors.iter().map(|c| lift(u, c)).collect();
                Ok(r)
            }
        };
    }
    match model {
        Model::Pf => {
            let h = PauliFierzOperator::new(sys, &d, v, EXPANSION_TOL)?;
            lowest_eigenpairs_with(&h, opts)
        }
        Model::Np => {
            let h = NoPairOperator::new(sys, &d, v, NO_PAIR_SHIFT, EXPANSION_TOL)?;
            lowest_eigenpairs_with(&h, opts)
        }
    }
}

fn lift(u: &Mat<C64>, c: &[C64]) -> Vec<C64> {
    let mut out = vec![ZERO; u.nrows()];
    for (j, cj) in c.iter().enumerate() {
        for (i, o) in out.iter_mut().enumerate() {
            *o += u[(i, j)] * cj;
        }
    }
    out
}

/// Eigen options from a config.
pub fn eigen_options(cfg: &ExperimentConfig) -> EigenOptions {
    EigenOptions::new(cfg.solver.count, cfg.solver.tol).with_seed(cfg.seed)
}

/// Ground states of the config's model with its potential.
pub fn solve_config(cfg: &ExperimentConfig) -> Result<SpectralResult> {
    solve(
        &cfg.system()?,
        cfg.model,
        &cfg.potential,
        cfg.backend.split(),
        &eigen_options(cfg),
    )
}

/// Lowest eigenvalues of the electronic comparison operator: `sqrt(p^2+1)+V`
/// for `pf`, the Brown-Ravenhall operator for `np`.
pub fn electronic_spectrum(
    eb: &ElectronBasis,
    model: Model,
    v: &PotentialSpec,
    opts: &EigenOptions,
) -> Result<SpectralResult> {
    match model {
        Model::Pf => {
            let h = MultiplierPlusPotential {
                basis: eb,
                symbol: eb.symbol(|p| (p[0] * p[0] + p[1] * p[1] + p[2] * p[2] + 1.0).sqrt()),
                potential: v.values(eb)?,
            };
            lowest_eigenpairs_with(&h, opts)
        }
        Model::Np => lowest_eigenpairs_with(&BrownRavenhall::new(eb, v)?, opts),
    }
}

/// Rebuilds degeneracy groups after eigenvalues were edited.
pub fn regroup(r: &mut SpectralResult) {
    r.groups = degeneracy_groups(&r.eigenvalues, DEGENERACY_TOL);
}

/// Ordered parallel map over a bounded pool of scoped threads.
pub fn par_map<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    let workers = std::thread::available_parallelism()
        .map_or(1, |n| n.get())
        .min(items.len())
        .max(1);
    let next = Mutex::new(0usize);
    let slots: Vec<Mutex<Option<R>>> = items.iter().map(|_| Mutex::new(None)).collect();
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = {
                    let mut n = next.lock().unwrap();
                    let i = *n;
                    *n += 1;
                    i
                };
                if i >= items.len() {
                    break;
                }
                let r = f(&items[i]);
                *slots[i].lock().unwrap() = Some(r);
            });
        }
    });
    slots
        .into_iter()
        .map(|s| s.into_inner().unwrap().expect("every slot filled"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(charge: f64) -> ExperimentConfig {
        let mut cfg = ExperimentConfig::desk();
        cfg.n = 8;
        cfg.box_len = 8.0;
        cfg.n_max = 1;
        cfg.charge = charge;
        cfg
    }

    #[test]
    fn decoupled_ground_equals_electronic() {
        for model in [Model::Pf, Model::Np] {
            let mut cfg = tiny(0.0);
            cfg.model = model;
            let e = solve_config(&cfg).unwrap().ground();
            let el = electronic_spectrum(
                &cfg.electron_basis().unwrap(),
                model,
                &cfg.potential,
                &eigen_options(&cfg),
            )
            .unwrap()
            .ground();
            assert!((e - el).abs() < 1e-9, "{model:?}: {e} vs {el}");
        }
    }

    #[test]
    fn matrix_free_agrees_with_dense() {
        let cfg = tiny(0.5);
        let sys = cfg.system().unwrap();
        for model in [Model::Pf, Model::Np] {
            let dense = solve(
                &sys,
                model,
                &cfg.potential,
                SplitBackend::DenseEig,
                &eigen_options(&cfg),
            )
            .unwrap();
            let d = assemble_dirac(&sys).unwrap();
            let opts = eigen_options(&cfg).iterative();
            let free = match model {
                Model::Pf => lowest_eigenpairs_with(
                    &PauliFierzOperator::new(&sys, &d, &cfg.potential, EXPANSION_TOL).unwrap(),
                    &opts,
                ),
                Model::Np => lowest_eigenpairs_with(
                    &NoPairOperator::new(&sys, &d, &cfg.potential, NO_PAIR_SHIFT, EXPANSION_TOL)
                        .unwrap(),
                    &opts,
                ),
            }
            .unwrap();
            assert!((dense.ground() - free.ground()).abs() < 1e-8);
        }
    }

    #[test]
    fn par_map_keeps_order() {
        let v: Vec<usize> = (0..37).collect();
        assert_eq!(
            par_map(&v, |x| x * x),
            v.iter().map(|x| x * x).collect::<Vec<_>>()
        );
    }
}
