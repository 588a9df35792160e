use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use qedlab::lab::{
    self, all_passed, load_config, persist_report, Backend, ExperimentConfig, Outcome, ReportRow,
    Tier,
};

#[derive(Parser)]
#[command(
    name = "qedlab",
    version,
    about = "Spectral experiments on truncated QED Hamiltonians"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON experiment config; the built-in desk config when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for report.csv, report.json and series.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, value_enum, default_value_t = TierArg::Fast)]
    tier: TierArg,
    /// Overrides the config's spectral-split backend.
    #[arg(long, global = true, value_enum)]
    backend: Option<BackendArg>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Algebraic, split, block-identity, diamagnetic, relative-bound and
    /// symmetry checks.
    Verify,
    /// Lowest eigenpairs of the configured model.
    Spectrum,
    /// Binding inequality against the electronic comparison operator.
    Binding,
    /// Exponential tail fit of the ground state.
    Decay,
    /// Occupancy density profile along an infra-red ladder.
    Softphoton,
    /// Cauchy trends along m, eps, n_max or n ladders.
    Converge,
    /// Stability of Coulomb couplings under grid refinement.
    Supercritical,
    /// Fiber energies over total momentum.
    Fiber,
}

#[derive(ValueEnum, Clone, Copy)]
enum TierArg {
    Fast,
    Full,
}

#[derive(ValueEnum, Clone, Copy)]
enum BackendArg {
    Dense,
    Quadrature,
}

fn run(cli: &Cli) -> qedlab::Result<bool> {
    let mut cfg = match &cli.config {
        Some(p) => load_config(p)?,
        None => ExperimentConfig::desk(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(b) = cli.backend {
        cfg.backend = match b {
            BackendArg::Dense => Backend::Dense,
            BackendArg::Quadrature => Backend::Quadrature,
        };
    }
    let tier = match cli.tier {
        TierArg::Fast => Tier::Fast,
        TierArg::Full => Tier::Full,
    };
    std::fs::create_dir_all(&cli.out)?;
    let out = match cli.command {
        Command::Verify => Outcome {
            rows: lab::run_verification_suite(&cfg, tier),
            series: Vec::new(),
        },
        Command::Spectrum => {
            let (r, out) = lab::spectrum_experiment(&cfg);
            if let Some(r) = r {
                std::fs::write(cli.out.join("spectrum.json"), r.to_json()?)?;
                r.write_eigenvectors(&cli.out.join("eigenvectors"))?;
            }
            out
        }
        Command::Binding => lab::binding_experiment(&cfg),
        Command::Decay => {
            let (m, out) = lab::decay_experiment(&cfg);
            if let Some(m) = m {
                std::fs::write(
                    cli.out.join("decay_model.json"),
                    serde_json::to_string_pretty(&m)?,
                )?;
            }
            out
        }
        Command::Softphoton => lab::soft_photon_experiment(&cfg),
        Command::Converge => lab::convergence_sweeps(&cfg),
        Command::Supercritical => lab::supercritical_probe(&cfg),
        Command::Fiber => lab::fiber_experiment(&cfg),
    };
    persist_report(&out.rows, &cli.out)?;
    out.write_series(&cli.out)?;
    print_rows(&out.rows);
    Ok(all_passed(&out.rows))
}

fn print_rows(rows: &[ReportRow]) {
    for r in rows {
        println!(
            "{:<8} {:<48} value={:<14.6e} target={:<12.4e} tol={:<10.2e} {}",
            r.status.to_string(),
            r.observable,
            r.value,
            r.target,
            r.tolerance,
            r.note
        );
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
