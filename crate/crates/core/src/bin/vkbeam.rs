use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use vkbeam::config;
use vkbeam::experiments::{
    cmd_assemble, cmd_sfd_table, cmd_simulate, cmd_spectrum, cmd_ssm_suite, Experiment, RunManifest,
    SfdTableSpec, SimulateSpec, SpectrumSpec, SsmExperiment, SsmSuiteSpec, SystemKind,
};
use vkbeam::spectra::EigenMode;
use vkbeam::ssm::W1Normalization;
use vkbeam::Error;

/// Slow-fast and spectral-submanifold reduction of a von Kármán beam.
///
/// Exit codes: 0 success, 2 configuration error, 3 numerical failure,
/// 4 resonance abort.
#[derive(Parser)]
#[command(name = "vkbeam", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Beam configuration (key = value file).
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Write M1, K1, M2, K2 in coordinate format and a size summary.
    Assemble {
        #[command(flatten)]
        common: Common,
        /// Override the configured thickness ratio.
        #[arg(long)]
        eps: Option<f64>,
    },
    /// Reduction-error grid over thickness ratios and SFD orders.
    SfdTable {
        #[command(flatten)]
        common: Common,
        /// Comma-separated thickness ratios.
        #[arg(long, value_delimiter = ',', default_values_t = [1e-4, 1e-3, 1e-2])]
        eps: Vec<f64>,
        /// Comma-separated SFD orders.
        #[arg(long, value_delimiter = ',', default_values_t = [0u8, 1, 2])]
        order: Vec<u8>,
        /// Concurrent cells.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Horizon in forcing periods.
        #[arg(long, default_value_t = 10.0)]
        periods: f64,
        /// Uniform comparison samples.
        #[arg(long, default_value_t = 1000)]
        samples: usize,
    },
    /// Damped spectrum, spectral quotients and the non-resonance report.
    Spectrum {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        eps: Option<f64>,
        /// Eigenvalues: `exact` roots or the small-damping `approx`.
        #[arg(long, default_value = "exact")]
        mode: String,
        /// Master mode (one-based).
        #[arg(long, default_value_t = 1)]
        master: usize,
    },
    /// SSM trajectory experiments on the unforced beam.
    SsmSuite {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        eps: Option<f64>,
        /// on-ssm, off-ssm or off-slow-manifold.
        #[arg(long, default_value = "off-slow-manifold")]
        experiment: String,
        /// System integrated: `full` or `rom`.
        #[arg(long, default_value = "full")]
        mode: String,
        /// SFD order of the model the SSM is computed for.
        #[arg(long, default_value_t = 1)]
        order: u8,
        /// Master mode (one-based).
        #[arg(long, default_value_t = 1)]
        master: usize,
        #[arg(long, default_value_t = 0.3)]
        rho0: f64,
        #[arg(long, default_value_t = 0.0)]
        theta0: f64,
        /// Off-SSM kick in the enslaved mode.
        #[arg(long, default_value_t = 0.5)]
        delta: f64,
        /// Enslaved mode receiving the kick (one-based).
        #[arg(long, default_value_t = 2)]
        kicked_mode: usize,
        /// Use unit instead of eigenvalue scaling of the linear part.
        #[arg(long)]
        unit_normalization: bool,
        #[arg(long, default_value_t = 150.0)]
        tau_end: f64,
    },
    /// Forced response from rest of the full or reduced beam.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        eps: Option<f64>,
        /// `full` or `rom`.
        #[arg(long, default_value = "full")]
        mode: String,
        /// SFD order for `rom`.
        #[arg(long, default_value_t = 1)]
        order: u8,
        /// Horizon in forcing periods.
        #[arg(long, default_value_t = 10.0)]
        periods: f64,
        #[arg(long, default_value_t = 1)]
        record_every: usize,
    },
}

fn one_based(name: &str, v: usize) -> vkbeam::Result<usize> {
    v.checked_sub(1).ok_or_else(|| Error::InvalidArgument(format!("--{name} is one-based")))
}

fn run(cli: Cli) -> vkbeam::Result<String> {
    let load = |common: &Common, eps: Option<f64>| -> vkbeam::Result<_> {
        let mut c = config::load(&common.config).map_err(|e| match e {
            Error::Io(io) => Error::InvalidConfig(format!("{}: {io}", common.config.display())),
            other => other,
        })?;
        if let Some(e) = eps {
            c = c.with_eps(e);
            c.validate()?;
        }
        Ok(c)
    };
    match cli.command {
        Command::Assemble { common, eps } => {
            let m = RunManifest::new(load(&common, eps)?, Experiment::Assemble, &common.out);
            let s = cmd_assemble(&m)?;
            Ok(format!("n_s = {}, n_f = {}, zeta = {:.6}, omega01 = {:.6}", s.n_s, s.n_f, s.zeta, s.omega01))
        }
        Command::SfdTable { common, eps, order, jobs, periods, samples } => {
            let spec = SfdTableSpec { eps, orders: order, periods, samples };
            let m = RunManifest::new(load(&common, None)?, Experiment::SfdTable(spec), &common.out);
            let t = cmd_sfd_table(&m, jobs)?;
            let mut out = String::from("eps");
            for o in &t.orders {
                out.push_str(&format!("\tE{o} [%]"));
            }
            for (e, row) in t.eps.iter().zip(&t.errors) {
                out.push_str(&format!("\n{e:e}"));
                for v in row {
                    out.push_str(&v.map_or("\tfailed".into(), |v| format!("\t{v:.4e}")));
                }
            }
            if !t.failures.is_empty() {
                return Err(Error::InvalidArgument(format!("{out}\nfailed cells:\n{}", t.failures.join("\n"))));
            }
            Ok(out)
        }
        Command::Spectrum { common, eps, mode, master } => {
            let spec = SpectrumSpec { master: one_based("master", master)?, mode: mode.parse::<EigenMode>()? };
            let m = RunManifest::new(load(&common, eps)?, Experiment::Spectrum(spec), &common.out);
            let r = cmd_spectrum(&m)?;
            Ok(format!(
                "first ratio = {:.4}, sigma = {}\n{}",
                r.quotients.successive.first().copied().unwrap_or(f64::NAN),
                r.quotients.sigma,
                r.resonance
            ))
        }
        Command::SsmSuite {
            common,
            eps,
            experiment,
            mode,
            order,
            master,
            rho0,
            theta0,
            delta,
            kicked_mode,
            unit_normalization,
            tau_end,
        } => {
            let mut spec = SsmSuiteSpec::new(experiment.parse::<SsmExperiment>()?);
            spec.system = mode.parse::<SystemKind>()?;
            spec.order = order;
            spec.master = one_based("master", master)?;
            spec.kicked_mode = one_based("kicked-mode", kicked_mode)?;
            spec.rho0 = rho0;
            spec.theta0 = theta0;
            spec.delta = delta;
            spec.tau_end = tau_end;
            spec.late = (0.6 * tau_end, tau_end);
            if unit_normalization {
                spec.normalization = W1Normalization::Unit;
            }
            let m = RunManifest::new(load(&common, eps)?, Experiment::SsmSuite(spec), &common.out);
            let r = cmd_ssm_suite(&m)?;
            let mut out = format!(
                "lambda = {:.6} {:+.6}i, beta = {:.6} {:+.6}i",
                r.polar.re_lambda, r.polar.im_lambda, r.polar.re_beta, r.polar.im_beta
            );
            if let Some(f) = r.fit_full {
                out.push_str(&format!("\ndecay rates: initial {:.4}, final {:.4}", f.initial_rate, f.final_rate));
            }
            if r.bound_violated {
                out.push_str("\nwarning: trajectory leaves the residual bound around the SSM");
            }
            Ok(out)
        }
        Command::Simulate { common, eps, mode, order, periods, record_every } => {
            let spec = SimulateSpec { system: mode.parse()?, order, periods, record_every };
            let m = RunManifest::new(load(&common, eps)?, Experiment::Simulate(spec), &common.out);
            let t = cmd_simulate(&m)?;
            Ok(format!("{} samples, {} steps, {} Newton iterations", t.len(), t.stats.steps, t.stats.newton_iterations))
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(msg) => {
            println!("{msg}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
