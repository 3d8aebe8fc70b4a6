//! Experiment drivers behind the command-line tool. Each run writes its
//! manifest first, then its datasets.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::DVector;
use num_complex::Complex64 as C;
use rayon::prelude::*;

use crate::beam::{assemble, AssembledBeam, BeamConfig, ForcingSpec};
use crate::config;
use crate::dynamics::{
    fit_decay_rates, integrate_full, integrate_polar, integrate_rom, lift_sfd, reduction_error,
    uniform_samples, DecayFit, FullBeamSystem, IntegratorSettings, Trajectory,
};
use crate::error::{Error, Result};
use crate::io::{content_hash, fmt_f64, matrix_coordinate, trajectory_table, write_atomic, CsvTable};
use crate::sfd::SlowManifold;
use crate::spectra::{
    check_nonresonance, damped_eigenvalues, spectral_quotients, spectrum_csv, EigenMode, ModalData,
    ResonanceReport, SpectralQuotients,
};
use crate::ssm::{
    compute_ssm, invariance_residual, reduced_dynamics, ssm_diagnostics, DiagonalizedSystem,
    PolarDynamics, SsmDistance, SsmExpansion, W1Normalization,
};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Highest resonance order that aborts an SSM run.
pub const ABORT_RESONANCE_ORDER: u64 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SystemKind {
    Full,
    Rom,
}

impl FromStr for SystemKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(Self::Full),
            "rom" => Ok(Self::Rom),
            other => Err(Error::InvalidArgument(format!("unknown system `{other}` (full, rom)"))),
        }
    }
}

impl std::fmt::Display for SystemKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Full => "full",
            Self::Rom => "rom",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SsmExperiment {
    OnSsm,
    OffSsm,
    OffSlowManifold,
}

impl FromStr for SsmExperiment {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "on-ssm" => Ok(Self::OnSsm),
            "off-ssm" => Ok(Self::OffSsm),
            "off-slow-manifold" => Ok(Self::OffSlowManifold),
            other => Err(Error::InvalidArgument(format!(
                "unknown experiment `{other}` (on-ssm, off-ssm, off-slow-manifold)"
            ))),
        }
    }
}

impl std::fmt::Display for SsmExperiment {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::OnSsm => "on-ssm",
            Self::OffSsm => "off-ssm",
            Self::OffSlowManifold => "off-slow-manifold",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SfdTableSpec {
    pub eps: Vec<f64>,
    pub orders: Vec<u8>,
    /// Horizon in forcing periods.
    pub periods: f64,
    pub samples: usize,
}

impl Default for SfdTableSpec {
    fn default() -> Self {
        Self { eps: vec![1e-4, 1e-3, 1e-2], orders: vec![0, 1, 2], periods: 10.0, samples: 1000 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumSpec {
    pub master: usize,
    pub mode: EigenMode,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SsmSuiteSpec {
    pub experiment: SsmExperiment,
    pub master: usize,
    pub rho0: f64,
    pub theta0: f64,
    /// Modal amplitude of the off-SSM kick.
    pub delta: f64,
    /// Enslaved mode receiving the kick (zero-based).
    pub kicked_mode: usize,
    /// SFD order of the model the SSM is computed for.
    pub order: u8,
    pub normalization: W1Normalization,
    pub system: SystemKind,
    pub tau_end: f64,
    pub early: (f64, f64),
    pub late: (f64, f64),
    pub record_every: usize,
    /// Radial and angular resolution of the exported SSM surface.
    pub surface_grid: (usize, usize),
}

impl SsmSuiteSpec {
    pub fn new(experiment: SsmExperiment) -> Self {
        Self {
            experiment,
            master: 0,
            rho0: 0.3,
            theta0: 0.0,
            delta: 0.5,
            kicked_mode: 1,
            order: 1,
            normalization: W1Normalization::Eigenvalue,
            system: SystemKind::Full,
            tau_end: 150.0,
            early: (0.5, 8.0),
            late: (90.0, 150.0),
            record_every: 10,
            surface_grid: (20, 36),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulateSpec {
    pub system: SystemKind,
    pub order: u8,
    pub periods: f64,
    pub record_every: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Experiment {
    Assemble,
    SfdTable(SfdTableSpec),
    Spectrum(SpectrumSpec),
    SsmSuite(SsmSuiteSpec),
    Simulate(SimulateSpec),
}

impl Experiment {
    pub fn id(&self) -> &'static str {
        match self {
            Experiment::Assemble => "assemble",
            Experiment::SfdTable(_) => "sfd-table",
            Experiment::Spectrum(_) => "spectrum",
            Experiment::SsmSuite(_) => "ssm-suite",
            Experiment::Simulate(_) => "simulate",
        }
    }

    fn parameters(&self) -> String {
        let mut out = String::new();
        let list = |v: &[f64]| v.iter().map(|e| format!("{e:e}")).collect::<Vec<_>>().join(",");
        match self {
            Experiment::Assemble => {}
            Experiment::SfdTable(s) => {
                let orders: Vec<String> = s.orders.iter().map(u8::to_string).collect();
                let _ = writeln!(out, "eps_list = {}", list(&s.eps));
                let _ = writeln!(out, "orders = {}", orders.join(","));
                let _ = writeln!(out, "periods = {:e}", s.periods);
                let _ = writeln!(out, "samples = {}", s.samples);
            }
            Experiment::Spectrum(s) => {
                let _ = writeln!(out, "master = {}", s.master);
                let _ = writeln!(out, "mode = {:?}", s.mode);
            }
            Experiment::SsmSuite(s) => {
                let _ = writeln!(out, "experiment = {}", s.experiment);
                let _ = writeln!(out, "master = {}", s.master);
                let _ = writeln!(out, "rho0 = {:e}", s.rho0);
                let _ = writeln!(out, "theta0 = {:e}", s.theta0);
                let _ = writeln!(out, "delta = {:e}", s.delta);
                let _ = writeln!(out, "kicked_mode = {}", s.kicked_mode);
                let _ = writeln!(out, "order = {}", s.order);
                let _ = writeln!(out, "normalization = {:?}", s.normalization);
                let _ = writeln!(out, "system = {}", s.system);
                let _ = writeln!(out, "tau_end = {:e}", s.tau_end);
                let _ = writeln!(out, "early = {}", list(&[s.early.0, s.early.1]));
                let _ = writeln!(out, "late = {}", list(&[s.late.0, s.late.1]));
                let _ = writeln!(out, "record_every = {}", s.record_every);
                let _ = writeln!(out, "surface_grid = {},{}", s.surface_grid.0, s.surface_grid.1);
            }
            Experiment::Simulate(s) => {
                let _ = writeln!(out, "system = {}", s.system);
                let _ = writeln!(out, "order = {}", s.order);
                let _ = writeln!(out, "periods = {:e}", s.periods);
                let _ = writeln!(out, "record_every = {}", s.record_every);
            }
        }
        out
    }
}

/// Everything needed to reproduce a run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub config: BeamConfig,
    pub experiment: Experiment,
    pub out_dir: PathBuf,
    /// Reserved for randomized initial conditions; all current experiments
    /// are deterministic.
    pub seed: u64,
    pub tool_version: String,
}

impl RunManifest {
    pub fn new(config: BeamConfig, experiment: Experiment, out_dir: impl Into<PathBuf>) -> Self {
        Self { config, experiment, out_dir: out_dir.into(), seed: 0, tool_version: TOOL_VERSION.into() }
    }

    /// Content that determines the outputs (the output directory excluded).
    fn body(&self) -> String {
        format!(
            "experiment = {}\ntool_version = {}\nseed = {}\n[config]\n{}[parameters]\n{}",
            self.experiment.id(),
            self.tool_version,
            self.seed,
            config::to_text(&self.config),
            self.experiment.parameters()
        )
    }

    pub fn hash(&self) -> String {
        content_hash(&self.body())
    }

    pub fn to_text(&self) -> String {
        format!("# run manifest {}\noutput = {}\n{}", self.hash(), self.out_dir.display(), self.body())
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }

    pub fn write(&self) -> Result<PathBuf> {
        let p = self.path("manifest.txt");
        write_atomic(&p, &self.to_text())?;
        Ok(p)
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    write_atomic(path, text)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssembleSummary {
    pub n_s: usize,
    pub n_f: usize,
    pub zeta: f64,
    pub eps: f64,
    pub omega01: f64,
    pub forcing_frequency: f64,
}

pub fn cmd_assemble(m: &RunManifest) -> Result<AssembleSummary> {
    m.write()?;
    let beam = assemble(&m.config)?;
    for (name, mat) in [("M1", beam.m1()), ("K1", beam.k1()), ("M2", beam.m2()), ("K2", beam.k2())] {
        write_text(&m.path(&format!("{name}.mtx")), &matrix_coordinate(mat))?;
    }
    let (omega, _) = crate::spectra::undamped_modes(&beam)?;
    let s = AssembleSummary {
        n_s: beam.n_s(),
        n_f: beam.n_f(),
        zeta: beam.zeta(),
        eps: beam.eps(),
        omega01: omega[0],
        forcing_frequency: beam.forcing_frequency(),
    };
    let mut t = CsvTable::new(
        &m.hash(),
        &[("n_s", "count"), ("n_f", "count"), ("zeta", "-"), ("eps", "-"), ("omega01", "-"), ("forcing_frequency", "-")],
    );
    t.push_raw(vec![
        s.n_s.to_string(),
        s.n_f.to_string(),
        fmt_f64(s.zeta),
        fmt_f64(s.eps),
        fmt_f64(s.omega01),
        fmt_f64(s.forcing_frequency),
    ])?;
    t.write(&m.path("summary.csv"))?;
    Ok(s)
}

/// One ε row of the reduction-error table: a full run from rest and one
/// SFD model per order, compared over `periods` forcing periods.
pub fn sfd_error_row(config: &BeamConfig, orders: &[u8], periods: f64, samples: usize) -> Result<Vec<f64>> {
    sfd_error_cells(config, orders, periods, samples)?.into_iter().collect()
}

fn sfd_error_cells(
    config: &BeamConfig,
    orders: &[u8],
    periods: f64,
    samples: usize,
) -> Result<Vec<Result<f64>>> {
    let beam = Arc::new(assemble(config)?);
    let period = beam.forcing_period();
    let tau_end = periods * period;
    let settings = IntegratorSettings::for_period(period);
    let (ns, nf) = (beam.n_s(), beam.n_f());
    let (zx, zy) = (DVector::zeros(ns), DVector::zeros(nf));
    let full = integrate_full(&FullBeamSystem::new(beam.clone()), (&zx, &zx, &zy, &zy), &settings, tau_end)?;
    let at = uniform_samples(tau_end, samples);
    let manifold = SlowManifold::new(beam)?;
    Ok(orders
        .par_iter()
        .map(|&o| {
            let rom = manifold.build_rom(o)?;
            let reduced = integrate_rom(&rom, (&zx, &zx), &settings, tau_end)?;
            reduction_error(&full, &lift_sfd(&manifold, &reduced)?, &at)
        })
        .collect())
}

#[derive(Debug, Clone)]
pub struct SfdTable {
    pub eps: Vec<f64>,
    pub orders: Vec<u8>,
    /// `errors[row][col]`, `None` for failed cells.
    pub errors: Vec<Vec<Option<f64>>>,
    pub failures: Vec<String>,
}

pub fn cmd_sfd_table(m: &RunManifest, jobs: usize) -> Result<SfdTable> {
    let Experiment::SfdTable(spec) = &m.experiment else {
        return Err(Error::InvalidArgument("manifest is not an sfd-table run".into()));
    };
    if spec.eps.is_empty() || spec.orders.is_empty() {
        return Err(Error::InvalidArgument("sfd-table needs at least one eps and one order".into()));
    }
    m.write()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    let hash = m.hash();
    let rows: Vec<Vec<Result<f64>>> = pool.install(|| {
        spec.eps
            .par_iter()
            .map(|&eps| {
                let config = m.config.clone().with_eps(eps);
                match sfd_error_cells(&config, &spec.orders, spec.periods, spec.samples) {
                    Ok(cells) => cells,
                    Err(e) => spec.orders.iter().map(|_| Err(Error::InvalidArgument(e.to_string()))).collect(),
                }
            })
            .collect()
    });
    let mut table = SfdTable { eps: spec.eps.clone(), orders: spec.orders.clone(), errors: Vec::new(), failures: Vec::new() };
    for (&eps, row) in spec.eps.iter().zip(rows) {
        let mut out = Vec::new();
        for (&order, cell) in spec.orders.iter().zip(row) {
            let mut t = CsvTable::new(&hash, &[("eps", "-"), ("order", "-"), ("error", "%")]);
            let value = match cell {
                Ok(e) => Some(e),
                Err(err) => {
                    let msg = format!("eps={eps:e} order={order}: {err}");
                    t.comment(format!("failed: {err}"));
                    table.failures.push(msg);
                    None
                }
            };
            t.push_raw(vec![fmt_f64(eps), order.to_string(), value.map_or("nan".into(), fmt_f64)])?;
            t.write(&m.path(&format!("cells/eps_{eps:e}_order_{order}.csv")))?;
            out.push(value);
        }
        table.errors.push(out);
    }
    let mut cols = vec![("eps".to_string(), "-".to_string())];
    cols.extend(spec.orders.iter().map(|o| (format!("E_order{o}"), "%".to_string())));
    let mut t = CsvTable::with_columns(&hash, cols);
    t.comment(format!("horizon: {} forcing periods, {} uniform samples, rest start", spec.periods, spec.samples));
    for f in &table.failures {
        t.comment(format!("failed cell {f}"));
    }
    for (eps, row) in table.eps.iter().zip(&table.errors) {
        let mut cells = vec![fmt_f64(*eps)];
        cells.extend(row.iter().map(|v| v.map_or("nan".into(), fmt_f64)));
        t.push_raw(cells)?;
    }
    t.write(&m.path("sfd_table.csv"))?;
    Ok(table)
}

#[derive(Debug, Clone)]
pub struct SpectrumReport {
    pub approx: ModalData,
    pub exact: ModalData,
    pub quotients: SpectralQuotients,
    /// Check at the spectral quotient order.
    pub resonance: ResonanceReport,
}

pub fn spectrum_report(beam: &AssembledBeam, master: usize, mode: EigenMode) -> Result<SpectrumReport> {
    let approx = damped_eigenvalues(beam, EigenMode::Approx)?;
    let exact = damped_eigenvalues(beam, EigenMode::Exact)?;
    let used = if mode == EigenMode::Exact { &exact } else { &approx };
    let quotients = spectral_quotients(&used.lambda, &used.mode_real_parts(), master)?;
    let resonance = check_nonresonance(&used.lambda, master, quotients.sigma)?;
    Ok(SpectrumReport { approx, exact, quotients, resonance })
}

pub fn cmd_spectrum(m: &RunManifest) -> Result<SpectrumReport> {
    let Experiment::Spectrum(spec) = &m.experiment else {
        return Err(Error::InvalidArgument("manifest is not a spectrum run".into()));
    };
    m.write()?;
    let beam = assemble(&m.config)?;
    let r = spectrum_report(&beam, spec.master, spec.mode)?;
    let hash = m.hash();
    let mut text = format!(
        "# manifest_sha256: {hash}\n# units: k [index], omega0 [-], re/im lambda [-], overdamped [bool], ratio [-]\n"
    );
    text.push_str(&spectrum_csv(&r.approx, &r.exact));
    write_text(&m.path("spectrum.csv"), &text)?;
    let mut q = CsvTable::new(&hash, &[("master", "index"), ("sigma", "-"), ("max_ratio", "-"), ("first_ratio", "-"), ("b2_passed", "bool")]);
    q.push_raw(vec![
        (spec.master + 1).to_string(),
        r.quotients.sigma.to_string(),
        fmt_f64(r.quotients.max_ratio),
        r.quotients.successive.first().map_or("nan".into(), |v| fmt_f64(*v)),
        r.resonance.passed.to_string(),
    ])?;
    q.write(&m.path("quotients.csv"))?;
    write_text(&m.path("resonance.txt"), &resonance_text(&r.resonance))?;
    Ok(r)
}

fn resonance_text(r: &ResonanceReport) -> String {
    let mut out = format!("{r}\n");
    for v in &r.violations {
        let _ = writeln!(out, "j={} a={} b={} margin={:.3e}", v.j + 1, v.a, v.b, v.margin);
    }
    out
}

/// Results of one SSM experiment.
#[derive(Debug, Clone)]
pub struct SsmRun {
    pub lambda: Vec<C>,
    pub expansion: SsmExpansion,
    pub polar: PolarDynamics,
    pub resonance: ResonanceReport,
    /// Physical trajectory (full `(x, y)` or slow `x`).
    pub trajectory: Trajectory,
    pub modal: Vec<DVector<C>>,
    pub distances: Vec<SsmDistance>,
    /// Residual-driven distance bound `‖R(s(τ))‖ / |Re λ_next|`.
    pub bound: Vec<f64>,
    pub bound_violated: bool,
    pub fit_full: Option<DecayFit>,
    pub fit_transverse: Option<DecayFit>,
    pub reduced: Trajectory,
}

/// Runs one of the three SSM experiments on the unforced beam.
pub fn run_ssm_experiment(config: &BeamConfig, spec: &SsmSuiteSpec) -> Result<SsmRun> {
    let beam = Arc::new(assemble(&config.clone().with_forcing(ForcingSpec::off()))?);
    let manifold = SlowManifold::new(beam.clone())?;
    let rom = manifold.build_rom(spec.order)?;
    let sys = DiagonalizedSystem::from_rom(&rom)?;
    let lambda = sys.lambda().to_vec();
    let resonance = check_nonresonance(&lambda, spec.master, ABORT_RESONANCE_ORDER)?;
    if !resonance.passed {
        return Err(Error::Resonance(Box::new(resonance)));
    }
    let exp = compute_ssm(&sys, spec.master, spec.normalization)?;
    let polar = reduced_dynamics(&exp);

    let mut z0 = exp.evaluate_w(SsmExpansion::polar_to_s(spec.rho0, spec.theta0))?;
    if spec.experiment != SsmExperiment::OnSsm {
        let k = spec.kicked_mode;
        if k == spec.master || 2 * k + 1 >= z0.len() {
            return Err(Error::OutOfRange { what: "kicked mode", index: k, len: z0.len() / 2 });
        }
        z0[2 * k] += C::from(spec.delta);
        z0[2 * k + 1] += C::from(spec.delta);
    }
    let (x0, xd0) = sys.to_physical(&z0)?;
    let (x0, xd0) = (x0.map(|c| c.re), xd0.map(|c| c.re));

    let period = 2.0 * std::f64::consts::PI / lambda[2 * spec.master].im.abs();
    let settings = IntegratorSettings::for_period(period).with_record_every(spec.record_every);
    let trajectory = match spec.system {
        SystemKind::Full => {
            let (y0, yd0) = if spec.experiment == SsmExperiment::OffSlowManifold {
                (DVector::zeros(beam.n_f()), DVector::zeros(beam.n_f()))
            } else {
                manifold.reconstruct_fast(&x0, &xd0, 0.0, spec.order)?
            };
            let full = FullBeamSystem::new(beam.clone());
            integrate_full(&full, (&x0, &xd0, &y0, &yd0), &settings, spec.tau_end)?
        }
        SystemKind::Rom => integrate_rom(&rom, (&x0, &xd0), &settings, spec.tau_end)?,
    };
    let ns = beam.n_s();
    let modal: Vec<DVector<C>> = trajectory
        .q
        .iter()
        .zip(&trajectory.v)
        .map(|(q, v)| sys.from_physical(&q.rows(0, ns).into_owned(), &v.rows(0, ns).into_owned()))
        .collect::<Result<_>>()?;
    let distances = ssm_diagnostics(&sys, &exp, &modal)?;

    let next_rate = (0..lambda.len() / 2)
        .filter(|&k| k != spec.master)
        .map(|k| -(lambda[2 * k].re + lambda[2 * k + 1].re) / 2.0)
        .fold(f64::INFINITY, f64::min);
    let bound: Vec<f64> = modal
        .iter()
        .map(|z| invariance_residual(&sys, &exp, exp.master_coordinates(z)).norm() / next_rate)
        .collect();
    let bound_violated = distances.iter().zip(&bound).any(|(d, b)| d.transverse > *b);

    let full_series: Vec<f64> = distances.iter().map(|d| d.full).collect();
    let trans_series: Vec<f64> = distances.iter().map(|d| d.transverse).collect();
    let fit = |series: &[f64]| fit_decay_rates(&trajectory.tau, series, spec.early, spec.late).ok();
    let (fit_full, fit_transverse) = if spec.experiment == SsmExperiment::OnSsm {
        (None, None)
    } else {
        (fit(&full_series), fit(&trans_series))
    };

    let s0 = exp.master_coordinates(&modal[0]);
    let reduced = integrate_polar(&polar, s0[0].norm(), s0[0].arg(), spec.tau_end, trajectory.len().max(2) - 1)?;
    Ok(SsmRun {
        lambda,
        expansion: exp,
        polar,
        resonance,
        trajectory,
        modal,
        distances,
        bound,
        bound_violated,
        fit_full,
        fit_transverse,
        reduced,
    })
}

pub fn cmd_ssm_suite(m: &RunManifest) -> Result<SsmRun> {
    let Experiment::SsmSuite(spec) = &m.experiment else {
        return Err(Error::InvalidArgument("manifest is not an ssm-suite run".into()));
    };
    m.write()?;
    let hash = m.hash();
    let run = match run_ssm_experiment(&m.config, spec) {
        Err(Error::Resonance(r)) => {
            write_text(&m.path("resonance.txt"), &resonance_text(&r))?;
            return Err(Error::Resonance(r));
        }
        other => other?,
    };
    write_text(&m.path("resonance.txt"), &resonance_text(&run.resonance))?;

    let mut coeffs = String::from("# i j k l re im\n");
    for (i, j, k, l, v) in run.expansion.coefficient_records() {
        let _ = writeln!(coeffs, "{i} {j} {k} {l} {} {}", fmt_f64(v.re), fmt_f64(v.im));
    }
    write_text(&m.path("ssm_coefficients.txt"), &coeffs)?;

    let mut summary = CsvTable::new(
        &hash,
        &[
            ("re_lambda", "-"),
            ("im_lambda", "-"),
            ("re_beta", "-"),
            ("im_beta", "-"),
            ("initial_rate_full", "1/tau"),
            ("final_rate_full", "1/tau"),
            ("initial_rate_transverse", "1/tau"),
            ("final_rate_transverse", "1/tau"),
            ("bound_violated", "bool"),
        ],
    );
    summary.comment(format!("experiment: {}, system: {}", spec.experiment, spec.system));
    let rate = |f: Option<DecayFit>, early: bool| {
        f.map_or("nan".into(), |f| fmt_f64(if early { f.initial_rate } else { f.final_rate }))
    };
    summary.push_raw(vec![
        fmt_f64(run.polar.re_lambda),
        fmt_f64(run.polar.im_lambda),
        fmt_f64(run.polar.re_beta),
        fmt_f64(run.polar.im_beta),
        rate(run.fit_full, true),
        rate(run.fit_full, false),
        rate(run.fit_transverse, true),
        rate(run.fit_transverse, false),
        run.bound_violated.to_string(),
    ])?;
    summary.write(&m.path("ssm_summary.csv"))?;

    let dim = run.lambda.len();
    let mut cols = vec![("tau".to_string(), "-".to_string())];
    for i in 0..dim {
        cols.push((format!("re_z{}", i + 1), "-".into()));
        cols.push((format!("im_z{}", i + 1), "-".into()));
    }
    let mut modal = CsvTable::with_columns(&hash, cols.clone());
    for (t, z) in run.trajectory.tau.iter().zip(&run.modal) {
        let mut row = vec![*t];
        row.extend(z.iter().flat_map(|c| [c.re, c.im]));
        modal.push(&row)?;
    }
    modal.write(&m.path("modal_trajectory.csv"))?;

    let mut dist = CsvTable::new(
        &hash,
        &[("tau", "-"), ("master_amplitude", "-"), ("transverse", "-"), ("full", "-"), ("bound", "-")],
    );
    for ((t, d), b) in run.trajectory.tau.iter().zip(&run.distances).zip(&run.bound) {
        dist.push(&[*t, d.master_amplitude, d.transverse, d.full, *b])?;
    }
    dist.write(&m.path("distance.csv"))?;

    let mut polar = CsvTable::new(&hash, &[("tau", "-"), ("rho", "-"), ("theta", "rad")]);
    for (t, q) in run.reduced.tau.iter().zip(&run.reduced.q) {
        polar.push(&[*t, q[0], q[1]])?;
    }
    polar.write(&m.path("ssm_polar.csv"))?;

    let mut cols = vec![("rho".to_string(), "-".to_string()), ("theta".to_string(), "rad".to_string())];
    for i in 0..dim {
        cols.push((format!("re_w{}", i + 1), "-".into()));
        cols.push((format!("im_w{}", i + 1), "-".into()));
    }
    let mut surface = CsvTable::with_columns(&hash, cols);
    let (nr, nt) = spec.surface_grid;
    let rho_max = spec.rho0.max(1e-12);
    for a in 1..=nr.max(1) {
        let rho = rho_max * a as f64 / nr.max(1) as f64;
        for b in 0..nt.max(1) {
            let theta = 2.0 * std::f64::consts::PI * b as f64 / nt.max(1) as f64;
            let w = run.expansion.evaluate_w(SsmExpansion::polar_to_s(rho, theta))?;
            let mut row = vec![rho, theta];
            row.extend(w.iter().flat_map(|c| [c.re, c.im]));
            surface.push(&row)?;
        }
    }
    surface.write(&m.path("ssm_surface.csv"))?;

    trajectory_table(&run.trajectory, &hash)?.write(&m.path("trajectory.csv"))?;
    Ok(run)
}

/// Single trajectory of the forced beam from rest.
pub fn cmd_simulate(m: &RunManifest) -> Result<Trajectory> {
    let Experiment::Simulate(spec) = &m.experiment else {
        return Err(Error::InvalidArgument("manifest is not a simulate run".into()));
    };
    m.write()?;
    let beam = Arc::new(assemble(&m.config)?);
    let period = beam.forcing_period();
    let tau_end = spec.periods * period;
    let settings = IntegratorSettings::for_period(period).with_record_every(spec.record_every);
    let (ns, nf) = (beam.n_s(), beam.n_f());
    let (zx, zy) = (DVector::zeros(ns), DVector::zeros(nf));
    let traj = match spec.system {
        SystemKind::Full => integrate_full(&FullBeamSystem::new(beam.clone()), (&zx, &zx, &zy, &zy), &settings, tau_end)?,
        SystemKind::Rom => {
            let manifold = SlowManifold::new(beam.clone())?;
            let rom = manifold.build_rom(spec.order)?;
            lift_sfd(&manifold, &integrate_rom(&rom, (&zx, &zx), &settings, tau_end)?)?
        }
    };
    let hash = m.hash();
    trajectory_table(&traj, &hash)?.write(&m.path("trajectory.csv"))?;
    let node = beam.quarter_node();
    let (wd, ud) = (beam.deflection_dof(node), beam.axial_dof(node));
    let mut q = CsvTable::new(&hash, &[("tau", "-"), ("w_quarter", "-"), ("u_quarter", "-")]);
    for (t, s) in traj.tau.iter().zip(&traj.q) {
        let w = wd.map_or(0.0, |i| s[i]);
        let u = ud.map_or(0.0, |i| s[ns + i]);
        q.push(&[*t, w, u])?;
    }
    q.write(&m.path("quarter.csv"))?;
    Ok(traj)
}
