//! Time integration (Newmark average acceleration with Newton iterations),
//! the closed-form polar SSM flow, reduction errors and decay-rate fits.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::beam::AssembledBeam;
use crate::error::{Error, Result};
use crate::sfd::{SfdRom, SlowManifold};
use crate::ssm::PolarDynamics;

/// `M q̈ + f(τ, q, q̇) = 0`, where `f` collects internal forces minus
/// external loads.
pub trait SecondOrderSystem {
    fn dim(&self) -> usize;

    fn mass(&self) -> &DMatrix<f64>;

    fn force(&self, tau: f64, q: &DVector<f64>, v: &DVector<f64>) -> Result<DVector<f64>>;

    /// `(∂f/∂q, ∂f/∂q̇)`. The default uses central differences.
    fn tangents(
        &self,
        tau: f64,
        q: &DVector<f64>,
        v: &DVector<f64>,
    ) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
        let n = self.dim();
        let mut k = DMatrix::zeros(n, n);
        let mut c = DMatrix::zeros(n, n);
        for j in 0..n {
            let h = 1e-7 * q[j].abs().max(1.0);
            let mut qp = q.clone();
            qp[j] += h;
            let mut qm = q.clone();
            qm[j] -= h;
            let col = (self.force(tau, &qp, v)? - self.force(tau, &qm, v)?) / (2.0 * h);
            k.set_column(j, &col);
            let h = 1e-7 * v[j].abs().max(1.0);
            let mut vp = v.clone();
            vp[j] += h;
            let mut vm = v.clone();
            vm[j] -= h;
            let col = (self.force(tau, q, &vp)? - self.force(tau, q, &vm)?) / (2.0 * h);
            c.set_column(j, &col);
        }
        Ok((k, c))
    }

    /// Magnitude against which the Newton residual is measured. Systems
    /// whose force is a near-cancellation of large terms report the largest.
    fn residual_scale(&self, _q: &DVector<f64>, force: &DVector<f64>) -> f64 {
        force.norm()
    }

    /// Whether [`tangents`](Self::tangents) is analytic and cheap enough to
    /// refresh at every Newton iteration.
    fn exact_tangents(&self) -> bool {
        false
    }
}

/// The full beam in the stacked coordinates `q = (x, y)`.
#[derive(Debug, Clone)]
pub struct FullBeamSystem {
    beam: Arc<AssembledBeam>,
    mass: DMatrix<f64>,
}

impl FullBeamSystem {
    pub fn new(beam: Arc<AssembledBeam>) -> Self {
        let (ns, nf) = (beam.n_s(), beam.n_f());
        let mut mass = DMatrix::zeros(ns + nf, ns + nf);
        mass.view_mut((0, 0), (ns, ns)).copy_from(beam.m1());
        mass.view_mut((ns, ns), (nf, nf)).copy_from(beam.m2());
        Self { beam, mass }
    }

    pub fn beam(&self) -> &AssembledBeam {
        &self.beam
    }

    pub fn split(&self, q: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
        let ns = self.beam.n_s();
        (q.rows(0, ns).into_owned(), q.rows(ns, self.beam.n_f()).into_owned())
    }

    pub fn stack(x: &DVector<f64>, y: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(x.len() + y.len(), x.iter().chain(y.iter()).copied())
    }

    /// Kinetic plus stored elastic energy.
    pub fn energy(&self, q: &DVector<f64>, v: &DVector<f64>) -> f64 {
        let (x, y) = self.split(q);
        let (xd, yd) = self.split(v);
        self.beam.kinetic_energy(&xd, &yd) + self.beam.strain_energy(&x, &y)
    }
}

impl SecondOrderSystem for FullBeamSystem {
    fn dim(&self) -> usize {
        self.beam.n_s() + self.beam.n_f()
    }

    fn mass(&self) -> &DMatrix<f64> {
        &self.mass
    }

    fn force(&self, tau: f64, q: &DVector<f64>, v: &DVector<f64>) -> Result<DVector<f64>> {
        self.beam.check_len("full state q", self.dim(), q.len())?;
        self.beam.check_len("full state v", self.dim(), v.len())?;
        let (x, y) = self.split(q);
        let (xd, yd) = self.split(v);
        let (fx, fy) = self.beam.elastic_force(&x, &y)?;
        let (dx, dy) = self.beam.damping_force(&x, &xd, &yd)?;
        let (lq, lp) = self.beam.load_vectors(tau);
        Ok(Self::stack(&(fx + dx - lq), &(fy + dy - lp)))
    }

    fn tangents(
        &self,
        _tau: f64,
        q: &DVector<f64>,
        v: &DVector<f64>,
    ) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
        let (x, y) = self.split(q);
        let (xd, yd) = self.split(v);
        let (dq, dv) = self.beam.damping_tangents(&x, &xd, &yd);
        Ok((self.beam.elastic_tangent(&x, &y) + dq, dv))
    }

    fn residual_scale(&self, q: &DVector<f64>, force: &DVector<f64>) -> f64 {
        let (_, y) = self.split(q);
        let eps = self.beam.eps();
        force.norm().max((self.beam.k2() * y).norm() / (eps * eps))
    }

    fn exact_tangents(&self) -> bool {
        true
    }
}

impl SecondOrderSystem for SfdRom {
    fn dim(&self) -> usize {
        SfdRom::dim(self)
    }

    fn mass(&self) -> &DMatrix<f64> {
        SfdRom::mass(self)
    }

    fn force(&self, tau: f64, q: &DVector<f64>, v: &DVector<f64>) -> Result<DVector<f64>> {
        SfdRom::force(self, tau, q, v)
    }

    fn tangents(
        &self,
        tau: f64,
        q: &DVector<f64>,
        v: &DVector<f64>,
    ) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
        match SfdRom::tangents(self, tau, q, v) {
            Some(t) => Ok(t),
            None => fd_tangents(self, tau, q, v),
        }
    }

    fn residual_scale(&self, q: &DVector<f64>, force: &DVector<f64>) -> f64 {
        let beam = self.beam();
        force
            .norm()
            .max(beam.cubic_force(q).norm())
            .max((beam.k1() * q).norm())
    }

    fn exact_tangents(&self) -> bool {
        self.order() < 2
    }
}

struct FdOnly<'a, S: SecondOrderSystem>(&'a S);

impl<S: SecondOrderSystem> SecondOrderSystem for FdOnly<'_, S> {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn mass(&self) -> &DMatrix<f64> {
        self.0.mass()
    }
    fn force(&self, tau: f64, q: &DVector<f64>, v: &DVector<f64>) -> Result<DVector<f64>> {
        self.0.force(tau, q, v)
    }
}

/// Central-difference Jacobians of any system's force.
pub fn fd_tangents<S: SecondOrderSystem>(
    sys: &S,
    tau: f64,
    q: &DVector<f64>,
    v: &DVector<f64>,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    FdOnly(sys).tangents(tau, q, v)
}

/// Origin of a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Full,
    Sfd(u8),
    Ssm,
}

impl std::fmt::Display for Provenance {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Provenance::Full => write!(f, "full"),
            Provenance::Sfd(o) => write!(f, "sfd-{o}"),
            Provenance::Ssm => write!(f, "ssm"),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct IntegratorStats {
    pub steps: usize,
    pub newton_iterations: usize,
    /// Steps split after a failed Newton iteration.
    pub bisections: usize,
}

/// Sampled solution: positions `q` and rates `v` on a strictly increasing
/// time grid. Polar trajectories store `(ρ, θ)`.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub tau: Vec<f64>,
    pub q: Vec<DVector<f64>>,
    pub v: Vec<DVector<f64>>,
    pub provenance: Provenance,
    pub stats: IntegratorStats,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.tau.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tau.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.q.first().map_or(0, |q| q.len())
    }

    /// Positions at arbitrary times by 4-point cubic Lagrange interpolation.
    pub fn sample(&self, at: &[f64]) -> Result<Vec<DVector<f64>>> {
        interpolate(&self.tau, &self.q, at)
    }
}

/// 4-point Lagrange interpolation on a (not necessarily uniform) grid.
pub fn interpolate(grid: &[f64], values: &[DVector<f64>], at: &[f64]) -> Result<Vec<DVector<f64>>> {
    let n = grid.len();
    if n == 0 || values.len() != n {
        return Err(Error::InvalidArgument("interpolation grid and values disagree".into()));
    }
    let (lo, hi) = (grid[0], grid[n - 1]);
    let slack = 1e-9 * (hi - lo).abs().max(1.0);
    at.iter()
        .map(|&t| {
            if t < lo - slack || t > hi + slack {
                return Err(Error::InvalidArgument(format!(
                    "sample time {t} outside trajectory range [{lo}, {hi}]"
                )));
            }
            if n < 4 {
                // Linear fallback for very short grids.
                let i = grid.partition_point(|g| *g <= t).clamp(1, n.max(2) - 1).min(n - 1);
                if n == 1 {
                    return Ok(values[0].clone());
                }
                let (t0, t1) = (grid[i - 1], grid[i]);
                let w = (t - t0) / (t1 - t0);
                return Ok(&values[i - 1] * (1.0 - w) + &values[i] * w);
            }
            let i = grid.partition_point(|g| *g <= t);
            let start = i.saturating_sub(2).min(n - 4);
            let idx = [start, start + 1, start + 2, start + 3];
            let mut out = DVector::zeros(values[0].len());
            for (a, &ia) in idx.iter().enumerate() {
                let mut w = 1.0;
                for (b, &ib) in idx.iter().enumerate() {
                    if a != b {
                        w *= (t - grid[ib]) / (grid[ia] - grid[ib]);
                    }
                }
                out += &values[ia] * w;
            }
            Ok(out)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorSettings {
    pub dt: f64,
    pub newton_tol: f64,
    pub max_newton: usize,
    pub max_bisections: usize,
    /// Keep every `record_every`-th step (the final step is always kept).
    pub record_every: usize,
}

impl IntegratorSettings {
    /// Step of one two-hundredth of `period`.
    pub fn for_period(period: f64) -> Self {
        Self { dt: period / 200.0, newton_tol: 1e-10, max_newton: 25, max_bisections: 8, record_every: 1 }
    }

    pub fn with_dt(mut self, dt: f64) -> Self {
        self.dt = dt;
        self
    }

    pub fn with_record_every(mut self, k: usize) -> Self {
        self.record_every = k;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !(self.newton_tol > 0.0) || self.max_newton == 0 || self.record_every == 0 {
            return Err(Error::InvalidArgument(format!("invalid integrator settings {self:?}")));
        }
        Ok(())
    }
}

/// Newmark average-acceleration integration (γ = ½, β = ¼) with Newton
/// iterations on the acceleration. A step whose Newton iteration fails is
/// retried as two half steps, at most `max_bisections` levels deep.
pub fn newmark<S: SecondOrderSystem>(
    sys: &S,
    q0: &DVector<f64>,
    v0: &DVector<f64>,
    tau_end: f64,
    settings: &IntegratorSettings,
    provenance: Provenance,
) -> Result<Trajectory> {
    settings.validate()?;
    let n = sys.dim();
    if q0.len() != n || v0.len() != n {
        return Err(Error::DimensionMismatch { context: "initial condition", expected: n, got: q0.len() });
    }
    if !(tau_end >= 0.0) {
        return Err(Error::InvalidArgument(format!("tau_end must be non-negative, got {tau_end}")));
    }
    let f0 = sys.force(0.0, q0, v0)?;
    let a0 = sys
        .mass()
        .clone()
        .lu()
        .solve(&-f0)
        .ok_or_else(|| Error::Singular("mass matrix".into()))?;
    let mut state = State { q: q0.clone(), v: v0.clone(), a: a0 };
    let mut traj = Trajectory {
        tau: vec![0.0],
        q: vec![q0.clone()],
        v: vec![v0.clone()],
        provenance,
        stats: IntegratorStats::default(),
    };
    if tau_end == 0.0 {
        return Ok(traj);
    }
    let steps = (tau_end / settings.dt - 1e-9).ceil().max(1.0) as usize;
    let h = tau_end / steps as f64;
    for step in 1..=steps {
        let tau0 = h * (step - 1) as f64;
        state = advance(sys, &state, tau0, h, settings, 0, &mut traj.stats)?;
        traj.stats.steps += 1;
        if step % settings.record_every == 0 || step == steps {
            traj.tau.push(h * step as f64);
            traj.q.push(state.q.clone());
            traj.v.push(state.v.clone());
        }
    }
    Ok(traj)
}

#[derive(Debug, Clone)]
struct State {
    q: DVector<f64>,
    v: DVector<f64>,
    a: DVector<f64>,
}

fn advance<S: SecondOrderSystem>(
    sys: &S,
    state: &State,
    tau0: f64,
    h: f64,
    settings: &IntegratorSettings,
    depth: usize,
    stats: &mut IntegratorStats,
) -> Result<State> {
    match newmark_step(sys, state, tau0 + h, h, settings, stats) {
        Err(Error::NewtonDivergence { .. }) if depth < settings.max_bisections => {
            stats.bisections += 1;
            let mid = advance(sys, state, tau0, 0.5 * h, settings, depth + 1, stats)?;
            advance(sys, &mid, tau0 + 0.5 * h, 0.5 * h, settings, depth + 1, stats)
        }
        other => other,
    }
}

fn newmark_step<S: SecondOrderSystem>(
    sys: &S,
    state: &State,
    tau: f64,
    h: f64,
    settings: &IntegratorSettings,
    stats: &mut IntegratorStats,
) -> Result<State> {
    let mass = sys.mass();
    let State { q, v, a } = state;
    let q_pred = q + v * h + a * (0.25 * h * h);
    let v_pred = v + a * (0.5 * h);
    // Constant-displacement predictor: the first iterate has q_{n+1} = q_n.
    let mut a_new = -(v * (4.0 / h)) - a;
    let mut jac_lu = None;
    let mut last_res = f64::INFINITY;
    let exact = sys.exact_tangents();
    for it in 0..settings.max_newton {
        let qn = &q_pred + &a_new * (0.25 * h * h);
        let vn = &v_pred + &a_new * (0.5 * h);
        let f = sys.force(tau, &qn, &vn)?;
        let ma = mass * &a_new;
        let r = &ma + &f;
        let scale = ma.norm().max(sys.residual_scale(&qn, &f)).max(f64::MIN_POSITIVE);
        let res = r.norm() / scale;
        last_res = res;
        if !res.is_finite() {
            break;
        }
        if r.norm() == 0.0 || res <= settings.newton_tol {
            return Ok(State { q: qn, v: vn, a: a_new });
        }
        if exact || jac_lu.is_none() || it % 6 == 5 {
            let (kt, ct) = sys.tangents(tau, &qn, &vn)?;
            let j = mass + ct * (0.5 * h) + kt * (0.25 * h * h);
            jac_lu = Some(j.lu());
        }
        let da = jac_lu
            .as_ref()
            .expect("jacobian factorized")
            .solve(&-r)
            .ok_or_else(|| Error::Singular("Newmark iteration matrix".into()))?;
        a_new += &da;
        stats.newton_iterations += 1;
        if da.norm() <= 1e-13 * a_new.norm() {
            let qn = &q_pred + &a_new * (0.25 * h * h);
            let vn = &v_pred + &a_new * (0.5 * h);
            return Ok(State { q: qn, v: vn, a: a_new });
        }
    }
    Err(Error::NewtonDivergence { tau, residual: last_res })
}

/// Full system from `(x₀, ẋ₀, y₀, ẏ₀)`.
pub fn integrate_full(
    sys: &FullBeamSystem,
    ic: (&DVector<f64>, &DVector<f64>, &DVector<f64>, &DVector<f64>),
    settings: &IntegratorSettings,
    tau_end: f64,
) -> Result<Trajectory> {
    let (x0, xd0, y0, yd0) = ic;
    let q0 = FullBeamSystem::stack(x0, y0);
    let v0 = FullBeamSystem::stack(xd0, yd0);
    newmark(sys, &q0, &v0, tau_end, settings, Provenance::Full)
}

pub fn integrate_rom(
    rom: &SfdRom,
    ic: (&DVector<f64>, &DVector<f64>),
    settings: &IntegratorSettings,
    tau_end: f64,
) -> Result<Trajectory> {
    newmark(rom, ic.0, ic.1, tau_end, settings, Provenance::Sfd(rom.order()))
}

/// Closed-form solution of the polar reduced dynamics on `n + 1` uniform
/// samples. Stored as `q = (ρ, θ)`, `v = (ρ̇, θ̇)`.
pub fn integrate_polar(
    pd: &PolarDynamics,
    rho0: f64,
    theta0: f64,
    tau_end: f64,
    n: usize,
) -> Result<Trajectory> {
    if !(rho0 >= 0.0) {
        return Err(Error::InvalidArgument(format!("rho0 must be non-negative, got {rho0}")));
    }
    let n = n.max(1);
    let (a, b) = (pd.re_lambda, pd.re_beta);
    let mut traj = Trajectory {
        tau: Vec::with_capacity(n + 1),
        q: Vec::with_capacity(n + 1),
        v: Vec::with_capacity(n + 1),
        provenance: Provenance::Ssm,
        stats: IntegratorStats::default(),
    };
    for i in 0..=n {
        let tau = if tau_end == 0.0 { 0.0 } else { tau_end * i as f64 / n as f64 };
        let (rho, int_rho2) = if rho0 == 0.0 {
            (0.0, 0.0)
        } else {
            polar_radius(a, b, rho0, tau)?
        };
        let theta = theta0 + pd.im_lambda * tau + pd.im_beta * int_rho2;
        traj.tau.push(tau);
        traj.q.push(DVector::from_vec(vec![rho, theta]));
        traj.v.push(DVector::from_vec(vec![pd.rho_rate(rho), pd.backbone(rho)]));
        traj.stats.steps = i;
        if tau_end == 0.0 {
            break;
        }
    }
    Ok(traj)
}

/// `ρ(τ)` and `∫₀^τ ρ²` for `ρ̇ = ρ(a + bρ²)`, via `u = ρ⁻²`, which obeys
/// `u̇ = −2(au + b)`.
fn polar_radius(a: f64, b: f64, rho0: f64, tau: f64) -> Result<(f64, f64)> {
    let u0 = rho0.powi(-2);
    let (u, int) = if a.abs() < 1e-300 {
        let u = u0 - 2.0 * b * tau;
        let int = if b == 0.0 { tau / u0 } else { -(u / u0).ln() / (2.0 * b) };
        (u, int)
    } else if b == 0.0 {
        let u = u0 * (-2.0 * a * tau).exp();
        (u, ((2.0 * a * tau).exp() - 1.0) / (2.0 * a * u0))
    } else {
        let c = -b / a;
        let u = (u0 - c) * (-2.0 * a * tau).exp() + c;
        (u, (tau + (u / u0).ln() / (2.0 * a)) / c)
    };
    if !(u > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "polar amplitude blows up before tau = {tau:.6e}"
        )));
    }
    Ok((u.powf(-0.5), int))
}

/// Lifts an SFD trajectory to `(x, y)` with the fast variables
/// reconstructed at the trajectory's order.
pub fn lift_sfd(manifold: &SlowManifold, traj: &Trajectory) -> Result<Trajectory> {
    let order = match traj.provenance {
        Provenance::Sfd(o) => o,
        other => {
            return Err(Error::InvalidArgument(format!("cannot lift a `{other}` trajectory")))
        }
    };
    let mut q = Vec::with_capacity(traj.len());
    let mut v = Vec::with_capacity(traj.len());
    for ((t, x), xd) in traj.tau.iter().zip(&traj.q).zip(&traj.v) {
        let (y, yd) = manifold.reconstruct_fast(x, xd, *t, order)?;
        q.push(FullBeamSystem::stack(x, &y));
        v.push(FullBeamSystem::stack(xd, &yd));
    }
    Ok(Trajectory { tau: traj.tau.clone(), q, v, provenance: traj.provenance, stats: traj.stats })
}

/// Uniform sample set `τ_k = k·τ_end/S`, `k = 1..=S`.
pub fn uniform_samples(tau_end: f64, count: usize) -> Vec<f64> {
    (1..=count).map(|k| tau_end * k as f64 / count as f64).collect()
}

/// `100·√Σ|u − ũ|² / √Σ|u|²` over `samples`, both trajectories
/// interpolated onto the sample set.
pub fn reduction_error(full: &Trajectory, reduced: &Trajectory, samples: &[f64]) -> Result<f64> {
    if full.dim() != reduced.dim() {
        return Err(Error::DimensionMismatch {
            context: "reduction error",
            expected: full.dim(),
            got: reduced.dim(),
        });
    }
    let u = full.sample(samples)?;
    let ur = reduced.sample(samples)?;
    let (mut num, mut den) = (0.0, 0.0);
    for (a, b) in u.iter().zip(&ur) {
        num += (a - b).norm_squared();
        den += a.norm_squared();
    }
    if den == 0.0 {
        return Err(Error::InvalidArgument("reference trajectory is identically zero".into()));
    }
    Ok(100.0 * (num / den).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    pub initial_rate: f64,
    pub final_rate: f64,
    /// RMS residual of the log-linear fits.
    pub initial_residual: f64,
    pub final_residual: f64,
}

/// Least-squares slope and RMS residual of `ln y` against `τ` on a window.
pub fn fit_log_slope(tau: &[f64], values: &[f64], window: (f64, f64)) -> Result<(f64, f64)> {
    let mut pts = Vec::new();
    for (&t, &y) in tau.iter().zip(values) {
        if t < window.0 || t > window.1 {
            continue;
        }
        if !(y > 0.0) {
            return Err(Error::NonPositiveSample { tau: t, value: y });
        }
        pts.push((t, y.ln()));
    }
    if pts.len() < 2 {
        return Err(Error::InvalidArgument(format!("fit window {window:?} holds fewer than two samples")));
    }
    let m = pts.len() as f64;
    let tm = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let lm = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let stt: f64 = pts.iter().map(|p| (p.0 - tm).powi(2)).sum();
    let stl: f64 = pts.iter().map(|p| (p.0 - tm) * (p.1 - lm)).sum();
    let slope = stl / stt;
    let rms = (pts
        .iter()
        .map(|p| (p.1 - lm - slope * (p.0 - tm)).powi(2))
        .sum::<f64>()
        / m)
        .sqrt();
    Ok((slope, rms))
}

/// Exponential decay rates over an early and a late window.
pub fn fit_decay_rates(
    tau: &[f64],
    values: &[f64],
    early: (f64, f64),
    late: (f64, f64),
) -> Result<DecayFit> {
    let (s0, r0) = fit_log_slope(tau, values, early)?;
    let (s1, r1) = fit_log_slope(tau, values, late)?;
    Ok(DecayFit { initial_rate: -s0, final_rate: -s1, initial_residual: r0, final_residual: r1 })
}
