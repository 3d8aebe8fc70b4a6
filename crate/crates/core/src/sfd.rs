//! Slow-fast decomposition of the beam: the axial variables are enslaved to
//! the transverse ones through `y = ε(G₀ + εG₁ + ε²G₂)`, `ẏ = ε(H₀ + εH₁)`,
//! and the transverse equations restricted to that graph form the reduced
//! model.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::beam::AssembledBeam;
use crate::error::{Error, Result};
use crate::linalg::{condition_number, min_eigenvalue, SpdFactor};
use crate::scalar::{apply_real, Scalar};

/// Condition-number ceiling for treating `K₂` as solvable.
const MAX_K2_CONDITION: f64 = 1e12;

/// Outcome of checking the three slow-fast assumptions.
#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionReport {
    /// The fast equations are polynomial in ε once multiplied through.
    pub a1_smooth: bool,
    pub k2_condition: f64,
    /// `K₂η + H(x) = 0` is uniquely solvable for every `x`.
    pub a2_solvable: bool,
    pub m2_positive_definite: bool,
    pub k2_positive_definite: bool,
    pub zeta_positive: bool,
    /// The frozen fast subsystem `M₂η'' + ζK₂η' + K₂η = 0` is asymptotically stable.
    pub a3_stable: bool,
}

impl AssumptionReport {
    pub fn all_pass(&self) -> bool {
        self.a1_smooth && self.a2_solvable && self.a3_stable
    }
}

pub fn verify_assumptions(beam: &AssembledBeam) -> AssumptionReport {
    verify_fast_subsystem(beam.m2(), beam.k2(), beam.zeta())
}

/// Checks (A2)/(A3) on explicit fast-subsystem matrices.
pub fn verify_fast_subsystem(m2: &DMatrix<f64>, k2: &DMatrix<f64>, zeta: f64) -> AssumptionReport {
    let k2_pd = min_eigenvalue(k2) > 0.0;
    let m2_pd = min_eigenvalue(m2) > 0.0;
    let k2_condition = if k2_pd { condition_number(k2) } else { f64::INFINITY };
    let a2 = k2_pd && k2_condition < MAX_K2_CONDITION && SpdFactor::new(k2, "K2").is_ok();
    let zeta_positive = zeta > 0.0;
    AssumptionReport {
        a1_smooth: true,
        k2_condition,
        a2_solvable: a2,
        m2_positive_definite: m2_pd,
        k2_positive_definite: k2_pd,
        zeta_positive,
        a3_stable: m2_pd && k2_pd && zeta_positive,
    }
}

/// Expansion terms of the slow manifold at one state.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderTerms {
    pub g0: DVector<f64>,
    pub h0: DVector<f64>,
    pub g1: DVector<f64>,
    pub h1: DVector<f64>,
    pub g2: DVector<f64>,
}

/// Evaluators for the enslaving functions. Holds the state-independent
/// factorizations of `K₂` and `K₂M₂⁻¹K₂`.
#[derive(Debug, Clone)]
pub struct SlowManifold {
    beam: Arc<AssembledBeam>,
    k2m2k2: SpdFactor,
}

impl SlowManifold {
    pub fn new(beam: Arc<AssembledBeam>) -> Result<Self> {
        let m2 = SpdFactor::new(beam.m2(), "M2")?;
        let k2m2k2 = beam.k2() * m2.solve_mat(beam.k2());
        let k2m2k2 = SpdFactor::new(&((&k2m2k2 + k2m2k2.transpose()) * 0.5), "K2 M2^-1 K2")?;
        Ok(Self { beam, k2m2k2 })
    }

    pub fn beam(&self) -> &AssembledBeam {
        &self.beam
    }

    pub fn beam_arc(&self) -> Arc<AssembledBeam> {
        Arc::clone(&self.beam)
    }

    /// Critical manifold `G₀(x) = −K₂⁻¹H(x)`.
    pub fn g0<T: Scalar>(&self, x: &DVector<T>) -> DVector<T> {
        -self.beam.solve_k2(&self.beam.axial_quadratic_force(x))
    }

    /// `H₀ = −K₂⁻¹E(x)ẋ`, the time derivative of `G₀` along the flow.
    pub fn h0<T: Scalar>(&self, x: &DVector<T>, xdot: &DVector<T>) -> DVector<T> {
        -self.beam.solve_k2(&self.beam.axial_bilinear(x, xdot))
    }

    /// `G₁ = βK₂⁻¹p(τ)`.
    pub fn g1(&self, tau: f64) -> DVector<f64> {
        self.beam.k2_factor().solve(&self.beam.load_vectors(tau).1)
    }

    /// `H₁ = βK₂⁻¹ṗ(τ)`.
    pub fn h1(&self, tau: f64) -> DVector<f64> {
        self.beam.k2_factor().solve(&self.beam.load_rates(tau).1)
    }

    /// Leading-order slow acceleration `M₁⁻¹(αq − K₁x − F(x,G₀) − G(x))`.
    pub fn leading_acceleration<T: Scalar>(&self, x: &DVector<T>, tau: Option<f64>) -> DVector<T> {
        let b = &self.beam;
        let mut r = -(b.k1_mul(x) + b.coupling_force(x, &self.g0(x)) + b.cubic_force(x));
        if let Some(t) = tau {
            r += b.load_vectors(t).0.map(T::of);
        }
        b.solve_m1(&r)
    }

    /// Second-order term without the load-rate part:
    /// `[K₂M₂⁻¹K₂]⁻¹(2H(ẋ) + E(x)P̄₁)`.
    fn g2_state<T: Scalar>(&self, x: &DVector<T>, xdot: &DVector<T>, tau: Option<f64>) -> DVector<T> {
        let b = &self.beam;
        let p1 = self.leading_acceleration(x, tau);
        let rhs = b.axial_quadratic_force(xdot) * T::of(2.0) + b.axial_bilinear(x, &p1);
        apply_real(&rhs, |v| self.k2m2k2.solve(v))
    }

    /// `G₂ = [K₂M₂⁻¹K₂]⁻¹(2H(ẋ) + E(x)P̄₁) − ζH₁`.
    pub fn g2(&self, x: &DVector<f64>, xdot: &DVector<f64>, tau: f64) -> DVector<f64> {
        self.g2_state(x, xdot, Some(tau)) - self.h1(tau) * self.beam.zeta()
    }

    pub fn order_terms(&self, x: &DVector<f64>, xdot: &DVector<f64>, tau: f64) -> Result<OrderTerms> {
        self.check_slow(x, xdot)?;
        Ok(OrderTerms {
            g0: self.g0(x),
            h0: self.h0(x, xdot),
            g1: self.g1(tau),
            h1: self.h1(tau),
            g2: self.g2(x, xdot, tau),
        })
    }

    /// Fast variables on the slow manifold truncated at `order`:
    /// `y = εG₀ + ε²G₁ (+ ε³G₂)`, `ẏ = εH₀ (+ ε²H₁)`.
    pub fn reconstruct_fast(
        &self,
        x: &DVector<f64>,
        xdot: &DVector<f64>,
        tau: f64,
        order: u8,
    ) -> Result<(DVector<f64>, DVector<f64>)> {
        self.check_slow(x, xdot)?;
        check_order(order)?;
        let eps = self.beam.eps();
        let mut y = self.g0(x) * eps;
        let mut ydot = self.h0(x, xdot) * eps;
        if order >= 1 {
            y += self.g1(tau) * eps.powi(2);
            ydot += self.h1(tau) * eps.powi(2);
        }
        if order >= 2 {
            y += self.g2(x, xdot, tau) * eps.powi(3);
        }
        Ok((y, ydot))
    }

    fn check_slow(&self, x: &DVector<f64>, xdot: &DVector<f64>) -> Result<()> {
        self.beam.check_len("slow state x", self.beam.n_s(), x.len())?;
        self.beam.check_len("slow state xdot", self.beam.n_s(), xdot.len())
    }

    pub fn build_rom(&self, order: u8) -> Result<SfdRom> {
        check_order(order)?;
        Ok(SfdRom { manifold: self.clone(), order })
    }
}

fn check_order(order: u8) -> Result<()> {
    if order > 2 {
        return Err(Error::InvalidArgument(format!("reduction order must be 0, 1 or 2, got {order}")));
    }
    Ok(())
}

/// Reduced transverse model `M₁ẍ + f(τ, x, ẋ) = 0` at a fixed order.
#[derive(Debug, Clone)]
pub struct SfdRom {
    manifold: SlowManifold,
    order: u8,
}

impl SfdRom {
    pub fn order(&self) -> u8 {
        self.order
    }

    pub fn manifold(&self) -> &SlowManifold {
        &self.manifold
    }

    pub fn beam(&self) -> &AssembledBeam {
        self.manifold.beam()
    }

    pub fn dim(&self) -> usize {
        self.beam().n_s()
    }

    pub fn mass(&self) -> &DMatrix<f64> {
        self.beam().m1()
    }

    /// Linear stiffness of the reduced model.
    pub fn linear_stiffness(&self) -> &DMatrix<f64> {
        self.beam().k1()
    }

    /// Linear damping `ζεK₁` (zero at order 0).
    pub fn linear_damping(&self) -> DMatrix<f64> {
        if self.order == 0 {
            DMatrix::zeros(self.dim(), self.dim())
        } else {
            self.beam().k1() * (self.beam().zeta() * self.beam().eps())
        }
    }

    /// Autonomous nonlinear force: everything in `f` beyond `K₁x` and the
    /// linear damping, with loads switched off.
    pub fn nonlinear_force<T: Scalar>(&self, x: &DVector<T>, xdot: &DVector<T>) -> DVector<T> {
        self.nonlinear_force_at(x, xdot, None)
    }

    fn nonlinear_force_at<T: Scalar>(&self, x: &DVector<T>, xdot: &DVector<T>, tau: Option<f64>) -> DVector<T> {
        let m = &self.manifold;
        let b = m.beam();
        let (eps, zeta) = (b.eps(), b.zeta());
        let mut f = b.coupling_force(x, &m.g0(x)) + b.cubic_force(x);
        if self.order >= 1 {
            let h0 = m.h0(x, xdot);
            f += (b.coupling_damping(x, &h0) + b.cubic_damping(x, xdot)) * T::of(eps * zeta);
        }
        if self.order >= 2 {
            let g2 = m.g2_state(x, xdot, tau);
            f += b.coupling_force(x, &g2) * T::of(eps * eps);
        }
        f
    }

    /// Full reduced force `f(τ, x, ẋ)` including loads, so that
    /// `M₁ẍ + f = 0`.
    pub fn force(&self, tau: f64, x: &DVector<f64>, xdot: &DVector<f64>) -> Result<DVector<f64>> {
        let b = self.beam();
        b.check_len("rom x", self.dim(), x.len())?;
        b.check_len("rom xdot", self.dim(), xdot.len())?;
        let (eps, zeta) = (b.eps(), b.zeta());
        let mut f = b.k1() * x + self.nonlinear_force_at(x, xdot, Some(tau)) - b.load_vectors(tau).0;
        if self.order >= 1 {
            f += b.k1() * xdot * (eps * zeta);
            f += b.coupling_force(x, &self.manifold.g1(tau)) * eps;
        }
        // At order 2, ε²[F(x, −ζH₁) + ζD(x)H₁] = 0, leaving ε²F(x, G₂ + ζH₁),
        // which the nonlinear part already holds.
        Ok(f)
    }

    /// Analytic Jacobians `(∂f/∂x, ∂f/∂ẋ)` for orders 0 and 1; `None` at
    /// order 2.
    pub fn tangents(
        &self,
        tau: f64,
        x: &DVector<f64>,
        xdot: &DVector<f64>,
    ) -> Option<(DMatrix<f64>, DMatrix<f64>)> {
        if self.order >= 2 {
            return None;
        }
        let m = &self.manifold;
        let b = m.beam();
        let (eps, zeta) = (b.eps(), b.zeta());
        let d = b.coupling_matrix(x);
        let k2_dt = b.k2_factor().solve_mat(&d.transpose());
        let mut k = b.k1() + b.geometric_stiffness(&m.g0(x)) + b.cubic_damping_matrix(x) * 1.5
            - &d * &k2_dt;
        let mut c = DMatrix::zeros(self.dim(), self.dim());
        if self.order == 1 {
            let dv = b.coupling_matrix(xdot);
            let ez = eps * zeta;
            k += b.geometric_stiffness(&m.g1(tau)) * eps;
            k += (b.geometric_stiffness(&m.h0(x, xdot))
                - &d * b.k2_factor().solve_mat(&dv.transpose())
                + b.cubic_damping_position_tangent(x, xdot))
                * ez;
            c = (b.k1() + b.cubic_damping_matrix(x) - &d * &k2_dt) * ez;
        }
        Some((k, c))
    }

    /// Conserved energy of the order-0 model:
    /// `½ẋᵀM₁ẋ + ½xᵀK₁x + ½∫(G₀,ₓ + ½w_x²)²`.
    pub fn energy(&self, x: &DVector<f64>, xdot: &DVector<f64>) -> f64 {
        let b = self.beam();
        let y = self.manifold.g0(x) * b.eps();
        0.5 * xdot.dot(&(b.m1() * xdot)) + b.strain_energy(x, &y)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beam::{assemble, BeamConfig, ForcingSpec};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn manifold(forcing: ForcingSpec) -> SlowManifold {
        let beam = assemble(&BeamConfig::default().with_elements(8).with_forcing(forcing)).unwrap();
        SlowManifold::new(Arc::new(beam)).unwrap()
    }

    fn rand_vec(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
        DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn default_beam_satisfies_assumptions() {
        let m = manifold(ForcingSpec::default());
        assert!(verify_assumptions(m.beam()).all_pass());
    }

    #[test]
    fn zero_damping_fails_stability() {
        let m = manifold(ForcingSpec::default());
        let r = verify_fast_subsystem(m.beam().m2(), m.beam().k2(), 0.0);
        assert!(!r.a3_stable && r.a2_solvable);
    }

    #[test]
    fn singular_k2_fails_solvability() {
        let m = manifold(ForcingSpec::default());
        let mut k2 = m.beam().k2().clone();
        let n = k2.nrows();
        k2.row_mut(n - 1).fill(0.0);
        k2.column_mut(n - 1).fill(0.0);
        let r = verify_fast_subsystem(m.beam().m2(), &k2, 1.0);
        assert!(!r.a2_solvable);
    }

    #[test]
    fn critical_manifold_residual_and_scaling() {
        let m = manifold(ForcingSpec::default());
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10 {
            let x = rand_vec(&mut rng, m.beam().n_s());
            let g = m.g0(&x);
            let h = m.beam().axial_quadratic_force(&x);
            assert!((m.beam().k2() * &g + &h).norm() <= 1e-12 * h.norm());
            assert!((m.g0(&(&x * 1.7)) - &g * 1.7f64.powi(2)).norm() <= 1e-12 * g.norm());
        }
        assert_eq!(m.g0(&DVector::<f64>::zeros(m.beam().n_s())).norm(), 0.0);
    }

    #[test]
    fn unforced_origin_gives_zero_terms() {
        let m = manifold(ForcingSpec::off());
        let z = DVector::zeros(m.beam().n_s());
        let t = m.order_terms(&z, &z, 0.3).unwrap();
        for v in [&t.g0, &t.h0, &t.g1, &t.h1, &t.g2] {
            assert_eq!(v.norm(), 0.0);
        }
        let (y, yd) = m.reconstruct_fast(&z, &z, 0.3, 2).unwrap();
        assert_eq!(y.norm() + yd.norm(), 0.0);
    }

    #[test]
    fn velocity_term_of_g2_is_quadratic() {
        let m = manifold(ForcingSpec::off());
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let n = m.beam().n_s();
        let v = rand_vec(&mut rng, n);
        let z = DVector::zeros(n);
        let a = m.g2(&z, &v, 0.0);
        let b = m.g2(&z, &(&v * 2.0), 0.0);
        assert!((b - &a * 4.0).norm() <= 1e-12 * a.norm());
    }

    #[test]
    fn h0_is_time_derivative_of_g0() {
        let m = manifold(ForcingSpec::off());
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = m.beam().n_s();
        let x = rand_vec(&mut rng, n);
        let v = rand_vec(&mut rng, n);
        let h = 1e-6;
        let fd = (m.g0(&(&x + &v * h)) - m.g0(&(&x - &v * h))) / (2.0 * h);
        let h0 = m.h0(&x, &v);
        assert!((fd - &h0).norm() <= 1e-7 * h0.norm());
    }

    #[test]
    fn analytic_rom_tangents_match_finite_differences() {
        let m = manifold(ForcingSpec::default());
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = m.beam().n_s();
        let x = rand_vec(&mut rng, n);
        let v = rand_vec(&mut rng, n);
        let tau = 0.37;
        for order in 0..=1 {
            let rom = m.build_rom(order).unwrap();
            let (k, c) = rom.tangents(tau, &x, &v).unwrap();
            let h = 1e-6;
            for j in 0..n {
                let mut xp = x.clone();
                xp[j] += h;
                let mut xm = x.clone();
                xm[j] -= h;
                let col = (rom.force(tau, &xp, &v).unwrap() - rom.force(tau, &xm, &v).unwrap()) / (2.0 * h);
                assert!((col - k.column(j)).norm() <= 1e-6 * k.norm());
                let mut vp = v.clone();
                vp[j] += h;
                let mut vm = v.clone();
                vm[j] -= h;
                let col = (rom.force(tau, &x, &vp).unwrap() - rom.force(tau, &x, &vm).unwrap()) / (2.0 * h);
                assert!((col - c.column(j)).norm() <= 1e-6 * k.norm());
            }
        }
        assert!(m.build_rom(2).unwrap().tangents(tau, &x, &v).is_none());
    }

    #[test]
    fn rom_equilibrium_and_order_bounds() {
        let m = manifold(ForcingSpec::off());
        assert!(m.build_rom(3).is_err());
        let z = DVector::zeros(m.beam().n_s());
        for order in 0..=2 {
            let rom = m.build_rom(order).unwrap();
            assert_eq!(rom.force(1.0, &z, &z).unwrap().norm(), 0.0);
        }
    }

    #[test]
    fn order_one_correction_vanishes_without_damping_and_axial_load() {
        let beam = assemble(
            &BeamConfig { beta: 0.0, ..BeamConfig::default().with_elements(6).with_zeta(0.0) },
        )
        .unwrap();
        let m = SlowManifold::new(Arc::new(beam)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let x = rand_vec(&mut rng, m.beam().n_s());
        let v = rand_vec(&mut rng, m.beam().n_s());
        let f0 = m.build_rom(0).unwrap().force(0.4, &x, &v).unwrap();
        let f1 = m.build_rom(1).unwrap().force(0.4, &x, &v).unwrap();
        assert!((f1 - &f0).norm() <= 1e-14 * f0.norm());
    }
}
