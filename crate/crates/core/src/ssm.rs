//! Single-mode spectral submanifold of a diagonalized polynomial system
//! `ż = Λz + 𝒯(z)`.
//!
//! The manifold is parametrized as `z = W(s)`, `s = (s₁, s₂)`, with reduced
//! dynamics `ṡ₁ = λ s₁ + β s₁² s₂` (and its partner for `s₂`). Coefficients
//! are stored per monomial: `w2[0..3]` hold `s₁², s₁s₂, s₂²` and `w3[0..4]`
//! hold `s₁³, s₁²s₂, s₁s₂², s₂³`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::multilinear::{cubic_trilinear, homogeneity_error, polarize2, polarize3};
use crate::scalar::norm;
use crate::sfd::SfdRom;
use crate::spectra::{mode_roots, undamped_modes};

type C = Complex64;
type ModalMap = Arc<dyn Fn(&DVector<C>) -> DVector<C> + Send + Sync>;

/// Denominators below `SMALL_DIVISOR_TOL · |λᵢ|` are rejected.
pub const SMALL_DIVISOR_TOL: f64 = 1e-6;

/// Physical ↔ modal maps of a proportionally damped second-order system.
#[derive(Debug, Clone)]
pub struct ModalBasis {
    /// Mass-normalized undamped mode shapes as columns.
    pub shapes: DMatrix<f64>,
    /// `Φᵀ M`.
    pub projector: DMatrix<f64>,
}

/// `ż = Λz + 𝒯(z)` with `Λ` diagonal and `𝒯` polynomial of degree ≤ 3.
#[derive(Clone)]
pub struct DiagonalizedSystem {
    lambda: Vec<C>,
    basis: Option<ModalBasis>,
    nonlinearity: ModalMap,
}

impl std::fmt::Debug for DiagonalizedSystem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DiagonalizedSystem")
            .field("lambda", &self.lambda)
            .field("basis", &self.basis.is_some())
            .finish()
    }
}

/// Presence of quadratic and cubic terms, detected by probing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DegreeFlags {
    pub quadratic: bool,
    pub cubic: bool,
}

impl DiagonalizedSystem {
    /// System given directly in modal coordinates.
    pub fn from_modal<F>(lambda: Vec<C>, t: F) -> Result<Self>
    where
        F: Fn(&DVector<C>) -> DVector<C> + Send + Sync + 'static,
    {
        if lambda.is_empty() || !lambda.len().is_multiple_of(2) {
            return Err(Error::InvalidArgument(format!(
                "eigenvalue list must have positive even length, got {}",
                lambda.len()
            )));
        }
        Ok(Self { lambda, basis: None, nonlinearity: Arc::new(t) })
    }

    /// `Mẍ + ζεKẋ + Kx + f(x, ẋ) = 0` with `Φ` mass-normalized and
    /// `ΦᵀKΦ = diag(ω²)`. Mode `k` owns modal indices `2k`, `2k + 1`, with
    /// `x = Σ φₖ(z₂ₖ + z₂ₖ₊₁)` and `ẋ = Σ φₖ(λ₂ₖz₂ₖ + λ₂ₖ₊₁z₂ₖ₊₁)`.
    pub fn from_mechanical<F>(
        omega: &DVector<f64>,
        shapes: DMatrix<f64>,
        mass: &DMatrix<f64>,
        zeta_eps: f64,
        force: F,
    ) -> Result<Self>
    where
        F: Fn(&DVector<C>, &DVector<C>) -> DVector<C> + Send + Sync + 'static,
    {
        let n = omega.len();
        if shapes.nrows() != mass.nrows() || shapes.ncols() != n {
            return Err(Error::DimensionMismatch {
                context: "mode shapes",
                expected: n,
                got: shapes.ncols(),
            });
        }
        let mut lambda = Vec::with_capacity(2 * n);
        for (k, &w) in omega.iter().enumerate() {
            let (a, b, _) = mode_roots(w, zeta_eps);
            if (a - b).norm() <= 1e-12 * a.norm().max(1.0) {
                return Err(Error::Unsupported(format!(
                    "mode {} is critically damped (defective linear part)",
                    k + 1
                )));
            }
            lambda.push(a);
            lambda.push(b);
        }
        let projector = shapes.transpose() * mass;
        let basis = ModalBasis { shapes, projector };
        let lam = lambda.clone();
        let b2 = basis.clone();
        let t = move |z: &DVector<C>| {
            let (x, xd) = modal_to_physical(&b2, &lam, z);
            let g = b2.projector.map(C::from) * force(&x, &xd);
            let mut out = DVector::zeros(z.len());
            for k in 0..g.len() {
                let d = lam[2 * k + 1] - lam[2 * k];
                out[2 * k] = g[k] / d;
                out[2 * k + 1] = -g[k] / d;
            }
            out
        };
        Ok(Self { lambda, basis: Some(basis), nonlinearity: Arc::new(t) })
    }

    /// Autonomous part of a reduced model with linear damping (order ≥ 1).
    pub fn from_rom(rom: &SfdRom) -> Result<Self> {
        if rom.order() == 0 {
            return Err(Error::Unsupported(
                "the order-0 reduced model is undamped; its linear part has no decay".into(),
            ));
        }
        let beam = rom.beam();
        let (omega, shapes) = undamped_modes(beam)?;
        let zeta_eps = beam.zeta() * beam.eps();
        let rom = rom.clone();
        Self::from_mechanical(&omega, shapes, beam.m1(), zeta_eps, move |x, v| {
            rom.nonlinear_force(x, v)
        })
    }

    pub fn dim(&self) -> usize {
        self.lambda.len()
    }

    pub fn lambda(&self) -> &[C] {
        &self.lambda
    }

    pub fn basis(&self) -> Option<&ModalBasis> {
        self.basis.as_ref()
    }

    /// `𝒯(z)`.
    pub fn nonlinearity(&self, z: &DVector<C>) -> DVector<C> {
        (self.nonlinearity)(z)
    }

    /// Even (quadratic) part `[𝒯(z) + 𝒯(−z)]/2`.
    pub fn quadratic_part(&self, z: &DVector<C>) -> DVector<C> {
        (self.nonlinearity(z) + self.nonlinearity(&-z)) * C::from(0.5)
    }

    /// Odd (cubic) part `[𝒯(z) − 𝒯(−z)]/2`.
    pub fn cubic_part(&self, z: &DVector<C>) -> DVector<C> {
        (self.nonlinearity(z) - self.nonlinearity(&-z)) * C::from(0.5)
    }

    /// `ż = Λz + 𝒯(z)`.
    pub fn vector_field(&self, z: &DVector<C>) -> DVector<C> {
        let mut out = self.nonlinearity(z);
        for (o, (l, zi)) in out.iter_mut().zip(self.lambda.iter().zip(z.iter())) {
            *o += l * zi;
        }
        out
    }

    fn probe(&self) -> DVector<C> {
        DVector::from_fn(self.dim(), |i, _| {
            let t = i as f64 + 1.0;
            C::new((0.37 * t).sin(), (0.61 * t + 0.2).cos()) * 0.3
        })
    }

    pub fn degree_flags(&self) -> DegreeFlags {
        let z = self.probe();
        let full = norm(&self.nonlinearity(&z));
        let q = norm(&self.quadratic_part(&z));
        let c = norm(&self.cubic_part(&z));
        let tiny = 1e-13 * full.max(f64::MIN_POSITIVE);
        DegreeFlags { quadratic: q > tiny, cubic: c > tiny }
    }

    /// Verifies that 𝒯 is a sum of homogeneous quadratic and cubic terms.
    pub fn check_polynomial(&self) -> Result<DegreeFlags> {
        let flags = self.degree_flags();
        let z = self.probe();
        let q = |v: &DVector<C>| self.quadratic_part(v);
        let c = |v: &DVector<C>| self.cubic_part(v);
        if flags.quadratic {
            let e = homogeneity_error(&q, &z, 2);
            if e > 1e-8 {
                return Err(Error::DegreeCheck { degree: 2, error: e });
            }
        }
        if flags.cubic {
            let e = homogeneity_error(&c, &z, 3);
            if e > 1e-8 {
                return Err(Error::DegreeCheck { degree: 3, error: e });
            }
        }
        Ok(flags)
    }

    /// `(x, ẋ)` for a modal state (complex in general).
    pub fn to_physical(&self, z: &DVector<C>) -> Result<(DVector<C>, DVector<C>)> {
        let b = self.basis.as_ref().ok_or_else(no_basis)?;
        self.check_dim(z)?;
        Ok(modal_to_physical(b, &self.lambda, z))
    }

    /// Modal coordinates of a real physical state.
    pub fn from_physical(&self, x: &DVector<f64>, xdot: &DVector<f64>) -> Result<DVector<C>> {
        let b = self.basis.as_ref().ok_or_else(no_basis)?;
        let q = &b.projector * x;
        let qd = &b.projector * xdot;
        let mut z = DVector::zeros(self.dim());
        for k in 0..q.len() {
            let (la, lb) = (self.lambda[2 * k], self.lambda[2 * k + 1]);
            let d = lb - la;
            z[2 * k] = (lb * q[k] - qd[k]) / d;
            z[2 * k + 1] = (qd[k] - la * q[k]) / d;
        }
        Ok(z)
    }

    /// `‖AP − P diag(Λ)‖ / ‖A‖` for the first-order operator of
    /// `Mẍ + Dẋ + Kx = 0`.
    pub fn diagonalization_residual(
        &self,
        mass: &DMatrix<f64>,
        damping: &DMatrix<f64>,
        stiffness: &DMatrix<f64>,
    ) -> Result<f64> {
        let b = self.basis.as_ref().ok_or_else(no_basis)?;
        let n = mass.nrows();
        let minv = mass.clone().try_inverse().ok_or_else(|| Error::Singular("mass".into()))?;
        let mut a = DMatrix::<f64>::zeros(2 * n, 2 * n);
        a.view_mut((0, n), (n, n)).fill_with_identity();
        a.view_mut((n, 0), (n, n)).copy_from(&(-&minv * stiffness));
        a.view_mut((n, n), (n, n)).copy_from(&(-&minv * damping));
        let ac = a.map(C::from);
        let mut p = DMatrix::<C>::zeros(2 * n, self.dim());
        for j in 0..self.dim() {
            let k = j / 2;
            for r in 0..n {
                let phi = C::from(b.shapes[(r, k)]);
                p[(r, j)] = phi;
                p[(n + r, j)] = phi * self.lambda[j];
            }
        }
        let mut res = &ac * &p;
        for j in 0..self.dim() {
            let l = self.lambda[j];
            for r in 0..2 * n {
                res[(r, j)] -= p[(r, j)] * l;
            }
        }
        Ok(res.norm() / a.norm())
    }

    fn check_dim(&self, z: &DVector<C>) -> Result<()> {
        if z.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                context: "modal state",
                expected: self.dim(),
                got: z.len(),
            });
        }
        Ok(())
    }

    fn check_master(&self, master: usize) -> Result<()> {
        if 2 * master + 1 >= self.dim() {
            return Err(Error::OutOfRange { what: "master mode", index: master, len: self.dim() / 2 });
        }
        Ok(())
    }
}

fn no_basis() -> Error {
    Error::InvalidArgument("system has no physical basis".into())
}

fn modal_to_physical(b: &ModalBasis, lambda: &[C], z: &DVector<C>) -> (DVector<C>, DVector<C>) {
    let n = b.shapes.ncols();
    let mut q = DVector::<C>::zeros(n);
    let mut qd = DVector::<C>::zeros(n);
    for k in 0..n {
        q[k] = z[2 * k] + z[2 * k + 1];
        qd[k] = lambda[2 * k] * z[2 * k] + lambda[2 * k + 1] * z[2 * k + 1];
    }
    let shapes = b.shapes.map(C::from);
    (&shapes * q, &shapes * qd)
}

fn unit(n: usize, i: usize) -> DVector<C> {
    let mut e = DVector::zeros(n);
    e[i] = C::from(1.0);
    e
}

/// The eight symmetric-tensor slices `T(e_j, e_k, e_l)` for master indices
/// `j, k, l ∈ {ℓ, ℓ+1}`. Triples are encoded by bits: bit 2 for `j`, bit 1
/// for `k`, bit 0 for `l`, a set bit meaning `ℓ + 1`.
#[derive(Debug, Clone)]
pub struct MasterSlices {
    pub slices: [DVector<C>; 8],
}

impl MasterSlices {
    pub fn get(&self, j: usize, k: usize, l: usize) -> &DVector<C> {
        &self.slices[(j << 2) | (k << 1) | l]
    }
}

/// Slices of the cubic modal tensor along the master directions, by
/// polarization of 𝒯. Fails if 𝒯 has quadratic terms.
pub fn modal_cubic_slices(sys: &DiagonalizedSystem, master: usize) -> Result<MasterSlices> {
    sys.check_master(master)?;
    if sys.degree_flags().quadratic {
        return Err(Error::Unsupported(
            "quadratic terms present; use the general quadratic-cubic path".into(),
        ));
    }
    let n = sys.dim();
    let e = [unit(n, 2 * master), unit(n, 2 * master + 1)];
    let g = |z: &DVector<C>| sys.nonlinearity(z);
    let mut out: Vec<DVector<C>> = Vec::with_capacity(8);
    for code in 0..8 {
        let (j, k, l) = ((code >> 2) & 1, (code >> 1) & 1, code & 1);
        out.push(cubic_trilinear(g, &e[j], &e[k], &e[l])?);
    }
    Ok(MasterSlices { slices: out.try_into().expect("eight slices") })
}

/// Scaling of the linear part `W⁽¹⁾`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum W1Normalization {
    /// Nonzero entries `λ_ℓ`, `λ_{ℓ+1}`.
    #[default]
    Eigenvalue,
    /// Nonzero entries `1`, `1`.
    Unit,
}

/// Cubic-order SSM parametrization.
#[derive(Debug, Clone)]
pub struct SsmExpansion {
    master: usize,
    lambda: Vec<C>,
    normalization: W1Normalization,
    scale: [C; 2],
    w2: [DVector<C>; 3],
    w3: [DVector<C>; 4],
    beta: [C; 2],
}

fn check_divisor(den: C, lambda_i: C, row: usize, triple: &[usize]) -> Result<C> {
    if den.norm() < SMALL_DIVISOR_TOL * lambda_i.norm() {
        return Err(Error::SmallDivisor { row, triple: triple.to_vec(), denominator: den.norm() });
    }
    Ok(den)
}

/// Cubic SSM of a strictly cubic system.
pub fn compute_ssm(
    sys: &DiagonalizedSystem,
    master: usize,
    normalization: W1Normalization,
) -> Result<SsmExpansion> {
    let slices = modal_cubic_slices(sys, master)?;
    let n = sys.dim();
    let zero = DVector::zeros(n);
    assemble_expansion(sys, master, normalization, &slices, [zero.clone(), zero.clone(), zero], None)
}

/// Cubic SSM of a system with quadratic and cubic terms.
pub fn compute_ssm_general(
    sys: &DiagonalizedSystem,
    master: usize,
    normalization: W1Normalization,
) -> Result<SsmExpansion> {
    sys.check_master(master)?;
    let flags = sys.check_polynomial()?;
    if !flags.quadratic {
        return compute_ssm(sys, master, normalization);
    }
    let n = sys.dim();
    let (il, ir) = (2 * master, 2 * master + 1);
    let (lam, lam_r) = (sys.lambda[il], sys.lambda[ir]);
    let c = scale_of(normalization, lam, lam_r);
    let a = unit(n, il) * c[0];
    let b = unit(n, ir) * c[1];
    let quad = |z: &DVector<C>| sys.quadratic_part(z);
    let cubic = |z: &DVector<C>| sys.cubic_part(z);
    let bil = |u: &DVector<C>, v: &DVector<C>| polarize2(&quad, u, v);

    let qa = quad(&a);
    let qab = bil(&a, &b) * C::from(2.0);
    let qb = quad(&b);
    let mut w2 = [DVector::zeros(n), DVector::zeros(n), DVector::zeros(n)];
    for i in 0..n {
        let li = sys.lambda[i];
        w2[0][i] = qa[i] / check_divisor(lam * 2.0 - li, li, i, &[il, il])?;
        w2[1][i] = qab[i] / check_divisor(lam + lam_r - li, li, i, &[il, ir])?;
        w2[2][i] = qb[i] / check_divisor(lam_r * 2.0 - li, li, i, &[ir, ir])?;
    }
    let e = [unit(n, il), unit(n, ir)];
    let mut out: Vec<DVector<C>> = Vec::with_capacity(8);
    for code in 0..8 {
        let (j, k, l) = ((code >> 2) & 1, (code >> 1) & 1, code & 1);
        out.push(cubic_trilinear(cubic, &e[j], &e[k], &e[l])?);
    }
    let slices = MasterSlices { slices: out.try_into().expect("eight slices") };
    let two = C::from(2.0);
    let coupling = [
        bil(&a, &w2[0]) * two,
        (bil(&a, &w2[1]) + bil(&b, &w2[0])) * two,
        (bil(&a, &w2[2]) + bil(&b, &w2[1])) * two,
        bil(&b, &w2[2]) * two,
    ];
    assemble_expansion(sys, master, normalization, &slices, w2, Some(coupling))
}

fn scale_of(normalization: W1Normalization, lam: C, lam_r: C) -> [C; 2] {
    match normalization {
        W1Normalization::Eigenvalue => [lam, lam_r],
        W1Normalization::Unit => [C::from(1.0), C::from(1.0)],
    }
}

/// Solves the cubic homological equations given the unit slices, the
/// quadratic coefficients and the quadratic-cubic coupling
/// `2B(W⁽¹⁾s, W⁽²⁾(s))` split by monomial.
fn assemble_expansion(
    sys: &DiagonalizedSystem,
    master: usize,
    normalization: W1Normalization,
    slices: &MasterSlices,
    w2: [DVector<C>; 3],
    coupling: Option<[DVector<C>; 4]>,
) -> Result<SsmExpansion> {
    let n = sys.dim();
    let (il, ir) = (2 * master, 2 * master + 1);
    let (lam, lam_r) = (sys.lambda[il], sys.lambda[ir]);
    let c = scale_of(normalization, lam, lam_r);
    let three = C::from(3.0);
    // Monomial right-hand sides from the symmetric slices scaled by W⁽¹⁾.
    let s30 = slices.get(0, 0, 0) * (c[0] * c[0] * c[0]);
    let s21 = slices.get(0, 0, 1) * (c[0] * c[0] * c[1] * three);
    let s12 = slices.get(0, 1, 1) * (c[0] * c[1] * c[1] * three);
    let s03 = slices.get(1, 1, 1) * (c[1] * c[1] * c[1]);
    let rhs = match coupling {
        Some([x, v, u, y]) => [x + s30, v + s21, u + s12, y + s03],
        None => [s30, s21, s12, s03],
    };
    let exps = [(3.0, 0.0), (2.0, 1.0), (1.0, 2.0), (0.0, 3.0)];
    let triples: [[usize; 3]; 4] = [[il, il, il], [il, il, ir], [il, ir, ir], [ir, ir, ir]];
    let mut w3 = [DVector::zeros(n), DVector::zeros(n), DVector::zeros(n), DVector::zeros(n)];
    for (m, &(a, b)) in exps.iter().enumerate() {
        for i in 0..n {
            if (m == 1 && i == il) || (m == 2 && i == ir) {
                continue;
            }
            let li = sys.lambda[i];
            let den = check_divisor(lam * a + lam_r * b - li, li, i, &triples[m])?;
            w3[m][i] = rhs[m][i] / den;
        }
    }
    let beta = [rhs[1][il] / c[0], rhs[2][ir] / c[1]];
    Ok(SsmExpansion {
        master,
        lambda: sys.lambda.clone(),
        normalization,
        scale: c,
        w2,
        w3,
        beta,
    })
}

/// Monomials `s₁^a s₂^b` for the quadratic and cubic slots.
fn monomials(s: [C; 2]) -> ([C; 3], [C; 4]) {
    let [a, b] = s;
    ([a * a, a * b, b * b], [a * a * a, a * a * b, a * b * b, b * b * b])
}

impl SsmExpansion {
    /// Master mode (zero-based); modal indices `2·master`, `2·master + 1`.
    pub fn master(&self) -> usize {
        self.master
    }

    pub fn normalization(&self) -> W1Normalization {
        self.normalization
    }

    /// Nonzero entries of `W⁽¹⁾` (rows ℓ and ℓ+1).
    pub fn w1_scale(&self) -> [C; 2] {
        self.scale
    }

    pub fn lambda_master(&self) -> C {
        self.lambda[2 * self.master]
    }

    pub fn beta(&self) -> C {
        self.beta[0]
    }

    /// Cubic coefficient of the partner equation `ṡ₂ = λ̄s₂ + β̄s₁s₂²`.
    pub fn beta_partner(&self) -> C {
        self.beta[1]
    }

    pub fn dim(&self) -> usize {
        self.lambda.len()
    }

    /// Symmetric coefficient `W⁽¹⁾_{i,j}`, `j ∈ {0, 1}`.
    pub fn w1(&self, i: usize, j: usize) -> C {
        if i == 2 * self.master + j {
            self.scale[j]
        } else {
            C::from(0.0)
        }
    }

    /// Symmetric coefficient `W⁽²⁾_{i,jk}`, `j, k ∈ {0, 1}`.
    pub fn w2(&self, i: usize, j: usize, k: usize) -> C {
        match j + k {
            0 => self.w2[0][i],
            1 => self.w2[1][i] * 0.5,
            _ => self.w2[2][i],
        }
    }

    /// Symmetric coefficient `W⁽³⁾_{i,jkl}`, `j, k, l ∈ {0, 1}`.
    pub fn w3(&self, i: usize, j: usize, k: usize, l: usize) -> C {
        match j + k + l {
            0 => self.w3[0][i],
            1 => self.w3[1][i] / 3.0,
            2 => self.w3[2][i] / 3.0,
            _ => self.w3[3][i],
        }
    }

    pub fn w2_monomials(&self) -> &[DVector<C>; 3] {
        &self.w2
    }

    pub fn w3_monomials(&self) -> &[DVector<C>; 4] {
        &self.w3
    }

    /// `W(s)` for an arbitrary `s ∈ ℂ²`.
    pub fn evaluate_w_unchecked(&self, s: [C; 2]) -> DVector<C> {
        let (m2, m3) = monomials(s);
        let mut z = DVector::zeros(self.dim());
        for i in 0..self.dim() {
            let mut v = self.w1(i, 0) * s[0] + self.w1(i, 1) * s[1];
            for q in 0..3 {
                v += self.w2[q][i] * m2[q];
            }
            for q in 0..4 {
                v += self.w3[q][i] * m3[q];
            }
            z[i] = v;
        }
        z
    }

    /// `W(s)` for a conjugate pair `s = (s₁, s̄₁)`.
    pub fn evaluate_w(&self, s: [C; 2]) -> Result<DVector<C>> {
        let mismatch = (s[1] - s[0].conj()).norm();
        if mismatch > 1e-12 * s[0].norm().max(1e-300) && mismatch > 0.0 {
            return Err(Error::NotConjugate(mismatch));
        }
        Ok(self.evaluate_w_unchecked(s))
    }

    /// `DW(s)·v`.
    pub fn derivative(&self, s: [C; 2], v: [C; 2]) -> DVector<C> {
        let [a, b] = s;
        let two = C::from(2.0);
        let three = C::from(3.0);
        let d2 = [[two * a, C::from(0.0)], [b, a], [C::from(0.0), two * b]];
        let d3 = [
            [three * a * a, C::from(0.0)],
            [two * a * b, a * a],
            [b * b, two * a * b],
            [C::from(0.0), three * b * b],
        ];
        let mut out = DVector::zeros(self.dim());
        for i in 0..self.dim() {
            let mut r = self.w1(i, 0) * v[0] + self.w1(i, 1) * v[1];
            for q in 0..3 {
                r += self.w2[q][i] * (d2[q][0] * v[0] + d2[q][1] * v[1]);
            }
            for q in 0..4 {
                r += self.w3[q][i] * (d3[q][0] * v[0] + d3[q][1] * v[1]);
            }
            out[i] = r;
        }
        out
    }

    /// Reduced vector field `R(s)`.
    pub fn reduced_field(&self, s: [C; 2]) -> [C; 2] {
        let (l, lr) = (self.lambda[2 * self.master], self.lambda[2 * self.master + 1]);
        [
            l * s[0] + self.beta[0] * s[0] * s[0] * s[1],
            lr * s[1] + self.beta[1] * s[0] * s[1] * s[1],
        ]
    }

    /// Master coordinates read off a modal state: `s = (z_ℓ/c₁, z_{ℓ+1}/c₂)`.
    pub fn master_coordinates(&self, z: &DVector<C>) -> [C; 2] {
        let i = 2 * self.master;
        [z[i] / self.scale[0], z[i + 1] / self.scale[1]]
    }

    /// `s = (ρe^{iθ}, ρe^{−iθ})`.
    pub fn polar_to_s(rho: f64, theta: f64) -> [C; 2] {
        let s = C::from_polar(rho, theta);
        [s, s.conj()]
    }

    /// Exports `(i, j, k, l, Re, Im)` records of the nonzero coefficients,
    /// one-based; `k = l = 0` marks `W⁽¹⁾`, `l = 0` marks `W⁽²⁾`.
    pub fn coefficient_records(&self) -> Vec<(usize, usize, usize, usize, C)> {
        let mut out = Vec::new();
        for i in 0..self.dim() {
            for j in 0..2 {
                let v = self.w1(i, j);
                if v.norm() != 0.0 {
                    out.push((i + 1, j + 1, 0, 0, v));
                }
            }
        }
        for i in 0..self.dim() {
            for j in 0..2 {
                for k in 0..2 {
                    let v = self.w2(i, j, k);
                    if v.norm() != 0.0 {
                        out.push((i + 1, j + 1, k + 1, 0, v));
                    }
                }
            }
        }
        for i in 0..self.dim() {
            for j in 0..2 {
                for k in 0..2 {
                    for l in 0..2 {
                        let v = self.w3(i, j, k, l);
                        if v.norm() != 0.0 {
                            out.push((i + 1, j + 1, k + 1, l + 1, v));
                        }
                    }
                }
            }
        }
        out
    }
}

/// `DW(s)·R(s) − ΛW(s) − 𝒯(W(s))`.
pub fn invariance_residual(sys: &DiagonalizedSystem, exp: &SsmExpansion, s: [C; 2]) -> DVector<C> {
    let w = exp.evaluate_w_unchecked(s);
    let mut r = exp.derivative(s, exp.reduced_field(s)) - sys.nonlinearity(&w);
    for i in 0..r.len() {
        r[i] -= sys.lambda[i] * w[i];
    }
    r
}

/// Reduced dynamics in polar form:
/// `ρ̇ = ρ(Re λ + Re β ρ²)`, `θ̇ = Im λ + Im β ρ²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarDynamics {
    pub re_lambda: f64,
    pub im_lambda: f64,
    pub re_beta: f64,
    pub im_beta: f64,
}

pub fn reduced_dynamics(exp: &SsmExpansion) -> PolarDynamics {
    let l = exp.lambda_master();
    let b = exp.beta();
    PolarDynamics { re_lambda: l.re, im_lambda: l.im, re_beta: b.re, im_beta: b.im }
}

impl PolarDynamics {
    pub fn rho_rate(&self, rho: f64) -> f64 {
        rho * (self.re_lambda + self.re_beta * rho * rho)
    }

    /// Backbone: instantaneous frequency at amplitude ρ.
    pub fn backbone(&self, rho: f64) -> f64 {
        self.im_lambda + self.im_beta * rho * rho
    }

    /// Nontrivial fixed amplitude `√(−Re λ / Re β)` when it exists.
    pub fn stationary_amplitude(&self) -> Option<f64> {
        let r = -self.re_lambda / self.re_beta;
        (self.re_beta != 0.0 && r > 0.0).then(|| r.sqrt())
    }
}

/// Distances of a modal trajectory sample from the SSM.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SsmDistance {
    /// `|Q₁(z)|`: master amplitude.
    pub master_amplitude: f64,
    /// `|Q₂(z) − Q₂(W(s))|`.
    pub transverse: f64,
    /// `|z − W(s)|`.
    pub full: f64,
}

pub fn ssm_diagnostics(
    sys: &DiagonalizedSystem,
    exp: &SsmExpansion,
    trajectory: &[DVector<C>],
) -> Result<Vec<SsmDistance>> {
    if exp.dim() != sys.dim() {
        return Err(Error::DimensionMismatch {
            context: "expansion vs system",
            expected: sys.dim(),
            got: exp.dim(),
        });
    }
    let (il, ir) = (2 * exp.master, 2 * exp.master + 1);
    trajectory
        .iter()
        .map(|z| {
            sys.check_dim(z)?;
            let s = exp.master_coordinates(z);
            let w = exp.evaluate_w_unchecked(s);
            let mut transverse = 0.0;
            let mut full = 0.0;
            for i in 0..z.len() {
                let d = (z[i] - w[i]).norm_sqr();
                full += d;
                if i != il && i != ir {
                    transverse += d;
                }
            }
            Ok(SsmDistance {
                master_amplitude: (z[il].norm_sqr() + z[ir].norm_sqr()).sqrt(),
                transverse: transverse.sqrt(),
                full: full.sqrt(),
            })
        })
        .collect()
}

/// Dense symmetric cubic tensor `T[i][j][k][l]` of a strictly cubic modal
/// map, for small systems only.
pub fn dense_cubic_tensor(sys: &DiagonalizedSystem) -> Result<Vec<Vec<Vec<Vec<C>>>>> {
    let n = sys.dim();
    if n > 24 {
        return Err(Error::InvalidArgument(format!("dense tensor export limited to 24 modal dofs, got {n}")));
    }
    let g = |z: &DVector<C>| sys.nonlinearity(z);
    let e: Vec<DVector<C>> = (0..n).map(|i| unit(n, i)).collect();
    let mut t = vec![vec![vec![vec![C::from(0.0); n]; n]; n]; n];
    for j in 0..n {
        for k in j..n {
            for l in k..n {
                let v = polarize3(&g, &e[j], &e[k], &e[l]);
                for i in 0..n {
                    for (a, b, c) in [(j, k, l), (j, l, k), (k, j, l), (k, l, j), (l, j, k), (l, k, j)] {
                        t[i][a][b][c] = v[i];
                    }
                }
            }
        }
    }
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn duffing_pair() -> DiagonalizedSystem {
        // Two weakly damped oscillators with a cubic coupling, written
        // physically so that 𝒯 has real structure.
        let omega = DVector::from_vec(vec![1.0, 3.3]);
        let shapes = DMatrix::identity(2, 2);
        let mass = DMatrix::identity(2, 2);
        DiagonalizedSystem::from_mechanical(&omega, shapes, &mass, 0.02, |x, v| {
            DVector::from_vec(vec![
                x[0] * x[0] * x[0] * 0.8 + x[0] * x[1] * x[1] * 0.3 + v[0] * x[0] * x[0] * 0.05,
                x[0] * x[0] * x[1] * 0.3 + x[1] * x[1] * x[1] * 0.5,
            ])
        })
        .unwrap()
    }

    #[test]
    fn strictly_cubic_system_has_no_quadratic_part() {
        let sys = duffing_pair();
        let flags = sys.check_polynomial().unwrap();
        assert!(flags.cubic && !flags.quadratic);
        let z = sys.probe();
        let r = sys.nonlinearity(&(&z * C::from(2.0))) - sys.nonlinearity(&z) * C::from(8.0);
        assert!(norm(&r) < 1e-12 * norm(&sys.nonlinearity(&z)) * 8.0);
    }

    #[test]
    fn modal_round_trip() {
        let sys = duffing_pair();
        let x = DVector::from_vec(vec![0.3, -0.2]);
        let v = DVector::from_vec(vec![-0.1, 0.5]);
        let z = sys.from_physical(&x, &v).unwrap();
        let (xb, vb) = sys.to_physical(&z).unwrap();
        for i in 0..2 {
            assert!((xb[i] - x[i]).norm() < 1e-14);
            assert!((vb[i] - v[i]).norm() < 1e-14);
        }
    }

    #[test]
    fn kill_factors_and_zero_quadratic() {
        let sys = duffing_pair();
        let exp = compute_ssm(&sys, 0, W1Normalization::Eigenvalue).unwrap();
        assert!(exp.w2_monomials().iter().all(|v| norm(v) == 0.0));
        for (j, k, l) in [(1, 0, 0), (0, 1, 0), (0, 0, 1)] {
            assert_eq!(exp.w3(0, j, k, l), C::from(0.0));
        }
        for (j, k, l) in [(0, 1, 1), (1, 0, 1), (1, 1, 0)] {
            assert_eq!(exp.w3(1, j, k, l), C::from(0.0));
        }
    }

    #[test]
    fn conjugate_family_and_realness() {
        let sys = duffing_pair();
        let exp = compute_ssm(&sys, 0, W1Normalization::Eigenvalue).unwrap();
        assert!((exp.beta_partner() - exp.beta().conj()).norm() < 1e-12 * exp.beta().norm());
        let s = SsmExpansion::polar_to_s(0.2, 0.7);
        let (x, v) = sys.to_physical(&exp.evaluate_w(s).unwrap()).unwrap();
        let scale = norm(&x) + norm(&v);
        assert!(x.iter().chain(v.iter()).all(|c| c.im.abs() < 1e-12 * scale));
        assert!(matches!(
            exp.evaluate_w([C::new(0.1, 0.2), C::new(0.1, 0.2)]),
            Err(Error::NotConjugate(_))
        ));
    }

    #[test]
    fn residual_is_fourth_order() {
        let sys = duffing_pair();
        for norm_kind in [W1Normalization::Eigenvalue, W1Normalization::Unit] {
            let exp = compute_ssm(&sys, 0, norm_kind).unwrap();
            let r = |rho: f64| norm(&invariance_residual(&sys, &exp, SsmExpansion::polar_to_s(rho, 0.4)));
            let slope = (r(1e-1).ln() - r(1e-2).ln()) / (10f64).ln();
            assert!(slope > 3.5, "{slope}");
        }
    }

    #[test]
    fn polar_fixed_amplitude() {
        let pd = PolarDynamics { re_lambda: -0.1, im_lambda: 1.0, re_beta: 0.4, im_beta: 0.2 };
        let r = pd.stationary_amplitude().unwrap();
        assert!(pd.rho_rate(r).abs() < 1e-15);
        assert_eq!(pd.rho_rate(0.0), 0.0);
        let pd2 = PolarDynamics { re_beta: -0.4, ..pd };
        assert!(pd2.stationary_amplitude().is_none());
    }

    #[test]
    fn general_path_rejects_small_divisor() {
        // λ₃ = 2λ₁ makes the quadratic homological equation singular.
        let l1 = C::new(-0.1, 1.0);
        let lambda = vec![l1, l1.conj(), l1 * 2.0, (l1 * 2.0).conj()];
        let sys = DiagonalizedSystem::from_modal(lambda, |z: &DVector<C>| {
            DVector::from_vec(vec![z[2] * z[0], z[3] * z[1], z[0] * z[0], z[1] * z[1]])
        })
        .unwrap();
        assert!(matches!(
            compute_ssm_general(&sys, 0, W1Normalization::Unit),
            Err(Error::SmallDivisor { row: 2, .. })
        ));
        assert!(matches!(
            compute_ssm(&sys, 0, W1Normalization::Unit),
            Err(Error::Unsupported(_))
        ));
    }
}
