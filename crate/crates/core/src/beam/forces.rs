//! Element-loop evaluation of the nonlinear elastic and damping forces and
//! their tangents.

use nalgebra::{DMatrix, DVector};

use super::element::{axial_dofs, transverse_dofs};
use super::AssembledBeam;
use crate::error::Result;
use crate::scalar::{real_mul, Scalar};

impl AssembledBeam {
    /// Slope `w_x` of each transverse input and strain `u_x` of each axial
    /// input at every quadrature point of element `e`.
    #[inline]
    fn gather_slopes<T: Scalar, const A: usize, const B: usize>(
        &self,
        e: usize,
        tv: &[&DVector<T>; A],
        av: &[&DVector<T>; B],
        out_t: &mut [[T; A]],
        out_a: &mut [[T; B]],
    ) {
        let td = transverse_dofs(e);
        let ad = axial_dofs(e);
        let mut lt = [[T::zero(); 4]; A];
        for (k, v) in tv.iter().enumerate() {
            for (a, &g) in td.iter().enumerate() {
                if let Some(i) = self.transverse_map[g] {
                    lt[k][a] = v[i];
                }
            }
        }
        let mut la = [[T::zero(); 2]; B];
        for (k, v) in av.iter().enumerate() {
            for (a, &g) in ad.iter().enumerate() {
                if let Some(i) = self.axial_map[g] {
                    la[k][a] = v[i];
                }
            }
        }
        let t = &self.tables;
        for g in 0..t.points() {
            for k in 0..A {
                let mut s = T::zero();
                for a in 0..4 {
                    s += lt[k][a] * T::of(t.dn[g][a]);
                }
                out_t[g][k] = s;
            }
            for k in 0..B {
                out_a[g][k] = la[k][0] * T::of(t.dl[0]) + la[k][1] * T::of(t.dl[1]);
            }
        }
    }

    /// Integrates `∫ a(w_x…, u_x…) N_i' dx` into a transverse vector and
    /// `∫ b(w_x…, u_x…) L_a' dx` into an axial vector.
    fn integrate_slopes<T: Scalar, const A: usize, const B: usize>(
        &self,
        tv: [&DVector<T>; A],
        av: [&DVector<T>; B],
        kernel: impl Fn(&[T; A], &[T; B]) -> (T, T),
    ) -> (DVector<T>, DVector<T>) {
        let mut rt = DVector::zeros(self.n_s);
        let mut ra = DVector::zeros(self.n_f);
        let t = &self.tables;
        let np = t.points();
        let mut st = vec![[T::zero(); A]; np];
        let mut sa = vec![[T::zero(); B]; np];
        for e in 0..self.config.n_elements {
            self.gather_slopes(e, &tv, &av, &mut st, &mut sa);
            let mut et = [T::zero(); 4];
            let mut ea = [T::zero(); 2];
            for g in 0..np {
                let (ct, ca) = kernel(&st[g], &sa[g]);
                let w = T::of(t.weights[g]);
                let ct = ct * w;
                let ca = ca * w;
                for a in 0..4 {
                    et[a] += ct * T::of(t.dn[g][a]);
                }
                for a in 0..2 {
                    ea[a] += ca * T::of(t.dl[a]);
                }
            }
            for (a, &gd) in transverse_dofs(e).iter().enumerate() {
                if let Some(i) = self.transverse_map[gd] {
                    rt[i] += et[a];
                }
            }
            for (a, &gd) in axial_dofs(e).iter().enumerate() {
                if let Some(i) = self.axial_map[gd] {
                    ra[i] += ea[a];
                }
            }
        }
        (rt, ra)
    }

    /// Real slope-weighted matrices `∫ c_tt N_i' N_j'` (n_s×n_s),
    /// `∫ c_ta N_i' L_a'` (n_s×n_f).
    fn integrate_slope_matrices<const A: usize, const B: usize>(
        &self,
        tv: [&DVector<f64>; A],
        av: [&DVector<f64>; B],
        kernel: impl Fn(&[f64; A], &[f64; B]) -> (f64, f64),
    ) -> (DMatrix<f64>, DMatrix<f64>) {
        let mut tt = DMatrix::zeros(self.n_s, self.n_s);
        let mut ta = DMatrix::zeros(self.n_s, self.n_f);
        let t = &self.tables;
        let np = t.points();
        let mut st = vec![[0.0; A]; np];
        let mut sa = vec![[0.0; B]; np];
        for e in 0..self.config.n_elements {
            self.gather_slopes(e, &tv, &av, &mut st, &mut sa);
            let mut ett = [[0.0; 4]; 4];
            let mut eta = [[0.0; 2]; 4];
            for g in 0..np {
                let (ctt, cta) = kernel(&st[g], &sa[g]);
                let w = t.weights[g];
                for a in 0..4 {
                    let da = t.dn[g][a] * w;
                    for b in 0..4 {
                        ett[a][b] += ctt * da * t.dn[g][b];
                    }
                    for b in 0..2 {
                        eta[a][b] += cta * da * t.dl[b];
                    }
                }
            }
            let td = transverse_dofs(e);
            let ad = axial_dofs(e);
            for (a, &ga) in td.iter().enumerate() {
                let Some(i) = self.transverse_map[ga] else { continue };
                for (b, &gb) in td.iter().enumerate() {
                    if let Some(j) = self.transverse_map[gb] {
                        tt[(i, j)] += ett[a][b];
                    }
                }
                for (b, &gb) in ad.iter().enumerate() {
                    if let Some(j) = self.axial_map[gb] {
                        ta[(i, j)] += eta[a][b];
                    }
                }
            }
        }
        (tt, ta)
    }

    /// F(x, y): bilinear transverse force `∫ u_x w_x N_i'`.
    pub fn coupling_force<T: Scalar>(&self, x: &DVector<T>, y: &DVector<T>) -> DVector<T> {
        self.integrate_slopes([x], [y], |w, u| (w[0] * u[0], T::zero())).0
    }

    /// G(x): cubic transverse force `½∫ w_x³ N_i'`.
    pub fn cubic_force<T: Scalar>(&self, x: &DVector<T>) -> DVector<T> {
        self.integrate_slopes([x], [], |w, _| (w[0] * w[0] * w[0] * T::of(0.5), T::zero())).0
    }

    /// H(x): quadratic axial force `½∫ w_x² L_a'`.
    pub fn axial_quadratic_force<T: Scalar>(&self, x: &DVector<T>) -> DVector<T> {
        self.integrate_slopes([x], [], |w, _| (T::zero(), w[0] * w[0] * T::of(0.5))).1
    }

    /// E(x)v = [∂ₓH(x)]v: axial force `∫ w_x v_x L_a'`. Symmetric in `x`, `v`.
    pub fn axial_bilinear<T: Scalar>(&self, x: &DVector<T>, v: &DVector<T>) -> DVector<T> {
        self.integrate_slopes([x, v], [], |w, _| (T::zero(), w[0] * w[1])).1
    }

    /// C(x)v: transverse force `∫ w_x² v_x N_i'`.
    pub fn cubic_damping<T: Scalar>(&self, x: &DVector<T>, v: &DVector<T>) -> DVector<T> {
        self.integrate_slopes([x, v], [], |w, _| (w[0] * w[0] * w[1], T::zero())).0
    }

    /// D(x)ẏ: transverse force `∫ w_x u̇_x N_i'`. Coincides with F(x, ẏ).
    pub fn coupling_damping<T: Scalar>(&self, x: &DVector<T>, ydot: &DVector<T>) -> DVector<T> {
        self.coupling_force(x, ydot)
    }

    /// D(x) as an `n_s × n_f` matrix; E(x) = D(x)ᵀ.
    pub fn coupling_matrix(&self, x: &DVector<f64>) -> DMatrix<f64> {
        self.integrate_slope_matrices([x], [], |w, _| (0.0, w[0])).1
    }

    /// C(x) as an `n_s × n_s` matrix.
    pub fn cubic_damping_matrix(&self, x: &DVector<f64>) -> DMatrix<f64> {
        self.integrate_slope_matrices([x], [], |w, _| (w[0] * w[0], 0.0)).0
    }

    /// ∂ₓ[C(x)v] = `∫ 2 w_x v_x N_i' N_j'`.
    pub fn cubic_damping_position_tangent(&self, x: &DVector<f64>, v: &DVector<f64>) -> DMatrix<f64> {
        self.integrate_slope_matrices([x, v], [], |w, _| (2.0 * w[0] * w[1], 0.0)).0
    }

    /// ∂ₓF(x, y) = `∫ u_x N_i' N_j'`.
    pub fn geometric_stiffness(&self, y: &DVector<f64>) -> DMatrix<f64> {
        self.integrate_slope_matrices([], [y], |_, u| (u[0], 0.0)).0
    }

    /// Elastic force `(K₁x + F(x,y)/ε + G(x), K₂y/ε² + H(x)/ε)`.
    pub fn elastic_force(
        &self,
        x: &DVector<f64>,
        y: &DVector<f64>,
    ) -> Result<(DVector<f64>, DVector<f64>)> {
        self.check_len("elastic_force x", self.n_s, x.len())?;
        self.check_len("elastic_force y", self.n_f, y.len())?;
        let eps = self.eps();
        let (f, h) = self.integrate_slopes([x], [y], |w, u| {
            let wx = w[0];
            (u[0] * wx / eps + 0.5 * wx * wx * wx, 0.5 * wx * wx / eps)
        });
        let fx = &self.k1 * x + f;
        let fy = &self.k2 * y / (eps * eps) + h;
        Ok((fx, fy))
    }

    /// Kelvin–Voigt damping force
    /// `(ζε(K₁ + C(x))ẋ + ζD(x)ẏ, (ζ/ε)K₂ẏ + ζE(x)ẋ)`.
    pub fn damping_force(
        &self,
        x: &DVector<f64>,
        xdot: &DVector<f64>,
        ydot: &DVector<f64>,
    ) -> Result<(DVector<f64>, DVector<f64>)> {
        self.check_len("damping_force x", self.n_s, x.len())?;
        self.check_len("damping_force xdot", self.n_s, xdot.len())?;
        self.check_len("damping_force ydot", self.n_f, ydot.len())?;
        let (eps, zeta) = (self.eps(), self.zeta());
        let (dx, dy) = self.integrate_slopes([x, xdot], [ydot], |w, u| {
            let (wx, vx) = (w[0], w[1]);
            (
                zeta * eps * wx * wx * vx + zeta * wx * u[0],
                zeta * wx * vx,
            )
        });
        let dx = &self.k1 * xdot * (zeta * eps) + dx;
        let dy = &self.k2 * ydot * (zeta / eps) + dy;
        Ok((dx, dy))
    }

    /// Jacobian of the elastic force with respect to `(x, y)`; symmetric.
    pub fn elastic_tangent(&self, x: &DVector<f64>, y: &DVector<f64>) -> DMatrix<f64> {
        let (ns, nf, eps) = (self.n_s, self.n_f, self.eps());
        let (kxx, kxy) = self.integrate_slope_matrices([x], [y], |w, u| {
            (u[0] / eps + 1.5 * w[0] * w[0], w[0] / eps)
        });
        let mut k = DMatrix::zeros(ns + nf, ns + nf);
        k.view_mut((0, 0), (ns, ns)).copy_from(&(&self.k1 + kxx));
        k.view_mut((0, ns), (ns, nf)).copy_from(&kxy);
        k.view_mut((ns, 0), (nf, ns)).copy_from(&kxy.transpose());
        k.view_mut((ns, ns), (nf, nf)).copy_from(&(&self.k2 / (eps * eps)));
        k
    }

    /// Jacobians of the damping force with respect to positions and to
    /// velocities, `(∂d/∂q, ∂d/∂q̇)`.
    pub fn damping_tangents(
        &self,
        x: &DVector<f64>,
        xdot: &DVector<f64>,
        ydot: &DVector<f64>,
    ) -> (DMatrix<f64>, DMatrix<f64>) {
        let (ns, nf, eps, zeta) = (self.n_s, self.n_f, self.eps(), self.zeta());
        let (dq_xx, dq_yx) = self.integrate_slope_matrices([x, xdot], [ydot], |w, u| {
            (2.0 * zeta * eps * w[0] * w[1] + zeta * u[0], zeta * w[1])
        });
        let (c_xx, d_xy) = self.integrate_slope_matrices([x], [], |w, _| {
            (zeta * eps * w[0] * w[0], zeta * w[0])
        });
        let mut dq = DMatrix::zeros(ns + nf, ns + nf);
        dq.view_mut((0, 0), (ns, ns)).copy_from(&dq_xx);
        dq.view_mut((ns, 0), (nf, ns)).copy_from(&dq_yx.transpose());
        let mut dv = DMatrix::zeros(ns + nf, ns + nf);
        dv.view_mut((0, 0), (ns, ns)).copy_from(&(&self.k1 * (zeta * eps) + c_xx));
        dv.view_mut((0, ns), (ns, nf)).copy_from(&d_xy);
        dv.view_mut((ns, 0), (nf, ns)).copy_from(&d_xy.transpose());
        dv.view_mut((ns, ns), (nf, nf)).copy_from(&(&self.k2 * (zeta / eps)));
        (dq, dv)
    }

    /// Stored elastic energy `½xᵀK₁x + ½∫(y_x/ε + ½w_x²)²`.
    pub fn strain_energy(&self, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
        let eps = self.eps();
        let bending = 0.5 * x.dot(&(&self.k1 * x));
        let t = &self.tables;
        let np = t.points();
        let mut st = vec![[0.0; 1]; np];
        let mut sa = vec![[0.0; 1]; np];
        let mut membrane = 0.0;
        for e in 0..self.config.n_elements {
            self.gather_slopes(e, &[x], &[y], &mut st, &mut sa);
            for g in 0..np {
                let strain = sa[g][0] / eps + 0.5 * st[g][0] * st[g][0];
                membrane += 0.5 * t.weights[g] * strain * strain;
            }
        }
        bending + membrane
    }

    /// Kinetic energy `½ẋᵀM₁ẋ + ½ẏᵀM₂ẏ`.
    pub fn kinetic_energy(&self, xdot: &DVector<f64>, ydot: &DVector<f64>) -> f64 {
        0.5 * xdot.dot(&(&self.m1 * xdot)) + 0.5 * ydot.dot(&(&self.m2 * ydot))
    }

    /// `K₂⁻¹ v` for real or complex `v`.
    pub fn solve_k2<T: Scalar>(&self, v: &DVector<T>) -> DVector<T> {
        crate::scalar::apply_real(v, |b| self.k2_factor.solve(b))
    }

    /// `M₁⁻¹ v` for real or complex `v`.
    pub fn solve_m1<T: Scalar>(&self, v: &DVector<T>) -> DVector<T> {
        crate::scalar::apply_real(v, |b| self.m1_factor.solve(b))
    }

    pub fn k1_mul<T: Scalar>(&self, v: &DVector<T>) -> DVector<T> {
        real_mul(&self.k1, v)
    }
}

#[cfg(test)]
mod tests {
    use super::super::{assemble, BeamConfig};
    use super::*;
    use crate::multilinear::homogeneity_error;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn beam() -> AssembledBeam {
        assemble(&BeamConfig::default().with_elements(6)).unwrap()
    }

    fn rand_vec(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
        DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn zero_state_is_equilibrium() {
        let b = beam();
        let (fx, fy) = b
            .elastic_force(&DVector::zeros(b.n_s()), &DVector::zeros(b.n_f()))
            .unwrap();
        assert_eq!(fx.norm() + fy.norm(), 0.0);
    }

    #[test]
    fn pure_axial_state_only_loads_axial_dofs() {
        let b = beam();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let y = rand_vec(&mut rng, b.n_f());
        let (fx, fy) = b.elastic_force(&DVector::zeros(b.n_s()), &y).unwrap();
        assert_eq!(fx.norm(), 0.0);
        let expect = b.k2() * &y / (b.eps() * b.eps());
        assert!((fy - &expect).norm() <= 1e-14 * expect.norm());
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let b = beam();
        assert!(b.elastic_force(&DVector::zeros(3), &DVector::zeros(b.n_f())).is_err());
        assert!(b
            .damping_force(&DVector::zeros(b.n_s()), &DVector::zeros(b.n_s()), &DVector::zeros(2))
            .is_err());
    }

    #[test]
    fn damping_at_rest_and_at_origin() {
        let b = beam();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = rand_vec(&mut rng, b.n_s());
        let (dx, dy) = b
            .damping_force(&x, &DVector::zeros(b.n_s()), &DVector::zeros(b.n_f()))
            .unwrap();
        assert_eq!(dx.norm() + dy.norm(), 0.0);
        let xd = rand_vec(&mut rng, b.n_s());
        let yd = rand_vec(&mut rng, b.n_f());
        let (dx, dy) = b.damping_force(&DVector::zeros(b.n_s()), &xd, &yd).unwrap();
        let ex = b.k1() * &xd * (b.zeta() * b.eps());
        let ey = b.k2() * &yd * (b.zeta() / b.eps());
        assert!((dx - &ex).norm() <= 1e-13 * ex.norm());
        assert!((dy - &ey).norm() <= 1e-13 * ey.norm());
    }

    #[test]
    fn homogeneity_degrees() {
        let b = beam();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let x = rand_vec(&mut rng, b.n_s());
            let y = rand_vec(&mut rng, b.n_f());
            let v = rand_vec(&mut rng, b.n_s());
            let w = rand_vec(&mut rng, b.n_f());
            assert!(homogeneity_error(&|x: &DVector<f64>| b.coupling_force(x, &y), &x, 1) < 1e-10);
            assert!(homogeneity_error(&|y: &DVector<f64>| b.coupling_force(&x, y), &y, 1) < 1e-10);
            assert!(homogeneity_error(&|x: &DVector<f64>| b.cubic_force(x), &x, 3) < 1e-10);
            assert!(homogeneity_error(&|x: &DVector<f64>| b.axial_quadratic_force(x), &x, 2) < 1e-10);
            assert!(homogeneity_error(&|x: &DVector<f64>| b.cubic_damping(x, &v), &x, 2) < 1e-10);
            assert!(homogeneity_error(&|x: &DVector<f64>| b.coupling_damping(x, &w), &x, 1) < 1e-10);
            assert!(homogeneity_error(&|x: &DVector<f64>| b.axial_bilinear(x, &v), &x, 1) < 1e-10);
        }
    }

    #[test]
    fn matrix_forms_agree_with_products() {
        let b = beam();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x = rand_vec(&mut rng, b.n_s());
        let v = rand_vec(&mut rng, b.n_s());
        let w = rand_vec(&mut rng, b.n_f());
        let d = b.coupling_matrix(&x);
        assert!((&d * &w - b.coupling_damping(&x, &w)).norm() < 1e-12);
        assert!((d.transpose() * &v - b.axial_bilinear(&x, &v)).norm() < 1e-12);
        let c = b.cubic_damping_matrix(&x);
        assert!((&c * &v - b.cubic_damping(&x, &v)).norm() < 1e-12);
        assert!((b.geometric_stiffness(&w) * &x - b.coupling_force(&x, &w)).norm() < 1e-12);
        // E(x)x = 2H(x)
        assert!((b.axial_bilinear(&x, &x) - b.axial_quadratic_force(&x) * 2.0).norm() < 1e-12);
    }

    #[test]
    fn damping_tangents_match_finite_differences() {
        let b = beam();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (ns, nf) = (b.n_s(), b.n_f());
        let x = rand_vec(&mut rng, ns);
        let xd = rand_vec(&mut rng, ns);
        let yd = rand_vec(&mut rng, nf);
        let stack = |a: DVector<f64>, c: DVector<f64>| {
            DVector::from_iterator(ns + nf, a.iter().chain(c.iter()).cloned())
        };
        let (dq, dv) = b.damping_tangents(&x, &xd, &yd);
        let h = 1e-6;
        for j in 0..ns {
            let mut xp = x.clone();
            xp[j] += h;
            let mut xm = x.clone();
            xm[j] -= h;
            let (a, c) = b.damping_force(&xp, &xd, &yd).unwrap();
            let (e, f) = b.damping_force(&xm, &xd, &yd).unwrap();
            let col = (stack(a, c) - stack(e, f)) / (2.0 * h);
            assert!((col - dq.column(j)).norm() < 1e-6 * dq.norm());
        }
        let mut vel = stack(xd.clone(), yd.clone());
        for j in 0..ns + nf {
            vel[j] += h;
            let (a, c) = b
                .damping_force(&x, &vel.rows(0, ns).into(), &vel.rows(ns, nf).into())
                .unwrap();
            vel[j] -= 2.0 * h;
            let (e, f) = b
                .damping_force(&x, &vel.rows(0, ns).into(), &vel.rows(ns, nf).into())
                .unwrap();
            vel[j] += h;
            let col = (stack(a, c) - stack(e, f)) / (2.0 * h);
            assert!((col - dv.column(j)).norm() < 1e-6 * dv.norm());
        }
    }

    #[test]
    fn energy_gradient_is_elastic_force() {
        let b = beam();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let x = rand_vec(&mut rng, b.n_s());
        let y = rand_vec(&mut rng, b.n_f()) * b.eps();
        let (fx, fy) = b.elastic_force(&x, &y).unwrap();
        let h = 1e-6;
        for j in 0..b.n_s() {
            let mut xp = x.clone();
            xp[j] += h;
            let mut xm = x.clone();
            xm[j] -= h;
            let g = (b.strain_energy(&xp, &y) - b.strain_energy(&xm, &y)) / (2.0 * h);
            assert!((g - fx[j]).abs() < 1e-5 * fx.norm());
        }
        let hy = h * b.eps();
        for j in 0..b.n_f() {
            let mut yp = y.clone();
            yp[j] += hy;
            let mut ym = y.clone();
            ym[j] -= hy;
            let g = (b.strain_energy(&x, &yp) - b.strain_energy(&x, &ym)) / (2.0 * hy);
            assert!((g - fy[j]).abs() < 1e-5 * fy.norm());
        }
    }
}
