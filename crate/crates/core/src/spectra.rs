//! Linear spectrum of the slow subsystem `M₁ẍ + ζεK₁ẋ + K₁x = 0`.
//!
//! Stiffness-proportional damping decouples in the undamped modal basis, so
//! every mode contributes the two roots of `λ² + ζεω²λ + ω² = 0`. Eigenvalues
//! are stored mode by mode: indices `2k` and `2k + 1` belong to mode `k`
//! (zero-based), the first of each pair having non-negative imaginary part.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::beam::AssembledBeam;
use crate::error::{Error, Result};
use crate::linalg::generalized_symmetric_eigen;

/// Relative tolerance separating resonances from round-off.
pub const RESONANCE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EigenMode {
    /// Real part `−ζεω²/2`, imaginary part `ω`.
    Approx,
    /// Exact roots of the per-mode characteristic polynomial.
    Exact,
}

impl std::str::FromStr for EigenMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "approx" => Ok(Self::Approx),
            "exact" => Ok(Self::Exact),
            other => Err(Error::InvalidArgument(format!(
                "eigenvalue mode must be `approx` or `exact`, got `{other}`"
            ))),
        }
    }
}

/// Undamped modes plus the damped eigenvalues of each mode.
#[derive(Debug, Clone)]
pub struct ModalData {
    /// ω₀ₖ, ascending.
    pub omega: DVector<f64>,
    /// Mass-normalized mode shapes as columns.
    pub shapes: DMatrix<f64>,
    /// `2 n_s` eigenvalues, two per mode.
    pub lambda: Vec<Complex64>,
    /// Mode has two distinct real roots.
    pub overdamped: Vec<bool>,
    pub mode: EigenMode,
}

impl ModalData {
    pub fn n_modes(&self) -> usize {
        self.omega.len()
    }

    /// Decay rate of mode `k`: the real part of the mean of its two roots,
    /// `−ζεω²/2` for either damping regime.
    pub fn mode_real_part(&self, k: usize) -> f64 {
        0.5 * (self.lambda[2 * k].re + self.lambda[2 * k + 1].re)
    }

    /// Per-mode decay rates, slowest first.
    pub fn mode_real_parts(&self) -> Vec<f64> {
        (0..self.n_modes()).map(|k| self.mode_real_part(k)).collect()
    }

    /// Fails if mode `k` cannot serve as an oscillatory master mode.
    pub fn require_underdamped(&self, k: usize) -> Result<()> {
        if k >= self.n_modes() {
            return Err(Error::OutOfRange { what: "master mode", index: k, len: self.n_modes() });
        }
        if self.overdamped[k] {
            let d = self.lambda[2 * k] - self.lambda[2 * k + 1];
            return Err(Error::Overdamped { mode: k + 1, discriminant: d.re * d.re });
        }
        Ok(())
    }
}

/// Generalized eigendecomposition `K₁φ = ω²M₁φ`.
pub fn undamped_modes(beam: &AssembledBeam) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let (w2, phi) = generalized_symmetric_eigen(beam.k1(), beam.m1())?;
    if let Some(bad) = w2.iter().find(|v| **v <= 0.0) {
        return Err(Error::NotPositiveDefinite(format!("K1 has eigenvalue {bad:e}")));
    }
    Ok((w2.map(f64::sqrt), phi))
}

/// Roots of `λ² + cλ + ω² = 0` with `c = ζεω²`. Returns the pair and whether
/// it is real (overdamped or critical).
pub fn mode_roots(omega: f64, zeta_eps: f64) -> (Complex64, Complex64, bool) {
    let c = zeta_eps * omega * omega;
    let disc = c * c - 4.0 * omega * omega;
    if disc >= 0.0 {
        // Stable evaluation of the two real roots.
        let q = -0.5 * (c + disc.sqrt());
        let r_fast = q;
        let r_slow = if q != 0.0 { omega * omega / q } else { 0.0 };
        (Complex64::new(r_slow, 0.0), Complex64::new(r_fast, 0.0), true)
    } else {
        let im = 0.5 * (-disc).sqrt();
        let l = Complex64::new(-0.5 * c, im);
        (l, l.conj(), false)
    }
}

pub fn damped_eigenvalues(beam: &AssembledBeam, mode: EigenMode) -> Result<ModalData> {
    let (omega, shapes) = undamped_modes(beam)?;
    Ok(modal_data_from(omega, shapes, beam.zeta() * beam.eps(), mode))
}

/// Builds [`ModalData`] from undamped data and the damping product `ζε`.
pub fn modal_data_from(
    omega: DVector<f64>,
    shapes: DMatrix<f64>,
    zeta_eps: f64,
    mode: EigenMode,
) -> ModalData {
    let mut lambda = Vec::with_capacity(2 * omega.len());
    let mut overdamped = Vec::with_capacity(omega.len());
    for &w in omega.iter() {
        match mode {
            EigenMode::Approx => {
                let l = Complex64::new(-0.5 * zeta_eps * w * w, w);
                lambda.push(l);
                lambda.push(l.conj());
                overdamped.push(false);
            }
            EigenMode::Exact => {
                let (a, b, real) = mode_roots(w, zeta_eps);
                lambda.push(a);
                lambda.push(b);
                overdamped.push(real);
            }
        }
    }
    ModalData { omega, shapes, lambda, overdamped, mode }
}

/// Spectral quotients relative to master mode `master` (zero-based).
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralQuotients {
    /// `Re λ_{k+1} / Re λ_k` over consecutive modes.
    pub successive: Vec<f64>,
    /// Integer part of the largest outer-to-master real-part ratio.
    pub sigma: u64,
    /// The ratio before truncation.
    pub max_ratio: f64,
}

/// `successive` uses per-mode decay rates; σ uses every eigenvalue outside
/// the master pair.
pub fn spectral_quotients(
    lambda: &[Complex64],
    mode_real_parts: &[f64],
    master: usize,
) -> Result<SpectralQuotients> {
    let n = lambda.len() / 2;
    if master >= n || mode_real_parts.len() != n {
        return Err(Error::OutOfRange { what: "master mode", index: master, len: n });
    }
    let successive = mode_real_parts.windows(2).map(|w| w[1] / w[0]).collect();
    let re_l = lambda[2 * master].re;
    let max_ratio = lambda
        .iter()
        .enumerate()
        .filter(|(j, _)| j / 2 != master)
        .map(|(_, l)| l.re / re_l)
        .fold(0.0, f64::max);
    Ok(SpectralQuotients { successive, sigma: max_ratio.floor() as u64, max_ratio })
}

/// One candidate resonance `aλ_ℓ + bλ̄_ℓ ≈ λ_j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NearResonance {
    /// Zero-based eigenvalue index.
    pub j: usize,
    pub a: u64,
    pub b: u64,
    /// `|aλ_ℓ + bλ̄_ℓ − λ_j| / |λ_j|`.
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResonanceReport {
    pub master: usize,
    pub order: u64,
    pub tolerance: f64,
    pub passed: bool,
    /// Smallest margin found (absent when the check is vacuous).
    pub nearest: Option<NearResonance>,
    pub violations: Vec<NearResonance>,
}

impl std::fmt::Display for ResonanceReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "master mode {}, order {}: {}",
            self.master + 1,
            self.order,
            if self.passed { "no resonance" } else { "resonant" }
        )?;
        if let Some(n) = self.nearest {
            write!(f, ", nearest a={} b={} j={} margin {:.3e}", n.a, n.b, n.j + 1, n.margin)?;
        }
        Ok(())
    }
}

/// Best lattice point for eigenvalue `target` on `{nα + i mω}` with
/// `2 ≤ n ≤ order`, `|m| ≤ n`, `m ≡ n (mod 2)`.
fn nearest_lattice(alpha: f64, omega: f64, target: Complex64, order: u64) -> (u64, i64, f64) {
    let dist = |n: u64, m: i64| {
        let re = n as f64 * alpha - target.re;
        let im = m as f64 * omega - target.im;
        (re * re + im * im).sqrt()
    };
    let best_m = |n: u64| -> i64 {
        let ni = n as i64;
        if omega == 0.0 {
            return if ni % 2 == 0 { 0 } else { 1 };
        }
        let raw = (target.im / omega).round() as i64;
        let mut best = None::<(i64, f64)>;
        for m in raw - 2..=raw + 2 {
            if (m - ni).rem_euclid(2) != 0 || m.abs() > ni {
                continue;
            }
            let d = dist(n, m);
            if best.is_none_or(|(_, bd)| d < bd) {
                best = Some((m, d));
            }
        }
        best.map_or(if target.im >= 0.0 { ni } else { -ni }, |(m, _)| m)
    };
    let mut candidates: Vec<u64> = Vec::new();
    if order <= 400 {
        candidates.extend(2..=order);
    } else {
        let push_near = |c: &mut Vec<u64>, x: f64| {
            let centre = x.round().clamp(2.0, order as f64) as i64;
            for n in centre - 3..=centre + 3 {
                if n >= 2 && n as u64 <= order {
                    c.push(n as u64);
                }
            }
        };
        push_near(&mut candidates, target.re / alpha);
        let denom = alpha * alpha + omega * omega;
        push_near(&mut candidates, (alpha * target.re + omega * target.im.abs()) / denom);
        push_near(&mut candidates, 2.0);
        push_near(&mut candidates, order as f64);
    }
    let mut best = (2, 0, f64::INFINITY);
    for n in candidates {
        let m = best_m(n);
        let d = dist(n, m);
        if d < best.2 {
            best = (n, m, d);
        }
    }
    best
}

/// Checks `|aλ_ℓ + bλ̄_ℓ − λ_j| > tol·|λ_j|` for `2 ≤ a + b ≤ order` and all
/// `j` outside the master pair.
pub fn check_nonresonance(lambda: &[Complex64], master: usize, order: u64) -> Result<ResonanceReport> {
    check_nonresonance_tol(lambda, master, order, RESONANCE_TOL)
}

pub fn check_nonresonance_tol(
    lambda: &[Complex64],
    master: usize,
    order: u64,
    tol: f64,
) -> Result<ResonanceReport> {
    let n = lambda.len() / 2;
    if master >= n {
        return Err(Error::OutOfRange { what: "master mode", index: master, len: n });
    }
    let mut report = ResonanceReport {
        master,
        order,
        tolerance: tol,
        passed: true,
        nearest: None,
        violations: Vec::new(),
    };
    if order < 2 {
        return Ok(report);
    }
    let l = lambda[2 * master];
    for (j, &lj) in lambda.iter().enumerate() {
        if j / 2 == master {
            continue;
        }
        let (nn, m, d) = nearest_lattice(l.re, l.im, lj, order);
        let a = ((nn as i64 + m) / 2) as u64;
        let b = ((nn as i64 - m) / 2) as u64;
        let margin = d / lj.norm();
        let cand = NearResonance { j, a, b, margin };
        if report.nearest.is_none_or(|c| margin < c.margin) {
            report.nearest = Some(cand);
        }
        if margin <= tol {
            report.passed = false;
            report.violations.push(cand);
        }
    }
    Ok(report)
}

/// CSV rows `k,omega0,re_approx,im_approx,re_exact,im_exact,ratio` (one
/// line per mode; the ratio column is empty for the last mode).
pub fn spectrum_csv(approx: &ModalData, exact: &ModalData) -> String {
    let mut out = String::from("k,omega0,re_lambda_approx,im_lambda_approx,re_lambda_exact,im_lambda_exact,overdamped,ratio\n");
    let re = exact.mode_real_parts();
    for k in 0..exact.n_modes() {
        let ratio = re.get(k + 1).map(|r| format!("{:.16e}", r / re[k])).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{},{}",
            k + 1,
            exact.omega[k],
            approx.lambda[2 * k].re,
            approx.lambda[2 * k].im,
            exact.lambda[2 * k].re,
            exact.lambda[2 * k].im,
            u8::from(exact.overdamped[k]),
            ratio
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic(pairs: &[Complex64]) -> Vec<Complex64> {
        pairs.iter().flat_map(|l| [*l, l.conj()]).collect()
    }

    #[test]
    fn undamped_roots_are_imaginary() {
        let (a, b, real) = mode_roots(3.0, 0.0);
        assert!(!real);
        assert_eq!(a, Complex64::new(0.0, 3.0));
        assert_eq!(b, Complex64::new(0.0, -3.0));
    }

    #[test]
    fn overdamped_roots_satisfy_polynomial() {
        let (w, ze) = (40.0, 0.1);
        let (a, b, real) = mode_roots(w, ze);
        assert!(real);
        for r in [a.re, b.re] {
            let p = r * r + ze * w * w * r + w * w;
            assert!(p.abs() < 1e-9 * w * w);
        }
        assert!(a.re > b.re);
    }

    #[test]
    fn identical_eigenvalues_give_unit_ratio() {
        let l = synthetic(&[Complex64::new(-0.1, 1.0), Complex64::new(-0.1, 1.0)]);
        let q = spectral_quotients(&l, &[-0.1, -0.1], 0).unwrap();
        assert_eq!(q.successive, vec![1.0]);
        assert_eq!(q.sigma, 1);
    }

    #[test]
    fn exact_resonance_detected() {
        let l1 = Complex64::new(-0.1, 1.0);
        let l = synthetic(&[l1, l1 * 3.0, Complex64::new(-0.7, 2.2)]);
        let r = check_nonresonance(&l, 0, 3).unwrap();
        assert!(!r.passed);
        let v = r.violations[0];
        assert_eq!((v.j, v.a, v.b), (2, 3, 0));
        // Order 2 cannot reach it.
        assert!(check_nonresonance(&l, 0, 2).unwrap().passed);
    }

    #[test]
    fn order_one_is_vacuous() {
        let l1 = Complex64::new(-0.1, 1.0);
        let l = synthetic(&[l1, l1 * 2.0]);
        let r = check_nonresonance(&l, 0, 1).unwrap();
        assert!(r.passed && r.nearest.is_none());
    }

    #[test]
    fn lattice_search_agrees_with_enumeration() {
        let l1 = Complex64::new(-0.03, 2.85);
        let others = [
            Complex64::new(-0.47, 11.39),
            Complex64::new(-2.4, 25.6),
            Complex64::new(-9.0, -45.0),
            Complex64::new(-130.0, 0.0),
        ];
        for order in [3u64, 50, 1000] {
            for &lj in &others {
                let (_, _, d) = nearest_lattice(l1.re, l1.im, lj, order);
                let mut brute = f64::INFINITY;
                for n in 2..=order {
                    for a in 0..=n {
                        let z = l1 * a as f64 + l1.conj() * (n - a) as f64;
                        brute = brute.min((z - lj).norm());
                    }
                }
                assert!((d - brute).abs() <= 1e-12 * brute.max(1.0), "{order} {lj}: {d} vs {brute}");
            }
        }
    }

    #[test]
    fn ratios_are_scale_free() {
        let re = [-0.03, -0.47, -2.4];
        let l: Vec<_> = synthetic(&re.map(|r| Complex64::new(r, 1.0)));
        let q1 = spectral_quotients(&l, &re, 0).unwrap();
        let scaled: Vec<_> = l.iter().map(|z| z * 7.5).collect();
        let q2 = spectral_quotients(&scaled, &re.map(|r| r * 7.5), 0).unwrap();
        for (a, b) in q1.successive.iter().zip(&q2.successive) {
            assert!((a - b).abs() < 1e-13 * a);
        }
        assert_eq!(q1.sigma, q2.sigma);
    }
}
