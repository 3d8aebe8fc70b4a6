//! Shared oracles for the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DVector;
use num_complex::Complex64 as C;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vkbeam::beam::{assemble, AssembledBeam, BeamConfig, ForcingSpec};
use vkbeam::ssm::{DiagonalizedSystem, W1Normalization};

pub const DFT_POINTS: usize = 16;

/// Coefficients `c[a][b]` of `s₁^a s₂^b` in a polynomial map, read off by
/// a 2-D DFT over independent unit-circle phases of `s₁` and `s₂`.
pub fn taylor_coefficients<F>(f: F, dim: usize) -> Vec<Vec<DVector<C>>>
where
    F: Fn(C, C) -> DVector<C>,
{
    let n = DFT_POINTS;
    let mut c = vec![vec![DVector::zeros(dim); n]; n];
    for p in 0..n {
        for q in 0..n {
            let (a1, a2) = (2.0 * PI * p as f64 / n as f64, 2.0 * PI * q as f64 / n as f64);
            let v = f(C::from_polar(1.0, a1), C::from_polar(1.0, a2));
            for (a, row) in c.iter_mut().enumerate() {
                for (b, cell) in row.iter_mut().enumerate() {
                    let w = C::from_polar(1.0 / (n * n) as f64, -(a as f64 * a1 + b as f64 * a2));
                    *cell += &v * w;
                }
            }
        }
    }
    c
}

/// Cubic SSM by direct Taylor matching of the invariance equation.
pub struct OracleSsm {
    /// `s₁², s₁s₂, s₂²`.
    pub w2: [DVector<C>; 3],
    /// `s₁³, s₁²s₂, s₁s₂², s₂³`.
    pub w3: [DVector<C>; 4],
    pub beta: C,
}

pub fn oracle_ssm(sys: &DiagonalizedSystem, master: usize, norm: W1Normalization) -> OracleSsm {
    let lam = sys.lambda();
    let n = sys.dim();
    let (il, ir) = (2 * master, 2 * master + 1);
    let c = match norm {
        W1Normalization::Eigenvalue => [lam[il], lam[ir]],
        W1Normalization::Unit => [C::from(1.0), C::from(1.0)],
    };
    let w1 = |s1: C, s2: C| {
        let mut z = DVector::zeros(n);
        z[il] = c[0] * s1;
        z[ir] = c[1] * s2;
        z
    };
    let quad = taylor_coefficients(|s1, s2| sys.nonlinearity(&w1(s1, s2)), n);
    let mut w2: [DVector<C>; 3] = std::array::from_fn(|_| DVector::zeros(n));
    for (m, (a, b)) in [(2usize, 0usize), (1, 1), (0, 2)].into_iter().enumerate() {
        for i in 0..n {
            let den = lam[il] * a as f64 + lam[ir] * b as f64 - lam[i];
            w2[m][i] = quad[a][b][i] / den;
        }
    }
    let w12 = |s1: C, s2: C| {
        let mut z = w1(s1, s2);
        z += &w2[0] * (s1 * s1) + &w2[1] * (s1 * s2) + &w2[2] * (s2 * s2);
        z
    };
    let cub = taylor_coefficients(|s1, s2| sys.nonlinearity(&w12(s1, s2)), n);
    let mut w3: [DVector<C>; 4] = std::array::from_fn(|_| DVector::zeros(n));
    for (m, (a, b)) in [(3usize, 0usize), (2, 1), (1, 2), (0, 3)].into_iter().enumerate() {
        for i in 0..n {
            if (m == 1 && i == il) || (m == 2 && i == ir) {
                continue;
            }
            let den = lam[il] * a as f64 + lam[ir] * b as f64 - lam[i];
            w3[m][i] = cub[a][b][i] / den;
        }
    }
    OracleSsm { w2, w3, beta: cub[2][1][il] / c[0] }
}

/// Random cubic (and optional quadratic) modal system with
/// conjugate eigenvalue pairs well away from low-order resonance.
pub fn random_modal_system(seed: u64, pairs: usize, quadratic: bool) -> DiagonalizedSystem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = 2 * pairs;
    let mut lambda = Vec::with_capacity(n);
    for k in 0..pairs {
        let w = 1.0 + 1.55 * k as f64 + rng.random_range(0.0..0.2);
        let d = -0.02 - 0.3 * k as f64 * rng.random_range(0.5..1.0);
        lambda.push(C::new(d, w));
        lambda.push(C::new(d, -w));
    }
    let mut cubic = vec![C::from(0.0); n * n * n * n];
    for v in cubic.iter_mut() {
        *v = C::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
    }
    let mut quad = vec![C::from(0.0); n * n * n];
    if quadratic {
        for v in quad.iter_mut() {
            *v = C::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        }
    }
    DiagonalizedSystem::from_modal(lambda, move |z: &DVector<C>| {
        let mut out = DVector::zeros(n);
        for i in 0..n {
            let mut acc = C::from(0.0);
            for j in 0..n {
                for k in 0..n {
                    acc += quad[(i * n + j) * n + k] * z[j] * z[k];
                    for l in 0..n {
                        acc += cubic[((i * n + j) * n + k) * n + l] * z[j] * z[k] * z[l];
                    }
                }
            }
            out[i] = acc;
        }
        out
    })
    .expect("valid modal system")
}

/// Default material data on a coarse mesh, unforced.
pub fn toy_beam(n_elements: usize) -> Arc<AssembledBeam> {
    Arc::new(
        assemble(&BeamConfig::default().with_elements(n_elements).with_forcing(ForcingSpec::off()))
            .expect("toy beam assembles"),
    )
}

pub fn default_beam() -> Arc<AssembledBeam> {
    toy_beam(BeamConfig::default().n_elements)
}

pub fn random_vector(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> DVector<f64> {
    DVector::from_fn(n, |_, _| scale * rng.random_range(-1.0..1.0))
}

pub fn max_rel(a: &DVector<C>, b: &DVector<C>) -> f64 {
    let scale = a.iter().chain(b.iter()).map(|v| v.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max) / scale
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let m = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / m, ly.iter().sum::<f64>() / m);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
