mod common;

use common::*;
use nalgebra::DVector;
use num_complex::Complex64 as C;
use vkbeam::sfd::SlowManifold;
use vkbeam::ssm::{
    compute_ssm, compute_ssm_general, dense_cubic_tensor, invariance_residual, modal_cubic_slices,
    DiagonalizedSystem, SsmExpansion, W1Normalization,
};

const NORMS: [W1Normalization; 2] = [W1Normalization::Eigenvalue, W1Normalization::Unit];

fn assert_matches_oracle(sys: &DiagonalizedSystem, exp: &SsmExpansion, master: usize, norm: W1Normalization) {
    let oracle = oracle_ssm(sys, master, norm);
    let scale = oracle.w2.iter().chain(&oracle.w3).map(|v| v.iter().map(|c| c.norm()).fold(0.0, f64::max)).fold(0.0, f64::max);
    for m in 0..3 {
        let d = (&exp.w2_monomials()[m] - &oracle.w2[m]).iter().map(|c| c.norm()).fold(0.0, f64::max);
        assert!(d < 1e-8 * scale, "w2 monomial {m}: {d:e} of {scale:e}");
    }
    for m in 0..4 {
        let e = max_rel(&exp.w3_monomials()[m], &oracle.w3[m]);
        assert!(e < 1e-8, "w3 monomial {m}: {e:e}");
    }
    let e = (exp.beta() - oracle.beta).norm() / oracle.beta.norm();
    assert!(e < 1e-8, "beta {} vs {}: {e:e}", exp.beta(), oracle.beta);
}

fn rom_system(n_elements: usize, order: u8) -> DiagonalizedSystem {
    let manifold = SlowManifold::new(toy_beam(n_elements)).unwrap();
    DiagonalizedSystem::from_rom(&manifold.build_rom(order).unwrap()).unwrap()
}

#[test]
fn cubic_coefficients_match_taylor_oracle_on_random_systems() {
    for seed in 0..3 {
        let sys = random_modal_system(seed, 4, false);
        for master in [0, 1] {
            for norm in NORMS {
                let exp = compute_ssm(&sys, master, norm).unwrap();
                assert_matches_oracle(&sys, &exp, master, norm);
            }
        }
    }
}

#[test]
fn quadratic_cubic_coefficients_match_taylor_oracle() {
    for seed in 10..13 {
        let sys = random_modal_system(seed, 3, true);
        for norm in NORMS {
            let exp = compute_ssm_general(&sys, 0, norm).unwrap();
            assert_matches_oracle(&sys, &exp, 0, norm);
        }
    }
}

#[test]
fn toy_beam_rom_matches_taylor_oracle() {
    let sys = rom_system(2, 1);
    assert_eq!(sys.dim(), 8);
    for norm in NORMS {
        let exp = compute_ssm(&sys, 0, norm).unwrap();
        assert_matches_oracle(&sys, &exp, 0, norm);
    }
}

#[test]
fn general_path_reduces_to_cubic_path() {
    let sys = random_modal_system(21, 4, false);
    let a = compute_ssm(&sys, 0, W1Normalization::Eigenvalue).unwrap();
    let b = compute_ssm_general(&sys, 0, W1Normalization::Eigenvalue).unwrap();
    for m in 0..4 {
        assert!(max_rel(&a.w3_monomials()[m], &b.w3_monomials()[m]) < 1e-12);
    }
    assert!((a.beta() - b.beta()).norm() <= 1e-12 * a.beta().norm());
}

#[test]
fn cubic_path_rejects_quadratic_terms() {
    let sys = random_modal_system(3, 2, true);
    assert!(modal_cubic_slices(&sys, 0).is_err());
}

#[test]
fn invariance_residual_is_fourth_order_or_better() {
    let systems = [
        (rom_system(2, 1), 4.5),
        (random_modal_system(5, 3, false), 4.5),
        (random_modal_system(6, 3, true), 3.5),
    ];
    let rho: Vec<f64> = (0..9).map(|k| 1e-3 * 10f64.powf(k as f64 / 4.0)).collect();
    for (sys, min_slope) in systems {
        let exp = compute_ssm_general(&sys, 0, W1Normalization::Unit).unwrap();
        let res: Vec<f64> = rho
            .iter()
            .map(|&r| invariance_residual(&sys, &exp, SsmExpansion::polar_to_s(r, 0.4)).norm())
            .collect();
        let slope = loglog_slope(&rho, &res);
        assert!(slope >= min_slope, "slope {slope}");
    }
}

#[test]
fn dense_tensor_agrees_with_master_slices() {
    let sys = rom_system(2, 1);
    let t = dense_cubic_tensor(&sys).unwrap();
    let slices = modal_cubic_slices(&sys, 1).unwrap();
    let idx = [2, 3];
    for j in 0..2 {
        for k in 0..2 {
            for l in 0..2 {
                let dense = DVector::from_fn(sys.dim(), |i, _| t[i][idx[j]][idx[k]][idx[l]]);
                assert!(max_rel(&dense, slices.get(j, k, l)) < 1e-10);
            }
        }
    }
    // Full contraction reproduces the map itself.
    let z = DVector::from_fn(sys.dim(), |i, _| C::new(0.1 * i as f64 - 0.3, 0.05 * (i * i) as f64));
    let direct = sys.nonlinearity(&z);
    let n = sys.dim();
    let contracted = DVector::from_fn(n, |i, _| {
        let mut acc = C::from(0.0);
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    acc += t[i][j][k][l] * z[j] * z[k] * z[l];
                }
            }
        }
        acc
    });
    assert!(max_rel(&direct, &contracted) < 1e-10);
}

#[test]
fn modal_round_trip_and_diagonalization() {
    let sys = rom_system(4, 1);
    let mut r = rng(3);
    let x = random_vector(&mut r, sys.dim() / 2, 1e-3);
    let xd = random_vector(&mut r, sys.dim() / 2, 1e-3);
    let z = sys.from_physical(&x, &xd).unwrap();
    for k in 0..z.len() / 2 {
        assert!((z[2 * k + 1] - z[2 * k].conj()).norm() < 1e-12 * z.norm().max(1e-300));
    }
    let (x2, xd2) = sys.to_physical(&z).unwrap();
    assert!(x2.iter().zip(x.iter()).all(|(a, b)| (a.re - b).abs() < 1e-14 && a.im.abs() < 1e-14));
    assert!(xd2.iter().zip(xd.iter()).all(|(a, b)| (a.re - b).abs() < 1e-14 && a.im.abs() < 1e-14));
}
