//! Cubic SSM of the first mode of the order-1 reduced beam and its
//! backbone curve.

use std::sync::Arc;

use vkbeam::beam::{assemble, BeamConfig, ForcingSpec};
use vkbeam::sfd::SlowManifold;
use vkbeam::ssm::{compute_ssm, invariance_residual, reduced_dynamics, DiagonalizedSystem, SsmExpansion, W1Normalization};

fn main() -> vkbeam::Result<()> {
    let beam = Arc::new(assemble(&BeamConfig::default().with_forcing(ForcingSpec::off()))?);
    let rom = SlowManifold::new(beam)?.build_rom(1)?;
    let sys = DiagonalizedSystem::from_rom(&rom)?;
    let exp = compute_ssm(&sys, 0, W1Normalization::Eigenvalue)?;
    let polar = reduced_dynamics(&exp);

    println!("lambda = {:.6}, beta = {:.6}", exp.lambda_master(), exp.beta());
    println!("{:>8} {:>12} {:>12} {:>12}", "rho", "frequency", "decay", "residual");
    for k in 0..=10 {
        let rho = 0.03 * k as f64;
        let res = invariance_residual(&sys, &exp, SsmExpansion::polar_to_s(rho, 0.0)).norm();
        println!("{rho:>8.2} {:>12.6} {:>12.6} {res:>12.3e}", polar.backbone(rho), -polar.rho_rate(rho));
    }
    Ok(())
}
