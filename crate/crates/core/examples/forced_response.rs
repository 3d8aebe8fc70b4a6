//! Quarter-span deflection of the forced beam: full model against the
//! order-1 SFD model lifted back to full dimension.

use std::sync::Arc;

use nalgebra::DVector;
use vkbeam::beam::{assemble, BeamConfig};
use vkbeam::dynamics::{integrate_full, integrate_rom, lift_sfd, FullBeamSystem, IntegratorSettings};
use vkbeam::sfd::SlowManifold;

fn main() -> vkbeam::Result<()> {
    let beam = Arc::new(assemble(&BeamConfig::default())?);
    let period = beam.forcing_period();
    let settings = IntegratorSettings::for_period(period).with_record_every(25);
    let zs = DVector::zeros(beam.n_s());
    let zf = DVector::zeros(beam.n_f());

    let full = integrate_full(&FullBeamSystem::new(Arc::clone(&beam)), (&zs, &zs, &zf, &zf), &settings, 2.0 * period)?;
    let manifold = SlowManifold::new(Arc::clone(&beam))?;
    let rom = integrate_rom(&manifold.build_rom(1)?, (&zs, &zs), &settings, 2.0 * period)?;
    let lifted = lift_sfd(&manifold, &rom)?;

    let dof = beam.deflection_dof(beam.quarter_node()).expect("interior node");
    println!("{:>10} {:>14} {:>14}", "tau", "full", "sfd-1");
    for (k, tau) in full.tau.iter().enumerate() {
        println!("{tau:>10.4} {:>14.6e} {:>14.6e}", full.q[k][dof], lifted.q[k][dof]);
    }
    Ok(())
}
