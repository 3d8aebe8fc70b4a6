//! Assemble the default beam and list its lowest bending frequencies.

use vkbeam::beam::{assemble, BeamConfig};
use vkbeam::spectra::undamped_modes;

fn main() -> vkbeam::Result<()> {
    let config = BeamConfig::default();
    let beam = assemble(&config)?;
    println!("slow dofs {}, fast dofs {}", beam.n_s(), beam.n_f());
    println!("zeta {:.6}, eps {:e}", beam.zeta(), beam.eps());

    let (omega, _) = undamped_modes(&beam)?;
    let w1 = omega[0];
    for (k, w) in omega.iter().take(6).enumerate() {
        println!("mode {:>2}: omega {:>12.6}  omega/omega1 {:>8.4}", k + 1, w, w / w1);
    }
    Ok(())
}
