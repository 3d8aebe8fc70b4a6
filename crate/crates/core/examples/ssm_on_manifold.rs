//! Trajectories started on the SSM at growing amplitudes, compared with
//! the closed-form polar reduced dynamics.

use vkbeam::beam::BeamConfig;
use vkbeam::experiments::{run_ssm_experiment, SsmExperiment, SsmSuiteSpec};

fn main() -> vkbeam::Result<()> {
    for rho0 in [0.3, 1.0, 3.0] {
        let mut spec = SsmSuiteSpec::new(SsmExperiment::OnSsm);
        spec.rho0 = rho0;
        spec.tau_end = 60.0;
        let run = run_ssm_experiment(&BeamConfig::default(), &spec)?;
        let worst = run.distances.iter().map(|d| d.transverse).fold(0.0, f64::max);
        let rho_end = run.reduced.q.last().expect("samples")[0];
        println!(
            "rho0 {rho0:>4}: max transverse distance {worst:.3e}, reduced rho(end) {rho_end:.4e}, bound exceeded {}",
            run.bound_violated
        );
    }
    Ok(())
}
