//! Full beam started off both the slow manifold and the SSM; prints the
//! early and late decay rates of the distance to the SSM.

use vkbeam::beam::BeamConfig;
use vkbeam::experiments::{run_ssm_experiment, SsmExperiment, SsmSuiteSpec};

fn main() -> vkbeam::Result<()> {
    let spec = SsmSuiteSpec::new(SsmExperiment::OffSlowManifold);
    let run = run_ssm_experiment(&BeamConfig::default(), &spec)?;

    let d = &run.distances;
    println!("distance: start {:.4e}, end {:.4e}", d[0].full, d[d.len() - 1].full);
    if let Some(fit) = run.fit_full {
        println!("rates: early {:.4} on {:?}, late {:.4} on {:?}", fit.initial_rate, spec.early, fit.final_rate, spec.late);
    }
    println!("|Re lambda_1| = {:.4}, |Re lambda_2| = {:.4}", run.lambda[0].re.abs(), run.lambda[2].re.abs());
    println!("steps {}, bisections {}", run.trajectory.stats.steps, run.trajectory.stats.bisections);
    Ok(())
}
