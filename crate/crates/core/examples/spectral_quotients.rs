//! Damped spectrum of the default beam, spectral quotients and the
//! low-order non-resonance check for the first mode.

use vkbeam::beam::{assemble, BeamConfig};
use vkbeam::experiments::spectrum_report;
use vkbeam::spectra::{check_nonresonance, EigenMode};

fn main() -> vkbeam::Result<()> {
    let beam = assemble(&BeamConfig::default())?;
    let report = spectrum_report(&beam, 0, EigenMode::Exact)?;

    for k in 0..5 {
        let l = report.exact.lambda[2 * k];
        println!("lambda_{} = {:+.6} {:+.6}i", k + 1, l.re, l.im);
    }
    let q = &report.quotients;
    println!("successive ratios: {:.4?}", &q.successive[..4]);
    println!("sigma = {} (max ratio {:.1})", q.sigma, q.max_ratio);

    for order in [3, 5, 7] {
        let r = check_nonresonance(&report.exact.lambda, 0, order)?;
        println!("order {order}: passed = {}", r.passed);
    }
    Ok(())
}
