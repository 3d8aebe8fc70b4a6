//! One row of the reduction-error grid: forced response from rest of the
//! full beam against the lifted SFD models of orders 0, 1 and 2.
//!
//! Usage: `cargo run --release --example sfd_error_table -- [eps] [periods]`

use vkbeam::beam::BeamConfig;
use vkbeam::experiments::sfd_error_row;

fn main() -> vkbeam::Result<()> {
    let mut args = std::env::args().skip(1);
    let eps: f64 = args.next().map_or(1e-3, |a| a.parse().expect("eps"));
    let periods: f64 = args.next().map_or(2.0, |a| a.parse().expect("periods"));

    let row = sfd_error_row(&BeamConfig::default().with_eps(eps), &[0, 1, 2], periods, 1000)?;
    println!("eps {eps:e}, {periods} periods");
    for (order, e) in row.iter().enumerate() {
        println!("  order {order}: {e:.4e} %");
    }
    Ok(())
}
