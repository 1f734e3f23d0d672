//! Speeds up arrivals and environment n-fold and compares the sample
//! covariance of the scaled claims at time 1 with the limiting covariance.

use ruinlab::experiment::fclt_check;
use ruinlab::model::base_model;

fn main() -> ruinlab::Result<()> {
    for n in [4.0, 16.0, 64.0] {
        let report = fclt_check(&base_model(), n, 20_000, 3, 0)?;
        println!(
            "n = {n:>3}: diagonal errors {:.4?}, correlation error {:.4}",
            report.diagonal_errors(),
            report.correlation_error()
        );
    }
    let report = fclt_check(&base_model(), 64.0, 20_000, 3, 0)?;
    println!("\nsample {:.4}analytic {:.4}", report.sample, report.analytic);
    Ok(())
}
