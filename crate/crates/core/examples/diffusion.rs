//! The Brownian approximation: drift and covariance of the limit, then the
//! joint ruin probability from the bivariate first-passage formula.

use ruinlab::diffusion::{diffusion_spec, independence_ruin, multivariate_ruin_diffusion, Regime};
use ruinlab::model::base_model;
use ruinlab::RuinQuery;

fn main() -> ruinlab::Result<()> {
    let model = base_model();
    let spec = diffusion_spec(&model, Regime::BALANCED)?;
    println!("drift      {:?}", spec.drift.as_slice());
    println!("covariance {:.4}", spec.covariance);
    println!("correlation {:.4}\n", spec.correlation(0, 1));

    let reserves = vec![10.0, 10.0];
    println!("{:>4} {:>12} {:>12}", "T", "diffusion", "independent");
    for t in [10.0, 20.0, 30.0, 40.0, 50.0] {
        let joint = multivariate_ruin_diffusion(&model, &RuinQuery::all(reserves.clone(), t, 0))?;
        let indep = independence_ruin(&spec, &reserves, t, &[0, 1])?;
        println!("{t:>4} {:>12.6} {indep:>12.6}", joint.probability);
    }
    Ok(())
}
