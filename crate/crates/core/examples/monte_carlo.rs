//! Simulated ruin probabilities of the base two-line model for every ruin
//! event, over a grid of horizons from one set of paths.

use ruinlab::model::base_model;
use ruinlab::simulate::{estimate_ruin_curve, MonteCarloSettings};
use ruinlab::RuinQuery;

fn main() -> ruinlab::Result<()> {
    let model = base_model();
    let query = RuinQuery::all(vec![10.0, 10.0], 50.0, 0);
    let horizons = [10.0, 20.0, 30.0, 40.0, 50.0];
    let curve = estimate_ruin_curve(&model, &query, &horizons, &MonteCarloSettings::new(100_000, 7))?;

    println!("{:>4} {:>18} {:>10} {:>10} {:>10}", "T", "both ruined", "any", "line 1", "line 2");
    for est in &curve {
        println!(
            "{:>4} {:>9.5} ±{:.5} {:>10.5} {:>10.5} {:>10.5}",
            est.horizon,
            est.all.estimate,
            est.all.ci_halfwidth,
            est.any.estimate,
            est.marginals[0].estimate,
            est.marginals[1].estimate,
        );
    }
    Ok(())
}
