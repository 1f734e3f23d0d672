//! The single-switch approximation for a slowly moving environment, next to
//! the probability that the environment switches at most once.

use ruinlab::markov::at_most_one_switch_probability;
use ruinlab::model::two_state_model;
use ruinlab::switch::chi;
use ruinlab::{QuadratureConfig, RuinQuery};

fn main() -> ruinlab::Result<()> {
    let model = two_state_model(0.45, 1.8, 1.0 / 64.0);
    let quad = QuadratureConfig::default();
    println!("{:>4} {:>10} {:>10} {:>10}", "T", "P(≤1 sw)", "χ state 1", "χ state 2");
    for t in [10.0, 20.0, 30.0, 40.0, 50.0] {
        let p = at_most_one_switch_probability(&model.environment, 0, t);
        let c1 = chi(&model, &RuinQuery::all(vec![10.0, 10.0], t, 0), &quad)?;
        let c2 = chi(&model, &RuinQuery::all(vec![10.0, 10.0], t, 1), &quad)?;
        println!("{t:>4} {p:>10.6} {c1:>10.6} {c2:>10.6}");
    }
    Ok(())
}
