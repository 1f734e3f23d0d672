//! One line switching from the calm to the busy state at time τ: the
//! exponential closed form with the effective intensity against the general
//! route that conditions on the surplus at τ through ξ̂.

use ruinlab::model::two_state_model;
use ruinlab::switch::{exp_single_switch_ruin, general_single_switch_ruin, lambda_star, SwitchScenario};
use ruinlab::QuadratureConfig;

fn main() -> ruinlab::Result<()> {
    let model = two_state_model(0.45, 1.8, 1.0);
    let quad = QuadratureConfig::default();
    let (u, t) = (10.0, 50.0);
    println!("{:>4} {:>8} {:>12} {:>12}", "τ", "λ*", "closed form", "via ξ̂");
    for tau in [5.0, 15.0, 25.0, 35.0, 45.0, 50.0] {
        let closed = exp_single_switch_ruin(u, 1.0, 1.0, 0.45, 1.8, tau, t, &quad)?;
        let general = general_single_switch_ruin(&model, &SwitchScenario::new(0, 0, 1, tau, t), u, &quad)?;
        println!("{tau:>4} {:>8.4} {closed:>12.6} {general:>12.6}", lambda_star(0.45, 1.8, tau, t));
    }
    Ok(())
}
