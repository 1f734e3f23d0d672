//! A three-line model with gamma claims read from an inline config, asking
//! for ruin of any line and starting from the stationary environment.

use ruinlab::config::ExperimentConfig;
use ruinlab::experiment::{run, write_csv};

const CONFIG: &str = r#"
[environment]
rates = [[-0.5, 0.5, 0.0], [0.2, -0.4, 0.2], [0.0, 1.0, -1.0]]
initial_law = [0.25, 0.5, 0.25]

[components]
arrival_rates = [[0.5, 1.0, 2.0], [0.8, 0.8, 0.8], [0.3, 0.6, 1.2]]
premiums = [1.4, 1.0, 1.0]

[claims]
default = { kind = "gamma", shape = 2.0, scale = 0.5 }

[query]
reserves = [3.0, 4.0, 2.0]
horizons = { start = 5.0, stop = 25.0, step = 5.0 }
mode = "any"
methods = ["mc", "diffusion", "independence"]

[mc]
paths = 40000
seed = 5
"#;

fn main() -> ruinlab::Result<()> {
    let cfg = ExperimentConfig::from_toml(CONFIG)?;
    let rows = run(&cfg)?;
    write_csv(&rows, std::io::stdout())?;
    Ok(())
}
