//! Runs the three bundled studies with fewer paths, writes one CSV per study
//! to the system temp directory and prints each method's largest deviation
//! from the simulation.

use std::fs::File;

use ruinlab::experiment::{max_deviations, run, write_csv, Example};

fn main() -> ruinlab::Result<()> {
    for example in Example::ALL {
        let mut cfg = example.config();
        cfg.mc.paths = 50_000;
        cfg.horizons = vec![10.0, 20.0, 30.0, 40.0, 50.0];
        let rows = run(&cfg)?;
        let path = std::env::temp_dir().join(format!("{}.csv", example.name()));
        write_csv(&rows, File::create(&path)?)?;
        println!("{} -> {}", example.name(), path.display());
        for (method, dev) in max_deviations(&rows) {
            println!("  max |{} − mc| = {dev:.5}", method.name());
        }
    }
    Ok(())
}
