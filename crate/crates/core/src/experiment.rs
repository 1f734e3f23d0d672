//! Running estimators over a horizon grid and writing the results.

use std::io::Write;

use nalgebra::DMatrix;

use crate::config::{ExperimentConfig, Method};
use crate::diffusion::{self, DiffusionOptions, Regime};
use crate::error::{Error, Result};
use crate::model::{InitialEnvironment, RuinMode};
use crate::simulate::{estimate_ruin_curve, scaled_claims_covariance, MonteCarloEstimate};
use crate::switch;

/// Column order of the CSV output.
pub const CSV_HEADER: [&str; 9] = [
    "T",
    "mc",
    "mc_ci_low",
    "mc_ci_high",
    "diffusion",
    "single_switch",
    "independence",
    "state",
    "mode",
];

/// One horizon of an experiment; absent methods are `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub horizon: f64,
    pub mc: Option<MonteCarloEstimate>,
    pub diffusion: Option<f64>,
    pub single_switch: Option<f64>,
    pub independence: Option<f64>,
    pub start: InitialEnvironment,
    pub mode: RuinMode,
}

impl ResultRow {
    pub fn value(&self, method: Method) -> Option<f64> {
        match method {
            Method::MonteCarlo => self.mc.map(|e| e.estimate),
            Method::Diffusion => self.diffusion,
            Method::SingleSwitch => self.single_switch,
            Method::Independence => self.independence,
        }
    }
}

fn wrap(method: Method, horizon: f64) -> impl FnOnce(Error) -> Error {
    move |e| Error::Estimator {
        method: method.name().to_string(),
        horizon,
        source: Box::new(e),
    }
}

/// Evaluates every selected method at every horizon of the grid.
pub fn run(config: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    config.validate()?;
    let has = |m: Method| config.methods.contains(&m);
    let mc = if has(Method::MonteCarlo) {
        let curve = estimate_ruin_curve(&config.model, &config.query, &config.horizons, &config.mc)
            .map_err(wrap(Method::MonteCarlo, *config.horizons.last().unwrap()))?;
        curve.into_iter().map(|e| Some(e.requested)).collect()
    } else {
        vec![None; config.horizons.len()]
    };
    let spec = if has(Method::Independence) {
        Some(diffusion::diffusion_spec(&config.model, Regime::BALANCED)?)
    } else {
        None
    };
    let m = config.model.dimension();
    let options = DiffusionOptions::default();

    let mut rows = Vec::with_capacity(config.horizons.len());
    for (&t, mc) in config.horizons.iter().zip(mc) {
        let query = config.query.with_horizon(t);
        let diffusion = if has(Method::Diffusion) {
            let r = diffusion::multivariate_ruin_diffusion_with(&config.model, &query, &options)
                .map_err(wrap(Method::Diffusion, t))?;
            Some(r.probability)
        } else {
            None
        };
        let single_switch = if has(Method::SingleSwitch) {
            Some(switch::chi(&config.model, &query, &config.quadrature).map_err(wrap(Method::SingleSwitch, t))?)
        } else {
            None
        };
        let independence = match &spec {
            Some(spec) => {
                let lines = query.mode.components(m);
                let p = match lines {
                    Some(lines) => diffusion::independence_ruin(spec, &query.reserves, t, &lines),
                    None => {
                        // any line ruined: complement of joint survival
                        (0..m)
                            .try_fold(1.0, |acc, i| {
                                Ok::<f64, Error>(
                                    acc * (1.0 - diffusion::independence_ruin(spec, &query.reserves, t, &[i])?),
                                )
                            })
                            .map(|s| 1.0 - s)
                    }
                };
                Some(p.map_err(wrap(Method::Independence, t))?)
            }
            None => None,
        };
        rows.push(ResultRow {
            horizon: t,
            mc,
            diffusion,
            single_switch,
            independence,
            start: query.start.clone(),
            mode: query.mode.clone(),
        });
    }
    Ok(rows)
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_csv<W: Write>(rows: &[ResultRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        let state = match r.start {
            InitialEnvironment::State(j) => (j + 1).to_string(),
            InitialEnvironment::Law => "law".to_string(),
        };
        w.write_record([
            r.horizon.to_string(),
            cell(r.mc.map(|e| e.estimate)),
            cell(r.mc.map(|e| e.ci_low())),
            cell(r.mc.map(|e| e.ci_high())),
            cell(r.diffusion),
            cell(r.single_switch),
            cell(r.independence),
            state,
            r.mode.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Largest |method − mc| over the rows, for each non-MC method present.
pub fn max_deviations(rows: &[ResultRow]) -> Vec<(Method, f64)> {
    [Method::Diffusion, Method::SingleSwitch, Method::Independence]
        .into_iter()
        .filter_map(|method| {
            let devs: Vec<f64> = rows
                .iter()
                .filter_map(|r| Some((r.value(method)? - r.value(Method::MonteCarlo)?).abs()))
                .collect();
            (!devs.is_empty()).then(|| (method, devs.into_iter().fold(0.0, f64::max)))
        })
        .collect()
}

/// The three bundled numerical studies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Example {
    /// Base parameters: fast environment, high arrival rates.
    Base,
    /// Environment rates divided by 64.
    SlowEnvironment,
    /// Arrival rates lowered to 0.36 / 1.44.
    LowArrivals,
}

impl Example {
    pub const ALL: [Example; 3] = [Example::Base, Example::SlowEnvironment, Example::LowArrivals];

    pub fn name(&self) -> &'static str {
        match self {
            Example::Base => "example1",
            Example::SlowEnvironment => "example2",
            Example::LowArrivals => "example3",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|e| e.name() == name)
    }

    pub fn toml(&self) -> &'static str {
        match self {
            Example::Base => include_str!("../configs/example1.toml"),
            Example::SlowEnvironment => include_str!("../configs/example2.toml"),
            Example::LowArrivals => include_str!("../configs/example3.toml"),
        }
    }

    pub fn config(&self) -> ExperimentConfig {
        ExperimentConfig::from_toml(self.toml()).expect("bundled config is valid")
    }
}

/// Sample against analytic covariance of the √n-scaled claims process.
#[derive(Debug, Clone)]
pub struct FcltReport {
    pub scale: f64,
    pub paths: u64,
    pub sample: DMatrix<f64>,
    pub analytic: DMatrix<f64>,
}

impl FcltReport {
    /// |sample − analytic| / analytic on the diagonal.
    pub fn diagonal_errors(&self) -> Vec<f64> {
        (0..self.analytic.nrows())
            .map(|i| ((self.sample[(i, i)] - self.analytic[(i, i)]) / self.analytic[(i, i)]).abs())
            .collect()
    }

    /// Largest off-diagonal difference on the correlation scale.
    pub fn correlation_error(&self) -> f64 {
        let corr = |c: &DMatrix<f64>, i: usize, k: usize| c[(i, k)] / (c[(i, i)] * c[(k, k)]).sqrt();
        let m = self.analytic.nrows();
        let mut worst: f64 = 0.0;
        for i in 0..m {
            for k in (i + 1)..m {
                worst = worst.max((corr(&self.sample, i, k) - corr(&self.analytic, i, k)).abs());
            }
        }
        worst
    }

    /// Largest entrywise relative error, off-diagonal entries included.
    pub fn max_relative_error(&self) -> f64 {
        self.sample
            .iter()
            .zip(self.analytic.iter())
            .map(|(s, a)| if *a == 0.0 { s.abs() } else { ((s - a) / a).abs() })
            .fold(0.0, f64::max)
    }
}

/// Simulates the claims process with arrival and environment rates
/// multiplied by `scale` and compares its covariance at time 1 with Σ̄.
pub fn fclt_check(
    model: &crate::model::RiskModel,
    scale: f64,
    paths: u64,
    seed: u64,
    threads: usize,
) -> Result<FcltReport> {
    let spec = diffusion::diffusion_spec(model, Regime::BALANCED)?;
    let sample = scaled_claims_covariance(model, scale, paths, seed, threads)?;
    Ok(FcltReport {
        scale,
        paths,
        sample,
        analytic: spec.covariance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_configs_parse() {
        let base = Example::Base.config();
        assert_eq!(base.model, crate::model::base_model());
        assert_eq!(base.query.reserves, vec![10.0, 10.0]);
        assert_eq!(base.horizons.first(), Some(&2.0));
        assert_eq!(base.horizons.last(), Some(&50.0));
        let slow = Example::SlowEnvironment.config();
        assert_eq!(slow.model, crate::model::two_state_model(0.45, 1.8, 1.0 / 64.0));
        let low = Example::LowArrivals.config();
        assert_eq!(low.model, crate::model::two_state_model(0.36, 1.44, 1.0));
    }

    #[test]
    fn csv_has_fixed_columns_and_empty_cells() {
        let mut cfg = Example::Base.config();
        cfg.methods = vec![Method::Diffusion, Method::Independence];
        cfg.horizons = vec![10.0, 20.0];
        let rows = run(&cfg).unwrap();
        let mut buf = Vec::new();
        write_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), CSV_HEADER.join(","));
        let first: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(first.len(), 9);
        assert_eq!(first[0], "10");
        assert!(first[1].is_empty() && first[5].is_empty());
        assert!(!first[4].is_empty() && !first[6].is_empty());
        assert_eq!(&first[7..], &["1", "all"]);
    }
}
