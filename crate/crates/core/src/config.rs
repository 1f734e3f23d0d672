//! TOML experiment files.
//!
//! ```toml
//! [environment]
//! rates = [[-1.0, 1.0], [2.0, -2.0]]   # generator, rows sum to zero
//! initial_state = 1                     # 1-based; or `initial_law = [...]`
//! rate_scale = 1.0                      # optional factor on all rates
//!
//! [components]
//! arrival_rates = [[0.45, 1.8], [0.45, 1.8]]   # one row per line, one column per state
//! premiums = [1.0, 1.0]
//!
//! [claims]
//! default = { kind = "exponential", mean = 1.0 }
//! # per_line = [[{ kind = "gamma", shape = 2.0, scale = 0.5 }, ...], ...]
//!
//! [query]
//! reserves = [10.0, 10.0]
//! horizons = { start = 2.0, stop = 50.0, step = 2.0 }   # or a list
//! mode = "all"                                         # any | marginal:1 | subset:1+2
//! methods = ["mc", "diffusion", "single-switch", "independence"]
//!
//! [mc]
//! paths = 1000000
//! seed = 20240601
//! confidence = 0.95
//! threads = 0
//!
//! [quadrature]
//! rel_tol = 1e-6
//! abs_tol = 1e-10
//! max_subdivisions = 200
//!
//! [output]
//! csv = "example1.csv"
//! ```
//!
//! States and lines are numbered from 1 in files and on the command line.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::model::{ClaimDistribution, EnvironmentModel, InitialEnvironment, RiskModel, RuinMode, RuinQuery};
use crate::numerics::QuadratureConfig;
use crate::simulate::MonteCarloSettings;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub environment: EnvironmentSection,
    pub components: ComponentsSection,
    pub claims: ClaimsSection,
    pub query: QuerySection,
    #[serde(default)]
    pub mc: McSection,
    #[serde(default)]
    pub quadrature: QuadratureConfig,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvironmentSection {
    pub rates: Vec<Vec<f64>>,
    pub initial_state: Option<usize>,
    pub initial_law: Option<Vec<f64>>,
    pub rate_scale: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentsSection {
    pub arrival_rates: Vec<Vec<f64>>,
    pub premiums: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClaimsSection {
    pub default: Option<ClaimDistribution>,
    pub per_line: Option<Vec<Vec<ClaimDistribution>>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum HorizonSpec {
    List(Vec<f64>),
    Grid { start: f64, stop: f64, step: f64 },
}

impl HorizonSpec {
    pub fn values(&self) -> Vec<f64> {
        match *self {
            HorizonSpec::List(ref v) => v.clone(),
            HorizonSpec::Grid { start, stop, step } => {
                if !(step > 0.0) || !(stop >= start) {
                    return Vec::new();
                }
                let n = ((stop - start) / step + 1e-9).floor() as usize;
                (0..=n).map(|k| start + k as f64 * step).collect()
            }
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuerySection {
    pub reserves: Vec<f64>,
    pub horizons: HorizonSpec,
    #[serde(default = "default_mode")]
    pub mode: String,
    #[serde(default = "default_methods")]
    pub methods: Vec<String>,
}

fn default_mode() -> String {
    "all".into()
}

fn default_methods() -> Vec<String> {
    vec!["mc".into(), "diffusion".into(), "single-switch".into(), "independence".into()]
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct McSection {
    pub paths: u64,
    pub seed: u64,
    pub confidence: f64,
    pub threads: usize,
}

impl Default for McSection {
    fn default() -> Self {
        let d = MonteCarloSettings::default();
        Self {
            paths: d.paths,
            seed: d.seed,
            confidence: d.confidence,
            threads: d.threads,
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub csv: Option<PathBuf>,
}

/// Estimation method named in a config file or on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    MonteCarlo,
    Diffusion,
    SingleSwitch,
    Independence,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::MonteCarlo, Method::Diffusion, Method::SingleSwitch, Method::Independence];

    pub fn name(&self) -> &'static str {
        match self {
            Method::MonteCarlo => "mc",
            Method::Diffusion => "diffusion",
            Method::SingleSwitch => "single-switch",
            Method::Independence => "independence",
        }
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown method `{s}` (expected mc, diffusion, single-switch or independence)")))
    }
}

/// Parses `all`, `any`, `marginal:i` or `subset:i+k+…` (1-based).
pub fn parse_mode(s: &str) -> Result<RuinMode> {
    let bad = || Error::Config(format!("unknown mode `{s}` (expected all, any, marginal:i or subset:i+k)"));
    let index = |t: &str| -> Result<usize> {
        match t.trim().parse::<usize>() {
            Ok(i) if i >= 1 => Ok(i - 1),
            _ => Err(bad()),
        }
    };
    match s.trim() {
        "all" => Ok(RuinMode::AllComponents),
        "any" => Ok(RuinMode::AnyComponent),
        other => match other.split_once(':') {
            Some(("marginal", i)) => Ok(RuinMode::Marginal(index(i)?)),
            Some(("subset", list)) => Ok(RuinMode::Subset(
                list.split('+').map(index).collect::<Result<Vec<_>>>()?,
            )),
            _ => Err(bad()),
        },
    }
}

/// Everything needed to run a set of estimators over a horizon grid.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    /// File the experiment was read from, if any.
    pub model_path: Option<PathBuf>,
    pub model: RiskModel,
    /// Reserves, start and mode; the horizon is overwritten per grid point.
    pub query: RuinQuery,
    pub horizons: Vec<f64>,
    pub methods: Vec<Method>,
    pub mc: MonteCarloSettings,
    pub quadrature: QuadratureConfig,
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)?;
        cfg.model_path = Some(path.to_path_buf());
        Ok(cfg)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let file: ConfigFile = toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
        file.into_experiment()
    }

    /// Checks the model, query and run settings; the first violation is
    /// reported as a config error.
    pub fn validate(&self) -> Result<()> {
        let first = |v: Vec<crate::model::Violation>| v.into_iter().next().map(|v| Error::Config(v.to_string()));
        if let Some(e) = first(self.model.validate()) {
            return Err(e);
        }
        if let Some(e) = first(self.query.validate(&self.model)) {
            return Err(e);
        }
        if self.horizons.is_empty() {
            return Err(Error::Config("horizon grid is empty".into()));
        }
        if self.horizons.iter().any(|t| !(*t > 0.0) || !t.is_finite()) || self.horizons.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("horizons must be positive and strictly increasing".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::Config("no methods selected".into()));
        }
        if self.mc.paths == 0 {
            return Err(Error::Config("mc.paths must be at least 1".into()));
        }
        if !(self.mc.confidence > 0.0 && self.mc.confidence < 1.0) {
            return Err(Error::Config("mc.confidence must lie in (0, 1)".into()));
        }
        if !self.quadrature.is_valid() {
            return Err(Error::Config("quadrature tolerances must be positive".into()));
        }
        Ok(())
    }
}

impl ConfigFile {
    pub fn into_experiment(self) -> Result<ExperimentConfig> {
        let env = &self.environment;
        let states = env.rates.len();
        let initial = match (env.initial_state, &env.initial_law) {
            (Some(_), Some(_)) => {
                return Err(Error::Config("give either initial_state or initial_law, not both".into()))
            }
            (Some(0), None) => return Err(Error::Config("initial_state is 1-based".into())),
            (Some(s), None) => {
                let mut law = vec![0.0; states.max(s)];
                law[s - 1] = 1.0;
                law
            }
            (None, Some(law)) => law.clone(),
            (None, None) => return Err(Error::Config("environment needs initial_state or initial_law".into())),
        };
        let start = match env.initial_state {
            Some(s) => InitialEnvironment::State(s - 1),
            None => InitialEnvironment::Law,
        };
        let mut environment = EnvironmentModel::new(env.rates.clone(), initial);
        if let Some(f) = env.rate_scale {
            if !(f > 0.0) {
                return Err(Error::Config("rate_scale must be positive".into()));
            }
            environment = environment.scaled(f);
        }

        let lines = self.components.arrival_rates.len();
        let claims = match (&self.claims.default, &self.claims.per_line) {
            (_, Some(per)) => per.clone(),
            (Some(d), None) => vec![vec![*d; states]; lines],
            (None, None) => return Err(Error::Config("claims needs `default` or `per_line`".into())),
        };
        let model = RiskModel::new(
            self.components.arrival_rates.clone(),
            claims,
            self.components.premiums.clone(),
            environment,
        );
        let horizons = self.query.horizons.values();
        let mode = parse_mode(&self.query.mode)?;
        let methods = self
            .query
            .methods
            .iter()
            .map(|s| s.parse())
            .collect::<Result<Vec<Method>>>()?;
        let query = RuinQuery::new(
            self.query.reserves.clone(),
            horizons.last().copied().unwrap_or(f64::NAN),
            start,
            mode,
        );
        let cfg = ExperimentConfig {
            model_path: None,
            model,
            query,
            horizons,
            methods,
            mc: MonteCarloSettings {
                paths: self.mc.paths,
                seed: self.mc.seed,
                confidence: self.mc.confidence,
                threads: self.mc.threads,
            },
            quadrature: self.quadrature,
            output: self.output.csv.clone(),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
[environment]
rates = [[-1.0, 1.0], [2.0, -2.0]]
initial_state = 1

[components]
arrival_rates = [[0.45, 1.8], [0.45, 1.8]]
premiums = [1.0, 1.0]

[claims]
default = { kind = "exponential", mean = 1.0 }

[query]
reserves = [10.0, 10.0]
horizons = { start = 2.0, stop = 50.0, step = 2.0 }
"#;

    #[test]
    fn parses_base_model() {
        let cfg = ExperimentConfig::from_toml(BASE).unwrap();
        assert_eq!(cfg.model, crate::model::base_model());
        assert_eq!(cfg.horizons.len(), 25);
        assert_eq!(cfg.horizons[24], 50.0);
        assert_eq!(cfg.methods.len(), 4);
        assert_eq!(cfg.query.start, InitialEnvironment::State(0));
        assert_eq!(cfg.mc.paths, 1_000_000);
    }

    #[test]
    fn modes_round_trip() {
        for s in ["all", "any", "marginal:2", "subset:1+2"] {
            assert_eq!(parse_mode(s).unwrap().to_string(), s);
        }
        assert!(parse_mode("marginal:0").is_err());
        assert!(parse_mode("some").is_err());
    }

    #[test]
    fn invalid_generator_is_a_config_error() {
        let bad = BASE.replace("[2.0, -2.0]", "[2.0, -1.0]");
        let err = ExperimentConfig::from_toml(&bad).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn unknown_keys_rejected() {
        let bad = BASE.replace("premiums", "premium_rates");
        assert!(ExperimentConfig::from_toml(&bad).is_err());
    }
}
