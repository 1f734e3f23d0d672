//! Domain types for the Markov-modulated multivariate risk model.
//!
//! Component `i` has surplus `u_i + r_i t - (claims so far)`. While the
//! environment sits in state `j`, its claims arrive as a Poisson process with
//! rate `λ[i][j]` and have law `F[i][j]`. Ruin is strict: the surplus must go
//! below zero; touching zero is survival.
//!
//! Constructors only store data. [`RiskModel::validate`] reports every broken
//! invariant, and the estimators call [`RiskModel::ensure_valid`] first.

use std::fmt;

use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::exponential;

const ROW_SUM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ClaimDistribution {
    Exponential { mean: f64 },
    Gamma { shape: f64, scale: f64 },
    Deterministic { value: f64 },
}

impl ClaimDistribution {
    pub fn exponential(mean: f64) -> Self {
        ClaimDistribution::Exponential { mean }
    }

    /// `(mean, variance)`.
    pub fn moments(&self) -> (f64, f64) {
        match *self {
            ClaimDistribution::Exponential { mean } => (mean, mean * mean),
            ClaimDistribution::Gamma { shape, scale } => (shape * scale, shape * scale * scale),
            ClaimDistribution::Deterministic { value } => (value, 0.0),
        }
    }

    pub fn mean(&self) -> f64 {
        self.moments().0
    }

    pub fn variance(&self) -> f64 {
        self.moments().1
    }

    /// Second raw moment E[Z²].
    pub fn second_moment(&self) -> f64 {
        let (m, v) = self.moments();
        v + m * m
    }

    pub fn exponential_mean(&self) -> Option<f64> {
        match *self {
            ClaimDistribution::Exponential { mean } => Some(mean),
            _ => None,
        }
    }

    fn parameters_valid(&self) -> bool {
        let ok = |x: f64| x.is_finite() && x > 0.0;
        match *self {
            ClaimDistribution::Exponential { mean } => ok(mean),
            ClaimDistribution::Gamma { shape, scale } => ok(shape) && ok(scale),
            ClaimDistribution::Deterministic { value } => ok(value),
        }
    }

    pub(crate) fn sampler(&self) -> ClaimSampler {
        match *self {
            ClaimDistribution::Exponential { mean } => ClaimSampler::Exponential(mean),
            ClaimDistribution::Gamma { shape, scale } => {
                ClaimSampler::Gamma(Gamma::new(shape, scale).expect("validated gamma parameters"))
            }
            ClaimDistribution::Deterministic { value } => ClaimSampler::Fixed(value),
        }
    }
}

/// Prepared claim-size sampler.
#[derive(Debug, Clone)]
pub(crate) enum ClaimSampler {
    Exponential(f64),
    Gamma(Gamma<f64>),
    Fixed(f64),
}

impl ClaimSampler {
    #[inline]
    pub(crate) fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            ClaimSampler::Exponential(mean) => exponential(rng, *mean),
            ClaimSampler::Gamma(g) => g.sample(rng),
            ClaimSampler::Fixed(v) => *v,
        }
    }
}

/// A broken model invariant. `code` is stable and machine-readable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub code: &'static str,
    pub message: String,
}

impl Violation {
    fn new(code: &'static str, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] {}", self.code, self.message)
    }
}

/// The environment chain J: generator `Q` and initial law `p`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvironmentModel {
    rates: Vec<Vec<f64>>,
    initial: Vec<f64>,
}

impl EnvironmentModel {
    pub fn new(rates: Vec<Vec<f64>>, initial: Vec<f64>) -> Self {
        Self { rates, initial }
    }

    /// Chain started in `state` with probability one.
    pub fn starting_in(rates: Vec<Vec<f64>>, state: usize) -> Self {
        let mut initial = vec![0.0; rates.len()];
        if state < initial.len() {
            initial[state] = 1.0;
        }
        Self { rates, initial }
    }

    pub fn states(&self) -> usize {
        self.rates.len()
    }

    pub fn rates(&self) -> &[Vec<f64>] {
        &self.rates
    }

    pub fn rate(&self, from: usize, to: usize) -> f64 {
        self.rates[from][to]
    }

    /// Total exit rate q_k = -Q[k][k].
    pub fn exit_rate(&self, state: usize) -> f64 {
        -self.rates[state][state]
    }

    pub fn initial_law(&self) -> &[f64] {
        &self.initial
    }

    /// Same chain with every rate multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            rates: self
                .rates
                .iter()
                .map(|row| row.iter().map(|q| q * factor).collect())
                .collect(),
            initial: self.initial.clone(),
        }
    }

    pub fn with_initial_law(&self, initial: Vec<f64>) -> Self {
        Self {
            rates: self.rates.clone(),
            initial,
        }
    }

    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let n = self.rates.len();
        if n == 0 {
            out.push(Violation::new("empty", "environment needs at least one state"));
            return out;
        }
        if self.rates.iter().any(|row| row.len() != n) {
            out.push(Violation::new("shape", format!("rate matrix must be {n}x{n}")));
            return out;
        }
        for (k, row) in self.rates.iter().enumerate() {
            if row.iter().any(|q| !q.is_finite()) {
                out.push(Violation::new("non-finite", format!("row {k} of Q has a non-finite entry")));
                continue;
            }
            for (l, &q) in row.iter().enumerate() {
                if k != l && q < 0.0 {
                    out.push(Violation::new("negative-rate", format!("Q[{k}][{l}] = {q} < 0")));
                }
            }
            let sum: f64 = row.iter().sum();
            if sum.abs() > ROW_SUM_TOL {
                out.push(Violation::new("row-sum", format!("row {k} of Q sums to {sum}, not 0")));
            }
        }
        if self.initial.len() != n {
            out.push(Violation::new(
                "shape",
                format!("initial law has length {}, expected {n}", self.initial.len()),
            ));
        } else {
            let total: f64 = self.initial.iter().sum();
            if self.initial.iter().any(|p| !(*p >= 0.0)) || (total - 1.0).abs() > 1e-12 {
                out.push(Violation::new("initial-law", "initial law must be a probability vector"));
            }
        }
        if out.is_empty() && !self.is_irreducible() {
            out.push(Violation::new("reducible", "environment chain is not irreducible"));
        }
        out
    }

    /// Every state reaches every other along positive off-diagonal rates.
    pub fn is_irreducible(&self) -> bool {
        let n = self.rates.len();
        let reach_all_from = |start: usize, forward: bool| {
            let mut seen = vec![false; n];
            let mut stack = vec![start];
            seen[start] = true;
            while let Some(k) = stack.pop() {
                for l in 0..n {
                    let q = if forward { self.rates[k][l] } else { self.rates[l][k] };
                    if l != k && q > 0.0 && !seen[l] {
                        seen[l] = true;
                        stack.push(l);
                    }
                }
            }
            seen.into_iter().all(|s| s)
        };
        n > 0 && reach_all_from(0, true) && reach_all_from(0, false)
    }
}

/// The m-dimensional risk model.
#[derive(Debug, Clone, PartialEq)]
pub struct RiskModel {
    /// `arrival_rates[i][j]`: claims per unit time of component `i` in state `j`.
    pub arrival_rates: Vec<Vec<f64>>,
    /// `claims[i][j]`: claim-size law of component `i` in state `j`.
    pub claims: Vec<Vec<ClaimDistribution>>,
    pub premiums: Vec<f64>,
    pub environment: EnvironmentModel,
}

impl RiskModel {
    pub fn new(
        arrival_rates: Vec<Vec<f64>>,
        claims: Vec<Vec<ClaimDistribution>>,
        premiums: Vec<f64>,
        environment: EnvironmentModel,
    ) -> Self {
        Self {
            arrival_rates,
            claims,
            premiums,
            environment,
        }
    }

    /// Same claim law for every component and state.
    pub fn with_common_claims(
        arrival_rates: Vec<Vec<f64>>,
        claim: ClaimDistribution,
        premiums: Vec<f64>,
        environment: EnvironmentModel,
    ) -> Self {
        let states = environment.states();
        let claims = vec![vec![claim; states]; arrival_rates.len()];
        Self::new(arrival_rates, claims, premiums, environment)
    }

    pub fn dimension(&self) -> usize {
        self.premiums.len()
    }

    pub fn states(&self) -> usize {
        self.environment.states()
    }

    pub fn validate(&self) -> Vec<Violation> {
        let mut out = self.environment.validate();
        let m = self.premiums.len();
        let n = self.environment.states();
        if m == 0 {
            out.push(Violation::new("empty", "model needs at least one component"));
            return out;
        }
        if self.arrival_rates.len() != m || self.arrival_rates.iter().any(|r| r.len() != n) {
            out.push(Violation::new("shape", format!("arrival rates must be {m}x{n}")));
        } else {
            for (i, row) in self.arrival_rates.iter().enumerate() {
                for (j, &l) in row.iter().enumerate() {
                    if !l.is_finite() || l < 0.0 {
                        out.push(Violation::new("negative-rate", format!("lambda[{i}][{j}] = {l}")));
                    }
                }
                if !row.iter().any(|&l| l > 0.0) {
                    out.push(Violation::new(
                        "no-arrivals",
                        format!("component {i} has no positive arrival rate"),
                    ));
                }
            }
        }
        if self.claims.len() != m || self.claims.iter().any(|r| r.len() != n) {
            out.push(Violation::new("shape", format!("claim table must be {m}x{n}")));
        } else {
            for (i, row) in self.claims.iter().enumerate() {
                for (j, c) in row.iter().enumerate() {
                    if !c.parameters_valid() {
                        out.push(Violation::new(
                            "claim-parameter",
                            format!("claim law [{i}][{j}] has a non-positive parameter"),
                        ));
                    }
                }
            }
        }
        for (i, &r) in self.premiums.iter().enumerate() {
            if !r.is_finite() || r < 0.0 {
                out.push(Violation::new("negative-premium", format!("r[{i}] = {r}")));
            }
        }
        out
    }

    pub fn ensure_valid(&self) -> Result<()> {
        let v = self.validate();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidModel(v))
        }
    }

    /// Claim mean of component `i` if it is exponential with the same mean
    /// in every state.
    pub fn state_independent_exponential_mean(&self, i: usize) -> Option<f64> {
        let first = self.claims[i].first()?.exponential_mean()?;
        self.claims[i]
            .iter()
            .all(|c| c.exponential_mean() == Some(first))
            .then_some(first)
    }

    /// Copy with arrival rates multiplied by `arrival_factor` and environment
    /// rates by `environment_factor`.
    pub fn scaled(&self, arrival_factor: f64, environment_factor: f64) -> Self {
        Self {
            arrival_rates: self
                .arrival_rates
                .iter()
                .map(|row| row.iter().map(|l| l * arrival_factor).collect())
                .collect(),
            claims: self.claims.clone(),
            premiums: self.premiums.clone(),
            environment: self.environment.scaled(environment_factor),
        }
    }
}

/// Where the environment starts.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialEnvironment {
    State(usize),
    /// Drawn from the model's initial law.
    Law,
}

/// Which ruin event is measured.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RuinMode {
    /// Every component is ruined at some point in `[0, T]` (not necessarily
    /// at the same time).
    AllComponents,
    AnyComponent,
    /// Every component in the set is ruined.
    Subset(Vec<usize>),
    Marginal(usize),
}

impl RuinMode {
    /// Component indices whose joint ruin defines the event, or `None` for
    /// [`RuinMode::AnyComponent`].
    pub fn components(&self, dimension: usize) -> Option<Vec<usize>> {
        match self {
            RuinMode::AllComponents => Some((0..dimension).collect()),
            RuinMode::AnyComponent => None,
            RuinMode::Subset(s) => Some(s.clone()),
            RuinMode::Marginal(i) => Some(vec![*i]),
        }
    }
}

impl fmt::Display for RuinMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RuinMode::AllComponents => write!(f, "all"),
            RuinMode::AnyComponent => write!(f, "any"),
            RuinMode::Subset(s) => {
                let idx: Vec<String> = s.iter().map(|i| (i + 1).to_string()).collect();
                write!(f, "subset:{}", idx.join("+"))
            }
            RuinMode::Marginal(i) => write!(f, "marginal:{}", i + 1),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RuinQuery {
    pub reserves: Vec<f64>,
    pub horizon: f64,
    pub start: InitialEnvironment,
    pub mode: RuinMode,
}

impl RuinQuery {
    pub fn new(reserves: Vec<f64>, horizon: f64, start: InitialEnvironment, mode: RuinMode) -> Self {
        Self {
            reserves,
            horizon,
            start,
            mode,
        }
    }

    /// Joint ruin of all components, environment started in `state`.
    pub fn all(reserves: Vec<f64>, horizon: f64, state: usize) -> Self {
        Self::new(reserves, horizon, InitialEnvironment::State(state), RuinMode::AllComponents)
    }

    pub fn with_horizon(&self, horizon: f64) -> Self {
        Self {
            horizon,
            ..self.clone()
        }
    }

    pub fn validate(&self, model: &RiskModel) -> Vec<Violation> {
        let mut out = Vec::new();
        let m = model.dimension();
        if self.reserves.len() != m {
            out.push(Violation::new("shape", format!("expected {m} reserves")));
        }
        if self.reserves.iter().any(|u| !(*u >= 0.0) || !u.is_finite()) {
            out.push(Violation::new("negative-reserve", "reserves must be finite and >= 0"));
        }
        if !(self.horizon > 0.0) || !self.horizon.is_finite() {
            out.push(Violation::new("horizon", "horizon must be positive and finite"));
        }
        if let InitialEnvironment::State(j) = self.start {
            if j >= model.states() {
                out.push(Violation::new("state-range", format!("initial state {j} out of range")));
            }
        }
        match &self.mode {
            RuinMode::Subset(s) if s.is_empty() || s.iter().any(|&i| i >= m) => {
                out.push(Violation::new("subset-range", "subset indices out of range"));
            }
            RuinMode::Marginal(i) if *i >= m => {
                out.push(Violation::new("subset-range", format!("component {i} out of range")));
            }
            _ => {}
        }
        out
    }

    pub fn ensure_valid(&self, model: &RiskModel) -> Result<()> {
        let v = self.validate(model);
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidModel(v))
        }
    }
}

/// Two identical lines, two states: booming (λ = 0.45) and recession (λ = 1.8).
///
/// Unit-mean exponential claims, premiums 1, `Q = [[-1, 1], [2, -2]]`,
/// environment started in the booming state.
pub fn base_model() -> RiskModel {
    two_state_model(0.45, 1.8, 1.0)
}

/// The base model with arrival rates `(low, high)` and environment rates
/// multiplied by `environment_factor`.
pub fn two_state_model(low: f64, high: f64, environment_factor: f64) -> RiskModel {
    let env = EnvironmentModel::starting_in(vec![vec![-1.0, 1.0], vec![2.0, -2.0]], 0)
        .scaled(environment_factor);
    RiskModel::with_common_claims(
        vec![vec![low, high], vec![low, high]],
        ClaimDistribution::exponential(1.0),
        vec![1.0, 1.0],
        env,
    )
}
