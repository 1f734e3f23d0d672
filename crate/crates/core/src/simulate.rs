//! Exact event-driven Monte Carlo for the ruin probabilities.
//!
//! Given the environment path, components are independent, and each
//! receives Poisson claims within every sojourn at that state's rate. The
//! surplus only falls at claim epochs, so checking it there makes the ruin
//! indicator exact; there is no time discretisation.
//!
//! Every path draws from its own keyed stream `(seed, path index)`, and the
//! tallies are integers, so estimates do not depend on the thread count.

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::markov::{sample_environment_path_into, sample_state, stationary_distribution, EnvironmentPath};
use crate::model::{ClaimSampler, InitialEnvironment, RiskModel, RuinMode, RuinQuery};
use crate::numerics::{exponential, normal_quantile, rng_stream};

const CHUNK: u64 = 4096;

/// Environment variable consulted when no thread count is given.
pub const THREADS_ENV: &str = "RUINLAB_THREADS";

/// Per-component result of one simulated path.
#[derive(Debug, Clone, PartialEq)]
pub struct PathOutcome {
    pub ruined: Vec<bool>,
    pub ruin_times: Vec<Option<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarloEstimate {
    pub estimate: f64,
    pub ci_halfwidth: f64,
    pub hits: u64,
    pub n_paths: u64,
    pub seed: u64,
    pub confidence: f64,
}

impl MonteCarloEstimate {
    pub fn from_hits(hits: u64, n_paths: u64, seed: u64, confidence: f64) -> Self {
        let p = hits as f64 / n_paths as f64;
        let z = normal_quantile(0.5 + 0.5 * confidence);
        Self {
            estimate: p,
            ci_halfwidth: z * (p * (1.0 - p) / n_paths as f64).sqrt(),
            hits,
            n_paths,
            seed,
            confidence,
        }
    }

    pub fn standard_error(&self) -> f64 {
        (self.estimate * (1.0 - self.estimate) / self.n_paths as f64).sqrt()
    }

    pub fn ci_low(&self) -> f64 {
        (self.estimate - self.ci_halfwidth).max(0.0)
    }

    pub fn ci_high(&self) -> f64 {
        (self.estimate + self.ci_halfwidth).min(1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarloSettings {
    pub paths: u64,
    pub seed: u64,
    pub confidence: f64,
    /// 0 = `RUINLAB_THREADS`, else the rayon default.
    pub threads: usize,
}

impl Default for MonteCarloSettings {
    fn default() -> Self {
        Self {
            paths: 1_000_000,
            seed: 20_240_601,
            confidence: 0.95,
            threads: 0,
        }
    }
}

impl MonteCarloSettings {
    pub fn new(paths: u64, seed: u64) -> Self {
        Self {
            paths,
            seed,
            ..Self::default()
        }
    }

    pub fn with_threads(mut self, threads: usize) -> Self {
        self.threads = threads;
        self
    }
}

/// All ruin events at one horizon, tallied from the same paths.
#[derive(Debug, Clone, PartialEq)]
pub struct RuinEstimates {
    pub horizon: f64,
    pub all: MonteCarloEstimate,
    pub any: MonteCarloEstimate,
    pub marginals: Vec<MonteCarloEstimate>,
    /// The event named by the query's mode.
    pub requested: MonteCarloEstimate,
}

/// Samples claim processes along environment paths.
pub(crate) struct PathSimulator<'a> {
    model: &'a RiskModel,
    samplers: Vec<Vec<ClaimSampler>>,
    path: EnvironmentPath,
}

impl<'a> PathSimulator<'a> {
    pub(crate) fn new(model: &'a RiskModel) -> Self {
        Self {
            model,
            samplers: model
                .claims
                .iter()
                .map(|row| row.iter().map(|c| c.sampler()).collect())
                .collect(),
            path: EnvironmentPath::default(),
        }
    }

    fn start_state<R: Rng + ?Sized>(&self, start: &InitialEnvironment, rng: &mut R) -> usize {
        match start {
            InitialEnvironment::State(j) => *j,
            InitialEnvironment::Law => sample_state(self.model.environment.initial_law(), rng),
        }
    }

    /// First ruin epoch per component, `INFINITY` if none by `horizon`.
    ///
    /// Claims are drawn to the horizon even after ruin, so the random
    /// numbers consumed do not depend on the reserves.
    pub(crate) fn ruin_times<R: Rng + ?Sized>(
        &mut self,
        start: &InitialEnvironment,
        reserves: &[f64],
        horizon: f64,
        rng: &mut R,
        times: &mut [f64],
    ) {
        let j0 = self.start_state(start, rng);
        sample_environment_path_into(&self.model.environment, j0, horizon, rng, &mut self.path);
        for (i, slot) in times.iter_mut().enumerate() {
            let u = reserves[i];
            let r = self.model.premiums[i];
            let rates = &self.model.arrival_rates[i];
            let mut claimed = 0.0;
            let mut ruin = f64::INFINITY;
            for (state, a, b) in self.path.sojourns() {
                let rate = rates[state];
                if rate <= 0.0 {
                    continue;
                }
                let sampler = &self.samplers[i][state];
                let mut t = a;
                loop {
                    t += exponential(rng, 1.0 / rate);
                    if t >= b {
                        break;
                    }
                    claimed += sampler.sample(rng);
                    if ruin == f64::INFINITY && u + r * t - claimed < 0.0 {
                        ruin = t;
                    }
                }
            }
            *slot = ruin;
        }
    }

    /// Total claims per component on `[0, horizon]`.
    fn claim_totals<R: Rng + ?Sized>(&mut self, start: &InitialEnvironment, horizon: f64, rng: &mut R, totals: &mut [f64]) {
        let j0 = self.start_state(start, rng);
        sample_environment_path_into(&self.model.environment, j0, horizon, rng, &mut self.path);
        for (i, slot) in totals.iter_mut().enumerate() {
            let mut claimed = 0.0;
            for (state, a, b) in self.path.sojourns() {
                let rate = self.model.arrival_rates[i][state];
                if rate <= 0.0 {
                    continue;
                }
                let mut t = a;
                loop {
                    t += exponential(rng, 1.0 / rate);
                    if t >= b {
                        break;
                    }
                    claimed += self.samplers[i][state].sample(rng);
                }
            }
            *slot = claimed;
        }
    }
}

/// One path of the risk process under `query`.
pub fn simulate_path<R: Rng + ?Sized>(model: &RiskModel, query: &RuinQuery, rng: &mut R) -> PathOutcome {
    let mut sim = PathSimulator::new(model);
    let mut times = vec![f64::INFINITY; model.dimension()];
    sim.ruin_times(&query.start, &query.reserves, query.horizon, rng, &mut times);
    PathOutcome {
        ruined: times.iter().map(|t| t.is_finite()).collect(),
        ruin_times: times.iter().map(|&t| t.is_finite().then_some(t)).collect(),
    }
}

pub(crate) fn resolve_threads(threads: usize) -> usize {
    if threads > 0 {
        return threads;
    }
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(rayon::current_num_threads)
}

fn run_parallel<T, F>(paths: u64, threads: usize, work: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64, u64) -> T + Sync + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(resolve_threads(threads))
        .build()
        .map_err(|e| Error::arg(format!("thread pool: {e}")))?;
    let chunks = paths.div_ceil(CHUNK);
    Ok(pool.install(|| {
        (0..chunks)
            .into_par_iter()
            .map(|c| work(c * CHUNK, ((c + 1) * CHUNK).min(paths)))
            .collect()
    }))
}

#[derive(Debug, Clone, Default)]
struct Tally {
    all: u64,
    any: u64,
    requested: u64,
    marginals: Vec<u64>,
}

/// Monte Carlo estimate of every ruin event at `query.horizon`, with the
/// default 95% confidence level.
pub fn estimate_ruin(
    model: &RiskModel,
    query: &RuinQuery,
    n_paths: u64,
    seed: u64,
    threads: usize,
) -> Result<RuinEstimates> {
    let settings = MonteCarloSettings {
        paths: n_paths,
        seed,
        threads,
        ..MonteCarloSettings::default()
    };
    let mut out = estimate_ruin_curve(model, query, &[query.horizon], &settings)?;
    Ok(out.remove(0))
}

/// Estimates at each horizon of `horizons` (increasing), all from one set of
/// paths simulated to the largest horizon.
pub fn estimate_ruin_curve(
    model: &RiskModel,
    query: &RuinQuery,
    horizons: &[f64],
    settings: &MonteCarloSettings,
) -> Result<Vec<RuinEstimates>> {
    model.ensure_valid()?;
    query.ensure_valid(model)?;
    if settings.paths == 0 {
        return Err(Error::arg("n_paths must be at least 1"));
    }
    if !(settings.confidence > 0.0 && settings.confidence < 1.0) {
        return Err(Error::arg("confidence level must lie in (0, 1)"));
    }
    if horizons.is_empty()
        || horizons.iter().any(|t| !(*t > 0.0) || !t.is_finite())
        || horizons.windows(2).any(|w| w[1] <= w[0])
    {
        return Err(Error::arg("horizons must be positive and strictly increasing"));
    }
    let m = model.dimension();
    let t_max = *horizons.last().unwrap();
    let requested = query.mode.components(m);

    let chunks = run_parallel(settings.paths, settings.threads, |lo, hi| {
        let mut sim = PathSimulator::new(model);
        let mut times = vec![0.0; m];
        let mut tallies = vec![
            Tally {
                marginals: vec![0; m],
                ..Tally::default()
            };
            horizons.len()
        ];
        for path in lo..hi {
            let mut rng = rng_stream(settings.seed, path);
            sim.ruin_times(&query.start, &query.reserves, t_max, &mut rng, &mut times);
            let last = times.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let first = times.iter().cloned().fold(f64::INFINITY, f64::min);
            let req = match &requested {
                Some(idx) => idx.iter().map(|&i| times[i]).fold(f64::NEG_INFINITY, f64::max),
                None => first,
            };
            for (tally, &h) in tallies.iter_mut().zip(horizons) {
                tally.all += (last <= h) as u64;
                tally.any += (first <= h) as u64;
                tally.requested += (req <= h) as u64;
                for (c, &t) in tally.marginals.iter_mut().zip(&times) {
                    *c += (t <= h) as u64;
                }
            }
        }
        tallies
    })?;

    let mut totals = vec![
        Tally {
            marginals: vec![0; m],
            ..Tally::default()
        };
        horizons.len()
    ];
    for chunk in chunks {
        for (acc, t) in totals.iter_mut().zip(chunk) {
            acc.all += t.all;
            acc.any += t.any;
            acc.requested += t.requested;
            for (a, b) in acc.marginals.iter_mut().zip(t.marginals) {
                *a += b;
            }
        }
    }
    let est = |hits| MonteCarloEstimate::from_hits(hits, settings.paths, settings.seed, settings.confidence);
    Ok(horizons
        .iter()
        .zip(totals)
        .map(|(&h, t)| RuinEstimates {
            horizon: h,
            all: est(t.all),
            any: est(t.any),
            marginals: t.marginals.iter().map(|&c| est(c)).collect(),
            requested: est(t.requested),
        })
        .collect())
}

/// Sample covariance of the centred, √n-scaled claims process at time 1.
///
/// Arrival and environment rates are both multiplied by `scale` (the
/// δ = 1/2, α = 1 regime); the environment starts from its stationary law.
/// Returns the m×m sample covariance of
/// `(Yⁿ(1) − n λ̄) / √n`.
pub fn scaled_claims_covariance(
    model: &RiskModel,
    scale: f64,
    paths: u64,
    seed: u64,
    threads: usize,
) -> Result<DMatrix<f64>> {
    model.ensure_valid()?;
    if paths < 2 {
        return Err(Error::arg("need at least two paths for a covariance"));
    }
    if !(scale > 0.0) {
        return Err(Error::arg("scale must be positive"));
    }
    let m = model.dimension();
    let pi = stationary_distribution(&model.environment)?;
    let mut scaled = model.scaled(scale, scale);
    scaled.environment = scaled.environment.with_initial_law(pi.0.clone());
    let centre: Vec<f64> = (0..m)
        .map(|i| {
            (0..model.states())
                .map(|j| scaled.arrival_rates[i][j] * model.claims[i][j].mean() * pi.0[j])
                .sum()
        })
        .collect();
    let norm = scale.sqrt();

    let chunks = run_parallel(paths, threads, |lo, hi| {
        let mut sim = PathSimulator::new(&scaled);
        let mut totals = vec![0.0; m];
        let mut out = Vec::with_capacity(((hi - lo) as usize) * m);
        for path in lo..hi {
            let mut rng = rng_stream(seed, path);
            sim.claim_totals(&InitialEnvironment::Law, 1.0, &mut rng, &mut totals);
            out.extend(totals.iter().zip(&centre).map(|(y, c)| (y - c) / norm));
        }
        out
    })?;
    let values: Vec<f64> = chunks.into_iter().flatten().collect();
    let n = paths as f64;
    let mut mean = vec![0.0; m];
    for row in values.chunks(m) {
        for (a, v) in mean.iter_mut().zip(row) {
            *a += v;
        }
    }
    mean.iter_mut().for_each(|a| *a /= n);
    let mut cov = DMatrix::zeros(m, m);
    for row in values.chunks(m) {
        for a in 0..m {
            for b in 0..m {
                cov[(a, b)] += (row[a] - mean[a]) * (row[b] - mean[b]);
            }
        }
    }
    Ok(cov / (n - 1.0))
}

/// Whether a set of flags realises `mode`.
pub fn mode_hit(mode: &RuinMode, ruined: &[bool]) -> bool {
    match mode {
        RuinMode::AllComponents => ruined.iter().all(|&r| r),
        RuinMode::AnyComponent => ruined.iter().any(|&r| r),
        RuinMode::Subset(s) => s.iter().all(|&i| ruined[i]),
        RuinMode::Marginal(i) => ruined[*i],
    }
}
