//! Brownian approximation of the multivariate claims process.
//!
//! The claims process, centred at its long-run mean and scaled by √n, has a
//! Brownian limit with covariance Σ̄ (see [`covariance`]). The approximation
//! applies the limit at n = 1: the surplus of line i is replaced by
//! uᵢ + ϱᵢt + Bᵢ(t) with ϱ = r − λ̄ and B a Brownian motion with covariance Σ̄.
//! The initial environment state does not enter.

mod brownian;
mod moments;

pub use brownian::{
    bivariate_bm_joint_survival, univariate_bm_ruin, univariate_bm_survival, CORRELATION_LIMIT, PRECISION_LIMIT, SERIES_CAP,
};
pub use moments::{asymptotic_moments, covariance, AsymptoticMoments, DiffusionSpec, Regime};

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::markov::{fundamental_matrix, stationary_distribution};
use crate::model::{RiskModel, RuinMode, RuinQuery};

/// Largest dimension for which the 2^m inclusion–exclusion is attempted.
pub const MAX_ANALYTIC_DIMENSION: usize = 12;

/// Default tolerance handed to the bivariate formula.
pub const DEFAULT_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiffusionOptions {
    pub regime: Regime,
    pub tol: f64,
}

impl Default for DiffusionOptions {
    fn default() -> Self {
        Self {
            regime: Regime::BALANCED,
            tol: DEFAULT_TOLERANCE,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiffusionResult {
    pub probability: f64,
    /// Set when survival of three or more lines had to be approximated by
    /// the pairwise combination.
    pub approximate_combination: bool,
    /// Pairs whose correlation was too close to ±1 for the bivariate formula;
    /// their joint survival was replaced by the matching Fréchet bound.
    pub degenerate_pairs: Vec<(usize, usize)>,
    pub spec: DiffusionSpec,
}

/// Drift and covariance of the Brownian approximation of `model`.
pub fn diffusion_spec(model: &RiskModel, regime: Regime) -> Result<DiffusionSpec> {
    model.ensure_valid()?;
    let pi = stationary_distribution(&model.environment)?;
    let upsilon = fundamental_matrix(&model.environment, &pi)?;
    let moments = asymptotic_moments(model, &pi, &upsilon);
    covariance(model, &moments, regime)
}

pub fn multivariate_ruin_diffusion(model: &RiskModel, query: &RuinQuery) -> Result<DiffusionResult> {
    multivariate_ruin_diffusion_with(model, query, &DiffusionOptions::default())
}

pub fn multivariate_ruin_diffusion_with(
    model: &RiskModel,
    query: &RuinQuery,
    options: &DiffusionOptions,
) -> Result<DiffusionResult> {
    query.ensure_valid(model)?;
    let spec = diffusion_spec(model, options.regime)?;
    let m = model.dimension();
    let involved: Vec<usize> = query.mode.components(m).unwrap_or_else(|| (0..m).collect());
    if involved.len() > MAX_ANALYTIC_DIMENSION {
        return Err(Error::Unsupported(format!(
            "diffusion approximation over {} lines needs 2^{} terms; use Monte Carlo instead",
            involved.len(),
            involved.len()
        )));
    }
    let mut survival = SubsetSurvival::new(&spec, &query.reserves, query.horizon, options.tol);
    let (probability, approximate) = match &query.mode {
        RuinMode::AnyComponent => {
            let (s, approx) = survival.joint(&involved)?;
            (1.0 - s, approx)
        }
        _ => all_ruined(&involved, &mut survival)?,
    };
    Ok(DiffusionResult {
        probability: probability.clamp(0.0, 1.0),
        approximate_combination: approximate,
        degenerate_pairs: survival.degenerate,
        spec,
    })
}

/// Product of the univariate diffusion ruin probabilities of the lines in
/// the query's ruin event, ignoring their dependence.
pub fn independence_ruin(spec: &DiffusionSpec, reserves: &[f64], horizon: f64, lines: &[usize]) -> Result<f64> {
    lines.iter().try_fold(1.0, |acc, &i| {
        Ok(acc * univariate_bm_ruin(reserves[i], spec.drift[i], spec.covariance[(i, i)], horizon)?)
    })
}

/// P(all lines in `lines` ruined) = Σ_{A ⊆ lines} (−1)^{|A|} S(A).
fn all_ruined(lines: &[usize], survival: &mut SubsetSurvival) -> Result<(f64, bool)> {
    let k = lines.len();
    let mut total = 0.0;
    let mut approximate = false;
    for mask in 0u32..(1u32 << k) {
        let subset: Vec<usize> = (0..k).filter(|b| mask & (1 << b) != 0).map(|b| lines[b]).collect();
        let (s, approx) = survival.joint(&subset)?;
        approximate |= approx;
        if subset.len().is_multiple_of(2) {
            total += s;
        } else {
            total -= s;
        }
    }
    Ok((total, approximate))
}

/// Joint survival of subsets of lines; exact up to pairs, pairwise
/// combination beyond:
/// S(A) ≈ ∏ Sᵢ · [1 + Σ_{i<k} (Sᵢₖ / (Sᵢ Sₖ) − 1)].
struct SubsetSurvival<'a> {
    spec: &'a DiffusionSpec,
    reserves: &'a [f64],
    horizon: f64,
    tol: f64,
    single: HashMap<usize, f64>,
    pair: HashMap<(usize, usize), f64>,
    degenerate: Vec<(usize, usize)>,
}

impl<'a> SubsetSurvival<'a> {
    fn new(spec: &'a DiffusionSpec, reserves: &'a [f64], horizon: f64, tol: f64) -> Self {
        Self {
            spec,
            reserves,
            horizon,
            tol,
            single: HashMap::new(),
            pair: HashMap::new(),
            degenerate: Vec::new(),
        }
    }

    fn single(&mut self, i: usize) -> Result<f64> {
        if let Some(&s) = self.single.get(&i) {
            return Ok(s);
        }
        let s = univariate_bm_survival(
            self.reserves[i],
            self.spec.drift[i],
            self.spec.covariance[(i, i)],
            self.horizon,
        )?;
        self.single.insert(i, s);
        Ok(s)
    }

    fn pair(&mut self, i: usize, k: usize) -> Result<f64> {
        let key = (i.min(k), i.max(k));
        if let Some(&s) = self.pair.get(&key) {
            return Ok(s);
        }
        let c = &self.spec.covariance;
        let cov = [[c[(i, i)], c[(i, k)]], [c[(k, i)], c[(k, k)]]];
        let s = match bivariate_bm_joint_survival(
            [self.reserves[i], self.reserves[k]],
            [self.spec.drift[i], self.spec.drift[k]],
            cov,
            self.horizon,
            self.tol,
        ) {
            Ok(s) => s,
            Err(Error::NearDegenerateCorrelation(rho)) => {
                let (si, sk) = (self.single(i)?, self.single(k)?);
                self.degenerate.push(key);
                if rho > 0.0 {
                    si.min(sk)
                } else {
                    (si + sk - 1.0).max(0.0)
                }
            }
            Err(e) => return Err(e),
        };
        self.pair.insert(key, s);
        Ok(s)
    }

    /// Returns the survival probability and whether it was approximated.
    fn joint(&mut self, lines: &[usize]) -> Result<(f64, bool)> {
        match lines {
            [] => Ok((1.0, false)),
            [i] => Ok((self.single(*i)?, false)),
            [i, k] => Ok((self.pair(*i, *k)?, false)),
            _ => {
                let mut product = 1.0;
                for &i in lines {
                    product *= self.single(i)?;
                }
                if product == 0.0 {
                    return Ok((0.0, true));
                }
                let mut correction = 1.0;
                for (a, &i) in lines.iter().enumerate() {
                    for &k in &lines[a + 1..] {
                        let sik = self.pair(i, k)?;
                        correction += sik / (self.single(i)? * self.single(k)?) - 1.0;
                    }
                }
                Ok(((product * correction).clamp(0.0, 1.0), true))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{base_model, InitialEnvironment};

    #[test]
    fn marginal_is_univariate() {
        let m = base_model();
        let q = RuinQuery::new(vec![10.0, 4.0], 30.0, InitialEnvironment::State(0), RuinMode::Marginal(1));
        let r = multivariate_ruin_diffusion(&m, &q).unwrap();
        let expected = univariate_bm_ruin(4.0, 0.1, 2.07, 30.0).unwrap();
        assert!((r.probability - expected).abs() < 1e-14);
        assert!(!r.approximate_combination);
    }

    #[test]
    fn all_and_any_bracket_marginals() {
        let m = base_model();
        let q = RuinQuery::all(vec![10.0, 10.0], 50.0, 0);
        let all = multivariate_ruin_diffusion(&m, &q).unwrap().probability;
        let any = multivariate_ruin_diffusion(&m, &RuinQuery { mode: RuinMode::AnyComponent, ..q.clone() })
            .unwrap()
            .probability;
        let one = multivariate_ruin_diffusion(&m, &RuinQuery { mode: RuinMode::Marginal(0), ..q })
            .unwrap()
            .probability;
        assert!(all < one && one < any, "{all} {one} {any}");
        // correlation is positive, so joint ruin exceeds the independent product
        assert!(all > one * one);
    }

    #[test]
    fn three_lines_flagged_approximate() {
        let mut m = base_model();
        m.arrival_rates.push(vec![0.3, 1.2]);
        m.claims.push(m.claims[0].clone());
        m.premiums.push(1.0);
        let q = RuinQuery::all(vec![10.0, 10.0, 8.0], 20.0, 0);
        let r = multivariate_ruin_diffusion(&m, &q).unwrap();
        assert!(r.approximate_combination);
        assert!((0.0..=1.0).contains(&r.probability));
    }
}
