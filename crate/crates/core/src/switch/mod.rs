//! Single-switch approximation.
//!
//! Over a horizon in which the environment rarely moves, the ruin
//! probability is approximated by conditioning on at most one environment
//! switch. Given the switch time, the lines are independent, so the joint
//! probability is a product of univariate single-switch probabilities,
//! averaged over the switch time and renormalised by the probability of at
//! most one switch.

mod exponential;

pub use exponential::{exp_single_switch_ruin, lambda_star};

use crate::diffusion::univariate_bm_ruin;
use crate::error::{Error, Result};
use crate::markov::{at_most_one_switch_probability, switch_density};
use crate::model::{InitialEnvironment, RiskModel, RuinMode, RuinQuery};
use crate::numerics::{adaptive_quadrature, normal_cdf, normal_pdf, QuadratureConfig};

/// Component `i` starts in state `start` and moves to `target` at
/// `switch_time`. The no-switch case is `target == start` with
/// `switch_time == horizon`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwitchScenario {
    pub component: usize,
    pub start: usize,
    pub target: usize,
    pub switch_time: f64,
    pub horizon: f64,
}

impl SwitchScenario {
    pub fn new(component: usize, start: usize, target: usize, switch_time: f64, horizon: f64) -> Self {
        Self {
            component,
            start,
            target,
            switch_time,
            horizon,
        }
    }

    pub fn no_switch(component: usize, state: usize, horizon: f64) -> Self {
        Self::new(component, state, state, horizon, horizon)
    }

    fn validate(&self, model: &RiskModel) -> Result<()> {
        if self.component >= model.dimension() {
            return Err(Error::arg(format!("component {} out of range", self.component)));
        }
        if self.start >= model.states() || self.target >= model.states() {
            return Err(Error::arg("environment state out of range"));
        }
        if !(self.switch_time > 0.0) || self.switch_time > self.horizon || !self.horizon.is_finite() {
            return Err(Error::arg(format!(
                "need 0 < tau <= T (got tau = {}, T = {})",
                self.switch_time, self.horizon
            )));
        }
        Ok(())
    }
}

/// Brownian motion matched to the first two moments of line `i` in `state`:
/// drift r − λμ, variance rate λ(σ² + μ²).
pub fn matched_brownian(model: &RiskModel, i: usize, state: usize) -> (f64, f64) {
    let lam = model.arrival_rates[i][state];
    let claim = &model.claims[i][state];
    (model.premiums[i] - lam * claim.mean(), lam * claim.second_moment())
}

/// ξ̂(v): Brownian approximation of the density ratio between the surplus at
/// τ conditioned on survival and the unconditioned surplus.
pub fn bm_scaling_factor(v: f64, reserve: f64, tau: f64, drift: f64, variance: f64) -> Result<f64> {
    if !(reserve > 0.0) || !(tau > 0.0) || !(variance > 0.0) {
        return Err(Error::arg(format!(
            "scaling factor needs u > 0, tau > 0, var > 0 (got {reserve}, {tau}, {variance})"
        )));
    }
    let s = (variance * tau).sqrt();
    let denominator = normal_cdf((drift * tau + reserve) / s)
        - (-2.0 * drift * reserve / variance).exp() * normal_cdf((-reserve + drift * tau) / s);
    if !(denominator >= 1e-300) {
        return Err(Error::DegenerateSurvival);
    }
    if v < 0.0 {
        return Ok(0.0);
    }
    let numerator = -(-4.0 * reserve * (reserve + v) / (2.0 * variance * tau)).exp_m1();
    Ok(numerator / denominator)
}

/// Ruin probability of line `i` over `[0, horizon]` with the environment
/// frozen in `state`.
fn frozen_ruin(model: &RiskModel, i: usize, state: usize, reserve: f64, horizon: f64, quad: &QuadratureConfig) -> Result<f64> {
    if horizon <= 0.0 {
        return Ok(0.0);
    }
    let lam = model.arrival_rates[i][state];
    let claim = &model.claims[i][state];
    if let Some(mean) = claim.exponential_mean() {
        if model.premiums[i] > 0.0 {
            return exp_single_switch_ruin(reserve, model.premiums[i], mean, lam, lam, horizon, horizon, quad);
        }
    }
    let (drift, variance) = matched_brownian(model, i, state);
    if variance == 0.0 {
        return Ok(if reserve + drift.min(0.0) * horizon < 0.0 { 1.0 } else { 0.0 });
    }
    univariate_bm_ruin(reserve, drift, variance, horizon)
}

/// ψᵢ^{j,k}(u, τ, T) by conditioning on the surplus at the switch:
///
/// ψʲ(u, τ) + (1 − ψʲ(u, τ)) ∫ ψᵏ(v, T − τ) ĝ(v) dv,
///
/// where ĝ is ξ̂ times the matched normal density of the surplus at τ,
/// renormalised on v > 0. The frozen-environment pieces use the exponential
/// closed form when the claims are exponential and the matched Brownian
/// motion otherwise.
pub fn general_single_switch_ruin(
    model: &RiskModel,
    scenario: &SwitchScenario,
    reserve: f64,
    quad: &QuadratureConfig,
) -> Result<f64> {
    model.ensure_valid()?;
    scenario.validate(model)?;
    if !(reserve >= 0.0) || !reserve.is_finite() {
        return Err(Error::arg(format!("reserve must be finite and >= 0, got {reserve}")));
    }
    let SwitchScenario {
        component: i,
        start: j,
        target: k,
        switch_time: tau,
        horizon,
    } = *scenario;
    let before = frozen_ruin(model, i, j, reserve, tau, quad)?;
    let rest = horizon - tau;
    if rest <= 0.0 || before >= 1.0 - 1e-14 || reserve == 0.0 {
        return Ok(before);
    }
    let (drift, variance) = matched_brownian(model, i, j);
    if variance == 0.0 {
        // no claims before the switch: the surplus at τ is known
        let after = frozen_ruin(model, i, k, reserve + drift * tau, rest, quad)?;
        return Ok(before + (1.0 - before) * after);
    }
    let mean = reserve + drift * tau;
    let sd = (variance * tau).sqrt();
    let hi = mean + 12.0 * sd;
    if hi <= 0.0 {
        return Err(Error::DegenerateSurvival);
    }
    let lo = (mean - 12.0 * sd).max(0.0);
    bm_scaling_factor(mean.max(0.0), reserve, tau, drift, variance)?;

    let density = |v: f64| {
        bm_scaling_factor(v, reserve, tau, drift, variance).unwrap_or(0.0) * normal_pdf((v - mean) / sd) / sd
    };
    let inner = quad.tightened(1e-2);
    let norm = adaptive_quadrature(density, lo, hi, quad);
    let mut failure = None;
    let weighted = adaptive_quadrature(
        |v| {
            if failure.is_some() {
                return 0.0;
            }
            match frozen_ruin(model, i, k, v, rest, &inner) {
                Ok(p) => p * density(v),
                Err(e) => {
                    failure = Some(e);
                    0.0
                }
            }
        },
        lo,
        hi,
        quad,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    for (what, r) in [("normalisation", &norm), ("surplus", &weighted)] {
        if !r.converged {
            return Err(Error::Quadrature(format!("{what} integral did not converge at tau = {tau}")));
        }
    }
    if !(norm.value > 0.0) {
        return Err(Error::DegenerateSurvival);
    }
    let after = (weighted.value / norm.value).clamp(0.0, 1.0);
    Ok((before + (1.0 - before) * after).clamp(0.0, 1.0))
}

/// ψᵢ^{j,k}(uᵢ, τ, T): the exponential closed form when line i has
/// exponential claims with a state-independent mean, the surplus
/// conditioning of [`general_single_switch_ruin`] otherwise.
pub fn single_switch_ruin(
    model: &RiskModel,
    scenario: &SwitchScenario,
    reserve: f64,
    quad: &QuadratureConfig,
) -> Result<f64> {
    let i = scenario.component;
    match model.state_independent_exponential_mean(i) {
        Some(mean) if model.premiums[i] > 0.0 => {
            scenario.validate(model)?;
            exp_single_switch_ruin(
                reserve,
                model.premiums[i],
                mean,
                model.arrival_rates[i][scenario.start],
                model.arrival_rates[i][scenario.target],
                scenario.switch_time,
                scenario.horizon,
                quad,
            )
        }
        _ => general_single_switch_ruin(model, scenario, reserve, quad),
    }
}

/// χʲ(u, T): ruin probability conditional on at most one environment
/// switch in `[0, T]`, started in a fixed state j.
pub fn chi(model: &RiskModel, query: &RuinQuery, quad: &QuadratureConfig) -> Result<f64> {
    model.ensure_valid()?;
    query.ensure_valid(model)?;
    let InitialEnvironment::State(j) = query.start else {
        return Err(Error::Unsupported(
            "the single-switch approximation needs a fixed initial state".into(),
        ));
    };
    let m = model.dimension();
    let lines = query.mode.components(m).unwrap_or_else(|| (0..m).collect());
    let any = matches!(query.mode, RuinMode::AnyComponent);
    let horizon = query.horizon;
    let env = &model.environment;
    let inner = quad.tightened(1e-2);

    // lines are conditionally independent given the switch time
    let joint = |k: usize, tau: f64| -> Result<f64> {
        let mut all = 1.0;
        let mut none = 1.0;
        for &i in &lines {
            let p = single_switch_ruin(model, &SwitchScenario::new(i, j, k, tau, horizon), query.reserves[i], &inner)?;
            all *= p;
            none *= 1.0 - p;
        }
        Ok(if any { 1.0 - none } else { all })
    };

    let mut total = joint(j, horizon)? * (-env.exit_rate(j) * horizon).exp();
    for k in (0..model.states()).filter(|&k| k != j && env.rate(j, k) > 0.0) {
        let mut failure = None;
        let res = adaptive_quadrature(
            |tau| {
                if failure.is_some() || tau <= 0.0 {
                    return 0.0;
                }
                match joint(k, tau) {
                    Ok(p) => p * switch_density(env, j, k, tau, horizon),
                    Err(e) => {
                        failure = Some(e);
                        0.0
                    }
                }
            },
            0.0,
            horizon,
            quad,
        );
        if let Some(e) = failure {
            return Err(e);
        }
        if !res.converged {
            return Err(Error::Quadrature(format!(
                "switch-time integral for state {} did not converge",
                k + 1
            )));
        }
        total += res.value;
    }
    let p = at_most_one_switch_probability(env, j, horizon);
    if !(p > 0.0) {
        return Err(Error::DegenerateChain(
            "probability of at most one switch underflows".into(),
        ));
    }
    Ok((total / p).clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{base_model, two_state_model, ClaimDistribution, EnvironmentModel};

    fn quad() -> QuadratureConfig {
        QuadratureConfig::default()
    }

    #[test]
    fn scaling_factor_limits() {
        let (d, var) = (0.1, 2.0);
        let tau: f64 = 3.0;
        let far = 50.0 * (var * tau).sqrt();
        assert!((bm_scaling_factor(1.0, far, tau, d, var).unwrap() - 1.0).abs() < 1e-6);
        assert!((bm_scaling_factor(2.0, 1.0, 1e-9, d, var).unwrap() - 1.0).abs() < 1e-12);
        let u = 1.5;
        let at_zero = bm_scaling_factor(0.0, u, tau, d, var).unwrap();
        let den = bm_scaling_factor(1e300, u, tau, d, var).unwrap();
        assert!((at_zero / den - (1.0 - (-2.0 * u * u / (var * tau)).exp())).abs() < 1e-14);
        assert_eq!(bm_scaling_factor(-0.1, u, tau, d, var).unwrap(), 0.0);
    }

    #[test]
    fn switch_at_horizon_is_frozen_ruin() {
        let m = base_model();
        let s = SwitchScenario::new(0, 0, 1, 50.0, 50.0);
        let p = general_single_switch_ruin(&m, &s, 10.0, &quad()).unwrap();
        let direct = exp_single_switch_ruin(10.0, 1.0, 1.0, 0.45, 0.45, 50.0, 50.0, &quad()).unwrap();
        assert_eq!(p, direct);
    }

    #[test]
    fn same_state_decomposition_is_consistent() {
        // conditioning on the surplus at τ without changing the state should
        // reproduce the frozen probability up to the Brownian approximation
        let m = base_model();
        let s = SwitchScenario::new(0, 1, 1, 20.0, 50.0);
        let p = general_single_switch_ruin(&m, &s, 10.0, &quad()).unwrap();
        let direct = exp_single_switch_ruin(10.0, 1.0, 1.0, 1.8, 1.8, 50.0, 50.0, &quad()).unwrap();
        assert!((p - direct).abs() < 0.05, "{p} vs {direct}");
    }

    #[test]
    fn single_state_chi_is_product() {
        let env = EnvironmentModel::starting_in(vec![vec![0.0]], 0);
        let m = RiskModel::with_common_claims(
            vec![vec![0.8], vec![1.3]],
            ClaimDistribution::exponential(1.0),
            vec![1.0, 1.0],
            env,
        );
        let q = RuinQuery::all(vec![5.0, 8.0], 20.0, 0);
        let c = chi(&m, &q, &quad()).unwrap();
        let p1 = exp_single_switch_ruin(5.0, 1.0, 1.0, 0.8, 0.8, 20.0, 20.0, &quad()).unwrap();
        let p2 = exp_single_switch_ruin(8.0, 1.0, 1.0, 1.3, 1.3, 20.0, 20.0, &quad()).unwrap();
        assert!((c - p1 * p2).abs() < 1e-12);
    }

    #[test]
    fn large_reserves_vanish() {
        let q = RuinQuery::all(vec![100.0, 100.0], 10.0, 0);
        assert!(chi(&base_model(), &q, &quad()).unwrap() < 1e-10);
    }

    #[test]
    fn chi_needs_fixed_state() {
        let q = RuinQuery::new(vec![10.0, 10.0], 10.0, InitialEnvironment::Law, RuinMode::AllComponents);
        assert!(matches!(chi(&base_model(), &q, &quad()), Err(Error::Unsupported(_))));
    }

    #[test]
    fn chi_in_unit_interval_for_slow_environment() {
        let m = two_state_model(0.45, 1.8, 1.0 / 64.0);
        let q = RuinQuery::all(vec![10.0, 10.0], 30.0, 0);
        let c = chi(&m, &q, &quad()).unwrap();
        assert!(c > 0.0 && c < 1.0);
    }
}
