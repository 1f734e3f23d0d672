//! Analytics and path sampling for the environment chain.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{Error, Result};
use crate::model::EnvironmentModel;
use crate::numerics::exponential;

/// Stationary law π of an irreducible chain.
#[derive(Debug, Clone, PartialEq)]
pub struct StationaryLaw(pub Vec<f64>);

impl StationaryLaw {
    pub fn probabilities(&self) -> &[f64] {
        &self.0
    }

    /// Π: every row equal to π.
    pub fn projector(&self) -> DMatrix<f64> {
        let n = self.0.len();
        DMatrix::from_fn(n, n, |_, l| self.0[l])
    }
}

/// Υ = (Π − Q)⁻¹ − Π.
#[derive(Debug, Clone, PartialEq)]
pub struct FundamentalMatrix(pub DMatrix<f64>);

impl FundamentalMatrix {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn get(&self, k: usize, l: usize) -> f64 {
        self.0[(k, l)]
    }
}

/// Realised environment on `[0, horizon]` as `(state, entry time)` pairs.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EnvironmentPath {
    pub segments: Vec<(usize, f64)>,
    pub horizon: f64,
}

impl EnvironmentPath {
    pub fn switches(&self) -> usize {
        self.segments.len().saturating_sub(1)
    }

    /// Iterator over `(state, start, end)` sojourns.
    pub fn sojourns(&self) -> impl Iterator<Item = (usize, f64, f64)> + '_ {
        self.segments.iter().enumerate().map(move |(idx, &(s, t0))| {
            let t1 = self
                .segments
                .get(idx + 1)
                .map_or(self.horizon, |&(_, t)| t);
            (s, t0, t1)
        })
    }

    pub fn time_in(&self, state: usize) -> f64 {
        self.sojourns()
            .filter(|(s, _, _)| *s == state)
            .map(|(_, a, b)| b - a)
            .sum()
    }
}

pub(crate) fn rate_matrix(env: &EnvironmentModel) -> DMatrix<f64> {
    let n = env.states();
    DMatrix::from_fn(n, n, |k, l| env.rate(k, l))
}

/// Solves πQ = 0, Σπ = 1 with the last balance equation replaced by the
/// normalisation.
pub fn stationary_distribution(env: &EnvironmentModel) -> Result<StationaryLaw> {
    let n = env.states();
    if n == 0 {
        return Err(Error::DegenerateChain("no states".into()));
    }
    let mut a = rate_matrix(env).transpose();
    for l in 0..n {
        a[(n - 1, l)] = 1.0;
    }
    let mut b = DVector::zeros(n);
    b[n - 1] = 1.0;
    let pi = a
        .lu()
        .solve(&b)
        .ok_or_else(|| Error::DegenerateChain("balance equations are singular".into()))?;
    if pi.iter().any(|p| !p.is_finite()) {
        return Err(Error::DegenerateChain("balance equations are ill-conditioned".into()));
    }
    // clean rounding noise of order 1e-17 below zero
    let pi: Vec<f64> = pi.iter().map(|&p| p.max(0.0)).collect();
    let total: f64 = pi.iter().sum();
    Ok(StationaryLaw(pi.into_iter().map(|p| p / total).collect()))
}

pub fn fundamental_matrix(env: &EnvironmentModel, pi: &StationaryLaw) -> Result<FundamentalMatrix> {
    let proj = pi.projector();
    let inv = (&proj - rate_matrix(env))
        .try_inverse()
        .ok_or_else(|| Error::DegenerateChain("Π − Q is not invertible".into()))?;
    Ok(FundamentalMatrix(inv - proj))
}

/// P(at most one switch in [0, T] | J(0) = j).
pub fn at_most_one_switch_probability(env: &EnvironmentModel, j: usize, horizon: f64) -> f64 {
    let qj = env.exit_rate(j);
    let stay = (-qj * horizon).exp();
    let mut total = stay;
    for k in (0..env.states()).filter(|&k| k != j) {
        total += env.rate(j, k) * single_switch_weight(qj, env.exit_rate(k), horizon);
    }
    total.clamp(0.0, 1.0)
}

/// ∫₀ᵀ e^{−q_j τ} e^{−q_k (T−τ)} dτ, with the confluent limit T e^{−q_j T}
/// when the two exit rates coincide.
pub(crate) fn single_switch_weight(qj: f64, qk: f64, horizon: f64) -> f64 {
    let scale = qj.abs().max(qk.abs()).max(1.0);
    if (qj - qk).abs() < 1e-9 * scale {
        horizon * (-qj * horizon).exp()
    } else {
        ((-qk * horizon).exp() - (-qj * horizon).exp()) / (qj - qk)
    }
}

/// Density weight of a single switch j → k at time τ within [0, T]:
/// q_{j,k} e^{−q_j τ} e^{−q_k (T−τ)}.
pub fn switch_density(env: &EnvironmentModel, j: usize, k: usize, tau: f64, horizon: f64) -> f64 {
    env.rate(j, k) * (-env.exit_rate(j) * tau - env.exit_rate(k) * (horizon - tau)).exp()
}

/// Samples J on `[0, horizon]` by the embedded jump chain.
pub fn sample_environment_path<R: Rng + ?Sized>(
    env: &EnvironmentModel,
    start: usize,
    horizon: f64,
    rng: &mut R,
) -> EnvironmentPath {
    let mut path = EnvironmentPath::default();
    sample_environment_path_into(env, start, horizon, rng, &mut path);
    path
}

/// As [`sample_environment_path`], reusing `path`'s allocation.
pub fn sample_environment_path_into<R: Rng + ?Sized>(
    env: &EnvironmentModel,
    start: usize,
    horizon: f64,
    rng: &mut R,
    path: &mut EnvironmentPath,
) {
    path.segments.clear();
    path.horizon = horizon;
    let mut state = start;
    let mut t = 0.0;
    path.segments.push((state, t));
    loop {
        let q = env.exit_rate(state);
        if q <= 0.0 {
            return;
        }
        t += exponential(rng, 1.0 / q);
        if t >= horizon {
            return;
        }
        let mut target = rng.random::<f64>() * q;
        let mut next = state;
        for (l, &rate) in env.rates()[state].iter().enumerate() {
            if l == state || rate <= 0.0 {
                continue;
            }
            next = l;
            if target < rate {
                break;
            }
            target -= rate;
        }
        state = next;
        path.segments.push((state, t));
    }
}

/// Draws a state from a probability vector.
pub(crate) fn sample_state<R: Rng + ?Sized>(law: &[f64], rng: &mut R) -> usize {
    let mut u = rng.random::<f64>();
    for (k, &p) in law.iter().enumerate() {
        if u < p {
            return k;
        }
        u -= p;
    }
    law.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}
