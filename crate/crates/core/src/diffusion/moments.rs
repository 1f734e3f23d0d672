use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::markov::{FundamentalMatrix, StationaryLaw};
use crate::model::RiskModel;

/// Scaling regime of the environment relative to the arrivals: transition
/// rates grow like nᵅ while the claims process is normalised by n^δ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Regime {
    pub delta: f64,
    pub alpha: f64,
}

impl Regime {
    /// δ = 1/2, α = 1: arrivals and environment sped up together.
    pub const BALANCED: Regime = Regime { delta: 0.5, alpha: 1.0 };

    pub fn new(delta: f64, alpha: f64) -> Self {
        Self { delta, alpha }
    }

    fn case(&self) -> Result<RegimeCase> {
        let Regime { delta, alpha } = *self;
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::arg(format!("alpha must be positive, got {alpha}")));
        }
        if delta == 0.5 && alpha > 1.0 {
            Ok(RegimeCase::FastEnvironment)
        } else if delta == 0.5 && alpha == 1.0 {
            Ok(RegimeCase::Balanced)
        } else if alpha < 1.0 && (delta - (1.0 - 0.5 * alpha)).abs() < 1e-12 {
            Ok(RegimeCase::SlowEnvironment)
        } else {
            Err(Error::arg(format!("no diffusion limit for (delta, alpha) = ({delta}, {alpha})")))
        }
    }
}

impl Default for Regime {
    fn default() -> Self {
        Regime::BALANCED
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum RegimeCase {
    FastEnvironment,
    Balanced,
    SlowEnvironment,
}

/// Long-run first and second order quantities of the claims process.
#[derive(Debug, Clone, PartialEq)]
pub struct AsymptoticMoments {
    /// λ̄ᵢ = Σⱼ λᵢⱼ μᵢⱼ πⱼ, mean claim outflow per unit time.
    pub mean_rate: Vec<f64>,
    /// m̄²ᵢ = Σⱼ λᵢⱼ μᵢⱼ² πⱼ.
    pub mean_square: Vec<f64>,
    /// σ̄²ᵢ = Σⱼ λᵢⱼ σᵢⱼ² πⱼ.
    pub variance_rate: Vec<f64>,
    /// β̄ᵢₖ = 2 Σₐ Σ_b λᵢₐ λₖ_b μᵢₐ μₖ_b πₐ Υₐ_b, symmetrised when the chain is
    /// not reversible.
    pub environment_cov: DMatrix<f64>,
    /// Largest |β̄ − β̄ᵀ| before symmetrisation.
    pub asymmetry: f64,
}

/// Drift and covariance of the limiting Brownian motion.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffusionSpec {
    /// ϱ = r − λ̄.
    pub drift: Vec<f64>,
    /// diag(σ̄²): claim-size variability.
    pub sigma1: DMatrix<f64>,
    /// diag(m̄²): arrival-count variability.
    pub sigma2: DMatrix<f64>,
    /// (β̄ᵢₖ): environment-induced covariance.
    pub sigma3: DMatrix<f64>,
    pub covariance: DMatrix<f64>,
    pub regime: Regime,
}

impl DiffusionSpec {
    pub fn correlation(&self, i: usize, k: usize) -> f64 {
        let c = &self.covariance;
        c[(i, k)] / (c[(i, i)] * c[(k, k)]).sqrt()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        SymmetricEigen::new(self.covariance.clone())
            .eigenvalues
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min)
    }
}

pub fn asymptotic_moments(
    model: &RiskModel,
    pi: &StationaryLaw,
    upsilon: &FundamentalMatrix,
) -> AsymptoticMoments {
    let m = model.dimension();
    let states = model.states();
    let pi = pi.probabilities();
    let weight = |i: usize, f: &dyn Fn(usize) -> f64| -> f64 {
        (0..states).map(|j| model.arrival_rates[i][j] * f(j) * pi[j]).sum()
    };
    let mean_rate = (0..m).map(|i| weight(i, &|j| model.claims[i][j].mean())).collect();
    let mean_square = (0..m)
        .map(|i| weight(i, &|j| model.claims[i][j].mean().powi(2)))
        .collect();
    let variance_rate = (0..m)
        .map(|i| weight(i, &|j| model.claims[i][j].variance()))
        .collect();

    let flow = |i: usize, j: usize| model.arrival_rates[i][j] * model.claims[i][j].mean();
    let mut beta = DMatrix::zeros(m, m);
    for i in 0..m {
        for k in 0..m {
            let mut s = 0.0;
            for a in 0..states {
                for b in 0..states {
                    s += flow(i, a) * flow(k, b) * pi[a] * upsilon.get(a, b);
                }
            }
            beta[(i, k)] = 2.0 * s;
        }
    }
    let asymmetry = (&beta - beta.transpose()).amax();
    if asymmetry > 1e-10 {
        beta = 0.5 * (&beta + beta.transpose());
    }
    AsymptoticMoments {
        mean_rate,
        mean_square,
        variance_rate,
        environment_cov: beta,
        asymmetry,
    }
}

pub fn covariance(model: &RiskModel, moments: &AsymptoticMoments, regime: Regime) -> Result<DiffusionSpec> {
    let case = regime.case()?;
    let m = model.dimension();
    let sigma1 = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(moments.variance_rate.clone()));
    let sigma2 = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(moments.mean_square.clone()));
    let sigma3 = moments.environment_cov.clone();
    let covariance = match case {
        RegimeCase::FastEnvironment => &sigma1 + &sigma2,
        RegimeCase::Balanced => &sigma1 + &sigma2 + &sigma3,
        RegimeCase::SlowEnvironment => sigma3.clone(),
    };
    let drift = (0..m).map(|i| model.premiums[i] - moments.mean_rate[i]).collect();
    Ok(DiffusionSpec {
        drift,
        sigma1,
        sigma2,
        sigma3,
        covariance,
        regime,
    })
}
