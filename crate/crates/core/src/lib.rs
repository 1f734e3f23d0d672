//! Finite-time ruin probabilities for multivariate Cramér–Lundberg risk
//! processes whose claim arrivals are modulated by a common continuous-time
//! Markov environment.
//!
//! Three routes are provided and meant to be cross-checked against each other:
//!
//! * [`simulate`]: exact event-driven Monte Carlo, the reference estimate;
//! * [`diffusion`]: the Brownian limit of the centered claims process and
//!   the first-passage probabilities of correlated Brownian motion;
//! * [`switch`]: the single-switch approximation for slowly moving
//!   environments, with the closed form for exponential claims.
//!
//! Runnable walkthroughs of each capability live in the crate's `examples/`
//! directory; the `ruinlab` binary wraps the same calls for config files.

pub mod config;
pub mod diffusion;
pub mod error;
pub mod experiment;
pub mod markov;
pub mod model;
pub mod numerics;
pub mod simulate;
pub mod switch;

pub use error::{Error, Result};
pub use model::{
    ClaimDistribution, EnvironmentModel, InitialEnvironment, RiskModel, RuinMode, RuinQuery,
};
pub use numerics::QuadratureConfig;
