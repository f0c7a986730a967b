//! Simulation laboratory for sparse high-dimensional contextual linear bandits.
//!
//! The centerpiece is the ℓ1-confidence-ball UCB policy: each round it refits a
//! LASSO estimate on the selected features and plays
//! `argmax_a ⟨x_a, β̂⟩ + τ_t‖x_a‖∞`, the closed form of optimistic selection over
//! an ℓ1 ball around the LASSO center. Around it sit the usual baselines
//! (OFUL, OLS-bandit, LASSO-bandit, greedy, random), environment generators for
//! margin-controlled and lower-bound instances, an offline replay harness and
//! diagnostics for the restricted-eigenvalue machinery.

pub mod diagnostics;
pub mod env;
pub mod error;
pub mod experiment;
pub mod linalg;
pub mod model;
pub mod policies;
pub mod regret;
pub mod solvers;

pub use error::{Error, Result};
pub use model::{ContextRound, Observation, TrueModel};
pub use policies::{ConfidenceBall, Policy};
pub use regret::{best_arm, instant_regret, RegretRecord, RegretTrace};
pub use solvers::{DesignState, LassoConfig, LassoSolution};
