//! Arm-selection policies behind a common interface.
//!
//! [`L1BallPolicy`] is the ℓ1-confidence-ball UCB with a LASSO center; the rest are
//! the comparison methods and experimental controls.

mod controls;
mod forced;
mod l1ball;
mod oful;

pub use controls::{ConstantPolicy, OraclePolicy, RandomPolicy};
pub use forced::{two_stage_select, ForcedBaseline, ForcedConfig, ForcedEstimator, ForcedSamplingPlan};
pub use l1ball::{l1ball_select, schedule, ConfidenceBall, ConstantMode, L1BallConfig, L1BallPolicy, ResolveSchedule};
pub use oful::{oful_radius, oful_select, OfulConfig, OfulPolicy};

use crate::error::Result;
use crate::model::{ContextRound, Observation};

/// Sequential decision rule.
///
/// `select` must be a deterministic function of the policy's internal state and the
/// round; any randomness comes from a generator the policy owns and seeds.
pub trait Policy: Send {
    fn id(&self) -> &str;

    fn select(&mut self, round: &ContextRound) -> Result<usize>;

    fn update(&mut self, obs: &Observation) -> Result<()>;

    /// The current confidence set, for policies that maintain one.
    fn confidence_ball(&self) -> Option<ConfidenceBall> {
        None
    }

    /// Number of estimator refits that hit the iteration budget.
    fn solver_failures(&self) -> usize {
        0
    }
}
