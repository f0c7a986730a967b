//! Control policies: uniform random, constant arm and the full-information oracle.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{check_dim, Error, Result};
use crate::model::{ContextRound, Observation};
use crate::policies::Policy;
use crate::regret::best_arm;

#[derive(Debug, Clone)]
pub struct RandomPolicy {
    rng: ChaCha8Rng,
}

impl RandomPolicy {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }
}

impl Policy for RandomPolicy {
    fn id(&self) -> &str {
        "random"
    }

    fn select(&mut self, round: &ContextRound) -> Result<usize> {
        Ok(self.rng.random_range(0..round.k()))
    }

    fn update(&mut self, _obs: &Observation) -> Result<()> {
        Ok(())
    }
}

/// Always plays the same arm, like a fixed clinical default.
#[derive(Debug, Clone)]
pub struct ConstantPolicy {
    arm: usize,
}

impl ConstantPolicy {
    pub fn new(arm: usize) -> Self {
        Self { arm }
    }
}

impl Policy for ConstantPolicy {
    fn id(&self) -> &str {
        "constant"
    }

    fn select(&mut self, round: &ContextRound) -> Result<usize> {
        if self.arm >= round.k() {
            return Err(Error::Config(format!(
                "constant arm {} out of range for K={}",
                self.arm,
                round.k()
            )));
        }
        Ok(self.arm)
    }

    fn update(&mut self, _obs: &Observation) -> Result<()> {
        Ok(())
    }
}

/// Knows `β*` and plays the best arm every round.
#[derive(Debug, Clone)]
pub struct OraclePolicy {
    beta: Vec<f64>,
}

impl OraclePolicy {
    pub fn new(beta: Vec<f64>) -> Self {
        Self { beta }
    }
}

impl Policy for OraclePolicy {
    fn id(&self) -> &str {
        "oracle"
    }

    fn select(&mut self, round: &ContextRound) -> Result<usize> {
        check_dim(self.beta.len(), round.dim())?;
        best_arm(round, &self.beta)
    }

    fn update(&mut self, _obs: &Observation) -> Result<()> {
        Ok(())
    }
}
