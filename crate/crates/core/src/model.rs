//! Domain types shared by every module: the hidden reward model, the per-round
//! context set and the observation fed back to a policy.

use crate::error::{check_dim, Error, Result};
use crate::linalg::{norm_inf, norm_l1};

/// The hidden sparse linear reward model.
#[derive(Debug, Clone, PartialEq)]
pub struct TrueModel {
    beta: Vec<f64>,
    support: Vec<usize>,
    /// Upper bound on `‖beta‖₁`.
    pub b: f64,
    /// Sub-Gaussian noise scale (standard deviation of the Gaussian noise used here).
    pub sigma: f64,
    /// Upper bound on `‖x‖∞` for every arm feature.
    pub x_max: f64,
}

impl TrueModel {
    /// Builds a model; the support is read off the nonzero entries of `beta`.
    pub fn new(beta: Vec<f64>, b: f64, sigma: f64, x_max: f64) -> Result<Self> {
        if beta.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation("beta_star has non-finite entries".into()));
        }
        if !(sigma >= 0.0) || !(x_max > 0.0) {
            return Err(Error::Validation(format!(
                "sigma must be >= 0 and x_max > 0 (got {sigma}, {x_max})"
            )));
        }
        let l1 = norm_l1(&beta);
        if l1 > b * (1.0 + 1e-12) {
            return Err(Error::Validation(format!(
                "‖beta_star‖₁ = {l1} exceeds bound b = {b}"
            )));
        }
        let support = beta
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(i, _)| i)
            .collect();
        Ok(Self {
            beta,
            support,
            b,
            sigma,
            x_max,
        })
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn s0(&self) -> usize {
        self.support.len()
    }

    pub fn dim(&self) -> usize {
        self.beta.len()
    }

    pub fn mean_reward(&self, x: &[f64]) -> f64 {
        crate::linalg::dot(x, &self.beta)
    }
}

/// The K candidate feature vectors presented at one round.
#[derive(Debug, Clone, PartialEq)]
pub struct ContextRound {
    pub t: usize,
    arms: Vec<Vec<f64>>,
}

impl ContextRound {
    /// Validates `K >= 2`, equal arm lengths and `‖x‖∞ <= x_max`.
    pub fn new(t: usize, arms: Vec<Vec<f64>>, x_max: f64) -> Result<Self> {
        let round = Self::new_unchecked_bound(t, arms)?;
        for (a, x) in round.arms.iter().enumerate() {
            let m = norm_inf(x);
            if m > x_max {
                return Err(Error::Validation(format!(
                    "arm {a} at round {t} has ‖x‖∞ = {m} > x_max = {x_max}"
                )));
            }
        }
        Ok(round)
    }

    /// Validates shape only; used for transformed rounds whose bound is known by construction.
    pub fn new_unchecked_bound(t: usize, arms: Vec<Vec<f64>>) -> Result<Self> {
        if arms.len() < 2 {
            return Err(Error::Config(format!(
                "a round needs at least 2 arms, got {}",
                arms.len()
            )));
        }
        let d = arms[0].len();
        for x in &arms {
            check_dim(d, x.len())?;
        }
        Ok(Self { t, arms })
    }

    pub fn arms(&self) -> &[Vec<f64>] {
        &self.arms
    }

    pub fn arm(&self, a: usize) -> &[f64] {
        &self.arms[a]
    }

    pub fn k(&self) -> usize {
        self.arms.len()
    }

    pub fn dim(&self) -> usize {
        self.arms[0].len()
    }

    /// Rescales every arm to unit sup-norm (zero arms are left alone).
    pub fn normalized_sup(&self) -> ContextRound {
        let arms = self
            .arms
            .iter()
            .map(|x| {
                let m = norm_inf(x);
                if m > 0.0 {
                    x.iter().map(|v| v / m).collect()
                } else {
                    x.clone()
                }
            })
            .collect();
        ContextRound { t: self.t, arms }
    }
}

/// What a policy learns after playing a round.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub t: usize,
    pub chosen_arm: usize,
    pub feature: Vec<f64>,
    pub reward: f64,
}

impl Observation {
    pub fn from_round(round: &ContextRound, chosen_arm: usize, reward: f64) -> Self {
        Self {
            t: round.t,
            chosen_arm,
            feature: round.arm(chosen_arm).to_vec(),
            reward,
        }
    }
}
