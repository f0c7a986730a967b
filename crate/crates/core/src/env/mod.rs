//! Environment generators and the seeded simulator that drives them.
//!
//! A [`Simulator`] owns three independent streams derived from the master seed and
//! the repetition index: one for the hidden model, one for contexts and one for
//! reward noise. Noise is drawn once per round whatever arm is played, so every
//! policy in a repetition faces the same contexts and the same noise sequence.

mod hard;
mod margin;
mod replay;
mod seed;
mod synthetic;

pub use hard::{gen_hard_round, sample_hard_model, HardInstanceSpec};
pub use margin::{gen_margin_round, sample_margin_model, signed_beta, MarginSpec};
pub use replay::{replay_load, ReplayDataset};
pub use seed::{splitmix64, stream_rng, stream_seed};
pub use synthetic::{
    ar1_latent, clamped_gaussian, gen_synthetic_round, sample_synthetic_model, BetaDist, SyntheticSpec,
};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Result};
use crate::model::{ContextRound, TrueModel};

/// `⟨x, β*⟩ + σ·g` with `g` standard normal.
pub fn draw_reward<R: Rng + ?Sized>(x: &[f64], model: &TrueModel, rng: &mut R) -> Result<f64> {
    check_dim(model.dim(), x.len())?;
    let g: f64 = rng.sample(StandardNormal);
    Ok(model.mean_reward(x) + model.sigma * g)
}

/// Generators that come with a hidden linear model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum EnvSpec {
    Synthetic(SyntheticSpec),
    Margin(MarginSpec),
    Hard(HardInstanceSpec),
}

impl EnvSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            EnvSpec::Synthetic(s) => s.validate(),
            EnvSpec::Margin(s) => s.validate(),
            EnvSpec::Hard(s) => s.validate(),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            EnvSpec::Synthetic(s) => s.d,
            EnvSpec::Margin(s) => s.d,
            EnvSpec::Hard(s) => s.dim(),
        }
    }

    pub fn k(&self) -> usize {
        match self {
            EnvSpec::Synthetic(s) => s.k,
            EnvSpec::Margin(_) | EnvSpec::Hard(_) => 2,
        }
    }

    pub fn x_max(&self) -> f64 {
        match self {
            EnvSpec::Synthetic(s) => s.x_max,
            EnvSpec::Margin(s) => s.x_max(),
            EnvSpec::Hard(_) => 1.0,
        }
    }

    pub fn sample_model<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<TrueModel> {
        match self {
            EnvSpec::Synthetic(s) => sample_synthetic_model(s, rng),
            EnvSpec::Margin(s) => sample_margin_model(s, rng),
            EnvSpec::Hard(s) => sample_hard_model(s, rng),
        }
    }

    pub fn gen_round<R: Rng + ?Sized>(&self, t: usize, rng: &mut R) -> Result<ContextRound> {
        match self {
            EnvSpec::Synthetic(s) => gen_synthetic_round(s, t, rng),
            EnvSpec::Margin(s) => gen_margin_round(s, t, rng),
            EnvSpec::Hard(s) => gen_hard_round(s, t, rng),
        }
    }
}

/// One repetition's worth of environment state.
#[derive(Debug, Clone)]
pub struct Simulator {
    spec: EnvSpec,
    model: TrueModel,
    contexts: ChaCha8Rng,
    noise: ChaCha8Rng,
    normalize_sup: bool,
}

impl Simulator {
    pub fn new(spec: &EnvSpec, master_seed: u64, rep: u64) -> Result<Self> {
        spec.validate()?;
        let model = spec.sample_model(&mut stream_rng(master_seed, "model", rep))?;
        Ok(Self {
            spec: spec.clone(),
            model,
            contexts: stream_rng(master_seed, "contexts", rep),
            noise: stream_rng(master_seed, "noise", rep),
            normalize_sup: false,
        })
    }

    /// Rescale every arm to unit sup-norm before it is shown to the policy.
    pub fn with_normalized_sup(mut self, on: bool) -> Self {
        self.normalize_sup = on;
        if on {
            self.model.x_max = self.model.x_max.max(1.0);
        }
        self
    }

    pub fn model(&self) -> &TrueModel {
        &self.model
    }

    pub fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    pub fn next_round(&mut self, t: usize) -> Result<ContextRound> {
        let r = self.spec.gen_round(t, &mut self.contexts)?;
        Ok(if self.normalize_sup { r.normalized_sup() } else { r })
    }

    pub fn reward(&mut self, x: &[f64]) -> Result<f64> {
        draw_reward(x, &self.model, &mut self.noise)
    }
}
