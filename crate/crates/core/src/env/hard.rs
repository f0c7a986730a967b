//! Two-arm lower-bound instance: arm 0 is `(X₀, X)` and arm 1 is `(0, −X)` with a
//! single weak payload coordinate.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ContextRound, TrueModel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HardInstanceSpec {
    /// Payload dimension; features have `d + 1` coordinates.
    pub d: usize,
    /// Horizon the signal strength is tuned to.
    pub horizon: usize,
    pub alpha: f64,
    #[serde(default = "half")]
    pub c: f64,
    #[serde(default = "half")]
    pub c_x0: f64,
    #[serde(default = "one")]
    pub sigma: f64,
}

fn half() -> f64 {
    0.5
}

fn one() -> f64 {
    1.0
}

impl HardInstanceSpec {
    /// With `c = σ/(2·x_max)` at `x_max = 1`.
    pub fn new(d: usize, horizon: usize, alpha: f64, sigma: f64) -> Self {
        Self {
            d,
            horizon,
            alpha,
            c: sigma / 2.0,
            c_x0: 0.5,
            sigma,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.d < 2 || self.horizon == 0 {
            return Err(Error::Config(format!(
                "hard instance needs d >= 2 and horizon >= 1 (got d={}, horizon={})",
                self.d, self.horizon
            )));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::Config(format!("hard instance alpha must lie in [0,1], got {}", self.alpha)));
        }
        if !(self.c > 0.0) || !(self.c_x0 > 0.0) || !(self.sigma >= 0.0) {
            return Err(Error::Config("hard instance c, c_x0 must be > 0 and sigma >= 0".into()));
        }
        Ok(())
    }

    /// `β_min = √(ln d / T)`.
    pub fn beta_min(&self) -> f64 {
        ((self.d as f64).ln() / self.horizon as f64).sqrt()
    }

    pub fn theta(&self) -> f64 {
        self.c * self.beta_min()
    }

    /// `P(X₀ = 0) = min(1, C·β_min^α)`.
    pub fn p_zero(&self) -> f64 {
        (self.c_x0 * self.beta_min().powf(self.alpha)).min(1.0)
    }

    pub fn dim(&self) -> usize {
        self.d + 1
    }
}

pub fn gen_hard_round<R: Rng + ?Sized>(spec: &HardInstanceSpec, t: usize, rng: &mut R) -> Result<ContextRound> {
    let x0 = if rng.random::<f64>() < spec.p_zero() {
        0.0
    } else if rng.random_bool(0.5) {
        1.0
    } else {
        -1.0
    };
    let mut a0 = Vec::with_capacity(spec.dim());
    let mut a1 = Vec::with_capacity(spec.dim());
    a0.push(x0);
    a1.push(0.0);
    for _ in 0..spec.d {
        let z: f64 = rng.sample(StandardNormal);
        let z = z.clamp(-1.0, 1.0);
        a0.push(z);
        a1.push(-z);
    }
    ContextRound::new(t, vec![a0, a1], 1.0)
}

/// `β₀ = 1`, `β_u = θ` for `u` uniform on `{1..d}`.
pub fn sample_hard_model<R: Rng + ?Sized>(spec: &HardInstanceSpec, rng: &mut R) -> Result<TrueModel> {
    spec.validate()?;
    let theta = spec.theta();
    let mut beta = vec![0.0; spec.dim()];
    beta[0] = 1.0;
    beta[rng.random_range(1..=spec.d)] = theta;
    TrueModel::new(beta, 1.0 + theta, spec.sigma, 1.0)
}
