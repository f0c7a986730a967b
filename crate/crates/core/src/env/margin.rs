//! Two-arm environment with a tunable margin: arm 1 is arm 0 shifted by a signed
//! Beta(α, 1) amount along the first coordinate.

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::env::synthetic::clamped_gaussian;
use crate::error::{Error, Result};
use crate::linalg::norm_l1;
use crate::model::{ContextRound, TrueModel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarginSpec {
    pub alpha: f64,
    pub d: usize,
    #[serde(default = "default_s0")]
    pub s0: usize,
    /// Correlation decay of the clamped-Gaussian base draw.
    #[serde(default = "default_rho")]
    pub cov_decay: f64,
    #[serde(default = "one")]
    pub sigma: f64,
    /// Box of the base draw; the shifted arm may reach `base_x_max + 1`.
    #[serde(default = "one")]
    pub base_x_max: f64,
}

fn default_s0() -> usize {
    5
}

fn default_rho() -> f64 {
    0.5
}

fn one() -> f64 {
    1.0
}

impl MarginSpec {
    pub fn new(alpha: f64, d: usize) -> Self {
        Self {
            alpha,
            d,
            s0: 5.min(d),
            cov_decay: 0.5,
            sigma: 1.0,
            base_x_max: 1.0,
        }
    }

    /// Box that contains both arms, so clamping never alters the shift.
    pub fn x_max(&self) -> f64 {
        self.base_x_max + 1.0
    }

    /// `Δ* = 2^{−1/α}`, for which `P(|ζ| ≤ h) = ½(h/Δ*)^α` on `[0, 1]`.
    pub fn delta_star(&self) -> f64 {
        2f64.powf(-1.0 / self.alpha)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0) || !self.alpha.is_finite() {
            return Err(Error::Config(format!("environment.alpha must be > 0, got {}", self.alpha)));
        }
        if self.d == 0 || self.s0 == 0 || self.s0 > self.d {
            return Err(Error::Config(format!(
                "environment needs 1 <= s0 <= d (got s0={}, d={})",
                self.s0, self.d
            )));
        }
        if !(0.0..1.0).contains(&self.cov_decay) || !(self.sigma >= 0.0) || !(self.base_x_max > 0.0) {
            return Err(Error::Config("environment has invalid cov_decay, sigma or base_x_max".into()));
        }
        Ok(())
    }
}

/// `ζ = ε·B` with `ε = ±1` and `B ~ Beta(α, 1)`, drawn as `U^{1/α}`.
pub fn signed_beta<R: Rng + ?Sized>(alpha: f64, rng: &mut R) -> f64 {
    let b = rng.random::<f64>().powf(1.0 / alpha);
    if rng.random_bool(0.5) {
        b
    } else {
        -b
    }
}

pub fn gen_margin_round<R: Rng + ?Sized>(spec: &MarginSpec, t: usize, rng: &mut R) -> Result<ContextRound> {
    let x = clamped_gaussian(spec.d, spec.cov_decay, spec.base_x_max, rng);
    let zeta = signed_beta(spec.alpha, rng);
    let bound = spec.x_max();
    let mut shifted = x.clone();
    shifted[0] = (shifted[0] + zeta).clamp(-bound, bound);
    ContextRound::new(t, vec![x, shifted], bound)
}

/// `β_0 = 1` so that the reward gap between the arms is exactly `ζ`; the other
/// `s0 − 1` support entries are uniform on `(0, 1]`.
pub fn sample_margin_model<R: Rng + ?Sized>(spec: &MarginSpec, rng: &mut R) -> Result<TrueModel> {
    spec.validate()?;
    let mut beta = vec![0.0; spec.d];
    beta[0] = 1.0;
    for j in sample(rng, spec.d - 1, spec.s0 - 1).into_iter() {
        beta[j + 1] = 1.0 - rng.random::<f64>();
    }
    let b = norm_l1(&beta);
    TrueModel::new(beta, b, spec.sigma, spec.x_max())
}
