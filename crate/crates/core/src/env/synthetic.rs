//! Clamped correlated-Gaussian contexts with a sparse random parameter.

use rand::seq::index::sample;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::norm_l1;
use crate::model::{ContextRound, TrueModel};

/// Law of the nonzero entries of `β*`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum BetaDist {
    #[default]
    #[serde(rename = "uniform(0,1)")]
    Uniform01,
    #[serde(rename = "uniform(0,0.2)")]
    Uniform002,
}

impl BetaDist {
    fn upper(self) -> f64 {
        match self {
            BetaDist::Uniform01 => 1.0,
            BetaDist::Uniform002 => 0.2,
        }
    }

    /// Draws from `(0, upper]` so that every support entry is nonzero.
    pub fn draw<R: Rng + ?Sized>(self, rng: &mut R) -> f64 {
        self.upper() * (1.0 - rng.random::<f64>())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub k: usize,
    pub d: usize,
    pub s0: usize,
    #[serde(default)]
    pub beta_dist: BetaDist,
    #[serde(default = "default_rho")]
    pub cov_decay: f64,
    #[serde(default = "one")]
    pub sigma: f64,
    #[serde(default = "one")]
    pub x_max: f64,
}

fn default_rho() -> f64 {
    0.5
}

fn one() -> f64 {
    1.0
}

impl SyntheticSpec {
    pub fn new(k: usize, d: usize, s0: usize) -> Self {
        Self {
            k,
            d,
            s0,
            beta_dist: BetaDist::Uniform01,
            cov_decay: 0.5,
            sigma: 1.0,
            x_max: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 2 {
            return Err(Error::Config(format!("environment.k must be >= 2, got {}", self.k)));
        }
        if self.d == 0 || self.s0 == 0 || self.s0 > self.d {
            return Err(Error::Config(format!(
                "environment needs 1 <= s0 <= d (got s0={}, d={})",
                self.s0, self.d
            )));
        }
        if !(0.0..1.0).contains(&self.cov_decay) {
            return Err(Error::Config(format!("environment.cov_decay must lie in [0,1), got {}", self.cov_decay)));
        }
        if !(self.sigma >= 0.0) || !(self.x_max > 0.0) {
            return Err(Error::Config("environment.sigma must be >= 0 and x_max > 0".into()));
        }
        Ok(())
    }
}

/// One latent draw from `N(0, Σ)` with `Σ_ij = ρ^{|i−j|}`, via the stationary AR(1)
/// recursion.
pub fn ar1_latent<R: Rng + ?Sized>(d: usize, rho: f64, rng: &mut R) -> Vec<f64> {
    let innov = (1.0 - rho * rho).sqrt();
    let mut z = Vec::with_capacity(d);
    let mut prev: f64 = rng.sample(StandardNormal);
    z.push(prev);
    for _ in 1..d {
        let e: f64 = rng.sample(StandardNormal);
        prev = rho * prev + innov * e;
        z.push(prev);
    }
    z
}

pub fn clamped_gaussian<R: Rng + ?Sized>(d: usize, rho: f64, x_max: f64, rng: &mut R) -> Vec<f64> {
    let mut z = ar1_latent(d, rho, rng);
    for v in &mut z {
        *v = v.clamp(-x_max, x_max);
    }
    z
}

pub fn gen_synthetic_round<R: Rng + ?Sized>(spec: &SyntheticSpec, t: usize, rng: &mut R) -> Result<ContextRound> {
    let arms = (0..spec.k)
        .map(|_| clamped_gaussian(spec.d, spec.cov_decay, spec.x_max, rng))
        .collect();
    ContextRound::new(t, arms, spec.x_max)
}

pub fn sample_synthetic_model<R: Rng + ?Sized>(spec: &SyntheticSpec, rng: &mut R) -> Result<TrueModel> {
    spec.validate()?;
    let mut beta = vec![0.0; spec.d];
    let mut support = sample(rng, spec.d, spec.s0).into_vec();
    support.sort_unstable();
    for j in support {
        beta[j] = spec.beta_dist.draw(rng);
    }
    let b = norm_l1(&beta);
    TrueModel::new(beta, b, spec.sigma, spec.x_max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn corr(xs: &[(f64, f64)]) -> f64 {
        let n = xs.len() as f64;
        let (ma, mb) = xs.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x / n, b + y / n));
        let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
        for (x, y) in xs {
            sab += (x - ma) * (y - mb);
            saa += (x - ma) * (x - ma);
            sbb += (y - mb) * (y - mb);
        }
        sab / (saa * sbb).sqrt()
    }

    #[test]
    fn independent_coordinates_when_rho_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = 100_000;
        let pairs: Vec<(f64, f64)> = (0..n)
            .map(|_| {
                let z = clamped_gaussian(4, 0.0, 1.0, &mut rng);
                (z[0], z[2])
            })
            .collect();
        assert!(corr(&pairs).abs() < 3.0 / (n as f64).sqrt());
    }

    #[test]
    fn latent_lag_one_correlation() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let pairs: Vec<(f64, f64)> = (0..100_000)
            .map(|_| {
                let z = ar1_latent(6, 0.5, &mut rng);
                (z[2], z[3])
            })
            .collect();
        assert!((corr(&pairs) - 0.5).abs() < 0.02);
    }

    #[test]
    fn latent_lag_two_and_unit_variance() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let draws: Vec<Vec<f64>> = (0..100_000).map(|_| ar1_latent(5, 0.5, &mut rng)).collect();
        let pairs: Vec<(f64, f64)> = draws.iter().map(|z| (z[1], z[3])).collect();
        assert!((corr(&pairs) - 0.25).abs() < 0.02);
        let var = draws.iter().map(|z| z[4] * z[4]).sum::<f64>() / draws.len() as f64;
        assert!((var - 1.0).abs() < 0.02);
    }

    #[test]
    fn rounds_respect_box() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let spec = SyntheticSpec::new(5, 30, 3);
        for t in 1..=200 {
            let r = gen_synthetic_round(&spec, t, &mut rng).unwrap();
            assert_eq!(r.k(), 5);
            assert!(r.arms().iter().flatten().all(|v| v.abs() <= 1.0));
        }
    }

    #[test]
    fn dense_model_when_s0_equals_d() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let m = sample_synthetic_model(&SyntheticSpec::new(2, 7, 7), &mut rng).unwrap();
        assert_eq!(m.support(), &[0, 1, 2, 3, 4, 5, 6]);
    }

    #[test]
    fn small_signal_entries_bounded() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mut spec = SyntheticSpec::new(2, 50, 10);
        spec.beta_dist = BetaDist::Uniform002;
        for _ in 0..200 {
            let m = sample_synthetic_model(&spec, &mut rng).unwrap();
            assert_eq!(m.s0(), 10);
            assert!(m.support().iter().all(|&j| m.beta()[j] > 0.0 && m.beta()[j] <= 0.2));
        }
    }

    #[test]
    fn mean_l1_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let spec = SyntheticSpec::new(2, 20, 4);
        let n = 10_000;
        let norms: Vec<f64> = (0..n)
            .map(|_| sample_synthetic_model(&spec, &mut rng).unwrap().b)
            .collect();
        let mean = norms.iter().sum::<f64>() / n as f64;
        // sum of 4 uniforms: variance 4/12
        let se = (4.0 / 12.0 / n as f64).sqrt();
        assert!((mean - 2.0).abs() < 3.0 * se, "{mean}");
    }

    #[test]
    fn rejects_bad_specs() {
        let mut s = SyntheticSpec::new(1, 10, 2);
        assert!(s.validate().is_err());
        s.k = 2;
        s.s0 = 11;
        assert!(s.validate().is_err());
        s.s0 = 2;
        s.cov_decay = 1.0;
        assert!(s.validate().is_err());
    }
}
