//! Empirical checks of the estimation machinery: confidence coverage, compatibility
//! and sparse-eigenvalue constants of the sample covariance, and how often the
//! optimal arm is pulled.

mod compat;
mod sparse;

pub use compat::{compatibility_estimate, compatibility_estimate_with, CompatConfig};
pub use sparse::sparse_eigen_probe;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::env::EnvSpec;
use crate::error::{check_dim, Error, Result};
use crate::linalg::l1_distance;
use crate::model::TrueModel;
use crate::regret::{best_arm, RegretTrace};
use crate::solvers::DesignState;

/// True iff `‖β̂ − β*‖₁ ≤ τ`.
pub fn coverage_check(beta_hat: &[f64], model: &TrueModel, tau: f64) -> Result<bool> {
    check_dim(model.dim(), beta_hat.len())?;
    Ok(l1_distance(beta_hat, model.beta()) <= tau)
}

/// `(6·s0·σ·x_max/φ²)·√((2 ln t + 2 ln d)/t)`, the high-probability ℓ1 error of the
/// LASSO fit when the sample covariance has compatibility constant `φ`.
pub fn lasso_error_radius(s0: usize, sigma: f64, x_max: f64, phi: f64, t: usize, d: usize) -> f64 {
    let tf = t as f64;
    6.0 * s0 as f64 * sigma * x_max / (phi * phi) * ((2.0 * tf.ln() + 2.0 * (d as f64).ln()) / tf).sqrt()
}

/// `Σ̂_t = gram/t`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceSnapshot {
    pub t: usize,
    d: usize,
    sigma_hat: Vec<f64>,
}

impl CovarianceSnapshot {
    pub fn from_design(state: &DesignState) -> Self {
        Self {
            t: state.t(),
            d: state.dim(),
            sigma_hat: state.covariance(),
        }
    }

    pub fn from_matrix(t: usize, d: usize, sigma_hat: Vec<f64>) -> Result<Self> {
        check_dim(d * d, sigma_hat.len())?;
        for i in 0..d {
            if sigma_hat[i * d + i] < 0.0 {
                return Err(Error::Validation(format!("negative diagonal entry at {i}")));
            }
            for j in 0..i {
                let (a, b) = (sigma_hat[i * d + j], sigma_hat[j * d + i]);
                if (a - b).abs() > 1e-12 * (1.0 + a.abs().max(b.abs())) {
                    return Err(Error::Validation(format!("matrix is not symmetric at ({i},{j})")));
                }
            }
        }
        Ok(Self { t, d, sigma_hat })
    }

    pub fn identity(d: usize) -> Self {
        let mut m = vec![0.0; d * d];
        for i in 0..d {
            m[i * d + i] = 1.0;
        }
        Self { t: 0, d, sigma_hat: m }
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.sigma_hat[i * self.d + j]
    }

    pub fn matrix(&self) -> &[f64] {
        &self.sigma_hat
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            t: self.t,
            d: self.d,
            sigma_hat: self.sigma_hat.iter().map(|v| v * c).collect(),
        }
    }

    pub(crate) fn quad(&self, v: &[f64]) -> f64 {
        let d = self.d;
        let mut s = 0.0;
        for i in 0..d {
            if v[i] == 0.0 {
                continue;
            }
            s += v[i] * crate::linalg::dot(&self.sigma_hat[i * d..(i + 1) * d], v);
        }
        s
    }
}

/// Fraction of rounds `t ≥ window_start` in which the optimal arm was played.
pub fn optimal_fraction(trace: &RegretTrace, window_start: usize) -> Result<f64> {
    let window: Vec<_> = trace.records().iter().filter(|r| r.t >= window_start).collect();
    if window.is_empty() {
        return Err(Error::Validation(format!(
            "window start {window_start} is past the final round"
        )));
    }
    let hits = window.iter().filter(|r| r.chosen_arm == r.optimal_arm).count();
    Ok(hits as f64 / window.len() as f64)
}

/// One checkpoint of the diagnostics CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRow {
    pub t: usize,
    pub phi_hat: f64,
    pub rho_min: f64,
    pub rho_max: f64,
    pub coverage: Option<bool>,
    pub optimal_fraction: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct DiagnosticsReport {
    pub rows: Vec<DiagnosticsRow>,
}

impl DiagnosticsReport {
    pub fn coverage_hits(&self) -> usize {
        self.rows.iter().filter(|r| r.coverage == Some(true)).count()
    }

    pub fn coverage_rate(&self) -> Option<f64> {
        let checked: Vec<_> = self.rows.iter().filter_map(|r| r.coverage).collect();
        (!checked.is_empty()).then(|| checked.iter().filter(|c| **c).count() as f64 / checked.len() as f64)
    }
}

/// Checkpoints at powers of two up to `horizon`, plus `horizon` itself.
pub fn checkpoints(horizon: usize) -> Vec<usize> {
    let mut out: Vec<usize> = (0..usize::BITS)
        .map(|k| 1usize << k)
        .take_while(|&t| t <= horizon)
        .collect();
    if out.last() != Some(&horizon) && horizon > 0 {
        out.push(horizon);
    }
    out
}

/// Estimate of the optimal-arm compatibility constant under a gap event.
#[derive(Debug, Clone, PartialEq)]
pub struct Phi0Estimate {
    pub phi0: f64,
    pub accepted: usize,
    pub drawn: usize,
}

/// Estimates `φ0` as the square root of the smallest `m`-sparse eigenvalue of
/// `E[X_{a*} X_{a*}ᵀ | gap ≥ Δ*]`, by rejection over `n_rounds` generated rounds.
pub fn estimate_phi0<R: Rng + ?Sized>(
    spec: &EnvSpec,
    model: &TrueModel,
    delta_star: f64,
    n_rounds: usize,
    m: usize,
    rng: &mut R,
) -> Result<Phi0Estimate> {
    if !(delta_star >= 0.0) {
        return Err(Error::Config(format!("delta_star must be >= 0, got {delta_star}")));
    }
    let d = spec.dim();
    let mut state = DesignState::new(d);
    for t in 1..=n_rounds {
        let round = spec.gen_round(t, rng)?;
        let best = best_arm(&round, model.beta())?;
        let top = model.mean_reward(round.arm(best));
        let runner_up = round
            .arms()
            .iter()
            .enumerate()
            .filter(|(a, _)| *a != best)
            .map(|(_, x)| model.mean_reward(x))
            .fold(f64::NEG_INFINITY, f64::max);
        if top >= runner_up + delta_star {
            state.update(round.arm(best), 0.0)?;
        }
    }
    if state.t() == 0 {
        return Err(Error::Numeric("no round satisfied the gap event".into()));
    }
    let snap = CovarianceSnapshot::from_design(&state);
    let (rho_min, _) = sparse_eigen_probe(&snap, m.min(d), 2000, rng)?;
    Ok(Phi0Estimate {
        phi0: rho_min.max(0.0).sqrt(),
        accepted: state.t(),
        drawn: n_rounds,
    })
}
