//! Ellipsoidal-confidence UCB baseline with a ridge center.

use nalgebra::{DMatrix, DVector};

use crate::error::{check_dim, Error, Result};
use crate::linalg::{argmax, dot};
use crate::model::{ContextRound, Observation};
use crate::policies::Policy;
use crate::solvers::DesignState;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OfulConfig {
    pub lambda_ridge: f64,
    pub delta: f64,
    /// Sub-Gaussian noise scale.
    pub r: f64,
    /// Bound on ‖β*‖₂.
    pub s_bound: f64,
    pub x_max: f64,
}

impl Default for OfulConfig {
    fn default() -> Self {
        Self {
            lambda_ridge: 1.0,
            delta: 1e-4,
            r: 1.0,
            s_bound: 1.0,
            x_max: 1.0,
        }
    }
}

impl OfulConfig {
    fn validate(&self) -> Result<()> {
        if !(self.lambda_ridge > 0.0) {
            return Err(Error::Config(format!("oful lambda must be > 0, got {}", self.lambda_ridge)));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::Config(format!("oful delta must lie in (0,1), got {}", self.delta)));
        }
        if !(self.r >= 0.0) || !(self.s_bound >= 0.0) || !(self.x_max > 0.0) {
            return Err(Error::Config("oful R, S and x_max must be non-negative".into()));
        }
        Ok(())
    }
}

/// `ρ_t = R·√(d·ln((1 + t·x_max²·d/λ)/δ)) + √λ·S`.
pub fn oful_radius(cfg: &OfulConfig, t: usize, d: usize) -> f64 {
    let df = d as f64;
    let inner = (1.0 + t as f64 * cfg.x_max * cfg.x_max * df / cfg.lambda_ridge) / cfg.delta;
    cfg.r * (df * inner.ln()).sqrt() + cfg.lambda_ridge.sqrt() * cfg.s_bound
}

/// Stateless selection from a design: solves with `V = gram + λI` by Cholesky.
pub fn oful_select(round: &ContextRound, design: &DesignState, cfg: &OfulConfig) -> Result<usize> {
    cfg.validate()?;
    let d = design.dim();
    check_dim(d, round.dim())?;
    let mut v = DMatrix::from_row_slice(d, d, design.gram());
    for i in 0..d {
        v[(i, i)] += cfg.lambda_ridge;
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numeric("non-finite design matrix".into()));
    }
    let chol = v
        .cholesky()
        .ok_or_else(|| Error::Numeric("V is not positive definite".into()))?;
    let beta = chol.solve(&DVector::from_column_slice(design.xty()));
    let rho = oful_radius(cfg, design.t(), d);
    let scores = round.arms().iter().map(|x| {
        let xv = DVector::from_column_slice(x);
        let w = chol.solve(&xv);
        xv.dot(&beta) + rho * xv.dot(&w).max(0.0).sqrt()
    });
    argmax(scores).ok_or_else(|| Error::Config("round has no arms".into()))
}

/// Incremental version: keeps `V⁻¹` by Sherman–Morrison so each round is O(K·d²).
#[derive(Debug, Clone)]
pub struct OfulPolicy {
    id: String,
    cfg: OfulConfig,
    d: usize,
    t: usize,
    v_inv: Vec<f64>,
    xty: Vec<f64>,
    beta: Vec<f64>,
    scratch: Vec<f64>,
}

impl OfulPolicy {
    pub fn new(d: usize, cfg: OfulConfig) -> Result<Self> {
        cfg.validate()?;
        if d == 0 {
            return Err(Error::Config("dimension must be >= 1".into()));
        }
        let mut v_inv = vec![0.0; d * d];
        for i in 0..d {
            v_inv[i * d + i] = 1.0 / cfg.lambda_ridge;
        }
        Ok(Self {
            id: "oful".into(),
            cfg,
            d,
            t: 0,
            v_inv,
            xty: vec![0.0; d],
            beta: vec![0.0; d],
            scratch: vec![0.0; d],
        })
    }

    pub fn center(&self) -> &[f64] {
        &self.beta
    }

    fn mul_v_inv(&mut self, x: &[f64]) {
        let d = self.d;
        for i in 0..d {
            self.scratch[i] = dot(&self.v_inv[i * d..(i + 1) * d], x);
        }
    }
}

impl Policy for OfulPolicy {
    fn id(&self) -> &str {
        &self.id
    }

    fn select(&mut self, round: &ContextRound) -> Result<usize> {
        check_dim(self.d, round.dim())?;
        let rho = oful_radius(&self.cfg, self.t, self.d);
        let mut scores = Vec::with_capacity(round.k());
        for x in round.arms() {
            self.mul_v_inv(x);
            let width = dot(x, &self.scratch).max(0.0).sqrt();
            scores.push(dot(x, &self.beta) + rho * width);
        }
        argmax(scores).ok_or_else(|| Error::Config("round has no arms".into()))
    }

    fn update(&mut self, obs: &Observation) -> Result<()> {
        let x = &obs.feature;
        check_dim(self.d, x.len())?;
        if !obs.reward.is_finite() || x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("non-finite observation".into()));
        }
        let d = self.d;
        self.mul_v_inv(x);
        let denom = 1.0 + dot(x, &self.scratch);
        for i in 0..d {
            let ui = self.scratch[i] / denom;
            for j in 0..d {
                self.v_inv[i * d + j] -= ui * self.scratch[j];
            }
        }
        for (b, xi) in self.xty.iter_mut().zip(x) {
            *b += obs.reward * xi;
        }
        for i in 0..d {
            self.beta[i] = dot(&self.v_inv[i * d..(i + 1) * d], &self.xty);
        }
        self.t += 1;
        Ok(())
    }
}
