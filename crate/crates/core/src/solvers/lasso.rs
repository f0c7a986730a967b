//! LASSO by cyclic coordinate descent on the Gram formulation.
//!
//! Minimizes `(1/2t)‖Y − Xβ‖² + λ‖β‖₁` using only `(XᵀX, XᵀY, YᵀY)`, so the
//! cost of a sweep is `O(d²)` regardless of how many rounds have been observed.

use crate::error::{check_dim, Error, Result};
use crate::solvers::DesignState;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LassoConfig {
    /// Stop once the largest coordinate change in a full sweep is at most this.
    pub tol: f64,
    /// Maximum KKT residual accepted at exit.
    pub kkt_tol: f64,
    /// Sweep budget (full and active-set sweeps both count).
    pub max_iter: usize,
}

impl Default for LassoConfig {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            kkt_tol: 1e-6,
            max_iter: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LassoSolution {
    pub beta_hat: Vec<f64>,
    pub lambda: f64,
    pub iterations: usize,
    pub converged: bool,
    pub kkt_violation: f64,
    /// Coordinates with `gram_jj = 0` but a nonzero gradient; held at 0.
    pub degenerate: Vec<usize>,
}

#[inline]
fn soft_threshold(z: f64, gamma: f64) -> f64 {
    if z > gamma {
        z - gamma
    } else if z < -gamma {
        z + gamma
    } else {
        0.0
    }
}

/// Objective value `(1/2t)‖Y − Xβ‖² + λ‖β‖₁` evaluated through the sufficient statistics.
pub fn lasso_objective(state: &DesignState, beta: &[f64], lambda: f64) -> f64 {
    let d = state.dim();
    let t = state.t().max(1) as f64;
    let g = state.gram();
    let mut quad = 0.0;
    for i in 0..d {
        if beta[i] == 0.0 {
            continue;
        }
        let row = &g[i * d..(i + 1) * d];
        quad += beta[i] * crate::linalg::dot(row, beta);
    }
    let lin = crate::linalg::dot(beta, state.xty());
    (state.yty() - 2.0 * lin + quad) / (2.0 * t) + lambda * crate::linalg::norm_l1(beta)
}

/// Largest violation of the LASSO optimality conditions at `beta`.
///
/// With `g = (gram·β − xty)/t`: for `β_j ≠ 0` the residual is `|g_j + λ·sign(β_j)|`,
/// for `β_j = 0` it is `max(|g_j| − λ, 0)`.
pub fn kkt_residual(state: &DesignState, beta: &[f64], lambda: f64) -> f64 {
    let d = state.dim();
    let t = state.t().max(1) as f64;
    let g = state.gram();
    let mut worst: f64 = 0.0;
    for j in 0..d {
        let grad = (crate::linalg::dot(&g[j * d..(j + 1) * d], beta) - state.xty()[j]) / t;
        let r = if beta[j] != 0.0 {
            (grad + lambda * beta[j].signum()).abs()
        } else {
            (grad.abs() - lambda).max(0.0)
        };
        worst = worst.max(r);
    }
    worst
}

pub fn lasso_solve(
    state: &DesignState,
    lambda: f64,
    warm_start: Option<&[f64]>,
    cfg: &LassoConfig,
) -> Result<LassoSolution> {
    lasso_solve_traced(state, lambda, warm_start, cfg, |_| {})
}

/// As [`lasso_solve`], calling `on_sweep` with the iterate after every sweep.
pub fn lasso_solve_traced(
    state: &DesignState,
    lambda: f64,
    warm_start: Option<&[f64]>,
    cfg: &LassoConfig,
    mut on_sweep: impl FnMut(&[f64]),
) -> Result<LassoSolution> {
    if state.t() == 0 {
        return Err(Error::Config("lasso_solve needs at least one observation".into()));
    }
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::Config(format!("lambda must be finite and >= 0, got {lambda}")));
    }
    let d = state.dim();
    let t = state.t() as f64;
    let gram = state.gram();
    let c: Vec<f64> = state.xty().iter().map(|v| v / t).collect();
    let diag: Vec<f64> = (0..d).map(|j| gram[j * d + j] / t).collect();

    let mut beta = match warm_start {
        Some(w) => {
            check_dim(d, w.len())?;
            w.to_vec()
        }
        None => vec![0.0; d],
    };
    let mut degenerate = Vec::new();
    for j in 0..d {
        if diag[j] <= 0.0 {
            beta[j] = 0.0;
            if c[j].abs() > lambda + cfg.kkt_tol {
                degenerate.push(j);
            }
        }
    }

    // gb = (gram/t)·β, kept in sync with β
    let mut gb = vec![0.0; d];
    let recompute = |beta: &[f64], gb: &mut [f64]| {
        for (j, out) in gb.iter_mut().enumerate() {
            *out = crate::linalg::dot(&gram[j * d..(j + 1) * d], beta) / t;
        }
    };
    recompute(&beta, &mut gb);

    let coord_step = |j: usize, beta: &mut [f64], gb: &mut [f64]| -> f64 {
        let gjj = diag[j];
        if gjj <= 0.0 {
            return 0.0;
        }
        let old = beta[j];
        let z = c[j] - gb[j] + gjj * old;
        let new = soft_threshold(z, lambda) / gjj;
        let delta = new - old;
        if delta != 0.0 {
            beta[j] = new;
            let row = &gram[j * d..(j + 1) * d];
            for (g, &r) in gb.iter_mut().zip(row) {
                *g += delta * r / t;
            }
        }
        delta.abs()
    };

    let mut iterations = 0;
    let mut converged = false;
    let mut kkt = f64::INFINITY;
    let mut active: Vec<usize> = Vec::with_capacity(d);
    while iterations < cfg.max_iter {
        let mut max_delta: f64 = 0.0;
        for j in 0..d {
            max_delta = max_delta.max(coord_step(j, &mut beta, &mut gb));
        }
        iterations += 1;
        on_sweep(&beta);

        if max_delta <= cfg.tol {
            recompute(&beta, &mut gb);
            kkt = kkt_residual(state, &beta, lambda);
            if kkt <= cfg.kkt_tol {
                converged = true;
                break;
            }
            continue;
        }

        // polish the active set before the next full sweep
        active.clear();
        active.extend((0..d).filter(|&j| beta[j] != 0.0));
        while iterations < cfg.max_iter {
            let mut inner: f64 = 0.0;
            for &j in &active {
                inner = inner.max(coord_step(j, &mut beta, &mut gb));
            }
            iterations += 1;
            on_sweep(&beta);
            if inner <= cfg.tol {
                break;
            }
        }
    }
    if !converged {
        kkt = kkt_residual(state, &beta, lambda);
    }

    Ok(LassoSolution {
        beta_hat: beta,
        lambda,
        iterations,
        converged,
        kkt_violation: kkt,
        degenerate,
    })
}
