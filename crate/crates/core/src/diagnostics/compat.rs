//! Upper-bound estimator of the compatibility constant
//! `φ² = min { |S|·vᵀΣv/‖v‖₁² : ‖v_{Sᶜ}‖₁ ≤ 3‖v_S‖₁ }`.
//!
//! On a fixed sign pattern `v = s∘w` with `w ≥ 0` and `‖v‖₁ = 1`, the cone becomes
//! `Σ_{Sᶜ} w ≤ 3/4` and the problem is a convex QP over a capped simplex, solved by
//! accelerated projected gradient. Sign patterns are explored by multi-start and
//! refined by flipping zero coordinates whose gradient favors the other orthant.
//! Every candidate is feasible, so the reported value never falls below the true
//! constant.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::diagnostics::CovarianceSnapshot;
use crate::error::{Error, Result};

const SC_MASS: f64 = 0.75;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompatConfig {
    pub n_starts: usize,
    pub max_iter: usize,
    pub tol: f64,
    pub seed: u64,
}

impl Default for CompatConfig {
    fn default() -> Self {
        Self {
            n_starts: 64,
            max_iter: 5000,
            tol: 1e-12,
            seed: 0,
        }
    }
}

pub fn compatibility_estimate(snap: &CovarianceSnapshot, support: &[usize], n_starts: usize) -> Result<f64> {
    compatibility_estimate_with(
        snap,
        support,
        &CompatConfig {
            n_starts,
            ..CompatConfig::default()
        },
    )
}

pub fn compatibility_estimate_with(snap: &CovarianceSnapshot, support: &[usize], cfg: &CompatConfig) -> Result<f64> {
    let d = snap.dim();
    if support.is_empty() {
        return Err(Error::Config("compatibility needs a nonempty support".into()));
    }
    let mut in_s = vec![false; d];
    for &j in support {
        if j >= d {
            return Err(Error::Config(format!("support index {j} out of range for d={d}")));
        }
        in_s[j] = true;
    }
    let s_size = in_s.iter().filter(|b| **b).count() as f64;

    let mut best = support
        .iter()
        .map(|&j| snap.at(j, j))
        .fold(f64::INFINITY, f64::min);

    let lmax = DMatrix::from_row_slice(d, d, snap.matrix()).symmetric_eigenvalues().max();
    if lmax <= 0.0 {
        return Ok(0.0);
    }
    let mut solver = OrthantSolver {
        snap,
        in_s: &in_s,
        step: 1.0 / (2.0 * lmax),
        cfg,
        buf: Scratch::new(d),
    };

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n_sc = d - s_size as usize;
    for start in 0..cfg.n_starts.max(1) {
        let mut signs = vec![1.0; d];
        let mut w = vec![0.0; d];
        match start % 3 {
            // on-support mass only, or the cone boundary spread evenly
            0 | 1 => {
                if start > 0 {
                    for j in support {
                        signs[*j] = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                    }
                }
                let spread = start % 3 == 1 && n_sc > 0;
                for j in 0..d {
                    w[j] = match (in_s[j], spread) {
                        (true, false) => 1.0 / s_size,
                        (true, true) => (1.0 - SC_MASS) / s_size,
                        (false, true) => SC_MASS / n_sc as f64,
                        (false, false) => 0.0,
                    };
                }
                // off-support signs that oppose the on-support pull
                let v: Vec<f64> = (0..d).map(|j| if in_s[j] { signs[j] * w[j] } else { 0.0 }).collect();
                let g = solver.sigma_times(&v);
                for j in 0..d {
                    if !in_s[j] {
                        signs[j] = if g[j] > 0.0 { -1.0 } else { 1.0 };
                    }
                }
            }
            _ => {
                for s in signs.iter_mut() {
                    *s = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                }
                let raw: Vec<f64> = (0..d).map(|_| -rng.random::<f64>().max(1e-300).ln()).collect();
                let mut sorted = Vec::new();
                let total: f64 = raw.iter().sum();
                let scaled: Vec<f64> = raw.iter().map(|r| r / total).collect();
                project_capped(&scaled, &in_s, &mut w, &mut sorted);
            }
        }
        let f = solver.solve_refined(&mut signs, &mut w);
        best = best.min(f);
    }
    Ok((s_size * best.max(0.0)).sqrt())
}

struct Scratch {
    y: Vec<f64>,
    w_new: Vec<f64>,
    grad: Vec<f64>,
    v: Vec<f64>,
    sorted: Vec<f64>,
}

impl Scratch {
    fn new(d: usize) -> Self {
        Self {
            y: vec![0.0; d],
            w_new: vec![0.0; d],
            grad: vec![0.0; d],
            v: vec![0.0; d],
            sorted: Vec::with_capacity(d),
        }
    }
}

struct OrthantSolver<'a> {
    snap: &'a CovarianceSnapshot,
    in_s: &'a [bool],
    step: f64,
    cfg: &'a CompatConfig,
    buf: Scratch,
}

impl OrthantSolver<'_> {
    fn sigma_times(&self, v: &[f64]) -> Vec<f64> {
        let d = self.snap.dim();
        let m = self.snap.matrix();
        (0..d).map(|i| crate::linalg::dot(&m[i * d..(i + 1) * d], v)).collect()
    }

    fn objective(&mut self, signs: &[f64], w: &[f64]) -> f64 {
        for j in 0..w.len() {
            self.buf.v[j] = signs[j] * w[j];
        }
        self.snap.quad(&self.buf.v)
    }

    /// Solves the QP on the current orthant, flips signs of zero coordinates whose
    /// gradient points into the neighbouring orthant, and repeats.
    fn solve_refined(&mut self, signs: &mut [f64], w: &mut [f64]) -> f64 {
        let mut f = self.solve(signs, w);
        for _ in 0..50 {
            let v: Vec<f64> = signs.iter().zip(w.iter()).map(|(s, x)| s * x).collect();
            let g = self.sigma_times(&v);
            let mut flipped = false;
            for j in 0..w.len() {
                if w[j] == 0.0 && signs[j] * g[j] > 1e-14 {
                    signs[j] = -signs[j];
                    flipped = true;
                }
            }
            if !flipped {
                break;
            }
            let next = self.solve(signs, w);
            if next >= f - 1e-15 {
                f = f.min(next);
                break;
            }
            f = next;
        }
        f
    }

    fn solve(&mut self, signs: &[f64], w: &mut [f64]) -> f64 {
        let d = w.len();
        self.buf.y.copy_from_slice(w);
        let mut f = self.objective(signs, w);
        let mut momentum = 1.0f64;
        for _ in 0..self.cfg.max_iter {
            for j in 0..d {
                self.buf.v[j] = signs[j] * self.buf.y[j];
            }
            let g = self.sigma_times(&self.buf.v);
            for j in 0..d {
                self.buf.grad[j] = self.buf.y[j] - self.step * 2.0 * signs[j] * g[j];
            }
            let target = std::mem::take(&mut self.buf.grad);
            let mut w_new = std::mem::take(&mut self.buf.w_new);
            project_capped(&target, self.in_s, &mut w_new, &mut self.buf.sorted);
            self.buf.grad = target;
            let f_new = self.objective(signs, &w_new);
            let moved = w_new.iter().zip(w.iter()).map(|(a, b)| (a - b).abs()).sum::<f64>();
            if f_new > f {
                // adaptive restart
                momentum = 1.0;
                self.buf.y.copy_from_slice(w);
                self.buf.w_new = w_new;
                continue;
            }
            let next = 0.5 * (1.0 + (1.0 + 4.0 * momentum * momentum).sqrt());
            let beta = (momentum - 1.0) / next;
            for j in 0..d {
                self.buf.y[j] = w_new[j] + beta * (w_new[j] - w[j]);
            }
            momentum = next;
            w.copy_from_slice(&w_new);
            self.buf.w_new = w_new;
            let done = moved <= self.cfg.tol || f - f_new <= self.cfg.tol * f.abs().max(1e-300) && moved <= 1e-9;
            f = f_new;
            if done {
                break;
            }
        }
        f
    }
}

/// Euclidean projection onto `{w ≥ 0, Σw = 1, Σ_{Sᶜ} w ≤ 3/4}`.
fn project_capped(y: &[f64], in_s: &[bool], out: &mut [f64], sorted: &mut Vec<f64>) {
    let all: Vec<usize> = (0..y.len()).collect();
    project_simplex(y, &all, 1.0, out, sorted);
    let sc_mass: f64 = (0..y.len()).filter(|&j| !in_s[j]).map(|j| out[j]).sum();
    if sc_mass <= SC_MASS {
        return;
    }
    let s_idx: Vec<usize> = (0..y.len()).filter(|&j| in_s[j]).collect();
    let sc_idx: Vec<usize> = (0..y.len()).filter(|&j| !in_s[j]).collect();
    project_simplex(y, &s_idx, 1.0 - SC_MASS, out, sorted);
    project_simplex(y, &sc_idx, SC_MASS, out, sorted);
}

/// Projects `y[idx]` onto the simplex of total `mass`, writing into `out[idx]`.
fn project_simplex(y: &[f64], idx: &[usize], mass: f64, out: &mut [f64], sorted: &mut Vec<f64>) {
    if idx.is_empty() {
        return;
    }
    sorted.clear();
    sorted.extend(idx.iter().map(|&j| y[j]));
    sorted.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (k, &u) in sorted.iter().enumerate() {
        cum += u;
        let cand = (cum - mass) / (k + 1) as f64;
        if u - cand > 0.0 {
            theta = cand;
        }
    }
    for &j in idx {
        out[j] = (y[j] - theta).max(0.0);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;
    use rand::Rng;

    fn random_snapshot(d: usize, seed: u64) -> CovarianceSnapshot {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = 2 * d;
        let x: Vec<f64> = (0..n * d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut m = vec![0.0; d * d];
        for r in 0..n {
            for i in 0..d {
                for j in 0..d {
                    m[i * d + j] += x[r * d + i] * x[r * d + j] / n as f64;
                }
            }
        }
        CovarianceSnapshot::from_matrix(n, d, m).unwrap()
    }

    /// Global minimum by enumerating every orthant, every positive set and both
    /// states of the cone constraint, solving each face's equality-constrained KKT
    /// system directly.
    fn brute_force(snap: &CovarianceSnapshot, support: &[usize]) -> f64 {
        let d = snap.dim();
        let in_s: Vec<bool> = (0..d).map(|j| support.contains(&j)).collect();
        let mut best = f64::INFINITY;
        for pattern in 0u32..(1 << d) {
            let signs: Vec<f64> = (0..d).map(|j| if pattern >> j & 1 == 1 { -1.0 } else { 1.0 }).collect();
            for subset in 1u32..(1 << d) {
                let a: Vec<usize> = (0..d).filter(|j| subset >> j & 1 == 1).collect();
                let a_sc: Vec<usize> = (0..a.len()).filter(|&i| !in_s[a[i]]).collect();
                for active in [false, true] {
                    if active && (a_sc.is_empty() || a_sc.len() == a.len()) {
                        continue;
                    }
                    let n = a.len();
                    let rows = if active { 2 } else { 1 };
                    let mut kkt = DMatrix::zeros(n + rows, n + rows);
                    for i in 0..n {
                        for j in 0..n {
                            kkt[(i, j)] = 2.0 * signs[a[i]] * signs[a[j]] * snap.at(a[i], a[j]);
                        }
                        kkt[(i, n)] = 1.0;
                        kkt[(n, i)] = 1.0;
                    }
                    let mut rhs = DVector::zeros(n + rows);
                    rhs[n] = 1.0;
                    if active {
                        for &i in &a_sc {
                            kkt[(i, n + 1)] = 1.0;
                            kkt[(n + 1, i)] = 1.0;
                        }
                        rhs[n + 1] = SC_MASS;
                    }
                    let Some(sol) = kkt.lu().solve(&rhs) else { continue };
                    let w: Vec<f64> = (0..n).map(|i| sol[i]).collect();
                    if w.iter().any(|x| *x < -1e-12) {
                        continue;
                    }
                    let sc: f64 = a_sc.iter().map(|&i| w[i]).sum();
                    if sc > SC_MASS + 1e-12 {
                        continue;
                    }
                    let mut v = vec![0.0; d];
                    for i in 0..n {
                        v[a[i]] = signs[a[i]] * w[i];
                    }
                    best = best.min(snap.quad(&v));
                }
            }
        }
        (support.len() as f64 * best).sqrt()
    }

    #[test]
    fn matches_exhaustive_faces_on_small_instances() {
        for seed in 0..6 {
            let snap = random_snapshot(5, seed);
            let support = [seed as usize % 5, (seed as usize + 2) % 5];
            let est = compatibility_estimate(&snap, &support, 64).unwrap();
            let exact = brute_force(&snap, &support);
            assert!(est >= exact - 1e-9, "seed {seed}: {est} < {exact}");
            assert!(est - exact < 1e-6, "seed {seed}: {est} vs {exact}");
        }
    }

    /// For the identity the optimum spreads `v` evenly over `S` and over `Sᶜ`, so
    /// only the off-support mass `m` is free:
    /// `min_m (1−m)²/s + m²/(d−s)` subject to `m ≤ 3/4`.
    fn identity_oracle(d: usize, s: usize) -> f64 {
        let n = 1_000_000;
        let best = (0..=n)
            .map(|i| 0.75 * i as f64 / n as f64)
            .map(|m| (1.0 - m).powi(2) / s as f64 + m * m / (d - s) as f64)
            .fold(f64::INFINITY, f64::min);
        (s as f64 * best).sqrt()
    }

    #[test]
    fn identity_matches_symmetric_oracle() {
        for (d, s) in [(10, 2), (50, 2), (50, 5), (200, 3)] {
            let est = compatibility_estimate(&CovarianceSnapshot::identity(d), &(0..s).collect::<Vec<_>>(), 16).unwrap();
            let oracle = identity_oracle(d, s);
            assert!((est - oracle).abs() < 1e-6, "d={d} s={s}: {est} vs {oracle}");
        }
        // frozen from the oracle: √((1 + 18/48)/16)
        let est = compatibility_estimate(&CovarianceSnapshot::identity(50), &[0, 1], 16).unwrap();
        assert!((est - 0.293_151).abs() < 1e-5, "{est}");
    }

    #[test]
    fn identity_tends_to_one_quarter() {
        let est = compatibility_estimate(&CovarianceSnapshot::identity(2000), &[0, 1], 4).unwrap();
        assert!((est - 0.25).abs() < 0.01, "{est}");
    }

    #[test]
    fn homogeneous_in_scale() {
        let snap = random_snapshot(8, 11);
        let base = compatibility_estimate(&snap, &[1, 4], 32).unwrap();
        let scaled = compatibility_estimate(&snap.scaled(4.0), &[1, 4], 32).unwrap();
        assert!((scaled - 2.0 * base).abs() < 1e-6 * base.max(1.0));
    }

    #[test]
    fn null_direction_in_cone_gives_zero() {
        // Σ = I − uuᵀ with u = (e0 + e1)/√2 has u in its null space and u on S.
        let d = 6;
        let mut m = vec![0.0; d * d];
        for i in 0..d {
            m[i * d + i] = 1.0;
        }
        for i in 0..2 {
            for j in 0..2 {
                m[i * d + j] -= 0.5;
            }
        }
        let snap = CovarianceSnapshot::from_matrix(1, d, m).unwrap();
        assert!(compatibility_estimate(&snap, &[0, 1], 8).unwrap() < 1e-6);
    }

    #[test]
    fn bounded_by_sparse_eigenvalue() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for seed in 0..5 {
            let snap = random_snapshot(12, 100 + seed);
            let support = [0, 5, 9];
            let est = compatibility_estimate(&snap, &support, 16).unwrap();
            let (_, rho_max) = crate::diagnostics::sparse_eigen_probe(&snap, 3, 0, &mut rng).unwrap();
            assert!(est <= (3.0 * rho_max).sqrt() + 1e-12);
        }
    }

    #[test]
    fn projection_respects_cap() {
        let in_s = [true, false, false, false];
        let mut out = [0.0; 4];
        let mut buf = Vec::new();
        project_capped(&[0.0, 1.0, 1.0, 1.0], &in_s, &mut out, &mut buf);
        assert!((out.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!((out[0] - 0.25).abs() < 1e-15);
        assert!(out[1..].iter().all(|x| (x - 0.25).abs() < 1e-15));
        project_capped(&[0.9, 0.1, 0.0, 0.0], &in_s, &mut out, &mut buf);
        assert!((out[0] - 0.9).abs() < 1e-15 && (out[1] - 0.1).abs() < 1e-15);
    }

    #[test]
    fn rejects_empty_support() {
        assert!(compatibility_estimate(&CovarianceSnapshot::identity(3), &[], 1).is_err());
        assert!(compatibility_estimate(&CovarianceSnapshot::identity(3), &[3], 1).is_err());
    }
}
