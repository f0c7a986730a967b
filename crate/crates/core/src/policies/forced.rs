//! Forced-sampling baselines (LASSO-bandit and OLS-bandit) in the shared-parameter
//! form.
//!
//! Both keep two estimators: one fit on forced rounds only and one fit on every
//! round. Selection screens arms with the first and picks among the survivors with
//! the second.

use crate::error::{check_dim, Error, Result};
use crate::linalg::{argmax, dot};
use crate::model::{ContextRound, Observation};
use crate::policies::Policy;
use crate::solvers::{lasso_solve, ridge_solve, DesignState, LassoConfig};

/// Doubling-block forcing schedule.
///
/// With `n = K·q` and `u = t − 1 + n`, block `i` covers `u ∈ [2^i·n, 2^{i+1}·n)`.
/// The first `n` slots of every block are forced, `q` consecutive slots per arm in
/// arm order, so rounds `1..=n` force every arm and each block doubles in length.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ForcedSamplingPlan {
    pub q: usize,
    pub k: usize,
}

impl ForcedSamplingPlan {
    pub fn new(q: usize, k: usize) -> Result<Self> {
        if q == 0 || k == 0 {
            return Err(Error::Config(format!("forced sampling needs q >= 1 and K >= 1 (got q={q}, K={k})")));
        }
        Ok(Self { q, k })
    }

    pub fn forced_arm(&self, t: usize) -> Option<usize> {
        if t == 0 {
            return None;
        }
        let n = self.k * self.q;
        let u = t - 1 + n;
        let block = usize::BITS - 1 - (u / n).leading_zeros();
        let offset = u - (n << block);
        (offset < n).then(|| offset / self.q)
    }
}

/// Keep arms whose screening score is within `h/2` of the best, then return the
/// lowest-index maximizer of the final score among them.
pub fn two_stage_select(round: &ContextRound, forced_estimate: &[f64], all_estimate: &[f64], h: f64) -> Result<usize> {
    check_dim(round.dim(), forced_estimate.len())?;
    check_dim(round.dim(), all_estimate.len())?;
    let screen: Vec<f64> = round.arms().iter().map(|x| dot(x, forced_estimate)).collect();
    let top = screen.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let cutoff = top - h / 2.0;
    argmax(round.arms().iter().zip(&screen).map(|(x, &s)| {
        if s >= cutoff {
            dot(x, all_estimate)
        } else {
            f64::NEG_INFINITY
        }
    }))
    .ok_or_else(|| Error::Config("round has no arms".into()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ForcedEstimator {
    /// Forced-sample penalty `λ1` is fixed; the all-sample penalty follows
    /// `λ2_0·√((ln t + ln d)/t)`.
    Lasso { lambda1: f64, lambda2_0: f64 },
    /// Least squares with a vanishing ridge of `1e-10·trace(gram)/d`.
    Ols,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForcedConfig {
    pub q: usize,
    pub h: f64,
    pub estimator: ForcedEstimator,
    pub lasso: LassoConfig,
}

impl ForcedConfig {
    pub fn lasso_bandit() -> Self {
        Self {
            q: 1,
            h: 5.0,
            estimator: ForcedEstimator::Lasso {
                lambda1: 0.5,
                lambda2_0: 0.5,
            },
            lasso: LassoConfig::default(),
        }
    }

    pub fn ols_bandit() -> Self {
        Self {
            q: 1,
            h: 1.0,
            estimator: ForcedEstimator::Ols,
            lasso: LassoConfig::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ForcedBaseline {
    id: String,
    cfg: ForcedConfig,
    plan: Option<ForcedSamplingPlan>,
    forced: DesignState,
    all: DesignState,
    forced_beta: Vec<f64>,
    all_beta: Vec<f64>,
    forced_rounds: usize,
    solver_failures: usize,
}

impl ForcedBaseline {
    pub fn new(id: impl Into<String>, d: usize, cfg: ForcedConfig) -> Result<Self> {
        if d == 0 {
            return Err(Error::Config("dimension must be >= 1".into()));
        }
        if cfg.q == 0 {
            return Err(Error::Config("forced sampling q must be >= 1".into()));
        }
        if !(cfg.h >= 0.0) {
            return Err(Error::Config(format!("localization h must be >= 0, got {}", cfg.h)));
        }
        if let ForcedEstimator::Lasso { lambda1, lambda2_0 } = cfg.estimator {
            if !(lambda1 >= 0.0 && lambda2_0 >= 0.0) {
                return Err(Error::Config("lasso-bandit penalties must be >= 0".into()));
            }
        }
        Ok(Self {
            id: id.into(),
            cfg,
            plan: None,
            forced: DesignState::new(d),
            all: DesignState::new(d),
            forced_beta: vec![0.0; d],
            all_beta: vec![0.0; d],
            forced_rounds: 0,
            solver_failures: 0,
        })
    }

    pub fn lasso_bandit(d: usize) -> Result<Self> {
        Self::new("lasso_bandit", d, ForcedConfig::lasso_bandit())
    }

    pub fn ols_bandit(d: usize) -> Result<Self> {
        Self::new("ols_bandit", d, ForcedConfig::ols_bandit())
    }

    pub fn forced_rounds(&self) -> usize {
        self.forced_rounds
    }

    pub fn estimates(&self) -> (&[f64], &[f64]) {
        (&self.forced_beta, &self.all_beta)
    }

    fn plan_for(&mut self, k: usize) -> Result<ForcedSamplingPlan> {
        match self.plan {
            Some(p) if p.k == k => Ok(p),
            Some(p) => Err(Error::Config(format!("arm count changed from {} to {k}", p.k))),
            None => {
                let p = ForcedSamplingPlan::new(self.cfg.q, k)?;
                self.plan = Some(p);
                Ok(p)
            }
        }
    }

    fn fit(&mut self, state_is_forced: bool) -> Result<()> {
        let (state, warm) = if state_is_forced {
            (&self.forced, &self.forced_beta)
        } else {
            (&self.all, &self.all_beta)
        };
        let beta = match self.cfg.estimator {
            ForcedEstimator::Lasso { lambda1, lambda2_0 } => {
                let lambda = if state_is_forced {
                    lambda1
                } else {
                    let t = state.t() as f64;
                    lambda2_0 * ((t.ln() + (state.dim() as f64).ln()).max(0.0) / t).sqrt()
                };
                let sol = lasso_solve(state, lambda, Some(warm), &self.cfg.lasso)?;
                if !sol.converged {
                    self.solver_failures += 1;
                }
                sol.beta_hat
            }
            ForcedEstimator::Ols => ols_fit(state)?,
        };
        if state_is_forced {
            self.forced_beta = beta;
        } else {
            self.all_beta = beta;
        }
        Ok(())
    }
}

fn ols_fit(state: &DesignState) -> Result<Vec<f64>> {
    let d = state.dim() as f64;
    let base = 1e-10 * state.trace() / d;
    let mut ridge = if base > 0.0 { base } else { 1e-10 };
    for _ in 0..8 {
        match ridge_solve(state, ridge) {
            Ok(b) => return Ok(b),
            Err(Error::Numeric(_)) => ridge *= 100.0,
            Err(e) => return Err(e),
        }
    }
    ridge_solve(state, ridge)
}

impl Policy for ForcedBaseline {
    fn id(&self) -> &str {
        &self.id
    }

    fn select(&mut self, round: &ContextRound) -> Result<usize> {
        check_dim(self.all.dim(), round.dim())?;
        let plan = self.plan_for(round.k())?;
        if let Some(a) = plan.forced_arm(round.t) {
            return Ok(a);
        }
        two_stage_select(round, &self.forced_beta, &self.all_beta, self.cfg.h)
    }

    fn update(&mut self, obs: &Observation) -> Result<()> {
        let was_forced = self
            .plan
            .and_then(|p| p.forced_arm(obs.t))
            .is_some_and(|a| a == obs.chosen_arm);
        self.all.update(&obs.feature, obs.reward)?;
        if was_forced {
            self.forced.update(&obs.feature, obs.reward)?;
            self.forced_rounds += 1;
            self.fit(true)?;
        }
        self.fit(false)
    }

    fn solver_failures(&self) -> usize {
        self.solver_failures
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn round(arms: Vec<Vec<f64>>) -> ContextRound {
        ContextRound::new(1, arms, 10.0).unwrap()
    }

    #[test]
    fn first_block_forces_each_arm_once() {
        let p = ForcedSamplingPlan::new(1, 5).unwrap();
        let got: Vec<_> = (1..=5).map(|t| p.forced_arm(t)).collect();
        assert_eq!(got, (0..5).map(Some).collect::<Vec<_>>());
        assert_eq!(p.forced_arm(0), None);
    }

    #[test]
    fn unforced_tail_of_block() {
        let p = ForcedSamplingPlan::new(1, 5).unwrap();
        // second block u ∈ [10, 20) is t ∈ [6, 15]; forced t = 6..10
        assert_eq!(p.forced_arm(6), Some(0));
        assert_eq!(p.forced_arm(10), Some(4));
        assert_eq!(p.forced_arm(11), None);
        assert_eq!(p.forced_arm(15), None);
        assert_eq!(p.forced_arm(16), Some(0));
        assert_eq!(p.forced_arm(500), None);
    }

    #[test]
    fn q_consecutive_slots_per_arm() {
        let p = ForcedSamplingPlan::new(2, 3).unwrap();
        let got: Vec<_> = (1..=6).map(|t| p.forced_arm(t).unwrap()).collect();
        assert_eq!(got, vec![0, 0, 1, 1, 2, 2]);
    }

    #[test]
    fn forcing_count_is_logarithmic() {
        // Enumerate block boundaries directly: block i spans u ∈ [2^i·n, 2^{i+1}·n).
        let (q, k, horizon) = (1usize, 5usize, 10_000usize);
        let p = ForcedSamplingPlan::new(q, k).unwrap();
        let mut counts = vec![0usize; k];
        for t in 1..=horizon {
            if let Some(a) = p.forced_arm(t) {
                counts[a] += 1;
            }
        }
        let n = k * q;
        let mut expected = 0;
        let mut start = n;
        while start - n < horizon {
            let last_u = horizon - 1 + n;
            expected += (last_u + 1).min(start + n) - start;
            start *= 2;
        }
        assert_eq!(counts.iter().sum::<usize>(), expected);
        for c in &counts {
            // 11 blocks start before t = 10⁴ for n = 5
            assert_eq!(*c, 11);
        }
        let log_t = (horizon as f64).log2();
        assert!((counts[0] as f64) < 1.5 * log_t);
    }

    #[test]
    fn hand_screening() {
        let r = round(vec![vec![1.0, 0.5], vec![0.9, 0.8], vec![0.2, 0.9]]);
        let forced = [1.0, 0.0];
        let all = [0.0, 1.0];
        assert_eq!(two_stage_select(&r, &forced, &all, 0.4).unwrap(), 1);
    }

    #[test]
    fn infinite_h_is_greedy_and_zero_h_is_screen_argmax() {
        let r = round(vec![vec![1.0, 0.5], vec![0.9, 0.8], vec![0.2, 0.9]]);
        let forced = [1.0, 0.0];
        let all = [0.0, 1.0];
        assert_eq!(two_stage_select(&r, &forced, &all, f64::INFINITY).unwrap(), 2);
        assert_eq!(two_stage_select(&r, &forced, &all, 0.0).unwrap(), 0);
    }

    #[test]
    fn forced_rounds_feed_forced_design() {
        let mut p = ForcedBaseline::ols_bandit(2).unwrap();
        for t in 1..=12 {
            let r = ContextRound::new(t, vec![vec![1.0, 0.0], vec![0.0, 1.0]], 1.0).unwrap();
            let a = p.select(&r).unwrap();
            if t <= 2 {
                assert_eq!(a, t - 1);
            }
            let y = if a == 0 { 1.0 } else { 2.0 };
            p.update(&Observation::from_round(&r, a, y)).unwrap();
        }
        // forced t: 1,2 | 3,4 | 7,8
        assert_eq!(p.forced_rounds(), 6);
        let (f, a) = p.estimates();
        assert!((f[0] - 1.0).abs() < 1e-6 && (f[1] - 2.0).abs() < 1e-6);
        assert!((a[1] - 2.0).abs() < 1e-6);
    }
}
