//! The ℓ1-confidence-ball UCB policy.
//!
//! Before round `t` the policy holds the LASSO fit `β̂_{t−1}` on the first `t − 1`
//! observations (penalty `λ_{t−1}`) and the radius `τ_{t−1}`; it plays
//! `argmax_a ⟨x_a, β̂_{t−1}⟩ + τ_{t−1}‖x_a‖∞`. Before any data the center is 0 and
//! the radius is the input `τ0`.

use crate::error::{check_dim, Error, Result};
use crate::linalg::{argmax, dot, norm_inf, norm_l1};
use crate::model::{ContextRound, Observation};
use crate::policies::Policy;
use crate::solvers::{lasso_solve, DesignState, LassoConfig};

/// `λ_t = λ0·√((ln d + ln t)/t)` and `τ_t = τ0·√((ln d + ln t)/t)`.
pub fn schedule(lambda0: f64, tau0: f64, t: usize, d: usize) -> (f64, f64) {
    debug_assert!(t >= 1 && d >= 1);
    let tf = t as f64;
    let rate = (((d as f64).ln() + tf.ln()) / tf).sqrt();
    (lambda0 * rate, tau0 * rate)
}

/// `{β : ‖β − center‖₁ ≤ radius}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfidenceBall {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl ConfidenceBall {
    pub fn new(center: Vec<f64>, radius: f64) -> Result<Self> {
        if !(radius >= 0.0) {
            return Err(Error::Config(format!("ball radius must be >= 0, got {radius}")));
        }
        Ok(Self { center, radius })
    }

    /// `max_{β ∈ ball} ⟨x, β⟩ = ⟨x, center⟩ + radius·‖x‖∞`.
    pub fn optimistic_value(&self, x: &[f64]) -> f64 {
        dot(x, &self.center) + self.radius * norm_inf(x)
    }

    pub fn contains(&self, beta: &[f64]) -> bool {
        crate::linalg::l1_distance(beta, &self.center) <= self.radius
    }
}

/// Joint maximization of `⟨x, β⟩` over arms and the ball, in closed form.
pub fn l1ball_select(round: &ContextRound, ball: &ConfidenceBall) -> Result<usize> {
    check_dim(round.dim(), ball.center.len())?;
    argmax(round.arms().iter().map(|x| ball.optimistic_value(x)))
        .ok_or_else(|| Error::Config("round has no arms".into()))
}

/// Which constants the policy is run with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Deserialize, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ConstantMode {
    /// `λ0 = 2√2·σ·x_max`, `τ0 = 384√2·s0·σ·x_max/φ0²`.
    Theoretical,
    /// `λ0 = 0.5`, `τ0 = 1`.
    Practical,
}

/// When the LASSO center is refit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Deserialize, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ResolveSchedule {
    #[default]
    Every,
    /// Refit only after `t ∈ {1, 2, 4, 8, …}` observations.
    Doubling,
}

impl ResolveSchedule {
    fn due(self, t: usize) -> bool {
        match self {
            ResolveSchedule::Every => true,
            ResolveSchedule::Doubling => t.is_power_of_two(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct L1BallConfig {
    pub lambda0: f64,
    pub tau0: f64,
    pub resolve: ResolveSchedule,
    pub lasso: LassoConfig,
}

impl L1BallConfig {
    pub fn practical() -> Self {
        Self {
            lambda0: 0.5,
            tau0: 1.0,
            resolve: ResolveSchedule::Every,
            lasso: LassoConfig::default(),
        }
    }

    /// Constants under which the regret guarantee is stated; `phi0` is the
    /// compatibility constant of the optimal-arm covariance.
    pub fn theoretical(s0: usize, sigma: f64, x_max: f64, phi0: f64) -> Self {
        let sqrt2 = std::f64::consts::SQRT_2;
        Self {
            lambda0: 2.0 * sqrt2 * sigma * x_max,
            tau0: 384.0 * sqrt2 * s0 as f64 * sigma * x_max / (phi0 * phi0),
            resolve: ResolveSchedule::Every,
            lasso: LassoConfig::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct L1BallPolicy {
    id: String,
    cfg: L1BallConfig,
    design: DesignState,
    beta_hat: Vec<f64>,
    radius: f64,
    solver_failures: usize,
}

impl L1BallPolicy {
    pub fn new(d: usize, cfg: L1BallConfig) -> Result<Self> {
        Self::with_id("l1ball", d, cfg)
    }

    /// LASSO-greedy control: the same estimator with a zero-radius ball.
    pub fn greedy(d: usize, mut cfg: L1BallConfig) -> Result<Self> {
        cfg.tau0 = 0.0;
        Self::with_id("greedy", d, cfg)
    }

    pub fn with_id(id: impl Into<String>, d: usize, cfg: L1BallConfig) -> Result<Self> {
        if d == 0 {
            return Err(Error::Config("dimension must be >= 1".into()));
        }
        if !(cfg.lambda0 >= 0.0) || !(cfg.tau0 >= 0.0) {
            return Err(Error::Config(format!(
                "lambda0 and tau0 must be >= 0 (got {}, {})",
                cfg.lambda0, cfg.tau0
            )));
        }
        Ok(Self {
            id: id.into(),
            cfg,
            design: DesignState::new(d),
            beta_hat: vec![0.0; d],
            radius: cfg.tau0,
            solver_failures: 0,
        })
    }

    pub fn center(&self) -> &[f64] {
        &self.beta_hat
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn rounds_observed(&self) -> usize {
        self.design.t()
    }

    pub fn design(&self) -> &DesignState {
        &self.design
    }

    pub fn config(&self) -> &L1BallConfig {
        &self.cfg
    }

    pub fn estimation_error_l1(&self, beta_star: &[f64]) -> f64 {
        crate::linalg::l1_distance(&self.beta_hat, beta_star)
    }

    pub fn center_sparsity(&self) -> usize {
        self.beta_hat.iter().filter(|b| **b != 0.0).count()
    }

    pub fn center_l1(&self) -> f64 {
        norm_l1(&self.beta_hat)
    }
}

impl Policy for L1BallPolicy {
    fn id(&self) -> &str {
        &self.id
    }

    fn select(&mut self, round: &ContextRound) -> Result<usize> {
        check_dim(self.design.dim(), round.dim())?;
        argmax(
            round
                .arms()
                .iter()
                .map(|x| dot(x, &self.beta_hat) + self.radius * norm_inf(x)),
        )
        .ok_or_else(|| Error::Config("round has no arms".into()))
    }

    fn update(&mut self, obs: &Observation) -> Result<()> {
        self.design.update(&obs.feature, obs.reward)?;
        let t = self.design.t();
        let (lambda_t, tau_t) = schedule(self.cfg.lambda0, self.cfg.tau0, t, self.design.dim());
        if self.cfg.resolve.due(t) {
            let sol = lasso_solve(&self.design, lambda_t, Some(&self.beta_hat), &self.cfg.lasso)?;
            if !sol.converged {
                self.solver_failures += 1;
            }
            self.beta_hat = sol.beta_hat;
        }
        self.radius = tau_t;
        Ok(())
    }

    fn confidence_ball(&self) -> Option<ConfidenceBall> {
        Some(ConfidenceBall {
            center: self.beta_hat.clone(),
            radius: self.radius,
        })
    }

    fn solver_failures(&self) -> usize {
        self.solver_failures
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regret::best_arm;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn round(arms: Vec<Vec<f64>>) -> ContextRound {
        ContextRound::new(1, arms, 10.0).unwrap()
    }

    #[test]
    fn schedule_values() {
        let (l, t) = schedule(0.7, 2.0, 1, 50);
        assert!((l - 0.7 * 50f64.ln().sqrt()).abs() < 1e-15);
        assert!((t - 2.0 * 50f64.ln().sqrt()).abs() < 1e-15);
        // 0.5·√((ln 100 + ln 100)/100)
        let (l, _) = schedule(0.5, 1.0, 100, 100);
        assert!((l - 0.151_744).abs() < 1e-5, "{l}");
    }

    #[test]
    fn theoretical_constants() {
        let c = L1BallConfig::theoretical(5, 1.0, 1.0, 0.5);
        assert!((c.lambda0 - 2.828_427_124_746_19).abs() < 1e-12);
        let expected = 384.0 * std::f64::consts::SQRT_2 * 5.0 / 0.25;
        assert!((c.tau0 - expected).abs() < 1e-9);
    }

    #[test]
    fn zero_radius_is_greedy() {
        let r = round(vec![vec![0.2, 1.0], vec![0.9, -0.1], vec![0.3, 0.3]]);
        let center = vec![1.0, 0.5];
        let ball = ConfidenceBall::new(center.clone(), 0.0).unwrap();
        assert_eq!(l1ball_select(&r, &ball).unwrap(), best_arm(&r, &center).unwrap());
    }

    #[test]
    fn hand_evaluated_bonus() {
        let r = round(vec![vec![1.0, 0.0], vec![0.6, 0.9]]);
        let ball = ConfidenceBall::new(vec![1.0, 0.0], 0.5).unwrap();
        assert_eq!(ball.optimistic_value(r.arm(0)), 1.5);
        assert!((ball.optimistic_value(r.arm(1)) - 1.05).abs() < 1e-15);
        assert_eq!(l1ball_select(&r, &ball).unwrap(), 0);
    }

    #[test]
    fn equal_sup_norms_reduce_to_greedy() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..200 {
            let arms: Vec<Vec<f64>> = (0..4)
                .map(|_| {
                    let mut x: Vec<f64> = (0..5).map(|_| rng.random_range(-0.9..0.9)).collect();
                    x[rng.random_range(0..5)] = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                    x
                })
                .collect();
            let r = round(arms);
            let center: Vec<f64> = (0..5).map(|_| rng.random_range(-1.0..1.0)).collect();
            let greedy = best_arm(&r, &center).unwrap();
            for radius in [0.1, 1.0, 7.5] {
                let ball = ConfidenceBall::new(center.clone(), radius).unwrap();
                assert_eq!(l1ball_select(&r, &ball).unwrap(), greedy);
            }
        }
    }

    fn vertex_maximum(x: &[f64], ball: &ConfidenceBall) -> f64 {
        // Linear objective over a cross-polytope: best of the 2d vertices.
        let mut best = f64::NEG_INFINITY;
        for j in 0..x.len() {
            for s in [-1.0, 1.0] {
                let mut beta = ball.center.clone();
                beta[j] += s * ball.radius;
                best = best.max(dot(x, &beta));
            }
        }
        best
    }

    #[test]
    fn closed_form_matches_vertex_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..10_000 {
            let d = rng.random_range(1..8);
            let k = rng.random_range(2..6);
            let arms: Vec<Vec<f64>> = (0..k)
                .map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect())
                .collect();
            let r = round(arms);
            let center: Vec<f64> = (0..d).map(|_| rng.random_range(-2.0..2.0)).collect();
            let ball = ConfidenceBall::new(center, rng.random_range(0.0..3.0)).unwrap();
            let joint = argmax(r.arms().iter().map(|x| vertex_maximum(x, &ball))).unwrap();
            assert_eq!(l1ball_select(&r, &ball).unwrap(), joint);
        }
    }

    #[test]
    fn negative_radius_rejected() {
        assert!(ConfidenceBall::new(vec![0.0], -1e-9).is_err());
    }

    #[test]
    fn starts_at_zero_center_with_input_radius() {
        let p = L1BallPolicy::new(4, L1BallConfig::practical()).unwrap();
        assert_eq!(p.center(), &[0.0; 4]);
        assert_eq!(p.radius(), 1.0);
    }

    #[test]
    fn first_round_picks_largest_sup_norm() {
        let mut p = L1BallPolicy::new(2, L1BallConfig::practical()).unwrap();
        let r = round(vec![vec![0.1, 0.2], vec![0.0, -0.8], vec![0.5, 0.5]]);
        assert_eq!(p.select(&r).unwrap(), 1);
    }

    #[test]
    fn heavy_penalty_keeps_center_at_zero() {
        let mut cfg = L1BallConfig::practical();
        cfg.lambda0 = 1e6;
        let mut p = L1BallPolicy::new(3, cfg).unwrap();
        let obs = Observation {
            t: 1,
            chosen_arm: 0,
            feature: vec![1.0, -0.5, 0.2],
            reward: 2.0,
        };
        p.update(&obs).unwrap();
        assert_eq!(p.center(), &[0.0; 3]);
        let (_, tau1) = schedule(1e6, 1.0, 1, 3);
        assert_eq!(p.radius(), tau1);
    }

    #[test]
    fn doubling_keeps_stale_center_between_refits() {
        let mut cfg = L1BallConfig::practical();
        cfg.resolve = ResolveSchedule::Doubling;
        cfg.lambda0 = 0.01;
        let mut p = L1BallPolicy::new(2, cfg).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut centers = Vec::new();
        for t in 1..=6 {
            let x = vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
            let y = x[0] - x[1];
            p.update(&Observation { t, chosen_arm: 0, feature: x, reward: y }).unwrap();
            centers.push(p.center().to_vec());
        }
        assert_eq!(centers[2], centers[1]);
        assert_ne!(centers[3], centers[2]);
        assert_eq!(centers[4], centers[3]);
        assert_eq!(centers[5], centers[3]);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn shared_sup_norm_makes_radius_irrelevant(
                arms in prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 4), 2..6),
                center in prop::collection::vec(-1.0f64..1.0, 4),
                r1 in 0.0f64..5.0,
                c in 0.1f64..10.0,
            ) {
                let r = round(arms).normalized_sup();
                let a = l1ball_select(&r, &ConfidenceBall::new(center.clone(), r1).unwrap()).unwrap();
                let b = l1ball_select(&r, &ConfidenceBall::new(center.clone(), c * r1).unwrap()).unwrap();
                if a != b {
                    let sa = dot(r.arm(a), &center);
                    let sb = dot(r.arm(b), &center);
                    prop_assert!((sa - sb).abs() < 1e-9);
                }
            }
        }
    }
}
