//! Seeded experiment orchestration.
//!
//! Each (policy, repetition) job is independent: the environment streams depend
//! only on `(master_seed, rep)` and the policy stream on `(master_seed, policy id,
//! rep)`, so results do not depend on scheduling or on which other jobs run.

use std::path::Path;

use rand::seq::SliceRandom;
use rayon::prelude::*;

use crate::diagnostics::{
    checkpoints, compatibility_estimate_with, estimate_phi0, optimal_fraction, sparse_eigen_probe, CompatConfig,
    CovarianceSnapshot, DiagnosticsReport, DiagnosticsRow,
};
use crate::env::{replay_load, stream_rng, stream_seed, EnvSpec, ReplayDataset, Simulator};
use crate::error::{Error, Result};
use crate::experiment::chart::{emit_chart, Series};
use crate::experiment::config::{EnvironmentConfig, ExperimentConfig, PolicySpec, ReplaySpec};
use crate::experiment::io::{mean_sd, summarize, write_rows, write_trace, DiagnosticsCsvRow, SummaryRow};
use crate::model::{Observation, TrueModel};
use crate::policies::{
    ConstantMode, ConstantPolicy, ForcedBaseline, ForcedConfig, ForcedEstimator, L1BallConfig, L1BallPolicy,
    OfulConfig, OfulPolicy, OraclePolicy, Policy, RandomPolicy,
};
use crate::regret::{best_arm, instant_regret, RegretTrace};
use crate::solvers::{DesignState, LassoConfig};

/// What a policy may know about the problem when it is built.
#[derive(Debug, Clone)]
pub struct PolicyContext<'a> {
    pub d: usize,
    pub x_max: f64,
    pub sigma: f64,
    pub s0: usize,
    pub beta: Option<&'a [f64]>,
    pub phi0: Option<f64>,
    pub mode: ConstantMode,
    pub seed: u64,
    pub default_arm: usize,
}

pub fn build_policy(spec: &PolicySpec, ctx: &PolicyContext<'_>) -> Result<Box<dyn Policy>> {
    let id = spec.id().to_string();
    let base = || -> Result<L1BallConfig> {
        Ok(match ctx.mode {
            ConstantMode::Practical => L1BallConfig::practical(),
            ConstantMode::Theoretical => {
                let phi0 = ctx
                    .phi0
                    .ok_or_else(|| Error::Config("theoretical constants need phi0".into()))?;
                L1BallConfig::theoretical(ctx.s0, ctx.sigma, ctx.x_max, phi0)
            }
        })
    };
    Ok(match spec {
        PolicySpec::L1ball {
            lambda0, tau0, resolve, ..
        } => {
            let mut cfg = if lambda0.is_some() && tau0.is_some() {
                L1BallConfig::practical()
            } else {
                base()?
            };
            cfg.lambda0 = lambda0.unwrap_or(cfg.lambda0);
            cfg.tau0 = tau0.unwrap_or(cfg.tau0);
            cfg.resolve = *resolve;
            Box::new(L1BallPolicy::with_id(id, ctx.d, cfg)?)
        }
        PolicySpec::Greedy { lambda0, resolve, .. } => {
            let mut cfg = match ctx.mode {
                ConstantMode::Practical => L1BallConfig::practical(),
                ConstantMode::Theoretical => L1BallConfig::theoretical(ctx.s0, ctx.sigma, ctx.x_max, 1.0),
            };
            cfg.lambda0 = lambda0.unwrap_or(cfg.lambda0);
            cfg.tau0 = 0.0;
            cfg.resolve = *resolve;
            Box::new(L1BallPolicy::with_id(id, ctx.d, cfg)?)
        }
        PolicySpec::LassoBandit {
            q, h, lambda1, lambda2, ..
        } => Box::new(ForcedBaseline::new(
            id,
            ctx.d,
            ForcedConfig {
                q: *q,
                h: *h,
                estimator: ForcedEstimator::Lasso {
                    lambda1: *lambda1,
                    lambda2_0: *lambda2,
                },
                lasso: LassoConfig::default(),
            },
        )?),
        PolicySpec::OlsBandit { q, h, .. } => Box::new(ForcedBaseline::new(
            id,
            ctx.d,
            ForcedConfig {
                q: *q,
                h: *h,
                estimator: ForcedEstimator::Ols,
                lasso: LassoConfig::default(),
            },
        )?),
        PolicySpec::Oful {
            lambda, delta, s_bound, ..
        } => Box::new(Named::new(
            id,
            OfulPolicy::new(
                ctx.d,
                OfulConfig {
                    lambda_ridge: *lambda,
                    delta: *delta,
                    r: ctx.sigma,
                    s_bound: *s_bound,
                    x_max: ctx.x_max,
                },
            )?,
        )),
        PolicySpec::Random { .. } => Box::new(Named::new(id, RandomPolicy::new(ctx.seed))),
        PolicySpec::Constant { arm, .. } => {
            Box::new(Named::new(id, ConstantPolicy::new(arm.unwrap_or(ctx.default_arm))))
        }
        PolicySpec::Oracle { .. } => {
            let beta = ctx
                .beta
                .ok_or_else(|| Error::Config("oracle policy needs the true parameter".into()))?;
            Box::new(Named::new(id, OraclePolicy::new(beta.to_vec())))
        }
    })
}

/// Gives a control policy the id it was configured with.
struct Named<P> {
    id: String,
    inner: P,
}

impl<P> Named<P> {
    fn new(id: String, inner: P) -> Self {
        Self { id, inner }
    }
}

impl<P: Policy> Policy for Named<P> {
    fn id(&self) -> &str {
        &self.id
    }

    fn select(&mut self, round: &crate::model::ContextRound) -> Result<usize> {
        self.inner.select(round)
    }

    fn update(&mut self, obs: &Observation) -> Result<()> {
        self.inner.update(obs)
    }

    fn confidence_ball(&self) -> Option<crate::policies::ConfidenceBall> {
        self.inner.confidence_ball()
    }

    fn solver_failures(&self) -> usize {
        self.inner.solver_failures()
    }
}

#[derive(Debug, Clone)]
pub struct RepResult {
    pub trace: RegretTrace,
    pub diagnostics: Option<DiagnosticsReport>,
    pub solver_failures: usize,
    pub phi0: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    /// Policy-major, repetitions ascending.
    pub results: Vec<RepResult>,
    pub summary: Vec<SummaryRow>,
    pub policy_order: Vec<String>,
}

impl ExperimentOutput {
    pub fn traces_for(&self, policy: &str) -> Vec<&RegretTrace> {
        self.results
            .iter()
            .filter(|r| r.trace.policy_id == policy)
            .map(|r| &r.trace)
            .collect()
    }

    pub fn mean_final_regret(&self, policy: &str) -> Option<f64> {
        let finals: Vec<f64> = self.traces_for(policy).iter().map(|t| t.cum_regret()).collect();
        (!finals.is_empty()).then(|| mean_sd(&finals).0)
    }
}

fn resolve_phi0(cfg: &ExperimentConfig, env: &EnvSpec, model: &TrueModel, rep: usize) -> Result<Option<f64>> {
    if cfg.constants != ConstantMode::Theoretical {
        return Ok(None);
    }
    if let Some(p) = cfg.theory.phi0 {
        return Ok(Some(p));
    }
    let delta_star = cfg
        .theory
        .delta_star
        .ok_or_else(|| Error::Config("theory.phi0 or theory.delta_star is required".into()))?;
    let mut rng = stream_rng(cfg.master_seed, "phi0", rep as u64);
    let est = estimate_phi0(env, model, delta_star, cfg.theory.phi0_rounds, model.s0(), &mut rng)?;
    if !(est.phi0 > 0.0) {
        return Err(Error::Numeric("estimated phi0 is zero".into()));
    }
    Ok(Some(est.phi0))
}

/// Runs one policy for one repetition of a simulated environment.
pub fn run_repetition(cfg: &ExperimentConfig, env: &EnvSpec, spec: &PolicySpec, rep: usize) -> Result<RepResult> {
    let sim = Simulator::new(env, cfg.master_seed, rep as u64)?.with_normalized_sup(cfg.normalize_sup);
    let model = sim.model().clone();
    let needs_phi0 = matches!(spec, PolicySpec::L1ball { lambda0: None, .. } | PolicySpec::L1ball { tau0: None, .. });
    let phi0 = if needs_phi0 { resolve_phi0(cfg, env, &model, rep)? } else { None };
    let seed = stream_seed(cfg.master_seed, spec.id(), rep as u64);
    let ctx = PolicyContext {
        d: model.dim(),
        x_max: model.x_max,
        sigma: model.sigma,
        s0: model.s0(),
        beta: Some(model.beta()),
        phi0,
        mode: cfg.constants,
        seed,
        default_arm: 0,
    };
    let mut policy = build_policy(spec, &ctx)?;
    let mut res = simulate(cfg, sim, policy.as_mut(), rep, seed)?;
    res.phi0 = phi0;
    Ok(res)
}

fn simulate(
    cfg: &ExperimentConfig,
    mut sim: Simulator,
    policy: &mut dyn Policy,
    rep: usize,
    seed: u64,
) -> Result<RepResult> {
    let model = sim.model().clone();
    let d = model.dim();
    let mut trace = RegretTrace::new(policy.id(), rep, seed);
    let mut design = cfg.diagnostics.then(|| DesignState::new(d));
    let cps = checkpoints(cfg.horizon);
    let mut next_cp = 0;
    let mut report = DiagnosticsReport::default();
    let mut eig_rng = stream_rng(cfg.master_seed, "eigen", rep as u64);
    for t in 1..=cfg.horizon {
        let round = sim.next_round(t)?;
        let chosen = policy.select(&round)?;
        if chosen >= round.k() {
            return Err(Error::Validation(format!(
                "policy {} chose arm {chosen} with only {} arms",
                policy.id(),
                round.k()
            )));
        }
        let optimal = best_arm(&round, model.beta())?;
        let regret = instant_regret(&round, chosen, &model)?;
        let reward = sim.reward(round.arm(chosen))?;
        let obs = Observation::from_round(&round, chosen, reward);
        policy.update(&obs)?;
        trace.push(t, chosen, optimal, regret);
        if let Some(state) = design.as_mut() {
            state.update(&obs.feature, reward)?;
            if next_cp < cps.len() && cps[next_cp] == t {
                next_cp += 1;
                let snap = CovarianceSnapshot::from_design(state);
                let opts = &cfg.diagnostics_options;
                let phi_hat = compatibility_estimate_with(
                    &snap,
                    model.support(),
                    &CompatConfig {
                        n_starts: opts.n_starts,
                        seed: stream_seed(cfg.master_seed, "compat", t as u64),
                        ..CompatConfig::default()
                    },
                )?;
                let m = model.s0().clamp(1, d);
                let (rho_min, rho_max) = sparse_eigen_probe(&snap, m, opts.eigen_samples, &mut eig_rng)?;
                report.rows.push(DiagnosticsRow {
                    t,
                    phi_hat,
                    rho_min,
                    rho_max,
                    coverage: policy.confidence_ball().map(|b| b.contains(model.beta())),
                    optimal_fraction: optimal_fraction(&trace, t.div_ceil(2))?,
                });
            }
        }
    }
    Ok(RepResult {
        trace,
        diagnostics: cfg.diagnostics.then_some(report),
        solver_failures: policy.solver_failures(),
        phi0: None,
    })
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool> {
    let n = if jobs == 0 {
        std::thread::available_parallelism().map_or(1, |n| n.get())
    } else {
        jobs
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {n} workers: {e}")))
}

/// Runs every (policy, repetition) pair on `jobs` workers (0 = all cores).
pub fn run_experiment(cfg: &ExperimentConfig, jobs: usize) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let env = cfg
        .environment
        .simulated()
        .ok_or_else(|| Error::Config("environment.kind = \"replay\" is run with the replay command".into()))?;
    let tasks: Vec<(usize, usize)> = (0..cfg.policies.len())
        .flat_map(|p| (0..cfg.repetitions).map(move |r| (p, r)))
        .collect();
    let results = pool(jobs)?.install(|| {
        tasks
            .par_iter()
            .map(|&(p, rep)| run_repetition(cfg, &env, &cfg.policies[p], rep))
            .collect::<Result<Vec<_>>>()
    })?;
    let policy_order: Vec<String> = cfg.policies.iter().map(|p| p.id().to_string()).collect();
    let mut summary = Vec::new();
    for id in &policy_order {
        let traces: Vec<&RegretTrace> = results.iter().filter(|r| &r.trace.policy_id == id).map(|r| &r.trace).collect();
        summary.extend(summarize(id, &traces));
    }
    Ok(ExperimentOutput {
        results,
        summary,
        policy_order,
    })
}

pub fn trace_file_name(policy: &str, rep: usize) -> String {
    format!("{policy}_rep{rep}.csv")
}

/// Writes `traces/<policy>_rep<k>.csv`, `summary.csv`, `diagnostics.csv` (when
/// collected) and `regret.svg` (when `chart`).
pub fn write_experiment(out: &ExperimentOutput, dir: &Path, chart: bool) -> Result<()> {
    let traces_dir = dir.join("traces");
    std::fs::create_dir_all(&traces_dir).map_err(|e| Error::io(&traces_dir, e))?;
    for r in &out.results {
        write_trace(&traces_dir.join(trace_file_name(&r.trace.policy_id, r.trace.rep)), &r.trace)?;
    }
    write_rows(&dir.join("summary.csv"), &out.summary)?;
    if out.results.iter().any(|r| r.diagnostics.is_some()) {
        let rows = out.results.iter().flat_map(|r| {
            r.diagnostics
                .iter()
                .flat_map(|d| d.rows.iter().map(|row| DiagnosticsCsvRow::new(&r.trace.policy_id, r.trace.rep, row)))
        });
        write_rows(&dir.join("diagnostics.csv"), rows)?;
    }
    if chart {
        emit_chart(&summary_series(&out.summary), &dir.join("regret.svg"), "t", "cumulative regret")?;
    }
    Ok(())
}

/// Mean curves per policy, in first-appearance order.
pub fn summary_series(rows: &[SummaryRow]) -> Vec<Series> {
    let mut series: Vec<Series> = Vec::new();
    for r in rows {
        match series.iter_mut().find(|s| s.label == r.policy) {
            Some(s) => s.points.push((r.t as f64, r.mean)),
            None => series.push(Series {
                label: r.policy.clone(),
                points: vec![(r.t as f64, r.mean)],
            }),
        }
    }
    series
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ReplaySeriesRow {
    pub policy: String,
    pub permutation: usize,
    pub t: usize,
    pub misclassification: f64,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ReplayFinalRow {
    pub policy: String,
    pub mean: f64,
    pub sd: f64,
    pub permutations: usize,
}

#[derive(Debug, Clone)]
pub struct ReplayOutput {
    pub series: Vec<ReplaySeriesRow>,
    pub finals: Vec<ReplayFinalRow>,
}

impl ReplayOutput {
    pub fn final_for(&self, policy: &str) -> Option<&ReplayFinalRow> {
        self.finals.iter().find(|r| r.policy == policy)
    }
}

/// One pass over a permuted dataset; returns the running misclassification at
/// every 10th row and at the end.
pub fn replay_pass(
    ds: &ReplayDataset,
    order: &[usize],
    spec: &PolicySpec,
    ctx: &PolicyContext<'_>,
) -> Result<Vec<(usize, f64)>> {
    let mut policy = match spec {
        PolicySpec::Oracle { .. } => None,
        _ => Some(build_policy(spec, ctx)?),
    };
    let n = order.len();
    let mut mistakes = 0usize;
    let mut out = Vec::new();
    for (i, &row) in order.iter().enumerate() {
        let t = i + 1;
        let label = ds.label(row);
        let chosen = match policy.as_mut() {
            None => label,
            Some(p) => {
                let round = ds.round(row, t);
                let a = p.select(&round)?;
                let reward = if a == label { 1.0 } else { 0.0 };
                p.update(&Observation::from_round(&round, a, reward))?;
                a
            }
        };
        if chosen != label {
            mistakes += 1;
        }
        if t % 10 == 0 || t == n {
            out.push((t, mistakes as f64 / t as f64));
        }
    }
    Ok(out)
}

pub fn permutation(n: usize, master_seed: u64, index: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut stream_rng(master_seed, "permutation", index as u64));
    order
}

pub fn run_replay(cfg: &ExperimentConfig, jobs: usize) -> Result<ReplayOutput> {
    cfg.validate()?;
    let EnvironmentConfig::Replay(spec) = &cfg.environment else {
        return Err(Error::Config("replay needs environment.kind = \"replay\"".into()));
    };
    let ds = replay_load(&spec.path, spec.k)?;
    run_replay_dataset(cfg, spec, &ds, jobs)
}

pub fn run_replay_dataset(
    cfg: &ExperimentConfig,
    spec: &ReplaySpec,
    ds: &ReplayDataset,
    jobs: usize,
) -> Result<ReplayOutput> {
    let orders: Vec<Vec<usize>> = (0..spec.permutations)
        .map(|p| permutation(ds.len(), cfg.master_seed, p))
        .collect();
    let tasks: Vec<(usize, usize)> = (0..cfg.policies.len())
        .flat_map(|p| (0..spec.permutations).map(move |k| (p, k)))
        .collect();
    let majority = ds.majority_label();
    let runs = pool(jobs)?.install(|| {
        tasks
            .par_iter()
            .map(|&(p, k)| {
                let pspec = &cfg.policies[p];
                let ctx = PolicyContext {
                    d: ds.dim(),
                    x_max: ds.x_max().max(f64::MIN_POSITIVE),
                    sigma: 1.0,
                    s0: ds.dim(),
                    beta: None,
                    phi0: cfg.theory.phi0,
                    mode: cfg.constants,
                    seed: stream_seed(cfg.master_seed, pspec.id(), k as u64),
                    default_arm: majority,
                };
                replay_pass(ds, &orders[k], pspec, &ctx)
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let mut series = Vec::new();
    let mut finals = Vec::new();
    for (p, pspec) in cfg.policies.iter().enumerate() {
        let mut last = Vec::new();
        for k in 0..spec.permutations {
            let run = &runs[p * spec.permutations + k];
            for &(t, m) in run {
                series.push(ReplaySeriesRow {
                    policy: pspec.id().to_string(),
                    permutation: k,
                    t,
                    misclassification: m,
                });
            }
            last.push(run.last().map_or(f64::NAN, |x| x.1));
        }
        let (mean, sd) = mean_sd(&last);
        finals.push(ReplayFinalRow {
            policy: pspec.id().to_string(),
            mean,
            sd,
            permutations: spec.permutations,
        });
    }
    Ok(ReplayOutput { series, finals })
}

/// Writes `misclassification.csv`, `replay_summary.csv` and, when `chart`,
/// `misclassification.svg` with the permutation-averaged running rate.
pub fn write_replay(out: &ReplayOutput, dir: &Path, chart: bool) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_rows(&dir.join("misclassification.csv"), &out.series)?;
    write_rows(&dir.join("replay_summary.csv"), &out.finals)?;
    if chart {
        let mut series: Vec<Series> = Vec::new();
        for f in &out.finals {
            let rows: Vec<&ReplaySeriesRow> = out.series.iter().filter(|r| r.policy == f.policy).collect();
            let mut ts: Vec<usize> = rows.iter().map(|r| r.t).collect();
            ts.sort_unstable();
            ts.dedup();
            let points = ts
                .into_iter()
                .map(|t| {
                    let vals: Vec<f64> = rows.iter().filter(|r| r.t == t).map(|r| r.misclassification).collect();
                    (t as f64, mean_sd(&vals).0)
                })
                .collect();
            series.push(Series {
                label: f.policy.clone(),
                points,
            });
        }
        emit_chart(&series, &dir.join("misclassification.svg"), "t", "misclassification rate")?;
    }
    Ok(())
}
