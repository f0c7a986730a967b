use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use hdbandit::env::{EnvSpec, Simulator, SyntheticSpec};
use hdbandit::policies::{ForcedBaseline, L1BallConfig, L1BallPolicy, OfulConfig, OfulPolicy};
use hdbandit::{Observation, Policy};

/// Warms a policy for 500 rounds, then times one select + update step.
fn bench_policy(c: &mut Criterion, name: &str, make: impl Fn(usize) -> Box<dyn Policy>) {
    let mut g = c.benchmark_group(name);
    g.sample_size(20);
    for d in [100usize, 300] {
        let spec = EnvSpec::Synthetic(SyntheticSpec::new(5, d, 5));
        let mut sim = Simulator::new(&spec, 42, 0).unwrap();
        let mut policy = make(d);
        let mut t = 0;
        let mut step = |policy: &mut Box<dyn Policy>, sim: &mut Simulator| {
            t += 1;
            let round = sim.next_round(t).unwrap();
            let a = policy.select(&round).unwrap();
            let y = sim.reward(round.arm(a)).unwrap();
            policy.update(&Observation::from_round(&round, a, y)).unwrap();
        };
        for _ in 0..500 {
            step(&mut policy, &mut sim);
        }
        g.bench_with_input(BenchmarkId::from_parameter(d), &d, |b, _| b.iter(|| step(&mut policy, &mut sim)));
    }
    g.finish();
}

fn policies(c: &mut Criterion) {
    bench_policy(c, "l1ball_round", |d| Box::new(L1BallPolicy::new(d, L1BallConfig::practical()).unwrap()));
    bench_policy(c, "lasso_bandit_round", |d| Box::new(ForcedBaseline::lasso_bandit(d).unwrap()));
    bench_policy(c, "oful_round", |d| Box::new(OfulPolicy::new(d, OfulConfig::default()).unwrap()));
}

criterion_group!(benches, policies);
criterion_main!(benches);
