use std::hint::black_box;

use atrium_core::scenario::{self, ScenarioConfig};
use atrium_core::sim::{actor, fuzz_config, random_project, toy_project, Driver};
use atrium_core::trace::{impact_of, integrity_check};
use atrium_core::{Command, Engine, EntityId};
use criterion::{criterion_group, criterion_main, BatchSize, Criterion};

fn case_study(c: &mut Criterion) {
    let config = ScenarioConfig::default();
    c.bench_function("build_case_study", |b| b.iter(|| scenario::build_case_study(black_box(&config)).unwrap()));
    c.bench_function("canonical_replay", |b| b.iter(|| scenario::run(black_box(&config)).unwrap()));
}

fn apply_throughput(c: &mut Criterion) {
    c.bench_function("driver_500_steps", |b| {
        b.iter(|| {
            let mut engine = Engine::new(fuzz_config());
            let mut driver = Driver::new(7);
            for _ in 0..500 {
                let _ = driver.step(&mut engine);
            }
            engine
        })
    });
    c.bench_function("analyze_cfa", |b| {
        b.iter_batched(
            || toy_project(25, &["omission", "loss of power", "communication failure"]),
            |mut engine| {
                let cmd = Command::AnalyzeCfa {
                    cfa: EntityId::parse("CFA-40"),
                    effect: "degraded".into(),
                    baseline_fulfills_dg: false,
                    design_alternatives: vec!["redundant unit".into()],
                    cited_assumptions: Default::default(),
                };
                engine.apply(cmd, &actor()).unwrap()
            },
            BatchSize::SmallInput,
        )
    });
}

fn queries(c: &mut Criterion) {
    let engine = random_project(11, 1_000);
    let st = engine.state();
    c.bench_function("integrity_check_1000_ops", |b| b.iter(|| integrity_check(black_box(st))));
    let assumptions: Vec<EntityId> = st.assumptions.keys().cloned().collect();
    c.bench_function("impact_of_every_assumption", |b| {
        b.iter(|| assumptions.iter().map(|a| impact_of(st, a).unwrap().affected_cfas.len()).sum::<usize>())
    });
    c.bench_function("oplog_replay_1000_ops", |b| {
        b.iter(|| Engine::replay(st.config.clone(), black_box(&st.oplog)).unwrap())
    });
}

criterion_group!(benches, case_study, apply_throughput, queries);
criterion_main!(benches);
