use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use oaspmdp::asp::{enumerate_answer_sets, parse_program};
use oaspmdp::experiment::{run_scenario, ScenarioKind, ScenarioSpec};
use oaspmdp::par::Execution;

fn small_walls() -> ScenarioSpec {
    let mut spec = ScenarioSpec::standard(ScenarioKind::Walls);
    spec.episodes = 300;
    spec.changes = vec![100, 200];
    spec.trials = 8;
    spec
}

fn trials(c: &mut Criterion) {
    let spec = small_walls();
    let mut group = c.benchmark_group("run_scenario");
    group.sample_size(10);
    for (name, exec) in [
        ("sequential", Execution::Sequential),
        ("parallel", Execution::Parallel),
    ] {
        group.bench_with_input(BenchmarkId::new(name, spec.trials), &exec, |b, &exec| {
            b.iter(|| run_scenario(black_box(&spec), 1, exec).unwrap())
        });
    }
    group.finish();
}

fn enumeration(c: &mut Criterion) {
    // four independent three-way choices: 81 answer sets
    let program = parse_program(
        "s. a. b. d. e.
         1{ x1; x2; x3 }1 :- s, a.
         1{ y1; y2; y3 }1 :- s, b.
         1{ z1; z2; z3 }1 :- s, d.
         1{ w1; w2; w3 }1 :- s, e.
         :- x1, y1.",
    )
    .unwrap();
    c.bench_function("enumerate_answer_sets/81", |b| {
        b.iter(|| enumerate_answer_sets(black_box(&program)).unwrap())
    });
}

criterion_group!(benches, trials, enumeration);
criterion_main!(benches);
