use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use jobshop_bench::instances;
use jobshop_core::cp::{
    build_model, local_search, propagate, solve, LocalSearchConfig, SearchState, SolveLimits,
};
use jobshop_core::ordering::Strategy;
use jobshop_core::Objective;

fn solve_6x6(c: &mut Criterion) {
    let insts = instances(6, 6, 4);
    let mut group = c.benchmark_group("solve_6x6_lowmin");
    group.sample_size(10);
    for obj in [Objective::Cmax, Objective::Tmax, Objective::Twt] {
        group.bench_with_input(BenchmarkId::from_parameter(obj), &obj, |b, &obj| {
            b.iter(|| {
                for inst in &insts {
                    solve(
                        &build_model(inst, obj),
                        &Strategy::LowMin,
                        SolveLimits::unlimited(),
                    )
                    .unwrap();
                }
            })
        });
    }
    group.finish();
}

fn root_propagation(c: &mut Criterion) {
    let inst = &instances(10, 10, 1)[0];
    for obj in [Objective::Cmax, Objective::Twt] {
        let model = build_model(inst, obj);
        c.bench_function(&format!("root_propagate_10x10_{obj}"), |b| {
            b.iter(|| {
                let mut state = SearchState::new(&model);
                state.set_cutoff(1000);
                propagate(&model, &mut state)
            })
        });
    }
}

fn local_search_9x9(c: &mut Criterion) {
    let inst = &instances(9, 9, 1)[0];
    let mut group = c.benchmark_group("local_search_9x9");
    group.sample_size(10);
    group.bench_function("twt_200_rounds", |b| {
        b.iter(|| {
            local_search(
                inst,
                Objective::Twt,
                LocalSearchConfig {
                    rounds: 200,
                    seed: 0,
                },
            )
        })
    });
    group.finish();
}

criterion_group!(benches, solve_6x6, root_propagation, local_search_9x9);
criterion_main!(benches);
