use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

use nimt::harness::{make_scenario, ScenarioName, ScenarioOverrides};
use nimt::teacher::gft_select;
use nimt::{run_session, Execution, PackSize, SessionConfig, TeacherKind, TeacherPolicy};

const MODES: [Execution; 2] = [Execution::Sequential, Execution::Parallel];

fn mode_name(exec: Execution) -> &'static str {
    if exec.is_parallel() {
        "parallel"
    } else {
        "sequential"
    }
}

fn grid_evaluation(c: &mut Criterion) {
    let mut scenario = make_scenario(ScenarioName::Cls2d, &ScenarioOverrides::default()).unwrap();
    // 200 expansion terms spread over the domain
    for i in 0..200 {
        let x = -1.0 + 0.01 * i as f64;
        scenario.init.add_term_in_place(&[x, -x], 0.01).unwrap();
    }
    let mut group = c.benchmark_group("evaluate_grid/cls2d");
    group.sample_size(10);
    for exec in MODES {
        group.bench_function(BenchmarkId::from_parameter(mode_name(exec)), |b| {
            b.iter(|| {
                scenario
                    .init
                    .evaluate_grid(black_box(&scenario.grid), exec)
                    .unwrap()
            })
        });
    }
    group.finish();
}

fn greedy_selection(c: &mut Criterion) {
    let scenario = make_scenario(ScenarioName::Cls2d, &ScenarioOverrides::default()).unwrap();
    let model = scenario
        .init
        .evaluate_grid(&scenario.grid, Execution::Parallel)
        .unwrap();
    let target = scenario
        .target
        .evaluate_grid(&scenario.grid, Execution::Parallel)
        .unwrap();
    let pool: Vec<usize> = (0..scenario.grid.len()).collect();
    let mut group = c.benchmark_group("gft_select/cls2d");
    for k in [1usize, 2000] {
        for exec in MODES {
            group.bench_with_input(BenchmarkId::new(mode_name(exec), k), &k, |b, &k| {
                b.iter(|| gft_select(black_box(&model), &target, k, &pool, exec).unwrap())
            });
        }
    }
    group.finish();
}

fn image_session(c: &mut Criterion) {
    let scenario = make_scenario(
        ScenarioName::Image,
        &ScenarioOverrides {
            max_iters: Some(20),
            ..Default::default()
        },
    )
    .unwrap();
    let mut group = c.benchmark_group("session/image_gft_0.05_20_steps");
    group.sample_size(10);
    for exec in MODES {
        let mut config = SessionConfig::new(
            scenario.clone(),
            TeacherPolicy::new(TeacherKind::Gft, PackSize::Ratio(0.05), 0),
        );
        config.execution = exec;
        group.bench_function(BenchmarkId::from_parameter(mode_name(exec)), |b| {
            b.iter(|| run_session(black_box(&config)).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, grid_evaluation, greedy_selection, image_session);
criterion_main!(benches);
