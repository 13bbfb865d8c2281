use std::hint::black_box;
use std::path::PathBuf;

use criterion::{criterion_group, criterion_main, Criterion};
use nashtrack::config::ScenarioFile;
use nashtrack::controller::ControllerGains;
use nashtrack::generator::{generator_rhs, generator_rhs_stacked, GeneratorState};
use nashtrack::internal_model::{companion_from_coeffs, default_stabilizer, solve_sylvester, StabilizerPreset};
use nashtrack::numerics::OdeSystem;
use nashtrack::simulation::{assemble, simulate};
use nashtrack::Scenario;

fn benchmark() -> Scenario {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/benchmark.scenario");
    let mut sc = ScenarioFile::load(&path).unwrap().build().unwrap();
    sc.controller = ControllerGains::uniform(sc.n(), 2, 16.0).unwrap();
    sc.generator.gamma1 = 4.0;
    sc.escalation = None;
    sc
}

fn synthesis(c: &mut Criterion) {
    let comp = companion_from_coeffs(&[0.0, -4.0, 0.0, -5.0, 0.0]).unwrap();
    let stab = default_stabilizer(5, StabilizerPreset::Benchmark);
    c.bench_function("sylvester_5x5", |b| b.iter(|| solve_sylvester(black_box(&comp), black_box(&stab)).unwrap()));
}

fn fields(c: &mut Criterion) {
    let sc = benchmark();
    let state = GeneratorState::zeros(sc.n());
    c.bench_function("generator_per_agent", |b| b.iter(|| generator_rhs(&sc.game, &sc.graph, sc.generator, black_box(&state))));
    c.bench_function("generator_stacked", |b| b.iter(|| generator_rhs_stacked(&sc.game, &sc.graph, sc.generator, black_box(&state))));

    let real = sc.realize().unwrap();
    let cl = assemble(&sc, &real.w);
    let mut dx = vec![0.0; cl.dim()];
    c.bench_function("closed_loop_rhs", |b| b.iter(|| cl.rhs(0.0, black_box(&real.x0), &mut dx)));
}

fn simulation(c: &mut Criterion) {
    let mut sc = benchmark();
    sc.sim.t_final = 1.0;
    let real = sc.realize().unwrap();
    let mut group = c.benchmark_group("simulate");
    group.sample_size(20);
    group.bench_function("benchmark_1s", |b| b.iter(|| simulate(&sc, black_box(&real)).unwrap()));
    group.finish();
}

criterion_group!(benches, synthesis, fields, simulation);
criterion_main!(benches);
