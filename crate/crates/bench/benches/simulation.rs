use criterion::{criterion_group, criterion_main, Criterion};

use flock_core::diagnostics::{certify, check_paper_inequalities, dstar_bound, lyapunov_series};
use flock_core::integrator::integrate;
use flock_core::kernels::KernelSpec;
use flock_core::scenarios::ScenarioSpec;

fn bench_integrate(c: &mut Criterion) {
    let (config, history) = ScenarioSpec::Example2.build(64, 10.0).unwrap();
    c.bench_function("integrate example2 10 delays", |b| {
        b.iter(|| integrate(&config, &history).unwrap())
    });

    let kernel = KernelSpec::power_law(1.0, 1.0, 0.3).unwrap();
    let spec = ScenarioSpec::random(44, 8, 3, 1.0, kernel, 1.0, 0.5).unwrap();
    let (config, history) = spec.build(64, 10.0).unwrap();
    c.bench_function("integrate random N=8 d=3 10 delays", |b| {
        b.iter(|| integrate(&config, &history).unwrap())
    });
}

fn bench_diagnostics(c: &mut Criterion) {
    let (config, history) = ScenarioSpec::Example2.build(64, 10.0).unwrap();
    let traj = integrate(&config, &history).unwrap();
    c.bench_function("lyapunov series example2 10 delays", |b| {
        b.iter(|| lyapunov_series(&traj).unwrap())
    });

    let cert = certify(&config, &history).unwrap();
    c.bench_function("full inequality report example2 10 delays", |b| {
        b.iter(|| check_paper_inequalities(&traj, &cert).unwrap())
    });
}

fn bench_certificate(c: &mut Criterion) {
    let kernel = KernelSpec::power_law(1.0, 1.0, 0.5).unwrap();
    c.bench_function("diameter bound root solve beta=1/2", |b| {
        b.iter(|| dstar_bound(&kernel, 1.0, 2.0).unwrap())
    });

    let (config, history) = ScenarioSpec::Example2.build(64, 2.0).unwrap();
    c.bench_function("a-priori certificate example2", |b| {
        b.iter(|| certify(&config, &history).unwrap())
    });
}

criterion_group!(benches, bench_integrate, bench_diagnostics, bench_certificate);
criterion_main!(benches);
