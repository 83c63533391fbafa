//! Sequential against rayon execution for a step-size sweep and for
//! per-subsystem stepping within one run.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use cosim::{run, sweep, Builtin, OscillatorParams, QuarterCarSetup, Stepping};

const DTS: [f64; 8] = [1e-3, 2e-3, 3e-3, 4e-3, 5e-3, 6e-3, 8e-3, 1e-2];

fn bench_sweep(c: &mut Criterion) {
    let system = Builtin::Oscillator(OscillatorParams::damped());
    let mut group = c.benchmark_group("sweep_damped_oscillator");
    group.sample_size(10);
    for (name, parallel) in [("sequential", false), ("parallel", true)] {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| {
                let rows = sweep(
                    |dt| Ok(system.scenario(0.0, 2.0, Stepping::Fixed { dt })),
                    &DTS,
                    parallel,
                )
                .unwrap();
                black_box(rows)
            })
        });
    }
    group.finish();
}

fn bench_subsystem_stepping(c: &mut Criterion) {
    let system = Builtin::QuarterCar(QuarterCarSetup::default());
    let mut group = c.benchmark_group("quarter_car_macro_steps");
    group.sample_size(10);
    // long macro steps give each worker enough micro steps to amortize the fork
    for dt in [1e-3, 1e-2] {
        for (name, parallel) in [("sequential", false), ("parallel", true)] {
            group.bench_with_input(BenchmarkId::new(name, dt), &dt, |b, &dt| {
                b.iter(|| {
                    let mut s = system.scenario(0.0, 1.0, Stepping::Fixed { dt });
                    s.parallel = parallel;
                    black_box(run(s).unwrap())
                })
            });
        }
    }
    group.finish();
}

criterion_group!(benches, bench_sweep, bench_subsystem_stepping);
criterion_main!(benches);
