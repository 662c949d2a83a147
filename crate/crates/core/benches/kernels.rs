//! Sequential against data-parallel execution for the hot kernels.

use std::f64::consts::TAU;
use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use fpa_core::averaging::{AveragingModel, Kernel, Subspace, Variant};
use fpa_core::force::ForceParams;
use fpa_core::particles::{cs_drift, em_step, sample_preset, ForceScaling, SdeParams};
use fpa_core::solver::{Preset, Solver};
use fpa_core::{Exec, Grid};

const POLICIES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn solver(exec: Exec) -> Solver {
    let grid = Grid::new(128, 256, TAU, 6.0).unwrap();
    let model = AveragingModel::new(Variant::Cs, Kernel::tent(1.0), grid.nx, grid.length).unwrap();
    Solver::new(grid, ForceParams::default(), model).unwrap().with_exec(exec)
}

fn kinetic(c: &mut Criterion) {
    let mut group = c.benchmark_group("kinetic");
    for (name, exec) in POLICIES {
        let s = solver(exec);
        let state = s.init(&Preset::TwoBump).unwrap();
        let macro_ = s.macro_fields(&state).unwrap();
        group.bench_function(BenchmarkId::new("transport", name), |b| {
            let mut f = state.clone();
            b.iter(|| black_box(s.transport_step(&mut f, 1e-3)))
        });
        group.bench_function(BenchmarkId::new("collision", name), |b| {
            let mut f = state.clone();
            b.iter(|| black_box(s.collision_step(&mut f, &macro_, 1e-3).unwrap()))
        });
        group.bench_function(BenchmarkId::new("diagnostics", name), |b| {
            b.iter(|| black_box(fpa_core::diagnostics::evaluate(&state, &s.equilibrium, &s.model, Subspace::MeanZero, exec).unwrap()))
        });
    }
    group.finish();
}

fn agents(c: &mut Criterion) {
    let mut group = c.benchmark_group("agents");
    let force = ForceParams::default();
    let ens = sample_preset(&Preset::TwoBump, 5_000, TAU, &force, 1).unwrap();
    let params = SdeParams {
        dt: 1e-3,
        kernel: Kernel::tent(1.0),
        force,
        noise_on: true,
        force_scaling: ForceScaling::StrengthWeighted,
    };
    for (name, exec) in POLICIES {
        group.bench_function(BenchmarkId::new("cs_drift", name), |b| {
            b.iter(|| black_box(cs_drift(&ens, &params.kernel, exec).unwrap()))
        });
        group.bench_function(BenchmarkId::new("em_step", name), |b| {
            let mut e = ens.clone();
            b.iter(|| em_step(&mut e, &params, exec).unwrap())
        });
    }
    group.finish();
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(20);
    targets = kinetic, agents
}
criterion_main!(benches);
