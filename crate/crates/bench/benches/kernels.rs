use criterion::{criterion_group, criterion_main, Criterion};
use deffusion_core::fw_graph::EnergyGraph;
use deffusion_core::langevin_mc::{step_baoab, PhasePoint};
use deffusion_core::rng::stream;
use deffusion_core::spectral::{assemble, solve_cell_with, GalerkinBasis, SolveOptions};
use deffusion_core::PeriodicPotential;
use std::hint::black_box;

fn spectral_solve(c: &mut Criterion) {
    let v = PeriodicPotential::pendulum();
    let opts = SolveOptions {
        estimate_truncation: false,
        ..Default::default()
    };
    for (gamma, nh, nk) in [(1.0, 128, 32), (0.3, 256, 32)] {
        let basis = GalerkinBasis::new(nh, nk, 1.0).unwrap();
        let op = assemble(&v, 1.0, gamma, &basis).unwrap();
        c.bench_function(&format!("spectral_solve gamma={gamma} basis=({nh},{nk})"), |b| {
            b.iter(|| solve_cell_with(black_box(&op), &opts).unwrap())
        });
    }
}

fn baoab(c: &mut Criterion) {
    let v = PeriodicPotential::pendulum();
    c.bench_function("baoab 10k steps", |b| {
        b.iter(|| {
            let mut rng = stream(1, 0);
            let mut s = PhasePoint::new(0.1, 0.5, v.period);
            for _ in 0..10_000 {
                step_baoab(&mut s, 0.01, 1.0, 1.0, &v, &mut rng);
            }
            black_box(s)
        })
    });
}

fn period_and_action(c: &mut Criterion) {
    let g = EnergyGraph::build(&PeriodicPotential::pendulum()).unwrap();
    let rot = g.rotational_edge(1).id;
    let well = g.well_edges().next().unwrap().id;
    c.bench_function("T and S on a well edge", |b| {
        b.iter(|| (g.period_t(well, black_box(0.3)).unwrap(), g.action_s(well, black_box(0.3)).unwrap()))
    });
    c.bench_function("T and S on a rotational edge", |b| {
        b.iter(|| (g.period_t(rot, black_box(1.7)).unwrap(), g.action_s(rot, black_box(1.7)).unwrap()))
    });
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(20);
    targets = spectral_solve, baoab, period_and_action
}
criterion_main!(benches);
