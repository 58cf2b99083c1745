use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use semiprop::dynamics::{propagate, IntegratorSettings};
use semiprop::exactref::{Grid, GridWavefunction, SplitOperator};
use semiprop::rootsearch::{klauder_initial, wmap_scan, ScanLattice};
use semiprop::semiclassics::{assemble, Formula, SearchSettings, System};
use semiprop::{CoherentState, Complex64, PotentialModel};

const QUARTIC: PotentialModel = PotentialModel::Quartic { a: 0.5, b: 0.1 };

fn quartic_state() -> CoherentState {
    CoherentState::with_width(0.0, -2.0, 1.0, 1.0, 1.0).unwrap()
}

fn trajectory(c: &mut Criterion) {
    let state = quartic_state();
    let (x0, p0) = klauder_initial(&state, Complex64::new(0.3, -0.2));
    let settings = IntegratorSettings::default();
    c.bench_function("quartic complex trajectory T=6.5", |b| {
        b.iter(|| propagate(black_box(&QUARTIC), x0, p0, 6.5, &state, &settings).unwrap())
    });
}

fn scan(c: &mut Criterion) {
    let state = quartic_state();
    let lattice = ScanLattice::square(1.0, 0.25);
    let settings = SearchSettings::default().scan_integrator();
    let mut group = c.benchmark_group("w-map");
    group.sample_size(10);
    group.bench_function("9x9 lattice T=6.5", |b| {
        b.iter(|| wmap_scan(black_box(&QUARTIC), &state, 6.5, &lattice, &settings))
    });
    group.finish();
}

fn split_operator(c: &mut Criterion) {
    let state = quartic_state();
    let grid = Grid::new(-12.0, 12.0, 2048).unwrap();
    let mut op = SplitOperator::new(&QUARTIC, grid, 1.0, 1.0);
    let mut psi = GridWavefunction::coherent(&state, grid);
    c.bench_function("split operator 100 steps n=2048", |b| b.iter(|| op.advance(&mut psi, 1e-3, 100)));
}

fn real_formula(c: &mut Criterion) {
    let state = quartic_state();
    let grid: Vec<f64> = (0..=60).map(|k| -3.0 + 0.1 * k as f64).collect();
    let settings = SearchSettings::default();
    let mut group = c.benchmark_group("assemble");
    group.sample_size(10);
    group.bench_function("XFQ quartic T=2.5, 61 points", |b| {
        b.iter(|| assemble(&System::Smooth(QUARTIC), &state, Formula::Xfq, &grid, 2.5, &settings).unwrap())
    });
    group.finish();
}

criterion_group!(benches, trajectory, scan, split_operator, real_formula);
criterion_main!(benches);
