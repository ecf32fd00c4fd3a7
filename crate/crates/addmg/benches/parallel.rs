//! Sequential vs rayon comparison for the two data-parallel hot spots:
//! row-parallel spmv and the per-level direction-block construction.

use std::sync::Arc;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use addmg::fem::{assemble, BoundarySpec, DiffusionField, StructuredGrid};
use addmg::hierarchy::build_geometric_hierarchy;
use addmg::preconditioners::AdditiveMg;
use addmg::sparse::CsrMatrix;

fn setup(nx: usize) -> (CsrMatrix, Vec<f64>, StructuredGrid) {
    let grid = StructuredGrid::new(nx, nx).unwrap();
    let field = DiffusionField::constant(&grid, 1e-2, 1.0).unwrap();
    let bc = BoundarySpec::all_dirichlet(0.0);
    let (a, b) = assemble(&grid, &field, &bc, &vec![1.0; grid.n_elements()]).unwrap();
    (a, b, grid)
}

fn bench_spmv(c: &mut Criterion) {
    let mut group = c.benchmark_group("spmv");
    for nx in [64usize, 256] {
        let (a, b, _) = setup(nx);
        group.bench_with_input(BenchmarkId::new("sequential", nx), &nx, |bench, _| {
            bench.iter(|| a.spmv(&b).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("parallel", nx), &nx, |bench, _| {
            bench.iter(|| a.spmv_par(&b).unwrap())
        });
    }
    group.finish();
}

fn bench_direction_block(c: &mut Criterion) {
    let mut group = c.benchmark_group("direction_block");
    group.sample_size(20);
    for nx in [64usize, 160] {
        let (a, b, grid) = setup(nx);
        let hierarchy = Arc::new(build_geometric_hierarchy(&grid, &a, 4).unwrap());
        let mut addmg = AdditiveMg::new(hierarchy, 1.0, 6).unwrap();

        addmg.set_parallel(false);
        group.bench_with_input(BenchmarkId::new("sequential", nx), &nx, |bench, _| {
            bench.iter(|| addmg.additive_block(&b).unwrap())
        });

        addmg.set_parallel(true);
        group.bench_with_input(BenchmarkId::new("parallel", nx), &nx, |bench, _| {
            bench.iter(|| addmg.additive_block(&b).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, bench_spmv, bench_direction_block);
criterion_main!(benches);
