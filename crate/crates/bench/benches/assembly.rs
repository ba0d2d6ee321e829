use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use wgmorley::MeshFamily;
use wgmorley_bench::Fixture;

fn assembly(c: &mut Criterion) {
    let mut group = c.benchmark_group("assemble");
    group.sample_size(10);
    for (family, k, level) in [
        (MeshFamily::Square, 3, 5),
        (MeshFamily::Triangle, 3, 5),
        (MeshFamily::Polygon, 4, 4),
        (MeshFamily::Square, 5, 4),
        (MeshFamily::Cube, 3, 3),
    ] {
        let fx = Fixture::new(family, k, level);
        group.bench_function(
            BenchmarkId::new(format!("{}-k{k}", family.name()), level),
            |b| b.iter(|| black_box(fx.assemble())),
        );
    }
    group.finish();
}

criterion_group!(benches, assembly);
criterion_main!(benches);
