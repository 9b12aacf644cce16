use criterion::{black_box, criterion_group, criterion_main, Criterion};

use bidarboux_core::homotopy::{TriGradedAlgebra, DEFAULT_DEGREE};
use bidarboux_core::parahyper::obata_connection;
use bidarboux_core::superalgebra::parse_expression;
use bidarboux_core::triplectic::{bidarboux_pipeline, corpus, extract_ef, to_rational};

fn pipeline(c: &mut Criterion) {
    let mut group = c.benchmark_group("pipeline");
    group.sample_size(10);
    for e in corpus::factorizable() {
        group.bench_function(&e.name, |b| {
            b.iter(|| bidarboux_pipeline(black_box(&e.chart), None, DEFAULT_DEGREE))
        });
    }
    group.finish();
}

fn curvature(c: &mut Criterion) {
    let mut group = c.benchmark_group("obata-curvature");
    for e in corpus::all().into_iter().filter(|e| e.chart.n() <= 2) {
        let m = to_rational(&extract_ef(&e.chart).expect("corpus chart").e);
        let base = e.chart.base();
        group.bench_function(&e.name, |b| {
            b.iter(|| obata_connection(&base, black_box(&m)).map(|g| g.curvature()))
        });
    }
    group.finish();
}

fn homotopy(c: &mut Criterion) {
    let alg = TriGradedAlgebra::new(&[0, 1, 0]).expect("algebra");
    let rho = parse_expression(
        "x1_1^2*x2_2*x1_3 + x1_2*x2_1*x2_3^2 - 3*x1_1*x2_1*x1_3*x2_3",
        alg.table(),
    )
    .expect("form");
    let omega = alg.d_op(&rho);
    c.bench_function("homotopy/n3-degree4", |b| {
        b.iter(|| alg.homotopy(black_box(&omega)))
    });
}

criterion_group!(benches, pipeline, curvature, homotopy);
criterion_main!(benches);
