use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use gerbecalc::fixtures;
use gerbecalc::holonomy::{self, Lifts, UnorientedTerms};
use gerbecalc::wzw;

fn engines(c: &mut Criterion) {
    let map = fixtures::torus_identity_map(8, 8);
    let bump = fixtures::torus_bump();
    c.bench_function("closed/torus 8x8", |b| {
        b.iter(|| holonomy::holonomy_closed(black_box(&bump), &map).unwrap())
    });

    let data = fixtures::deligne_random(fixtures::torus_fine(), 1);
    c.bench_function("deligne/torus 8x8", |b| {
        b.iter(|| holonomy::holonomy_deligne(black_box(&data)).unwrap())
    });

    let jandl = fixtures::klein_data(0.3, true);
    let (cover, kmap) = holonomy::cover_map(
        &fixtures::klein_min(),
        jandl.omega.target.clone(),
        &jandl.involution,
        &fixtures::klein_min_lifts(),
    )
    .unwrap();
    let terms = UnorientedTerms::new(&jandl, &cover, &kmap).unwrap();
    let lifts = Lifts::canonical(terms.base());
    c.bench_function("unoriented/klein evaluate", |b| {
        b.iter(|| terms.evaluate(black_box(&lifts)).unwrap())
    });
    c.bench_function("unoriented/klein terms", |b| {
        b.iter(|| UnorientedTerms::new(black_box(&jandl), &cover, &kmap).unwrap())
    });

    c.bench_function("wzw/fusion bounds k=12", |b| {
        b.iter(|| wzw::fusion_bounds_check(black_box(12)).unwrap())
    });
}

criterion_group!(benches, engines);
criterion_main!(benches);
