use std::sync::Arc;

use criterion::{black_box, criterion_group, criterion_main, Criterion};
use soliton_core::profiles::PowerSum;
use soliton_core::{integrate_lemma, recover_h, RadialFn};

fn lemma(c: &mut Criterion) {
    c.bench_function("integrate_lemma_1_to_100", |b| {
        b.iter(|| integrate_lemma(1.0, 1.0, black_box(0.5), 100.0, Some(100)).unwrap())
    });
    let psi: Arc<dyn RadialFn> = Arc::new(PowerSum::monomial(1.0, 0.5));
    c.bench_function("recover_h_family_b", |b| {
        b.iter(|| recover_h(psi.as_ref(), 4, (0.0, black_box(0.0)), 1.0, 100.0).unwrap())
    });
}

criterion_group!(benches, lemma);
criterion_main!(benches);
