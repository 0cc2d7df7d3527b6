use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use num_complex::Complex64;
use trimlevy::conditional::{conditional_cf_trimmed, ConditionSpec, KernelForm};
use trimlevy::limit_laws::{cdf_from_cf, limit_cf_single, psi};
use trimlevy_bench::{limit_law, models};

fn exponent(c: &mut Criterion) {
    let law = limit_law(1);
    c.bench_function("psi", |b| b.iter(|| psi(&law, black_box(0.7)).unwrap()));
    let law2 = limit_law(2);
    c.bench_function("limit_cf_single_n2", |b| b.iter(|| limit_cf_single(&law2, black_box(0.3)).unwrap()));
}

fn conditional(c: &mut Criterion) {
    for (name, model) in models() {
        let spec = ConditionSpec::new(&model, 0.1, 1, &[1.0]).unwrap();
        c.bench_function(&format!("conditional_cf/{name}"), |b| {
            b.iter(|| conditional_cf_trimmed(&model, &spec, black_box(0.9), KernelForm::Auto, 256, 1).unwrap())
        });
    }
}

fn inversion(c: &mut Criterion) {
    let xs: Vec<f64> = (0..=100).map(|i| 0.1 + 0.1 * i as f64).collect();
    c.bench_function("invert_gamma2", |b| {
        b.iter(|| cdf_from_cf(|t| Ok(Complex64::new(1.0, -t).powi(-2)), black_box(&xs), 1e5).unwrap())
    });
}

criterion_group!(benches, exponent, conditional, inversion);
criterion_main!(benches);
