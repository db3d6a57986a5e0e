use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use dgtwist::dgcat::build_s;
use dgtwist::gen;
use dgtwist::intlin::smith_normal_form;
use dgtwist::quotient::dg_quotient;
use dgtwist::realize::spectral_sequence;
use dgtwist::twisted::hom_complex;
use dgtwist::IntMatrix;

/// Deterministic pseudo-random entries in [-4, 4].
fn matrix(n: usize, seed: u64) -> IntMatrix {
    let mut s = seed;
    let rows: Vec<Vec<i64>> = (0..n)
        .map(|_| {
            (0..n)
                .map(|_| {
                    s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                    ((s >> 33) % 9) as i64 - 4
                })
                .collect()
        })
        .collect();
    IntMatrix::from_rows(&rows)
}

fn snf(c: &mut Criterion) {
    let mut g = c.benchmark_group("smith_normal_form");
    for n in [8, 16, 32] {
        let m = matrix(n, n as u64);
        g.bench_with_input(BenchmarkId::from_parameter(n), &m, |b, m| b.iter(|| smith_normal_form(black_box(m))));
    }
    g.finish();
}

fn hom_cohomology(c: &mut Criterion) {
    let mut rng = gen::rng(3);
    let s = gen::random_bb_sample(&mut rng, 3, 3, 2).unwrap();
    let x = gen::random_twisted(&mut rng, &s.negative, -1, 2, 5);
    let y = gen::random_twisted(&mut rng, &s.negative, -1, 2, 5);
    c.bench_function("hom_complex_cohomology", |b| b.iter(|| hom_complex(&s.negative, black_box(&x), black_box(&y)).cohomology()));
}

fn ss(c: &mut Criterion) {
    let mut rng = gen::rng(5);
    let s = gen::random_bb_sample(&mut rng, 3, 3, 2).unwrap();
    let x = gen::random_twisted(&mut rng, &s.negative, -1, 3, 6);
    c.bench_function("spectral_sequence", |b| b.iter(|| spectral_sequence(&s.realization, black_box(&x)).unwrap()));
}

fn quotient(c: &mut Criterion) {
    let mut rng = gen::rng(9);
    let (a, _) = gen::random_path_category(&mut rng, 3, 3);
    let cat = build_s(&a);
    let mut g = c.benchmark_group("dg_quotient");
    for lo in [-2, -4, -6] {
        g.bench_with_input(BenchmarkId::from_parameter(-lo), &lo, |b, &lo| b.iter(|| dg_quotient(&cat, &[1], (lo, 0)).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, snf, hom_cohomology, ss, quotient);
criterion_main!(benches);
