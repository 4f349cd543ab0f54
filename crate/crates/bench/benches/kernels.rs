use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::Rng;

use hslice_core::decompose::{decompose, DecompConstants};
use hslice_core::gen::{generate, GenKind};
use hslice_core::lab::{exact_lo_probability, LoCase};
use hslice_core::rng::Streams;
use hslice_core::witness::{sample_point, ParamSpec, SamplerParams};
use hslice_core::{
    end_to_end_witness, levels_construction, verify_cover, Collection, CoverOptions, Matrix,
    WitnessConfig,
};

fn random_matrix(k: usize, n: usize, seed: u64) -> Matrix {
    let mut rng = Streams::for_purpose(seed, "bench").stream(0);
    let data = (0..k * n)
        .map(|_| {
            let x: f64 = rng.random_range(0.01..1.0);
            if rng.random_bool(0.5) {
                x
            } else {
                -x
            }
        })
        .collect();
    Matrix::new(k, n, data).unwrap()
}

fn cover(c: &mut Criterion) {
    let mut g = c.benchmark_group("verify_cover");
    for n in [10usize, 14, 16] {
        let levels = Collection::Exact(levels_construction(n).unwrap());
        g.bench_with_input(BenchmarkId::new("levels", n), &levels, |b, col| {
            b.iter(|| verify_cover(col, &CoverOptions::default()).unwrap())
        });
    }
    g.finish();
}

fn elo(c: &mut Criterion) {
    let mut g = c.benchmark_group("exact_lo");
    for m in [12usize, 16, 20] {
        let v: Vec<f64> = (0..m).map(|i| 1.0 + (i % 5) as f64).collect();
        let case = LoCase::from_f64(&v, 3.0, 2.0, &vec![0.25; m]);
        g.bench_with_input(BenchmarkId::from_parameter(m), &case, |b, case| {
            b.iter(|| exact_lo_probability(case).unwrap())
        });
    }
    g.finish();
}

fn decomposition(c: &mut Criterion) {
    let mut g = c.benchmark_group("decompose");
    for (k, n) in [(16usize, 1024usize), (64, 4096)] {
        let a = random_matrix(k, n, 1);
        let constants = DecompConstants::paper(k, n);
        g.bench_function(format!("{k}x{n}"), |b| {
            b.iter(|| decompose(&a, &constants).unwrap())
        });
    }
    g.finish();
}

fn sampler(c: &mut Criterion) {
    let (l, m) = (32, 256);
    let v = random_matrix(l, m, 2);
    let params = SamplerParams::resolve(&ParamSpec::default(), m, true).unwrap();
    let lambda = vec![0.0; l];
    let mut rng = Streams::for_purpose(3, "bench").stream(0);
    c.bench_function("sample_point 32x256", |b| {
        b.iter(|| sample_point(&v, &lambda, &params, &mut rng).unwrap())
    });
}

fn witness(c: &mut Criterion) {
    let col = generate(GenKind::RandomUnit, 16, 4, 5).unwrap();
    let cfg = WitnessConfig::default();
    c.bench_function("witness n=16 k=4", |b| {
        b.iter(|| end_to_end_witness(&col, &cfg).unwrap())
    });
}

criterion_group!(benches, cover, elo, decomposition, sampler, witness);
criterion_main!(benches);
