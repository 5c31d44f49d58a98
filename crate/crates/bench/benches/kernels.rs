use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use qid_bench::{adaptive_strategy, greedy_code, random_channel};
use qid_core::channels::max_output_entropy;
use qid_core::feedback::{coherent_feedback_output, epr_strategy, feedback_output_dist, typical_set};
use qid_core::idcodes::{eval_classical_id, eval_id_errors, hashing_code};
use qid_core::sampling::haar_unitary;
use qid_core::verify::{ld_tail, TailKind};
use qid_core::{QcChannel, Seed};
use std::hint::black_box;

fn sampling(c: &mut Criterion) {
    let mut g = c.benchmark_group("haar_unitary");
    for d in [4, 16, 64] {
        g.bench_with_input(BenchmarkId::from_parameter(d), &d, |b, &d| {
            b.iter(|| haar_unitary(black_box(d), Seed::new(1, 0)).unwrap())
        });
    }
    g.finish();
}

fn codes(c: &mut Criterion) {
    let code = greedy_code(16, 2000);
    c.bench_function(&format!("eval_id_errors/greedy_{}", code.len()), |b| {
        b.iter(|| eval_id_errors(black_box(&code), None).unwrap())
    });
    let classical = hashing_code(1024, 64, 256, Seed::new(1, 0)).unwrap();
    c.bench_function("eval_classical_id/1024x256", |b| b.iter(|| eval_classical_id(black_box(&classical))));
    let mut g = c.benchmark_group("greedy_random_code");
    g.sample_size(10);
    g.bench_function("d16_trials500", |b| b.iter(|| greedy_code(16, 500)));
    g.finish();
}

fn capacities(c: &mut Criterion) {
    let mut g = c.benchmark_group("max_output_entropy");
    for d in [2, 3, 4] {
        let t = random_channel(d, d);
        g.bench_with_input(BenchmarkId::from_parameter(d), &t, |b, t| {
            b.iter(|| max_output_entropy(t, 1e-6).unwrap())
        });
    }
    g.finish();
}

fn feedback(c: &mut Criterion) {
    let w = QcChannel::computational(2);
    let mut g = c.benchmark_group("feedback_output_dist");
    for n in [8, 12, 16] {
        let s = adaptive_strategy(n);
        g.bench_with_input(BenchmarkId::from_parameter(n), &s, |b, s| {
            b.iter(|| {
                let q = feedback_output_dist(s, &w).unwrap();
                typical_set(&q, n, 2, 0.3, 1.0).unwrap()
            })
        });
    }
    g.finish();
    let dilation = random_channel(2, 2).stinespring();
    let mut g = c.benchmark_group("coherent_feedback_output");
    for n in [2, 3] {
        let s = epr_strategy(n, dilation.d_env).unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(n), &s, |b, s| {
            b.iter(|| coherent_feedback_output(s, &dilation).unwrap())
        });
    }
    g.finish();
}

fn tails(c: &mut Criterion) {
    let mut g = c.benchmark_group("ld_tail");
    g.sample_size(10);
    g.bench_function("d32_r4_1000", |b| {
        b.iter(|| ld_tail(32, 4, 0.5, 1000, Seed::new(1, 0), TailKind::LdUpper).unwrap())
    });
    g.finish();
}

criterion_group!(benches, sampling, codes, capacities, feedback, tails);
criterion_main!(benches);
