use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use qgate_bench::corpus;
use qgate_core::generation::tokenize;
use qgate_core::{
    diversity_ratio, generate_corpus, quality_score, FillBackend, GenerationConfig,
    NativeEmbedBackend, NativeFillBackend,
};

fn diversity(c: &mut Criterion) {
    let a = "the parser returns the current element when the cache stores all pending events .";
    let b = "the lexer returns the first element when the cache drops all pending events !";
    c.bench_function("diversity_ratio/80ch", |bench| {
        bench.iter(|| diversity_ratio(black_box(a), black_box(b)))
    });
}

fn fill(c: &mut Criterion) {
    let d = corpus(500);
    let backend = NativeFillBackend::train(&d);
    let tokens = tokenize(&d.items[0].text);
    c.bench_function("native_fill/k20x3", |bench| {
        bench.iter(|| backend.fill(black_box(&tokens), &[1, 4, 7], 20).unwrap())
    });
}

fn embed(c: &mut Criterion) {
    let d = corpus(500);
    let backend = NativeEmbedBackend::build(d.items.iter().map(|c| c.text.as_str()));
    let (a, b) = (&d.items[0].text, &d.items[1].text);
    c.bench_function("quality_score/native", |bench| {
        bench.iter(|| quality_score(black_box(a), black_box(b), &backend).unwrap())
    });
}

fn generate(c: &mut Criterion) {
    let d = corpus(100);
    let backend = NativeFillBackend::train(&d);
    let cfg = GenerationConfig::default();
    let mut group = c.benchmark_group("generate_corpus");
    group.sample_size(10);
    group.bench_function("100x10", |bench| {
        bench.iter(|| generate_corpus(&d, &cfg, &backend).unwrap())
    });
    group.finish();
}

criterion_group!(benches, diversity, fill, embed, generate);
criterion_main!(benches);
