//! Parallel vs sequential throughput on the pipeline's hot loops: pairwise
//! distance matrices, per-lemma clustering, and per-document extraction.
//!
//! The `*_seq` functions are the always-available sequential path; the bare
//! functions dispatch to rayon when the crate is built with the `parallel`
//! feature (the default). Run with `cargo bench -p advsense-core`.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use advsense_core::corpus::{
    extract_corpus, extract_corpus_seq, ingest, ExtractionLexicon, IngestFormat,
};
use advsense_core::embeddings::{
    load_store, pairwise_cosine_distances, pairwise_cosine_distances_seq,
};
use advsense_core::senses::{cluster_all_lemmas, cluster_all_lemmas_seq, ClusterParams};

fn synthetic_vectors(n: usize, dim: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|i| {
            (0..dim)
                .map(|d| {
                    let x = (i as u64)
                        .wrapping_mul(6364136223846793005)
                        .wrapping_add(d as u64 * 1442695040888963407);
                    ((x >> 33) as f64 / (1u64 << 31) as f64) + 0.01
                })
                .collect()
        })
        .collect()
}

fn bench_pairwise(c: &mut Criterion) {
    let mut group = c.benchmark_group("pairwise_cosine_distances");
    for n in [128usize, 512] {
        let vectors = synthetic_vectors(n, 64);
        group.bench_with_input(BenchmarkId::new("seq", n), &vectors, |b, v| {
            b.iter(|| pairwise_cosine_distances_seq(black_box(v)).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("par", n), &vectors, |b, v| {
            b.iter(|| pairwise_cosine_distances(black_box(v)).unwrap())
        });
    }
    group.finish();
}

fn bench_clustering(c: &mut Criterion) {
    let dir = tempfile::tempdir().unwrap();
    let spec = advsense_core::demo::DemoSpec::default();
    let (_, files) = advsense_core::demo::generate(dir.path(), 42, &spec).unwrap();
    let occurrences = advsense_core::demo::extract_demo_occurrences(&files.corpus).unwrap();
    let store = load_store(&files.embeddings).unwrap();
    let params = ClusterParams {
        min_cluster_size: 20,
        ..ClusterParams::default()
    };

    let mut group = c.benchmark_group("cluster_all_lemmas");
    group.sample_size(10);
    group.bench_function("seq", |b| {
        b.iter(|| cluster_all_lemmas_seq(black_box(&occurrences), &store, &params).unwrap())
    });
    group.bench_function("par", |b| {
        b.iter(|| cluster_all_lemmas(black_box(&occurrences), &store, &params).unwrap())
    });
    group.finish();
}

fn bench_extraction(c: &mut Criterion) {
    let dir = tempfile::tempdir().unwrap();
    let mut text = String::new();
    for i in 0..400 {
        let record = serde_json::json!({
            "id": format!("doc-{i}"),
            "text": "He spoke softly near the door. Presumably the garden gate was open. \
                     They walked inland toward the river and turned sharply at the wall. \
                     It rained briefly and then the night grew quiet again.",
        });
        text.push_str(&record.to_string());
        text.push('\n');
    }
    let path = dir.path().join("bench.jsonl");
    std::fs::write(&path, text).unwrap();
    let docs = ingest(&[path], IngestFormat::Jsonl).unwrap();
    let lexicon = ExtractionLexicon::default();

    let mut group = c.benchmark_group("extract_corpus");
    group.bench_function("seq", |b| {
        b.iter(|| extract_corpus_seq(black_box(&docs), &lexicon))
    });
    group.bench_function("par", |b| {
        b.iter(|| extract_corpus(black_box(&docs), &lexicon))
    });
    group.finish();
}

criterion_group!(benches, bench_pairwise, bench_clustering, bench_extraction);
criterion_main!(benches);
