use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use farm_core::corpus::read_corpus_str;
use farm_core::gnn::{train_link, FeatureLookup, GnnConfig};
use farm_core::kg::{build_kg, KgOptions, PrototypeSet};
use farm_core::kge::{self, KgeConfig};
use farm_core::par::Execution;
use farm_core::pipeline::featurize;
use farm_core::tokenize::TokenCounts;

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn corpus(n: usize) -> Vec<String> {
    read_corpus_str(include_str!("../data/corpus_10k.smi")).into_iter().take(n).map(|r| r.smiles).collect()
}

fn bench_featurize(c: &mut Criterion) {
    let smiles = corpus(2000);
    let mut group = c.benchmark_group("featurize_2k");
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| b.iter(|| featurize(black_box(&smiles), exec)));
    }
    group.finish();
}

fn bench_vocab(c: &mut Criterion) {
    let lines: Vec<String> = featurize(&corpus(10_000), Execution::Parallel).tokens.iter().map(|t| t.to_line()).collect();
    let mut group = c.benchmark_group("token_counts_10k");
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| b.iter(|| TokenCounts::from_lines(black_box(&lines), exec)));
    }
    group.finish();
}

fn bench_kg(c: &mut Criterion) {
    let smiles = corpus(2000);
    let mut group = c.benchmark_group("build_kg_2k");
    group.sample_size(20);
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| build_kg(&PrototypeSet::from_smiles(black_box(&smiles), exec), &KgOptions::default(), exec))
        });
    }
    group.finish();
}

fn bench_kge(c: &mut Criterion) {
    let smiles = corpus(2000);
    let triples = build_kg(&PrototypeSet::from_smiles(&smiles, Execution::Parallel), &KgOptions::default(), Execution::Parallel);
    let cfg = KgeConfig { epochs: 1, ..KgeConfig::default() };
    let mut group = c.benchmark_group("kge_epoch");
    group.sample_size(20);
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| b.iter(|| kge::train(black_box(&triples), &cfg, exec).unwrap()));
    }
    group.finish();
}

fn bench_gnn(c: &mut Criterion) {
    let smiles = corpus(1000);
    let data = featurize(&smiles, Execution::Parallel);
    let triples = build_kg(&PrototypeSet::from_smiles(&smiles, Execution::Parallel), &KgOptions::default(), Execution::Parallel);
    let (table, _) = kge::train(&triples, &KgeConfig { epochs: 1, ..KgeConfig::default() }, Execution::Parallel).unwrap();
    let feats = FeatureLookup::new(&table);
    let cfg = GnnConfig { epochs: 1, ..GnnConfig::default() };
    let mut group = c.benchmark_group("gnn_epoch_1k");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| train_link(black_box(&data.graphs), &feats, &cfg, exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, bench_featurize, bench_vocab, bench_kg, bench_kge, bench_gnn);
criterion_main!(benches);
