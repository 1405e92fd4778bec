use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use repcomp::codelen::{self, SkellamParams};
use repcomp::grammar::{self, Parser};
use repcomp::metrics::{self, DistanceConfig, DEFAULT_MAX_PAIRS};
use repcomp::nn::{self, Head, Model, NetSpec, Records, Targets, TrainConfig};
use repcomp::{lookup, Lattice};

fn skellam(c: &mut Criterion) {
    let lat = Lattice::new(0.01).unwrap();
    let small = SkellamParams::new(0.1, lat).unwrap();
    let large = SkellamParams::new(1.0, lat).unwrap();
    c.bench_function("skellam_bits_convolution", |b| b.iter(|| codelen::skellam_bits(black_box(7), &small).unwrap()));
    c.bench_function("skellam_bits_asymptotic", |b| b.iter(|| codelen::skellam_bits(black_box(7), &large).unwrap()));
}

fn earley(c: &mut Criterion) {
    let spec = grammar::build_grammar(5, 3, 2, 100).unwrap();
    let sentences = grammar::sample_sentences(&spec, 64, 16, 0).unwrap();
    let parser = Parser::new(&spec);
    c.bench_function("earley_parse_m16", |b| {
        b.iter(|| {
            for i in 0..sentences.rows() {
                black_box(parser.parse(sentences.row(i)).unwrap());
            }
        })
    });
}

fn training(c: &mut Criterion) {
    let spec = NetSpec::new(8, 2, Head::Categorical { slots: 2, classes: 8 });
    let tokens = (0..64 * 2).map(|i| (i * 7 % 8) as u32).collect();
    let y = (0..64 * 2).map(|i| (i * 3 % 8) as u32).collect();
    let data = Records::new(2, tokens, Targets::Classes { slots: 2, classes: 8, data: y }).unwrap();
    let model = Model::init(&spec, 0).unwrap();
    c.bench_function("gradients_batch64", |b| b.iter(|| model.gradients(black_box(&data)).unwrap()));
    let cfg = TrainConfig { max_epochs: 1, ..Default::default() };
    c.bench_function("train_one_epoch_64", |b| b.iter(|| nn::train(model.clone(), &data, &data, &cfg).unwrap()));
}

fn topsim(c: &mut Criterion) {
    let s = lookup::generate(&lookup::LookupParams { n: 500, ..Default::default() }).unwrap();
    let z: Vec<f64> = s.z.indices().iter().map(|&k| s.z.lattice().value(k)).collect();
    let cfg = DistanceConfig::default();
    c.bench_function("topsim_n500", |b| {
        b.iter(|| metrics::topological_similarity(&s.tokens, black_box(&z), &cfg, DEFAULT_MAX_PAIRS, 0).unwrap())
    });
}

criterion_group!(benches, skellam, earley, training, topsim);
criterion_main!(benches);
