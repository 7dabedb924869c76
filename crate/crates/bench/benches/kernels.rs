use std::hint::black_box;

use arqkey::analysis::{cs_rayleigh, exp_integral_e1};
use arqkey::fec::{conv_encode, ConvCodeSpec, DecisionMode, ViterbiDecoder};
use arqkey::protocol::run_exchange;
use arqkey::rng::stream;
use arqkey::{Bits, ChannelSpec, OperatingPoint, ProtocolParams};
use criterion::{criterion_group, criterion_main, Criterion};

fn special(c: &mut Criterion) {
    c.bench_function("e1_series_and_fraction", |b| {
        b.iter(|| {
            exp_integral_e1(black_box(0.3)).unwrap() + exp_integral_e1(black_box(7.0)).unwrap()
        })
    });
    c.bench_function("cs_closed_form", |b| {
        b.iter(|| cs_rayleigh(black_box(4.0), black_box(1000.0)).unwrap())
    });
}

fn viterbi(c: &mut Criterion) {
    let spec = ConvCodeSpec::k7();
    let info = Bits::random(480, &mut stream(0, 0));
    let soft: Vec<f64> = conv_encode(&spec, info.as_slice())
        .unwrap()
        .iter()
        .map(|&b| 1.0 - 2.0 * f64::from(b))
        .collect();
    let dec = ViterbiDecoder::new(spec, DecisionMode::Soft).unwrap();
    c.bench_function("viterbi_480_bits", |b| {
        b.iter(|| dec.decode(black_box(&soft), 480).unwrap())
    });
}

fn exchange(c: &mut Criterion) {
    let point = OperatingPoint::new(4.0, 2.0, 1000.0, 10).unwrap();
    let params = ProtocolParams::new(point, 1);
    let spec = ChannelSpec::symmetric(1000.0).unwrap();
    let mut i = 0;
    c.bench_function("run_exchange_k10", |b| {
        b.iter(|| {
            i += 1;
            run_exchange(&params, &spec, &mut stream(1, i)).unwrap()
        })
    });
}

criterion_group!(benches, special, viterbi, exchange);
criterion_main!(benches);
