use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use ethsim_bench::{header, payload};
use ethsim_core::controller::{loopback_frame, tx_transaction, ControllerConfig, Design};
use ethsim_core::dma::{legalize, Direction, TransferRequest};
use ethsim_core::frame::crc32;
use std::hint::black_box;

fn crc(c: &mut Criterion) {
    let data = payload(1500);
    let mut g = c.benchmark_group("crc32");
    g.throughput(Throughput::Bytes(data.len() as u64));
    g.bench_function("1500B", |b| b.iter(|| crc32(black_box(&data))));
    g.finish();
}

fn legalizer(c: &mut Criterion) {
    let req = TransferRequest::new(1, Direction::MemToStream, 0xFFD, 9_000).unwrap();
    c.bench_function("legalize 9000B unaligned", |b| {
        b.iter(|| legalize(black_box(&req), 8, 256).unwrap())
    });
}

/// Simulator speed: wall time to model one full transmit transaction.
fn transmit(c: &mut Criterion) {
    let cfg = ControllerConfig::default();
    let h = header();
    let mut g = c.benchmark_group("tx_transaction");
    for p in [256usize, 1024] {
        let data = payload(p);
        for d in [Design::Buffered, Design::Bufferless] {
            g.bench_with_input(BenchmarkId::new(d.as_str(), p), &data, |b, data| {
                b.iter(|| tx_transaction(d, &cfg, &h, data, None).unwrap())
            });
        }
    }
    g.finish();
}

fn loopback(c: &mut Criterion) {
    let cfg = ControllerConfig::default();
    let h = header();
    let data = payload(1500);
    c.bench_function("loopback 1500B", |b| {
        b.iter(|| loopback_frame(Design::Bufferless, &cfg, &h, &data, 0x1_0003, 0x2_0005).unwrap())
    });
}

criterion_group!(benches, crc, legalizer, transmit, loopback);
criterion_main!(benches);
