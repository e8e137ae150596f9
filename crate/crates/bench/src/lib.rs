//! Benchmark bodies, shared by the criterion harness in `benches/`.

use std::f64::consts::PI;

use criterion::{black_box, Criterion};
use gatecheck::dynamics::{build_hamiltonian, propagate, propagate_series, pulse_unitary, DriveSpec, ErrorKind, ErrorModel};
use gatecheck::metrics::{series_fit, susceptibilities, Evaluator, Metric};
use gatecheck::optimize::{polish, s3_objective};
use gatecheck::protocols::{protocol_i, protocol_iii, S3Params, Variant};
use gatecheck::BlockadedBasis;

pub fn kernels(c: &mut Criterion) {
    for n in [2, 3] {
        let basis = BlockadedBasis::new(n).unwrap();
        let h = build_hamiltonian(&basis, &DriveSpec::global(0.3, n), &vec![0.1; n]).unwrap();
        c.bench_function(&format!("pulse_unitary_{}", basis.dim()), |b| b.iter(|| pulse_unitary(black_box(&h), 1.7).unwrap()));
    }
}

pub fn propagation(c: &mut Criterion) {
    let iii = protocol_iii(Variant::One).unwrap();
    let model = ErrorModel::new(ErrorKind::AntisymDetuning, 0.05);
    c.bench_function("propagate_iii", |b| b.iter(|| propagate(black_box(&iii), &model, false).unwrap()));
    c.bench_function("propagate_iii_derivative", |b| b.iter(|| propagate(black_box(&iii), &model, true).unwrap()));
    c.bench_function("series_iii_order8", |b| b.iter(|| propagate_series(black_box(&iii), ErrorKind::AntisymDetuning, 8).unwrap()));
}

pub fn metrics(c: &mut Criterion) {
    let seq = protocol_i(Variant::One, PI).unwrap();
    let ev = Evaluator::new(&seq).unwrap();
    let model = ErrorModel::new(ErrorKind::Intensity, 0.05);
    c.bench_function("report_protocol_i", |b| b.iter(|| ev.report(black_box(&model)).unwrap()));
    c.bench_function("susceptibilities_protocol_i", |b| b.iter(|| susceptibilities(black_box(&seq), ErrorKind::Intensity).unwrap()));
    c.bench_function("series_fit_protocol_i", |b| b.iter(|| series_fit(black_box(&seq), ErrorKind::Intensity, Metric::C, 4).unwrap()));
}

pub fn ccz(c: &mut Criterion) {
    let p = S3Params::PRINTED;
    c.bench_function("s3_objective", |b| b.iter(|| s3_objective(black_box(&p)).unwrap()));
    let mut group = c.benchmark_group("slow");
    group.sample_size(10);
    group.bench_function("polish_printed", |b| b.iter(|| polish(black_box(&p)).unwrap()));
    group.finish();
}
