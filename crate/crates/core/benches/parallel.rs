use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use ising_lab::continuum::{discrete_moment_full, DiscreteMethod, ScalingParams};
use ising_lab::ising::{pair_interaction, partition_exact_with, ExactOptions, Lattice, PairCoupling};
use ising_lab::jump::JumpModel;
use ising_lab::{Execution, Kernel, McConfig};

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn enumeration(c: &mut Criterion) {
    let w = PairCoupling::new(vec![0.8, 0.3, 0.1]).unwrap();
    let j = pair_interaction(&w, Lattice::new(10)).unwrap();
    let mut group = c.benchmark_group("partition_21_sites");
    group.sample_size(10);
    for (name, execution) in MODES {
        let opts = ExactOptions { execution, ..ExactOptions::default() };
        group.bench_with_input(BenchmarkId::from_parameter(name), &opts, |b, opts| {
            b.iter(|| partition_exact_with(black_box(&j), *opts).unwrap())
        });
    }
    group.finish();
}

fn jump_susceptibility(c: &mut Criterion) {
    let model = JumpModel::new(Kernel::exponential(0.05, 1.0).unwrap(), 2.0).unwrap();
    let mut group = c.benchmark_group("jump_susceptibility_20k");
    group.sample_size(10);
    for (name, execution) in MODES {
        let cfg = McConfig::new(20_000, 1).with_execution(execution);
        group.bench_with_input(BenchmarkId::from_parameter(name), &cfg, |b, cfg| {
            b.iter(|| model.mc_susceptibility(cfg).unwrap())
        });
    }
    group.finish();
}

fn discrete_reweighting(c: &mut Criterion) {
    let params = ScalingParams::new(0.05, 1.0).unwrap();
    let kernel = Kernel::exponential(0.01, 1.0).unwrap();
    let mut group = c.benchmark_group("discrete_reweighted_20k");
    group.sample_size(10);
    for (name, execution) in MODES {
        let cfg = McConfig::new(20_000, 1).with_execution(execution);
        group.bench_with_input(BenchmarkId::from_parameter(name), &cfg, |b, cfg| {
            b.iter(|| discrete_moment_full(&params, &[-0.5, 0.5], &kernel, DiscreteMethod::Reweighted, cfg).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, enumeration, jump_susceptibility, discrete_reweighting);
criterion_main!(benches);
