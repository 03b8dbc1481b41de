use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use opineq::harness::{run_records, Execution, InequalityId, RunConfig};

fn config(id: InequalityId) -> RunConfig {
    RunConfig { inequality_ids: vec![id], dims: vec![4, 8], trials: 64, seed: 1, ..RunConfig::default() }
}

fn sweep(c: &mut Criterion) {
    let mut group = c.benchmark_group("sweep");
    group.sample_size(10);
    for id in [InequalityId::SabUpper, InequalityId::AndoRev, InequalityId::HolderRev] {
        let cfg = config(id);
        for (label, exec) in [("parallel", Execution::Parallel), ("sequential", Execution::Sequential)] {
            group.bench_with_input(BenchmarkId::new(label, id.name()), &cfg, |b, cfg| {
                b.iter(|| run_records(cfg, exec).expect("valid config"))
            });
        }
    }
    group.finish();
}

criterion_group!(benches, sweep);
criterion_main!(benches);
