use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use avcp_core::arrange::{avcp_check, mc_expected_output, Arrangement, McOptions};
use avcp_core::opcore::{haar_state, HermitianOperator};
use avcp_core::{Execution, StreamFactory};

const BACKENDS: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn monte_carlo(c: &mut Criterion) {
    let mut rng = StreamFactory::new(3).stream(0);
    let a = HermitianOperator::random(4, &mut rng);
    let b = HermitianOperator::random(4, &mut rng);
    let arr = Arrangement::builder()
        .measure("a", a)
        .measure("b", b)
        .copies(vec![0, 1])
        .combine("a*b + a^2")
        .build()
        .unwrap();
    let v = haar_state(4, &mut rng);
    let mut g = c.benchmark_group("mc_expected_output");
    g.sample_size(10);
    for (name, exec) in BACKENDS {
        let opts = McOptions { execution: exec, ..McOptions::new(100_000, 9) };
        g.bench_with_input(BenchmarkId::new(name, opts.runs), &opts, |bch, o| {
            bch.iter(|| mc_expected_output(&arr, &v, o).unwrap().mean)
        });
    }
    g.finish();
}

fn haar_sweep(c: &mut Criterion) {
    let mut rng = StreamFactory::new(4).stream(0);
    let a = HermitianOperator::random(5, &mut rng);
    let arr = Arrangement::builder().measure("a", a.clone()).combine("a^3 - a").build().unwrap();
    let cop = HermitianOperator::new(a.matrix() * a.matrix() * a.matrix() - a.matrix()).unwrap();
    let mut g = c.benchmark_group("haar_sweep");
    g.sample_size(10);
    for (name, exec) in BACKENDS {
        g.bench_function(BenchmarkId::new(name, 2_000), |bch| {
            bch.iter(|| {
                let streams = StreamFactory::new(11);
                let states = exec.map_indexed(2_000, |i| haar_state(5, &mut streams.stream(i as u64)));
                avcp_check(&arr, &cop, &states, 1e-10).unwrap().max_deviation
            })
        });
    }
    g.finish();
}

criterion_group!(benches, monte_carlo, haar_sweep);
criterion_main!(benches);
