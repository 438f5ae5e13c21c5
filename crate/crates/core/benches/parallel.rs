use criterion::{criterion_group, criterion_main, Criterion};

use zincflex::backtest::{run_backtest, BacktestConfig, Service};
use zincflex::market_data::{synthesize_scenario, SynthSpec};
use zincflex::Execution;

fn backtest(c: &mut Criterion) {
    let bundle = synthesize_scenario(&SynthSpec {
        days: 4,
        ..SynthSpec::default()
    })
    .unwrap();
    let mut g = c.benchmark_group("fcr_backtest_4_days");
    g.sample_size(10);
    for (name, execution) in [("parallel", Execution::Parallel), ("sequential", Execution::Sequential)] {
        let cfg = BacktestConfig {
            service: Service::Fcr,
            fcr_steps_per_hour: 12,
            execution,
            ..BacktestConfig::default()
        };
        g.bench_function(name, |b| b.iter(|| run_backtest(&bundle, &cfg).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, backtest);
criterion_main!(benches);
