use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;
use xsalpha_core::backtest::run_backtest;
use xsalpha_core::datagen::generate;
use xsalpha_core::optimizer::solve;
use xsalpha_core::signal::ExcessReturns;
use xsalpha_core::{AlignedPanel, BoundSet, StrategyConfig, SynthSpec};

fn panel(days: usize, n: usize) -> AlignedPanel {
    let mut spec = SynthSpec::uniform(17, days, n, 0.0003, 0.003, 0.2).with_equicorrelation(0.3);
    spec.excess_drift = (0..n).map(|i| (i as f64 - n as f64 / 2.0) * 5e-5).collect();
    generate(&spec).unwrap()
}

fn strategy(panel: &AlignedPanel, every: u32) -> StrategyConfig {
    StrategyConfig {
        lookback_days: 91,
        rebalance_every_days: every,
        sigma_annual: 0.04,
        bounds: BoundSet::long_only(panel.n_indices()),
        cost_spread: 0.0005,
        start: panel.dates()[0],
        end: *panel.dates().last().unwrap(),
    }
}

fn bench_stats_and_solve(c: &mut Criterion) {
    let mut stats_group = c.benchmark_group("window_stats");
    let mut solve_group_inputs = Vec::new();
    for n in [3usize, 8, 16] {
        let p = panel(400, n);
        let excess = ExcessReturns::from_panel(&p).unwrap();
        let as_of = p.dates()[300];
        stats_group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| excess.stats_at(black_box(as_of), 91).unwrap())
        });
        solve_group_inputs.push((n, excess.stats_at(as_of, 91).unwrap()));
    }
    stats_group.finish();

    let mut solve_group = c.benchmark_group("solve");
    for (n, stats) in &solve_group_inputs {
        for (label, bounds) in [
            ("long_only", BoundSet::long_only(*n)),
            ("long_short", BoundSet::long_short(*n)),
        ] {
            solve_group.bench_with_input(BenchmarkId::new(label, n), stats, |b, s| {
                b.iter(|| solve(black_box(s), &bounds, 0.04).unwrap())
            });
        }
    }
    solve_group.finish();
}

fn bench_backtest(c: &mut Criterion) {
    let p = panel(2000, 5);
    let mut group = c.benchmark_group("backtest");
    group.sample_size(10);
    for every in [28u32, 7] {
        let config = strategy(&p, every);
        group.bench_with_input(BenchmarkId::new("every_days", every), &config, |b, cfg| {
            b.iter(|| run_backtest(black_box(&p), cfg).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, bench_stats_and_solve, bench_backtest);
criterion_main!(benches);
