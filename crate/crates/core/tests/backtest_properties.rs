use chrono::{Days, NaiveDate};
use proptest::prelude::*;
use xsalpha_core::analytics::ter;
use xsalpha_core::backtest::{annualize_turnover, run_backtest, run_static_backtest};
use xsalpha_core::datagen::generate;
use xsalpha_core::{
    AlignedPanel, BoundSet, PerformanceReport, StrategyConfig, SynthSpec, WeightVector,
};

fn panel(seed: u64) -> AlignedPanel {
    let mut spec = SynthSpec::uniform(seed, 400, 3, 0.0, 0.004, 0.2);
    spec.excess_drift = vec![0.0002, -0.0001, 0.0];
    generate(&spec.with_equicorrelation(0.2)).unwrap()
}

fn config(panel: &AlignedPanel, every: u32, long_short: bool) -> StrategyConfig {
    let n = panel.n_indices();
    StrategyConfig {
        lookback_days: 28,
        rebalance_every_days: every,
        sigma_annual: 0.04,
        bounds: if long_short {
            BoundSet::long_short(n)
        } else {
            BoundSet::long_only(n)
        },
        cost_spread: 0.0005,
        start: panel.dates()[0],
        end: *panel.dates().last().unwrap(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn truncation_does_not_change_past_decisions(
        seed in any::<u64>(),
        cut in 60u64..380,
        every in 1u32..30,
        long_short in any::<bool>(),
    ) {
        let full_panel = panel(seed);
        let full = run_backtest(&full_panel, &config(&full_panel, every, long_short)).unwrap();
        let cutoff: NaiveDate = full_panel.dates()[0] + Days::new(cut);
        let short_panel = full_panel.truncated(cutoff).unwrap();
        let short = run_backtest(&short_panel, &config(&short_panel, every, long_short)).unwrap();

        let decided = full.rebalance_dates.iter().filter(|d| **d <= cutoff).count();
        prop_assert_eq!(&short.rebalance_dates[..], &full.rebalance_dates[..decided]);
        prop_assert_eq!(&short.targets[..], &full.targets[..decided]);
        let days = short.dates.len();
        prop_assert_eq!(&short.weights_history[..], &full.weights_history[..days]);
        prop_assert_eq!(&short.nav[..], &full.nav[..days]);
    }

    #[test]
    fn strategy_is_self_financing(seed in any::<u64>(), every in 1u32..40, long_short in any::<bool>()) {
        let p = panel(seed);
        let r = run_backtest(&p, &config(&p, every, long_short)).unwrap();
        let first = p.position(r.dates[0]).unwrap();
        let levels: Vec<&[f64]> = p.series().map(|s| s.levels()).collect();

        let mut next = 0;
        let mut held_after: Vec<Vec<f64>> = Vec::new();
        for (k, date) in r.dates.iter().enumerate() {
            if r.rebalance_dates.get(next) == Some(date) {
                held_after.push(r.targets[next].weights().to_vec());
                next += 1;
            } else {
                held_after.push(r.weights_history[k].clone());
            }
        }

        let mut nav = 1.0;
        for t in 1..r.dates.len() {
            let k = first + t;
            let ret: f64 = held_after[t - 1]
                .iter()
                .zip(&levels)
                .map(|(w, l)| w * (l[k] / l[k - 1] - 1.0))
                .sum();
            prop_assert_eq!(r.daily_returns[t - 1], ret);
            nav *= 1.0 + ret;
            prop_assert!((r.nav[t] - nav).abs() <= 1e-12 * nav);
        }
        prop_assert!(r.per_rebalance_turnover.iter().all(|&t| t >= 0.0));
    }

    #[test]
    fn turnover_and_ter_agree(seed in any::<u64>(), every in 1u32..40) {
        let p = panel(seed);
        let cfg = config(&p, every, false);
        let r = run_backtest(&p, &cfg).unwrap();
        let annual = annualize_turnover(&r.per_rebalance_turnover, r.days_elapsed());
        prop_assert_eq!(r.annualized_turnover(), annual);
        prop_assert_eq!(r.ter(), ter(annual, cfg.cost_spread));
        let report = PerformanceReport::compute(&r, &p, None).unwrap();
        prop_assert_eq!(report.ter, r.ter());
        prop_assert_eq!(report.turnover_annual, annual);
    }
}

#[test]
fn holding_the_benchmark_never_trades() {
    let p = panel(5);
    let cfg = config(&p, 7, false);
    let hold = WeightVector::benchmark_only(p.names());
    let r = run_static_backtest(&p, &hold, &cfg).unwrap();
    assert!(r.per_rebalance_turnover.iter().all(|&t| t == 0.0));
    assert_eq!(r.nav_net, r.nav);
    for (nav, bench) in r.nav.iter().zip(&r.benchmark_nav) {
        assert!((nav - bench).abs() <= 1e-12 * bench);
    }
}
