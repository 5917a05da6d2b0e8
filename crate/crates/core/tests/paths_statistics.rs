use insider_core::paths::generate_path;
use insider_core::stats::{normal_cdf, CompensatedSum};
use insider_core::TimeGrid;
use proptest::prelude::*;

/// Asymptotic Kolmogorov tail `P(D > d)` with the usual small-sample correction.
fn ks_p_value(d: f64, n: usize) -> f64 {
    let rn = (n as f64).sqrt();
    let lambda = (rn + 0.12 + 0.11 / rn) * d;
    let mut sum = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-12 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

fn ks_statistic(mut samples: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
    samples.sort_by(f64::total_cmp);
    let n = samples.len() as f64;
    samples
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i as f64 + 1.0) / n - f)
        })
        .fold(0.0, f64::max)
}

#[test]
fn increments_pass_kolmogorov_smirnov() {
    let grid = TimeGrid::new(2.0, 64).unwrap();
    let dt = grid.dt();
    for i in [1, 17, 64] {
        let samples: Vec<f64> = (0..10_000)
            .map(|k| generate_path(grid, 20240101, k).increment(i))
            .collect();
        let d = ks_statistic(samples, |x| normal_cdf(x / dt.sqrt()));
        let p = ks_p_value(d, 10_000);
        assert!(p > 0.01, "increment {i}: D = {d}, p = {p}");
    }
}

#[test]
fn ks_detects_wrong_variance() {
    let grid = TimeGrid::new(1.0, 4).unwrap();
    let samples: Vec<f64> = (0..10_000)
        .map(|k| generate_path(grid, 1, k).increment(1))
        .collect();
    let d = ks_statistic(samples, |x| normal_cdf(x / 0.6));
    assert!(ks_p_value(d, 10_000) < 1e-6);
}

#[test]
fn terminal_value_moments() {
    let t = 1.5;
    let grid = TimeGrid::new(t, 16).unwrap();
    let n = 100_000;
    let values: Vec<f64> = (0..n)
        .map(|k| generate_path(grid, 20240101, k as u64).terminal())
        .collect();
    let mean = values.iter().copied().collect::<CompensatedSum>().value() / n as f64;
    let var = values
        .iter()
        .map(|v| (v - mean) * (v - mean))
        .collect::<CompensatedSum>()
        .value()
        / (n as f64 - 1.0);
    assert!(mean.abs() < 4.0 * (t / n as f64).sqrt(), "mean {mean}");
    assert!((var / t - 1.0).abs() < 0.05, "variance {var}");
}

#[test]
fn single_step_terminal_is_standard_normal() {
    let grid = TimeGrid::new(1.0, 1).unwrap();
    let samples: Vec<f64> = (0..10_000)
        .map(|k| generate_path(grid, 99, k).terminal())
        .collect();
    let d = ks_statistic(samples, normal_cdf);
    assert!(ks_p_value(d, 10_000) > 0.01);
}

#[test]
fn distinct_indices_are_uncorrelated() {
    let grid = TimeGrid::new(1.0, 8).unwrap();
    let n = 20_000;
    let pairs: Vec<(f64, f64)> = (0..n)
        .map(|k| {
            (
                generate_path(grid, 5, 2 * k).terminal(),
                generate_path(grid, 5, 2 * k + 1).terminal(),
            )
        })
        .collect();
    let cov = pairs.iter().map(|(a, b)| a * b).sum::<f64>() / n as f64;
    assert!(cov.abs() < 4.0 / (n as f64).sqrt(), "covariance {cov}");
}

proptest! {
    #[test]
    fn regeneration_is_bit_identical(seed in any::<u64>(), index in any::<u64>(), steps in 1usize..200) {
        let grid = TimeGrid::new(1.0, steps).unwrap();
        let a = generate_path(grid, seed, index);
        let b = generate_path(grid, seed, index);
        prop_assert_eq!(a.values(), b.values());
        prop_assert_eq!(a.value(0), 0.0);
    }

    #[test]
    fn shifts_over_disjoint_windows_compose(
        seed in any::<u64>(),
        rate in -3.0f64..3.0,
        cuts in (0usize..=32, 0usize..=32, 0usize..=32),
    ) {
        let grid = TimeGrid::new(1.0, 32).unwrap();
        let path = generate_path(grid, seed, 0);
        let mut idx = [cuts.0, cuts.1, cuts.2];
        idx.sort();
        let [a, b, c] = idx.map(|i| grid.node(i));
        let two = path.girsanov_shift(rate, a, b).unwrap().girsanov_shift(rate, b, c).unwrap();
        let one = path.girsanov_shift(rate, a, c).unwrap();
        for (x, y) in two.values().iter().zip(one.values()) {
            prop_assert!((x - y).abs() < 1e-12);
        }
        let back = one.girsanov_shift(-rate, a, c).unwrap();
        for (x, y) in back.values().iter().zip(path.values()) {
            prop_assert!((x - y).abs() < 1e-12);
        }
        prop_assert!((one.terminal() - (path.terminal() - rate * (c - a))).abs() < 1e-12);
    }

    #[test]
    fn coarsening_keeps_shared_nodes(seed in any::<u64>(), log_factor in 0u32..5) {
        let grid = TimeGrid::new(2.0, 64).unwrap();
        let path = generate_path(grid, seed, 3);
        let factor = 1usize << log_factor;
        let coarse = path.coarsen(factor).unwrap();
        prop_assert_eq!(coarse.grid().steps(), 64 / factor);
        for i in 0..=coarse.grid().steps() {
            prop_assert_eq!(coarse.value(i), path.value(i * factor));
        }
        prop_assert_eq!(coarse.terminal(), path.terminal());
    }
}
