use insider_core::functionals::malliavin_trace_partial;
use insider_core::integrators::solution_integrand;
use insider_core::paths::generate_path;
use insider_core::{
    BrownianPath, MarketParams, MonotoneSmooth, ProductIntegrand, Strategy as Trading,
    TerminalFunctional, TimeGrid,
};
use proptest::prelude::*;

/// Evaluates `u(t_k)` on `path`, reading `B_s` at node `k` and `B_T - B_s`
/// from the terminal value.
fn integrand_on_path(u: &ProductIntegrand, path: &BrownianPath, k: usize) -> f64 {
    let x = path.value(k);
    u.evaluate(path.grid().node(k), x, path.terminal() - x)
}

/// Central difference along the Cameron-Martin direction that raises the
/// path by `eps` strictly after `t_k`, which moves `B_T - B_s` but not `B_s`.
fn cameron_martin_derivative(u: &ProductIntegrand, path: &BrownianPath, k: usize, eps: f64) -> f64 {
    let bumped = |e: f64| {
        let values = path
            .values()
            .iter()
            .enumerate()
            .map(|(i, &w)| if i > k { w + e } else { w })
            .collect();
        BrownianPath::from_values(*path.grid(), values).unwrap()
    };
    (integrand_on_path(u, &bumped(eps), k) - integrand_on_path(u, &bumped(-eps), k)) / (2.0 * eps)
}

fn smooth_families(params: &MarketParams) -> Vec<(&'static str, TerminalFunctional)> {
    vec![
        (
            "partial-trust affine",
            Trading::PartialTrust.stock_functional(params),
        ),
        (
            "logistic",
            TerminalFunctional::Monotone(
                MonotoneSmooth::logistic(1.0, 1.3, params.horizon).unwrap(),
            ),
        ),
        (
            "arctan",
            TerminalFunctional::Monotone(MonotoneSmooth::arctan(2.0, 0.7, params.horizon).unwrap()),
        ),
    ]
}

#[test]
fn trace_matches_cameron_martin_derivative() {
    let params = MarketParams::baseline();
    let grid = TimeGrid::new(params.horizon, 64).unwrap();
    for (name, c) in smooth_families(&params) {
        let u = solution_integrand(&c, &params);
        for (sample, k) in [(0u64, 0usize), (1, 9), (2, 31), (3, 50), (4, 63)] {
            let path = generate_path(grid, 77, sample);
            let x = path.value(k);
            let trace = malliavin_trace_partial(&u, grid.node(k), x, path.terminal() - x).unwrap();
            let fd = cameron_martin_derivative(&u, &path, k, 1e-6);
            let rel = (trace - fd).abs() / trace.abs().max(1e-300);
            assert!(
                rel < 1e-4,
                "{name} at node {k}: trace {trace} vs finite difference {fd}"
            );
        }
    }
}

#[test]
fn affine_trace_is_slope_times_exponential() {
    let params = MarketParams::baseline();
    let c = Trading::PartialTrust.stock_functional(&params);
    let TerminalFunctional::Affine { slope, .. } = c else {
        unreachable!()
    };
    let u = solution_integrand(&c, &params);
    for (s, x, y) in [(0.0, 0.0, 0.3), (0.25, -0.4, 1.1), (0.9, 0.7, -0.2)] {
        let trace = u.malliavin_trace_partial(s, x, y).unwrap();
        let expected = slope * params.gbm_factor(s, x);
        assert!((trace - expected).abs() < 1e-14 * expected.abs());
        // sigma M / (2 (mu - rho) T) exp((mu - sigma^2/2) s + sigma B_s)
        let closed =
            params.volatility * params.wealth / params.tilt_denominator() * params.gbm_factor(s, x);
        assert!((trace - closed).abs() < 1e-14 * closed.abs());
    }
}

#[test]
fn indicator_trace_is_refused() {
    let params = MarketParams::baseline();
    let u = solution_integrand(&Trading::FullInformation.stock_functional(&params), &params);
    assert!(u.malliavin_trace_partial(0.5, 0.0, 0.0).is_err());
}

fn any_functional() -> impl Strategy<Value = TerminalFunctional> {
    prop_oneof![
        (-5.0f64..5.0, -5.0f64..5.0).prop_map(|(a, b)| TerminalFunctional::affine(a, b)),
        (0.1f64..5.0, -2.0f64..2.0).prop_map(|(m, z)| TerminalFunctional::indicator(m, z)),
        (0.1f64..5.0, 0.1f64..3.0).prop_map(|(m, r)| TerminalFunctional::Monotone(
            MonotoneSmooth::logistic(m, r, 1.0).unwrap()
        )),
        (0.1f64..5.0, 0.1f64..3.0).prop_map(|(m, r)| TerminalFunctional::Monotone(
            MonotoneSmooth::arctan(m, r, 1.0).unwrap()
        )),
    ]
}

proptest! {
    #[test]
    fn translation_is_a_group_action(c in any_functional(), s1 in -3.0f64..3.0, s2 in -3.0f64..3.0, x in -6.0f64..6.0) {
        let twice = c.translate(s1).translate(s2).value(x);
        let once = c.translate(s1 + s2).value(x);
        let direct = c.value(x - s1 - s2);
        prop_assert!((twice - once).abs() <= 1e-12 * (1.0 + once.abs()));
        if !matches!(c, TerminalFunctional::Indicator { .. }) {
            prop_assert!((once - direct).abs() <= 1e-12 * (1.0 + direct.abs()));
        }
    }

    #[test]
    fn affine_wick_product_commutes_with_scaling(
        a in -5.0f64..5.0, b in -5.0f64..5.0, k in -4.0f64..4.0,
        sigma in 0.01f64..3.0, t in 0.0f64..1.0, x in -5.0f64..5.0,
    ) {
        let c = TerminalFunctional::affine(a, b);
        let scaled = TerminalFunctional::affine(k * a, k * b);
        let lhs = scaled.wick_with_exponential(sigma, t).unwrap().value(x);
        let rhs = k * c.wick_with_exponential(sigma, t).unwrap().value(x);
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + rhs.abs()));
    }

    #[test]
    fn monotone_functionals_never_decrease(c in any_functional(), x in -8.0f64..8.0, dx in 0.0f64..2.0) {
        if let TerminalFunctional::Affine { slope, .. } = c {
            prop_assume!(slope >= 0.0);
        }
        prop_assert!(c.value(x + dx) >= c.value(x));
    }

    #[test]
    fn indicator_takes_two_values(m in 0.1f64..5.0, z in -2.0f64..2.0, x in -5.0f64..5.0) {
        let v = TerminalFunctional::indicator(m, z).value(x);
        prop_assert!(v == 0.0 || v == m);
        prop_assert_eq!(v == m, x > z);
    }
}
