//! Monte Carlo estimation, convergence studies, jump probes and residual
//! evidence.
//!
//! Path `i` of a run is always `generate_path(grid, seed, i)`, so every
//! report is a pure function of its inputs. Paths are sampled in parallel,
//! collected in index order and reduced sequentially with compensated
//! summation; the worker count never changes a result.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytics::{self, OrderingVerdict};
use crate::error::{Error, Result};
use crate::functionals::TerminalFunctional;
use crate::integrators::{
    ak_residual, detect_flips, euler_forward, euler_maruyama_gbm, skorokhod_via_correction,
    Interpretation,
};
use crate::market::{threshold, total_wealth, MarketParams, Strategy};
use crate::paths::{generate_path, BrownianPath, TimeGrid};
use crate::stats::{least_squares_slope, mean_and_stderr, quantile_sorted, CompensatedSum};

pub const DEFAULT_SEED: u64 = 20240101;
pub const DEFAULT_PATHS: usize = 100_000;
pub const DEFAULT_STEPS: usize = 1 << 10;
/// Smallest fitted error slope a scheme must show.
pub const MIN_CONVERGENCE_SLOPE: f64 = 0.4;
pub const MIN_ESTIMATE_PATHS: usize = 100;
pub const MIN_JUMP_PATHS: usize = 1000;
pub const MIN_CONJECTURE_PATHS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MCReport {
    pub estimate: f64,
    pub stderr: f64,
    pub ci95_low: f64,
    pub ci95_high: f64,
    pub paths: usize,
    pub steps: usize,
    pub seed: u64,
    pub wall_time_secs: f64,
}

impl MCReport {
    fn from_samples(samples: &[f64], steps: usize, seed: u64, started: Instant) -> Result<Self> {
        let bad = samples.iter().filter(|v| !v.is_finite()).count();
        if bad > 0 {
            return Err(Error::NonFiniteSamples { count: bad });
        }
        let (estimate, stderr) = mean_and_stderr(samples);
        Ok(Self {
            estimate,
            stderr,
            ci95_low: estimate - 1.96 * stderr,
            ci95_high: estimate + 1.96 * stderr,
            paths: samples.len(),
            steps,
            seed,
            wall_time_secs: started.elapsed().as_secs_f64(),
        })
    }

    /// `|estimate - target|` in units of the standard error.
    pub fn z_score(&self, target: f64) -> f64 {
        (self.estimate - target).abs() / self.stderr
    }

    pub fn within(&self, target: f64, stderrs: f64) -> bool {
        (self.estimate - target).abs() <= stderrs * self.stderr
    }
}

/// Exact solution formula or the discrete scheme for the interpretation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveMethod {
    Exact,
    Scheme,
}

fn per_path<T, F>(paths: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Send + Sync,
{
    (0..paths as u64).into_par_iter().map(f).collect()
}

/// Terminal stock value from the discrete scheme matching `interp`.
///
/// Itô uses plain Euler-Maruyama and needs a deterministic `C`; the forward
/// reading uses forward Euler; Ayed-Kuo and Hitsuda-Skorokhod share the
/// correction scheme since they have the same solution.
pub fn scheme_terminal(
    c: &TerminalFunctional,
    params: &MarketParams,
    path: &BrownianPath,
    interp: Interpretation,
) -> Result<f64> {
    match interp {
        Interpretation::Ito => {
            if !c.is_deterministic() {
                return Err(Error::AnticipatingIto);
            }
            let samples = euler_maruyama_gbm(c.value(0.0), params, path);
            Ok(samples[samples.len() - 1])
        }
        Interpretation::Forward => Ok(euler_forward(c, params, path).terminal()),
        Interpretation::AyedKuo | Interpretation::HitsudaSkorokhod => {
            Ok(skorokhod_via_correction(c, params, path)?.terminal())
        }
    }
}

/// Exact terminal stock value `C_eff(B_T) exp((mu - sigma^2/2) T + sigma B_T)`.
pub fn exact_terminal(
    c: &TerminalFunctional,
    params: &MarketParams,
    path: &BrownianPath,
    interp: Interpretation,
) -> Result<f64> {
    if interp == Interpretation::Ito && !c.is_deterministic() {
        return Err(Error::AnticipatingIto);
    }
    let bt = path.terminal();
    let t = params.horizon;
    let factor = if interp.translates() {
        c.value_translated(bt, params.volatility * t)
    } else {
        c.value(bt)
    };
    Ok(factor * params.gbm_factor(t, bt))
}

fn check_method(c: &TerminalFunctional, interp: Interpretation, method: SolveMethod) -> Result<()> {
    if interp == Interpretation::Ito && !c.is_deterministic() {
        return Err(Error::AnticipatingIto);
    }
    if method == SolveMethod::Scheme
        && interp.translates()
        && matches!(c, TerminalFunctional::Indicator { .. })
    {
        return Err(Error::NonDifferentiable(
            "no correction scheme exists for an indicator functional; use the exact solution"
                .into(),
        ));
    }
    Ok(())
}

/// Mean terminal total wealth over `paths` independent paths.
pub fn estimate_expectation(
    strategy: &Strategy,
    params: &MarketParams,
    interp: Interpretation,
    paths: usize,
    grid: TimeGrid,
    seed: u64,
    method: SolveMethod,
) -> Result<MCReport> {
    strategy.validate(params)?;
    if paths < MIN_ESTIMATE_PATHS {
        return Err(Error::Precondition(format!(
            "need at least {MIN_ESTIMATE_PATHS} paths, got {paths}"
        )));
    }
    check_grid(&grid, params)?;
    let c = strategy.stock_functional(params);
    check_method(&c, interp, method)?;
    let started = Instant::now();
    let bond_growth = (params.rate * params.horizon).exp();
    let samples = per_path(paths, |i| {
        let path = generate_path(grid, seed, i);
        match method {
            SolveMethod::Exact => Ok(total_wealth(strategy, params, &path, interp)?.terminal()),
            SolveMethod::Scheme => {
                let bond = strategy.initial_allocation(params, path.terminal()).bond;
                Ok(scheme_terminal(&c, params, &path, interp)? + bond * bond_growth)
            }
        }
    })?;
    MCReport::from_samples(&samples, grid.steps(), seed, started)
}

fn check_grid(grid: &TimeGrid, params: &MarketParams) -> Result<()> {
    if (grid.horizon() - params.horizon).abs() > 1e-12 * params.horizon {
        return Err(Error::InvalidGrid(format!(
            "grid horizon {} differs from market horizon {}",
            grid.horizon(),
            params.horizon
        )));
    }
    Ok(())
}

/// Monte Carlo means of the honest all-stock trader and the partial-trust
/// insider under each anticipating reading, all on the same paths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloOrdering {
    pub honest: MCReport,
    pub skorokhod: MCReport,
    pub ayed_kuo: MCReport,
    pub forward: MCReport,
}

impl MonteCarloOrdering {
    pub fn verdict(&self) -> OrderingVerdict {
        OrderingVerdict::from_values(
            self.honest.estimate,
            self.skorokhod.estimate,
            self.ayed_kuo.estimate,
            self.forward.estimate,
        )
    }
}

/// Common random numbers: every leg reuses the same seed and path indices.
pub fn ordering_monte_carlo(
    params: &MarketParams,
    paths: usize,
    grid: TimeGrid,
    seed: u64,
) -> Result<MonteCarloOrdering> {
    let run = |strategy: Strategy, interp| {
        estimate_expectation(
            &strategy,
            params,
            interp,
            paths,
            grid,
            seed,
            SolveMethod::Exact,
        )
    };
    Ok(MonteCarloOrdering {
        honest: run(Strategy::honest_all_stock(params), Interpretation::Ito)?,
        skorokhod: run(Strategy::PartialTrust, Interpretation::HitsudaSkorokhod)?,
        ayed_kuo: run(Strategy::PartialTrust, Interpretation::AyedKuo)?,
        forward: run(Strategy::PartialTrust, Interpretation::Forward)?,
    })
}

/// Checks that `steps` is a strictly increasing list of powers of two with
/// at least `min_len` entries.
pub fn validate_step_list(steps: &[usize], min_len: usize) -> Result<()> {
    if steps.len() < min_len {
        return Err(Error::Precondition(format!(
            "need at least {min_len} grid sizes, got {}",
            steps.len()
        )));
    }
    if let Some(&bad) = steps.iter().find(|n| !n.is_power_of_two()) {
        return Err(Error::Precondition(format!(
            "grid size {bad} is not a power of two"
        )));
    }
    if steps.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Precondition(format!(
            "grid sizes must be strictly increasing: {steps:?}"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub steps: usize,
    pub mean_abs_error: f64,
    /// Slope against the previous row, `-log2(e_k / e_{k-1}) / log2(n_k / n_{k-1})`.
    pub local_slope: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTable {
    pub interpretation: Interpretation,
    pub functional: String,
    pub paths: usize,
    pub seed: u64,
    pub rows: Vec<ConvergenceRow>,
    /// Negated least-squares slope of `log2 error` on `log2 n`, fitted with
    /// the coarsest grid left out.
    pub slope: f64,
}

impl ConvergenceTable {
    pub fn passes(&self) -> bool {
        self.slope >= MIN_CONVERGENCE_SLOPE
    }
}

/// Scheme error against the exact solution for the strategy's stock leg.
pub fn convergence_study(
    strategy: &Strategy,
    params: &MarketParams,
    interp: Interpretation,
    steps: &[usize],
    paths: usize,
    seed: u64,
) -> Result<ConvergenceTable> {
    strategy.validate(params)?;
    convergence_study_functional(
        &strategy.stock_functional(params),
        params,
        interp,
        steps,
        paths,
        seed,
    )
}

/// Mean `|scheme(T) - exact(T)|` for each grid size. Each path is drawn once
/// on the finest grid and coarsened, so all grids see the same Brownian
/// motion.
pub fn convergence_study_functional(
    c: &TerminalFunctional,
    params: &MarketParams,
    interp: Interpretation,
    steps: &[usize],
    paths: usize,
    seed: u64,
) -> Result<ConvergenceTable> {
    params.validate()?;
    validate_step_list(steps, 3)?;
    check_method(c, interp, SolveMethod::Scheme)?;
    if paths < 2 {
        return Err(Error::Precondition(
            "a convergence study needs at least two paths".into(),
        ));
    }
    let finest = *steps.last().expect("validated non-empty");
    let grid = TimeGrid::new(params.horizon, finest)?;
    let errors: Vec<Vec<f64>> = per_path(paths, |i| {
        let path = generate_path(grid, seed, i);
        let exact = exact_terminal(c, params, &path, interp)?;
        steps
            .iter()
            .map(|&n| {
                let coarse = path.coarsen(finest / n)?;
                Ok((scheme_terminal(c, params, &coarse, interp)? - exact).abs())
            })
            .collect()
    })?;
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(steps.len());
    for (k, &n) in steps.iter().enumerate() {
        let total: CompensatedSum = errors.iter().map(|e| e[k]).collect();
        let mean = total.value() / paths as f64;
        if !mean.is_finite() {
            return Err(Error::NonFinite("mean scheme error"));
        }
        let local_slope = rows.last().map(|prev: &ConvergenceRow| {
            -(mean / prev.mean_abs_error).log2() / (n as f64 / prev.steps as f64).log2()
        });
        rows.push(ConvergenceRow {
            steps: n,
            mean_abs_error: mean,
            local_slope,
        });
    }
    let x: Vec<f64> = rows[1..].iter().map(|r| (r.steps as f64).log2()).collect();
    let y: Vec<f64> = rows[1..].iter().map(|r| r.mean_abs_error.log2()).collect();
    Ok(ConvergenceTable {
        interpretation: interp,
        functional: c.kind().to_string(),
        paths,
        seed,
        rows,
        slope: -least_squares_slope(&x, &y),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JumpReport {
    pub paths: usize,
    pub steps: usize,
    pub seed: u64,
    /// Paths whose translated indicator solution changes value on `(0, T]`.
    pub flipped_paths: usize,
    pub frequency: f64,
    /// `sqrt(p (1 - p) / N)` at the closed-form probability.
    pub binomial_stderr: f64,
    pub probability: f64,
    /// Mean midpoint time of the detected flips.
    pub mean_jump_time: Option<f64>,
    /// Paths on which the untranslated (forward) indicator solution flips.
    pub forward_flipped_paths: usize,
    /// Paths where the detector disagrees with `z < B_T <= z + sigma T`.
    pub detector_mismatches: usize,
    pub wall_time_secs: f64,
}

impl JumpReport {
    pub fn deviation_in_stderrs(&self) -> f64 {
        (self.frequency - self.probability).abs() / self.binomial_stderr
    }

    pub fn frequency_matches(&self) -> bool {
        (self.frequency - self.probability).abs() <= 4.0 * self.binomial_stderr
    }

    pub fn passes(&self) -> bool {
        self.frequency_matches() && self.forward_flipped_paths == 0 && self.detector_mismatches == 0
    }
}

/// Flip frequency of the exact translated indicator solution, checked
/// against the closed-form jump probability.
pub fn discontinuity_probe(
    params: &MarketParams,
    paths: usize,
    grid: TimeGrid,
    seed: u64,
) -> Result<JumpReport> {
    params.validate()?;
    if paths < MIN_JUMP_PATHS {
        return Err(Error::Precondition(format!(
            "a jump probe needs at least {MIN_JUMP_PATHS} paths, got {paths}"
        )));
    }
    check_grid(&grid, params)?;
    let started = Instant::now();
    let c = Strategy::FullInformation.stock_functional(params);
    let z = threshold(params);
    let shift = params.volatility * params.horizon;
    let per: Vec<(Option<f64>, bool, bool)> = per_path(paths, |i| {
        let path = generate_path(grid, seed, i);
        let flips = detect_flips(&c, params, &path, Interpretation::AyedKuo)?;
        let forward = detect_flips(&c, params, &path, Interpretation::Forward)?;
        let bt = path.terminal();
        let predicted = bt > z && bt - shift <= z;
        Ok((
            flips.first().map(|f| f.time),
            !forward.is_empty(),
            predicted != !flips.is_empty(),
        ))
    })?;
    let times: Vec<f64> = per.iter().filter_map(|p| p.0).collect();
    let flipped = times.len();
    let p = analytics::jump_probability(params)?;
    let mean_jump_time = if times.is_empty() {
        None
    } else {
        Some(times.iter().copied().collect::<CompensatedSum>().value() / flipped as f64)
    };
    Ok(JumpReport {
        paths,
        steps: grid.steps(),
        seed,
        flipped_paths: flipped,
        frequency: flipped as f64 / paths as f64,
        binomial_stderr: (p * (1.0 - p) / paths as f64).sqrt(),
        probability: p,
        mean_jump_time,
        forward_flipped_paths: per.iter().filter(|p| p.1).count(),
        detector_mismatches: per.iter().filter(|p| p.2).count(),
        wall_time_secs: started.elapsed().as_secs_f64(),
    })
}

/// Ranges of the random parameter sweep: `rho, mu` in `[0.001, 0.2]` with
/// `mu > rho`, `sigma` in `[0.01, 3]`, `T` in `[0.1, 5]`, `M` in `[0.5, 5]`.
pub fn parameter_sweep(count: usize, seed: u64) -> Vec<MarketParams> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let a: f64 = rng.random_range(0.001..=0.2);
        let b: f64 = rng.random_range(0.001..=0.2);
        let sigma = rng.random_range(0.01..=3.0);
        let horizon = rng.random_range(0.1..=5.0);
        let wealth = rng.random_range(0.5..=5.0);
        if let Ok(p) = MarketParams::new(wealth, a.min(b), a.max(b), sigma, horizon) {
            out.push(p);
        }
    }
    out
}

/// Which paths a residual row summarizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ResidualGroup {
    IndicatorAll,
    IndicatorFlip,
    IndicatorNoFlip,
    AffineControl,
}

impl ResidualGroup {
    pub const ALL: [ResidualGroup; 4] = [
        Self::IndicatorAll,
        Self::IndicatorFlip,
        Self::IndicatorNoFlip,
        Self::AffineControl,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            Self::IndicatorAll => "indicator-all",
            Self::IndicatorFlip => "indicator-flip",
            Self::IndicatorNoFlip => "indicator-no-flip",
            Self::AffineControl => "affine-control",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualRow {
    pub group: ResidualGroup,
    pub steps: usize,
    pub count: usize,
    pub q10: f64,
    pub q50: f64,
    pub q90: f64,
    pub max: f64,
    pub mean: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Trend {
    Shrinking,
    NotShrinking,
    Inconclusive,
}

impl Trend {
    pub fn label(&self) -> &'static str {
        match self {
            Self::Shrinking => "shrinking",
            Self::NotShrinking => "not-shrinking",
            Self::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupTrend {
    pub group: ResidualGroup,
    /// Negated fitted slope of `log2 mean |R(T)|` on `log2 n`. The mean is
    /// used because indicator paths that end below the threshold have
    /// `R = 0` exactly, which pins the median of those groups at zero.
    pub decay_rate: Option<f64>,
    pub trend: Trend,
}

/// Residual statistics of the translated indicator candidate. Evidence
/// only: nothing here decides whether the candidate solves the equation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConjectureReport {
    pub label: String,
    pub paths: usize,
    pub seed: u64,
    pub rows: Vec<ResidualRow>,
    pub trends: Vec<GroupTrend>,
}

impl ConjectureReport {
    pub fn trend(&self, group: ResidualGroup) -> Trend {
        self.trends
            .iter()
            .find(|t| t.group == group)
            .map_or(Trend::Inconclusive, |t| t.trend)
    }
}

/// Decay rate above which the mean residual counts as shrinking.
pub const SHRINKING_DECAY: f64 = 0.25;
/// Decay rate below which it counts as not shrinking.
pub const FLAT_DECAY: f64 = 0.05;
/// Groups with fewer paths than this get an inconclusive verdict.
pub const MIN_GROUP_SIZE: usize = 20;

fn residual_row(group: ResidualGroup, steps: usize, mut values: Vec<f64>) -> ResidualRow {
    values.sort_by(f64::total_cmp);
    let count = values.len();
    if count == 0 {
        return ResidualRow {
            group,
            steps,
            count,
            q10: f64::NAN,
            q50: f64::NAN,
            q90: f64::NAN,
            max: f64::NAN,
            mean: f64::NAN,
        };
    }
    ResidualRow {
        group,
        steps,
        count,
        q10: quantile_sorted(&values, 0.1),
        q50: quantile_sorted(&values, 0.5),
        q90: quantile_sorted(&values, 0.9),
        max: values[count - 1],
        mean: values.iter().copied().collect::<CompensatedSum>().value() / count as f64,
    }
}

fn classify(rows: &[&ResidualRow]) -> (Option<f64>, Trend) {
    if rows
        .iter()
        .any(|r| r.count < MIN_GROUP_SIZE || !(r.mean > 0.0))
    {
        return (None, Trend::Inconclusive);
    }
    let x: Vec<f64> = rows.iter().map(|r| (r.steps as f64).log2()).collect();
    let y: Vec<f64> = rows.iter().map(|r| r.mean.log2()).collect();
    let rate = -least_squares_slope(&x, &y);
    let trend = if rate >= SHRINKING_DECAY {
        Trend::Shrinking
    } else if rate <= FLAT_DECAY {
        Trend::NotShrinking
    } else {
        Trend::Inconclusive
    };
    (Some(rate), trend)
}

/// Quantiles of `|R(T)|` per grid size, for the indicator candidate (all
/// paths, flip paths, no-flip paths) and for the partial-trust affine
/// candidate whose solution is known.
pub fn conjecture_report(
    params: &MarketParams,
    paths: usize,
    steps: &[usize],
    seed: u64,
) -> Result<ConjectureReport> {
    params.validate()?;
    if paths < MIN_CONJECTURE_PATHS {
        return Err(Error::Precondition(format!(
            "a conjecture report needs at least {MIN_CONJECTURE_PATHS} paths, got {paths}"
        )));
    }
    validate_step_list(steps, 2)?;
    let indicator = Strategy::FullInformation.stock_functional(params);
    let affine = Strategy::PartialTrust.stock_functional(params);
    let z = threshold(params);
    let shift = params.volatility * params.horizon;
    let finest = *steps.last().expect("validated non-empty");
    let grid = TimeGrid::new(params.horizon, finest)?;
    // per path: (flips?, indicator |R| per n, affine |R| per n)
    let per: Vec<(bool, Vec<f64>, Vec<f64>)> = per_path(paths, |i| {
        let path = generate_path(grid, seed, i);
        let bt = path.terminal();
        let flip = bt > z && bt - shift <= z;
        let mut ind = Vec::with_capacity(steps.len());
        let mut aff = Vec::with_capacity(steps.len());
        for &n in steps {
            let coarse = path.coarsen(finest / n)?;
            ind.push(ak_residual(&indicator, params, &coarse)?.terminal().abs());
            aff.push(ak_residual(&affine, params, &coarse)?.terminal().abs());
        }
        Ok((flip, ind, aff))
    })?;
    let mut rows = Vec::new();
    for group in ResidualGroup::ALL {
        for (k, &n) in steps.iter().enumerate() {
            let values: Vec<f64> = per
                .iter()
                .filter(|(flip, _, _)| match group {
                    ResidualGroup::IndicatorFlip => *flip,
                    ResidualGroup::IndicatorNoFlip => !*flip,
                    _ => true,
                })
                .map(|(_, ind, aff)| {
                    if group == ResidualGroup::AffineControl {
                        aff[k]
                    } else {
                        ind[k]
                    }
                })
                .collect();
            rows.push(residual_row(group, n, values));
        }
    }
    let trends = ResidualGroup::ALL
        .iter()
        .map(|&group| {
            let of_group: Vec<&ResidualRow> = rows.iter().filter(|r| r.group == group).collect();
            let (decay_rate, trend) = classify(&of_group);
            GroupTrend {
                group,
                decay_rate,
                trend,
            }
        })
        .collect();
    Ok(ConjectureReport {
        label: "EVIDENCE".into(),
        paths,
        seed,
        rows,
        trends,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize) -> TimeGrid {
        TimeGrid::new(1.0, n).unwrap()
    }

    #[test]
    fn report_invariants() {
        let p = MarketParams::baseline();
        let r = estimate_expectation(
            &Strategy::PartialTrust,
            &p,
            Interpretation::Forward,
            500,
            grid(16),
            7,
            SolveMethod::Exact,
        )
        .unwrap();
        assert_eq!(r.paths, 500);
        assert!((r.ci95_high - r.estimate - 1.96 * r.stderr).abs() < 1e-15);
        assert!((r.estimate - r.ci95_low - 1.96 * r.stderr).abs() < 1e-15);
    }

    #[test]
    fn too_few_paths_is_rejected() {
        let p = MarketParams::baseline();
        let err = estimate_expectation(
            &Strategy::PartialTrust,
            &p,
            Interpretation::Forward,
            99,
            grid(8),
            1,
            SolveMethod::Exact,
        );
        assert!(matches!(err, Err(Error::Precondition(_))));
        assert!(discontinuity_probe(&p, 999, grid(8), 1).is_err());
        assert!(conjecture_report(&p, 99, &[8, 16], 1).is_err());
    }

    #[test]
    fn insider_under_ito_is_rejected() {
        let p = MarketParams::baseline();
        let err = estimate_expectation(
            &Strategy::PartialTrust,
            &p,
            Interpretation::Ito,
            200,
            grid(8),
            1,
            SolveMethod::Exact,
        );
        assert_eq!(err, Err(Error::AnticipatingIto));
    }

    #[test]
    fn estimates_do_not_depend_on_worker_count() {
        let p = MarketParams::baseline();
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| {
                    estimate_expectation(
                        &Strategy::PartialTrust,
                        &p,
                        Interpretation::AyedKuo,
                        2000,
                        grid(32),
                        11,
                        SolveMethod::Exact,
                    )
                    .unwrap()
                })
        };
        let (a, b) = (run(1), run(4));
        assert_eq!(a.estimate.to_bits(), b.estimate.to_bits());
        assert_eq!(a.stderr.to_bits(), b.stderr.to_bits());
    }

    #[test]
    fn scheme_and_exact_estimates_agree_for_honest_trader() {
        let p = MarketParams::baseline();
        let s = Strategy::Honest {
            bond: 0.4,
            stock: 0.6,
        };
        let exact = estimate_expectation(
            &s,
            &p,
            Interpretation::Ito,
            4000,
            grid(256),
            3,
            SolveMethod::Exact,
        )
        .unwrap();
        let scheme = estimate_expectation(
            &s,
            &p,
            Interpretation::Ito,
            4000,
            grid(256),
            3,
            SolveMethod::Scheme,
        )
        .unwrap();
        assert!((exact.estimate - scheme.estimate).abs() < 3.0 * exact.stderr);
        let target = analytics::expected_honest(&p, 0.4, 0.6).unwrap();
        assert!(exact.within(target, 4.0));
    }

    #[test]
    fn indicator_scheme_is_rejected() {
        let p = MarketParams::baseline();
        let err = estimate_expectation(
            &Strategy::FullInformation,
            &p,
            Interpretation::HitsudaSkorokhod,
            200,
            grid(8),
            1,
            SolveMethod::Scheme,
        );
        assert!(matches!(err, Err(Error::NonDifferentiable(_))));
        let err = convergence_study(
            &Strategy::FullInformation,
            &p,
            Interpretation::AyedKuo,
            &[8, 16, 32],
            10,
            1,
        );
        assert!(matches!(err, Err(Error::NonDifferentiable(_))));
    }

    #[test]
    fn step_list_validation() {
        assert!(validate_step_list(&[8, 16], 3).is_err());
        assert!(validate_step_list(&[8, 24, 32], 3).is_err());
        assert!(validate_step_list(&[16, 8, 32], 3).is_err());
        assert!(validate_step_list(&[8, 8, 32], 3).is_err());
        assert!(validate_step_list(&[8, 16, 64], 3).is_ok());
    }

    #[test]
    fn deterministic_functional_converges_like_gbm_euler() {
        let p = MarketParams::baseline();
        let table = convergence_study(
            &Strategy::honest_all_stock(&p),
            &p,
            Interpretation::Ito,
            &[16, 64, 256, 1024],
            200,
            5,
        )
        .unwrap();
        assert!(table.passes(), "slope {}", table.slope);
        assert!(table
            .rows
            .windows(2)
            .all(|w| w[1].mean_abs_error < w[0].mean_abs_error));
    }

    #[test]
    fn stderr_halves_when_paths_quadruple() {
        let p = MarketParams::baseline();
        let s = Strategy::honest_all_stock(&p);
        let small = estimate_expectation(
            &s,
            &p,
            Interpretation::Ito,
            5000,
            grid(4),
            9,
            SolveMethod::Exact,
        )
        .unwrap();
        let large = estimate_expectation(
            &s,
            &p,
            Interpretation::Ito,
            20000,
            grid(4),
            9,
            SolveMethod::Exact,
        )
        .unwrap();
        let ratio = small.stderr / large.stderr;
        assert!((ratio - 2.0).abs() < 0.1, "ratio {ratio}");
    }

    #[test]
    fn sweep_is_valid_and_reproducible() {
        let a = parameter_sweep(200, 4);
        assert_eq!(a, parameter_sweep(200, 4));
        assert_ne!(a, parameter_sweep(200, 5));
        for p in &a {
            assert!(p.validate().is_ok());
            assert!(p.rate >= 0.001 && p.drift <= 0.2 && p.volatility <= 3.0 && p.horizon >= 0.1);
        }
    }

    #[test]
    fn jump_detector_matches_inequality() {
        let p = MarketParams::baseline();
        let r = discontinuity_probe(&p, 2000, grid(64), 13).unwrap();
        assert_eq!(r.detector_mismatches, 0);
        assert_eq!(r.forward_flipped_paths, 0);
        let t = r.mean_jump_time.unwrap();
        assert!(t > 0.0 && t < 1.0);
    }

    #[test]
    fn conjecture_report_groups_partition_paths() {
        let p = MarketParams::baseline();
        let r = conjecture_report(&p, 300, &[16, 64], 2).unwrap();
        assert_eq!(r.label, "EVIDENCE");
        for n in [16, 64] {
            let count = |g| {
                r.rows
                    .iter()
                    .find(|row| row.group == g && row.steps == n)
                    .unwrap()
                    .count
            };
            assert_eq!(
                count(ResidualGroup::IndicatorFlip) + count(ResidualGroup::IndicatorNoFlip),
                300
            );
            assert_eq!(count(ResidualGroup::IndicatorAll), 300);
        }
    }
}
