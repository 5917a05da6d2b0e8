use std::time::Instant;

use anyhow::Context;
use insider_core::analytics::{self, Method, OrderingVerdict, WealthTable};
use insider_core::harness::{
    self, ConjectureReport, ConvergenceTable, JumpReport, MonteCarloOrdering, ResidualGroup,
};
use insider_core::{
    Interpretation, MarketParams, MonotoneSmooth, Strategy, TerminalFunctional, TimeGrid,
};
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::output::{emit_csv, emit_json, opt, render_csv};
use crate::{CommonArgs, ConjectureArgs, ConvergeArgs, ExpectArgs, JumpArgs, SweepArgs};

/// Largest `|closed form - quadrature| / M` accepted.
const QUADRATURE_AGREEMENT: f64 = 1e-8;
/// Smallest `(E_RV - E_AK) / M` accepted for monotone functionals.
const MONOTONE_MARGIN: f64 = 1e-10;

const DEFAULT_CONVERGE_STEPS: [usize; 4] = [1 << 8, 1 << 10, 1 << 12, 1 << 14];
const DEFAULT_CONVERGE_PATHS: usize = 1000;
const DEFAULT_CONJECTURE_STEPS: [usize; 3] = [1 << 8, 1 << 10, 1 << 12];
const DEFAULT_CONJECTURE_PATHS: usize = 1000;
const DEFAULT_SWEEP_SETS: usize = 1000;

/// File, then env and flags on top; also sizes the worker pool.
fn resolve(common: &CommonArgs) -> anyhow::Result<ExperimentConfig> {
    let mut config = match &common.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    let m = &common.market;
    let market = &mut config.market;
    for (flag, slot) in [
        (m.wealth, &mut market.wealth),
        (m.rate, &mut market.rate),
        (m.drift, &mut market.drift),
        (m.volatility, &mut market.volatility),
        (m.horizon, &mut market.horizon),
    ] {
        if let Some(v) = flag {
            *slot = v;
        }
    }
    config.validate()?;
    config.run.seed = Some(
        common
            .seed
            .or(config.run.seed)
            .unwrap_or(harness::DEFAULT_SEED),
    );
    if let Some(w) = common.workers {
        config.run.workers = Some(w);
    }
    if let Some(w) = config.run.workers.filter(|&w| w > 0) {
        // only fails if a pool already exists, which cannot happen here
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build_global();
    }
    if common.csv.is_some() {
        config.output.csv.clone_from(&common.csv);
    }
    if common.json.is_some() {
        config.output.json.clone_from(&common.json);
    }
    Ok(config)
}

fn seed(config: &ExperimentConfig) -> u64 {
    config.run.seed.expect("seed is resolved")
}

fn finish<T: Serialize>(
    command: &str,
    config: &ExperimentConfig,
    header: &[&str],
    rows: &[Vec<String>],
    summary: &T,
) -> anyhow::Result<()> {
    let text = render_csv(command, config, header, rows)?;
    emit_csv(&text, config.output.csv.as_deref())?;
    emit_json(summary, config.output.json.as_deref())
}

fn verdict_cells(v: &OrderingVerdict) -> [String; 5] {
    [
        v.skorokhod_equals_ayed_kuo.to_string(),
        v.skorokhod_below_honest.to_string(),
        v.ayed_kuo_below_honest.to_string(),
        v.honest_below_forward.to_string(),
        (v.skorokhod < 0.0).to_string(),
    ]
}

fn max_gap(a: &WealthTable, b: &WealthTable) -> f64 {
    [
        (a.honest - b.honest).abs(),
        (a.skorokhod - b.skorokhod).abs(),
        (a.ayed_kuo - b.ayed_kuo).abs(),
        (a.forward - b.forward).abs(),
    ]
    .into_iter()
    .fold(0.0, f64::max)
        / a.params.wealth
}

#[derive(Serialize)]
struct ExpectSummary<'a> {
    command: &'static str,
    config: &'a ExperimentConfig,
    closed_form: WealthTable,
    quadrature: WealthTable,
    monte_carlo: Option<MonteCarloOrdering>,
    verdicts: OrderingVerdict,
    max_quadrature_gap: f64,
    debt: bool,
    passed: bool,
    wall_time_secs: f64,
}

pub fn expect(args: ExpectArgs) -> anyhow::Result<bool> {
    let started = Instant::now();
    let mut config = resolve(&args.common)?;
    let monte_carlo = args.monte_carlo || config.run.monte_carlo.unwrap_or(false);
    config.run.monte_carlo = Some(monte_carlo);
    let p = config.market;
    let closed = WealthTable::closed_form(&p)?;
    let quad = WealthTable::quadrature(&p)?;
    let mc = if monte_carlo {
        let paths = args
            .paths
            .or(config.run.paths)
            .unwrap_or(harness::DEFAULT_PATHS);
        let steps = args
            .steps
            .or(config.run.steps)
            .unwrap_or(harness::DEFAULT_STEPS);
        config.run.paths = Some(paths);
        config.run.steps = Some(steps);
        Some(harness::ordering_monte_carlo(
            &p,
            paths,
            TimeGrid::new(p.horizon, steps)?,
            seed(&config),
        )?)
    } else {
        None
    };
    let mut tables = vec![closed, quad];
    if let Some(r) = &mc {
        tables.push(WealthTable {
            params: p,
            method: Method::MonteCarlo,
            honest: r.honest.estimate,
            skorokhod: r.skorokhod.estimate,
            ayed_kuo: r.ayed_kuo.estimate,
            forward: r.forward.estimate,
        });
    }
    let mut header: Vec<&str> = WealthTable::CSV_HEADER.to_vec();
    header.extend(["hs_eq_ak", "hs_lt_i", "ak_lt_i", "i_lt_rv", "debt"]);
    let rows: Vec<Vec<String>> = tables
        .iter()
        .map(|t| {
            t.csv_record()
                .into_iter()
                .chain(verdict_cells(&t.verdict()))
                .collect()
        })
        .collect();

    let gap = max_gap(&closed, &quad);
    let verdicts = closed.verdict();
    let passed = verdicts.all_hold() && quad.verdict().all_hold() && gap < QUADRATURE_AGREEMENT;
    eprintln!(
        "{:<12} {:>14} {:>14} {:>14} {:>14}",
        "method", "E_I", "E_HS", "E_AK", "E_RV"
    );
    for t in &tables {
        eprintln!(
            "{:<12} {:>14.8} {:>14.8} {:>14.8} {:>14.8}",
            t.method.label(),
            t.honest,
            t.skorokhod,
            t.ayed_kuo,
            t.forward
        );
    }
    if let Some(r) = &mc {
        eprintln!(
            "{:<12} {:>14.8} {:>14.8} {:>14.8} {:>14.8}",
            "mc stderr", r.honest.stderr, r.skorokhod.stderr, r.ayed_kuo.stderr, r.forward.stderr
        );
    }
    eprintln!(
        "E_HS = E_AK: {}  E_HS < E_I: {}  E_AK < E_I: {}  E_I < E_RV: {}",
        verdicts.skorokhod_equals_ayed_kuo,
        verdicts.skorokhod_below_honest,
        verdicts.ayed_kuo_below_honest,
        verdicts.honest_below_forward
    );
    if closed.skorokhod < 0.0 {
        eprintln!("debt: E_HS = {:.6} < 0", closed.skorokhod);
    }
    eprintln!("max |closed form - quadrature| / M = {gap:.3e}");
    let summary = ExpectSummary {
        command: "expect",
        config: &config,
        closed_form: closed,
        quadrature: quad,
        monte_carlo: mc,
        verdicts,
        max_quadrature_gap: gap,
        debt: closed.skorokhod < 0.0,
        passed,
        wall_time_secs: started.elapsed().as_secs_f64(),
    };
    finish("expect", &config, &header, &rows, &summary)?;
    Ok(passed)
}

#[derive(Serialize)]
struct ConvergeSummary<'a> {
    command: &'static str,
    config: &'a ExperimentConfig,
    tables: &'a [ConvergenceTable],
    min_slope: f64,
    passed: bool,
    wall_time_secs: f64,
}

pub fn converge(args: ConvergeArgs) -> anyhow::Result<bool> {
    let started = Instant::now();
    let mut config = resolve(&args.common)?;
    let interps = args
        .interp
        .or(config.run.interpretations.clone())
        .unwrap_or_else(|| vec![Interpretation::Forward, Interpretation::HitsudaSkorokhod]);
    let steps = args
        .steps_list
        .or(config.run.steps_list.clone())
        .unwrap_or_else(|| DEFAULT_CONVERGE_STEPS.to_vec());
    let paths = args
        .paths
        .or(config.run.paths)
        .unwrap_or(DEFAULT_CONVERGE_PATHS);
    config.run.interpretations = Some(interps.clone());
    config.run.steps_list = Some(steps.clone());
    config.run.paths = Some(paths);
    let p = config.market;
    let c = config.strategy.functional(&p)?;
    let tables = interps
        .iter()
        .map(|&interp| {
            harness::convergence_study_functional(&c, &p, interp, &steps, paths, seed(&config))
        })
        .collect::<insider_core::Result<Vec<_>>>()?;

    let header = [
        "interpretation",
        "functional",
        "n",
        "mean_abs_error",
        "local_slope",
        "fitted_slope",
        "passes",
    ];
    let mut rows = Vec::new();
    for t in &tables {
        eprintln!(
            "{} ({}): fitted slope {:.4}",
            t.interpretation, t.functional, t.slope
        );
        for r in &t.rows {
            eprintln!(
                "  n = {:>6}  mean |error| = {:.6e}",
                r.steps, r.mean_abs_error
            );
            rows.push(vec![
                t.interpretation.to_string(),
                t.functional.clone(),
                r.steps.to_string(),
                r.mean_abs_error.to_string(),
                opt(r.local_slope),
                t.slope.to_string(),
                t.passes().to_string(),
            ]);
        }
    }
    let passed = tables.iter().all(ConvergenceTable::passes);
    let summary = ConvergeSummary {
        command: "converge",
        config: &config,
        tables: &tables,
        min_slope: tables.iter().map(|t| t.slope).fold(f64::INFINITY, f64::min),
        passed,
        wall_time_secs: started.elapsed().as_secs_f64(),
    };
    finish("converge", &config, &header, &rows, &summary)?;
    Ok(passed)
}

#[derive(Serialize)]
struct JumpSummary<'a> {
    command: &'static str,
    config: &'a ExperimentConfig,
    report: JumpReport,
    passed: bool,
}

pub fn jump(args: JumpArgs) -> anyhow::Result<bool> {
    let mut config = resolve(&args.common)?;
    let paths = args
        .paths
        .or(config.run.paths)
        .unwrap_or(harness::DEFAULT_PATHS);
    let steps = args
        .steps
        .or(config.run.steps)
        .unwrap_or(harness::DEFAULT_STEPS);
    config.run.paths = Some(paths);
    config.run.steps = Some(steps);
    let p = config.market;
    let report =
        harness::discontinuity_probe(&p, paths, TimeGrid::new(p.horizon, steps)?, seed(&config))?;
    let header = [
        "paths",
        "steps",
        "seed",
        "flipped_paths",
        "frequency",
        "binomial_stderr",
        "probability",
        "deviation_stderrs",
        "mean_jump_time",
        "forward_flipped_paths",
        "detector_mismatches",
    ];
    let row = vec![
        report.paths.to_string(),
        report.steps.to_string(),
        report.seed.to_string(),
        report.flipped_paths.to_string(),
        report.frequency.to_string(),
        report.binomial_stderr.to_string(),
        report.probability.to_string(),
        report.deviation_in_stderrs().to_string(),
        opt(report.mean_jump_time),
        report.forward_flipped_paths.to_string(),
        report.detector_mismatches.to_string(),
    ];
    eprintln!(
        "flip frequency {:.5} vs closed form {:.5} ({:.2} stderr); forward flips: {}",
        report.frequency,
        report.probability,
        report.deviation_in_stderrs(),
        report.forward_flipped_paths
    );
    let passed = report.passes();
    finish(
        "jump",
        &config,
        &header,
        &[row],
        &JumpSummary {
            command: "jump",
            config: &config,
            report,
            passed,
        },
    )?;
    Ok(passed)
}

#[derive(Serialize)]
struct ConjectureSummary<'a> {
    command: &'static str,
    config: &'a ExperimentConfig,
    report: &'a ConjectureReport,
}

pub fn conjecture(args: ConjectureArgs) -> anyhow::Result<bool> {
    let mut config = resolve(&args.common)?;
    let steps = args
        .steps_list
        .or(config.run.steps_list.clone())
        .unwrap_or_else(|| DEFAULT_CONJECTURE_STEPS.to_vec());
    let paths = args
        .paths
        .or(config.run.paths)
        .unwrap_or(DEFAULT_CONJECTURE_PATHS);
    let control_only = args.affine_control || config.run.affine_control.unwrap_or(false);
    config.run.steps_list = Some(steps.clone());
    config.run.paths = Some(paths);
    config.run.affine_control = Some(control_only);
    let report = harness::conjecture_report(&config.market, paths, &steps, seed(&config))?;

    let header = [
        "group",
        "n",
        "count",
        "q10",
        "q50",
        "q90",
        "max",
        "mean",
        "decay_rate",
        "trend",
    ];
    let rows: Vec<Vec<String>> = report
        .rows
        .iter()
        .filter(|r| !control_only || r.group == ResidualGroup::AffineControl)
        .map(|r| {
            let trend = report
                .trends
                .iter()
                .find(|t| t.group == r.group)
                .expect("one trend per group");
            vec![
                r.group.label().to_string(),
                r.steps.to_string(),
                r.count.to_string(),
                r.q10.to_string(),
                r.q50.to_string(),
                r.q90.to_string(),
                r.max.to_string(),
                r.mean.to_string(),
                opt(trend.decay_rate),
                trend.trend.label().to_string(),
            ]
        })
        .collect();
    eprintln!(
        "{}: residual |R(T)| of the translated indicator candidate",
        report.label
    );
    for t in &report.trends {
        if !control_only || t.group == ResidualGroup::AffineControl {
            eprintln!("  {:<18} {}", t.group.label(), t.trend.label());
        }
    }
    finish(
        "conjecture",
        &config,
        &header,
        &rows,
        &ConjectureSummary {
            command: "conjecture",
            config: &config,
            report: &report,
        },
    )?;
    Ok(true)
}

#[derive(Serialize)]
struct SweepRow {
    params: MarketParams,
    closed_form: WealthTable,
    quadrature: WealthTable,
    max_quadrature_gap: f64,
    chain: bool,
    logistic_margin: f64,
    arctan_margin: f64,
    affine_margin: f64,
}

impl SweepRow {
    fn passes(&self) -> bool {
        self.chain
            && self.max_quadrature_gap < QUADRATURE_AGREEMENT
            && [self.logistic_margin, self.arctan_margin, self.affine_margin]
                .iter()
                .all(|&m| m > MONOTONE_MARGIN)
    }
}

fn sweep_row(p: &MarketParams) -> anyhow::Result<SweepRow> {
    let closed = WealthTable::closed_form(p)?;
    let quadrature = WealthTable::quadrature(p)?;
    let margin = |c: TerminalFunctional| -> anyhow::Result<f64> {
        let (ak, rv) = analytics::ordering_monotone(&c, p)?;
        Ok((rv - ak) / p.wealth)
    };
    Ok(SweepRow {
        params: *p,
        max_quadrature_gap: max_gap(&closed, &quadrature),
        chain: closed.verdict().all_hold(),
        logistic_margin: margin(TerminalFunctional::Monotone(MonotoneSmooth::logistic(
            p.wealth, 1.0, p.horizon,
        )?))?,
        arctan_margin: margin(TerminalFunctional::Monotone(MonotoneSmooth::arctan(
            p.wealth, 1.0, p.horizon,
        )?))?,
        affine_margin: margin(Strategy::PartialTrust.stock_functional(p))?,
        closed_form: closed,
        quadrature,
    })
}

#[derive(Serialize)]
struct SweepSummary<'a> {
    command: &'static str,
    config: &'a ExperimentConfig,
    sets: usize,
    failures: usize,
    max_quadrature_gap: f64,
    min_monotone_margin: f64,
    passed: bool,
    wall_time_secs: f64,
}

pub fn ordering_sweep(args: SweepArgs) -> anyhow::Result<bool> {
    let started = Instant::now();
    let mut config = resolve(&args.common)?;
    let sets = args
        .sets
        .or(config.run.sweep_sets)
        .unwrap_or(DEFAULT_SWEEP_SETS);
    config.run.sweep_sets = Some(sets);
    let sweep = harness::parameter_sweep(sets, seed(&config));
    let rows = sweep
        .iter()
        .enumerate()
        .map(|(i, p)| sweep_row(p).with_context(|| format!("parameter set {i}: {p:?}")))
        .collect::<anyhow::Result<Vec<_>>>()?;
    let header = [
        "index",
        "rho",
        "mu",
        "sigma",
        "T",
        "M",
        "E_I",
        "E_HS",
        "E_AK",
        "E_RV",
        "Q_HS",
        "Q_AK",
        "Q_RV",
        "max_gap",
        "chain",
        "logistic_margin",
        "arctan_margin",
        "affine_margin",
        "passes",
    ];
    let cells: Vec<Vec<String>> = rows
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let (c, q, p) = (&r.closed_form, &r.quadrature, &r.params);
            vec![
                i.to_string(),
                p.rate.to_string(),
                p.drift.to_string(),
                p.volatility.to_string(),
                p.horizon.to_string(),
                p.wealth.to_string(),
                c.honest.to_string(),
                c.skorokhod.to_string(),
                c.ayed_kuo.to_string(),
                c.forward.to_string(),
                q.skorokhod.to_string(),
                q.ayed_kuo.to_string(),
                q.forward.to_string(),
                r.max_quadrature_gap.to_string(),
                r.chain.to_string(),
                r.logistic_margin.to_string(),
                r.arctan_margin.to_string(),
                r.affine_margin.to_string(),
                r.passes().to_string(),
            ]
        })
        .collect();
    let failures = rows.iter().filter(|r| !r.passes()).count();
    let max_quadrature_gap = rows
        .iter()
        .map(|r| r.max_quadrature_gap)
        .fold(0.0, f64::max);
    let min_monotone_margin = rows
        .iter()
        .flat_map(|r| [r.logistic_margin, r.arctan_margin, r.affine_margin])
        .fold(f64::INFINITY, f64::min);
    eprintln!(
        "{sets} parameter sets, {failures} failing; max quadrature gap {max_quadrature_gap:.3e}, min monotone margin {min_monotone_margin:.3e}"
    );
    let passed = failures == 0;
    let summary = SweepSummary {
        command: "ordering-sweep",
        config: &config,
        sets,
        failures,
        max_quadrature_gap,
        min_monotone_margin,
        passed,
        wall_time_secs: started.elapsed().as_secs_f64(),
    };
    finish("ordering-sweep", &config, &header, &cells, &summary)?;
    Ok(passed)
}
