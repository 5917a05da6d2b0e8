//! Solutions and schemes for `dS = mu S dt + sigma S dB`, `S(0) = C(B_T)`.
//!
//! Exact solutions share one formula,
//! `S(t) = C_eff(B_T) exp((mu - sigma^2/2) t + sigma B_t)`, where
//! `C_eff = C` for Itô and the forward integral and `C_eff = C(. - sigma t)`
//! for the Ayed-Kuo and Hitsuda-Skorokhod readings.
//!
//! Riemann sums over `[0, t]` use the node values of a [`BrownianPath`]:
//!
//! - forward: the whole integrand at the left node;
//! - Ayed-Kuo: adapted slot at the left node, instantly independent slot at
//!   the right node. Finite sums and jointly dependent terms are handled by
//!   evaluating each term with that same rule, which is the bilinear
//!   extension of the product definition;
//! - Skorokhod: forward sum minus the Malliavin trace `int D_{s+} u(s) ds`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functionals::{ProductIntegrand, TerminalFunctional};
use crate::market::MarketParams;
use crate::paths::{BrownianPath, TimeGrid};

/// Highest derivative order carried by the Skorokhod correction scheme for
/// functionals that are not polynomial.
pub const MAX_JET_ORDER: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Interpretation {
    Ito,
    #[serde(alias = "rv", alias = "russo-vallois")]
    Forward,
    #[serde(alias = "ak")]
    AyedKuo,
    #[serde(alias = "hs", alias = "skorokhod")]
    HitsudaSkorokhod,
}

impl Interpretation {
    pub const ALL: [Interpretation; 4] = [
        Self::Ito,
        Self::Forward,
        Self::AyedKuo,
        Self::HitsudaSkorokhod,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            Self::Ito => "ito",
            Self::Forward => "forward",
            Self::AyedKuo => "ayed-kuo",
            Self::HitsudaSkorokhod => "hitsuda-skorokhod",
        }
    }

    /// Whether the exact solution translates `C` by `sigma t`.
    pub fn translates(&self) -> bool {
        matches!(self, Self::AyedKuo | Self::HitsudaSkorokhod)
    }
}

impl std::fmt::Display for Interpretation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for Interpretation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ito" | "i" => Ok(Self::Ito),
            "forward" | "rv" | "russo-vallois" => Ok(Self::Forward),
            "ayed-kuo" | "ak" => Ok(Self::AyedKuo),
            "hitsuda-skorokhod" | "skorokhod" | "hs" => Ok(Self::HitsudaSkorokhod),
            other => Err(Error::InvalidParams(format!(
                "unknown interpretation `{other}`"
            ))),
        }
    }
}

/// Wealth sampled on the nodes of the driving path's grid.
#[derive(Debug, Clone, PartialEq)]
pub struct WealthProcess {
    grid: TimeGrid,
    samples: Vec<f64>,
    interpretation: Interpretation,
    seed: u64,
    path_index: u64,
}

impl WealthProcess {
    fn new(path: &BrownianPath, samples: Vec<f64>, interpretation: Interpretation) -> Self {
        debug_assert_eq!(samples.len(), path.grid().steps() + 1);
        Self {
            grid: *path.grid(),
            samples,
            interpretation,
            seed: path.seed(),
            path_index: path.path_index(),
        }
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub(crate) fn samples_mut(&mut self) -> &mut [f64] {
        &mut self.samples
    }

    pub fn interpretation(&self) -> Interpretation {
        self.interpretation
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn path_index(&self) -> u64 {
        self.path_index
    }

    pub fn initial(&self) -> f64 {
        self.samples[0]
    }

    pub fn terminal(&self) -> f64 {
        self.samples[self.samples.len() - 1]
    }

    pub fn is_finite(&self) -> bool {
        self.samples.iter().all(|s| s.is_finite())
    }
}

/// Exact solution on every node of `path`.
pub fn exact_solution(
    c: &TerminalFunctional,
    params: &MarketParams,
    path: &BrownianPath,
    interp: Interpretation,
) -> Result<WealthProcess> {
    if interp == Interpretation::Ito && !c.is_deterministic() {
        return Err(Error::AnticipatingIto);
    }
    let grid = path.grid();
    let bt = path.terminal();
    let sigma = params.volatility;
    let samples = (0..=grid.steps())
        .map(|i| {
            let t = grid.node(i);
            let factor = if interp.translates() {
                c.value_translated(bt, sigma * t)
            } else {
                c.value(bt)
            };
            factor * params.gbm_factor(t, path.value(i))
        })
        .collect();
    Ok(WealthProcess::new(path, samples, interp))
}

/// Classical Euler-Maruyama for geometric Brownian motion from `s0`.
pub fn euler_maruyama_gbm(s0: f64, params: &MarketParams, path: &BrownianPath) -> Vec<f64> {
    let dt = path.grid().dt();
    let mut samples = Vec::with_capacity(path.grid().steps() + 1);
    let mut s = s0;
    samples.push(s);
    for dw in path.increments() {
        s *= 1.0 + params.drift * dt + params.volatility * dw;
        samples.push(s);
    }
    samples
}

/// Forward Euler: `S_0 = C(B_T)`, `S_{i+1} = S_i (1 + mu dt + sigma dW)`.
///
/// Left-point evaluation of the anticipating integrand is the discrete
/// forward integral, so this is Euler-Maruyama started from `C(B_T)`.
pub fn euler_forward(
    c: &TerminalFunctional,
    params: &MarketParams,
    path: &BrownianPath,
) -> WealthProcess {
    let samples = euler_maruyama_gbm(c.value(path.terminal()), params, path);
    WealthProcess::new(path, samples, Interpretation::Forward)
}

fn node_index(path: &BrownianPath, t: f64) -> Result<usize> {
    path.grid()
        .index_of(t)
        .ok_or_else(|| Error::Precondition(format!("integration end {t} is not a grid node")))
}

/// `sum_{t_i <= t} u(t_{i-1}, W_{i-1}, B_T - W_{i-1}) dW_i`.
pub fn forward_integral(u: &ProductIntegrand, path: &BrownianPath, t: f64) -> Result<f64> {
    let end = node_index(path, t)?;
    let grid = path.grid();
    let bt = path.terminal();
    Ok((1..=end)
        .map(|i| {
            let x = path.value(i - 1);
            u.evaluate(grid.node(i - 1), x, bt - x) * path.increment(i)
        })
        .sum())
}

/// `sum_{t_i <= t} u(t_{i-1}, W_{i-1}, B_T - W_i) dW_i`.
pub fn ak_integral(u: &ProductIntegrand, path: &BrownianPath, t: f64) -> Result<f64> {
    let end = node_index(path, t)?;
    let grid = path.grid();
    let bt = path.terminal();
    Ok((1..=end)
        .map(|i| {
            u.evaluate(grid.node(i - 1), path.value(i - 1), bt - path.value(i)) * path.increment(i)
        })
        .sum())
}

/// Skorokhod integral as forward integral minus the Malliavin trace,
/// `int u d^-B - int D_{s+} u(s) ds`.
pub fn skorokhod_integral(u: &ProductIntegrand, path: &BrownianPath, t: f64) -> Result<f64> {
    let end = node_index(path, t)?;
    let grid = path.grid();
    let dt = grid.dt();
    let bt = path.terminal();
    let mut trace = 0.0;
    for i in 1..=end {
        let x = path.value(i - 1);
        trace += u.malliavin_trace_partial(grid.node(i - 1), x, bt - x)? * dt;
    }
    Ok(forward_integral(u, path, t)? - trace)
}

/// The translated solution `C(x + y - sigma s) exp((mu - sigma^2/2) s + sigma x)`
/// written in the `(s, x = B_s, y = B_T - B_s)` slots.
pub fn solution_integrand(c: &TerminalFunctional, params: &MarketParams) -> ProductIntegrand {
    let p = *params;
    let sigma = p.volatility;
    match c.clone() {
        TerminalFunctional::Affine { intercept, slope } => ProductIntegrand::new()
            .with_adapted("adapted part", move |s, x| {
                (intercept + slope * x - slope * sigma * s) * p.gbm_factor(s, x)
            })
            .with_product(
                "future part",
                move |s, x| slope * p.gbm_factor(s, x),
                |y| y,
                |_| 1.0,
            ),
        TerminalFunctional::Indicator { scale, threshold } => ProductIntegrand::new()
            .with_rough_joint("translated indicator", move |s, x, y| {
                if x + y > threshold + sigma * s {
                    scale * p.gbm_factor(s, x)
                } else {
                    0.0
                }
            }),
        f @ TerminalFunctional::Monotone(_) => {
            let value = f.clone();
            if f.derivative(1, 0.0).is_ok() {
                ProductIntegrand::new().with_joint(
                    "translated monotone",
                    move |s, x, y| value.value(x + y - sigma * s) * p.gbm_factor(s, x),
                    move |s, x, y| {
                        f.derivative(1, x + y - sigma * s).unwrap_or(f64::NAN) * p.gbm_factor(s, x)
                    },
                )
            } else {
                ProductIntegrand::new().with_rough_joint("translated monotone", move |s, x, y| {
                    value.value(x + y - sigma * s) * p.gbm_factor(s, x)
                })
            }
        }
    }
}

/// Defect of the translated candidate in the Ayed-Kuo integral equation.
#[derive(Debug, Clone, PartialEq)]
pub struct AkResidual {
    /// `R(t_k)` for every node; `R(0) = 0`.
    pub trajectory: Vec<f64>,
}

impl AkResidual {
    pub fn terminal(&self) -> f64 {
        self.trajectory[self.trajectory.len() - 1]
    }
}

/// `R(t) = S(t) - S(0) - mu sum S(t_{i-1}) dt - sigma sum_AK S(.) dB` for the
/// translated candidate `S = exact_solution(C, AyedKuo)`.
pub fn ak_residual(
    c: &TerminalFunctional,
    params: &MarketParams,
    path: &BrownianPath,
) -> Result<AkResidual> {
    let candidate = exact_solution(c, params, path, Interpretation::AyedKuo)?;
    let integrand = solution_integrand(c, params);
    let grid = path.grid();
    let dt = grid.dt();
    let bt = path.terminal();
    let s = candidate.samples();
    let mut drift = 0.0;
    let mut stochastic = 0.0;
    let mut trajectory = Vec::with_capacity(s.len());
    trajectory.push(0.0);
    for i in 1..s.len() {
        drift += s[i - 1] * dt;
        stochastic += integrand.evaluate(grid.node(i - 1), path.value(i - 1), bt - path.value(i))
            * path.increment(i);
        trajectory.push(s[i] - s[0] - params.drift * drift - params.volatility * stochastic);
    }
    Ok(AkResidual { trajectory })
}

/// Derivative values `C^(k)(B_T)` the correction scheme needs, `k = 0..=J+1`.
fn jet(c: &TerminalFunctional, bt: f64) -> Result<Vec<f64>> {
    if let TerminalFunctional::Indicator { .. } = c {
        return Err(Error::NonDifferentiable(
            "the Skorokhod correction needs the Malliavin derivative of an indicator".into(),
        ));
    }
    let top = c
        .polynomial_degree()
        .map_or(MAX_JET_ORDER, |d| d.min(MAX_JET_ORDER));
    let mut values = vec![c.derivative(0, bt)?, c.derivative(1, bt)?];
    for k in 2..=top + 1 {
        match c.derivative(k, bt) {
            Ok(v) => values.push(v),
            Err(_) => break,
        }
    }
    Ok(values)
}

/// Hitsuda-Skorokhod solution by forward Euler with drift `mu S - sigma D_{t+} S`.
///
/// The scheme keeps the state as `S_i = sum_k a_{i,k} C^(k)(B_T)` with
/// adapted coefficients, so `D_{t_i+} S_i = sum_k a_{i,k} C^(k+1)(B_T)` is
/// exact for the discrete state. Affine `C` needs two coefficients; smooth
/// monotone maps are carried up to [`MAX_JET_ORDER`] or as far as the map
/// supplies derivatives.
pub fn skorokhod_via_correction(
    c: &TerminalFunctional,
    params: &MarketParams,
    path: &BrownianPath,
) -> Result<WealthProcess> {
    let derivs = jet(c, path.terminal())?;
    let order = derivs.len() - 2;
    let dt = path.grid().dt();
    let (mu, sigma) = (params.drift, params.volatility);

    let mut coeffs = vec![0.0; order + 1];
    coeffs[0] = 1.0;
    let mut s = derivs[0];
    let mut samples = Vec::with_capacity(path.grid().steps() + 1);
    samples.push(s);
    for dw in path.increments() {
        let trace: f64 = coeffs.iter().zip(&derivs[1..]).map(|(a, d)| a * d).sum();
        let growth = 1.0 + mu * dt + sigma * dw;
        s = growth * s - sigma * dt * trace;
        for k in (1..=order).rev() {
            coeffs[k] = growth * coeffs[k] - sigma * dt * coeffs[k - 1];
        }
        coeffs[0] *= growth;
        samples.push(s);
    }
    Ok(WealthProcess::new(
        path,
        samples,
        Interpretation::HitsudaSkorokhod,
    ))
}

/// A change of the indicator factor between consecutive nodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlipEvent {
    /// First node after the change.
    pub node: usize,
    /// Midpoint of the bracketing interval.
    pub time: f64,
    pub before: f64,
    pub after: f64,
}

/// Discontinuities of the exact indicator solution, read off the indicator
/// factor `C_eff(B_T)` rather than the wealth itself.
pub fn detect_flips(
    c: &TerminalFunctional,
    params: &MarketParams,
    path: &BrownianPath,
    interp: Interpretation,
) -> Result<Vec<FlipEvent>> {
    if !matches!(c, TerminalFunctional::Indicator { .. }) {
        return Err(Error::Unsupported(format!(
            "flip detection needs an indicator, got {}",
            c.kind()
        )));
    }
    if interp == Interpretation::Ito {
        return Err(Error::AnticipatingIto);
    }
    let grid = path.grid();
    let bt = path.terminal();
    let factor = |i: usize| {
        if interp.translates() {
            c.value_translated(bt, params.volatility * grid.node(i))
        } else {
            c.value(bt)
        }
    };
    let mut flips = Vec::new();
    let mut prev = factor(0);
    for i in 1..=grid.steps() {
        let cur = factor(i);
        if cur != prev {
            flips.push(FlipEvent {
                node: i,
                time: 0.5 * (grid.node(i - 1) + grid.node(i)),
                before: prev,
                after: cur,
            });
        }
        prev = cur;
    }
    Ok(flips)
}
