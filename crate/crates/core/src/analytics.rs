//! Closed-form expectations, the quadrature oracle and ordering verdicts.
//!
//! With `A = sigma^2 / (4 (mu - rho))` the terminal expectations are
//!
//! ```text
//! honest (all stock)     M e^{mu T}
//! Hitsuda-Skorokhod/AK   M (A e^{rho T} + (1 - A) e^{mu T})
//! forward                M (A e^{rho T} + (1 + A) e^{mu T})
//! ```
//!
//! The quadrature oracle evaluates the stock leg directly as a Gaussian
//! integral over `B_T` and never uses these formulas.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functionals::TerminalFunctional;
use crate::integrators::Interpretation;
use crate::market::{threshold, MarketParams, Strategy};
use crate::quadrature;
use crate::stats::normal_cdf;

/// Relative change between successive rules that ends the doubling loop.
pub const QUADRATURE_TOLERANCE: f64 = 1e-8;

/// `M0 e^{rho T} + M1 e^{mu T}`.
pub fn expected_honest(params: &MarketParams, bond: f64, stock: f64) -> Result<f64> {
    Strategy::Honest { bond, stock }.validate(params)?;
    Ok(bond * (params.rate * params.horizon).exp() + stock * (params.drift * params.horizon).exp())
}

/// Expected bond leg of the partial-trust insider, `M A e^{rho T}`.
pub fn partial_trust_bond_leg(params: &MarketParams) -> f64 {
    params.wealth * params.trust_ratio() * (params.rate * params.horizon).exp()
}

/// Expected terminal wealth of the partial-trust insider.
pub fn expected_insider(params: &MarketParams, interp: Interpretation) -> Result<f64> {
    params.validate()?;
    let a = params.trust_ratio();
    let sign = match interp {
        Interpretation::Ito => return Err(Error::AnticipatingIto),
        Interpretation::Forward => 1.0,
        Interpretation::AyedKuo | Interpretation::HitsudaSkorokhod => -1.0,
    };
    let (m, t) = (params.wealth, params.horizon);
    Ok(m * (a * (params.rate * t).exp() + (1.0 + sign * a) * (params.drift * t).exp()))
}

/// `E[C(B_T - s) exp((mu - sigma^2/2) T + sigma B_T)]` with `B_T ~ N(0, T)`.
///
/// Indicators integrate in closed form against the lognormal factor; every
/// other family goes through Gauss-Hermite rules doubled from 256 nodes until
/// the relative change drops below [`QUADRATURE_TOLERANCE`].
pub fn quadrature_expectation(
    c: &TerminalFunctional,
    shift: f64,
    params: &MarketParams,
) -> Result<f64> {
    params.validate()?;
    if !shift.is_finite() {
        return Err(Error::NonFinite("quadrature shift"));
    }
    let (t, sigma) = (params.horizon, params.volatility);
    if let TerminalFunctional::Indicator { scale, threshold } = c {
        // under the tilted measure B_T ~ N(sigma T, T)
        let p = normal_cdf((sigma * t - threshold - shift) / t.sqrt());
        return Ok(scale * (params.drift * t).exp() * p);
    }
    let integrand = |b: f64| c.value(b - shift) * params.gbm_factor(t, b);
    let (mut previous, _) = quadrature::cached_rule(0).normal_expectation(t, integrand);
    let mut rel_change = f64::INFINITY;
    for level in 1..quadrature::levels() {
        let (value, magnitude) = quadrature::cached_rule(level).normal_expectation(t, integrand);
        rel_change = (value - previous).abs() / magnitude.max(f64::MIN_POSITIVE);
        if rel_change < QUADRATURE_TOLERANCE {
            return Ok(value);
        }
        previous = value;
    }
    Err(Error::QuadratureNonConvergence {
        nodes: quadrature::MAX_NODES,
        rel_change,
    })
}

/// Bond leg in closed form plus the stock leg by quadrature, shifted by
/// `sigma T` for the translating interpretations.
pub fn quadrature_insider(params: &MarketParams, interp: Interpretation) -> Result<f64> {
    let shift = match interp {
        Interpretation::Ito => return Err(Error::AnticipatingIto),
        Interpretation::Forward => 0.0,
        Interpretation::AyedKuo | Interpretation::HitsudaSkorokhod => {
            params.volatility * params.horizon
        }
    };
    let c = Strategy::PartialTrust.stock_functional(params);
    Ok(partial_trust_bond_leg(params) + quadrature_expectation(&c, shift, params)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    ClosedForm,
    Quadrature,
    MonteCarlo,
}

impl Method {
    pub fn label(&self) -> &'static str {
        match self {
            Self::ClosedForm => "closed-form",
            Self::Quadrature => "quadrature",
            Self::MonteCarlo => "monte-carlo",
        }
    }
}

/// Expected terminal wealth under each reading, for one parameter set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WealthTable {
    pub params: MarketParams,
    pub method: Method,
    pub honest: f64,
    pub skorokhod: f64,
    pub ayed_kuo: f64,
    pub forward: f64,
}

impl WealthTable {
    pub fn closed_form(params: &MarketParams) -> Result<Self> {
        Ok(Self {
            params: *params,
            method: Method::ClosedForm,
            honest: expected_honest(params, 0.0, params.wealth)?,
            skorokhod: expected_insider(params, Interpretation::HitsudaSkorokhod)?,
            ayed_kuo: expected_insider(params, Interpretation::AyedKuo)?,
            forward: expected_insider(params, Interpretation::Forward)?,
        })
    }

    pub fn quadrature(params: &MarketParams) -> Result<Self> {
        let one = TerminalFunctional::constant(params.wealth);
        Ok(Self {
            params: *params,
            method: Method::Quadrature,
            honest: quadrature_expectation(&one, 0.0, params)?,
            skorokhod: quadrature_insider(params, Interpretation::HitsudaSkorokhod)?,
            ayed_kuo: quadrature_insider(params, Interpretation::AyedKuo)?,
            forward: quadrature_insider(params, Interpretation::Forward)?,
        })
    }

    pub fn is_finite(&self) -> bool {
        [self.honest, self.skorokhod, self.ayed_kuo, self.forward]
            .iter()
            .all(|v| v.is_finite())
    }

    pub fn verdict(&self) -> OrderingVerdict {
        OrderingVerdict::from_values(self.honest, self.skorokhod, self.ayed_kuo, self.forward)
    }

    pub const CSV_HEADER: [&'static str; 10] = [
        "rho", "mu", "sigma", "T", "M", "E_I", "E_HS", "E_AK", "E_RV", "method",
    ];

    pub fn csv_record(&self) -> [String; 10] {
        let p = &self.params;
        [
            p.rate.to_string(),
            p.drift.to_string(),
            p.volatility.to_string(),
            p.horizon.to_string(),
            p.wealth.to_string(),
            format!("{:.12}", self.honest),
            format!("{:.12}", self.skorokhod),
            format!("{:.12}", self.ayed_kuo),
            format!("{:.12}", self.forward),
            self.method.label().to_string(),
        ]
    }
}

/// `E_HS = E_AK < E_I < E_RV`, piece by piece.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrderingVerdict {
    pub honest: f64,
    pub skorokhod: f64,
    pub ayed_kuo: f64,
    pub forward: f64,
    pub skorokhod_equals_ayed_kuo: bool,
    pub skorokhod_below_honest: bool,
    pub ayed_kuo_below_honest: bool,
    pub honest_below_forward: bool,
}

impl OrderingVerdict {
    pub fn from_values(honest: f64, skorokhod: f64, ayed_kuo: f64, forward: f64) -> Self {
        Self {
            honest,
            skorokhod,
            ayed_kuo,
            forward,
            skorokhod_equals_ayed_kuo: skorokhod == ayed_kuo,
            skorokhod_below_honest: skorokhod < honest,
            ayed_kuo_below_honest: ayed_kuo < honest,
            honest_below_forward: honest < forward,
        }
    }

    pub fn all_hold(&self) -> bool {
        self.skorokhod_equals_ayed_kuo
            && self.skorokhod_below_honest
            && self.ayed_kuo_below_honest
            && self.honest_below_forward
    }
}

pub fn verify_ordering(params: &MarketParams) -> Result<OrderingVerdict> {
    Ok(WealthTable::closed_form(params)?.verdict())
}

/// Expected terminal stock value for the translated and untranslated
/// solutions started from a continuous increasing `C`: `(E_AK, E_RV)`.
pub fn ordering_monotone(c: &TerminalFunctional, params: &MarketParams) -> Result<(f64, f64)> {
    if !c.is_continuous_increasing() {
        return Err(Error::Precondition(format!(
            "ordering needs a continuous, nonconstant, increasing functional; got {}",
            c.kind()
        )));
    }
    let ak = quadrature_expectation(c, params.volatility * params.horizon, params)?;
    let rv = quadrature_expectation(c, 0.0, params)?;
    Ok((ak, rv))
}

/// Probability that the translated indicator solution flips on `(0, T]`,
/// `P(z < B_T < z + sigma T)`.
pub fn jump_probability(params: &MarketParams) -> Result<f64> {
    params.validate()?;
    let z = threshold(params);
    let root_t = params.horizon.sqrt();
    Ok(normal_cdf((z + params.volatility * params.horizon) / root_t) - normal_cdf(z / root_t))
}

/// Trust ratio above which `E_HS < 0`: `e^{mu T} / (e^{mu T} - e^{rho T})`.
pub fn debt_frontier(params: &MarketParams) -> f64 {
    let up = (params.drift * params.horizon).exp();
    let bond = (params.rate * params.horizon).exp();
    up / (up - bond)
}
