//! Bond, stock and the three trading strategies.
//!
//! The bond always compounds at the bond rate `rho`. The honest trader splits
//! `M` without looking at `B_T`. The partial-trust insider tilts the split
//! linearly in `B_T` and may borrow. The full-information insider puts
//! everything in whichever asset ends higher.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functionals::TerminalFunctional;
use crate::integrators::{exact_solution, Interpretation, WealthProcess};
use crate::paths::BrownianPath;

/// Relative tolerance on `M0 + M1 = M` for the honest split.
const SPLIT_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarketParams {
    /// Total initial wealth `M`.
    pub wealth: f64,
    /// Bond rate `rho`.
    pub rate: f64,
    /// Stock appreciation rate `mu`.
    pub drift: f64,
    /// Volatility `sigma`.
    pub volatility: f64,
    /// Horizon `T` in years.
    pub horizon: f64,
}

impl MarketParams {
    pub fn new(wealth: f64, rate: f64, drift: f64, volatility: f64, horizon: f64) -> Result<Self> {
        let p = Self {
            wealth,
            rate,
            drift,
            volatility,
            horizon,
        };
        p.validate()?;
        Ok(p)
    }

    /// `M = 1, rho = 0.02, mu = 0.05, sigma = 0.2, T = 1`.
    pub fn baseline() -> Self {
        Self {
            wealth: 1.0,
            rate: 0.02,
            drift: 0.05,
            volatility: 0.2,
            horizon: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("wealth", self.wealth),
            ("rate", self.rate),
            ("drift", self.drift),
            ("volatility", self.volatility),
            ("horizon", self.horizon),
        ] {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::InvalidParams(format!(
                    "{name} must be finite and positive, got {v}"
                )));
            }
        }
        if self.drift <= self.rate {
            return Err(Error::InvalidParams(format!(
                "drift must exceed the bond rate (mu > rho), got mu = {} and rho = {}",
                self.drift, self.rate
            )));
        }
        Ok(())
    }

    /// `2 (mu - rho) T`, the denominator of the partial-trust tilt.
    pub fn tilt_denominator(&self) -> f64 {
        2.0 * (self.drift - self.rate) * self.horizon
    }

    /// `A = sigma^2 / (4 (mu - rho))`.
    pub fn trust_ratio(&self) -> f64 {
        self.volatility * self.volatility / (4.0 * (self.drift - self.rate))
    }

    /// Exponential factor `exp((mu - sigma^2/2) t + sigma w)`.
    pub fn gbm_factor(&self, t: f64, w: f64) -> f64 {
        ((self.drift - 0.5 * self.volatility * self.volatility) * t + self.volatility * w).exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Strategy {
    /// Fixed split between bond and stock.
    Honest { bond: f64, stock: f64 },
    /// Linear tilt in `B_T`.
    PartialTrust,
    /// All-in on the asset with the larger terminal value.
    FullInformation,
}

/// Initial investment in each asset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Allocation {
    pub stock: f64,
    pub bond: f64,
}

impl Strategy {
    /// All stock, the honest optimum.
    pub fn honest_all_stock(params: &MarketParams) -> Self {
        Self::Honest {
            bond: 0.0,
            stock: params.wealth,
        }
    }

    pub fn validate(&self, params: &MarketParams) -> Result<()> {
        params.validate()?;
        if let Self::Honest { bond, stock } = *self {
            if !(bond.is_finite() && stock.is_finite()) || bond < 0.0 || stock < 0.0 {
                return Err(Error::InvalidParams(format!(
                    "the honest trader cannot borrow: bond = {bond}, stock = {stock}"
                )));
            }
            if (bond + stock - params.wealth).abs() > SPLIT_TOLERANCE * params.wealth {
                return Err(Error::InvalidParams(format!(
                    "honest split must add up to the wealth: {bond} + {stock} != {}",
                    params.wealth
                )));
            }
        }
        Ok(())
    }

    pub fn is_anticipating(&self) -> bool {
        !matches!(self, Self::Honest { .. })
    }

    /// `C(B_T)`, the stock-leg initial condition.
    pub fn stock_functional(&self, params: &MarketParams) -> TerminalFunctional {
        match *self {
            Self::Honest { stock, .. } => TerminalFunctional::constant(stock),
            Self::PartialTrust => {
                let m = params.wealth;
                let sigma = params.volatility;
                let k = params.tilt_denominator();
                TerminalFunctional::affine(
                    m * (1.0 - sigma * sigma * params.horizon / 2.0 / k),
                    m * sigma / k,
                )
            }
            Self::FullInformation => {
                TerminalFunctional::indicator(params.wealth, threshold(params))
            }
        }
    }

    pub fn initial_allocation(&self, params: &MarketParams, terminal: f64) -> Allocation {
        match *self {
            Self::Honest { bond, stock } => Allocation { stock, bond },
            Self::PartialTrust => {
                let stock = self.stock_functional(params).value(terminal);
                Allocation {
                    stock,
                    bond: params.wealth - stock,
                }
            }
            Self::FullInformation => {
                if terminal > threshold(params) {
                    Allocation {
                        stock: params.wealth,
                        bond: 0.0,
                    }
                } else {
                    Allocation {
                        stock: 0.0,
                        bond: params.wealth,
                    }
                }
            }
        }
    }
}

/// `z = (rho - mu + sigma^2/2) T / sigma`; the stock ends above the bond iff
/// `B_T > z`.
pub fn threshold(params: &MarketParams) -> f64 {
    let sigma = params.volatility;
    (params.rate - params.drift + sigma * sigma / 2.0) * params.horizon / sigma
}

/// Bond plus stock, node by node. The stock leg is the exact solution under
/// `interp`.
pub fn total_wealth(
    strategy: &Strategy,
    params: &MarketParams,
    path: &BrownianPath,
    interp: Interpretation,
) -> Result<WealthProcess> {
    strategy.validate(params)?;
    if interp == Interpretation::Ito && strategy.is_anticipating() {
        return Err(Error::AnticipatingIto);
    }
    let stock = exact_solution(&strategy.stock_functional(params), params, path, interp)?;
    Ok(add_bond_leg(stock, strategy, params, path))
}

/// Adds `bond_0 e^{rho t}` to a stock-leg process.
pub fn add_bond_leg(
    mut stock: WealthProcess,
    strategy: &Strategy,
    params: &MarketParams,
    path: &BrownianPath,
) -> WealthProcess {
    let bond0 = strategy.initial_allocation(params, path.terminal()).bond;
    let grid = *path.grid();
    for (i, s) in stock.samples_mut().iter_mut().enumerate() {
        *s += bond0 * (params.rate * grid.node(i)).exp();
    }
    stock
}
