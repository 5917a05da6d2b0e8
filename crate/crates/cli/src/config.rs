//! Experiment configuration files.
//!
//! ```toml
//! [market]
//! wealth = 1.0
//! rate = 0.02
//! drift = 0.05
//! volatility = 0.2
//! horizon = 1.0
//!
//! [strategy]
//! kind = "partial-trust"          # honest | partial-trust | full-information
//!
//! [strategy.functional]           # optional, used by `converge`
//! kind = "logistic"               # affine | indicator | logistic | arctan
//! scale = 1.0
//! rate = 1.0
//!
//! [run]
//! interpretations = ["forward", "skorokhod"]
//! paths = 1000
//! steps = 1024
//! steps_list = [256, 1024, 4096]
//! seed = 20240101
//!
//! [output]
//! csv = "converge.csv"
//! json = "converge.json"
//! ```
//!
//! Every section is optional; missing market data means the baseline market.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use insider_core::{Interpretation, MarketParams, MonotoneSmooth, Strategy, TerminalFunctional};
use serde::{Deserialize, Serialize};

use crate::UsageError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "MarketParams::baseline")]
    pub market: MarketParams,
    #[serde(default)]
    pub strategy: StrategyConfig,
    #[serde(default)]
    pub run: RunConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            market: MarketParams::baseline(),
            strategy: StrategyConfig::default(),
            run: RunConfig::default(),
            output: OutputConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StrategyKind {
    Honest,
    #[default]
    PartialTrust,
    FullInformation,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrategyConfig {
    #[serde(default)]
    pub kind: StrategyKind,
    /// Honest split; both default to all stock.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bond: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stock: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub functional: Option<FunctionalConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FunctionalConfig {
    Affine { intercept: f64, slope: f64 },
    Indicator { scale: f64, threshold: f64 },
    Logistic { scale: f64, rate: f64 },
    Arctan { scale: f64, rate: f64 },
}

impl FunctionalConfig {
    pub fn build(&self, params: &MarketParams) -> anyhow::Result<TerminalFunctional> {
        let finite = |name: &str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(UsageError(format!(
                    "functional {name} must be finite, got {v}"
                )))
            }
        };
        Ok(match *self {
            Self::Affine { intercept, slope } => {
                finite("intercept", intercept)?;
                finite("slope", slope)?;
                TerminalFunctional::affine(intercept, slope)
            }
            Self::Indicator { scale, threshold } => {
                finite("scale", scale)?;
                finite("threshold", threshold)?;
                TerminalFunctional::indicator(scale, threshold)
            }
            Self::Logistic { scale, rate } => {
                TerminalFunctional::Monotone(MonotoneSmooth::logistic(scale, rate, params.horizon)?)
            }
            Self::Arctan { scale, rate } => {
                TerminalFunctional::Monotone(MonotoneSmooth::arctan(scale, rate, params.horizon)?)
            }
        })
    }
}

impl StrategyConfig {
    pub fn build(&self, params: &MarketParams) -> anyhow::Result<Strategy> {
        let strategy = match self.kind {
            StrategyKind::Honest => {
                let (bond, stock) = match (self.bond, self.stock) {
                    (None, None) => (0.0, params.wealth),
                    (Some(b), None) => (b, params.wealth - b),
                    (None, Some(s)) => (params.wealth - s, s),
                    (Some(b), Some(s)) => (b, s),
                };
                Strategy::Honest { bond, stock }
            }
            StrategyKind::PartialTrust | StrategyKind::FullInformation => {
                if self.bond.is_some() || self.stock.is_some() {
                    bail!(UsageError(
                        "bond/stock split only applies to the honest strategy".into()
                    ));
                }
                if self.kind == StrategyKind::PartialTrust {
                    Strategy::PartialTrust
                } else {
                    Strategy::FullInformation
                }
            }
        };
        strategy.validate(params)?;
        Ok(strategy)
    }

    /// The configured functional, or the strategy's own stock-leg functional.
    pub fn functional(&self, params: &MarketParams) -> anyhow::Result<TerminalFunctional> {
        match &self.functional {
            Some(f) => f.build(params),
            None => Ok(self.build(params)?.stock_functional(params)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interpretations: Option<Vec<Interpretation>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub paths: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps_list: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Worker threads; 0 means one per core.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    /// `expect`: add Monte Carlo rows.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub monte_carlo: Option<bool>,
    /// `conjecture`: only the affine control group.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub affine_control: Option<bool>,
    /// `ordering-sweep`: number of random parameter sets.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep_sets: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub json: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> anyhow::Result<Self> {
        let config: Self =
            toml::from_str(text).map_err(|e| UsageError(format!("invalid config: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))
            .map_err(|e| UsageError(format!("{e:#}")))?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        self.market.validate()?;
        self.strategy.build(&self.market)?;
        if let Some(f) = &self.strategy.functional {
            f.build(&self.market)?;
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configs always serialize")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FULL: &str = r#"
[market]
wealth = 2.0
rate = 0.01
drift = 0.07
volatility = 0.3
horizon = 1.5

[strategy]
kind = "honest"
bond = 0.5
stock = 1.5

[strategy.functional]
kind = "arctan"
scale = 1.0
rate = 0.5

[run]
interpretations = ["forward", "hs"]
paths = 5000
steps = 256
steps_list = [64, 128, 256]
seed = 7
workers = 2
monte_carlo = true

[output]
csv = "out.csv"
"#;

    #[test]
    fn round_trip_is_identity() {
        let config = ExperimentConfig::parse(FULL).unwrap();
        let again = ExperimentConfig::parse(&config.to_toml()).unwrap();
        assert_eq!(config, again);
        let empty = ExperimentConfig::parse("").unwrap();
        assert_eq!(empty, ExperimentConfig::default());
        assert_eq!(ExperimentConfig::parse(&empty.to_toml()).unwrap(), empty);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(ExperimentConfig::parse("[run]\npath = 10\n").is_err());
        assert!(ExperimentConfig::parse("[extra]\n").is_err());
        assert!(ExperimentConfig::parse("[market]\nwealth = 1.0\nrate = 0.02\ndrift = 0.05\nvolatility = 0.2\nhorizon = 1.0\nsigma = 1\n").is_err());
        assert!(ExperimentConfig::parse(
            "[strategy.functional]\nkind = \"affine\"\nintercept = 1.0\nslope = 1.0\nextra = 2\n"
        )
        .is_err());
    }

    #[test]
    fn market_invariants_checked_at_load() {
        let bad =
            "[market]\nwealth = 1.0\nrate = 0.05\ndrift = 0.05\nvolatility = 0.2\nhorizon = 1.0\n";
        let err = ExperimentConfig::parse(bad).unwrap_err();
        assert!(format!("{err:#}").contains("mu > rho"));
        assert!(ExperimentConfig::parse(
            "[strategy]\nkind = \"honest\"\nbond = 0.7\nstock = 0.7\n"
        )
        .is_err());
        assert!(
            ExperimentConfig::parse("[strategy]\nkind = \"partial-trust\"\nbond = 0.7\n").is_err()
        );
    }

    #[test]
    fn honest_split_fills_missing_leg() {
        let c = ExperimentConfig::parse("[strategy]\nkind = \"honest\"\nbond = 0.25\n").unwrap();
        assert_eq!(
            c.strategy.build(&c.market).unwrap(),
            Strategy::Honest {
                bond: 0.25,
                stock: 0.75
            }
        );
    }
}
