//! Anticipating stochastic integrals for the linear wealth equation
//! `dS = mu S dt + sigma S dB` with an initial condition that depends on the
//! terminal Brownian value `B_T`.
//!
//! The crate covers four readings of the stochastic differential:
//! classical Itô, the Russo-Vallois forward integral, the Ayed-Kuo integral
//! and the Hitsuda-Skorokhod integral. For each it provides exact solution
//! evaluators on simulated Brownian paths, discrete schemes where one exists,
//! closed-form expectations, an independent Gauss-Hermite oracle and a Monte
//! Carlo harness that ties everything together.
//!
//! Module map:
//!
//! - [`paths`]: time grids, counter-seeded Brownian paths, Girsanov shifts.
//! - [`functionals`]: terminal functionals `C(B_T)`, translation (the Wick
//!   product with a Wick exponential) and Malliavin trace partials.
//! - [`integrators`]: exact solutions, forward Euler, Ayed-Kuo sums and the
//!   Skorokhod correction scheme.
//! - [`market`]: market parameters, trading strategies and total wealth.
//! - [`analytics`]: closed forms, quadrature oracle, ordering verdicts.
//! - [`harness`]: Monte Carlo estimation, convergence studies, jump probes.

pub mod analytics;
pub mod error;
pub mod functionals;
pub mod harness;
pub mod integrators;
pub mod market;
pub mod paths;
pub mod quadrature;
pub mod stats;

pub use error::{Error, Result};
pub use functionals::{
    ArcTangent, Logistic, MonotoneMap, MonotoneSmooth, ProductIntegrand, TerminalFunctional,
};
pub use integrators::{Interpretation, WealthProcess};
pub use market::{Allocation, MarketParams, Strategy};
pub use paths::{BrownianPath, TimeGrid};
