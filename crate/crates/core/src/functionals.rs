//! Wiener functionals of the terminal value and two-argument integrands.
//!
//! [`TerminalFunctional`] describes the random initial condition `C(B_T)`.
//! The only Wick product the solutions need is the one against the Wick
//! exponential `exp(sigma B_t - sigma^2 t / 2)`, and that product acts on
//! `C(B_T)` as the translation `C(B_T - sigma t)`. We implement exactly that
//! and nothing of the general chaos calculus.
//!
//! [`ProductIntegrand`] describes integrands `u(s) = Phi(s, B_s, B_T - B_s)`
//! as a finite sum of terms. The first argument slot is adapted, the second is
//! instantly independent. Malliavin derivatives from the right,
//! `D_{s+}`, only see the instantly independent slot, so the trace is the sum
//! of the partials in `y`.

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Points used by the monotonicity probe.
pub const MONOTONE_PROBE_POINTS: usize = 1000;
/// Half-width of the probe interval in units of `sqrt(T)`.
pub const MONOTONE_PROBE_WIDTH: f64 = 8.0;

/// A nonconstant, continuous, nondecreasing scalar map.
///
/// `derivative(k, x)` returns the `k`-th derivative when it is known in closed
/// form. The Skorokhod correction scheme uses as many orders as the map
/// supplies.
pub trait MonotoneMap: Send + Sync + fmt::Debug {
    fn value(&self, x: f64) -> f64;

    fn derivative(&self, order: usize, x: f64) -> Option<f64> {
        (order == 0).then(|| self.value(x))
    }

    fn name(&self) -> &str;
}

/// `x -> 1 / (1 + exp(-rate x))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Logistic {
    pub rate: f64,
}

/// Derivatives of the logistic are polynomials in its value; beyond this
/// order the alternating coefficients lose too many digits.
const LOGISTIC_MAX_ORDER: usize = 16;

impl Logistic {
    pub fn new(rate: f64) -> Self {
        Self { rate }
    }
}

impl MonotoneMap for Logistic {
    fn value(&self, x: f64) -> f64 {
        let u = self.rate * x;
        if u >= 0.0 {
            1.0 / (1.0 + (-u).exp())
        } else {
            let e = u.exp();
            e / (1.0 + e)
        }
    }

    fn derivative(&self, order: usize, x: f64) -> Option<f64> {
        if order > LOGISTIC_MAX_ORDER {
            return None;
        }
        let s = self.value(x);
        // p_0(s) = s, p_{k+1}(s) = p_k'(s) * (s - s^2)
        let mut poly = vec![0.0, 1.0];
        for _ in 0..order {
            let mut next = vec![0.0; poly.len() + 1];
            for (j, &c) in poly.iter().enumerate().skip(1) {
                let d = c * j as f64;
                next[j] += d;
                next[j + 1] -= d;
            }
            poly = next;
        }
        let p = poly.iter().rev().fold(0.0, |acc, &c| acc * s + c);
        Some(self.rate.powi(order as i32) * p)
    }

    fn name(&self) -> &str {
        "logistic"
    }
}

/// `x -> atan(rate x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArcTangent {
    pub rate: f64,
}

impl ArcTangent {
    pub fn new(rate: f64) -> Self {
        Self { rate }
    }
}

impl MonotoneMap for ArcTangent {
    fn value(&self, x: f64) -> f64 {
        (self.rate * x).atan()
    }

    fn derivative(&self, order: usize, x: f64) -> Option<f64> {
        if order == 0 {
            return Some(self.value(x));
        }
        // d^k/du^k atan(u) = (-1)^(k-1) (k-1)! sin(k acot u) / (1 + u^2)^(k/2)
        let u = self.rate * x;
        let k = order as f64;
        let acot = FRAC_PI_2 - u.atan();
        let factorial: f64 = (1..order).map(|j| j as f64).product();
        let sign = if order % 2 == 1 { 1.0 } else { -1.0 };
        let d = sign * factorial * (k * acot).sin() / (1.0 + u * u).powf(k / 2.0);
        Some(self.rate.powi(order as i32) * d)
    }

    fn name(&self) -> &str {
        "arctan"
    }
}

/// `x -> scale * map(x - shift)` with the map verified monotone.
#[derive(Clone)]
pub struct MonotoneSmooth {
    scale: f64,
    shift: f64,
    map: Arc<dyn MonotoneMap>,
}

impl fmt::Debug for MonotoneSmooth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MonotoneSmooth")
            .field("scale", &self.scale)
            .field("shift", &self.shift)
            .field("map", &self.map)
            .finish()
    }
}

impl MonotoneSmooth {
    /// Builds the functional after probing monotonicity on
    /// [`MONOTONE_PROBE_POINTS`] points over `+-8 sqrt(horizon)`.
    pub fn new(scale: f64, map: Arc<dyn MonotoneMap>, horizon: f64) -> Result<Self> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::NotMonotone(format!(
                "scale must be positive, got {scale}"
            )));
        }
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::InvalidParams(format!(
                "probe horizon must be positive, got {horizon}"
            )));
        }
        let half = MONOTONE_PROBE_WIDTH * horizon.sqrt();
        let n = MONOTONE_PROBE_POINTS;
        let mut prev = f64::NEG_INFINITY;
        let mut first = None;
        for i in 0..n {
            let x = -half + 2.0 * half * i as f64 / (n - 1) as f64;
            let v = map.value(x);
            if !v.is_finite() {
                return Err(Error::NotMonotone(format!(
                    "{} is not finite at {x}",
                    map.name()
                )));
            }
            if v < prev {
                return Err(Error::NotMonotone(format!(
                    "{} decreases near {x}",
                    map.name()
                )));
            }
            first.get_or_insert(v);
            prev = v;
        }
        if first == Some(prev) {
            return Err(Error::NotMonotone(format!(
                "{} is constant on the probe grid",
                map.name()
            )));
        }
        Ok(Self {
            scale,
            shift: 0.0,
            map,
        })
    }

    pub fn logistic(scale: f64, rate: f64, horizon: f64) -> Result<Self> {
        Self::new(scale, Arc::new(Logistic::new(rate)), horizon)
    }

    pub fn arctan(scale: f64, rate: f64, horizon: f64) -> Result<Self> {
        Self::new(scale, Arc::new(ArcTangent::new(rate)), horizon)
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn shift(&self) -> f64 {
        self.shift
    }

    pub fn map(&self) -> &dyn MonotoneMap {
        self.map.as_ref()
    }

    fn value(&self, x: f64) -> f64 {
        self.scale * self.map.value(x - self.shift)
    }
}

/// The random initial condition `C(B_T)`, as a function of `x = B_T`.
#[derive(Debug, Clone)]
pub enum TerminalFunctional {
    /// `intercept + slope * x`.
    Affine {
        intercept: f64,
        slope: f64,
    },
    /// `scale * 1{x > threshold}`; the value at the threshold is 0.
    Indicator {
        scale: f64,
        threshold: f64,
    },
    Monotone(MonotoneSmooth),
}

impl TerminalFunctional {
    pub fn constant(value: f64) -> Self {
        Self::Affine {
            intercept: value,
            slope: 0.0,
        }
    }

    pub fn affine(intercept: f64, slope: f64) -> Self {
        Self::Affine { intercept, slope }
    }

    pub fn indicator(scale: f64, threshold: f64) -> Self {
        Self::Indicator { scale, threshold }
    }

    /// Short family name, used in reports and error messages.
    pub fn kind(&self) -> &str {
        match self {
            Self::Affine { .. } => "affine",
            Self::Indicator { .. } => "indicator",
            Self::Monotone(m) => m.map.name(),
        }
    }

    pub fn is_deterministic(&self) -> bool {
        matches!(self, Self::Affine { slope, .. } if *slope == 0.0)
    }

    /// Unchecked evaluation; see [`TerminalFunctional::evaluate`].
    pub fn value(&self, x: f64) -> f64 {
        match self {
            Self::Affine { intercept, slope } => intercept + slope * x,
            Self::Indicator { scale, threshold } => {
                if x > *threshold {
                    *scale
                } else {
                    0.0
                }
            }
            Self::Monotone(m) => m.value(x),
        }
    }

    pub fn evaluate(&self, x: f64) -> Result<f64> {
        if !x.is_finite() {
            return Err(Error::NonFinite("functional argument"));
        }
        Ok(self.value(x))
    }

    /// `translate(s).value(x)` without building the translated functional.
    /// Bit-for-bit identical to the two-step route.
    pub fn value_translated(&self, x: f64, s: f64) -> f64 {
        match self {
            Self::Affine { intercept, slope } => (intercept - slope * s) + slope * x,
            Self::Indicator { scale, threshold } => {
                if x > threshold + s {
                    *scale
                } else {
                    0.0
                }
            }
            Self::Monotone(m) => m.scale * m.map.value(x - (m.shift + s)),
        }
    }

    /// The functional `x -> C(x - s)`.
    pub fn translate(&self, s: f64) -> Self {
        match self {
            Self::Affine { intercept, slope } => Self::Affine {
                intercept: intercept - slope * s,
                slope: *slope,
            },
            Self::Indicator { scale, threshold } => Self::Indicator {
                scale: *scale,
                threshold: threshold + s,
            },
            Self::Monotone(m) => Self::Monotone(MonotoneSmooth {
                shift: m.shift + s,
                ..m.clone()
            }),
        }
    }

    /// Wick product of `C(B_T)` with the Wick exponential of `sigma B_t`,
    /// as a functional of `B_T`. The caller multiplies by the ordinary
    /// exponential factor `exp((mu - sigma^2/2) t + sigma B_t)`.
    pub fn wick_with_exponential(&self, sigma: f64, t: f64) -> Result<Self> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::InvalidParams(format!(
                "volatility must be positive, got {sigma}"
            )));
        }
        if !(t.is_finite() && t >= 0.0) {
            return Err(Error::InvalidParams(format!(
                "time must be nonnegative, got {t}"
            )));
        }
        Ok(self.translate(sigma * t))
    }

    /// `k`-th derivative at `x`. Indicators have none beyond order 0.
    pub fn derivative(&self, order: usize, x: f64) -> Result<f64> {
        match self {
            Self::Affine { slope, .. } => Ok(match order {
                0 => self.value(x),
                1 => *slope,
                _ => 0.0,
            }),
            Self::Indicator { .. } if order == 0 => Ok(self.value(x)),
            Self::Indicator { .. } => Err(Error::NonDifferentiable("indicator functional".into())),
            Self::Monotone(m) => m
                .map
                .derivative(order, x - m.shift)
                .map(|d| m.scale * d)
                .ok_or_else(|| {
                    Error::NonDifferentiable(format!(
                        "{} has no derivative of order {order}",
                        m.map.name()
                    ))
                }),
        }
    }

    /// Highest derivative order that can be nonzero, when finite.
    pub fn polynomial_degree(&self) -> Option<usize> {
        match self {
            Self::Affine { slope, .. } => Some(usize::from(*slope != 0.0)),
            _ => None,
        }
    }

    /// Nondecreasing, continuous and nonconstant.
    pub fn is_continuous_increasing(&self) -> bool {
        match self {
            Self::Affine { slope, .. } => *slope > 0.0,
            Self::Indicator { .. } => false,
            Self::Monotone(_) => true,
        }
    }
}

type AdaptedFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
type FutureFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
type JointFn = Arc<dyn Fn(f64, f64, f64) -> f64 + Send + Sync>;

#[derive(Clone)]
enum TermKind {
    Product {
        adapted: AdaptedFn,
        future: FutureFn,
        future_derivative: Option<FutureFn>,
    },
    Joint {
        value: JointFn,
        future_partial: Option<JointFn>,
    },
}

/// One summand of a [`ProductIntegrand`].
#[derive(Clone)]
pub struct IntegrandTerm {
    label: String,
    kind: TermKind,
}

impl IntegrandTerm {
    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn is_differentiable(&self) -> bool {
        match &self.kind {
            TermKind::Product {
                future_derivative, ..
            } => future_derivative.is_some(),
            TermKind::Joint { future_partial, .. } => future_partial.is_some(),
        }
    }

    fn value(&self, s: f64, x: f64, y: f64) -> f64 {
        match &self.kind {
            TermKind::Product {
                adapted, future, ..
            } => adapted(s, x) * future(y),
            TermKind::Joint { value, .. } => value(s, x, y),
        }
    }

    fn future_partial(&self, s: f64, x: f64, y: f64) -> Option<f64> {
        match &self.kind {
            TermKind::Product {
                adapted,
                future_derivative,
                ..
            } => future_derivative.as_ref().map(|d| adapted(s, x) * d(y)),
            TermKind::Joint { future_partial, .. } => future_partial.as_ref().map(|d| d(s, x, y)),
        }
    }
}

impl fmt::Debug for IntegrandTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("IntegrandTerm")
            .field("label", &self.label)
            .field("differentiable", &self.is_differentiable())
            .finish()
    }
}

/// `u(s) = sum_k Phi_k(s, x, y)` with `x = B_s` adapted and `y = B_T - B_s`
/// instantly independent.
#[derive(Clone, Debug, Default)]
pub struct ProductIntegrand {
    terms: Vec<IntegrandTerm>,
}

impl ProductIntegrand {
    pub fn new() -> Self {
        Self::default()
    }

    /// `f(s, x) * phi(y)` with the analytic derivative `phi'`.
    pub fn with_product(
        mut self,
        label: impl Into<String>,
        adapted: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        future: impl Fn(f64) -> f64 + Send + Sync + 'static,
        future_derivative: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        self.terms.push(IntegrandTerm {
            label: label.into(),
            kind: TermKind::Product {
                adapted: Arc::new(adapted),
                future: Arc::new(future),
                future_derivative: Some(Arc::new(future_derivative)),
            },
        });
        self
    }

    /// `f(s, x) * phi(y)` where `phi` has no derivative (indicators).
    pub fn with_rough_product(
        mut self,
        label: impl Into<String>,
        adapted: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        future: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        self.terms.push(IntegrandTerm {
            label: label.into(),
            kind: TermKind::Product {
                adapted: Arc::new(adapted),
                future: Arc::new(future),
                future_derivative: None,
            },
        });
        self
    }

    /// Purely adapted term `f(s, x)`.
    pub fn with_adapted(
        self,
        label: impl Into<String>,
        adapted: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        self.with_product(label, adapted, |_| 1.0, |_| 0.0)
    }

    /// Jointly dependent term `Phi(s, x, y)` with its `y`-partial.
    pub fn with_joint(
        mut self,
        label: impl Into<String>,
        value: impl Fn(f64, f64, f64) -> f64 + Send + Sync + 'static,
        future_partial: impl Fn(f64, f64, f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        self.terms.push(IntegrandTerm {
            label: label.into(),
            kind: TermKind::Joint {
                value: Arc::new(value),
                future_partial: Some(Arc::new(future_partial)),
            },
        });
        self
    }

    /// Jointly dependent term without a `y`-partial.
    pub fn with_rough_joint(
        mut self,
        label: impl Into<String>,
        value: impl Fn(f64, f64, f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        self.terms.push(IntegrandTerm {
            label: label.into(),
            kind: TermKind::Joint {
                value: Arc::new(value),
                future_partial: None,
            },
        });
        self
    }

    /// The integrand `B_T = B_s + (B_T - B_s)`.
    pub fn terminal_value() -> Self {
        Self::new().with_adapted("B_s", |_, x| x).with_product(
            "B_T - B_s",
            |_, _| 1.0,
            |y| y,
            |_| 1.0,
        )
    }

    pub fn terms(&self) -> &[IntegrandTerm] {
        &self.terms
    }

    pub fn is_differentiable(&self) -> bool {
        self.terms.iter().all(IntegrandTerm::is_differentiable)
    }

    pub fn evaluate(&self, s: f64, x: f64, y: f64) -> f64 {
        self.terms.iter().map(|t| t.value(s, x, y)).sum()
    }

    /// `D_{s+} u(s)`: the sum of the partials in the instantly independent
    /// slot, since `D_{s+} B_s = 0` and `D_{s+} (B_T - B_s) = 1`.
    pub fn malliavin_trace_partial(&self, s: f64, x: f64, y: f64) -> Result<f64> {
        let mut total = 0.0;
        for term in &self.terms {
            total += term
                .future_partial(s, x, y)
                .ok_or_else(|| Error::NonDifferentiable(format!("term `{}`", term.label)))?;
        }
        Ok(total)
    }
}

/// Free-function form of [`ProductIntegrand::malliavin_trace_partial`].
pub fn malliavin_trace_partial(u: &ProductIntegrand, s: f64, x: f64, y: f64) -> Result<f64> {
    u.malliavin_trace_partial(s, x, y)
}
