//! Gauss-Hermite quadrature for `int e^{-x^2} f(x) dx`.
//!
//! Nodes are the roots of the orthonormal Hermite polynomial, bracketed by a
//! sign-change scan and polished by safeguarded Newton iteration. The three-term
//! recurrence is rescaled on the fly so rules with thousands of nodes do not
//! overflow.

use std::f64::consts::PI;
use std::sync::OnceLock;

use crate::stats::CompensatedSum;

const RESCALE_ABOVE: f64 = 1e150;
const MAX_NEWTON_ITERATIONS: usize = 200;

#[derive(Debug, Clone, PartialEq)]
pub struct GaussHermite {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

/// Orthonormal `p_n(z)` and `p_{n-1}(z)` up to a common factor `exp(log_scale)`.
fn hermite_pair(n: usize, z: f64) -> (f64, f64, f64) {
    let mut p1 = PI.powf(-0.25);
    let mut p2 = 0.0;
    let mut log_scale = 0.0;
    for j in 1..=n {
        let jf = j as f64;
        let p3 = p2;
        p2 = p1;
        p1 = z * (2.0 / jf).sqrt() * p2 - ((jf - 1.0) / jf).sqrt() * p3;
        if p1.abs() > RESCALE_ABOVE {
            p1 /= RESCALE_ABOVE;
            p2 /= RESCALE_ABOVE;
            log_scale += RESCALE_ABOVE.ln();
        }
    }
    (p1, p2, log_scale)
}

/// Root of `p_n` in `[lo, hi]`, given a sign change: Newton steps, falling
/// back to bisection whenever a step leaves the bracket.
fn refine_root(n: usize, mut lo: f64, mut hi: f64) -> f64 {
    let nf = n as f64;
    let sign_lo = hermite_pair(n, lo).0.signum();
    let mut z = 0.5 * (lo + hi);
    for _ in 0..MAX_NEWTON_ITERATIONS {
        let (p, q, _) = hermite_pair(n, z);
        if p == 0.0 {
            return z;
        }
        if p.signum() == sign_lo {
            lo = z;
        } else {
            hi = z;
        }
        let newton = z - p / ((2.0 * nf).sqrt() * q);
        let next = if newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (next - z).abs() <= 1e-15 * z.abs().max(1.0) {
            return next;
        }
        z = next;
    }
    z
}

impl GaussHermite {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "a quadrature rule needs at least one node");
        let nf = n as f64;
        // roots lie below sqrt(2n + 1) and are at least pi / sqrt(2n + 1)
        // apart, so this step isolates each one in its own cell
        let edge = (2.0 * nf + 1.0).sqrt();
        let step = PI / (4.0 * edge);
        let mut positive = Vec::with_capacity(n / 2);
        let mut a = 0.5 * step;
        let mut pa = hermite_pair(n, a).0;
        while positive.len() < n / 2 && a < edge + 1.0 {
            let b = a + step;
            let pb = hermite_pair(n, b).0;
            if pa == 0.0 {
                positive.push(a);
            } else if pb != 0.0 && pa.signum() != pb.signum() {
                positive.push(refine_root(n, a, b));
            }
            a = b;
            pa = pb;
        }
        assert_eq!(positive.len(), n / 2, "root scan missed nodes for n = {n}");

        let weight = |z: f64| {
            let (_, q, log_scale) = hermite_pair(n, z);
            // w = 2 / p_n'(z)^2 = 1 / (n p_{n-1}(z)^2)
            (-nf.ln() - 2.0 * (q.abs().ln() + log_scale)).exp()
        };
        let mut nodes = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        for &z in positive.iter().rev() {
            nodes.push(-z);
            weights.push(weight(z));
        }
        if n % 2 == 1 {
            nodes.push(0.0);
            weights.push(weight(0.0));
        }
        for &z in &positive {
            nodes.push(z);
            weights.push(weight(z));
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `int e^{-x^2} f(x) dx`.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .collect::<CompensatedSum>()
            .value()
    }

    /// `E[g(X)]` for `X ~ N(0, variance)`, together with `E[|g(X)|]`.
    pub fn normal_expectation(&self, variance: f64, g: impl Fn(f64) -> f64) -> (f64, f64) {
        let scale = (2.0 * variance).sqrt();
        let mut signed = CompensatedSum::new();
        let mut absolute = CompensatedSum::new();
        for (&x, &w) in self.nodes.iter().zip(&self.weights) {
            let v = w * g(scale * x);
            signed.add(v);
            absolute.add(v.abs());
        }
        let norm = PI.sqrt();
        (signed.value() / norm, absolute.value() / norm)
    }
}

/// Smallest rule used by the doubling loop.
pub const MIN_NODES: usize = 256;
/// Largest rule used by the doubling loop.
pub const MAX_NODES: usize = 4096;

static RULES: [OnceLock<GaussHermite>; 5] = [
    OnceLock::new(),
    OnceLock::new(),
    OnceLock::new(),
    OnceLock::new(),
    OnceLock::new(),
];

/// Cached rules with `256 * 2^level` nodes, `level` in `0..5`.
pub fn cached_rule(level: usize) -> &'static GaussHermite {
    RULES[level].get_or_init(|| GaussHermite::new(MIN_NODES << level))
}

pub fn levels() -> usize {
    RULES.len()
}
