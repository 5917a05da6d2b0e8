//! Uniform time grids and reproducible Brownian paths.
//!
//! Every path is a pure function of `(seed, path_index, grid)`. The seed picks
//! a ChaCha8 key and the path index selects an independent stream of that key,
//! so workers can generate any subset of paths without sharing RNG state.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Relative tolerance used to decide whether a time lies on a grid node.
const NODE_TOLERANCE: f64 = 1e-9;

/// Uniform partition of `[0, T]` into `n` steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    horizon: f64,
    steps: usize,
}

impl TimeGrid {
    pub fn new(horizon: f64, steps: usize) -> Result<Self> {
        if !horizon.is_finite() {
            return Err(Error::InvalidGrid(format!(
                "horizon must be finite, got {horizon}"
            )));
        }
        if horizon <= 0.0 {
            return Err(Error::InvalidGrid(format!(
                "horizon must be positive, got {horizon}"
            )));
        }
        if steps == 0 {
            return Err(Error::InvalidGrid("at least one step is required".into()));
        }
        Ok(Self { horizon, steps })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    /// Node `t_i = i T / n`. The last node is exactly `T`.
    pub fn node(&self, i: usize) -> f64 {
        debug_assert!(i <= self.steps);
        if i == self.steps {
            self.horizon
        } else {
            self.horizon * i as f64 / self.steps as f64
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.steps).map(move |i| self.node(i))
    }

    /// Index of the node at time `t`, if `t` lies on the grid.
    pub fn index_of(&self, t: f64) -> Option<usize> {
        if !t.is_finite() || t < -NODE_TOLERANCE * self.dt() {
            return None;
        }
        let i = (t / self.dt()).round();
        if i < 0.0 || i > self.steps as f64 {
            return None;
        }
        let i = i as usize;
        ((self.node(i) - t).abs() <= NODE_TOLERANCE * self.dt()).then_some(i)
    }

    /// Grid with `steps / factor` steps over the same horizon.
    pub fn coarsen(&self, factor: usize) -> Result<Self> {
        if factor == 0 || self.steps % factor != 0 {
            return Err(Error::InvalidGrid(format!(
                "cannot coarsen {} steps by a factor of {factor}",
                self.steps
            )));
        }
        Self::new(self.horizon, self.steps / factor)
    }
}

/// Discretely sampled Brownian motion with `W_0 = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct BrownianPath {
    grid: TimeGrid,
    values: Vec<f64>,
    seed: u64,
    path_index: u64,
}

/// Per-path generator: ChaCha8 keyed by `seed`, stream `path_index`.
pub fn path_rng(seed: u64, path_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path_index);
    rng
}

/// Generates path `path_index` of the family identified by `seed`.
pub fn generate_path(grid: TimeGrid, seed: u64, path_index: u64) -> BrownianPath {
    let mut rng = path_rng(seed, path_index);
    let scale = grid.dt().sqrt();
    let mut values = Vec::with_capacity(grid.steps() + 1);
    let mut w = 0.0;
    values.push(w);
    for _ in 0..grid.steps() {
        let z: f64 = rng.sample(StandardNormal);
        w += scale * z;
        values.push(w);
    }
    BrownianPath {
        grid,
        values,
        seed,
        path_index,
    }
}

impl BrownianPath {
    /// Wraps externally supplied node values, e.g. a hand-built test path.
    pub fn from_values(grid: TimeGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.steps() + 1 {
            return Err(Error::InvalidGrid(format!(
                "expected {} values, got {}",
                grid.steps() + 1,
                values.len()
            )));
        }
        if values[0] != 0.0 {
            return Err(Error::InvalidGrid("a Brownian path must start at 0".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("path value"));
        }
        Ok(Self {
            grid,
            values,
            seed: 0,
            path_index: 0,
        })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, i: usize) -> f64 {
        self.values[i]
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn path_index(&self) -> u64 {
        self.path_index
    }

    /// `B_T`, the last grid value.
    pub fn terminal(&self) -> f64 {
        self.values[self.grid.steps()]
    }

    /// Increment `W_i - W_{i-1}` for `i >= 1`.
    pub fn increment(&self, i: usize) -> f64 {
        self.values[i] - self.values[i - 1]
    }

    pub fn increments(&self) -> impl Iterator<Item = f64> + '_ {
        self.values.windows(2).map(|w| w[1] - w[0])
    }

    /// The same path observed on every `factor`-th node.
    pub fn coarsen(&self, factor: usize) -> Result<Self> {
        let grid = self.grid.coarsen(factor)?;
        let values = self.values.iter().step_by(factor).copied().collect();
        Ok(Self {
            grid,
            values,
            seed: self.seed,
            path_index: self.path_index,
        })
    }

    /// Cameron-Martin shift `U_{s,t}`: node `u` maps to
    /// `W(u) - rate * (min(u, t) - s)^+`.
    pub fn girsanov_shift(&self, rate: f64, s: f64, t: f64) -> Result<Self> {
        if !rate.is_finite() {
            return Err(Error::NonFinite("shift rate"));
        }
        if s > t {
            return Err(Error::InvalidWindow(format!("start {s} exceeds end {t}")));
        }
        let start = self
            .grid
            .index_of(s)
            .ok_or_else(|| Error::InvalidWindow(format!("start {s} is not a grid node")))?;
        let end = self
            .grid
            .index_of(t)
            .ok_or_else(|| Error::InvalidWindow(format!("end {t} is not a grid node")))?;
        let (s, t) = (self.grid.node(start), self.grid.node(end));
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(i, &w)| {
                let u = self.grid.node(i);
                let active = (u.min(t) - s).max(0.0);
                if active > 0.0 {
                    w - rate * active
                } else {
                    w
                }
            })
            .collect();
        Ok(Self {
            grid: self.grid,
            values,
            seed: self.seed,
            path_index: self.path_index,
        })
    }
}
