//! Terminal-value Monte Carlo for the rate and its inverse.
//!
//! Every simulation unit (a path, or an antithetic pair stored as two
//! adjacent paths) draws from its own ChaCha8 stream keyed by `(seed, unit)`,
//! so samples are bit-identical whatever the thread count. Reductions run in
//! path order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

mod export;
mod heston;
mod jump_gbm;
mod sabr;
mod smile;

pub use export::{read_binary, write_binary, write_csv, SampleHeader};
pub use heston::simulate_heston;
pub use jump_gbm::{simulate_jump_gbm_exact, JumpModel};
pub use sabr::simulate_inverse_sabr;
pub use smile::{mc_smile, rn_weighted_price, McSmile, McSmilePoint};

/// Below this many steps per year discretised schemes flag their output.
pub const MIN_STEPS_PER_YEAR: f64 = 50.0;

/// Paths leaving `[Y_FLOOR, Y_CAP]` are capped and counted.
pub const Y_FLOOR: f64 = 1e-8;
pub const Y_CAP: f64 = 1e8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    EulerFullTruncation,
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct McConfig {
    pub paths: usize,
    pub steps: usize,
    pub seed: u64,
    /// Pairs each Gaussian draw with its negation; `paths` must be even.
    pub antithetic: bool,
    pub scheme: Scheme,
}

impl McConfig {
    pub fn new(paths: usize, steps: usize, seed: u64, antithetic: bool, scheme: Scheme) -> Result<Self> {
        let c = Self {
            paths,
            steps,
            seed,
            antithetic,
            scheme,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn exact(paths: usize, seed: u64) -> Self {
        Self {
            paths,
            steps: 1,
            seed,
            antithetic: false,
            scheme: Scheme::Exact,
        }
    }

    pub fn euler(paths: usize, steps: usize, seed: u64) -> Self {
        Self {
            paths,
            steps,
            seed,
            antithetic: false,
            scheme: Scheme::EulerFullTruncation,
        }
    }

    pub fn with_antithetic(mut self, on: bool) -> Self {
        self.antithetic = on;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.paths == 0 {
            return Err(Error::invalid("paths", "must be at least 1"));
        }
        if self.steps == 0 {
            return Err(Error::invalid("steps", "must be at least 1"));
        }
        if self.antithetic && !self.paths.is_multiple_of(2) {
            return Err(Error::invalid("paths", "must be even for antithetic sampling"));
        }
        Ok(())
    }

    fn units(&self) -> usize {
        if self.antithetic {
            self.paths / 2
        } else {
            self.paths
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleFlags {
    /// Fewer than [`MIN_STEPS_PER_YEAR`] steps per year.
    pub coarse_time_grid: bool,
    /// Paths whose level left `[Y_FLOOR, Y_CAP]`.
    pub capped_paths: usize,
    /// Paths whose variance hit zero and stayed there.
    pub absorbed_paths: usize,
}

/// A Monte Carlo mean and its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
}

/// Terminal levels, optional Radon–Nikodym weights and what produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct TerminalSample {
    pub values: Vec<f64>,
    pub rn_weights: Option<Vec<f64>>,
    pub config: McConfig,
    pub s0: f64,
    pub rate_differential: f64,
    pub maturity: f64,
    pub flags: SampleFlags,
}

impl TerminalSample {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Mean of `f(path index, level)`. Antithetic twins are averaged before
    /// the standard error is formed.
    pub fn estimate(&self, f: impl Fn(usize, f64) -> f64) -> Estimate {
        let per_path: Vec<f64> = self.values.iter().enumerate().map(|(i, &s)| f(i, s)).collect();
        let units: Vec<f64> = if self.config.antithetic {
            per_path.chunks(2).map(|c| 0.5 * (c[0] + c[1])).collect()
        } else {
            per_path
        };
        mean_and_error(&units)
    }

    pub fn mean(&self) -> Estimate {
        self.estimate(|_, s| s)
    }

    pub fn weight_mean(&self) -> Result<Estimate> {
        let w = self.rn_weights.as_ref().ok_or(Error::MissingWeights)?;
        Ok(self.estimate(|i, _| w[i]))
    }
}

pub(crate) fn mean_and_error(xs: &[f64]) -> Estimate {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = if xs.len() > 1 {
        xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    Estimate {
        value: mean,
        std_error: (var / n).sqrt(),
    }
}

pub(crate) fn unit_rng(seed: u64, unit: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(unit as u64);
    rng
}

/// Runs `unit(rng, sign)` once per path (sign `+1`) or twice per antithetic
/// pair (`+1`, `−1`) with identically seeded generators, in parallel, and
/// returns per-path results in path order.
pub(crate) fn run_units<T, F>(cfg: &McConfig, unit: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut ChaCha8Rng, f64) -> T + Sync,
{
    let per_unit: Vec<Vec<T>> = (0..cfg.units())
        .into_par_iter()
        .map(|u| {
            if cfg.antithetic {
                let a = unit(&mut unit_rng(cfg.seed, u), 1.0);
                let b = unit(&mut unit_rng(cfg.seed, u), -1.0);
                vec![a, b]
            } else {
                vec![unit(&mut unit_rng(cfg.seed, u), 1.0)]
            }
        })
        .collect();
    per_unit.into_iter().flatten().collect()
}
