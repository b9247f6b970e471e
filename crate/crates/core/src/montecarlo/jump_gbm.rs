use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, ensure_non_negative, ensure_positive, Error, Result};
use crate::inversion::ConstantJumpSpec;
use crate::jump_densities::{mean_jump, CompoundJumpSpec, JumpSampler};

use super::{run_units, McConfig, SampleFlags, Scheme, TerminalSample};

/// Jump component of a jump-diffusion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum JumpModel {
    None,
    Constant(ConstantJumpSpec),
    Compound(CompoundJumpSpec),
}

enum Prepared {
    None,
    Constant { lambda: f64, log_size: f64 },
    Compound { lambda: f64, sampler: JumpSampler },
}

impl JumpModel {
    /// `(λ, E[J])`, the pieces of the compensator.
    pub fn intensity_and_mean(&self) -> Result<(f64, f64)> {
        Ok(match self {
            JumpModel::None => (0.0, 0.0),
            JumpModel::Constant(c) => {
                c.validate()?;
                (c.lambda, c.gamma)
            }
            JumpModel::Compound(c) => {
                ensure_positive("lambda", c.lambda)?;
                (c.lambda, mean_jump(&c.density)?)
            }
        })
    }

    fn prepare(&self) -> Result<Prepared> {
        Ok(match self {
            JumpModel::None => Prepared::None,
            JumpModel::Constant(c) => Prepared::Constant {
                lambda: c.lambda,
                log_size: c.gamma.ln_1p(),
            },
            JumpModel::Compound(c) => Prepared::Compound {
                lambda: c.lambda,
                sampler: c.density.sampler()?,
            },
        })
    }
}

fn poisson_count<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    // the mean is validated positive and finite, so construction cannot fail
    let n: f64 = Poisson::new(mean).map(|p| p.sample(rng)).unwrap_or(0.0);
    n as u64
}

/// Exact terminal law of
/// `dS/S = (Δr − λ E[J]) dt + σ dW + J dN`:
/// `S_T = S₀ exp(σ W_T + (Δr − λ E[J] − σ²/2) T) ∏ (1 + J_i)`.
///
/// Radon–Nikodym weights `L_T = S_T e^{−Δr T}/S₀` are attached.
pub fn simulate_jump_gbm_exact(
    s0: f64,
    rate_differential: f64,
    sigma: f64,
    jumps: &JumpModel,
    maturity: f64,
    cfg: &McConfig,
) -> Result<TerminalSample> {
    ensure_positive("s0", s0)?;
    ensure_finite("rate_differential", rate_differential)?;
    ensure_non_negative("sigma", sigma)?;
    ensure_positive("maturity", maturity)?;
    cfg.validate()?;
    if cfg.scheme != Scheme::Exact {
        return Err(Error::invalid("scheme", "jump-GBM is sampled exactly; use the exact scheme"));
    }
    let (lambda, mean) = jumps.intensity_and_mean()?;
    let prepared = jumps.prepare()?;
    let drift = (rate_differential - lambda * mean - 0.5 * sigma * sigma) * maturity;
    let vol = sigma * maturity.sqrt();
    let ln_s0 = s0.ln();

    let values = run_units(cfg, |rng, sign| {
        let z: f64 = rng.sample(StandardNormal);
        let jump_log = match &prepared {
            Prepared::None => 0.0,
            Prepared::Constant { lambda, log_size } => poisson_count(lambda * maturity, rng) as f64 * log_size,
            Prepared::Compound { lambda, sampler } => {
                let n = poisson_count(lambda * maturity, rng);
                (0..n).map(|_| sampler.draw(rng).ln_1p()).sum()
            }
        };
        (ln_s0 + drift + vol * sign * z + jump_log).exp()
    });
    let discount_ratio = (-rate_differential * maturity).exp() / s0;
    let weights = values.iter().map(|s| s * discount_ratio).collect();
    Ok(TerminalSample {
        values,
        rn_weights: Some(weights),
        config: *cfg,
        s0,
        rate_differential,
        maturity,
        flags: SampleFlags::default(),
    })
}
