//! Semi-closed-form Heston pricing on the forward measure.
//!
//! The characteristic function of `ln(S_T / F)` is written in the
//! "little trap" form, rearranged so that every `1/σ²` factor multiplies a
//! quantity that is itself `O(σ²)`; the pricer therefore stays accurate as
//! the vol-of-vol goes to zero. Calls are priced with the single-integral
//! Lewis representation
//!
//! ```text
//! C = P · ( F − √(FK)/π · ∫₀^∞ Re[e^{iuk} φ(u − i/2)] / (u² + 1/4) du ),   k = ln(F/K)
//! ```

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::black::check_inputs;
use crate::error::{ensure_finite, ensure_non_negative, ensure_positive, Error, Result};
use crate::quad::{integrate_half_line, QuadOptions};

/// Heston parameters: `dV = κ(V̄ − V)dt + σ√V dW₂`, `d⟨W₁, W₂⟩ = ρ dt`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HestonParams {
    pub v0: f64,
    pub vbar: f64,
    pub kappa: f64,
    pub sigma: f64,
    pub rho: f64,
}

impl HestonParams {
    pub fn new(v0: f64, vbar: f64, kappa: f64, sigma: f64, rho: f64) -> Result<Self> {
        let p = Self {
            v0,
            vbar,
            kappa,
            sigma,
            rho,
        };
        p.validate()?;
        Ok(p)
    }

    /// Structural invariants. `kappa` may take any finite value here; the
    /// pricers additionally require `kappa > 0`.
    pub fn validate(&self) -> Result<()> {
        ensure_non_negative("v0", self.v0)?;
        ensure_non_negative("vbar", self.vbar)?;
        ensure_finite("kappa", self.kappa)?;
        ensure_positive("sigma", self.sigma)?;
        if !(self.rho.is_finite() && self.rho.abs() <= 1.0) {
            return Err(Error::invalid("rho", format!("must lie in [-1, 1], got {}", self.rho)));
        }
        Ok(())
    }

    pub(crate) fn validate_for_pricing(&self) -> Result<()> {
        self.validate()?;
        ensure_positive("kappa", self.kappa)
    }

    /// `2κV̄ ≥ σ²`: variance stays strictly positive.
    pub fn feller_satisfied(&self) -> bool {
        2.0 * self.kappa * self.vbar >= self.sigma * self.sigma
    }

    /// Expected integrated variance over `[0, T]`.
    pub fn integrated_variance(&self, maturity: f64) -> f64 {
        let kt = self.kappa * maturity;
        let decay = if kt.abs() < 1e-8 {
            maturity * (1.0 - 0.5 * kt)
        } else {
            -(-kt).exp_m1() / self.kappa
        };
        self.vbar * maturity + (self.v0 - self.vbar) * decay
    }
}

fn expm1_c(z: Complex64) -> Complex64 {
    if z.norm() < 1e-5 {
        z * (1.0 + z * (0.5 + z / 6.0))
    } else {
        z.exp() - 1.0
    }
}

/// `ln(1 + z) / z`, finite at `z = 0`.
fn ln1p_over_z(z: Complex64) -> Complex64 {
    if z.norm() < 1e-5 {
        1.0 - z * (0.5 - z / 3.0)
    } else {
        (1.0 + z).ln() / z
    }
}

/// Characteristic function `E[exp(i w X)]` of `X = ln(S_T / F)`, for complex `w`.
pub fn heston_cf(p: &HestonParams, maturity: f64, w: Complex64) -> Complex64 {
    let i = Complex64::i();
    let s2 = p.sigma * p.sigma;
    let iw_w2 = i * w + w * w;
    let beta = p.kappa - p.rho * p.sigma * i * w;
    let d = (beta * beta + s2 * iw_w2).sqrt();
    let beta_plus_d = beta + d;
    // (β − d)/σ², computed without cancellation
    let a = -iw_w2 / beta_plus_d;
    let g = a * s2 / beta_plus_d;
    let e = -expm1_c(-d * maturity);
    let one_minus_g = 1.0 - g;
    let z = g * e / one_minus_g;
    let c = p.kappa * p.vbar * (a * maturity - 2.0 * a * e / (beta_plus_d * one_minus_g) * ln1p_over_z(z));
    let dd = a * e / (1.0 - g * (1.0 - e));
    (c + dd * p.v0).exp()
}

/// Discounted Heston call price.
pub fn heston_call(p: &HestonParams, forward: f64, strike: f64, maturity: f64, discount: f64) -> Result<f64> {
    p.validate_for_pricing()?;
    check_inputs(forward, strike, maturity, discount)?;
    let k = (forward / strike).ln();
    let half_i = Complex64::new(0.0, 0.5);
    let integrand = |u: f64| {
        let phi = heston_cf(p, maturity, Complex64::new(u, 0.0) - half_i);
        let rot = Complex64::new(0.0, u * k).exp();
        (rot * phi).re / (u * u + 0.25)
    };
    let scale = 1.0 / p.integrated_variance(maturity).max(1e-6).sqrt();
    let opts = QuadOptions {
        abs_tol: 1e-11 * std::f64::consts::PI * (forward / strike).sqrt(),
        rel_tol: 0.0,
        max_intervals: 4000,
    };
    let integral = integrate_half_line(integrand, 0.0, scale, opts)?;
    let undiscounted = forward - (forward * strike).sqrt() / std::f64::consts::PI * integral.value;
    Ok(discount * undiscounted)
}
