use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::pricing::SabrParams;

/// Coefficients of `Y = 1/S` under the foreign measure when `S` follows SABR
/// under the domestic one:
///
/// ```text
/// dY = −Δr Y dt + V Y^{2−β} dB
/// dV = νρ Y^{1−β} V² dt + ν V dZ
/// ```
///
/// `B` is the negative of the Brownian that drives `S`, so
/// `d⟨B, Z⟩ = −ρ dt`; that value is stored in `correlation`. The extra
/// `V²` drift means the inverse is not a SABR model whenever `νρ ≠ 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InverseSabrDynamics {
    pub source: SabrParams,
    pub rate_differential: f64,
    /// Instantaneous correlation between `B` and `Z`.
    pub correlation: f64,
}

impl InverseSabrDynamics {
    fn beta(&self) -> f64 {
        self.source.beta
    }

    pub fn drift_y(&self, y: f64, _v: f64, _t: f64) -> f64 {
        -self.rate_differential * y
    }

    pub fn diff_y(&self, y: f64, v: f64, _t: f64) -> f64 {
        v * y.powf(2.0 - self.beta())
    }

    pub fn drift_v(&self, y: f64, v: f64, _t: f64) -> f64 {
        self.source.nu * self.source.rho * y.powf(1.0 - self.beta()) * v * v
    }

    pub fn diff_v(&self, _y: f64, v: f64, _t: f64) -> f64 {
        self.source.nu * v
    }

    /// Exponent of `Y` in the diffusion coefficient, `2 − β`.
    pub fn diffusion_exponent(&self) -> f64 {
        2.0 - self.beta()
    }

    /// True when the variance leg carries a drift, i.e. the inverse leaves the SABR family.
    pub fn has_vol_drift(&self) -> bool {
        self.source.nu * self.source.rho != 0.0
    }

    /// Initial volatility level of the inverse, equal to the source `alpha`
    /// (shift included).
    pub fn v0(&self) -> f64 {
        self.source.effective_alpha()
    }
}

pub fn inverse_sabr(p: &SabrParams, rate_differential: f64) -> Result<InverseSabrDynamics> {
    p.validate()?;
    crate::error::ensure_finite("rate_differential", rate_differential)?;
    Ok(InverseSabrDynamics {
        source: *p,
        rate_differential,
        correlation: -p.rho,
    })
}
