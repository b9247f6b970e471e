use serde::{Deserialize, Serialize};

use crate::error::{ensure_non_negative, ensure_positive, Error, Result};

/// Below this `|ln(F/K)|` the ATM limit of the expansion is used.
pub const ATM_LOG_MONEYNESS: f64 = 1e-8;

/// SABR parameters: `dS = V S^β dW₁`, `dV = ν V dW₂`, `d⟨W₁, W₂⟩ = ρ dt`.
///
/// `alpha_shift` is added to `alpha` whenever the smile is evaluated; it is
/// the small ATM-matching adjustment some calibrators report separately.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SabrParams {
    pub alpha: f64,
    pub beta: f64,
    pub rho: f64,
    pub nu: f64,
    #[serde(default)]
    pub alpha_shift: f64,
}

impl SabrParams {
    pub fn new(alpha: f64, beta: f64, rho: f64, nu: f64) -> Result<Self> {
        let p = Self {
            alpha,
            beta,
            rho,
            nu,
            alpha_shift: 0.0,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_shift(mut self, alpha_shift: f64) -> Result<Self> {
        self.alpha_shift = alpha_shift;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        ensure_positive("alpha", self.alpha)?;
        ensure_positive("alpha + alpha_shift", self.effective_alpha())?;
        if !(0.0..=1.0).contains(&self.beta) {
            return Err(Error::BetaOutOfRange(self.beta));
        }
        if !(self.rho.is_finite() && self.rho.abs() < 1.0) {
            return Err(Error::invalid("rho", format!("must lie in (-1, 1), got {}", self.rho)));
        }
        ensure_non_negative("nu", self.nu)
    }

    pub fn effective_alpha(&self) -> f64 {
        self.alpha + self.alpha_shift
    }
}

/// Hagan's lognormal implied-volatility expansion.
pub fn hagan_vol(p: &SabrParams, forward: f64, strike: f64, maturity: f64) -> Result<f64> {
    p.validate()?;
    ensure_positive("forward", forward)?;
    ensure_positive("strike", strike)?;
    ensure_positive("maturity", maturity)?;
    Ok(hagan_vol_unchecked(p, forward, strike, maturity))
}

pub(crate) fn hagan_vol_unchecked(p: &SabrParams, forward: f64, strike: f64, maturity: f64) -> f64 {
    let alpha = p.effective_alpha();
    let (beta, rho, nu) = (p.beta, p.rho, p.nu);
    let omb = 1.0 - beta;
    let log_fk = (forward / strike).ln();
    let fk_pow = (forward * strike).powf(0.5 * omb);

    let correction = 1.0
        + (omb * omb / 24.0 * alpha * alpha / (fk_pow * fk_pow)
            + 0.25 * rho * beta * nu * alpha / fk_pow
            + (2.0 - 3.0 * rho * rho) / 24.0 * nu * nu)
            * maturity;

    if log_fk.abs() < ATM_LOG_MONEYNESS {
        return alpha / forward.powf(omb) * correction;
    }

    let l2 = log_fk * log_fk;
    let denom = fk_pow * (1.0 + omb * omb / 24.0 * l2 + omb.powi(4) / 1920.0 * l2 * l2);
    let z = nu / alpha * fk_pow * log_fk;
    alpha / denom * z_over_x(z, rho) * correction
}

/// `z / x(z)` with `x(z) = ln((√(1 − 2ρz + z²) + z − ρ)/(1 − ρ))`, evaluated
/// through `ln_1p` so that small `z` keeps full precision.
fn z_over_x(z: f64, rho: f64) -> f64 {
    if z == 0.0 {
        return 1.0;
    }
    let root = (1.0 - 2.0 * rho * z + z * z).sqrt();
    let root_minus_one = (z * z - 2.0 * rho * z) / (root + 1.0);
    let x = ((root_minus_one + z) / (1.0 - rho)).ln_1p();
    z / x
}

/// Smallest positive `alpha` reproducing `atm_vol` at the money, all other
/// parameters fixed. The ATM expansion is a cubic in `alpha`.
pub fn alpha_from_atm_vol(atm_vol: f64, forward: f64, maturity: f64, beta: f64, rho: f64, nu: f64) -> Result<f64> {
    ensure_positive("atm_vol", atm_vol)?;
    ensure_positive("forward", forward)?;
    ensure_positive("maturity", maturity)?;
    let omb = 1.0 - beta;
    let fp = forward.powf(omb);
    // σ = a/fp · [1 + (c2 a² + c1 a + c0) T]
    let c2 = omb * omb / 24.0 / (fp * fp);
    let c1 = 0.25 * rho * beta * nu / fp;
    let c0 = (2.0 - 3.0 * rho * rho) / 24.0 * nu * nu;
    let g = |a: f64| a / fp * (1.0 + (c2 * a * a + c1 * a + c0) * maturity) - atm_vol;
    let dg = |a: f64| (1.0 + (3.0 * c2 * a * a + 2.0 * c1 * a + c0) * maturity) / fp;
    let mut a = atm_vol * fp / (1.0 + c0 * maturity).max(0.1);
    for _ in 0..100 {
        let step = g(a) / dg(a);
        let next = a - step;
        a = if next > 0.0 { next } else { 0.5 * a };
        if step.abs() <= 1e-15 * a {
            break;
        }
    }
    if g(a).abs() > 1e-12 * atm_vol.max(1.0) || a <= 0.0 {
        return Err(Error::Internal(format!("ATM alpha solve failed (alpha {a})")));
    }
    Ok(a)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn desk() -> SabrParams {
        SabrParams::new(0.0748, 0.5, 0.1435, 0.7330).unwrap()
    }

    #[test]
    fn lognormal_degenerate_case() {
        let p = SabrParams::new(0.12, 1.0, 0.3, 0.0).unwrap();
        assert_eq!(hagan_vol(&p, 1.3, 1.3, 2.0).unwrap(), 0.12);
        // away from the money as well: backbone is flat and z = 0
        assert_eq!(hagan_vol(&p, 1.3, 1.5, 2.0).unwrap(), 0.12);
    }

    #[test]
    fn desk_atm_value() {
        let p = desk();
        let (f, t) = (1.2478f64, 0.25);
        let lead = 0.0748 / f.powf(0.5);
        assert!((lead - 0.066963).abs() < 1e-6);
        // leading term times the standard time correction
        let corr = 1.0
            + (0.25 / 24.0 * 0.0748f64.powi(2) / f
                + 0.25 * 0.1435 * 0.5 * 0.7330 * 0.0748 / f.sqrt()
                + (2.0 - 3.0 * 0.1435f64.powi(2)) / 24.0 * 0.7330f64.powi(2))
                * t;
        let v = hagan_vol(&p, f, f, t).unwrap();
        assert!((v - lead * corr).abs() < 1e-15);
        assert!((v - 0.0684).abs() < 1e-3, "{v}");
    }

    #[test]
    fn atm_continuity() {
        let p = desk();
        let f = 1.2478;
        let atm = hagan_vol(&p, f, f, 0.25).unwrap();
        for eps in [1e-9, -1e-9, 1e-7, -1e-7] {
            let v = hagan_vol(&p, f, f * (1.0 + eps), 0.25).unwrap();
            assert!((v - atm).abs() <= 1e-8, "eps {eps}");
        }
    }

    #[test]
    fn z_over_x_matches_series() {
        // 1/(1 + ρz/2 + P₂(ρ)z²/3) for small z
        let (z, rho) = (1e-4, 0.3);
        let p2 = (3.0 * rho * rho - 1.0) / 2.0;
        let series = 1.0 / (1.0 + rho * z / 2.0 + p2 * z * z / 3.0);
        assert!((z_over_x(z, rho) - series).abs() < 1e-11);
    }

    #[test]
    fn shift_is_additive() {
        let p = desk();
        let shifted = p.with_shift(9.8986e-8).unwrap();
        let mut bumped = p;
        bumped.alpha += 9.8986e-8;
        let f = 1.2478;
        assert_eq!(
            hagan_vol(&shifted, f, 1.3, 0.25).unwrap(),
            hagan_vol(&bumped, f, 1.3, 0.25).unwrap()
        );
    }

    #[test]
    fn invalid_params() {
        assert!(matches!(SabrParams::new(0.1, 1.2, 0.0, 0.3), Err(Error::BetaOutOfRange(_))));
        assert!(SabrParams::new(0.0, 0.5, 0.0, 0.3).is_err());
        assert!(SabrParams::new(0.1, 0.5, 1.0, 0.3).is_err());
        assert!(SabrParams::new(0.1, 0.5, 0.0, -0.3).is_err());
    }

    #[test]
    fn atm_alpha_inverts_expansion() {
        let p = desk();
        let f = 1.2478;
        let atm = hagan_vol(&p, f, f, 0.25).unwrap();
        let a = alpha_from_atm_vol(atm, f, 0.25, p.beta, p.rho, p.nu).unwrap();
        assert!((a - p.alpha).abs() < 1e-12);
    }
}
