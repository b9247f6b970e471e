use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{ensure_finite, ensure_positive, Error, Result};
use crate::pricing::HestonParams;

use super::{run_units, McConfig, SampleFlags, Scheme, TerminalSample, MIN_STEPS_PER_YEAR};

/// Log-Euler for the rate with full-truncation Euler for the variance:
/// `V⁺` enters both drift and diffusion, so the scheme runs at `ρ = ±1`.
pub fn simulate_heston(
    p: &HestonParams,
    s0: f64,
    rate_differential: f64,
    maturity: f64,
    cfg: &McConfig,
) -> Result<TerminalSample> {
    p.validate_for_pricing()?;
    ensure_positive("s0", s0)?;
    ensure_finite("rate_differential", rate_differential)?;
    ensure_positive("maturity", maturity)?;
    cfg.validate()?;
    if cfg.scheme != Scheme::EulerFullTruncation {
        return Err(Error::invalid("scheme", "Heston paths use the full-truncation Euler scheme"));
    }
    let dt = maturity / cfg.steps as f64;
    let sqrt_dt = dt.sqrt();
    let ortho = (1.0 - p.rho * p.rho).max(0.0).sqrt();
    let ln_s0 = s0.ln();

    let values = run_units(cfg, |rng, sign| {
        let mut x = ln_s0;
        let mut v = p.v0;
        for _ in 0..cfg.steps {
            let z1: f64 = sign * rng.sample::<f64, _>(StandardNormal);
            let z2: f64 = sign * rng.sample::<f64, _>(StandardNormal);
            let vp = v.max(0.0);
            let sd = (vp * dt).sqrt();
            x += (rate_differential - 0.5 * vp) * dt + sd * z1;
            v += p.kappa * (p.vbar - vp) * dt + p.sigma * vp.sqrt() * sqrt_dt * (p.rho * z1 + ortho * z2);
        }
        x.exp()
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
        flags: SampleFlags {
            coarse_time_grid: (cfg.steps as f64) / maturity < MIN_STEPS_PER_YEAR,
            ..SampleFlags::default()
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::montecarlo::mc_smile;
    use crate::pricing::black_call;

    #[test]
    fn frozen_variance_is_black() {
        let p = HestonParams::new(0.04, 0.04, 1.0, 1e-12, 0.0).unwrap();
        let cfg = McConfig::euler(100_000, 50, 5).with_antithetic(true);
        let s = simulate_heston(&p, 1.0, 0.0, 1.0, &cfg).unwrap();
        let mc = s.estimate(|_, x| (x - 1.0).max(0.0));
        let bs = black_call(1.0, 1.0, 1.0, 0.2, 1.0).unwrap();
        assert!((mc.value - bs).abs() <= 3.0 * mc.std_error, "{mc:?} vs {bs}");
    }

    #[test]
    fn desk_params_atm_vol() {
        let p = HestonParams::new(0.0025, 0.0287, 1.1718, 0.1720, 0.0952).unwrap();
        let (f, t) = (1.2478, 0.25);
        let s0: f64 = 1.24122;
        let dr = (f / s0).ln() / t;
        let cfg = McConfig::euler(200_000, 100, 6).with_antithetic(true);
        let s = simulate_heston(&p, s0, dr, t, &cfg).unwrap();
        let smile = mc_smile(&s, f, &[f], t, 1.0).unwrap();
        let pt = &smile.points[0];
        let analytic = crate::pricing::implied_vol(crate::pricing::heston_call(&p, f, f, t, 1.0).unwrap(), f, f, t, 1.0).unwrap();
        let vol = pt.vol.unwrap();
        assert!((vol - analytic).abs() <= 3.0 * pt.vol_std_error, "{vol} {analytic} {}", pt.vol_std_error);
    }

    #[test]
    fn perfect_correlation_runs() {
        for rho in [-1.0, 1.0] {
            let p = HestonParams::new(0.04, 0.04, 0.5, 1.0, rho).unwrap();
            let s = simulate_heston(&p, 1.0, 0.0, 1.0, &McConfig::euler(2_000, 52, 7)).unwrap();
            assert!(s.values.iter().all(|v| v.is_finite() && *v > 0.0));
        }
    }

    #[test]
    fn coarse_grid_flagged() {
        let p = HestonParams::new(0.04, 0.04, 1.0, 0.3, -0.5).unwrap();
        let s = simulate_heston(&p, 1.0, 0.0, 1.0, &McConfig::euler(10, 12, 0)).unwrap();
        assert!(s.flags.coarse_time_grid);
        let s = simulate_heston(&p, 1.0, 0.0, 1.0, &McConfig::euler(10, 50, 0)).unwrap();
        assert!(!s.flags.coarse_time_grid);
    }
}
