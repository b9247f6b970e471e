use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{ensure_positive, Error, Result};
use crate::inversion::InverseSabrDynamics;

use super::{run_units, McConfig, SampleFlags, Scheme, TerminalSample, MIN_STEPS_PER_YEAR, Y_CAP, Y_FLOOR};

struct PathEnd {
    y: f64,
    capped: bool,
    absorbed: bool,
}

/// Euler on `(ln Y, V)` driven by the inverse-rate coefficients. The
/// variance is absorbed at zero; levels leaving `[Y_FLOOR, Y_CAP]` are capped
/// and the path is counted in the flags.
pub fn simulate_inverse_sabr(dynamics: &InverseSabrDynamics, y0: f64, maturity: f64, cfg: &McConfig) -> Result<TerminalSample> {
    dynamics.source.validate()?;
    ensure_positive("y0", y0)?;
    ensure_positive("maturity", maturity)?;
    cfg.validate()?;
    if cfg.scheme != Scheme::EulerFullTruncation {
        return Err(Error::invalid("scheme", "inverse-SABR paths use the Euler scheme"));
    }
    let dt = maturity / cfg.steps as f64;
    let sqrt_dt = dt.sqrt();
    let c = dynamics.correlation;
    let ortho = (1.0 - c * c).max(0.0).sqrt();
    let (lo, hi) = (Y_FLOOR.ln(), Y_CAP.ln());

    let ends = run_units(cfg, |rng, sign| {
        let mut ln_y = y0.ln();
        let mut v = dynamics.v0();
        let mut capped = false;
        let mut absorbed = false;
        for _ in 0..cfg.steps {
            let z1: f64 = sign * rng.sample::<f64, _>(StandardNormal);
            let z2: f64 = sign * rng.sample::<f64, _>(StandardNormal);
            let y = ln_y.exp();
            if v > 0.0 {
                let local = dynamics.diff_y(y, v, 0.0) / y;
                let drift = dynamics.drift_y(y, v, 0.0) / y - 0.5 * local * local;
                let dv = dynamics.drift_v(y, v, 0.0) * dt + dynamics.diff_v(y, v, 0.0) * sqrt_dt * (c * z1 + ortho * z2);
                ln_y += drift * dt + local * sqrt_dt * z1;
                v += dv;
                if v <= 0.0 {
                    v = 0.0;
                    absorbed = true;
                }
            } else {
                ln_y += dynamics.drift_y(y, 0.0, 0.0) / y * dt;
            }
            if !(lo..=hi).contains(&ln_y) {
                ln_y = ln_y.clamp(lo, hi);
                capped = true;
            }
        }
        PathEnd {
            y: ln_y.exp(),
            capped,
            absorbed,
        }
    });
    let flags = SampleFlags {
        coarse_time_grid: (cfg.steps as f64) / maturity < MIN_STEPS_PER_YEAR,
        capped_paths: ends.iter().filter(|e| e.capped).count(),
        absorbed_paths: ends.iter().filter(|e| e.absorbed).count(),
    };
    Ok(TerminalSample {
        values: ends.into_iter().map(|e| e.y).collect(),
        rn_weights: None,
        config: *cfg,
        s0: y0,
        rate_differential: -dynamics.rate_differential,
        maturity,
        flags,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inversion::inverse_sabr;
    use crate::pricing::SabrParams;

    #[test]
    fn foreign_martingale() {
        let p = SabrParams::new(0.0748, 0.5, 0.1435, 0.7330).unwrap();
        let (s0, f, t): (f64, f64, f64) = (1.24122, 1.2478, 0.25);
        let dr = (f / s0).ln() / t;
        let d = inverse_sabr(&p, dr).unwrap();
        let y0 = 1.0 / s0;
        let s = simulate_inverse_sabr(&d, y0, t, &McConfig::euler(100_000, 50, 8).with_antithetic(true)).unwrap();
        let m = s.mean();
        assert!((m.value - y0 * (-dr * t).exp()).abs() <= 3.0 * m.std_error, "{m:?}");
        assert_eq!(s.flags.capped_paths, 0);
    }

    #[test]
    fn frozen_vol_is_local_vol() {
        // ν = 0 and β = 1: Y is lognormal with vol α
        let p = SabrParams::new(0.2, 1.0, 0.5, 0.0).unwrap();
        let d = inverse_sabr(&p, 0.0).unwrap();
        let s = simulate_inverse_sabr(&d, 1.0, 1.0, &McConfig::euler(100_000, 10, 9)).unwrap();
        let ln = s.estimate(|_, y| y.ln());
        assert!((ln.value + 0.02).abs() <= 3.0 * ln.std_error, "{ln:?}");
        assert_eq!(s.flags.absorbed_paths, 0);
    }

    #[test]
    fn deterministic_given_seed() {
        let p = SabrParams::new(0.1, 0.5, -0.3, 0.8).unwrap();
        let d = inverse_sabr(&p, 0.01).unwrap();
        let cfg = McConfig::euler(500, 20, 10);
        assert_eq!(simulate_inverse_sabr(&d, 0.8, 0.5, &cfg).unwrap(), simulate_inverse_sabr(&d, 0.8, 0.5, &cfg).unwrap());
    }
}
