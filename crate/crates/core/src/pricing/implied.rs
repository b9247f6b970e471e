use super::black::{black_call_unchecked, black_put_unchecked, black_vega, check_inputs, upper_bound_error};
use crate::error::{Error, Result};

/// Search bracket for implied volatilities.
pub const VOL_LOWER: f64 = 1e-6;
pub const VOL_UPPER: f64 = 5.0;

/// Residual accepted on exit, as a fraction of `discount · forward`.
pub const PRICE_TOLERANCE: f64 = 1e-12;

const MAX_ITERATIONS: usize = 200;

/// Black implied volatility of a discounted call price.
///
/// In-the-money calls are converted to out-of-the-money puts through parity
/// before solving, which keeps the target away from the intrinsic floor. The
/// root is found by Newton steps kept inside a shrinking bisection bracket on
/// `[VOL_LOWER, VOL_UPPER]`.
pub fn implied_vol(price: f64, forward: f64, strike: f64, maturity: f64, discount: f64) -> Result<f64> {
    check_inputs(forward, strike, maturity, discount)?;
    let lower = discount * (forward - strike).max(0.0);
    let upper = discount * forward;
    if !price.is_finite() || price >= upper {
        return Err(upper_bound_error(price, lower, upper));
    }
    if price <= lower {
        return Err(Error::PriceOutsideBand { price, lower, upper });
    }

    let use_put = strike < forward;
    let target = if use_put {
        price - discount * (forward - strike)
    } else {
        price
    };
    let value = |v: f64| {
        if use_put {
            black_put_unchecked(forward, strike, maturity, v, discount)
        } else {
            black_call_unchecked(forward, strike, maturity, v, discount)
        }
    };
    let tol = PRICE_TOLERANCE * discount * forward;

    let (mut lo, mut hi) = (VOL_LOWER, VOL_UPPER);
    let f_lo = value(lo) - target;
    let f_hi = value(hi) - target;
    if f_lo > 0.0 {
        return if f_lo <= tol {
            Ok(lo)
        } else {
            Err(Error::PriceOutsideBand { price, lower, upper })
        };
    }
    if f_hi < 0.0 {
        return if -f_hi <= tol {
            Ok(hi)
        } else {
            Err(Error::PriceOutsideBand { price, lower, upper })
        };
    }

    // Start from the Brenner–Subrahmanyam guess scaled to the OTM premium.
    let mut vol = ((2.0 * std::f64::consts::PI / maturity).sqrt() * target / (discount * forward))
        .clamp(0.05, 1.0)
        .clamp(lo, hi);
    let mut residual = f64::INFINITY;
    for _ in 0..MAX_ITERATIONS {
        let f = value(vol) - target;
        residual = f.abs();
        if f == 0.0 {
            return Ok(vol);
        }
        if f > 0.0 {
            hi = vol;
        } else {
            lo = vol;
        }
        let vega = black_vega(forward, strike, maturity, vol, discount);
        let newton = vol - f / vega;
        let next = if vega > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        let step = (next - vol).abs();
        vol = next;
        if step <= 4.0 * f64::EPSILON * vol || hi - lo <= 4.0 * f64::EPSILON * hi {
            residual = (value(vol) - target).abs();
            break;
        }
    }
    if residual <= tol {
        Ok(vol)
    } else {
        Err(Error::ImpliedVolNoConvergence {
            iterations: MAX_ITERATIONS,
            residual,
        })
    }
}

/// Like [`implied_vol`], but prices outside the solvable range map to the
/// nearest bracket end instead of failing. Calibration objectives use this
/// to stay continuous when trial parameters are extreme.
pub(crate) fn implied_vol_clamped(price: f64, forward: f64, strike: f64, maturity: f64, discount: f64) -> f64 {
    match implied_vol(price, forward, strike, maturity, discount) {
        Ok(v) => v,
        Err(Error::PriceAtUpperBound) => VOL_UPPER,
        Err(Error::PriceOutsideBand { price, upper, .. }) => {
            if price >= upper {
                VOL_UPPER
            } else if price.is_finite() {
                let mid = black_call_unchecked(forward, strike, maturity, 0.5 * (VOL_LOWER + VOL_UPPER), discount);
                if price > mid {
                    VOL_UPPER
                } else {
                    VOL_LOWER
                }
            } else {
                f64::NAN
            }
        }
        Err(_) => f64::NAN,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pricing::black_call;
    use proptest::prelude::*;

    #[test]
    fn round_trip_desk_vol() {
        let (f, k, t, df) = (1.2478, 1.24869, 0.25, 0.99);
        let p = black_call(f, k, t, 0.0755, df).unwrap();
        let v = implied_vol(p, f, k, t, df).unwrap();
        assert!((v - 0.0755).abs() < 1e-10);
    }

    #[test]
    fn upper_bound_rejected() {
        let err = implied_vol(0.9 * 1.2, 1.2, 1.1, 1.0, 0.9).unwrap_err();
        assert!(matches!(err, Error::PriceAtUpperBound));
        assert_eq!(err.to_string(), "price at upper bound");
    }

    #[test]
    fn below_intrinsic_rejected() {
        assert!(matches!(
            implied_vol(0.05, 1.2, 1.1, 1.0, 1.0).unwrap_err(),
            Error::PriceOutsideBand { .. }
        ));
    }

    #[test]
    fn residual_within_tolerance() {
        let (f, k, t, df) = (1.0, 1.3, 0.5, 0.97);
        let p = black_call(f, k, t, 0.35, df).unwrap();
        let v = implied_vol(p, f, k, t, df).unwrap();
        let back = black_call(f, k, t, v, df).unwrap();
        assert!((back - p).abs() <= PRICE_TOLERANCE * df * f);
    }

    #[test]
    fn clamped_variant_saturates() {
        assert_eq!(implied_vol_clamped(1.0, 1.0, 1.0, 1.0, 1.0), VOL_UPPER);
        assert_eq!(implied_vol_clamped(0.0, 1.0, 1.0, 1.0, 1.0), VOL_LOWER);
    }

    proptest! {
        #[test]
        fn inverts_black(vol in 0.01f64..1.0, m in -1.5f64..1.5, t in 0.1f64..2.0, df in 0.8f64..1.0) {
            // strikes within ±1.5 standard deviations of the forward
            let f = 1.25;
            let k = f * (m * vol * t.sqrt()).exp();
            let p = black_call(f, k, t, vol, df).unwrap();
            let v = implied_vol(p, f, k, t, df).unwrap();
            prop_assert!((v - vol).abs() <= 1e-10, "vol {} got {}", vol, v);
        }
    }
}
