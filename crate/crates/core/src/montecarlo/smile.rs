use serde::{Deserialize, Serialize};

use crate::error::{ensure_positive, Error, Result};
use crate::market_data::{MarketSmile, VolQuote};
use crate::pricing::{black_vega, implied_vol};

use super::{Estimate, SampleFlags, TerminalSample};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McSmilePoint {
    pub strike: f64,
    /// Discounted out-of-the-money option price.
    pub price: f64,
    pub price_std_error: f64,
    /// `None` when the price falls outside the no-arbitrage band.
    pub vol: Option<f64>,
    /// Price standard error divided by Black vega.
    pub vol_std_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct McSmile {
    /// Quotes with a valid implied vol.
    pub smile: MarketSmile,
    pub points: Vec<McSmilePoint>,
    pub flags: SampleFlags,
}

impl McSmile {
    pub fn omitted(&self) -> usize {
        self.points.iter().filter(|p| p.vol.is_none()).count()
    }
}

/// Implied vols of the sample's out-of-the-money options: puts below the
/// forward, calls at or above it.
pub fn mc_smile(sample: &TerminalSample, forward: f64, strikes: &[f64], maturity: f64, discount: f64) -> Result<McSmile> {
    ensure_positive("forward", forward)?;
    ensure_positive("maturity", maturity)?;
    ensure_positive("discount", discount)?;
    for &k in strikes {
        ensure_positive("strike", k)?;
    }
    if strikes.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::StrikesNotIncreasing);
    }
    let mut points = Vec::with_capacity(strikes.len());
    let mut quotes = Vec::new();
    for &k in strikes {
        let put = k < forward;
        let e = sample.estimate(|_, s| if put { (k - s).max(0.0) } else { (s - k).max(0.0) });
        let price = discount * e.value;
        let price_se = discount * e.std_error;
        // implied_vol takes call prices; parity moves puts over exactly
        let call = if put { price + discount * (forward - k) } else { price };
        let vol = implied_vol(call, forward, k, maturity, discount).ok();
        let vol_se = match vol {
            Some(v) => price_se / black_vega(forward, k, maturity, v, discount),
            None => f64::NAN,
        };
        if let Some(v) = vol {
            quotes.push(VolQuote::new(k, v));
        }
        points.push(McSmilePoint {
            strike: k,
            price,
            price_std_error: price_se,
            vol,
            vol_std_error: vol_se,
        });
    }
    let smile = MarketSmile::from_forward(sample.s0, forward, maturity, discount, quotes)?;
    Ok(McSmile {
        smile,
        points,
        flags: sample.flags,
    })
}

/// Foreign-measure price of `payoff(1/S_T)` from domestic paths:
/// the mean of `L_T · payoff(1/S_T)`.
pub fn rn_weighted_price(sample: &TerminalSample, payoff: impl Fn(f64) -> f64) -> Result<Estimate> {
    let w = sample.rn_weights.as_ref().ok_or(Error::MissingWeights)?;
    Ok(sample.estimate(|i, s| w[i] * payoff(1.0 / s)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::montecarlo::{simulate_jump_gbm_exact, JumpModel, McConfig};

    #[test]
    fn lognormal_sample_gives_flat_smile() {
        let (f, t) = (1.0, 0.5);
        let s = simulate_jump_gbm_exact(1.0, 0.0, 0.2, &JumpModel::None, t, &McConfig::exact(200_000, 12).with_antithetic(true)).unwrap();
        let strikes = [0.85, 0.95, 1.0, 1.05, 1.15];
        let m = mc_smile(&s, f, &strikes, t, 1.0).unwrap();
        assert_eq!(m.omitted(), 0);
        for p in &m.points {
            assert!((p.vol.unwrap() - 0.2).abs() <= 3.0 * p.vol_std_error, "{p:?}");
        }
        assert_eq!(m.smile.len(), 5);
    }

    #[test]
    fn empty_strikes() {
        let s = simulate_jump_gbm_exact(1.0, 0.0, 0.2, &JumpModel::None, 1.0, &McConfig::exact(10, 0)).unwrap();
        let m = mc_smile(&s, 1.0, &[], 1.0, 1.0).unwrap();
        assert!(m.points.is_empty() && m.smile.is_empty());
    }

    #[test]
    fn far_strike_omitted() {
        // no path reaches the strike, so the price is zero and has no vol
        let s = simulate_jump_gbm_exact(1.0, 0.0, 0.01, &JumpModel::None, 1.0, &McConfig::exact(100, 0)).unwrap();
        let m = mc_smile(&s, 1.0, &[3.0], 1.0, 1.0).unwrap();
        assert_eq!(m.omitted(), 1);
        assert!(m.smile.is_empty());
    }

    #[test]
    fn unit_payoff_has_unit_price() {
        let s = simulate_jump_gbm_exact(1.1, 0.02, 0.15, &JumpModel::None, 1.0, &McConfig::exact(100_000, 13)).unwrap();
        let e = rn_weighted_price(&s, |_| 1.0).unwrap();
        assert!((e.value - 1.0).abs() <= 3.0 * e.std_error);
    }

    #[test]
    fn missing_weights() {
        let mut s = simulate_jump_gbm_exact(1.0, 0.0, 0.2, &JumpModel::None, 1.0, &McConfig::exact(10, 0)).unwrap();
        s.rn_weights = None;
        assert!(matches!(rn_weighted_price(&s, |_| 1.0), Err(Error::MissingWeights)));
    }
}
