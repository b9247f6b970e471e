use statrs::function::erf::erfc;

use crate::error::{ensure_non_negative, ensure_positive, Error, Result};

pub(crate) fn norm_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

pub(crate) fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

pub(crate) fn check_inputs(forward: f64, strike: f64, maturity: f64, discount: f64) -> Result<()> {
    ensure_positive("forward", forward)?;
    ensure_positive("strike", strike)?;
    ensure_positive("maturity", maturity)?;
    ensure_positive("discount", discount)?;
    Ok(())
}

/// Discounted Black call on a forward.
pub fn black_call(forward: f64, strike: f64, maturity: f64, vol: f64, discount: f64) -> Result<f64> {
    check_inputs(forward, strike, maturity, discount)?;
    ensure_non_negative("vol", vol)?;
    Ok(black_call_unchecked(forward, strike, maturity, vol, discount))
}

/// Put from put–call parity.
pub fn black_put(forward: f64, strike: f64, maturity: f64, vol: f64, discount: f64) -> Result<f64> {
    let call = black_call(forward, strike, maturity, vol, discount)?;
    Ok(call - discount * (forward - strike))
}

pub(crate) fn black_call_unchecked(forward: f64, strike: f64, maturity: f64, vol: f64, discount: f64) -> f64 {
    let sd = vol * maturity.sqrt();
    if sd == 0.0 {
        return discount * (forward - strike).max(0.0);
    }
    let d1 = (forward / strike).ln() / sd + 0.5 * sd;
    let d2 = d1 - sd;
    discount * (forward * norm_cdf(d1) - strike * norm_cdf(d2))
}

pub(crate) fn black_put_unchecked(forward: f64, strike: f64, maturity: f64, vol: f64, discount: f64) -> f64 {
    let sd = vol * maturity.sqrt();
    if sd == 0.0 {
        return discount * (strike - forward).max(0.0);
    }
    let d1 = (forward / strike).ln() / sd + 0.5 * sd;
    let d2 = d1 - sd;
    discount * (strike * norm_cdf(-d2) - forward * norm_cdf(-d1))
}

/// `∂C/∂σ`.
pub fn black_vega(forward: f64, strike: f64, maturity: f64, vol: f64, discount: f64) -> f64 {
    let sqrt_t = maturity.sqrt();
    let sd = vol * sqrt_t;
    if sd <= 0.0 {
        return 0.0;
    }
    let d1 = (forward / strike).ln() / sd + 0.5 * sd;
    discount * forward * norm_pdf(d1) * sqrt_t
}

pub(crate) fn upper_bound_error(price: f64, lower: f64, upper: f64) -> Error {
    if price >= upper {
        Error::PriceAtUpperBound
    } else {
        Error::PriceOutsideBand { price, lower, upper }
    }
}
