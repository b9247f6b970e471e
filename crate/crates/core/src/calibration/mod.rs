//! Least-squares calibration of Heston and SABR to a single smile.
//!
//! Both fits minimise the plain sum of squared implied-vol differences over
//! the quotes. Heston uses several starting points evaluated in parallel;
//! the best result is picked deterministically (lowest objective, then
//! lowest start index).

mod lm;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use lm::{least_squares, LmOptions, LmOutcome};

use crate::error::{Error, Result};
use crate::market_data::MarketSmile;
use crate::pricing::{
    alpha_from_atm_vol, hagan_vol_unchecked, heston_call, implied_vol_clamped, HestonParams, SabrParams,
};

/// Box for Heston fits, in the order `[v0, vbar, kappa, sigma, rho]`.
pub const HESTON_LOWER: [f64; 5] = [1e-6, 1e-6, 1e-4, 1e-4, -0.999];
pub const HESTON_UPPER: [f64; 5] = [4.0, 4.0, 20.0, 5.0, 0.999];

/// Box for SABR fits, in the order `[alpha, rho, nu]`.
pub const SABR_LOWER: [f64; 3] = [1e-8, -0.999, 0.0];
pub const SABR_UPPER: [f64; 3] = [10.0, 0.999, 10.0];

pub const DEFAULT_HESTON_STARTS: usize = 8;

const MIN_QUOTES: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult<P> {
    pub params: P,
    /// Root-mean-square vol error, in absolute vol units.
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Model minus market vol, one entry per quote.
    pub per_quote_errors: Vec<f64>,
}

impl<P> CalibrationResult<P> {
    /// `Σ (model − market)²`.
    pub fn objective(&self) -> f64 {
        self.per_quote_errors.iter().map(|e| e * e).sum()
    }
}

fn heston_from(x: &[f64]) -> HestonParams {
    HestonParams {
        v0: x[0],
        vbar: x[1],
        kappa: x[2],
        sigma: x[3],
        rho: x[4],
    }
}

fn heston_to(p: &HestonParams) -> [f64; 5] {
    [p.v0, p.vbar, p.kappa, p.sigma, p.rho]
}

/// Model-minus-market vols for Heston parameters on a smile.
pub fn heston_vol_errors(smile: &MarketSmile, p: &HestonParams) -> Vec<f64> {
    let (f, t, df) = (smile.forward(), smile.maturity(), smile.domestic_discount());
    smile
        .quotes()
        .iter()
        .map(|q| match heston_call(p, f, q.strike, t, df) {
            Ok(price) => implied_vol_clamped(price, f, q.strike, t, df) - q.vol,
            Err(_) => f64::NAN,
        })
        .collect()
}

/// Model-minus-market vols for SABR parameters on a smile.
pub fn sabr_vol_errors(smile: &MarketSmile, p: &SabrParams) -> Vec<f64> {
    let (f, t) = (smile.forward(), smile.maturity());
    smile
        .quotes()
        .iter()
        .map(|q| hagan_vol_unchecked(p, f, q.strike, t) - q.vol)
        .collect()
}

fn rms(errors: &[f64]) -> f64 {
    if errors.is_empty() {
        return 0.0;
    }
    (errors.iter().map(|e| e * e).sum::<f64>() / errors.len() as f64).sqrt()
}

fn check_quotes(smile: &MarketSmile) -> Result<()> {
    if smile.len() < MIN_QUOTES {
        return Err(Error::InsufficientQuotes {
            needed: MIN_QUOTES,
            got: smile.len(),
        });
    }
    Ok(())
}

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let mut inv = 1.0 / base as f64;
    let mut out = 0.0;
    while i > 0 {
        out += (i % base) as f64 * inv;
        i /= base;
        inv /= base as f64;
    }
    out
}

/// Halton-sequence starting points spread around the smile's ATM variance.
///
/// Variances are drawn log-uniformly within a factor 4 of the ATM variance,
/// mean reversion in `[0.2, 5]`, vol-of-vol in `[0.05, 1]` (both
/// log-uniform), and correlation in `[-0.8, 0.8]`.
pub fn default_heston_starts(smile: &MarketSmile, count: usize) -> Vec<HestonParams> {
    let atm_vol = smile.atm_index().map(|i| smile.quotes()[i].vol).unwrap_or(0.1);
    let atm_var = atm_vol * atm_vol;
    let log_between = |u: f64, lo: f64, hi: f64| (lo.ln() + u * (hi.ln() - lo.ln())).exp();
    const BASES: [u64; 5] = [2, 3, 5, 7, 11];
    (1..=count as u64)
        .map(|i| {
            let u: Vec<f64> = BASES.iter().map(|&b| radical_inverse(i, b)).collect();
            let x = [
                log_between(u[0], atm_var / 4.0, atm_var * 4.0),
                log_between(u[1], atm_var / 4.0, atm_var * 4.0),
                log_between(u[2], 0.2, 5.0),
                log_between(u[3], 0.05, 1.0),
                -0.8 + 1.6 * u[4],
            ];
            let clamped: Vec<f64> = (0..5).map(|j| x[j].clamp(HESTON_LOWER[j], HESTON_UPPER[j])).collect();
            heston_from(&clamped)
        })
        .collect()
}

/// Fits Heston to `smile` from every start and keeps the best local minimum.
/// Non-convergence is reported through the `converged` flag.
pub fn calibrate_heston(smile: &MarketSmile, starts: &[HestonParams]) -> Result<CalibrationResult<HestonParams>> {
    check_quotes(smile)?;
    if starts.is_empty() {
        return Err(Error::invalid("starts", "at least one starting point is required"));
    }
    for s in starts {
        s.validate()?;
    }
    let n = smile.len() as f64;
    let opts = LmOptions {
        cost_tol: 0.5 * n * 1e-22,
        ..LmOptions::default()
    };
    let outcomes: Vec<Option<LmOutcome>> = starts
        .par_iter()
        .map(|s| {
            least_squares(
                |x| heston_vol_errors(smile, &heston_from(x)),
                &heston_to(s),
                &HESTON_LOWER,
                &HESTON_UPPER,
                opts,
            )
        })
        .collect();
    let best = pick_best(outcomes).ok_or(Error::CalibrationFailed)?;
    Ok(CalibrationResult {
        params: heston_from(&best.x),
        residual: rms(&best.residuals),
        iterations: best.iterations,
        converged: best.converged,
        per_quote_errors: best.residuals,
    })
}

fn pick_best(outcomes: Vec<Option<LmOutcome>>) -> Option<LmOutcome> {
    outcomes
        .into_iter()
        .flatten()
        .filter(|o| o.cost.is_finite())
        .fold(None, |best: Option<LmOutcome>, o| match best {
            Some(b) if b.cost <= o.cost => Some(b),
            _ => Some(o),
        })
}

/// Fits `(alpha, rho, nu)` with `beta` fixed. Each start seeds `alpha` by
/// solving the ATM expansion against the quote nearest the forward.
pub fn calibrate_sabr(smile: &MarketSmile, beta: f64) -> Result<CalibrationResult<SabrParams>> {
    if !(0.0..=1.0).contains(&beta) {
        return Err(Error::BetaOutOfRange(beta));
    }
    check_quotes(smile)?;
    let atm = &smile.quotes()[smile.atm_index().expect("non-empty smile")];
    let (f, t) = (smile.forward(), smile.maturity());
    let atm_vol = atm.vol;

    let seeds = [(0.0, 0.3), (-0.3, 0.8), (0.3, 0.8), (0.0, 1.5)];
    let opts = LmOptions {
        cost_tol: 1e-30,
        ..LmOptions::default()
    };
    let outcomes: Vec<Option<LmOutcome>> = seeds
        .par_iter()
        .map(|&(rho, nu)| {
            let alpha = alpha_from_atm_vol(atm_vol, f, t, beta, rho, nu).ok()?;
            let x0 = [alpha, rho, nu];
            least_squares(
                |x| {
                    let p = SabrParams {
                        alpha: x[0],
                        beta,
                        rho: x[1],
                        nu: x[2],
                        alpha_shift: 0.0,
                    };
                    sabr_vol_errors(smile, &p)
                },
                &x0,
                &SABR_LOWER,
                &SABR_UPPER,
                opts,
            )
        })
        .collect();
    let best = pick_best(outcomes).ok_or(Error::CalibrationFailed)?;
    Ok(CalibrationResult {
        params: SabrParams {
            alpha: best.x[0],
            beta,
            rho: best.x[1],
            nu: best.x[2],
            alpha_shift: 0.0,
        },
        residual: rms(&best.residuals),
        iterations: best.iterations,
        converged: best.converged,
        per_quote_errors: best.residuals,
    })
}
