//! Vanilla FX option pricing under Black, Heston and SABR, and the
//! price-to-implied-volatility inversion shared by all smile computations.

mod black;
mod heston;
mod implied;
mod sabr;

pub use black::{black_call, black_put, black_vega};
pub use heston::{heston_call, heston_cf, HestonParams};
pub use implied::{implied_vol, PRICE_TOLERANCE, VOL_LOWER, VOL_UPPER};
pub(crate) use implied::implied_vol_clamped;
pub use sabr::{alpha_from_atm_vol, hagan_vol, SabrParams, ATM_LOG_MONEYNESS};
pub(crate) use sabr::hagan_vol_unchecked;
