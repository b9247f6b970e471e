//! FX rate dynamics under inversion of the quote.
//!
//! A model for `S` induces, through the change from domestic to foreign
//! numeraire, a model for `1/S`. This crate computes those induced models for
//! Heston, SABR, local volatility, constant jumps and compound-Poisson jumps,
//! and checks them against the smile that FX duality implies.
//!
//! ```
//! use fx_inversion::inversion::{invert_constant_jump, ConstantJumpSpec, Measure};
//!
//! let d = ConstantJumpSpec::new(0.1, 2.0, Measure::Domestic)?;
//! let f = invert_constant_jump(&d)?;
//! assert!((f.lambda * f.gamma + d.lambda * d.gamma).abs() < 1e-15);
//! # Ok::<(), fx_inversion::Error>(())
//! ```
//!
//! The guide in `book/` walks through each piece; its snippets run as
//! doctests of this crate.

pub mod calibration;
pub mod cli;
pub mod error;
pub mod format;
pub mod inversion;
pub mod jump_densities;
pub mod market_data;
pub mod montecarlo;
pub mod pricing;
pub mod quad;
pub mod report;

pub use error::{Error, Result};

// The guide's chapters, compiled so their snippets run under `cargo test`.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/smiles.md")]
    mod smiles {}
    #[doc = include_str!("../../../book/src/heston.md")]
    mod heston {}
    #[doc = include_str!("../../../book/src/sabr.md")]
    mod sabr {}
    #[doc = include_str!("../../../book/src/local_vol.md")]
    mod local_vol {}
    #[doc = include_str!("../../../book/src/jumps.md")]
    mod jumps {}
    #[doc = include_str!("../../../book/src/monte_carlo.md")]
    mod monte_carlo {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
