//! FX smile quotes, their conventions, and the reciprocal-axis view.
//!
//! A [`MarketSmile`] carries a single-maturity smile for a rate `S` quoted as
//! domestic units per foreign unit. Rates enter only through the
//! differential `Δr = r_d - r_f`, so that `F = S · exp(Δr · T)`.
//!
//! The reciprocal rate `1/S` is an exchange rate in its own right. FX duality
//! says that the implied volatility of `1/S` at strike `1/K` equals the
//! implied volatility of `S` at `K`, whatever the model; [`reciprocal_axis`]
//! builds that benchmark smile.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, ensure_non_negative, ensure_positive, Error, Result};

/// Maximum relative gap tolerated between a quoted forward and `S·exp(Δr·T)`.
pub const FORWARD_CONSISTENCY_TOL: f64 = 1e-10;

/// One implied-volatility quote.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolQuote {
    pub strike: f64,
    pub vol: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

impl VolQuote {
    pub fn new(strike: f64, vol: f64) -> Self {
        Self {
            strike,
            vol,
            label: None,
        }
    }

    pub fn labelled(strike: f64, vol: f64, label: impl Into<String>) -> Self {
        Self {
            strike,
            vol,
            label: Some(label.into()),
        }
    }
}

/// A validated single-maturity FX smile.
#[derive(Debug, Clone, PartialEq)]
pub struct MarketSmile {
    spot: f64,
    forward: f64,
    maturity: f64,
    rate_differential: f64,
    domestic_discount: f64,
    quotes: Vec<VolQuote>,
}

impl MarketSmile {
    /// Builds a smile, checking every invariant: positive spot, forward and
    /// maturity, forward consistent with `spot · exp(Δr · T)`, a positive
    /// discount factor, positive quotes with strictly increasing strikes.
    pub fn new(
        spot: f64,
        forward: f64,
        maturity: f64,
        rate_differential: f64,
        domestic_discount: f64,
        quotes: Vec<VolQuote>,
    ) -> Result<Self> {
        ensure_positive("spot", spot)?;
        ensure_positive("forward", forward)?;
        ensure_positive("maturity", maturity)?;
        ensure_finite("rate_differential", rate_differential)?;
        ensure_positive("domestic_discount", domestic_discount)?;
        let implied = spot * (rate_differential * maturity).exp();
        let gap = (forward - implied).abs() / forward;
        if gap > FORWARD_CONSISTENCY_TOL {
            return Err(Error::ForwardInconsistent { forward, gap });
        }
        for q in &quotes {
            ensure_positive("strike", q.strike)?;
            ensure_positive("vol", q.vol)?;
        }
        if quotes.windows(2).any(|w| w[1].strike <= w[0].strike) {
            return Err(Error::StrikesNotIncreasing);
        }
        Ok(Self {
            spot,
            forward,
            maturity,
            rate_differential,
            domestic_discount,
            quotes,
        })
    }

    /// Builds a smile from spot and forward, deriving `Δr = ln(F/S)/T`.
    pub fn from_forward(
        spot: f64,
        forward: f64,
        maturity: f64,
        domestic_discount: f64,
        quotes: Vec<VolQuote>,
    ) -> Result<Self> {
        ensure_positive("spot", spot)?;
        ensure_positive("forward", forward)?;
        ensure_positive("maturity", maturity)?;
        let rate_differential = (forward / spot).ln() / maturity;
        Self::new(spot, forward, maturity, rate_differential, domestic_discount, quotes)
    }

    pub fn spot(&self) -> f64 {
        self.spot
    }

    pub fn forward(&self) -> f64 {
        self.forward
    }

    pub fn maturity(&self) -> f64 {
        self.maturity
    }

    pub fn rate_differential(&self) -> f64 {
        self.rate_differential
    }

    pub fn domestic_discount(&self) -> f64 {
        self.domestic_discount
    }

    /// Discount factor of the foreign currency, `P_d · F / S`.
    pub fn foreign_discount(&self) -> f64 {
        self.domestic_discount * self.forward / self.spot
    }

    pub fn quotes(&self) -> &[VolQuote] {
        &self.quotes
    }

    pub fn strikes(&self) -> Vec<f64> {
        self.quotes.iter().map(|q| q.strike).collect()
    }

    pub fn vols(&self) -> Vec<f64> {
        self.quotes.iter().map(|q| q.vol).collect()
    }

    pub fn len(&self) -> usize {
        self.quotes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.quotes.is_empty()
    }

    /// Same market, different quotes (strikes must still increase).
    pub fn with_quotes(&self, quotes: Vec<VolQuote>) -> Result<Self> {
        Self::new(
            self.spot,
            self.forward,
            self.maturity,
            self.rate_differential,
            self.domestic_discount,
            quotes,
        )
    }

    /// Replaces the vols, keeping strikes and labels.
    pub fn with_vols(&self, vols: &[f64]) -> Result<Self> {
        if vols.len() != self.quotes.len() {
            return Err(Error::invalid(
                "vols",
                format!("expected {} values, got {}", self.quotes.len(), vols.len()),
            ));
        }
        let quotes = self
            .quotes
            .iter()
            .zip(vols)
            .map(|(q, &vol)| VolQuote {
                strike: q.strike,
                vol,
                label: q.label.clone(),
            })
            .collect();
        self.with_quotes(quotes)
    }

    /// Index of the quote closest to the forward in log-moneyness.
    pub fn atm_index(&self) -> Option<usize> {
        self.quotes
            .iter()
            .enumerate()
            .min_by(|(_, a), (_, b)| {
                let da = (a.strike / self.forward).ln().abs();
                let db = (b.strike / self.forward).ln().abs();
                da.total_cmp(&db)
            })
            .map(|(i, _)| i)
    }
}

/// Smile input document. `forward` and `rate_differential` are each optional
/// but at least one must be present.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SmileFile {
    pub spot: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub forward: Option<f64>,
    pub maturity_years: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate_differential: Option<f64>,
    #[serde(default = "one")]
    pub domestic_discount: f64,
    pub quotes: Vec<VolQuote>,
}

fn one() -> f64 {
    1.0
}

impl TryFrom<SmileFile> for MarketSmile {
    type Error = Error;

    fn try_from(doc: SmileFile) -> Result<Self> {
        match (doc.forward, doc.rate_differential) {
            (Some(f), Some(dr)) => MarketSmile::new(
                doc.spot,
                f,
                doc.maturity_years,
                dr,
                doc.domestic_discount,
                doc.quotes,
            ),
            (Some(f), None) => MarketSmile::from_forward(
                doc.spot,
                f,
                doc.maturity_years,
                doc.domestic_discount,
                doc.quotes,
            ),
            (None, Some(dr)) => {
                ensure_positive("spot", doc.spot)?;
                ensure_positive("maturity_years", doc.maturity_years)?;
                let f = doc.spot * (dr * doc.maturity_years).exp();
                MarketSmile::new(
                    doc.spot,
                    f,
                    doc.maturity_years,
                    dr,
                    doc.domestic_discount,
                    doc.quotes,
                )
            }
            (None, None) => Err(Error::Parse(
                "one of `forward` or `rate_differential` is required".into(),
            )),
        }
    }
}

impl From<&MarketSmile> for SmileFile {
    fn from(s: &MarketSmile) -> Self {
        SmileFile {
            spot: s.spot,
            forward: Some(s.forward),
            maturity_years: s.maturity,
            rate_differential: Some(s.rate_differential),
            domestic_discount: s.domestic_discount,
            quotes: s.quotes.clone(),
        }
    }
}

impl Serialize for MarketSmile {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        SmileFile::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for MarketSmile {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let doc = SmileFile::deserialize(d)?;
        MarketSmile::try_from(doc).map_err(serde::de::Error::custom)
    }
}

/// Parses a smile document from a JSON string.
pub fn parse_smile(text: &str) -> Result<MarketSmile> {
    let doc: SmileFile = serde_json::from_str(text)?;
    MarketSmile::try_from(doc)
}

/// Reads and validates a smile document.
pub fn load_smile(path: impl AsRef<Path>) -> Result<MarketSmile> {
    let text = std::fs::read_to_string(path)?;
    parse_smile(&text)
}

/// `F · exp(σ²_ATM · T / 2)`, the delta-neutral ATM strike.
pub fn atm_strike(forward: f64, sigma_atm: f64, maturity: f64) -> Result<f64> {
    ensure_positive("forward", forward)?;
    ensure_positive("maturity", maturity)?;
    ensure_non_negative("sigma_atm", sigma_atm)?;
    Ok(forward * (0.5 * sigma_atm * sigma_atm * maturity).exp())
}

/// The smile of `1/S` implied by FX duality: spot, forward and strikes are
/// reciprocated, `Δr` changes sign, the vol quoted at `K` moves to `1/K`, and
/// the discount factor becomes the foreign one. Applying it twice gives back
/// the original smile.
pub fn reciprocal_axis(smile: &MarketSmile) -> MarketSmile {
    let quotes = smile
        .quotes
        .iter()
        .rev()
        .map(|q| VolQuote {
            strike: 1.0 / q.strike,
            vol: q.vol,
            label: q.label.clone(),
        })
        .collect();
    MarketSmile {
        spot: 1.0 / smile.spot,
        forward: 1.0 / smile.forward,
        maturity: smile.maturity,
        rate_differential: -smile.rate_differential,
        domestic_discount: smile.foreign_discount(),
        quotes,
    }
}
