//! Consistency experiments and the report documents the command line emits.

use serde::{Deserialize, Serialize};

use crate::calibration::calibrate_sabr;
use crate::error::{Error, Result};
use crate::inversion::{inverse_sabr, invert_heston};
use crate::market_data::{reciprocal_axis, MarketSmile};
use crate::montecarlo::{mc_smile, simulate_inverse_sabr, McConfig, McSmilePoint};
use crate::pricing::{hagan_vol, heston_call, implied_vol, HestonParams, SabrParams};

mod render;

pub use render::{round_json, to_csv_rows, write_report, OutputFormat};

/// Strike grids closer than this (relative) are treated as equal.
pub const GRID_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmileDistance {
    pub sup_norm: f64,
    pub l2_norm: f64,
}

/// Largest and root-sum-square vol difference on a shared strike grid.
pub fn smile_distance(a: &MarketSmile, b: &MarketSmile) -> Result<SmileDistance> {
    if a.len() != b.len() {
        return Err(Error::GridMismatch);
    }
    let mut sup: f64 = 0.0;
    let mut sq = 0.0;
    for (p, q) in a.quotes().iter().zip(b.quotes()) {
        if (p.strike - q.strike).abs() > GRID_TOL * p.strike.abs().max(q.strike.abs()) {
            return Err(Error::GridMismatch);
        }
        let d = (p.vol - q.vol).abs();
        sup = sup.max(d);
        sq += d * d;
    }
    Ok(SmileDistance {
        sup_norm: sup,
        l2_norm: sq.sqrt(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelTag {
    Heston,
    Sabr,
}

/// One strike of a consistency report, on both axes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub strike: f64,
    pub inverse_strike: f64,
    pub original_vol: f64,
    /// Vol of `1/S` at `1/K` implied by duality, equal to `original_vol`.
    pub duality_vol: f64,
    /// Vol of `1/S` at `1/K` from the mapped model.
    pub mapped_vol: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mc_vol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mc_std_error: Option<f64>,
    /// `(mc_vol − duality_vol) / mc_std_error`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mc_z_score: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub name: String,
    pub value: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefitSummary {
    pub params: SabrParams,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub model: ModelTag,
    pub forward: f64,
    pub maturity: f64,
    /// Rows ordered by original strike.
    pub rows: Vec<ReportRow>,
    /// Duality smile against mapped-model smile.
    pub distance: SmileDistance,
    pub conditions: Vec<Condition>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inverse_heston: Option<HestonParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub naive_sabr: Option<SabrParams>,
    /// Best SABR fit (same `beta`) to the duality smile.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub refit: Option<RefitSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mc_config: Option<McConfig>,
    /// Largest `|z|` of the Monte Carlo leg.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mc_max_abs_z: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mc_max_vol_std_error: Option<f64>,
}

impl ConsistencyReport {
    pub fn original_smile(&self) -> Vec<(f64, f64)> {
        self.rows.iter().map(|r| (r.strike, r.original_vol)).collect()
    }

    /// `(1/K, vol)` pairs in ascending reciprocal strike.
    pub fn duality_smile(&self) -> Vec<(f64, f64)> {
        self.rows.iter().rev().map(|r| (r.inverse_strike, r.duality_vol)).collect()
    }

    pub fn mapped_smile(&self) -> Vec<(f64, f64)> {
        self.rows.iter().rev().map(|r| (r.inverse_strike, r.mapped_vol)).collect()
    }
}

fn rows_from(original: &MarketSmile, duality: &MarketSmile, mapped: &MarketSmile) -> Vec<ReportRow> {
    let n = original.len();
    (0..n)
        .map(|i| {
            let j = n - 1 - i;
            ReportRow {
                strike: original.quotes()[i].strike,
                inverse_strike: duality.quotes()[j].strike,
                original_vol: original.quotes()[i].vol,
                duality_vol: duality.quotes()[j].vol,
                mapped_vol: mapped.quotes()[j].vol,
                mc_vol: None,
                mc_std_error: None,
                mc_z_score: None,
            }
        })
        .collect()
}

/// Prices the layout's strikes under `params`, maps the parameters to the
/// inverse rate and compares the mapped model's smile at `1/K` with the
/// duality smile. The layout's vols are ignored.
pub fn heston_consistency_experiment(params: &HestonParams, layout: &MarketSmile) -> Result<ConsistencyReport> {
    let reduced = params.kappa - params.rho * params.sigma;
    let inverse = invert_heston(params)?;
    let (f, t, df) = (layout.forward(), layout.maturity(), layout.domestic_discount());
    let vols = layout
        .strikes()
        .iter()
        .map(|&k| implied_vol(heston_call(params, f, k, t, df)?, f, k, t, df))
        .collect::<Result<Vec<f64>>>()?;
    let original = layout.with_vols(&vols)?;
    let duality = reciprocal_axis(&original);
    let (fy, dfy) = (duality.forward(), duality.domestic_discount());
    let mapped_vols = duality
        .strikes()
        .iter()
        .map(|&k| implied_vol(heston_call(&inverse, fy, k, t, dfy)?, fy, k, t, dfy))
        .collect::<Result<Vec<f64>>>()?;
    let mapped = duality.with_vols(&mapped_vols)?;
    Ok(ConsistencyReport {
        model: ModelTag::Heston,
        forward: f,
        maturity: t,
        rows: rows_from(&original, &duality, &mapped),
        distance: smile_distance(&duality, &mapped)?,
        conditions: vec![Condition {
            name: "kappa - rho * sigma > 0".into(),
            value: reduced,
            holds: reduced > 0.0,
        }],
        inverse_heston: Some(inverse),
        naive_sabr: None,
        refit: None,
        mc_config: None,
        mc_max_abs_z: None,
        mc_max_vol_std_error: None,
    })
}

/// SABR on the inverse rate with the parameters carried over directly:
/// `ρ ↦ −ρ`, `ν` and `β` kept, and `α` rescaled so that the leading-order
/// ATM vol `α F^{β−1}` is unchanged at the reciprocal forward.
pub fn naive_inverse_sabr(p: &SabrParams, forward: f64) -> Result<SabrParams> {
    p.validate()?;
    crate::error::ensure_positive("forward", forward)?;
    SabrParams::new(p.effective_alpha() * forward.powf(2.0 * (p.beta - 1.0)), p.beta, -p.rho, p.nu)
}

/// Compares three smiles of `1/S` at `1/K`: duality (Hagan vols moved to the
/// reciprocal axis), the Monte Carlo smile of the exact inverse dynamics,
/// and Hagan under the naive parameter map. Also refits SABR to the duality
/// smile. The simulation runs in the forward measure (`Δr = 0`, `Y₀ = 1/F`).
pub fn sabr_inconsistency_experiment(params: &SabrParams, layout: &MarketSmile, cfg: &McConfig) -> Result<ConsistencyReport> {
    params.validate()?;
    let (f, t) = (layout.forward(), layout.maturity());
    let vols = layout
        .strikes()
        .iter()
        .map(|&k| hagan_vol(params, f, k, t))
        .collect::<Result<Vec<f64>>>()?;
    let original = layout.with_vols(&vols)?;
    let duality = reciprocal_axis(&original);
    let fy = duality.forward();
    let naive = naive_inverse_sabr(params, f)?;
    let mapped_vols = duality
        .strikes()
        .iter()
        .map(|&k| hagan_vol(&naive, fy, k, t))
        .collect::<Result<Vec<f64>>>()?;
    let mapped = duality.with_vols(&mapped_vols)?;

    let dynamics = inverse_sabr(params, 0.0)?;
    let sample = simulate_inverse_sabr(&dynamics, fy, t, cfg)?;
    let mc = mc_smile(&sample, fy, &duality.strikes(), t, 1.0)?;

    let mut rows = rows_from(&original, &duality, &mapped);
    let n = rows.len();
    let mut max_z: f64 = 0.0;
    let mut max_se: f64 = 0.0;
    for (j, point) in mc.points.iter().enumerate() {
        let row = &mut rows[n - 1 - j];
        attach_mc(row, point);
        if let Some(z) = row.mc_z_score {
            max_z = max_z.max(z.abs());
        } else {
            max_z = f64::INFINITY;
        }
        max_se = max_se.max(point.vol_std_error);
    }
    let refit = calibrate_sabr(&duality, params.beta).ok().map(|r| RefitSummary {
        params: r.params,
        residual: r.residual,
    });
    let drift_scale = params.nu * params.rho;
    Ok(ConsistencyReport {
        model: ModelTag::Sabr,
        forward: f,
        maturity: t,
        rows,
        distance: smile_distance(&duality, &mapped)?,
        conditions: vec![
            Condition {
                name: "nu * rho (inverse vol drift scale)".into(),
                value: drift_scale,
                holds: drift_scale == 0.0,
            },
            Condition {
                name: "beta == 1".into(),
                value: params.beta,
                holds: params.beta == 1.0,
            },
            Condition {
                name: "capped or absorbed paths".into(),
                value: (mc.flags.capped_paths + mc.flags.absorbed_paths) as f64,
                holds: mc.flags.capped_paths == 0,
            },
        ],
        inverse_heston: None,
        naive_sabr: Some(naive),
        refit,
        mc_config: Some(*cfg),
        mc_max_abs_z: Some(max_z),
        mc_max_vol_std_error: Some(max_se),
    })
}

fn attach_mc(row: &mut ReportRow, point: &McSmilePoint) {
    row.mc_vol = point.vol;
    row.mc_std_error = point.vol.map(|_| point.vol_std_error);
    row.mc_z_score = point.vol.map(|v| (v - row.duality_vol) / point.vol_std_error);
}
