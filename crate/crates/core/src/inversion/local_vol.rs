use std::fmt;
use std::sync::Arc;

use crate::error::{ensure_finite, ensure_positive, Error, Result};

type Evaluator = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Which closure map applies when checking `σ(1/x)` against `σ(x)`.
#[derive(Clone)]
pub enum LocalVolFamily {
    /// `Σ aⱼ (ln x)^j`; inverts to alternating-sign coefficients.
    LogPolynomial(Vec<f64>),
    /// `Σ_{j=−k}^{k} aⱼ x^j` with `coeffs[0]` multiplying `x^{−k}`.
    SymmetricLaurent { k: usize, coeffs: Vec<f64> },
    /// `f(ln x)`; consistent when `|f(u)| = |f(−u)|`.
    LogSymmetric(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
    Opaque,
}

impl fmt::Debug for LocalVolFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::LogPolynomial(c) => f.debug_tuple("LogPolynomial").field(c).finish(),
            Self::SymmetricLaurent { k, coeffs } => f
                .debug_struct("SymmetricLaurent")
                .field("k", k)
                .field("coeffs", coeffs)
                .finish(),
            Self::LogSymmetric(_) => f.write_str("LogSymmetric(..)"),
            Self::Opaque => f.write_str("Opaque"),
        }
    }
}

/// Local volatility `σ(x, t)` together with the family it was built from.
#[derive(Clone)]
pub struct LocalVolFunction {
    eval: Evaluator,
    family: LocalVolFamily,
}

impl fmt::Debug for LocalVolFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LocalVolFunction").field("family", &self.family).finish()
    }
}

impl LocalVolFunction {
    /// Wraps an arbitrary function; only `|σ|` symmetry can be checked.
    pub fn opaque(f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            eval: Arc::new(f),
            family: LocalVolFamily::Opaque,
        }
    }

    /// `σ(x) = f(ln x)`.
    pub fn log_symmetric(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        let f: Arc<dyn Fn(f64) -> f64 + Send + Sync> = Arc::new(f);
        let g = f.clone();
        Self {
            eval: Arc::new(move |x, _| g(x.ln())),
            family: LocalVolFamily::LogSymmetric(f),
        }
    }

    pub fn eval(&self, x: f64, t: f64) -> f64 {
        (self.eval)(x, t)
    }

    pub fn family(&self) -> &LocalVolFamily {
        &self.family
    }
}

fn log_poly(coeffs: &[f64], u: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, a| acc * u + a)
}

fn laurent(k: usize, coeffs: &[f64], x: f64) -> f64 {
    coeffs
        .iter()
        .enumerate()
        .map(|(i, a)| a * x.powi(i as i32 - k as i32))
        .sum()
}

pub fn make_log_polynomial(coeffs: &[f64]) -> Result<LocalVolFunction> {
    for &c in coeffs {
        ensure_finite("coeffs", c)?;
    }
    let c = coeffs.to_vec();
    let eval_coeffs = c.clone();
    Ok(LocalVolFunction {
        eval: Arc::new(move |x, _| log_poly(&eval_coeffs, x.ln())),
        family: LocalVolFamily::LogPolynomial(c),
    })
}

/// `coeffs` has length `2k + 1`, lowest power first, and must read the same
/// in both directions.
pub fn make_symmetric_laurent(k: usize, coeffs: &[f64]) -> Result<LocalVolFunction> {
    if coeffs.len() != 2 * k + 1 {
        return Err(Error::invalid("coeffs", format!("expected {} coefficients, got {}", 2 * k + 1, coeffs.len())));
    }
    for &c in coeffs {
        ensure_finite("coeffs", c)?;
    }
    if (0..k).any(|j| coeffs[j] != coeffs[2 * k - j]) {
        return Err(Error::NotClosedUnderInversion);
    }
    let c = coeffs.to_vec();
    let eval_coeffs = c.clone();
    Ok(LocalVolFunction {
        eval: Arc::new(move |x, _| laurent(k, &eval_coeffs, x)),
        family: LocalVolFamily::SymmetricLaurent { k, coeffs: c },
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalVolVerdict {
    pub consistent: bool,
    pub max_violation: f64,
    /// `(x, violation)` for every grid level.
    pub violations: Vec<(f64, f64)>,
}

/// 97 levels `2^{j/16}`, `j = −48..=48`, spanning `[1/8, 8]`. Powers of two
/// land exactly on the grid and level `i` and level `96 − i` are exact
/// reciprocals.
pub fn default_grid() -> Vec<f64> {
    let half = 48;
    let mut grid = vec![0.0; 2 * half + 1];
    grid[half] = 1.0;
    for i in 1..=half {
        let x = (i as f64 / 16.0).exp2();
        grid[half + i] = x;
        grid[half - i] = 1.0 / x;
    }
    grid
}

fn reciprocal_partner(grid: &[f64], x: f64) -> Result<f64> {
    let target = 1.0 / x;
    grid.iter()
        .copied()
        .find(|&y| (y - target).abs() <= 1e-12 * target)
        .ok_or(Error::NonSymmetricGrid(x))
}

pub fn check_local_vol_consistency(sigma: &LocalVolFunction, grid: &[f64], t: f64, tol: f64) -> Result<LocalVolVerdict> {
    ensure_finite("t", t)?;
    ensure_finite("tol", tol)?;
    if grid.is_empty() {
        return Err(Error::invalid("grid", "empty"));
    }
    for &x in grid {
        ensure_positive("grid", x)?;
    }
    let mut violations = Vec::with_capacity(grid.len());
    for &x in grid {
        let y = reciprocal_partner(grid, x)?;
        let at_inverse = sigma.eval(y, t);
        let v = match &sigma.family {
            LocalVolFamily::LogPolynomial(c) => {
                let mapped: Vec<f64> = c
                    .iter()
                    .enumerate()
                    .map(|(j, a)| if j % 2 == 1 { -a } else { *a })
                    .collect();
                (at_inverse - log_poly(&mapped, x.ln())).abs()
            }
            LocalVolFamily::SymmetricLaurent { .. } => (at_inverse - sigma.eval(x, t)).abs(),
            LocalVolFamily::LogSymmetric(_) | LocalVolFamily::Opaque => (at_inverse.abs() - sigma.eval(x, t).abs()).abs(),
        };
        violations.push((x, v));
    }
    let max_violation = violations.iter().map(|p| p.1).fold(0.0, f64::max);
    Ok(LocalVolVerdict {
        consistent: max_violation <= tol,
        max_violation,
        violations,
    })
}
