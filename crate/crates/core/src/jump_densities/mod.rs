//! Compound-Poisson jump laws and their image under the change to the
//! foreign measure.
//!
//! A domestic law `(λ^d, f^d)` for relative jumps `J^d ∈ (−1, ∞)` induces
//!
//! * the foreign intensity `λ^f = (1 + β^d) λ^d` with `β^d = E^d[J^d]`,
//! * the foreign density of the same jumps `f^f(x) = f^d(x)(1+x) λ^d/λ^f`,
//! * and the foreign density of the jumps of `1/S`, `J^f = −J^d/(1+J^d)`.

use std::fmt;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, ensure_positive, Error, Result};
use crate::inversion::Measure;
use crate::quad::{integrate, integrate_jump_domain_split, QuadOptions};

mod power_law;
mod tabulated;

pub use power_law::{normalize, PowerLawCutoffDensity, PowerLawSampler};
pub use tabulated::TabulatedDensity;

/// A probability density on the jump domain `(−1, ∞)`.
pub trait JumpDensity: Send + Sync {
    /// Density at `x`; zero outside the support.
    fn pdf(&self, x: f64) -> f64;

    /// Interior points where the density changes shape quickly, used to
    /// split quadrature ranges.
    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }
}

impl<T: JumpDensity + ?Sized> JumpDensity for Arc<T> {
    fn pdf(&self, x: f64) -> f64 {
        (**self).pdf(x)
    }

    fn breakpoints(&self) -> Vec<f64> {
        (**self).breakpoints()
    }
}

fn density_opts() -> QuadOptions {
    QuadOptions {
        abs_tol: 1e-12,
        rel_tol: 0.0,
        max_intervals: 4000,
    }
}

/// `∫ g(x) pdf(x) dx` over `(−1, ∞)`.
pub fn expectation(d: &dyn JumpDensity, g: impl Fn(f64) -> f64) -> Result<f64> {
    let r = integrate_jump_domain_split(
        |x| {
            let p = d.pdf(x);
            if p == 0.0 {
                0.0
            } else {
                g(x) * p
            }
        },
        &d.breakpoints(),
        density_opts(),
    )?;
    Ok(r.value)
}

pub fn total_mass(d: &dyn JumpDensity) -> Result<f64> {
    expectation(d, |_| 1.0)
}

/// `β = E[J]`.
pub fn mean_jump(d: &dyn JumpDensity) -> Result<f64> {
    expectation(d, |x| x)
}

pub fn foreign_intensity(lambda_d: f64, beta_d: f64) -> Result<f64> {
    ensure_positive("lambda_d", lambda_d)?;
    ensure_finite("beta_d", beta_d)?;
    if beta_d <= -1.0 {
        return Err(Error::invalid("beta_d", format!("must exceed -1, got {beta_d}")));
    }
    Ok((1.0 + beta_d) * lambda_d)
}

/// Inverse-rate jump `−x/(1+x)`.
pub fn jf_of_jd(x: f64) -> Result<f64> {
    ensure_finite("x", x)?;
    if x <= -1.0 {
        return Err(Error::invalid("x", format!("jump size must exceed -1, got {x}")));
    }
    Ok(-x / (1.0 + x))
}

fn map_breakpoints(points: Vec<f64>) -> Vec<f64> {
    points.into_iter().filter(|x| *x > -1.0).map(|x| -x / (1.0 + x)).collect()
}

fn check_intensities(d: &dyn JumpDensity, lambda_d: f64, lambda_f: f64) -> Result<()> {
    ensure_positive("lambda_d", lambda_d)?;
    ensure_positive("lambda_f", lambda_f)?;
    let expected = foreign_intensity(lambda_d, mean_jump(d)?)?;
    if (lambda_f - expected).abs() > 1e-10 * expected {
        return Err(Error::IntensityMismatch {
            expected,
            got: lambda_f,
        });
    }
    Ok(())
}

/// Foreign-measure density of the domestic jumps, `f^d(x)(1+x) λ^d/λ^f`.
#[derive(Clone)]
pub struct ReweightedDensity {
    base: Arc<dyn JumpDensity>,
    ratio: f64,
}

impl JumpDensity for ReweightedDensity {
    fn pdf(&self, x: f64) -> f64 {
        if !(x > -1.0) {
            return 0.0;
        }
        self.base.pdf(x) * (1.0 + x) * self.ratio
    }

    fn breakpoints(&self) -> Vec<f64> {
        self.base.breakpoints()
    }
}

/// Density of `Y = −X/(1+X)`: `f_X(−y/(1+y))/(1+y)²`.
#[derive(Clone)]
pub struct LemmaTransformed {
    base: Arc<dyn JumpDensity>,
}

impl JumpDensity for LemmaTransformed {
    fn pdf(&self, y: f64) -> f64 {
        if !(y > -1.0) || y.is_infinite() {
            return 0.0;
        }
        let one_plus = 1.0 + y;
        self.base.pdf(-y / one_plus) / (one_plus * one_plus)
    }

    fn breakpoints(&self) -> Vec<f64> {
        map_breakpoints(self.base.breakpoints())
    }
}

/// Foreign-measure density of the jumps of `1/S`,
/// `f^d(−y/(1+y)) (1+y)^{−3} λ^d/λ^f`.
#[derive(Clone)]
pub struct ForeignInverseDensity {
    base: Arc<dyn JumpDensity>,
    ratio: f64,
}

impl JumpDensity for ForeignInverseDensity {
    fn pdf(&self, y: f64) -> f64 {
        if !(y > -1.0) || y.is_infinite() {
            return 0.0;
        }
        let one_plus = 1.0 + y;
        self.base.pdf(-y / one_plus) / (one_plus * one_plus * one_plus) * self.ratio
    }

    fn breakpoints(&self) -> Vec<f64> {
        map_breakpoints(self.base.breakpoints())
    }
}

macro_rules! opaque_debug {
    ($($t:ty),*) => {$(
        impl fmt::Debug for $t {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(stringify!($t))
            }
        }
    )*};
}
opaque_debug!(ReweightedDensity, LemmaTransformed, ForeignInverseDensity);

pub fn foreign_density_jd(d: Arc<dyn JumpDensity>, lambda_d: f64, lambda_f: f64) -> Result<ReweightedDensity> {
    check_intensities(&*d, lambda_d, lambda_f)?;
    Ok(ReweightedDensity {
        base: d,
        ratio: lambda_d / lambda_f,
    })
}

pub fn lemma_transform(f_x: Arc<dyn JumpDensity>) -> LemmaTransformed {
    LemmaTransformed { base: f_x }
}

pub fn foreign_density_jf(d: Arc<dyn JumpDensity>, lambda_d: f64, lambda_f: f64) -> Result<ForeignInverseDensity> {
    check_intensities(&*d, lambda_d, lambda_f)?;
    Ok(ForeignInverseDensity {
        base: d,
        ratio: lambda_d / lambda_f,
    })
}

/// Points spread over the jump domain: uniform in `u = (1+x)/(2+x)`.
fn check_grid(n: usize) -> Vec<f64> {
    (1..=n)
        .map(|i| {
            let u = i as f64 / (n + 1) as f64;
            (2.0 * u - 1.0) / (1.0 - u)
        })
        .collect()
}

/// The foreign law of `J^f` as a member of the same family: `α ↦ 3 − α`,
/// `q ↦ q`. The result is checked pointwise against the general transform.
pub fn family_closure(d: &PowerLawCutoffDensity, lambda_d: f64) -> Result<PowerLawCutoffDensity> {
    let closed = PowerLawCutoffDensity::new(3.0 - d.alpha(), d.q())?;
    let base: Arc<dyn JumpDensity> = Arc::new(*d);
    let lambda_f = foreign_intensity(lambda_d, mean_jump(d)?)?;
    let general = foreign_density_jf(base, lambda_d, lambda_f)?;
    let worst = check_grid(100)
        .into_iter()
        .map(|y| (closed.pdf(y) - general.pdf(y)).abs())
        .fold(0.0, f64::max);
    if !(worst <= 1e-10) {
        return Err(Error::Internal(format!(
            "closed-family density departs from the general transform by {worst:e}"
        )));
    }
    Ok(closed)
}

/// A jump-size law that can be evaluated, serialised and sampled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DensitySpec", into = "DensitySpec")]
pub enum JumpLaw {
    PowerLawCutoff(PowerLawCutoffDensity),
    Tabulated(TabulatedDensity),
}

/// File form of a [`JumpLaw`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum DensitySpec {
    PowerLawCutoff { alpha: f64, q: f64 },
    Tabulated { grid: Vec<f64>, pdf: Vec<f64> },
}

impl TryFrom<DensitySpec> for JumpLaw {
    type Error = Error;

    fn try_from(s: DensitySpec) -> Result<Self> {
        match s {
            DensitySpec::PowerLawCutoff { alpha, q } => Ok(JumpLaw::PowerLawCutoff(PowerLawCutoffDensity::new(alpha, q)?)),
            DensitySpec::Tabulated { grid, pdf } => Ok(JumpLaw::Tabulated(TabulatedDensity::new(grid, pdf)?)),
        }
    }
}

impl From<JumpLaw> for DensitySpec {
    fn from(l: JumpLaw) -> Self {
        match l {
            JumpLaw::PowerLawCutoff(d) => DensitySpec::PowerLawCutoff {
                alpha: d.alpha(),
                q: d.q(),
            },
            JumpLaw::Tabulated(t) => DensitySpec::Tabulated {
                grid: t.grid().to_vec(),
                pdf: t.values().to_vec(),
            },
        }
    }
}

impl JumpDensity for JumpLaw {
    fn pdf(&self, x: f64) -> f64 {
        match self {
            JumpLaw::PowerLawCutoff(d) => d.pdf(x),
            JumpLaw::Tabulated(t) => t.pdf(x),
        }
    }

    fn breakpoints(&self) -> Vec<f64> {
        match self {
            JumpLaw::PowerLawCutoff(d) => d.breakpoints(),
            JumpLaw::Tabulated(t) => t.breakpoints(),
        }
    }
}

/// Draws jump sizes from a [`JumpLaw`].
#[derive(Debug, Clone)]
pub enum JumpSampler {
    PowerLawCutoff(PowerLawSampler),
    Tabulated(TabulatedDensity),
}

impl JumpSampler {
    pub fn draw<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            JumpSampler::PowerLawCutoff(s) => s.draw(rng),
            JumpSampler::Tabulated(t) => t.draw(rng),
        }
    }
}

impl JumpLaw {
    pub fn power_law_cutoff(alpha: f64, q: f64) -> Result<Self> {
        Ok(JumpLaw::PowerLawCutoff(PowerLawCutoffDensity::new(alpha, q)?))
    }

    pub fn sampler(&self) -> Result<JumpSampler> {
        Ok(match self {
            JumpLaw::PowerLawCutoff(d) => JumpSampler::PowerLawCutoff(d.sampler()?),
            JumpLaw::Tabulated(t) => JumpSampler::Tabulated(t.clone()),
        })
    }

    /// Law of the jumps of `1/S` under the foreign measure. Power-law laws map
    /// in closed form; tabulated laws are re-tabulated on the mapped grid.
    pub fn foreign_inverse_law(&self, lambda_d: f64) -> Result<JumpLaw> {
        match self {
            JumpLaw::PowerLawCutoff(d) => Ok(JumpLaw::PowerLawCutoff(family_closure(d, lambda_d)?)),
            JumpLaw::Tabulated(t) => {
                let lambda_f = foreign_intensity(lambda_d, mean_jump(t)?)?;
                let general = foreign_density_jf(Arc::new(t.clone()), lambda_d, lambda_f)?;
                let grid: Vec<f64> = t.grid().iter().rev().map(|&x| -x / (1.0 + x)).collect();
                let pdf = grid.iter().map(|&y| general.pdf(y)).collect();
                Ok(JumpLaw::Tabulated(TabulatedDensity::new(grid, pdf)?))
            }
        }
    }
}

/// Compound-Poisson jumps `S ↦ S(1+J)` with `J ~ density` at rate `lambda`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompoundJumpSpec {
    pub density: JumpLaw,
    pub lambda: f64,
    pub measure: Measure,
}

impl CompoundJumpSpec {
    pub fn new(density: JumpLaw, lambda: f64, measure: Measure) -> Result<Self> {
        ensure_positive("lambda", lambda)?;
        Ok(Self {
            density,
            lambda,
            measure,
        })
    }
}

/// Everything the foreign measure sees of a domestic compound-Poisson law.
#[derive(Debug, Clone)]
pub struct ForeignJumpLaw {
    pub beta_d: f64,
    pub lambda_f: f64,
    /// Density of `J^d` under the foreign measure.
    pub density_jd_foreign: ReweightedDensity,
    /// Density of `J^f = −J^d/(1+J^d)` under the foreign measure.
    pub density_jf_foreign: ForeignInverseDensity,
}

pub fn foreign_jump_law(spec: &CompoundJumpSpec) -> Result<ForeignJumpLaw> {
    let base: Arc<dyn JumpDensity> = Arc::new(spec.density.clone());
    let beta_d = mean_jump(&*base)?;
    let lambda_f = foreign_intensity(spec.lambda, beta_d)?;
    Ok(ForeignJumpLaw {
        beta_d,
        lambda_f,
        density_jd_foreign: foreign_density_jd(base.clone(), spec.lambda, lambda_f)?,
        density_jf_foreign: foreign_density_jf(base, spec.lambda, lambda_f)?,
    })
}

/// `λ^d E^d[J] + λ^f E^f[−J/(1+J)]`, zero when the foreign law is the one
/// induced by the change of measure.
pub fn no_arb_residual(spec: &CompoundJumpSpec) -> Result<f64> {
    let law = foreign_jump_law(spec)?;
    let domestic = spec.lambda * law.beta_d;
    let foreign = law.lambda_f * expectation(&law.density_jd_foreign, |x| -x / (1.0 + x))?;
    Ok(domestic + foreign)
}

/// The same residual with the foreign intensity forced to `lambda_f` while
/// the foreign density keeps its normalised shape `f^d(x)(1+x)/(1+β^d)`.
/// Any `lambda_f ≠ (1+β^d)λ^d` leaves `λ^d β^d − λ^f β^d/(1+β^d)`.
pub fn no_arb_residual_with_intensity(spec: &CompoundJumpSpec, lambda_f: f64) -> Result<f64> {
    ensure_positive("lambda_f", lambda_f)?;
    let beta_d = mean_jump(&spec.density)?;
    let shape = 1.0 / (1.0 + beta_d);
    let foreign = expectation(&spec.density, |x| -x * shape)?;
    Ok(spec.lambda * beta_d + lambda_f * foreign)
}

/// `n` independent draws, reproducible from `seed`.
pub fn sample(law: &JumpLaw, n: usize, seed: u64) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::invalid("n", "must be at least 1"));
    }
    let sampler = law.sampler()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..n).map(|_| sampler.draw(&mut rng)).collect())
}

/// CDF of `d` at each of the ascending `points`, integrating piece by piece.
pub fn cdf_at_sorted(d: &dyn JumpDensity, points: &[f64]) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(points.len());
    let mut acc = 0.0;
    let mut prev: Option<f64> = None;
    let piece = QuadOptions {
        abs_tol: 1e-14,
        rel_tol: 1e-12,
        max_intervals: 200,
    };
    for &y in points {
        if let Some(p) = prev {
            if y < p {
                return Err(Error::invalid("points", "must be ascending"));
            }
        }
        if !(y > -1.0) {
            out.push(0.0);
            continue;
        }
        acc += match prev.filter(|p| *p > -1.0) {
            None => {
                let u_hi = (1.0 + y) / (2.0 + y);
                integrate(
                    |u| {
                        let one_minus = 1.0 - u;
                        let x = (2.0 * u - 1.0) / one_minus;
                        d.pdf(x) / (one_minus * one_minus)
                    },
                    0.0,
                    u_hi,
                    QuadOptions::abs(1e-13),
                )?
                .value
            }
            Some(p) => integrate(|x| d.pdf(x), p, y, piece)?.value,
        };
        prev = Some(y);
        out.push(acc);
    }
    Ok(out)
}

/// Kolmogorov–Smirnov distance between the foreign law of `J^f` and domestic
/// draws of `J^d` reweighted by `(1+x)` and mapped through [`jf_of_jd`].
/// Weights are self-normalised.
pub fn measure_transform_ks(spec: &CompoundJumpSpec, n: usize, seed: u64) -> Result<f64> {
    let law = foreign_jump_law(spec)?;
    let draws = sample(&spec.density, n, seed)?;
    let mut pts: Vec<(f64, f64)> = draws.iter().map(|&x| (-x / (1.0 + x), 1.0 + x)).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total: f64 = pts.iter().map(|p| p.1).sum();
    let ys: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let cdf = cdf_at_sorted(&law.density_jf_foreign, &ys)?;
    let mut below = 0.0;
    let mut worst: f64 = 0.0;
    for (i, &(_, w)) in pts.iter().enumerate() {
        let above = below + w / total;
        worst = worst.max((cdf[i] - below).abs()).max((above - cdf[i]).abs());
        below = above;
    }
    Ok(worst)
}
