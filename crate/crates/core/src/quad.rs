//! Globally adaptive Gauss–Kronrod (7/15) quadrature.
//!
//! The interval with the largest error estimate is bisected until the summed
//! estimate falls below `max(abs_tol, rel_tol * |I|)`. Error estimates follow
//! the QUADPACK `qk15` heuristic. Unbounded ranges are handled by the
//! substitutions in [`integrate_half_line`] and [`integrate_jump_domain`];
//! nodes are interior so the transformed integrands are never evaluated at
//! their singular endpoints.

use crate::error::{Error, Result};

#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

// Gauss weights for XGK[1], XGK[3], XGK[5] and the centre.
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Tolerances and subdivision budget.
#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            abs_tol: 1e-12,
            rel_tol: 0.0,
            max_intervals: 2000,
        }
    }
}

impl QuadOptions {
    pub fn abs(abs_tol: f64) -> Self {
        Self {
            abs_tol,
            ..Self::default()
        }
    }
}

/// Value and error estimate of a converged integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
    pub intervals: usize,
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

fn kronrod15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Segment {
    let centre = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(centre);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    let mut abs_sum = kronrod.abs();
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(centre - dx);
        let f2 = f(centre + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        kronrod += WGK[j] * (f1 + f2);
        abs_sum += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * kronrod;
    let mut asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let value = kronrod * half;
    let res_abs = abs_sum * half.abs();
    let res_asc = asc * half.abs();
    let mut error = ((kronrod - gauss) * half).abs();
    if res_asc != 0.0 && error != 0.0 {
        error = res_asc * (200.0 * error / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(50.0 * f64::EPSILON * res_abs);
    }
    Segment { a, b, value, error }
}

/// Integrates `f` over the finite interval `[a, b]`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, opts: QuadOptions) -> Result<Integral> {
    if a == b {
        return Ok(Integral {
            value: 0.0,
            error: 0.0,
            intervals: 0,
        });
    }
    let first = kronrod15(&f, a, b);
    let mut segments = vec![first];
    let mut total = first.value;
    let mut err = first.error;
    loop {
        if !total.is_finite() || !err.is_finite() {
            return Err(Error::Quadrature {
                value: total,
                error: err,
            });
        }
        let tol = opts.abs_tol.max(opts.rel_tol * total.abs());
        if err <= tol {
            return Ok(Integral {
                value: total,
                error: err,
                intervals: segments.len(),
            });
        }
        if segments.len() >= opts.max_intervals {
            return Err(Error::Quadrature {
                value: total,
                error: err,
            });
        }
        let (worst, _) = segments
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, s)| {
                if s.error > acc.1 {
                    (i, s.error)
                } else {
                    acc
                }
            });
        let s = segments.swap_remove(worst);
        let mid = 0.5 * (s.a + s.b);
        if mid <= s.a.min(s.b) || mid >= s.a.max(s.b) {
            // interval exhausted at machine precision
            return Err(Error::Quadrature {
                value: total,
                error: err,
            });
        }
        let left = kronrod15(&f, s.a, mid);
        let right = kronrod15(&f, mid, s.b);
        segments.push(left);
        segments.push(right);
        // re-summing keeps the totals free of cancellation drift
        total = segments.iter().map(|s| s.value).sum();
        err = segments.iter().map(|s| s.error).sum();
    }
}

/// Integrates `f` over `[a, ∞)` via `x = a + scale * t / (1 - t)`.
pub fn integrate_half_line<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    scale: f64,
    opts: QuadOptions,
) -> Result<Integral> {
    integrate(
        |t| {
            let one_minus = 1.0 - t;
            let x = a + scale * t / one_minus;
            let jac = scale / (one_minus * one_minus);
            let v = f(x);
            if v == 0.0 {
                0.0
            } else {
                v * jac
            }
        },
        0.0,
        1.0,
        opts,
    )
}

/// Integrates `f` over the jump-size domain `(-1, ∞)` via `u = (1 + x) / (2 + x)`.
pub fn integrate_jump_domain<F: Fn(f64) -> f64>(f: F, opts: QuadOptions) -> Result<Integral> {
    integrate_jump_domain_split(f, &[], opts)
}

/// As [`integrate_jump_domain`], with the range split at the given interior
/// points so that narrow features are not missed by the first panel.
pub fn integrate_jump_domain_split<F: Fn(f64) -> f64>(f: F, breaks: &[f64], opts: QuadOptions) -> Result<Integral> {
    let g = |u: f64| {
        let one_minus = 1.0 - u;
        let x = (2.0 * u - 1.0) / one_minus;
        let v = f(x);
        if v == 0.0 {
            0.0
        } else {
            v / (one_minus * one_minus)
        }
    };
    let mut cuts: Vec<f64> = breaks
        .iter()
        .filter(|x| x.is_finite() && **x > -1.0)
        .map(|x| (1.0 + x) / (2.0 + x))
        .filter(|u| *u > 0.0 && *u < 1.0)
        .collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut edges = vec![0.0];
    edges.extend(cuts);
    edges.push(1.0);
    let pieces = edges.len() - 1;
    let piece_opts = QuadOptions {
        abs_tol: opts.abs_tol / pieces as f64,
        ..opts
    };
    let mut total = Integral {
        value: 0.0,
        error: 0.0,
        intervals: 0,
    };
    for w in edges.windows(2) {
        let r = integrate(g, w[0], w[1], piece_opts)?;
        total.value += r.value;
        total.error += r.error;
        total.intervals += r.intervals;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let r = integrate(|x| 3.0 * x * x, 0.0, 2.0, QuadOptions::default()).unwrap();
        assert!((r.value - 8.0).abs() < 1e-14);
    }

    #[test]
    fn oscillatory_integrand() {
        let r = integrate(|x| (10.0 * x).sin(), 0.0, std::f64::consts::PI, QuadOptions::abs(1e-13)).unwrap();
        assert!(r.value.abs() < 1e-12);
    }

    #[test]
    fn gaussian_half_line() {
        let r = integrate_half_line(|x| (-x * x).exp(), 0.0, 1.0, QuadOptions::abs(1e-13)).unwrap();
        let exact = 0.5 * std::f64::consts::PI.sqrt();
        assert!((r.value - exact).abs() < 1e-12, "{}", r.value);
    }

    #[test]
    fn exponential_on_jump_domain() {
        // density of (E - 1) with E ~ Exp(1)
        let r = integrate_jump_domain(|x| (-(1.0 + x)).exp(), QuadOptions::abs(1e-13)).unwrap();
        assert!((r.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn endpoint_singularity_converges() {
        let r = integrate(|x: f64| 1.0 / x.sqrt(), 0.0, 1.0, QuadOptions::abs(1e-10)).unwrap();
        assert!((r.value - 2.0).abs() < 1e-9);
    }

    #[test]
    fn non_integrable_reports_failure() {
        let opts = QuadOptions {
            abs_tol: 1e-12,
            rel_tol: 0.0,
            max_intervals: 50,
        };
        assert!(integrate(|x| 1.0 / x, 0.0, 1.0, opts).is_err());
    }
}
