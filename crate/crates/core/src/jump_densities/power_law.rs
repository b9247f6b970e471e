use rand::Rng;

use crate::error::{ensure_finite, Error, Result};
use crate::quad::{integrate_jump_domain_split, QuadOptions};

use super::JumpDensity;

/// `c (1+x)^{−α} exp(−q x²/(1+x))` on `(−1, ∞)`.
///
/// Written in `z = ln(1+x)` the log-density is `(1−α)z − 2q(cosh z − 1)`,
/// which is strictly concave for `q > 0`; both the quadrature breakpoints
/// and the sampler are built around that form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLawCutoffDensity {
    alpha: f64,
    q: f64,
    c: f64,
}

fn log_kernel(alpha: f64, q: f64, x: f64) -> f64 {
    -alpha * x.ln_1p() - q * x * x / (1.0 + x)
}

/// Mode and curvature scale of the log-density in `z = ln(1+x)`.
fn z_mode_and_scale(alpha: f64, q: f64) -> (f64, f64) {
    let mode = ((1.0 - alpha) / (2.0 * q)).asinh();
    let scale = 1.0 / (2.0 * q * mode.cosh()).sqrt();
    (mode, scale)
}

fn breakpoints_for(alpha: f64, q: f64) -> Vec<f64> {
    let (m, s) = z_mode_and_scale(alpha, q);
    [-8.0, -4.0, -2.0, -1.0, 0.0, 1.0, 2.0, 4.0, 8.0]
        .iter()
        .map(|k| (m + k * s).exp_m1())
        .filter(|x| x.is_finite() && *x > -1.0)
        .collect()
}

/// Normalisation constant `c` for the given exponent and cutoff.
pub fn normalize(alpha: f64, q: f64) -> Result<f64> {
    ensure_finite("alpha", alpha)?;
    if !(q > 0.0) || !q.is_finite() {
        return Err(Error::CutoffRequired(q));
    }
    let opts = QuadOptions {
        abs_tol: 1e-12,
        rel_tol: 1e-13,
        max_intervals: 4000,
    };
    let mass = integrate_jump_domain_split(
        |x| {
            if x <= -1.0 {
                0.0
            } else {
                log_kernel(alpha, q, x).exp()
            }
        },
        &breakpoints_for(alpha, q),
        opts,
    )?;
    if !(mass.value > 0.0) || !mass.value.is_finite() {
        return Err(Error::Quadrature {
            value: mass.value,
            error: mass.error,
        });
    }
    Ok(1.0 / mass.value)
}

impl PowerLawCutoffDensity {
    pub fn new(alpha: f64, q: f64) -> Result<Self> {
        let c = normalize(alpha, q)?;
        Ok(Self { alpha, q, c })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn sampler(&self) -> Result<PowerLawSampler> {
        PowerLawSampler::new(self)
    }
}

impl JumpDensity for PowerLawCutoffDensity {
    fn pdf(&self, x: f64) -> f64 {
        if !(x > -1.0) || x.is_infinite() {
            return 0.0;
        }
        self.c * log_kernel(self.alpha, self.q, x).exp()
    }

    fn breakpoints(&self) -> Vec<f64> {
        breakpoints_for(self.alpha, self.q)
    }
}

#[derive(Debug, Clone, Copy)]
struct Piece {
    lo: f64,
    hi: f64,
    anchor: f64,
    level: f64,
    slope: f64,
}

impl Piece {
    fn envelope(&self, z: f64) -> f64 {
        self.level + self.slope * (z - self.anchor)
    }

    fn mass(&self) -> f64 {
        if self.lo == f64::NEG_INFINITY {
            self.envelope(self.hi).exp() / self.slope
        } else if self.hi == f64::INFINITY {
            self.envelope(self.lo).exp() / -self.slope
        } else {
            let w = self.hi - self.lo;
            let sw = self.slope * w;
            let shape = if sw.abs() < 1e-12 { w } else { sw.exp_m1() / self.slope };
            self.envelope(self.lo).exp() * shape
        }
    }

    fn invert(&self, u: f64) -> f64 {
        if self.lo == f64::NEG_INFINITY {
            self.hi + u.ln() / self.slope
        } else if self.hi == f64::INFINITY {
            self.lo + u.ln() / self.slope
        } else {
            let w = self.hi - self.lo;
            let sw = self.slope * w;
            if sw.abs() < 1e-12 {
                self.lo + u * w
            } else {
                (self.lo + (u * sw.exp_m1()).ln_1p() / self.slope).clamp(self.lo, self.hi)
            }
        }
    }
}

/// Rejection sampler with a piecewise-exponential tangent envelope in
/// `z = ln(1+x)`.
#[derive(Debug, Clone)]
pub struct PowerLawSampler {
    alpha: f64,
    q: f64,
    shift: f64,
    pieces: Vec<Piece>,
    cumulative: Vec<f64>,
    acceptance: f64,
}

impl PowerLawSampler {
    fn log_target(&self, z: f64) -> f64 {
        (1.0 - self.alpha) * z - 2.0 * self.q * (z.cosh() - 1.0) - self.shift
    }

    pub fn new(d: &PowerLawCutoffDensity) -> Result<Self> {
        let (alpha, q) = (d.alpha, d.q);
        let (mode, scale) = z_mode_and_scale(alpha, q);
        let h = |z: f64| (1.0 - alpha) * z - 2.0 * q * (z.cosh() - 1.0);
        let dh = |z: f64| (1.0 - alpha) - 2.0 * q * z.sinh();
        let shift = h(mode);
        let anchors: Vec<f64> = [-3.0, -1.5, -0.5, 0.5, 1.5, 3.0].iter().map(|k| mode + k * scale).collect();
        let levels: Vec<f64> = anchors.iter().map(|&z| h(z) - shift).collect();
        let slopes: Vec<f64> = anchors.iter().map(|&z| dh(z)).collect();
        if !(slopes[0] > 0.0 && slopes[slopes.len() - 1] < 0.0) {
            return Err(Error::Internal("sampler envelope does not bracket the mode".into()));
        }
        let mut edges = vec![f64::NEG_INFINITY];
        for i in 0..anchors.len() - 1 {
            let t = (levels[i + 1] - levels[i] + slopes[i] * anchors[i] - slopes[i + 1] * anchors[i + 1])
                / (slopes[i] - slopes[i + 1]);
            edges.push(t);
        }
        edges.push(f64::INFINITY);
        let pieces: Vec<Piece> = (0..anchors.len())
            .map(|i| Piece {
                lo: edges[i],
                hi: edges[i + 1],
                anchor: anchors[i],
                level: levels[i],
                slope: slopes[i],
            })
            .collect();
        let mut cumulative = Vec::with_capacity(pieces.len());
        let mut total = 0.0;
        for p in &pieces {
            total += p.mass();
            cumulative.push(total);
        }
        // ∫ exp(h(z)) dz = 1/c, so the acceptance rate is known exactly
        let acceptance = (-shift).exp() / d.c / total;
        if !acceptance.is_finite() || acceptance < 1e-3 {
            return Err(Error::LowAcceptance(acceptance));
        }
        Ok(Self {
            alpha,
            q,
            shift,
            pieces,
            cumulative,
            acceptance,
        })
    }

    /// Expected fraction of envelope proposals that are accepted.
    pub fn acceptance_rate(&self) -> f64 {
        self.acceptance
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let total = self.cumulative[self.cumulative.len() - 1];
        loop {
            let pick = rng.random::<f64>() * total;
            let i = self.cumulative.iter().position(|&c| pick < c).unwrap_or(self.pieces.len() - 1);
            let piece = &self.pieces[i];
            let u = 1.0 - rng.random::<f64>();
            let z = piece.invert(u);
            let accept = 1.0 - rng.random::<f64>();
            if accept.ln() <= self.log_target(z) - piece.envelope(z) {
                return z.exp_m1();
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jump_densities::mean_jump;
    use crate::quad::integrate;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn unit_mass() {
        for &(a, q) in &[(2.0, 1.0), (0.5, 0.2), (2.5, 5.0), (3.0, 500.0), (-1.0, 0.3), (6.0, 0.5)] {
            let d = PowerLawCutoffDensity::new(a, q).unwrap();
            let m = integrate_jump_domain_split(|x| d.pdf(x), &d.breakpoints(), QuadOptions::abs(1e-13)).unwrap();
            assert!((m.value - 1.0).abs() < 1e-10, "({a}, {q}) {}", m.value);
        }
    }

    #[test]
    fn sharp_cutoff_concentrates_at_zero() {
        let d = PowerLawCutoffDensity::new(3.0, 500.0).unwrap();
        let m = integrate(|x| d.pdf(x), -0.1, 0.1, QuadOptions::abs(1e-13)).unwrap();
        assert!(m.value >= 0.99, "{}", m.value);
    }

    #[test]
    fn cutoff_required() {
        let err = PowerLawCutoffDensity::new(2.0, 0.0).unwrap_err();
        assert!(err.to_string().starts_with("cutoff required for integrability"));
        assert!(PowerLawCutoffDensity::new(2.0, -1.0).is_err());
    }

    #[test]
    fn vanishes_at_both_ends() {
        let d = PowerLawCutoffDensity::new(2.0, 1.0).unwrap();
        assert!(d.pdf(-1.0 + 1e-3) < 1e-300);
        assert!(d.pdf(1e4) < 1e-300);
        assert_eq!(d.pdf(-1.0), 0.0);
        assert_eq!(d.pdf(-2.0), 0.0);
    }

    #[test]
    fn mean_matches_samples() {
        let d = PowerLawCutoffDensity::new(2.0, 1.0).unwrap();
        let beta = mean_jump(&d).unwrap();
        let s = d.sampler().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 1_000_000;
        let draws: Vec<f64> = (0..n).map(|_| s.draw(&mut rng)).collect();
        assert!(draws.iter().all(|&x| x > -1.0));
        let mean = draws.iter().sum::<f64>() / n as f64;
        let var = draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let se = (var / n as f64).sqrt();
        assert!((mean - beta).abs() <= 3.0 * se, "mean {mean} beta {beta} se {se}");
    }

    #[test]
    fn envelope_efficiency() {
        for &(a, q) in &[(2.0, 1.0), (0.5, 0.2), (2.5, 5.0), (3.0, 1000.0), (10.0, 0.05)] {
            let s = PowerLawCutoffDensity::new(a, q).unwrap().sampler().unwrap();
            assert!(s.acceptance_rate() > 0.5, "({a}, {q}) {}", s.acceptance_rate());
            assert!(s.acceptance_rate() <= 1.0 + 1e-9);
        }
    }
}
