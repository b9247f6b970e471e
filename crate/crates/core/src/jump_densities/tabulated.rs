use rand::Rng;

use crate::error::{ensure_finite, Error, Result};

use super::JumpDensity;

/// Density given by values on a grid, linearly interpolated and normalised
/// with the trapezoid rule. Zero outside the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedDensity {
    grid: Vec<f64>,
    pdf: Vec<f64>,
    cdf: Vec<f64>,
}

impl TabulatedDensity {
    pub fn new(grid: Vec<f64>, pdf: Vec<f64>) -> Result<Self> {
        if grid.len() < 2 || grid.len() != pdf.len() {
            return Err(Error::invalid("grid", "need at least two points and one pdf value per point"));
        }
        for (&x, &p) in grid.iter().zip(&pdf) {
            ensure_finite("grid", x)?;
            ensure_finite("pdf", p)?;
            if p < 0.0 {
                return Err(Error::invalid("pdf", "values must be non-negative"));
            }
        }
        if grid[0] <= -1.0 {
            return Err(Error::invalid("grid", "must lie strictly inside (-1, inf)"));
        }
        if grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("grid", "must be strictly increasing"));
        }
        let mut cdf = vec![0.0; grid.len()];
        for i in 1..grid.len() {
            cdf[i] = cdf[i - 1] + 0.5 * (pdf[i] + pdf[i - 1]) * (grid[i] - grid[i - 1]);
        }
        let mass = cdf[cdf.len() - 1];
        if !(mass > 0.0) {
            return Err(Error::invalid("pdf", "zero total mass"));
        }
        let pdf = pdf.iter().map(|p| p / mass).collect();
        for c in cdf.iter_mut() {
            *c /= mass;
        }
        Ok(Self { grid, pdf, cdf })
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    /// Normalised pdf values at the grid points.
    pub fn values(&self) -> &[f64] {
        &self.pdf
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let n = self.grid.len();
        if x <= self.grid[0] {
            return 0.0;
        }
        if x >= self.grid[n - 1] {
            return 1.0;
        }
        let i = self.grid.partition_point(|&g| g <= x) - 1;
        let t = x - self.grid[i];
        let slope = (self.pdf[i + 1] - self.pdf[i]) / (self.grid[i + 1] - self.grid[i]);
        self.cdf[i] + self.pdf[i] * t + 0.5 * slope * t * t
    }

    /// Exact inverse of the piecewise-quadratic CDF.
    pub fn quantile(&self, u: f64) -> f64 {
        let n = self.grid.len();
        let u = u.clamp(0.0, 1.0);
        let i = self.cdf.partition_point(|&c| c <= u).clamp(1, n - 1) - 1;
        let r = u - self.cdf[i];
        let h = self.grid[i + 1] - self.grid[i];
        let p0 = self.pdf[i];
        let slope = (self.pdf[i + 1] - p0) / h;
        let disc = (p0 * p0 + 2.0 * slope * r).max(0.0);
        let denom = p0 + disc.sqrt();
        let t = if denom > 0.0 { 2.0 * r / denom } else { 0.0 };
        self.grid[i] + t.clamp(0.0, h)
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.quantile(rng.random::<f64>())
    }
}

impl JumpDensity for TabulatedDensity {
    fn pdf(&self, x: f64) -> f64 {
        let n = self.grid.len();
        if !(x >= self.grid[0] && x <= self.grid[n - 1]) {
            return 0.0;
        }
        let i = (self.grid.partition_point(|&g| g <= x)).clamp(1, n - 1) - 1;
        let w = (x - self.grid[i]) / (self.grid[i + 1] - self.grid[i]);
        self.pdf[i] + w * (self.pdf[i + 1] - self.pdf[i])
    }

    fn breakpoints(&self) -> Vec<f64> {
        self.grid.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn triangle() -> TabulatedDensity {
        TabulatedDensity::new(vec![-0.2, 0.0, 0.2], vec![0.0, 2.0, 0.0]).unwrap()
    }

    #[test]
    fn trapezoid_normalisation() {
        let d = TabulatedDensity::new(vec![0.0, 1.0], vec![3.0, 3.0]).unwrap();
        assert_eq!(d.pdf(0.5), 1.0);
        let t = triangle();
        assert!((t.pdf(0.0) - 5.0).abs() < 1e-14);
        assert!((t.cdf(0.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn quantile_inverts_cdf() {
        let t = TabulatedDensity::new(vec![-0.5, -0.1, 0.0, 0.3, 1.0], vec![0.1, 1.0, 2.0, 0.5, 0.0]).unwrap();
        for i in 1..100 {
            let u = i as f64 / 100.0;
            assert!((t.cdf(t.quantile(u)) - u).abs() < 1e-13);
        }
    }

    #[test]
    fn sample_mean() {
        let t = triangle();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 200_000;
        let m = (0..n).map(|_| t.draw(&mut rng)).sum::<f64>() / n as f64;
        // symmetric triangle, sd 0.2/√6
        assert!(m.abs() < 4.0 * 0.2 / 6f64.sqrt() / (n as f64).sqrt());
    }

    #[test]
    fn rejects_bad_input() {
        assert!(TabulatedDensity::new(vec![-1.0, 0.0], vec![1.0, 1.0]).is_err());
        assert!(TabulatedDensity::new(vec![0.0, 0.0], vec![1.0, 1.0]).is_err());
        assert!(TabulatedDensity::new(vec![0.0, 1.0], vec![1.0, -1.0]).is_err());
        assert!(TabulatedDensity::new(vec![0.0, 1.0], vec![0.0, 0.0]).is_err());
        assert!(TabulatedDensity::new(vec![0.0], vec![1.0]).is_err());
    }
}
