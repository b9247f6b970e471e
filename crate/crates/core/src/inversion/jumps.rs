use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, ensure_positive, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Measure {
    Domestic,
    Foreign,
}

impl Measure {
    pub fn flip(self) -> Self {
        match self {
            Measure::Domestic => Measure::Foreign,
            Measure::Foreign => Measure::Domestic,
        }
    }
}

/// Poisson jumps of constant relative size: `S ↦ S(1 + gamma)` at rate `lambda`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstantJumpSpec {
    pub gamma: f64,
    pub lambda: f64,
    pub measure: Measure,
}

impl ConstantJumpSpec {
    pub fn new(gamma: f64, lambda: f64, measure: Measure) -> Result<Self> {
        let s = Self { gamma, lambda, measure };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        ensure_finite("gamma", self.gamma)?;
        if self.gamma <= -1.0 {
            return Err(Error::invalid("gamma", format!("must exceed -1, got {}", self.gamma)));
        }
        ensure_positive("lambda", self.lambda)
    }
}

/// The same jumps seen by `1/S` under the other measure: sizes become
/// `−γ/(1+γ)` and the intensity is rescaled by `1 + γ`.
pub fn invert_constant_jump(spec: &ConstantJumpSpec) -> Result<ConstantJumpSpec> {
    spec.validate()?;
    Ok(ConstantJumpSpec {
        gamma: -spec.gamma / (1.0 + spec.gamma),
        lambda: spec.lambda * (1.0 + spec.gamma),
        measure: spec.measure.flip(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompensationCheck {
    /// `λ^d γ^d + λ^f γ^f`; zero exactly when `1/S` is compensated.
    pub residual: f64,
    /// `−λ^d γ^d + λ^f γ^f`, the opposite sign convention, reported for comparison.
    pub alternate_sign_residual: f64,
    /// `λ^f/λ^d − |γ^d/γ^f|`; `None` when `γ^f = 0`.
    pub ratio_gap: Option<f64>,
}

pub fn jump_compensation_residual(d: &ConstantJumpSpec, f: &ConstantJumpSpec) -> CompensationCheck {
    let ratio_gap = if f.gamma == 0.0 {
        None
    } else {
        Some(f.lambda / d.lambda - (d.gamma / f.gamma).abs())
    };
    CompensationCheck {
        residual: d.lambda * d.gamma + f.lambda * f.gamma,
        alternate_sign_residual: -d.lambda * d.gamma + f.lambda * f.gamma,
        ratio_gap,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn dom(gamma: f64, lambda: f64) -> ConstantJumpSpec {
        ConstantJumpSpec::new(gamma, lambda, Measure::Domestic).unwrap()
    }

    #[test]
    fn basic_map() {
        let f = invert_constant_jump(&dom(0.1, 2.0)).unwrap();
        assert!((f.gamma + 0.0909091).abs() < 1e-7);
        assert!((f.gamma + 1.0 / 11.0).abs() < 1e-15);
        assert!((f.lambda - 2.2).abs() < 1e-12);
        assert_eq!(f.measure, Measure::Foreign);
    }

    #[test]
    fn zero_jump_fixed_point() {
        let f = invert_constant_jump(&dom(0.0, 3.0)).unwrap();
        assert_eq!((f.gamma.abs(), f.lambda), (0.0, 3.0));
        let c = jump_compensation_residual(&dom(0.0, 3.0), &f);
        assert_eq!(c.residual, 0.0);
        assert_eq!(c.ratio_gap, None);
    }

    #[test]
    fn devaluation_becomes_appreciation() {
        let f = invert_constant_jump(&dom(-0.5, 2.0)).unwrap();
        assert!((f.gamma - 1.0).abs() < 1e-15 && (f.lambda - 1.0).abs() < 1e-15);
    }

    #[test]
    fn compensation_of_inverted_pair() {
        let d = dom(0.1, 2.0);
        let c = jump_compensation_residual(&d, &invert_constant_jump(&d).unwrap());
        assert!(c.residual.abs() <= 1e-12);
        assert!((c.alternate_sign_residual + 0.4).abs() < 1e-12);
        assert!(c.ratio_gap.unwrap().abs() < 1e-12);
    }

    #[test]
    fn wrong_intensity_is_detected() {
        let d = dom(0.1, 2.0);
        let f = ConstantJumpSpec::new(-0.0909091, 2.0, Measure::Foreign).unwrap();
        let c = jump_compensation_residual(&d, &f);
        // 2·0.1 − 2·0.0909091
        assert!((c.residual.abs() - 0.0181818).abs() < 1e-6, "{}", c.residual);
    }

    #[test]
    fn domain() {
        assert!(ConstantJumpSpec::new(-1.0, 1.0, Measure::Domestic).is_err());
        assert!(ConstantJumpSpec::new(0.1, 0.0, Measure::Domestic).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn involution_and_compensation(gamma in -0.99f64..10.0, lambda in 0.01f64..50.0) {
            let d = dom(gamma, lambda);
            let f = invert_constant_jump(&d).unwrap();
            let back = invert_constant_jump(&f).unwrap();
            prop_assert!((back.gamma - gamma).abs() <= 1e-12 * (1.0 + gamma.abs()));
            prop_assert!((back.lambda - lambda).abs() <= 1e-12 * lambda);
            prop_assert_eq!(back.measure, Measure::Domestic);
            let c = jump_compensation_residual(&d, &f);
            prop_assert!(c.residual.abs() <= 1e-12 * lambda * (1.0 + gamma.abs()));
            if gamma > 0.0 {
                prop_assert!(c.ratio_gap.unwrap().abs() <= 1e-12 * (1.0 + gamma));
            }
        }
    }
}
