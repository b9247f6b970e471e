use crate::error::{Error, Result};
use crate::pricing::HestonParams;

/// Parameters of `Y = 1/S` under the foreign measure when `S` is Heston under
/// the domestic one.
///
/// The change of numeraire adds `ρσV dt` to the variance drift, so mean
/// reversion becomes `κ − ρσ` around `κV̄/(κ − ρσ)`. The Brownian driving `Y`
/// is the negative of the one driving `S`, which flips the correlation sign.
/// Vol-of-vol and initial variance are unchanged.
pub fn invert_heston(p: &HestonParams) -> Result<HestonParams> {
    p.validate()?;
    let reduced = p.kappa - p.rho * p.sigma;
    if reduced <= 0.0 {
        return Err(Error::NotMeanReverting(reduced));
    }
    Ok(HestonParams {
        v0: p.v0,
        vbar: p.kappa * p.vbar / reduced,
        kappa: reduced,
        sigma: p.sigma,
        rho: -p.rho,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn desk_parameters() {
        let p = HestonParams::new(0.0025, 0.0287, 1.1718, 0.1720, 0.0952).unwrap();
        let q = invert_heston(&p).unwrap();
        assert_eq!(q.v0, 0.0025);
        assert!((q.kappa - 1.1554256).abs() < 1e-6, "{}", q.kappa);
        assert!((q.vbar - 0.0291067).abs() < 1e-6, "{}", q.vbar);
        assert_eq!(q.sigma, 0.1720);
        assert_eq!(q.rho, -0.0952);
    }

    #[test]
    fn uncorrelated_is_fixed_point() {
        let p = HestonParams::new(0.04, 0.05, 2.0, 0.4, 0.0).unwrap();
        let q = invert_heston(&p).unwrap();
        assert_eq!((q.v0, q.vbar, q.kappa, q.sigma), (p.v0, p.vbar, p.kappa, p.sigma));
        assert_eq!(q.rho, 0.0);
    }

    #[test]
    fn positivity_violation() {
        let p = HestonParams::new(0.04, 0.04, 0.1, 0.2, 0.9).unwrap();
        let err = invert_heston(&p).unwrap_err();
        assert!(matches!(err, Error::NotMeanReverting(v) if (v + 0.08).abs() < 1e-15));
        assert!(err.to_string().starts_with("inverse not mean-reverting"));
    }

    proptest! {
        #[test]
        fn involution(v0 in 0.0f64..0.5, vbar in 0.0f64..0.5, kappa in 0.5f64..5.0,
                      sigma in 0.01f64..0.5, rho in -0.99f64..0.99) {
            let p = HestonParams::new(v0, vbar, kappa, sigma, rho).unwrap();
            let q = invert_heston(&p).unwrap();
            let back = invert_heston(&q).unwrap();
            prop_assert_eq!(q.v0, p.v0);
            prop_assert_eq!(q.sigma, p.sigma);
            let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(1e-300);
            prop_assert!(rel(back.kappa, p.kappa) <= 1e-14);
            prop_assert!((back.vbar - p.vbar).abs() <= 1e-14 * p.vbar.max(1e-300) + 1e-300);
            prop_assert_eq!(back.rho, p.rho);
        }
    }
}
