//! End-to-end acceptance checks. Runs without the libtest harness so each
//! criterion prints exactly one line; the process fails if any criterion does.

use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use fx_inversion::calibration::{calibrate_heston, calibrate_sabr, default_heston_starts, DEFAULT_HESTON_STARTS};
use fx_inversion::inversion::{
    check_local_vol_consistency, default_grid, invert_constant_jump, invert_heston, jump_compensation_residual,
    make_log_polynomial, make_symmetric_laurent, ConstantJumpSpec, LocalVolFunction, Measure,
};
use fx_inversion::jump_densities::{
    family_closure, foreign_density_jd, foreign_density_jf, foreign_jump_law, measure_transform_ks, no_arb_residual,
    total_mass, CompoundJumpSpec, JumpDensity, JumpLaw, PowerLawCutoffDensity,
};
use fx_inversion::market_data::{MarketSmile, VolQuote};
use fx_inversion::montecarlo::{rn_weighted_price, simulate_jump_gbm_exact, Estimate, JumpModel, McConfig};
use fx_inversion::pricing::{hagan_vol, heston_call, implied_vol, HestonParams, SabrParams};
use fx_inversion::report::{heston_consistency_experiment, sabr_inconsistency_experiment};

const STRIKES: [f64; 5] = [1.1897, 1.2173, 1.24869, 1.2809, 1.3106];
const SPOT: f64 = 1.24122;
const FORWARD: f64 = 1.2478;
const MATURITY: f64 = 0.25;

fn layout() -> MarketSmile {
    let quotes = STRIKES.iter().map(|&k| VolQuote::new(k, 0.1)).collect();
    MarketSmile::from_forward(SPOT, FORWARD, MATURITY, 1.0, quotes).expect("layout")
}

fn heston_desk() -> HestonParams {
    HestonParams::new(0.0025, 0.0287, 1.1718, 0.1720, 0.0952).expect("heston")
}

fn sabr_desk() -> SabrParams {
    SabrParams::new(0.0748, 0.5, 0.1435, 0.7330).expect("sabr")
}

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn heston_consistency() -> Outcome {
    let r = heston_consistency_experiment(&heston_desk(), &layout()).map_err(err)?;
    check(r.distance.sup_norm <= 1e-6, format!("sup-norm {:.3e}", r.distance.sup_norm))
}

fn heston_map() -> Outcome {
    let p = heston_desk();
    let inv = invert_heston(&p).map_err(err)?;
    let reduced = p.kappa - p.rho * p.sigma;
    check(
        (inv.kappa - 1.1554256).abs() <= 1e-6 && (inv.vbar - 0.0291067).abs() <= 1e-6 && reduced > 0.0,
        format!("kappa' {:.8}, vbar' {:.8}, kappa - rho sigma {:.6}", inv.kappa, inv.vbar, reduced),
    )
}

fn sabr_inconsistency() -> Outcome {
    let cfg = McConfig::euler(200_000, 64, 2024).with_antithetic(true);
    let r = sabr_inconsistency_experiment(&sabr_desk(), &layout(), &cfg).map_err(err)?;
    let max_z = r.mc_max_abs_z.unwrap_or(f64::INFINITY);
    let max_se = r.mc_max_vol_std_error.unwrap_or(f64::INFINITY);
    let wing = [r.rows[0].clone(), r.rows[r.rows.len() - 1].clone()]
        .iter()
        .map(|row| (row.duality_vol - row.mapped_vol).abs())
        .fold(0.0f64, f64::max);
    check(
        max_z <= 3.0 && wing > 10e-4 && max_se < 2e-4,
        format!(
            "max |z| {max_z:.2}, wing gap {:.1} bp, max vol SE {:.2} bp",
            wing * 1e4,
            max_se * 1e4
        ),
    )
}

fn constant_jumps() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let gamma = rng.random_range(-0.99..10.0);
        let lambda = rng.random_range(0.01..5.0);
        let d = ConstantJumpSpec::new(gamma, lambda, Measure::Domestic).map_err(err)?;
        let f = invert_constant_jump(&d).map_err(err)?;
        let back = invert_constant_jump(&f).map_err(err)?;
        let c = jump_compensation_residual(&d, &f);
        worst = worst
            .max((back.gamma - gamma).abs())
            .max((back.lambda - lambda).abs())
            .max(c.residual.abs());
        if gamma != 0.0 {
            worst = worst.max(c.ratio_gap.map(f64::abs).unwrap_or(f64::INFINITY));
        }
    }
    check(worst <= 1e-12, format!("worst deviation {worst:.2e} over 1000 draws"))
}

fn compound_transforms() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut mass_gap, mut arb, mut closure_gap): (f64, f64, f64) = (0.0, 0.0, 0.0);
    let lambda_d = 1.5;
    for _ in 0..50 {
        let alpha = rng.random_range(0.5..2.5);
        let q = rng.random_range(0.2..5.0);
        let d = PowerLawCutoffDensity::new(alpha, q).map_err(err)?;
        let spec = CompoundJumpSpec::new(JumpLaw::PowerLawCutoff(d), lambda_d, Measure::Domestic).map_err(err)?;
        let law = foreign_jump_law(&spec).map_err(err)?;
        let shared: Arc<dyn JumpDensity> = Arc::new(d);
        let jd = foreign_density_jd(shared.clone(), lambda_d, law.lambda_f).map_err(err)?;
        mass_gap = mass_gap.max((total_mass(&jd).map_err(err)? - 1.0).abs());
        arb = arb.max(no_arb_residual(&spec).map_err(err)?.abs());
        let closed = family_closure(&d, lambda_d).map_err(err)?;
        closure_gap = closure_gap.max((closed.alpha() - (3.0 - alpha)).abs()).max((closed.q() - q).abs());
        let composed = foreign_density_jf(shared, lambda_d, law.lambda_f).map_err(err)?;
        for i in 1..200 {
            let u = i as f64 / 200.0;
            let y = (2.0 * u - 1.0) / (1.0 - u);
            closure_gap = closure_gap.max((closed.pdf(y) - composed.pdf(y)).abs());
        }
    }
    check(
        mass_gap <= 1e-8 && arb <= 1e-8 && closure_gap <= 1e-10,
        format!("mass gap {mass_gap:.2e}, no-arb residual {arb:.2e}, closure gap {closure_gap:.2e}"),
    )
}

fn sampling_ks() -> Outcome {
    let spec = CompoundJumpSpec::new(JumpLaw::power_law_cutoff(2.0, 1.0).map_err(err)?, 1.0, Measure::Domestic).map_err(err)?;
    let ks = measure_transform_ks(&spec, 100_000, 6).map_err(err)?;
    check(ks <= 0.005, format!("KS distance {ks:.5}"))
}

fn combined_z(a: Estimate, b: Estimate) -> f64 {
    (a.value - b.value).abs() / (a.std_error.powi(2) + b.std_error.powi(2)).sqrt()
}

fn measure_change() -> Outcome {
    let (s0, dr, sigma, t) = (1.25, 0.02, 0.1, 1.0);
    let strike = 0.8;
    let payoff = |y: f64| (y - strike).max(0.0);
    let domestic_cfg = McConfig::exact(1_000_000, 7);
    let foreign_cfg = McConfig::exact(1_000_000, 8);

    let cj = ConstantJumpSpec::new(0.05, 2.0, Measure::Domestic).map_err(err)?;
    let dom = simulate_jump_gbm_exact(s0, dr, sigma, &JumpModel::Constant(cj), t, &domestic_cfg).map_err(err)?;
    let cf = invert_constant_jump(&cj).map_err(err)?;
    let fgn = simulate_jump_gbm_exact(1.0 / s0, -dr, sigma, &JumpModel::Constant(cf), t, &foreign_cfg).map_err(err)?;
    let z_const = combined_z(rn_weighted_price(&dom, payoff).map_err(err)?, fgn.estimate(|_, y| payoff(y)));

    let law = JumpLaw::power_law_cutoff(2.0, 1.0).map_err(err)?;
    let spec = CompoundJumpSpec::new(law.clone(), 1.0, Measure::Domestic).map_err(err)?;
    let dom = simulate_jump_gbm_exact(s0, dr, sigma, &JumpModel::Compound(spec.clone()), t, &domestic_cfg).map_err(err)?;
    let foreign_spec = CompoundJumpSpec::new(
        law.foreign_inverse_law(spec.lambda).map_err(err)?,
        foreign_jump_law(&spec).map_err(err)?.lambda_f,
        Measure::Foreign,
    )
    .map_err(err)?;
    let fgn = simulate_jump_gbm_exact(1.0 / s0, -dr, sigma, &JumpModel::Compound(foreign_spec), t, &foreign_cfg).map_err(err)?;
    let z_comp = combined_z(rn_weighted_price(&dom, payoff).map_err(err)?, fgn.estimate(|_, y| payoff(y)));
    check(
        z_const <= 3.0 && z_comp <= 3.0,
        format!("constant-jump z {z_const:.2}, compound-jump z {z_comp:.2}"),
    )
}

fn martingale() -> Outcome {
    let (s0, dr, sigma, t): (f64, f64, f64, f64) = (1.24122, 0.0212, 0.1, 0.5);
    let cfg = McConfig::exact(500_000, 9);
    let models = [
        JumpModel::Constant(ConstantJumpSpec::new(-0.08, 3.0, Measure::Domestic).map_err(err)?),
        JumpModel::Compound(
            CompoundJumpSpec::new(JumpLaw::power_law_cutoff(1.5, 0.7).map_err(err)?, 2.0, Measure::Domestic).map_err(err)?,
        ),
    ];
    let target = s0 * (dr * t).exp();
    let mut worst: f64 = 0.0;
    for m in &models {
        let s = simulate_jump_gbm_exact(s0, dr, sigma, m, t, &cfg).map_err(err)?;
        let mean = s.mean();
        let w = s.weight_mean().map_err(err)?;
        worst = worst
            .max((mean.value - target).abs() / mean.std_error)
            .max((w.value - 1.0).abs() / w.std_error);
    }
    check(worst <= 3.0, format!("largest |z| {worst:.2}"))
}

fn local_vol() -> Outcome {
    let grid = default_grid();
    let poly = make_log_polynomial(&[0.1, -0.03, 0.05, 0.01]).map_err(err)?;
    let laurent = make_symmetric_laurent(2, &[0.02, 0.05, 0.1, 0.05, 0.02]).map_err(err)?;
    let a = check_local_vol_consistency(&poly, &grid, 0.5, 1e-12).map_err(err)?;
    let b = check_local_vol_consistency(&laurent, &grid, 0.5, 1e-12).map_err(err)?;
    let root = LocalVolFunction::opaque(|x, _| x.sqrt());
    let c = check_local_vol_consistency(&root, &grid, 0.5, 1e-12).map_err(err)?;
    let at_two = c.violations.iter().find(|(x, _)| (x - 2.0).abs() < 1e-12).map(|p| p.1);
    let expected = std::f64::consts::FRAC_1_SQRT_2;
    let hit = at_two.map(|v| (v - expected).abs() <= 1e-12).unwrap_or(false);
    check(
        a.consistent && b.consistent && a.max_violation <= 1e-14 && b.max_violation <= 1e-14 && hit,
        format!(
            "log-polynomial {:.1e}, Laurent {:.1e}, sqrt at x=2 {}",
            a.max_violation,
            b.max_violation,
            at_two.map(|v| format!("{v:.13}")).unwrap_or_else(|| "missing".into())
        ),
    )
}

fn calibration_round_trips() -> Outcome {
    let lay = layout();
    let (f, t, df) = (lay.forward(), lay.maturity(), lay.domestic_discount());
    let hp = heston_desk();
    let hv = STRIKES
        .iter()
        .map(|&k| implied_vol(heston_call(&hp, f, k, t, df)?, f, k, t, df))
        .collect::<Result<Vec<_>, _>>()
        .map_err(err)?;
    let hs = lay.with_vols(&hv).map_err(err)?;
    let h = calibrate_heston(&hs, &default_heston_starts(&hs, DEFAULT_HESTON_STARTS)).map_err(err)?;
    let sp = sabr_desk();
    let sv = STRIKES.iter().map(|&k| hagan_vol(&sp, f, k, t)).collect::<Result<Vec<_>, _>>().map_err(err)?;
    let s = calibrate_sabr(&lay.with_vols(&sv).map_err(err)?, sp.beta).map_err(err)?;
    check(
        h.residual <= 1e-6 && s.residual <= 1e-8,
        format!("Heston RMS {:.2e}, SABR RMS {:.2e}", h.residual, s.residual),
    )
}

struct Criterion {
    name: &'static str,
    budget: Duration,
    run: fn() -> Outcome,
}

fn main() {
    let criteria = [
        Criterion { name: "Heston inversion consistency", budget: Duration::from_secs(5), run: heston_consistency },
        Criterion { name: "Heston inverse parameter map", budget: Duration::from_secs(1), run: heston_map },
        Criterion { name: "SABR inconsistency", budget: Duration::from_secs(60), run: sabr_inconsistency },
        Criterion { name: "constant-jump identities", budget: Duration::from_secs(1), run: constant_jumps },
        Criterion { name: "compound-Poisson transforms", budget: Duration::from_secs(30), run: compound_transforms },
        Criterion { name: "density sampling vs analytic law", budget: Duration::from_secs(10), run: sampling_ks },
        Criterion { name: "measure-change Monte Carlo", budget: Duration::from_secs(60), run: measure_change },
        Criterion { name: "martingale and compensator", budget: Duration::from_secs(30), run: martingale },
        Criterion { name: "local-vol families", budget: Duration::from_secs(1), run: local_vol },
        Criterion { name: "calibration round trips", budget: Duration::from_secs(60), run: calibration_round_trips },
    ];
    let only: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, c) in criteria.iter().enumerate() {
        if !only.is_empty() && !only.iter().any(|o| c.name.contains(o.as_str())) {
            continue;
        }
        let start = Instant::now();
        let outcome = (c.run)();
        let took = start.elapsed();
        let in_time = took <= c.budget;
        let (verdict, detail) = match &outcome {
            Ok(d) if in_time => ("PASS", d.clone()),
            Ok(d) => ("FAIL", format!("{d}; over budget")),
            Err(d) => ("FAIL", d.clone()),
        };
        if verdict == "FAIL" {
            failed += 1;
        }
        println!(
            "criterion {:>2} {verdict}: {} ({detail}; {:.2}s of {}s)",
            i + 1,
            c.name,
            took.as_secs_f64(),
            c.budget.as_secs()
        );
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
