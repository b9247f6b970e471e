//! Box-constrained Levenberg–Marquardt with a finite-difference Jacobian.
//!
//! Steps are projected onto the box; columns pinned at a bound with the
//! gradient pushing outward are frozen for the step. Damping follows the
//! Nielsen update.

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, Copy)]
pub struct LmOptions {
    pub max_iterations: usize,
    /// Stop once the cost `½‖r‖²` is below this.
    pub cost_tol: f64,
    /// Stop once a step changes no parameter by more than this (relative).
    pub step_tol: f64,
    /// Stop once the relative cost reduction of an accepted step is below this.
    pub reduction_tol: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        Self {
            max_iterations: 300,
            cost_tol: 1e-28,
            step_tol: 1e-14,
            reduction_tol: 1e-15,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LmOutcome {
    pub x: Vec<f64>,
    pub residuals: Vec<f64>,
    pub cost: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn cost_of(r: &[f64]) -> f64 {
    0.5 * r.iter().map(|v| v * v).sum::<f64>()
}

fn finite(r: &[f64]) -> bool {
    r.iter().all(|v| v.is_finite())
}

/// Minimises `½‖r(x)‖²` over `lower ≤ x ≤ upper`. Residual vectors containing
/// non-finite entries are treated as rejected trial points.
pub fn least_squares<F>(residual: F, x0: &[f64], lower: &[f64], upper: &[f64], opts: LmOptions) -> Option<LmOutcome>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let n = x0.len();
    let clamp = |x: &mut [f64]| {
        for i in 0..n {
            x[i] = x[i].clamp(lower[i], upper[i]);
        }
    };
    let mut x = x0.to_vec();
    clamp(&mut x);
    let mut r = residual(&x);
    if !finite(&r) {
        return None;
    }
    let m = r.len();
    let mut cost = cost_of(&r);
    let mut mu: Option<f64> = None;
    let mut nu = 2.0;
    let mut converged = cost <= opts.cost_tol;
    let mut iterations = 0;

    while !converged && iterations < opts.max_iterations {
        iterations += 1;

        // forward differences, stepping inward near the upper bound
        let mut jac = DMatrix::<f64>::zeros(m, n);
        for j in 0..n {
            let h0 = 1e-7 * x[j].abs().max(1e-4);
            let h = if x[j] + h0 > upper[j] { -h0 } else { h0 };
            let mut xp = x.clone();
            xp[j] += h;
            let rp = residual(&xp);
            if !finite(&rp) {
                return Some(LmOutcome {
                    x,
                    residuals: r,
                    cost,
                    iterations,
                    converged: false,
                });
            }
            for i in 0..m {
                jac[(i, j)] = (rp[i] - r[i]) / h;
            }
        }
        let rv = DVector::from_column_slice(&r);
        let grad = jac.transpose() * &rv;
        let mut jtj = jac.transpose() * &jac;

        // freeze coordinates held at a bound by the descent direction
        let mut active = vec![false; n];
        for j in 0..n {
            let at_lower = x[j] <= lower[j] && grad[j] > 0.0;
            let at_upper = x[j] >= upper[j] && grad[j] < 0.0;
            active[j] = at_lower || at_upper;
        }
        if (0..n).all(|j| active[j] || grad[j].abs() <= 1e-300) {
            converged = true;
            break;
        }
        for j in 0..n {
            if active[j] {
                for k in 0..n {
                    jtj[(j, k)] = 0.0;
                    jtj[(k, j)] = 0.0;
                }
                jtj[(j, j)] = 1.0;
            }
        }
        let diag_max = (0..n).map(|j| jtj[(j, j)]).fold(0.0, f64::max);
        let mut damping = *mu.get_or_insert(1e-3 * diag_max.max(1e-300));

        let mut accepted = false;
        for _ in 0..60 {
            let mut a = jtj.clone();
            for j in 0..n {
                if !active[j] {
                    a[(j, j)] += damping * jtj[(j, j)].max(1e-12 * diag_max.max(1e-300));
                }
            }
            let mut rhs = -grad.clone();
            for j in 0..n {
                if active[j] {
                    rhs[j] = 0.0;
                }
            }
            let step = match a.clone().cholesky() {
                Some(ch) => ch.solve(&rhs),
                None => match a.lu().solve(&rhs) {
                    Some(s) => s,
                    None => {
                        damping *= nu;
                        nu *= 2.0;
                        continue;
                    }
                },
            };
            let mut trial = x.clone();
            for j in 0..n {
                trial[j] += step[j];
            }
            clamp(&mut trial);
            let actual_step: Vec<f64> = (0..n).map(|j| trial[j] - x[j]).collect();
            let rt = residual(&trial);
            let trial_cost = if finite(&rt) { cost_of(&rt) } else { f64::INFINITY };
            let s = DVector::from_column_slice(&actual_step);
            let predicted = -(grad.dot(&s) + 0.5 * (s.transpose() * &jtj * &s)[(0, 0)]);
            let rho = if predicted > 0.0 {
                (cost - trial_cost) / predicted
            } else {
                -1.0
            };
            if trial_cost < cost && rho > 0.0 {
                let reduction = (cost - trial_cost) / cost.max(1e-300);
                let small_step = (0..n).all(|j| actual_step[j].abs() <= opts.step_tol * x[j].abs().max(1e-8));
                x = trial;
                r = rt;
                cost = trial_cost;
                damping *= (1.0f64 / 3.0).max(1.0 - (2.0 * rho - 1.0).powi(3));
                nu = 2.0;
                accepted = true;
                if cost <= opts.cost_tol || reduction <= opts.reduction_tol || small_step {
                    converged = true;
                }
                break;
            }
            damping *= nu;
            nu *= 2.0;
            if damping > 1e30 {
                break;
            }
        }
        mu = Some(damping);
        if !accepted {
            // no descent step exists at working precision
            converged = true;
            break;
        }
    }

    Some(LmOutcome {
        x,
        residuals: r,
        cost,
        iterations,
        converged,
    })
}
