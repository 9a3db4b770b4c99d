//! Damped least-squares (Levenberg–Marquardt) engine shared by the curve
//! fitters.
//!
//! Weighted residuals when per-point uncertainties are available, ordinary
//! least squares with a flag otherwise. Parameter uncertainties come from
//! the curvature at the solution: `(JᵀWJ)⁻¹` for weighted fits, scaled by
//! the reduced χ² for unweighted ones.

use nalgebra::{DMatrix, DVector};

/// Outcome of one damped least-squares run.
#[derive(Debug, Clone)]
pub struct LevMarOutcome {
    pub params: Vec<f64>,
    pub sigmas: Vec<f64>,
    pub covariance: DMatrix<f64>,
    pub reduced_chi2: f64,
    pub converged: bool,
    pub iterations: usize,
    /// True when per-point σ weighted the fit.
    pub weighted: bool,
    /// Parameters that finished pinned at a bound.
    pub at_bound: Vec<bool>,
}

pub struct LevMarConfig {
    pub max_iterations: usize,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl LevMarConfig {
    pub fn unbounded(n_params: usize) -> Self {
        LevMarConfig {
            max_iterations: 500,
            lower: vec![f64::NEG_INFINITY; n_params],
            upper: vec![f64::INFINITY; n_params],
        }
    }
}

/// Minimize Σ ((y_i − f(p, x_i))/σ_i)² starting from `init`.
///
/// `jacobian(p, x, out)` fills ∂f/∂p_j at one point.
pub fn levenberg_marquardt<F, J>(
    f: F,
    jacobian: J,
    x: &[f64],
    y: &[f64],
    sigma: Option<&[f64]>,
    init: &[f64],
    config: &LevMarConfig,
) -> LevMarOutcome
where
    F: Fn(&[f64], f64) -> f64,
    J: Fn(&[f64], f64, &mut [f64]),
{
    let n = x.len();
    let np = init.len();
    let weighted = sigma.map_or(false, |s| s.iter().all(|&v| v > 0.0));
    let weight = |i: usize| -> f64 {
        if weighted {
            1.0 / sigma.unwrap()[i]
        } else {
            1.0
        }
    };

    let clamp = |p: &mut [f64]| {
        for (k, v) in p.iter_mut().enumerate() {
            *v = v.clamp(config.lower[k], config.upper[k]);
        }
    };

    let chi2_of = |p: &[f64]| -> f64 {
        (0..n)
            .map(|i| {
                let r = (y[i] - f(p, x[i])) * weight(i);
                r * r
            })
            .sum()
    };

    let mut params = init.to_vec();
    clamp(&mut params);
    let mut chi2 = chi2_of(&params);
    let mut lambda = 1.0e-3;
    let mut converged = false;
    let mut iterations = 0;
    let mut jrow = vec![0.0; np];

    for iter in 0..config.max_iterations {
        iterations = iter + 1;

        // Assemble JᵀJ and Jᵀr with weights folded in.
        let mut jtj = DMatrix::<f64>::zeros(np, np);
        let mut jtr = DVector::<f64>::zeros(np);
        for i in 0..n {
            let w = weight(i);
            jacobian(&params, x[i], &mut jrow);
            let r = (y[i] - f(&params, x[i])) * w;
            for a in 0..np {
                let ja = jrow[a] * w;
                jtr[a] += ja * r;
                for b in a..np {
                    jtj[(a, b)] += ja * jrow[b] * w;
                }
            }
        }
        for a in 0..np {
            for b in 0..a {
                jtj[(a, b)] = jtj[(b, a)];
            }
        }

        let grad_norm = jtr.amax();
        if grad_norm < 1e-12 * (1.0 + chi2) {
            converged = true;
            break;
        }

        let mut improved = false;
        for _ in 0..24 {
            let mut damped = jtj.clone();
            for k in 0..np {
                damped[(k, k)] += lambda * jtj[(k, k)].max(1e-30);
            }
            let step = match damped.clone().cholesky() {
                Some(ch) => ch.solve(&jtr),
                None => {
                    lambda *= 10.0;
                    continue;
                }
            };
            let mut trial: Vec<f64> = params
                .iter()
                .zip(step.iter())
                .map(|(p, s)| p + s)
                .collect();
            clamp(&mut trial);
            let trial_chi2 = chi2_of(&trial);
            if trial_chi2.is_finite() && trial_chi2 <= chi2 {
                let rel_drop = (chi2 - trial_chi2) / chi2.max(1e-300);
                let step_small = step
                    .iter()
                    .zip(params.iter())
                    .all(|(s, p)| s.abs() <= 1e-10 * (p.abs() + 1e-30));
                params = trial;
                chi2 = trial_chi2;
                lambda = (lambda / 3.0).max(1e-12);
                improved = true;
                if rel_drop < 1e-12 || step_small {
                    converged = true;
                }
                break;
            }
            lambda *= 10.0;
            if lambda > 1e14 {
                break;
            }
        }
        if converged {
            break;
        }
        if !improved {
            // Stuck: either at a minimum the damping cannot improve, or the
            // problem is degenerate.
            converged = chi2.is_finite() && grad_norm < 1e-6 * (1.0 + chi2);
            break;
        }
    }

    // Curvature-based covariance at the final iterate.
    let mut jtj = DMatrix::<f64>::zeros(np, np);
    for i in 0..n {
        let w = weight(i);
        jacobian(&params, x[i], &mut jrow);
        for a in 0..np {
            for b in a..np {
                jtj[(a, b)] += jrow[a] * jrow[b] * w * w;
            }
        }
    }
    for a in 0..np {
        for b in 0..a {
            jtj[(a, b)] = jtj[(b, a)];
        }
    }
    let dof = n.saturating_sub(np).max(1) as f64;
    let scale = if weighted { 1.0 } else { chi2 / dof };
    // Equilibrate to unit diagonal before inverting: parameter scales can
    // differ by many orders of magnitude and a raw SVD tolerance would
    // truncate genuinely constrained directions.
    let d: Vec<f64> = (0..np)
        .map(|k| jtj[(k, k)].max(1e-300).sqrt().recip())
        .collect();
    let mut scaled = DMatrix::<f64>::zeros(np, np);
    for a in 0..np {
        for b in 0..np {
            scaled[(a, b)] = jtj[(a, b)] * d[a] * d[b];
        }
    }
    let inv_scaled = pseudo_inverse(&scaled);
    let mut covariance = DMatrix::<f64>::zeros(np, np);
    for a in 0..np {
        for b in 0..np {
            covariance[(a, b)] = inv_scaled[(a, b)] * d[a] * d[b] * scale;
        }
    }
    let sigmas: Vec<f64> = (0..np)
        .map(|k| covariance[(k, k)].max(0.0).sqrt())
        .collect();
    let at_bound: Vec<bool> = params
        .iter()
        .enumerate()
        .map(|(k, &p)| {
            let span = (config.upper[k] - config.lower[k]).abs();
            let eps = 1e-9 * span.min(1e12) + 1e-300;
            (p - config.lower[k]).abs() < eps || (p - config.upper[k]).abs() < eps
        })
        .collect();

    LevMarOutcome {
        params,
        sigmas,
        covariance,
        reduced_chi2: chi2 / dof,
        converged,
        iterations,
        weighted,
        at_bound,
    }
}

fn pseudo_inverse(m: &DMatrix<f64>) -> DMatrix<f64> {
    let svd = m.clone().svd(true, true);
    let tol = 1e-12 * svd.singular_values.max();
    match svd.pseudo_inverse(tol) {
        Ok(inv) => {
            // symmetrize against roundoff
            let sym = (&inv + inv.transpose()) * 0.5;
            sym
        }
        Err(_) => DMatrix::zeros(m.nrows(), m.ncols()),
    }
}

/// Numerical Jacobian fallback for models without analytic derivatives.
pub fn numeric_jacobian<F>(f: F) -> impl Fn(&[f64], f64, &mut [f64])
where
    F: Fn(&[f64], f64) -> f64,
{
    move |p: &[f64], x: f64, out: &mut [f64]| {
        let mut local = p.to_vec();
        for k in 0..p.len() {
            let h = 1e-7 * p[k].abs().max(1e-7);
            local[k] = p[k] + h;
            let hi = f(&local, x);
            local[k] = p[k] - h;
            let lo = f(&local, x);
            local[k] = p[k];
            out[k] = (hi - lo) / (2.0 * h);
        }
    }
}
