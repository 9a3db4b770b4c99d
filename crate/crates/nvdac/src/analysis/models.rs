//! Curve models fitted throughout the pipeline: multi-dip Lorentzians for
//! spectra, exponentially damped cosines for Rabi/FID traces, plain
//! exponentials for relaxation.

use nalgebra::DMatrix;

use super::levmar::{levenberg_marquardt, LevMarConfig, LevMarOutcome};
use super::AnalysisError;

/// Fitted parameters with uncertainties and goodness of fit.
#[derive(Debug, Clone)]
pub struct FitResult {
    pub names: Vec<String>,
    pub values: Vec<f64>,
    pub sigmas: Vec<f64>,
    pub covariance: DMatrix<f64>,
    pub reduced_chi2: f64,
    pub converged: bool,
    pub iterations: usize,
    /// True when per-point uncertainties weighted the fit; false marks the
    /// ordinary-least-squares fallback.
    pub weighted: bool,
    pub warnings: Vec<String>,
}

impl FitResult {
    pub fn value(&self, name: &str) -> Option<f64> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|k| self.values[k])
    }

    pub fn sigma(&self, name: &str) -> Option<f64> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|k| self.sigmas[k])
    }

    fn from_outcome(names: Vec<String>, out: LevMarOutcome, warnings: Vec<String>) -> Self {
        FitResult {
            names,
            values: out.params,
            sigmas: out.sigmas,
            covariance: out.covariance,
            reduced_chi2: out.reduced_chi2,
            converged: out.converged,
            iterations: out.iterations,
            weighted: out.weighted,
            warnings,
        }
    }
}

fn moving_average(y: &[f64], window: usize) -> Vec<f64> {
    let n = y.len();
    let half = window / 2;
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(n);
            y[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
        })
        .collect()
}

/// Lorentzian dip spectrum model:
/// `y = b − Σ aᵢ·(wᵢ/2)² / ((x−x₀ᵢ)² + (wᵢ/2)²)`.
/// Parameter layout: `[baseline, (center, fwhm, amplitude)·n]`.
pub fn lorentzian_model(p: &[f64], x: f64) -> f64 {
    let mut y = p[0];
    for dip in p[1..].chunks_exact(3) {
        let (x0, w, a) = (dip[0], dip[1], dip[2]);
        let hw2 = (w / 2.0) * (w / 2.0);
        y -= a * hw2 / ((x - x0).powi(2) + hw2);
    }
    y
}

fn lorentzian_jacobian(p: &[f64], x: f64, out: &mut [f64]) {
    out[0] = 1.0;
    for (k, dip) in p[1..].chunks_exact(3).enumerate() {
        let (x0, w, a) = (dip[0], dip[1], dip[2]);
        let hw2 = (w / 2.0) * (w / 2.0);
        let d = (x - x0).powi(2) + hw2;
        let base = 3 * k + 1;
        out[base] = -a * 2.0 * (x - x0) * hw2 / (d * d);
        out[base + 1] = -a * (w / 2.0) * (x - x0).powi(2) / (d * d);
        out[base + 2] = -hw2 / d;
    }
}

/// Smoothed-minima auto-initialization: window-5 moving average, local
/// minima ranked by depth below the upper-quantile baseline.
fn init_lorentzian(x: &[f64], y: &[f64], n_dips: usize) -> Result<Vec<f64>, AnalysisError> {
    let smooth = moving_average(y, 5);
    let mut sorted = smooth.clone();
    sorted.sort_by(f64::total_cmp);
    let top_start = sorted.len() - (sorted.len() / 4).max(1);
    let baseline = sorted[top_start..].iter().sum::<f64>() / (sorted.len() - top_start) as f64;
    let global_depth = baseline - sorted[0];
    if global_depth <= 0.0 {
        return Err(AnalysisError::Initialization(
            "spectrum is flat: no dips to initialize from".into(),
        ));
    }

    let mut minima: Vec<(usize, f64)> = Vec::new();
    for i in 1..smooth.len() - 1 {
        if smooth[i] <= smooth[i - 1] && smooth[i] <= smooth[i + 1] {
            let depth = baseline - smooth[i];
            if depth > 0.2 * global_depth {
                // merge plateau neighbours
                if let Some(last) = minima.last() {
                    if i - last.0 <= 2 {
                        continue;
                    }
                }
                minima.push((i, depth));
            }
        }
    }
    if minima.len() < n_dips {
        return Err(AnalysisError::Initialization(format!(
            "detected {} candidate dips, need {n_dips}",
            minima.len()
        )));
    }
    minima.sort_by(|a, b| b.1.total_cmp(&a.1));
    let mut chosen: Vec<(usize, f64)> = minima.into_iter().take(n_dips).collect();
    chosen.sort_by_key(|&(i, _)| i);

    let dx = (x[x.len() - 1] - x[0]) / (x.len() - 1) as f64;
    let mut params = vec![baseline];
    for &(i, depth) in &chosen {
        let half = baseline - depth / 2.0;
        let mut left = i;
        while left > 0 && smooth[left] < half {
            left -= 1;
        }
        let mut right = i;
        while right < smooth.len() - 1 && smooth[right] < half {
            right += 1;
        }
        let width = ((x[right] - x[left]).abs()).max(2.0 * dx.abs());
        params.extend_from_slice(&[x[i], width, depth]);
    }
    Ok(params)
}

/// Fit `n_dips` Lorentzian dips on a shared baseline. Dips in the result
/// are ordered by ascending center.
pub fn fit_lorentzian(
    x: &[f64],
    y: &[f64],
    sigma: Option<&[f64]>,
    n_dips: usize,
    init: Option<Vec<f64>>,
) -> Result<FitResult, AnalysisError> {
    if n_dips == 0 {
        return Err(AnalysisError::InvalidInput("n_dips must be ≥ 1".into()));
    }
    let needed = 5 * (3 * n_dips + 1);
    if x.len() < needed || x.len() != y.len() {
        return Err(AnalysisError::TooFewPoints {
            needed,
            got: x.len(),
        });
    }
    let init = match init {
        Some(v) => {
            if v.len() != 3 * n_dips + 1 {
                return Err(AnalysisError::InvalidInput(format!(
                    "init needs {} parameters, got {}",
                    3 * n_dips + 1,
                    v.len()
                )));
            }
            v
        }
        None => init_lorentzian(x, y, n_dips)?,
    };

    let span = x[x.len() - 1] - x[0];
    let dx = span / (x.len() - 1) as f64;
    let mut config = LevMarConfig::unbounded(init.len());
    for k in 0..n_dips {
        let base = 3 * k + 1;
        config.lower[base] = x[0] - 0.1 * span;
        config.upper[base] = x[x.len() - 1] + 0.1 * span;
        config.lower[base + 1] = dx.abs() / 4.0;
        config.upper[base + 1] = 10.0 * span.abs();
        config.lower[base + 2] = 0.0;
    }

    let out = levenberg_marquardt(
        lorentzian_model,
        lorentzian_jacobian,
        x,
        y,
        sigma,
        &init,
        &config,
    );

    // Order dips by ascending center, permuting covariance alongside.
    let mut order: Vec<usize> = (0..n_dips).collect();
    order.sort_by(|&a, &b| out.params[3 * a + 1].total_cmp(&out.params[3 * b + 1]));
    let mut perm = vec![0usize];
    for &k in &order {
        perm.extend_from_slice(&[3 * k + 1, 3 * k + 2, 3 * k + 3]);
    }
    let values: Vec<f64> = perm.iter().map(|&i| out.params[i]).collect();
    let sigmas: Vec<f64> = perm.iter().map(|&i| out.sigmas[i]).collect();
    let mut covariance = DMatrix::<f64>::zeros(perm.len(), perm.len());
    for (a, &ia) in perm.iter().enumerate() {
        for (b, &ib) in perm.iter().enumerate() {
            covariance[(a, b)] = out.covariance[(ia, ib)];
        }
    }

    let mut names = vec!["baseline".to_string()];
    for k in 1..=n_dips {
        names.push(format!("center{k}"));
        names.push(format!("fwhm{k}"));
        names.push(format!("amp{k}"));
    }
    let mut warnings = Vec::new();
    if !out.weighted && sigma.is_some() {
        warnings.push("per-point sigmas ignored (non-positive values); ordinary least squares".into());
    }
    Ok(FitResult {
        names,
        values,
        sigmas,
        covariance,
        reduced_chi2: out.reduced_chi2,
        converged: out.converged,
        iterations: out.iterations,
        weighted: out.weighted,
        warnings,
    })
}

/// Damped cosine `y = offset + A·exp(−t/T)·cos(2πft + φ)`.
/// Parameters: `[offset, amplitude, frequency, decay_time, phase]`.
pub fn damped_cosine_model(p: &[f64], t: f64) -> f64 {
    p[0] + p[1] * (-t / p[3]).exp() * (2.0 * std::f64::consts::PI * p[2] * t + p[4]).cos()
}

fn damped_cosine_jacobian(p: &[f64], t: f64, out: &mut [f64]) {
    let tau = 2.0 * std::f64::consts::PI;
    let env = (-t / p[3]).exp();
    let arg = tau * p[2] * t + p[4];
    let (sin, cos) = arg.sin_cos();
    out[0] = 1.0;
    out[1] = env * cos;
    out[2] = -p[1] * env * sin * tau * t;
    out[3] = p[1] * env * cos * t / (p[3] * p[3]);
    out[4] = -p[1] * env * sin;
}

/// Remove the best-fit line so slow baseline drifts (relaxation riding
/// under the oscillation) do not dominate the spectrum.
fn linear_detrend(t: &[f64], y: &[f64]) -> Vec<f64> {
    let n = t.len() as f64;
    let tm = t.iter().sum::<f64>() / n;
    let ym = y.iter().sum::<f64>() / n;
    let sxx: f64 = t.iter().map(|&v| (v - tm) * (v - tm)).sum();
    let sxy: f64 = t.iter().zip(y).map(|(&v, &w)| (v - tm) * (w - ym)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    t.iter()
        .zip(y)
        .map(|(&v, &w)| w - ym - slope * (v - tm))
        .collect()
}

/// Dominant frequency of the detrended trace from a dense periodogram.
fn dominant_frequency(t: &[f64], y: &[f64]) -> Result<f64, AnalysisError> {
    let n = y.len();
    let resid = linear_detrend(t, y);
    let span = t[n - 1] - t[0];
    let mut best = (0.0f64, 0.0f64);
    let mut powers = Vec::new();
    let kmax = n / 2;
    for k in 1..=kmax {
        let f = k as f64 / span;
        let tau = 2.0 * std::f64::consts::PI * f;
        let (mut cs, mut ss) = (0.0, 0.0);
        for i in 0..n {
            let (s, c) = (tau * t[i]).sin_cos();
            cs += resid[i] * c;
            ss += resid[i] * s;
        }
        let p = cs * cs + ss * ss;
        powers.push(p);
        if p > best.1 {
            best = (f, p);
        }
    }
    powers.sort_by(f64::total_cmp);
    let median = powers[powers.len() / 2];
    if best.1 < 6.0 * median.max(1e-300) {
        return Err(AnalysisError::Initialization(
            "no dominant oscillation frequency in trace".into(),
        ));
    }
    Ok(best.0)
}

/// Fit a decaying oscillation. Frequency is initialized from the dominant
/// periodogram peak when no explicit init is given.
pub fn fit_damped_cosine(
    t: &[f64],
    y: &[f64],
    sigma: Option<&[f64]>,
    init: Option<Vec<f64>>,
) -> Result<FitResult, AnalysisError> {
    if t.len() < 10 || t.len() != y.len() {
        return Err(AnalysisError::TooFewPoints {
            needed: 10,
            got: t.len(),
        });
    }
    let span = t[t.len() - 1] - t[0];
    let dt = span / (t.len() - 1) as f64;
    let init = match init {
        Some(v) => v,
        None => {
            let f0 = dominant_frequency(t, y)?;
            let mean = y.iter().sum::<f64>() / y.len() as f64;
            let tau = 2.0 * std::f64::consts::PI * f0;
            let (mut cs, mut ss) = (0.0, 0.0);
            for i in 0..t.len() {
                let (s, c) = (tau * t[i]).sin_cos();
                cs += (y[i] - mean) * c;
                ss += (y[i] - mean) * s;
            }
            let amp = 2.0 * (cs * cs + ss * ss).sqrt() / t.len() as f64;
            let phase = (-ss).atan2(cs);
            vec![mean, amp, f0, span / 2.0, phase]
        }
    };

    let mut config = LevMarConfig::unbounded(5);
    config.lower[1] = 0.0;
    config.lower[2] = 0.0;
    config.upper[2] = 0.5 / dt;
    config.lower[3] = dt / 2.0;
    config.upper[3] = 50.0 * span;

    let out = levenberg_marquardt(
        damped_cosine_model,
        damped_cosine_jacobian,
        t,
        y,
        sigma,
        &init,
        &config,
    );
    let mut warnings = Vec::new();
    if out.at_bound[3] {
        warnings.push(format!(
            "decay time pinned at the fit bound ({:.3e} s): decay not resolved by this trace",
            out.params[3]
        ));
    }
    let mut result = FitResult::from_outcome(
        vec![
            "offset".into(),
            "amplitude".into(),
            "frequency".into(),
            "decay_time".into(),
            "phase".into(),
        ],
        out,
        warnings,
    );
    // canonical phase in [−π, π)
    let p = &mut result.values[4];
    *p = (*p + std::f64::consts::PI).rem_euclid(2.0 * std::f64::consts::PI) - std::f64::consts::PI;
    Ok(result)
}

/// Exponential decay `y = offset + A·exp(−t/T)`.
/// Parameters: `[offset, amplitude, decay_time]`.
pub fn exponential_model(p: &[f64], t: f64) -> f64 {
    p[0] + p[1] * (-t / p[2]).exp()
}

fn exponential_jacobian(p: &[f64], t: f64, out: &mut [f64]) {
    let env = (-t / p[2]).exp();
    out[0] = 1.0;
    out[1] = env;
    out[2] = p[1] * env * t / (p[2] * p[2]);
}

pub fn fit_exponential(
    t: &[f64],
    y: &[f64],
    sigma: Option<&[f64]>,
    init: Option<Vec<f64>>,
) -> Result<FitResult, AnalysisError> {
    if t.len() < 5 || t.len() != y.len() {
        return Err(AnalysisError::TooFewPoints {
            needed: 5,
            got: t.len(),
        });
    }
    let span = t[t.len() - 1] - t[0];
    let dt = span / (t.len() - 1) as f64;
    let init = match init {
        Some(v) => v,
        None => {
            let tail = &y[y.len() - (y.len() / 10).max(1)..];
            let offset = tail.iter().sum::<f64>() / tail.len() as f64;
            vec![offset, y[0] - offset, span / 3.0]
        }
    };
    let mut config = LevMarConfig::unbounded(3);
    config.lower[2] = dt / 10.0;
    config.upper[2] = 100.0 * span;

    let out = levenberg_marquardt(
        exponential_model,
        exponential_jacobian,
        t,
        y,
        sigma,
        &init,
        &config,
    );
    let mut warnings = Vec::new();
    let spread = y.iter().cloned().fold(f64::MIN, f64::max)
        - y.iter().cloned().fold(f64::MAX, f64::min);
    if out.params[1].abs() < 1e-3 * spread.abs().max(1e-300) || out.sigmas[2] > out.params[2].abs()
    {
        warnings.push("amplitude consistent with zero: decay time unidentifiable".into());
    }
    if out.at_bound[2] {
        warnings.push("decay time pinned at the fit bound".into());
    }
    Ok(FitResult::from_outcome(
        vec!["offset".into(), "amplitude".into(), "decay_time".into()],
        out,
        warnings,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn noiseless_single_dip_recovered_exactly() {
        let x: Vec<f64> = (0..151)
            .map(|k| 4.8e6 + 0.3e6 * k as f64 / 150.0)
            .collect();
        let truth = [1.0, 4.94e6, 30.0e3, 0.18];
        let y: Vec<f64> = x.iter().map(|&v| lorentzian_model(&truth, v)).collect();
        let fit = fit_lorentzian(&x, &y, None, 1, None).unwrap();
        assert!(fit.converged);
        assert_relative_eq!(fit.value("center1").unwrap(), 4.94e6, max_relative = 1e-6);
        assert_relative_eq!(fit.value("fwhm1").unwrap(), 30.0e3, max_relative = 1e-4);
        assert_relative_eq!(fit.value("amp1").unwrap(), 0.18, max_relative = 1e-4);
        assert_relative_eq!(fit.value("baseline").unwrap(), 1.0, max_relative = 1e-6);
    }

    #[test]
    fn four_dips_ordered_by_center() {
        let x: Vec<f64> = (0..400).map(|k| k as f64).collect();
        let truth = [
            10.0, 80.0, 12.0, 3.0, 160.0, 10.0, 2.0, 240.0, 14.0, 4.0, 330.0, 9.0, 2.5,
        ];
        let y: Vec<f64> = x.iter().map(|&v| lorentzian_model(&truth, v)).collect();
        let fit = fit_lorentzian(&x, &y, None, 4, None).unwrap();
        let centers: Vec<f64> = (1..=4)
            .map(|k| fit.value(&format!("center{k}")).unwrap())
            .collect();
        for w in centers.windows(2) {
            assert!(w[0] < w[1]);
        }
        for (got, want) in centers.iter().zip([80.0, 160.0, 240.0, 330.0]) {
            assert_relative_eq!(*got, want, epsilon = 0.05);
        }
    }

    #[test]
    fn too_many_dips_requested_fails_initialization() {
        let x: Vec<f64> = (0..200).map(|k| k as f64).collect();
        let truth = [1.0, 100.0, 8.0, 0.4];
        let y: Vec<f64> = x.iter().map(|&v| lorentzian_model(&truth, v)).collect();
        assert!(matches!(
            fit_lorentzian(&x, &y, None, 3, None),
            Err(AnalysisError::Initialization(_))
        ));
    }

    #[test]
    fn noisy_dip_center_within_two_sigma_mostly() {
        // Monte-Carlo calibration of the fitter at SNR comparable to the
        // measured spectra.
        let x: Vec<f64> = (0..151)
            .map(|k| 4.8e6 + 0.3e6 * k as f64 / 150.0)
            .collect();
        let truth = [1.0, 4.94e6, 30.0e3, 0.18];
        let noise = 0.006;
        let mut hits = 0;
        let trials = 200;
        for seed in 0..trials {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let y: Vec<f64> = x
                .iter()
                .map(|&v| {
                    lorentzian_model(&truth, v) + noise * rng.random_range(-1.73..1.73)
                })
                .collect();
            let sigma = vec![noise; x.len()];
            let fit = fit_lorentzian(&x, &y, Some(&sigma), 1, None).unwrap();
            let err = (fit.value("center1").unwrap() - 4.94e6).abs();
            if err < 2.0 * fit.sigma("center1").unwrap() {
                hits += 1;
            }
        }
        assert!(
            hits as f64 >= 0.95 * trials as f64,
            "2σ coverage {hits}/{trials}"
        );
    }

    #[test]
    fn damped_cosine_exact_recovery() {
        let t: Vec<f64> = (0..200).map(|k| k as f64 * 1.0e-9).collect();
        let truth = [0.8, 0.15, 62.0e6, 90.0e-9, 0.3];
        let y: Vec<f64> = t.iter().map(|&v| damped_cosine_model(&truth, v)).collect();
        let fit = fit_damped_cosine(&t, &y, None, None).unwrap();
        assert!(fit.converged);
        assert_relative_eq!(fit.value("frequency").unwrap(), 62.0e6, max_relative = 1e-6);
        assert_relative_eq!(fit.value("decay_time").unwrap(), 90.0e-9, max_relative = 1e-3);
    }

    #[test]
    fn pure_cosine_pins_decay_at_bound() {
        let t: Vec<f64> = (0..300).map(|k| k as f64 * 1.0e-6).collect();
        let y: Vec<f64> = t
            .iter()
            .map(|&v| 0.5 + 0.2 * (2.0 * std::f64::consts::PI * 25.0e3 * v).cos())
            .collect();
        let fit = fit_damped_cosine(&t, &y, None, None).unwrap();
        assert!(
            !fit.warnings.is_empty(),
            "expected an at-bound warning for undamped input"
        );
    }

    #[test]
    fn flat_trace_fails_frequency_init() {
        let t: Vec<f64> = (0..100).map(|k| k as f64).collect();
        let y = vec![1.0; 100];
        assert!(matches!(
            fit_damped_cosine(&t, &y, None, None),
            Err(AnalysisError::Initialization(_))
        ));
    }

    #[test]
    fn exponential_exact_recovery() {
        let t: Vec<f64> = (0..80).map(|k| k as f64 * 10.0e-6).collect();
        let truth = [0.7, 0.25, 254.0e-6];
        let y: Vec<f64> = t.iter().map(|&v| exponential_model(&truth, v)).collect();
        let fit = fit_exponential(&t, &y, None, None).unwrap();
        assert!(fit.converged);
        assert_relative_eq!(
            fit.value("decay_time").unwrap(),
            254.0e-6,
            max_relative = 1e-6
        );
    }

    #[test]
    fn constant_trace_flags_unidentifiable_decay() {
        let t: Vec<f64> = (0..50).map(|k| k as f64).collect();
        let y = vec![2.0; 50];
        let fit = fit_exponential(&t, &y, None, None).unwrap();
        assert!(!fit.warnings.is_empty());
        assert!(fit.value("amplitude").unwrap().abs() < 1e-6);
    }

    #[test]
    fn coverage_calibration_all_fitters() {
        // The reported 1σ must cover truth with frequency 0.68 ± 0.05.
        let trials = 600;
        let mut hits = [0usize; 3];
        for seed in 0..trials {
            let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
            let mut noise = |scale: f64| -> f64 {
                // sum of uniforms ≈ gaussian
                let s: f64 = (0..12).map(|_| rng.random_range(-0.5..0.5)).sum();
                s * scale
            };

            // Lorentzian center
            let x: Vec<f64> = (0..151).map(|k| -75.0 + k as f64).collect();
            let truth = [1.0, 3.0, 18.0, 0.2];
            let sig = 0.008;
            let y: Vec<f64> = x
                .iter()
                .map(|&v| lorentzian_model(&truth, v) + noise(sig))
                .collect();
            let s = vec![sig; x.len()];
            if let Ok(fit) = fit_lorentzian(&x, &y, Some(&s), 1, None) {
                if (fit.value("center1").unwrap() - 3.0).abs() < fit.sigma("center1").unwrap() {
                    hits[0] += 1;
                }
            }

            // Damped cosine frequency
            let t: Vec<f64> = (0..160).map(|k| k as f64 * 1.2e-6).collect();
            let truth_c = [0.9, 0.1, 25.0e3, 70.0e-6, 0.0];
            let sig_c = 0.004;
            let yc: Vec<f64> = t
                .iter()
                .map(|&v| damped_cosine_model(&truth_c, v) + noise(sig_c))
                .collect();
            let sc = vec![sig_c; t.len()];
            if let Ok(fit) = fit_damped_cosine(&t, &yc, Some(&sc), None) {
                if (fit.value("frequency").unwrap() - 25.0e3).abs()
                    < fit.sigma("frequency").unwrap()
                {
                    hits[1] += 1;
                }
            }

            // Exponential decay time
            let te: Vec<f64> = (0..150).map(|k| k as f64 * 8.5e-6).collect();
            let truth_e = [0.75, 0.2, 254.0e-6];
            let sig_e = 0.005;
            let ye: Vec<f64> = te
                .iter()
                .map(|&v| exponential_model(&truth_e, v) + noise(sig_e))
                .collect();
            let se = vec![sig_e; te.len()];
            if let Ok(fit) = fit_exponential(&te, &ye, Some(&se), None) {
                if (fit.value("decay_time").unwrap() - 254.0e-6).abs()
                    < fit.sigma("decay_time").unwrap()
                {
                    hits[2] += 1;
                }
            }
        }
        for (k, name) in ["lorentzian", "damped_cosine", "exponential"]
            .iter()
            .enumerate()
        {
            let rate = hits[k] as f64 / trials as f64;
            assert!(
                (rate - 0.68).abs() < 0.05,
                "{name}: 1σ coverage {rate:.3} outside 0.68 ± 0.05"
            );
        }
    }
}
