//! Physical-parameter extraction: quadrupole/hyperfine couplings from the
//! two nuclear resonances, weighted linear pressure trends, spectrum
//! contrast.

use super::models::{fit_lorentzian, FitResult};
use super::AnalysisError;

/// A value with its 1σ uncertainty.
pub type Measured = (f64, f64);

/// Couplings extracted from one pressure point.
#[derive(Debug, Clone)]
pub struct QaExtraction {
    pub q_abs: f64,
    pub q_sigma: f64,
    pub a_par_abs: f64,
    pub a_par_sigma: f64,
    /// Set when |A∥| falls outside the plausible 1–3 MHz window.
    pub warning: Option<String>,
}

/// |Q| and |A∥| from the two nuclear resonance frequencies:
/// `|Q| = |f_RF0 − γₙB|`, `|A∥| = |f_RF1 − f_RF0|`, uncertainties in
/// quadrature.
pub fn extract_qa(
    f_rf0: Measured,
    f_rf1: Measured,
    b_gauss: Measured,
    gamma_n: f64,
) -> QaExtraction {
    let q_abs = (f_rf0.0 - gamma_n * b_gauss.0).abs();
    let q_sigma = (f_rf0.1.powi(2) + (gamma_n * b_gauss.1).powi(2)).sqrt();
    let a_par_abs = (f_rf1.0 - f_rf0.0).abs();
    let a_par_sigma = (f_rf0.1.powi(2) + f_rf1.1.powi(2)).sqrt();
    let warning = if !(1.0e6..=3.0e6).contains(&a_par_abs) {
        Some(format!(
            "|A∥| = {:.3} MHz outside the plausible 1–3 MHz window",
            a_par_abs / 1e6
        ))
    } else {
        None
    };
    QaExtraction {
        q_abs,
        q_sigma,
        a_par_abs,
        a_par_sigma,
        warning,
    }
}

/// Extraction summary of one pressure point, as written to the CSV table.
#[derive(Debug, Clone)]
pub struct ExtractionRecord {
    pub pressure_gpa: f64,
    pub f_rf0: Measured,
    pub f_rf1: Measured,
    pub q_abs: Measured,
    pub a_par_abs: Measured,
    pub fwhm0: Measured,
    pub fwhm1: Measured,
}

/// Weighted straight-line fit.
#[derive(Debug, Clone, Copy)]
pub struct TrendFit {
    pub slope: f64,
    pub slope_sigma: f64,
    pub intercept: f64,
    pub intercept_sigma: f64,
    /// False marks the equal-weight fallback used when σ are missing.
    pub weighted: bool,
}

/// Weighted least-squares line through `(x, y ± σ)` points. Falls back to
/// equal weights when any σ is non-positive.
pub fn linear_trend(points: &[(f64, f64, f64)]) -> Result<TrendFit, AnalysisError> {
    if points.len() < 3 {
        return Err(AnalysisError::TooFewPoints {
            needed: 3,
            got: points.len(),
        });
    }
    let weighted = points.iter().all(|&(_, _, s)| s > 0.0);
    let w = |s: f64| -> f64 {
        if weighted {
            1.0 / (s * s)
        } else {
            1.0
        }
    };
    let (mut sw, mut swx, mut swy, mut swxx, mut swxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &(x, y, s) in points {
        let wi = w(s);
        sw += wi;
        swx += wi * x;
        swy += wi * y;
        swxx += wi * x * x;
        swxy += wi * x * y;
    }
    let delta = sw * swxx - swx * swx;
    if delta.abs() < 1e-300 {
        return Err(AnalysisError::InvalidInput(
            "degenerate abscissa: all x equal".into(),
        ));
    }
    let slope = (sw * swxy - swx * swy) / delta;
    let intercept = (swxx * swy - swx * swxy) / delta;

    let (mut slope_var, mut intercept_var) = (sw / delta, swxx / delta);
    if !weighted {
        // scale by the residual variance
        let dof = (points.len() - 2).max(1) as f64;
        let ss: f64 = points
            .iter()
            .map(|&(x, y, _)| (y - slope * x - intercept).powi(2))
            .sum();
        let s2 = ss / dof;
        slope_var *= s2;
        intercept_var *= s2;
    }
    Ok(TrendFit {
        slope,
        slope_sigma: slope_var.sqrt(),
        intercept,
        intercept_sigma: intercept_var.sqrt(),
        weighted,
    })
}

/// Dip depth over baseline of a single-dip spectrum; 0 for a flat spectrum.
pub fn spectrum_contrast(x: &[f64], y: &[f64], sigma: Option<&[f64]>) -> f64 {
    match fit_lorentzian(x, y, sigma, 1, None) {
        Ok(fit) => {
            let b = fit.value("baseline").unwrap_or(0.0);
            let a = fit.value("amp1").unwrap_or(0.0);
            if b.abs() < 1e-300 {
                0.0
            } else {
                (a / b).max(0.0)
            }
        }
        Err(_) => 0.0,
    }
}

/// Contrast from an already-fitted single-dip result.
pub fn contrast_from_fit(fit: &FitResult) -> Option<f64> {
    let b = fit.value("baseline")?;
    let a = fit.value("amp1")?;
    if b.abs() < 1e-300 {
        None
    } else {
        Some(a / b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn qa_extraction_paper_values() {
        let gamma_n = 307.7;
        let b = 460.0;
        let f0 = 4.94e6 + gamma_n * b;
        let f1 = f0 + 2.16e6;
        let out = extract_qa((f0, 300.0), (f1, 400.0), (b, 0.0), gamma_n);
        assert_relative_eq!(out.q_abs, 4.94e6);
        assert_relative_eq!(out.a_par_abs, 2.16e6);
        assert_relative_eq!(out.q_sigma, 300.0);
        assert_relative_eq!(out.a_par_sigma, 500.0);
        assert!(out.warning.is_none());
    }

    #[test]
    fn qa_zero_field_gives_f0_directly() {
        let out = extract_qa((4.94e6, 100.0), (7.1e6, 100.0), (0.0, 0.0), 307.7);
        assert_relative_eq!(out.q_abs, 4.94e6);
    }

    #[test]
    fn qa_warns_outside_plausible_window() {
        let out = extract_qa((4.94e6, 1.0), (9.4e6, 1.0), (0.0, 0.0), 307.7);
        assert!(out.warning.is_some());
    }

    #[test]
    fn exact_line_recovered() {
        let pts: Vec<(f64, f64, f64)> = (0..6)
            .map(|k| {
                let x = k as f64;
                (x, -3.5e3 * x + 4.94e6, 500.0)
            })
            .collect();
        let fit = linear_trend(&pts).unwrap();
        assert_relative_eq!(fit.slope, -3.5e3, max_relative = 1e-12);
        assert_relative_eq!(fit.intercept, 4.94e6, max_relative = 1e-12);
        assert!(fit.weighted);
    }

    #[test]
    fn trend_needs_three_points() {
        let pts = vec![(0.0, 1.0, 0.1), (1.0, 2.0, 0.1)];
        assert!(matches!(
            linear_trend(&pts),
            Err(AnalysisError::TooFewPoints { .. })
        ));
    }

    #[test]
    fn permutation_invariance() {
        let mut pts = vec![
            (0.6, 4.94e6, 2.0e3),
            (6.9, 4.92e6, 1.5e3),
            (13.5, 4.895e6, 3.0e3),
            (16.6, 4.884e6, 2.5e3),
        ];
        let a = linear_trend(&pts).unwrap();
        pts.reverse();
        pts.swap(1, 2);
        let b = linear_trend(&pts).unwrap();
        assert_relative_eq!(a.slope, b.slope, max_relative = 1e-14);
        assert_relative_eq!(a.slope_sigma, b.slope_sigma, max_relative = 1e-14);
    }

    #[test]
    fn flat_spectrum_has_zero_contrast() {
        let x: Vec<f64> = (0..160).map(|k| k as f64).collect();
        let y = vec![1.0; 160];
        assert_eq!(spectrum_contrast(&x, &y, None), 0.0);
    }
}
