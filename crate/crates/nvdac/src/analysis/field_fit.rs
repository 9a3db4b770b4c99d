//! Magnetic-field inversion from ODMR dip positions.
//!
//! Given 4–8 electron resonance centers, finds the lab-frame field
//! (magnitude and orientation) whose predicted eight-line pattern over the
//! four NV orientations matches best. Orientations equivalent under the
//! tetrahedral symmetry are canonicalized to the representative whose unit
//! vector has non-negative components sorted in descending order; the
//! best-aligned axis is then axis 0 and θ ∈ [0, π/2].

use nalgebra::Vector3;
use rayon::prelude::*;

use super::AnalysisError;
use crate::spinops::{lab_field, nv_axes, odmr_lines, NvParams};

#[derive(Debug, Clone, Copy)]
pub struct FieldFit {
    pub b_gauss: f64,
    pub b_sigma: f64,
    /// Polar angle from the lab z-axis, canonical representative.
    pub theta: f64,
    pub theta_sigma: f64,
    pub phi: f64,
    pub phi_sigma: f64,
    /// Index of the NV axis carrying the largest field projection
    /// (always 0 for the canonical representative).
    pub axis: usize,
    /// True when the input was a degenerate four-dip (aligned) pattern.
    pub aligned: bool,
    /// False at zero field, where the orientation is meaningless.
    pub orientation_defined: bool,
    pub residual_rms: f64,
}

/// Symmetric nearest-neighbour (Chamfer) distance between predicted lines
/// and observed centers; tolerant of degenerate patterns where several
/// predicted lines share one observed dip.
fn pattern_residual(predicted: &[f64], observed: &[f64]) -> f64 {
    let nearest = |v: f64, list: &[f64]| -> f64 {
        list.iter()
            .map(|&w| (v - w).abs())
            .fold(f64::MAX, f64::min)
    };
    let mut sum = 0.0;
    for &p in predicted {
        sum += nearest(p, observed).powi(2);
    }
    for &o in observed {
        sum += nearest(o, predicted).powi(2);
    }
    (sum / (predicted.len() + observed.len()) as f64).sqrt()
}

fn objective(p: &NvParams, observed: &[f64], b: f64, theta: f64, phi: f64) -> f64 {
    match odmr_lines(p, &lab_field(b.max(0.0), theta, phi)) {
        Ok(lines) => pattern_residual(&lines, observed),
        Err(_) => f64::MAX,
    }
}

/// Nelder–Mead on (B, θ, φ).
fn polish(
    p: &NvParams,
    observed: &[f64],
    start: [f64; 3],
    scale: [f64; 3],
    iterations: usize,
) -> ([f64; 3], f64) {
    let f = |v: &[f64; 3]| objective(p, observed, v[0], v[1], v[2]);
    let mut simplex: Vec<([f64; 3], f64)> = Vec::with_capacity(4);
    simplex.push((start, f(&start)));
    for k in 0..3 {
        let mut v = start;
        v[k] += scale[k];
        simplex.push((v, f(&v)));
    }
    for _ in 0..iterations {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = simplex[0].1;
        let worst = simplex[3].1;
        if (worst - best).abs() < 1e-9 * (1.0 + best) {
            break;
        }
        let centroid = {
            let mut c = [0.0; 3];
            for s in &simplex[..3] {
                for k in 0..3 {
                    c[k] += s.0[k] / 3.0;
                }
            }
            c
        };
        let expand_point = |alpha: f64| -> [f64; 3] {
            let mut v = [0.0; 3];
            for k in 0..3 {
                v[k] = centroid[k] + alpha * (centroid[k] - simplex[3].0[k]);
            }
            v
        };
        let refl = expand_point(1.0);
        let f_refl = f(&refl);
        if f_refl < simplex[0].1 {
            let exp = expand_point(2.0);
            let f_exp = f(&exp);
            simplex[3] = if f_exp < f_refl {
                (exp, f_exp)
            } else {
                (refl, f_refl)
            };
        } else if f_refl < simplex[2].1 {
            simplex[3] = (refl, f_refl);
        } else {
            let contr = expand_point(-0.5);
            let f_contr = f(&contr);
            if f_contr < simplex[3].1 {
                simplex[3] = (contr, f_contr);
            } else {
                for k in 1..4 {
                    for j in 0..3 {
                        simplex[k].0[j] = 0.5 * (simplex[k].0[j] + simplex[0].0[j]);
                    }
                    simplex[k].1 = f(&simplex[k].0);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    simplex[0]
}

/// Map an orientation to its canonical tetrahedral representative:
/// component magnitudes sorted in descending order.
pub fn canonical_orientation(theta: f64, phi: f64) -> (f64, f64) {
    let v = lab_field(1.0, theta, phi);
    let mut comps = [v.x.abs(), v.y.abs(), v.z.abs()];
    comps.sort_by(|a, b| b.total_cmp(a));
    let theta_c = comps[2].clamp(-1.0, 1.0).acos();
    let phi_c = comps[1].atan2(comps[0]);
    (theta_c, phi_c)
}

/// Invert 4–8 ODMR centers into the lab-frame field.
pub fn fit_field_from_odmr(
    centers: &[f64],
    params: &NvParams,
    linewidth: f64,
) -> Result<FieldFit, AnalysisError> {
    if centers.is_empty() {
        return Err(AnalysisError::Underdetermined { count: 0 });
    }
    let lo = centers.iter().cloned().fold(f64::MAX, f64::min);
    let hi = centers.iter().cloned().fold(f64::MIN, f64::max);
    let tol = linewidth.max(1.0e6);

    // Everything collapsed onto one line: zero field, orientation undefined.
    if hi - lo < tol {
        return Ok(FieldFit {
            b_gauss: 0.0,
            b_sigma: (hi - lo) / (2.0 * params.gamma_e),
            theta: 0.0,
            theta_sigma: f64::NAN,
            phi: 0.0,
            phi_sigma: f64::NAN,
            axis: 0,
            aligned: false,
            orientation_defined: false,
            residual_rms: (centers.iter().map(|&c| (c - params.d_gs).powi(2)).sum::<f64>()
                / centers.len() as f64)
                .sqrt(),
        });
    }
    if centers.len() < 4 {
        return Err(AnalysisError::Underdetermined {
            count: centers.len(),
        });
    }

    let b_init = (hi - lo) / (2.0 * params.gamma_e);

    // Multi-start over the canonical orientation domain.
    let mut starts = Vec::new();
    for theta in [0.96, 1.15, 1.35, 1.55] {
        for phi in [0.05, 0.30, 0.55, 0.78] {
            starts.push([b_init, theta, phi]);
        }
    }
    // and the exactly-aligned guess
    starts.push([b_init, 0.9553, 0.7854]);

    let best = starts
        .par_iter()
        .map(|&s| polish(params, centers, s, [0.05 * b_init.max(1.0), 0.25, 0.25], 220))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("non-empty start list");
    let ([b_fit, theta_fit, phi_fit], residual) = best;

    if residual > 5.0 * linewidth {
        return Err(AnalysisError::ModelMismatch {
            residual,
            threshold: 5.0 * linewidth,
        });
    }

    // Local curvature for uncertainties: finite differences of the residual
    // vector with the nearest-line assignment frozen at the optimum.
    let assign = |b: f64, theta: f64, phi: f64| -> Vec<f64> {
        let lines = odmr_lines(params, &lab_field(b, theta, phi)).unwrap_or_default();
        centers
            .iter()
            .map(|&c| {
                lines
                    .iter()
                    .map(|&l| l - c)
                    .min_by(|a, b| a.abs().total_cmp(&b.abs()))
                    .unwrap_or(f64::MAX)
            })
            .collect()
    };
    let r0 = assign(b_fit, theta_fit, phi_fit);
    let steps = [0.05, 1.0e-4, 1.0e-4];
    let mut jt_j = nalgebra::DMatrix::<f64>::zeros(3, 3);
    let mut jac: Vec<Vec<f64>> = Vec::new();
    for k in 0..3 {
        let mut v = [b_fit, theta_fit, phi_fit];
        v[k] += steps[k];
        let r1 = assign(v[0], v[1], v[2]);
        jac.push(
            r1.iter()
                .zip(r0.iter())
                .map(|(a, b)| (a - b) / steps[k])
                .collect(),
        );
    }
    for a in 0..3 {
        for b in 0..3 {
            jt_j[(a, b)] = jac[a].iter().zip(jac[b].iter()).map(|(x, y)| x * y).sum();
        }
    }
    let dof = centers.len().saturating_sub(3).max(1) as f64;
    let s2 = r0.iter().map(|r| r * r).sum::<f64>() / dof;
    let sigmas = match jt_j.clone().try_inverse() {
        Some(inv) => [
            (inv[(0, 0)] * s2).max(0.0).sqrt(),
            (inv[(1, 1)] * s2).max(0.0).sqrt(),
            (inv[(2, 2)] * s2).max(0.0).sqrt(),
        ],
        None => [f64::NAN; 3],
    };

    let (theta_c, phi_c) = canonical_orientation(theta_fit, phi_fit);
    let b_hat = lab_field(1.0, theta_c, phi_c);
    let axis = nv_axes()
        .iter()
        .enumerate()
        .max_by(|(_, a), (_, b)| {
            b_hat.dot(a).abs().total_cmp(&b_hat.dot(b).abs())
        })
        .map(|(k, _)| k)
        .unwrap_or(0);

    // Degenerate four-dip input means the field is aligned with an axis.
    let aligned = centers.len() <= 4
        || {
            let v: Vector3<f64> = lab_field(1.0, theta_c, phi_c);
            let best_axis = nv_axes()[axis];
            v.dot(&best_axis).abs() > (1.0 - 1.0e-5)
        };

    Ok(FieldFit {
        b_gauss: b_fit,
        b_sigma: sigmas[0],
        theta: theta_c,
        theta_sigma: sigmas[1],
        phi: phi_c,
        phi_sigma: sigmas[2],
        axis,
        aligned,
        orientation_defined: true,
        residual_rms: residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spinops::lab_field_near_axis;

    fn cluster(lines: &mut Vec<f64>, tol: f64) -> Vec<f64> {
        lines.sort_by(f64::total_cmp);
        let mut out: Vec<Vec<f64>> = Vec::new();
        for &l in lines.iter() {
            match out.last_mut() {
                Some(group) if l - group.last().unwrap() < tol => group.push(l),
                _ => out.push(vec![l]),
            }
        }
        out.iter()
            .map(|g| g.iter().sum::<f64>() / g.len() as f64)
            .collect()
    }

    #[test]
    fn aligned_field_recovered_from_four_dips() {
        let p = NvParams::ambient();
        let b_lab = nv_axes()[0] * 460.0;
        let mut lines = odmr_lines(&p, &b_lab).unwrap();
        let centers = cluster(&mut lines, 1.0e6);
        assert_eq!(centers.len(), 4);
        let fit = fit_field_from_odmr(&centers, &p, 2.0e6).unwrap();
        assert!((fit.b_gauss - 460.0).abs() < 1.0, "B = {}", fit.b_gauss);
        assert_eq!(fit.axis, 0);
        assert!(fit.aligned);
        // canonical aligned orientation: (1,1,1)/√3
        let v = lab_field(1.0, fit.theta, fit.phi);
        let align = v.dot(&nv_axes()[0]).abs();
        assert!(align > 0.9999, "alignment {align}");
    }

    #[test]
    fn zero_field_flagged() {
        let p = NvParams::ambient();
        let fit = fit_field_from_odmr(&[p.d_gs], &p, 2.0e6).unwrap();
        assert_eq!(fit.b_gauss, 0.0);
        assert!(!fit.orientation_defined);
    }

    #[test]
    fn too_few_centers_rejected() {
        let p = NvParams::ambient();
        assert!(matches!(
            fit_field_from_odmr(&[2.8e9, 3.0e9], &p, 2.0e6),
            Err(AnalysisError::Underdetermined { .. })
        ));
    }

    #[test]
    fn inconsistent_centers_rejected() {
        let p = NvParams::ambient();
        let centers = [2.0e9, 2.5e9, 3.3e9, 4.4e9, 4.9e9];
        assert!(matches!(
            fit_field_from_odmr(&centers, &p, 2.0e6),
            Err(AnalysisError::ModelMismatch { .. })
        ));
    }

    #[test]
    fn random_orientations_closed_loop() {
        let p = NvParams::ambient();
        let cases = [
            (430.0, 0.62, 1.9),
            (460.0, 1.1, 0.4),
            (500.0, 0.25, 3.6),
            (380.0, 1.45, 5.1),
            (460.0, 0.85, 2.7),
        ];
        for (b, theta, phi) in cases {
            let truth = lab_field(b, theta, phi);
            let lines = odmr_lines(&p, &truth).unwrap();
            let fit = fit_field_from_odmr(&lines, &p, 2.0e6).unwrap();
            assert!(
                (fit.b_gauss - b).abs() < 1.0,
                "B {} vs {b} (θ={theta}, φ={phi})",
                fit.b_gauss
            );
            let (theta_t, phi_t) = canonical_orientation(theta, phi);
            let vt = lab_field(1.0, theta_t, phi_t);
            let vf = lab_field(1.0, fit.theta, fit.phi);
            let angle = vt.dot(&vf).clamp(-1.0, 1.0).acos().to_degrees();
            assert!(
                angle < 0.5,
                "orientation off by {angle}° (θ={theta}, φ={phi})"
            );
        }
    }

    #[test]
    fn near_aligned_tilt_recovered() {
        let p = NvParams::ambient();
        let truth = lab_field_near_axis(460.0, 0, 0.05, 1.0);
        let lines = odmr_lines(&p, &truth).unwrap();
        let fit = fit_field_from_odmr(&lines, &p, 2.0e6).unwrap();
        assert!((fit.b_gauss - 460.0).abs() < 1.0);
        assert!(fit.orientation_defined);
    }
}
