//! Spin-1 operator algebra and NV–¹⁴N Hamiltonians.
//!
//! The coupled electron/nuclear system lives in the 9-dimensional product
//! basis |m_S⟩⊗|m_I⟩ with both quantum numbers ordered (+1, 0, −1). All
//! energies are in Hz, fields in Gauss. Internally the quadrupole and
//! hyperfine constants are signed (negative for the NV ¹⁴N configuration);
//! reported spectroscopic quantities are magnitudes.
//!
//! Sign conventions: the electron Zeeman term enters as `+γₑ B·S`, the
//! nuclear one as `−γₙ B·I` (γₙ > 0 for ¹⁴N). With a negative quadrupole
//! constant this makes the m_I = +1 ↔ 0 resonance in the m_S = 0 manifold
//! sit at |Q| + γₙB, the additive combination the resonance formulas use.

use nalgebra::Vector3;
use thiserror::Error;

use crate::linalg::{c, hermiticity_defect, kron, CMat, I, ONE, ZERO};

/// Electron gyromagnetic ratio, Hz/Gauss.
pub const GAMMA_E_DEFAULT: f64 = 2.8025e6;
/// ¹⁴N nuclear gyromagnetic ratio, Hz/Gauss.
pub const GAMMA_N_DEFAULT: f64 = 307.7;
/// Ground-state zero-field splitting at ambient pressure, Hz.
pub const D_GS_AMBIENT: f64 = 2.87e9;
/// Excited-state zero-field splitting, Hz.
pub const D_ES_DEFAULT: f64 = 1.42e9;

/// The four NV orientations in the diamond lattice (unit ⟨111⟩ vectors).
pub fn nv_axes() -> [Vector3<f64>; 4] {
    let s = 1.0 / 3.0_f64.sqrt();
    [
        Vector3::new(s, s, s),
        Vector3::new(s, -s, -s),
        Vector3::new(-s, s, -s),
        Vector3::new(-s, -s, s),
    ]
}

#[derive(Debug, Error)]
pub enum SpinError {
    #[error("invalid parameter {name}: {value} ({reason})")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("matrix is not Hermitian (relative defect {defect:.2e})")]
    NotHermitian { defect: f64 },
    #[error(
        "state |m_S={m_s},m_I={m_i}⟩ has no eigenstate with dominant overlap \
         (best {overlap:.3} ≤ 0.5); operating near an anti-crossing"
    )]
    MixedState { m_s: i8, m_i: i8, overlap: f64 },
    #[error("label |m_S={m_s},m_I={m_i}⟩ is not part of this basis")]
    UnknownLabel { m_s: i8, m_i: i8 },
}

/// Standard dimensionless spin-1 operators.
#[derive(Debug, Clone)]
pub struct OperatorSet {
    pub sx: CMat,
    pub sy: CMat,
    pub sz: CMat,
    pub identity: CMat,
}

/// Returns the spin-1 matrices in the (+1, 0, −1) basis.
pub fn spin1_operators() -> OperatorSet {
    let f = c(1.0 / 2.0_f64.sqrt());
    let sx = CMat::from_row_slice(3, 3, &[ZERO, f, ZERO, f, ZERO, f, ZERO, f, ZERO]);
    let sy = CMat::from_row_slice(
        3,
        3,
        &[ZERO, -I * f, ZERO, I * f, ZERO, -I * f, ZERO, I * f, ZERO],
    );
    let sz = CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![ONE, ZERO, -ONE]));
    OperatorSet {
        sx,
        sy,
        sz,
        identity: CMat::identity(3, 3),
    }
}

/// Spin-Hamiltonian coefficients at a fixed pressure.
///
/// `q`, `a_par`, `a_perp` and their excited-state counterparts are signed;
/// the NV ¹⁴N values are negative. `a_perp` defaults to an effective value
/// of −1.5 MHz chosen so that second-order shifts of the nuclear resonances
/// stay below 2 kHz at the working field; override it (the ESR literature
/// value is near −2.7 MHz) when the full level structure matters more than
/// the first-order resonance formulas.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NvParams {
    /// Ground-state zero-field splitting, Hz.
    pub d_gs: f64,
    /// Excited-state zero-field splitting, Hz.
    pub d_es: f64,
    /// Nuclear quadrupole coupling, Hz (signed).
    pub q: f64,
    /// Axial hyperfine coupling, ground manifold, Hz (signed).
    pub a_par: f64,
    /// Transverse hyperfine coupling, ground manifold, Hz (signed).
    pub a_perp: f64,
    /// Axial hyperfine coupling, excited manifold, Hz (signed).
    pub a_par_es: f64,
    /// Transverse hyperfine coupling, excited manifold, Hz (signed).
    /// This term drives the electron–nuclear flip-flops at the ESLAC.
    pub a_perp_es: f64,
    /// Electron gyromagnetic ratio, Hz/Gauss.
    pub gamma_e: f64,
    /// ¹⁴N gyromagnetic ratio, Hz/Gauss.
    pub gamma_n: f64,
}

impl Default for NvParams {
    fn default() -> Self {
        Self::ambient()
    }
}

impl NvParams {
    /// Ambient-pressure parameter set.
    pub fn ambient() -> Self {
        NvParams {
            d_gs: D_GS_AMBIENT,
            d_es: D_ES_DEFAULT,
            q: -4.9421e6,
            a_par: -2.16294e6,
            a_perp: -1.5e6,
            a_par_es: -40.0e6,
            a_perp_es: -40.0e6,
            gamma_e: GAMMA_E_DEFAULT,
            gamma_n: GAMMA_N_DEFAULT,
        }
    }

    /// Hard invariants: positivity of splittings and gyromagnetic ratios.
    pub fn validate(&self) -> Result<(), SpinError> {
        let checks = [
            ("d_gs", self.d_gs, self.d_gs > 0.0, "must be positive"),
            ("d_es", self.d_es, self.d_es > 0.0, "must be positive"),
            ("gamma_e", self.gamma_e, self.gamma_e > 0.0, "must be positive"),
            ("gamma_n", self.gamma_n, self.gamma_n > 0.0, "must be positive"),
        ];
        for (name, value, ok, reason) in checks {
            if !ok || !value.is_finite() {
                return Err(SpinError::InvalidParameter { name, value, reason });
            }
        }
        for (name, value) in [
            ("q", self.q),
            ("a_par", self.a_par),
            ("a_perp", self.a_perp),
            ("a_par_es", self.a_par_es),
            ("a_perp_es", self.a_perp_es),
        ] {
            if !value.is_finite() {
                return Err(SpinError::InvalidParameter {
                    name,
                    value,
                    reason: "must be finite",
                });
            }
        }
        Ok(())
    }

    /// Plausibility guard for ¹⁴N configurations. Overridable: skip this
    /// check (but not [`validate`](Self::validate)) to simulate exotic
    /// parameter sets.
    pub fn check_physical_window(&self) -> Result<(), SpinError> {
        if !(4.0e6..=5.5e6).contains(&self.q.abs()) {
            return Err(SpinError::InvalidParameter {
                name: "q",
                value: self.q,
                reason: "|q| outside [4.0, 5.5] MHz window for ¹⁴N",
            });
        }
        if !(1.5e6..=2.5e6).contains(&self.a_par.abs()) {
            return Err(SpinError::InvalidParameter {
                name: "a_par",
                value: self.a_par,
                reason: "|a_par| outside [1.5, 2.5] MHz window for ¹⁴N",
            });
        }
        Ok(())
    }
}

/// Static magnetic field in the NV frame: polar angle measured from the NV
/// symmetry axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldVector {
    pub magnitude: f64,
    pub theta: f64,
    pub phi: f64,
}

impl FieldVector {
    pub fn new(magnitude: f64, theta: f64, phi: f64) -> Result<Self, SpinError> {
        if !(magnitude.is_finite() && magnitude >= 0.0) {
            return Err(SpinError::InvalidParameter {
                name: "magnitude",
                value: magnitude,
                reason: "must be finite and non-negative",
            });
        }
        if !(0.0..=std::f64::consts::PI).contains(&theta) {
            return Err(SpinError::InvalidParameter {
                name: "theta",
                value: theta,
                reason: "must lie in [0, π]",
            });
        }
        let tau = 2.0 * std::f64::consts::PI;
        let phi = phi.rem_euclid(tau);
        Ok(FieldVector {
            magnitude,
            theta,
            phi,
        })
    }

    /// Field aligned with the NV axis.
    pub fn aligned(magnitude: f64) -> Self {
        FieldVector {
            magnitude,
            theta: 0.0,
            phi: 0.0,
        }
    }

    pub fn zero() -> Self {
        Self::aligned(0.0)
    }

    /// Cartesian components in the NV frame, Gauss.
    pub fn components(&self) -> [f64; 3] {
        [
            self.magnitude * self.theta.sin() * self.phi.cos(),
            self.magnitude * self.theta.sin() * self.phi.sin(),
            self.magnitude * self.theta.cos(),
        ]
    }
}

/// Which electronic manifold a Hamiltonian describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Manifold {
    Ground,
    Excited,
}

/// A coupled electron–nuclear Hamiltonian with its basis bookkeeping.
#[derive(Debug, Clone)]
pub struct Hamiltonian {
    pub matrix: CMat,
    pub manifold: Manifold,
    labels: Vec<(i8, i8)>,
}

/// Product-basis index for (m_S, m_I), both ordered (+1, 0, −1).
pub fn basis_index(m_s: i8, m_i: i8) -> usize {
    let e = (1 - m_s as i64) as usize;
    let n = (1 - m_i as i64) as usize;
    3 * e + n
}

fn product_labels() -> Vec<(i8, i8)> {
    let ms = [1i8, 0, -1];
    let mut labels = Vec::with_capacity(9);
    for &e in &ms {
        for &n in &ms {
            labels.push((e, n));
        }
    }
    labels
}

fn build_hamiltonian(
    d: f64,
    a_par: f64,
    a_perp: f64,
    p: &NvParams,
    b: &FieldVector,
    manifold: Manifold,
) -> Hamiltonian {
    let ops = spin1_operators();
    let [bx, by, bz] = b.components();

    let zeeman_e = (&ops.sx * c(bx) + &ops.sy * c(by) + &ops.sz * c(bz)) * c(p.gamma_e);
    let zeeman_n = (&ops.sx * c(bx) + &ops.sy * c(by) + &ops.sz * c(bz)) * c(-p.gamma_n);

    let sz2 = &ops.sz * &ops.sz;
    let mut h = kron(&(&sz2 * c(d) + zeeman_e), &ops.identity);
    h += kron(&ops.identity, &(&sz2 * c(p.q) + zeeman_n));
    h += kron(&ops.sz, &ops.sz) * c(a_par);
    h += (kron(&ops.sx, &ops.sx) + kron(&ops.sy, &ops.sy)) * c(a_perp);

    Hamiltonian {
        matrix: h,
        manifold,
        labels: product_labels(),
    }
}

/// 9×9 ground-state Hamiltonian in the product basis, Hz.
pub fn build_ground_hamiltonian(p: &NvParams, b: &FieldVector) -> Hamiltonian {
    build_hamiltonian(p.d_gs, p.a_par, p.a_perp, p, b, Manifold::Ground)
}

/// 9×9 excited-state Hamiltonian; same structure with the excited-state
/// zero-field splitting and hyperfine couplings.
pub fn build_excited_hamiltonian(p: &NvParams, b: &FieldVector) -> Hamiltonian {
    build_hamiltonian(p.d_es, p.a_par_es, p.a_perp_es, p, b, Manifold::Excited)
}

impl Hamiltonian {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn labels(&self) -> &[(i8, i8)] {
        &self.labels
    }

    pub fn index_of(&self, m_s: i8, m_i: i8) -> Result<usize, SpinError> {
        self.labels
            .iter()
            .position(|&l| l == (m_s, m_i))
            .ok_or(SpinError::UnknownLabel { m_s, m_i })
    }
}

/// Result of diagonalizing a Hermitian Hamiltonian: ascending energies and
/// the matching orthonormal eigenvectors as columns.
#[derive(Debug, Clone)]
pub struct EigenSystem {
    pub energies: Vec<f64>,
    pub states: CMat,
    labels: Vec<(i8, i8)>,
}

/// Diagonalize a Hamiltonian. Errors out if the matrix fails the
/// Hermiticity invariant.
pub fn eigensystem(h: &Hamiltonian) -> Result<EigenSystem, SpinError> {
    let defect = hermiticity_defect(&h.matrix);
    if defect > 1e-9 {
        return Err(SpinError::NotHermitian { defect });
    }
    let se = h.matrix.clone().symmetric_eigen();
    let n = h.dim();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| se.eigenvalues[a].total_cmp(&se.eigenvalues[b]));

    let energies: Vec<f64> = order.iter().map(|&k| se.eigenvalues[k]).collect();
    let mut states = CMat::zeros(n, n);
    for (col, &k) in order.iter().enumerate() {
        states.set_column(col, &se.eigenvectors.column(k));
    }
    Ok(EigenSystem {
        energies,
        states,
        labels: h.labels.clone(),
    })
}

impl EigenSystem {
    /// Eigenstate index whose product-basis overlap with `(m_s, m_i)` is
    /// dominant (population > 0.5).
    pub fn eigenstate_for(&self, m_s: i8, m_i: i8) -> Result<usize, SpinError> {
        let row = self
            .labels
            .iter()
            .position(|&l| l == (m_s, m_i))
            .ok_or(SpinError::UnknownLabel { m_s, m_i })?;
        let mut best = (0usize, 0.0f64);
        for k in 0..self.energies.len() {
            let w = self.states[(row, k)].norm_sqr();
            if w > best.1 {
                best = (k, w);
            }
        }
        if best.1 <= 0.5 {
            return Err(SpinError::MixedState {
                m_s,
                m_i,
                overlap: best.1,
            });
        }
        Ok(best.0)
    }

    /// Energy of the eigenstate labelled by its dominant product component.
    pub fn energy_of(&self, m_s: i8, m_i: i8) -> Result<f64, SpinError> {
        Ok(self.energies[self.eigenstate_for(m_s, m_i)?])
    }
}

/// |E_to − E_from| between the eigenstates labelled by dominant overlap.
pub fn transition_frequency(
    h: &Hamiltonian,
    from: (i8, i8),
    to: (i8, i8),
) -> Result<f64, SpinError> {
    let eig = eigensystem(h)?;
    let e_from = eig.energy_of(from.0, from.1)?;
    let e_to = eig.energy_of(to.0, to.1)?;
    Ok((e_to - e_from).abs())
}

/// Electron resonance pair for one NV orientation: transition frequencies
/// from the m_S = 0 manifold to the m_S = ±1 manifolds, averaged over the
/// (unresolved) nuclear sublevels. Returned as (lower, upper).
///
/// Each eigenstate is assigned to the electron manifold it overlaps most
/// (a greedy maximum-weight matching filling three states per manifold),
/// then manifold energies are means of the assigned eigenvalues. This
/// keeps the level repulsion of strong transverse fields — which an
/// overlap-weighted energy average would cancel by completeness — and
/// stays deterministic through exact degeneracies, where the tied states
/// have equal energies anyway.
pub fn electron_resonances(p: &NvParams, b: &FieldVector) -> Result<(f64, f64), SpinError> {
    let h = build_ground_hamiltonian(p, b);
    let eig = eigensystem(&h)?;
    // weight of eigenstate k in electron manifold m (index 0,1,2 ↔ +1,0,−1)
    let mut weights = Vec::with_capacity(27);
    for k in 0..9 {
        for m in 0..3usize {
            let w: f64 = (0..3)
                .map(|n| eig.states[(3 * m + n, k)].norm_sqr())
                .sum();
            weights.push((w, k, m));
        }
    }
    weights.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut assigned = [usize::MAX; 9];
    let mut capacity = [3usize; 3];
    for &(_, k, m) in &weights {
        if assigned[k] == usize::MAX && capacity[m] > 0 {
            assigned[k] = m;
            capacity[m] -= 1;
        }
    }
    let mut mean = [0.0f64; 3];
    for k in 0..9 {
        mean[assigned[k]] += eig.energies[k] / 3.0;
    }
    let up = (mean[0] - mean[1]).abs();
    let down = (mean[2] - mean[1]).abs();
    Ok((up.min(down), up.max(down)))
}

/// Decompose a lab-frame field onto one NV axis: (axial, transverse)
/// components in Gauss.
pub fn project_on_axis(b_lab: &Vector3<f64>, axis: &Vector3<f64>) -> (f64, f64) {
    let b_par = b_lab.dot(axis);
    let b_perp = (b_lab - axis * b_par).norm();
    (b_par, b_perp)
}

/// The 8 electron resonance frequencies of an ensemble spanning all four NV
/// orientations, two per axis, each from the ground Hamiltonian with the
/// field projected into that axis frame. Ordered by axis, (lower, upper).
pub fn odmr_lines(p: &NvParams, b_lab: &Vector3<f64>) -> Result<Vec<f64>, SpinError> {
    let mut lines = Vec::with_capacity(8);
    for axis in nv_axes() {
        let (b_par, b_perp) = project_on_axis(b_lab, &axis);
        let theta = b_perp.atan2(b_par.abs());
        let field = FieldVector::new(b_lab.norm(), theta, 0.0)?;
        let (lo, hi) = electron_resonances(p, &field)?;
        lines.push(lo);
        lines.push(hi);
    }
    Ok(lines)
}

/// Lab-frame field vector from spherical angles (polar from the lab z-axis).
pub fn lab_field(magnitude: f64, theta: f64, phi: f64) -> Vector3<f64> {
    Vector3::new(
        magnitude * theta.sin() * phi.cos(),
        magnitude * theta.sin() * phi.sin(),
        magnitude * theta.cos(),
    )
}

/// Lab-frame field aligned with NV axis `k`, tilted by (theta, phi) in the
/// axis frame. theta = 0 reproduces exact alignment.
pub fn lab_field_near_axis(magnitude: f64, axis_index: usize, theta: f64, phi: f64) -> Vector3<f64> {
    let axis = nv_axes()[axis_index];
    // Build an orthonormal frame with the axis as z.
    let helper = if axis.x.abs() < 0.9 {
        Vector3::new(1.0, 0.0, 0.0)
    } else {
        Vector3::new(0.0, 1.0, 0.0)
    };
    let e1 = axis.cross(&helper).normalize();
    let e2 = axis.cross(&e1);
    (axis * theta.cos() + e1 * (theta.sin() * phi.cos()) + e2 * (theta.sin() * phi.sin()))
        * magnitude
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs_diff;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn spin1_commutators() {
        let ops = spin1_operators();
        let comm_xy = &ops.sx * &ops.sy - &ops.sy * &ops.sx;
        assert!(max_abs_diff(&comm_xy, &(&ops.sz * I)) < 1e-12);
        let comm_yz = &ops.sy * &ops.sz - &ops.sz * &ops.sy;
        assert!(max_abs_diff(&comm_yz, &(&ops.sx * I)) < 1e-12);
        let comm_zx = &ops.sz * &ops.sx - &ops.sx * &ops.sz;
        assert!(max_abs_diff(&comm_zx, &(&ops.sy * I)) < 1e-12);
    }

    #[test]
    fn spin1_casimir_and_sz() {
        let ops = spin1_operators();
        let s2 = &ops.sx * &ops.sx + &ops.sy * &ops.sy + &ops.sz * &ops.sz;
        assert!(max_abs_diff(&s2, &(&ops.identity * c(2.0))) < 1e-12);
        assert_eq!(ops.sz[(0, 0)], ONE);
        assert_eq!(ops.sz[(1, 1)], ZERO);
        assert_eq!(ops.sz[(2, 2)], -ONE);
        for m in [&ops.sx, &ops.sy, &ops.sz] {
            assert!(hermiticity_defect(m) < 1e-15);
        }
    }

    #[test]
    fn ground_gap_at_ambient_zero_field() {
        let p = NvParams::ambient();
        let h = build_ground_hamiltonian(&p, &FieldVector::zero());
        let eig = eigensystem(&h).unwrap();
        // electron m_S = 0 ↔ ±1 gap, nuclear-averaged
        let _ = eig;
        let (lo, hi) = electron_resonances(&p, &FieldVector::zero()).unwrap();
        assert_relative_eq!(lo, 2.87e9, max_relative = 1e-3);
        assert_relative_eq!(hi, 2.87e9, max_relative = 1e-3);
    }

    #[test]
    fn excited_gap_is_d_es() {
        let p = NvParams::ambient();
        let h = build_excited_hamiltonian(&p, &FieldVector::zero());
        let eig = eigensystem(&h).unwrap();
        let gap = eig.energy_of(-1, 0).unwrap() - eig.energy_of(0, 0).unwrap();
        assert_relative_eq!(gap, 1.42e9, max_relative = 1e-2);
    }

    /// Independent oracle for the B = 0 spectrum: with the field off, the
    /// Hamiltonian block-diagonalizes over conserved m_S + m_I, so every
    /// block is at most 3×3 and solvable in closed form. Block energies are
    /// built here directly from scalar arithmetic.
    #[test]
    fn zero_field_spectrum_matches_block_oracle() {
        let p = NvParams::ambient();
        let h = build_ground_hamiltonian(&p, &FieldVector::zero());
        let eig = eigensystem(&h).unwrap();

        let diag = |m_s: i8, m_i: i8| -> f64 {
            p.d_gs * (m_s as f64).powi(2)
                + p.q * (m_i as f64).powi(2)
                + p.a_par * (m_s as f64) * (m_i as f64)
        };
        // Flip-flop element ⟨m_s±1, m_i∓1| H |m_s, m_i⟩ = a_perp · g
        // with g = √((2−s(s±1))(2−i(i∓1)))/2 for spin-1 ladders.
        let ladder = |m: i8, up: bool| -> f64 {
            let m = m as f64;
            let target = if up { m + 1.0 } else { m - 1.0 };
            if target.abs() > 1.0 {
                0.0
            } else {
                (2.0 - m * target).sqrt()
            }
        };

        let mut expected: Vec<f64> = Vec::new();
        // m = m_S + m_I sectors: m = ±2 are 1×1, ±1 are 2×2 (plus 1×1), 0 is 3×3.
        expected.push(diag(1, 1));
        expected.push(diag(-1, -1));
        for (a, b) in [((1i8, 0i8), (0i8, 1i8)), ((-1, 0), (0, -1))] {
            let e1 = diag(a.0, a.1);
            let e2 = diag(b.0, b.1);
            let g = p.a_perp / 2.0 * ladder(a.0, a.0 < b.0) * ladder(a.1, a.1 < b.1);
            let mean = 0.5 * (e1 + e2);
            let half = (0.25 * (e1 - e2).powi(2) + g * g).sqrt();
            expected.push(mean - half);
            expected.push(mean + half);
        }
        // m = 0 sector: {(1,−1), (0,0), (−1,1)} tridiagonal 3×3.
        let d1 = diag(1, -1);
        let d2 = diag(0, 0);
        let d3 = diag(-1, 1);
        let g12 = p.a_perp / 2.0 * ladder(1, false) * ladder(-1, true);
        let g23 = p.a_perp / 2.0 * ladder(0, false) * ladder(0, true);
        // Characteristic polynomial roots via the symmetric tridiagonal
        // eigenproblem, solved by the cubic formula.
        let b_coef = -(d1 + d2 + d3);
        let c_coef = d1 * d2 + d1 * d3 + d2 * d3 - g12 * g12 - g23 * g23;
        let d_coef = -(d1 * d2 * d3 - d3 * g12 * g12 - d1 * g23 * g23);
        let p_c = c_coef - b_coef * b_coef / 3.0;
        let q_c = 2.0 * b_coef.powi(3) / 27.0 - b_coef * c_coef / 3.0 + d_coef;
        let m = 2.0 * (-p_c / 3.0).sqrt();
        let phase = (3.0 * q_c / (p_c * m)).clamp(-1.0, 1.0).acos() / 3.0;
        for k in 0..3 {
            let root = m * (phase - 2.0 * std::f64::consts::PI * k as f64 / 3.0).cos()
                - b_coef / 3.0;
            expected.push(root);
        }

        expected.sort_by(f64::total_cmp);
        // 2 Hz tolerance: the cubic formula loses a few digits at GHz scale.
        for (got, want) in eig.energies.iter().zip(expected.iter()) {
            assert!(
                (got - want).abs() < 2.0,
                "eigenvalue mismatch: {got} vs oracle {want}"
            );
        }
    }

    #[test]
    fn eslac_field_minimizes_excited_gap() {
        // Oracle: scan B and find where the |0,·⟩ / |−1,·⟩ excited manifolds
        // come closest; must match d_es / gamma_e ≈ 506.7 G.
        let p = NvParams::ambient();
        let mut best = (0.0f64, f64::MAX);
        let mut b = 440.0;
        while b <= 580.0 {
            let h = build_excited_hamiltonian(&p, &FieldVector::aligned(b));
            let eig = eigensystem(&h).unwrap();
            // mean electron gap between the m_S = 0 and m_S = −1 manifolds
            let mut gap = 0.0;
            for (e0, e1) in [((0i8, -1i8), (-1i8, -1i8))] {
                let a = eig.energy_of(e0.0, e0.1).unwrap_or(f64::NAN);
                let bb = eig.energy_of(e1.0, e1.1).unwrap_or(f64::NAN);
                gap += (a - bb).abs();
            }
            if gap.is_finite() && gap < best.1 {
                best = (b, gap);
            }
            b += 0.5;
        }
        let expected = p.d_es / p.gamma_e;
        assert!(
            (best.0 - expected).abs() < 3.0,
            "ESLAC at {} G, expected {expected}",
            best.0
        );
    }

    #[test]
    fn nuclear_transitions_at_460g() {
        // Level ordering and additivity of the resonance formulas at 460 G.
        let p = NvParams::ambient();
        let gamma_n_b = p.gamma_n * 460.0;
        let h = build_ground_hamiltonian(&p, &FieldVector::aligned(460.0));

        let f0 = transition_frequency(&h, (0, 1), (0, 0)).unwrap();
        let expect0 = p.q.abs() + gamma_n_b;
        assert!(
            (f0 - expect0).abs() < 2e3,
            "f_RF0 {f0} vs {expect0}"
        );

        // In the manifold where the hyperfine shift adds (m_S = +1 under
        // this sign convention), the same nuclear pair sits at
        // |Q| + |A∥| + γₙB.
        let f1 = transition_frequency(&h, (1, 1), (1, 0)).unwrap();
        let expect1 = p.q.abs() + p.a_par.abs() + gamma_n_b;
        assert!(
            (f1 - expect1).abs() < 2e3,
            "f_RF1 {f1} vs {expect1}"
        );
        assert_relative_eq!(f1 - f0, p.a_par.abs(), max_relative = 2e-3);

        // m_S = −1 manifold: hyperfine subtracts; the difference from f_RF0
        // still equals |A∥|.
        let f1_minus = transition_frequency(&h, (-1, 1), (-1, 0)).unwrap();
        assert_relative_eq!(f0 - f1_minus, p.a_par.abs(), max_relative = 2e-3);
    }

    #[test]
    fn closed_form_bound_on_aligned_nuclear_transitions() {
        // Second-order perturbation bound: exact m_S = 0 transitions differ
        // from |q Δ(m²) − γₙB Δm| by at most a_perp²/(d_gs − γₑB).
        let p = NvParams::ambient();
        for b in [0.0, 120.0, 330.0, 460.0, 650.0] {
            let h = build_ground_hamiltonian(&p, &FieldVector::aligned(b));
            let bound = 1.05 * p.a_perp.powi(2) / (p.d_gs - p.gamma_e * b);
            for (from, to) in [((0i8, 1i8), (0i8, 0i8)), ((0, 0), (0, -1)), ((0, 1), (0, -1))] {
                let f = transition_frequency(&h, from, to).unwrap();
                let closed = (p.q * ((from.1 as f64).powi(2) - (to.1 as f64).powi(2))
                    - p.gamma_n * b * (from.1 - to.1) as f64)
                    .abs();
                assert!(
                    (f - closed).abs() <= bound,
                    "B={b}: {from:?}→{to:?} exact {f} closed {closed} bound {bound}"
                );
            }
        }
    }

    #[test]
    fn excited_transition_at_anti_crossing_raises_mixing_error() {
        // At the avoided crossing of the (0,0)/(−1,+1) excited pair no
        // eigenstate dominates either label. Find the field with minimal
        // label dominance by ternary search and expect the mixing error.
        let p = NvParams::ambient();
        let dominance = |b: f64| -> f64 {
            let h = build_excited_hamiltonian(&p, &FieldVector::aligned(b));
            let eig = eigensystem(&h).unwrap();
            let row = basis_index(0, 0);
            (0..9)
                .map(|k| eig.states[(row, k)].norm_sqr())
                .fold(0.0, f64::max)
        };
        let (mut lo, mut hi) = (505.0f64, 535.0f64);
        for _ in 0..200 {
            let m1 = lo + (hi - lo) / 3.0;
            let m2 = hi - (hi - lo) / 3.0;
            if dominance(m1) < dominance(m2) {
                hi = m2;
            } else {
                lo = m1;
            }
        }
        let b_cross = 0.5 * (lo + hi);
        let h = build_excited_hamiltonian(&p, &FieldVector::aligned(b_cross));
        let r = transition_frequency(&h, (0, 0), (-1, 1));
        assert!(
            matches!(r, Err(SpinError::MixedState { .. })),
            "expected mixing error at B = {b_cross} G, got {r:?}"
        );
    }

    #[test]
    fn odmr_aligned_collapses_to_four_lines() {
        let p = NvParams::ambient();
        let b_lab = nv_axes()[0] * 460.0;
        let mut lines = odmr_lines(&p, &b_lab).unwrap();
        lines.sort_by(f64::total_cmp);
        // Cluster with 1 MHz tolerance: expect exactly 4 distinct groups.
        let mut groups = 1;
        for w in lines.windows(2) {
            if w[1] - w[0] > 1e6 {
                groups += 1;
            }
        }
        assert_eq!(groups, 4, "lines: {lines:?}");
        // Outer pair split by 2 γₑ B.
        let outer = lines.last().unwrap() - lines.first().unwrap();
        assert_relative_eq!(outer, 2.0 * p.gamma_e * 460.0, max_relative = 1e-3);
    }

    #[test]
    fn odmr_zero_field_collapses_to_d_gs() {
        let p = NvParams::ambient();
        let lines = odmr_lines(&p, &Vector3::zeros()).unwrap();
        for l in lines {
            assert_relative_eq!(l, p.d_gs, max_relative = 2e-3);
        }
    }

    #[test]
    fn odmr_generic_field_gives_eight_lines() {
        let p = NvParams::ambient();
        let b_lab = lab_field(430.0, 0.7, 1.1);
        let mut lines = odmr_lines(&p, &b_lab).unwrap();
        lines.sort_by(f64::total_cmp);
        for w in lines.windows(2) {
            assert!(w[1] - w[0] > 1e6, "expected 8 resolved lines: {lines:?}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn hamiltonians_always_hermitian(
            b in 0.0..900.0f64,
            theta in 0.0..std::f64::consts::PI,
            phi in 0.0..6.28f64,
        ) {
            let p = NvParams::ambient();
            let field = FieldVector::new(b, theta, phi).unwrap();
            let hg = build_ground_hamiltonian(&p, &field);
            let he = build_excited_hamiltonian(&p, &field);
            prop_assert!(hermiticity_defect(&hg.matrix) <= 1e-9);
            prop_assert!(hermiticity_defect(&he.matrix) <= 1e-9);
        }

        #[test]
        fn eigenvectors_unitary(
            b in 0.0..900.0f64,
            theta in 0.0..std::f64::consts::PI,
        ) {
            let p = NvParams::ambient();
            let field = FieldVector::new(b, theta, 0.3).unwrap();
            let h = build_ground_hamiltonian(&p, &field);
            let eig = eigensystem(&h).unwrap();
            let gram = eig.states.adjoint() * &eig.states;
            prop_assert!(max_abs_diff(&gram, &CMat::identity(9, 9)) < 1e-9);
            // reconstruction ‖U diag(E) U† − H‖ relative
            let diag = CMat::from_diagonal(&nalgebra::DVector::from_iterator(
                9, eig.energies.iter().map(|&e| c(e)),
            ));
            let rebuilt = &eig.states * diag * eig.states.adjoint();
            let rel = (&rebuilt - &h.matrix).norm() / h.matrix.norm();
            prop_assert!(rel < 1e-6);
        }
    }

    #[test]
    fn scaled_identity_eigensystem() {
        let mut h = build_ground_hamiltonian(&NvParams::ambient(), &FieldVector::zero());
        h.matrix = CMat::identity(9, 9) * c(42.0);
        let eig = eigensystem(&h).unwrap();
        for e in eig.energies {
            assert_relative_eq!(e, 42.0);
        }
    }

    #[test]
    fn non_hermitian_input_rejected() {
        let mut h = build_ground_hamiltonian(&NvParams::ambient(), &FieldVector::zero());
        h.matrix[(0, 3)] += c(5.0e3);
        assert!(matches!(
            eigensystem(&h),
            Err(SpinError::NotHermitian { .. })
        ));
    }
}
