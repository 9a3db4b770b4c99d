//! Open-system dynamics of the NV–¹⁴N system.
//!
//! Two state spaces are used: the 9-level ground manifold for coherent
//! microwave/radio-frequency control, and the 21-level optical space
//! (9 ground + 9 excited + 3 nuclear-resolved singlet levels) for laser
//! pumping, spin-dependent readout, and the ESLAC nuclear polarization
//! mechanism. Evolution is generated by a vectorized Lindbladian and a
//! dense matrix exponential; rotating frames keep the generators static
//! and their norms small.

mod coherent;
mod frame;
mod lindblad;
mod optical;

pub use coherent::{
    coherent_pulse, evolve_lab_frame, free_evolution, free_evolution_in, LabDrive, PulseOutcome,
};
pub use frame::{
    ground_noise_collapses, pulse_generator, DriveFrame, DriveTone, GroundBasis, SequenceFrame,
    ToneChannel,
};
pub use lindblad::{lindblad_step, liouvillian, propagator, steady_state, Collapse, Propagator};
pub use optical::{
    cw_nmr_rate, cw_odmr_rate, dnp_efficiency_scan, optical_index, optical_pump, optical_settle,
    CwNmrSolver,
    pump_propagator, readout, readout_rates, DnpPoint, OpticalBlock, OpticalPropagator,
    OPTICAL_DIM,
};

use thiserror::Error;

use crate::linalg::{c, hermiticity_defect, trace, CMat};
use crate::spinops::{basis_index, SpinError};

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("step too large: ‖H‖·dt = {norm_dt:.3} exceeds π")]
    StepTooLarge { norm_dt: f64 },
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("readout window must be positive, got {window}")]
    InvalidWindow { window: f64 },
    #[error("state is not a density matrix: {0}")]
    InvalidState(String),
    #[error("residual population {residual:.2e} outside the ground manifold; let the optical excitation settle before coherent control")]
    ResidualExcitedPopulation { residual: f64 },
    #[error("steady-state solve failed (singular generator)")]
    SteadyStateFailed,
    #[error(transparent)]
    Spin(#[from] SpinError),
}

/// Hilbert space a density matrix lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StateSpace {
    /// 9-level ground manifold |m_S⟩⊗|m_I⟩.
    Ground,
    /// 21-level optical space: ground ⊕ excited ⊕ singlet.
    Optical,
}

impl StateSpace {
    pub fn dim(&self) -> usize {
        match self {
            StateSpace::Ground => 9,
            StateSpace::Optical => optical::OPTICAL_DIM,
        }
    }
}

/// Density matrix with trace/Hermiticity/positivity invariants.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    pub mat: CMat,
    pub space: StateSpace,
}

impl DensityMatrix {
    pub fn new(mat: CMat, space: StateSpace) -> Result<Self, DynamicsError> {
        if mat.nrows() != space.dim() || mat.ncols() != space.dim() {
            return Err(DynamicsError::DimensionMismatch {
                expected: space.dim(),
                got: mat.nrows(),
            });
        }
        let rho = DensityMatrix { mat, space };
        rho.validate()?;
        Ok(rho)
    }

    /// Fully mixed ground state (room-temperature thermal state).
    pub fn thermal_ground() -> Self {
        DensityMatrix {
            mat: CMat::identity(9, 9) * c(1.0 / 9.0),
            space: StateSpace::Ground,
        }
    }

    /// Pure ground product state |m_S, m_I⟩.
    pub fn pure_ground(m_s: i8, m_i: i8) -> Self {
        let mut mat = CMat::zeros(9, 9);
        let k = basis_index(m_s, m_i);
        mat[(k, k)] = c(1.0);
        DensityMatrix {
            mat,
            space: StateSpace::Ground,
        }
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn trace(&self) -> f64 {
        trace(&self.mat).re
    }

    /// Checks trace = 1 ± 1e-9, Hermiticity ≤ 1e-9 and positivity to −1e-8.
    pub fn validate(&self) -> Result<(), DynamicsError> {
        let tr = trace(&self.mat);
        if (tr.re - 1.0).abs() > 1e-9 || tr.im.abs() > 1e-9 {
            return Err(DynamicsError::InvalidState(format!(
                "trace = {tr} (must be 1)"
            )));
        }
        let defect = hermiticity_defect(&self.mat);
        if defect > 1e-9 {
            return Err(DynamicsError::InvalidState(format!(
                "Hermiticity defect {defect:.2e}"
            )));
        }
        let min_eig = self.min_eigenvalue();
        if min_eig < -1e-8 {
            return Err(DynamicsError::InvalidState(format!(
                "negative eigenvalue {min_eig:.2e}"
            )));
        }
        Ok(())
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let herm = (&self.mat + self.mat.adjoint()) * c(0.5);
        let eig = herm.symmetric_eigen();
        eig.eigenvalues.iter().fold(f64::MAX, |a, &b| a.min(b))
    }

    /// Population of basis state `k`.
    pub fn population(&self, k: usize) -> f64 {
        self.mat[(k, k)].re
    }

    /// Populations of the nuclear sublevels (+1, 0, −1), traced over all
    /// electronic labels.
    pub fn nuclear_populations(&self) -> [f64; 3] {
        let mut out = [0.0; 3];
        match self.space {
            StateSpace::Ground => {
                for e in 0..3 {
                    for n in 0..3 {
                        out[n] += self.population(3 * e + n);
                    }
                }
            }
            StateSpace::Optical => {
                for block in 0..2 {
                    for e in 0..3 {
                        for n in 0..3 {
                            out[n] += self.population(9 * block + 3 * e + n);
                        }
                    }
                }
                for n in 0..3 {
                    out[n] += self.population(18 + n);
                }
            }
        }
        out
    }

    /// Populations of the electron sublevels (+1, 0, −1) in the ground
    /// manifold.
    pub fn ground_electron_populations(&self) -> [f64; 3] {
        let mut out = [0.0; 3];
        for e in 0..3 {
            for n in 0..3 {
                out[e] += self.population(3 * e + n);
            }
        }
        out
    }

    /// Normalized nuclear polarization toward m_I = +1: 0 for the thermal
    /// state, 1 for full polarization.
    pub fn nuclear_polarization(&self) -> f64 {
        let p = self.nuclear_populations();
        (3.0 * p[0] - 1.0) / 2.0
    }

    /// Embed a ground-manifold state into the 21-level optical space.
    pub fn embed_optical(&self) -> DensityMatrix {
        match self.space {
            StateSpace::Optical => self.clone(),
            StateSpace::Ground => {
                let mut mat = CMat::zeros(optical::OPTICAL_DIM, optical::OPTICAL_DIM);
                mat.view_mut((0, 0), (9, 9)).copy_from(&self.mat);
                DensityMatrix {
                    mat,
                    space: StateSpace::Optical,
                }
            }
        }
    }

    /// Project onto the ground manifold and renormalize. Errors out when the
    /// population left outside the ground block exceeds `max_residual`.
    pub fn project_ground(&self, max_residual: f64) -> Result<DensityMatrix, DynamicsError> {
        match self.space {
            StateSpace::Ground => Ok(self.clone()),
            StateSpace::Optical => {
                let sub = self.mat.view((0, 0), (9, 9)).into_owned();
                let kept = trace(&sub).re;
                let residual = 1.0 - kept;
                if residual > max_residual {
                    return Err(DynamicsError::ResidualExcitedPopulation { residual });
                }
                Ok(DensityMatrix {
                    mat: sub * c(1.0 / kept),
                    space: StateSpace::Ground,
                })
            }
        }
    }
}

/// Rates of the optical cycle and the readout calibration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OpticalModel {
    /// Ground → excited excitation rate under the polarization laser, Hz.
    pub pump_rate: f64,
    /// Excited → ground radiative decay rate, Hz.
    pub radiative_rate: f64,
    /// Intersystem crossing rate from the m_S = 0 excited states, Hz.
    pub isc_rate_ms0: f64,
    /// Intersystem crossing rate from the m_S = ±1 excited states, Hz.
    pub isc_rate_ms1: f64,
    /// Singlet depopulation rate, Hz.
    pub singlet_decay: f64,
    /// Fraction of singlet decay landing in m_S = 0.
    pub singlet_branching_ms0: f64,
    /// Photon count rate of the brightest state |0,+1⟩, counts/s.
    pub counts_rate_bright: f64,
    /// Fractional count deficit of nuclear states other than m_I = +1.
    pub contrast_nuclear: f64,
    /// Fractional count deficit of electron states other than m_S = 0.
    pub contrast_electron: f64,
}

impl Default for OpticalModel {
    fn default() -> Self {
        OpticalModel {
            pump_rate: 10.0e6,
            radiative_rate: 66.0e6,
            isc_rate_ms0: 5.0e6,
            isc_rate_ms1: 50.0e6,
            singlet_decay: 3.3e6,
            singlet_branching_ms0: 0.9,
            counts_rate_bright: 3.0e5,
            contrast_nuclear: 0.20,
            contrast_electron: 0.30,
        }
    }
}

impl OpticalModel {
    pub fn validate(&self) -> Result<(), DynamicsError> {
        let rates = [
            ("pump_rate", self.pump_rate),
            ("radiative_rate", self.radiative_rate),
            ("isc_rate_ms0", self.isc_rate_ms0),
            ("isc_rate_ms1", self.isc_rate_ms1),
            ("singlet_decay", self.singlet_decay),
            ("counts_rate_bright", self.counts_rate_bright),
        ];
        for (name, r) in rates {
            if !(r.is_finite() && r >= 0.0) {
                return Err(DynamicsError::InvalidModel(format!(
                    "{name} must be a non-negative rate, got {r}"
                )));
            }
        }
        if !(0.0..=1.0).contains(&self.singlet_branching_ms0) {
            return Err(DynamicsError::InvalidModel(format!(
                "singlet_branching_ms0 must lie in [0,1], got {}",
                self.singlet_branching_ms0
            )));
        }
        if self.isc_rate_ms1 <= self.isc_rate_ms0 {
            return Err(DynamicsError::InvalidModel(format!(
                "isc_rate_ms1 ({}) must exceed isc_rate_ms0 ({}); the spin-dependent \
                 crossing is what polarizes the electron",
                self.isc_rate_ms1, self.isc_rate_ms0
            )));
        }
        for (name, v) in [
            ("contrast_nuclear", self.contrast_nuclear),
            ("contrast_electron", self.contrast_electron),
        ] {
            if !(0.0..1.0).contains(&v) {
                return Err(DynamicsError::InvalidModel(format!(
                    "{name} must lie in [0,1), got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// Phenomenological relaxation and dephasing times.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    /// Electron spin relaxation time, s.
    pub t1e: f64,
    /// Electron inhomogeneous dephasing time, s.
    pub t2e_star: f64,
    /// Nuclear inhomogeneous dephasing time, s.
    pub t2n_star: f64,
    /// Nuclear relaxation time, s (infinite by default).
    pub t1n: f64,
    /// Whether sweep signals carry Poisson shot noise.
    pub shot_noise: bool,
    /// Extra Lorentzian NMR broadening beyond 1/(π T₂ₙ*), FWHM in Hz.
    /// Carries the pressure-dependent width trend.
    pub extra_nmr_fwhm: f64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        NoiseModel {
            t1e: 254.0e-6,
            t2e_star: 50.0e-9,
            t2n_star: 70.0e-6,
            t1n: f64::INFINITY,
            shot_noise: true,
            extra_nmr_fwhm: 0.0,
        }
    }
}

impl NoiseModel {
    pub fn validate(&self) -> Result<(), DynamicsError> {
        for (name, t) in [
            ("t1e", self.t1e),
            ("t2e_star", self.t2e_star),
            ("t2n_star", self.t2n_star),
            ("t1n", self.t1n),
        ] {
            if !(t > 0.0) {
                return Err(DynamicsError::InvalidModel(format!(
                    "{name} must be positive, got {t}"
                )));
            }
        }
        if self.t2e_star > 2.0 * self.t1e {
            return Err(DynamicsError::InvalidModel(format!(
                "t2e_star ({}) exceeds 2·t1e ({})",
                self.t2e_star,
                2.0 * self.t1e
            )));
        }
        if !(self.extra_nmr_fwhm.is_finite() && self.extra_nmr_fwhm >= 0.0) {
            return Err(DynamicsError::InvalidModel(format!(
                "extra_nmr_fwhm must be non-negative, got {}",
                self.extra_nmr_fwhm
            )));
        }
        Ok(())
    }

    /// Effective nuclear coherence decay rate 1/T₂ including the extra
    /// broadening knob, 1/s.
    pub fn nuclear_coherence_rate(&self) -> f64 {
        1.0 / self.t2n_star + std::f64::consts::PI * self.extra_nmr_fwhm
    }
}
