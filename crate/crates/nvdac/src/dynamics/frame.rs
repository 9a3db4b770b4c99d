//! Rotating frames for microwave and radio-frequency drives.
//!
//! Pulsed control works in the eigenbasis of the static ground Hamiltonian
//! (so exact level positions, including second-order hyperfine shifts, are
//! kept) and in a diagonal rotating frame derived from the drive tones. A
//! single-tone drive `Ω cos(2πft+φ)` keeps, for every coupled level pair,
//! only the co-rotating half that becomes static in the frame; the fast
//! counter-rotating rest is dropped (rotating-wave approximation). All
//! segments of one pulse sequence must share one frame so interpulse
//! coherence phases compose correctly.

use num_complex::Complex64 as C64;

use super::lindblad::Collapse;
use super::{DynamicsError, NoiseModel};
use crate::linalg::{c, CMat};
use crate::spinops::{basis_index, spin1_operators, Hamiltonian};

/// Which control channel a tone drives.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ToneChannel {
    /// Microwave, couples electron sublevels via Sx.
    Mw,
    /// Radio frequency, couples nuclear sublevels via Ix.
    Rf,
}

/// A continuous drive tone.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveTone {
    pub channel: ToneChannel,
    /// Carrier frequency, Hz.
    pub freq: f64,
    /// On-resonance Rabi frequency of the addressed transition, Hz.
    pub rabi: f64,
    /// Drive phase, rad.
    pub phase: f64,
}

/// Eigenbasis of the static ground Hamiltonian with columns permuted to the
/// product-label order and phases fixed for determinism.
#[derive(Debug, Clone)]
pub struct GroundBasis {
    /// Columns: eigenstate dominated by product label k at column k.
    pub u: CMat,
    /// Exact eigenenergies in label order, Hz.
    pub energies: [f64; 9],
}

impl GroundBasis {
    pub fn new(h: &Hamiltonian) -> Result<Self, DynamicsError> {
        let eig = crate::spinops::eigensystem(h)?;
        let mut u = CMat::zeros(9, 9);
        let mut energies = [0.0; 9];
        for (k, &(m_s, m_i)) in h.labels().iter().enumerate() {
            let col = eig.eigenstate_for(m_s, m_i)?;
            let mut v = eig.states.column(col).into_owned();
            // Rotate the dominant amplitude onto the positive real axis.
            let pivot = v[k];
            if pivot.norm() > 0.0 {
                v *= pivot.conj() / C64::new(pivot.norm(), 0.0);
            }
            u.set_column(k, &v);
            energies[k] = eig.energies[col];
        }
        Ok(GroundBasis { u, energies })
    }

    /// Transform a product-basis operator into the dressed basis.
    pub fn dress(&self, op: &CMat) -> CMat {
        self.u.adjoint() * op * &self.u
    }

    pub fn to_dressed(&self, rho_product: &CMat) -> CMat {
        self.u.adjoint() * rho_product * &self.u
    }

    pub fn to_product(&self, rho_dressed: &CMat) -> CMat {
        &self.u * rho_dressed * self.u.adjoint()
    }
}

/// Diagonal rotating-frame offsets, one per ground basis label.
///
/// The pattern `ν = f_mw·m_S² + s·f_rf·m_I²` (s the sign of the quadrupole
/// constant's level ordering) makes both electron branches and both nuclear
/// transitions co-rotate toward their physical resonances, so a single
/// frame serves sequences mixing microwave and RF tones.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SequenceFrame {
    pub offsets: [f64; 9],
}

impl SequenceFrame {
    /// Lab frame: no offsets.
    pub fn lab() -> Self {
        SequenceFrame { offsets: [0.0; 9] }
    }

    /// Frame for the given tone frequencies. `q_negative` selects the
    /// nuclear pattern sign matching the level ordering.
    pub fn for_tones(f_mw: Option<f64>, f_rf: Option<f64>, q_negative: bool) -> Self {
        let f_mw = f_mw.unwrap_or(0.0);
        let f_rf = f_rf.unwrap_or(0.0);
        let s_n = if q_negative { -1.0 } else { 1.0 };
        let mut offsets = [0.0; 9];
        for m_s in [1i8, 0, -1] {
            for m_i in [1i8, 0, -1] {
                let nu = f_mw * (m_s as f64).powi(2) + s_n * f_rf * (m_i as f64).powi(2);
                offsets[basis_index(m_s, m_i)] = nu;
            }
        }
        SequenceFrame { offsets }
    }
}

/// Static rotating-frame generator of one pulse segment: dressed diagonal,
/// RWA drive couplings, transformed noise channels.
#[derive(Debug, Clone)]
pub struct DriveFrame {
    pub h_rot: CMat,
    pub collapses: Vec<Collapse>,
    /// Set when the drive strength is an appreciable fraction (> 20%) of
    /// the nearest neighboring transition's detuning, i.e. when the
    /// rotating-wave treatment starts leaking.
    pub rwa_warning: bool,
}

/// Drive coupling operator in the product basis, scaled so an on-resonance
/// pair oscillates at exactly the tone's Rabi frequency.
pub(crate) fn bare_drive_operator(channel: ToneChannel) -> CMat {
    let ops = spin1_operators();
    let root2 = c(2.0_f64.sqrt());
    match channel {
        ToneChannel::Mw => crate::linalg::kron(&(&ops.sx * root2), &ops.identity),
        ToneChannel::Rf => crate::linalg::kron(&ops.identity, &(&ops.sx * root2)),
    }
}

/// Assemble the rotating-frame Hamiltonian for an optional drive tone on
/// top of the dressed static levels, plus the noise channels.
pub fn pulse_generator(
    basis: &GroundBasis,
    frame: &SequenceFrame,
    tone: Option<&DriveTone>,
    noise: &NoiseModel,
) -> DriveFrame {
    let mut h_rot = CMat::zeros(9, 9);
    for k in 0..9 {
        h_rot[(k, k)] = c(basis.energies[k] - frame.offsets[k]);
    }

    let mut rwa_warning = false;
    if let Some(tone) = tone {
        let x = basis.dress(&bare_drive_operator(tone.channel));
        let half = c(tone.rabi / 2.0);
        let phase_pos = C64::from_polar(1.0, tone.phase);
        let phase_neg = phase_pos.conj();
        let mut detunings: Vec<f64> = Vec::new();
        for a in 0..9 {
            for b in 0..9 {
                if a == b || x[(a, b)].norm() < 1e-6 {
                    continue;
                }
                let dnu = frame.offsets[a] - frame.offsets[b];
                // Keep the co-rotating half matching this pair's frame.
                let coupling = if (dnu + tone.freq).abs() < 1.0 {
                    Some(half * phase_pos)
                } else if (dnu - tone.freq).abs() < 1.0 {
                    Some(half * phase_neg)
                } else {
                    None
                };
                if let Some(g) = coupling {
                    h_rot[(a, b)] += g * x[(a, b)];
                    if a < b {
                        let eff = (basis.energies[a] - frame.offsets[a])
                            - (basis.energies[b] - frame.offsets[b]);
                        detunings.push(eff.abs());
                    }
                }
            }
        }
        detunings.sort_by(f64::total_cmp);
        // Smallest detuning is the addressed transition; the next one is
        // the nearest neighbor the RWA must not touch. The carrier itself
        // bounds the counter-rotating error.
        let neighbor = detunings
            .get(1)
            .copied()
            .unwrap_or(f64::INFINITY)
            .min(2.0 * tone.freq);
        if tone.rabi > 0.2 * neighbor {
            rwa_warning = true;
        }
    }

    // Hermitize: the two RWA halves of a Hermitian drive land symmetrically,
    // but guard against roundoff.
    let h_rot = (&h_rot + h_rot.adjoint()) * c(0.5);

    let collapses = dressed_noise_collapses(basis, noise);

    DriveFrame {
        h_rot,
        collapses,
        rwa_warning,
    }
}

/// Noise channels transformed into the dressed basis. Dephasing operators
/// (diagonal in the product basis) are projected back onto the diagonal
/// after dressing: a pure-dephasing channel must not leak population
/// between hyperfine-mixed eigenstates.
pub(crate) fn dressed_noise_collapses(basis: &GroundBasis, noise: &NoiseModel) -> Vec<Collapse> {
    ground_noise_collapses(noise)
        .into_iter()
        .map(|col| {
            let product_diagonal = (0..9)
                .all(|a| (0..9).all(|b| a == b || col.op[(a, b)].norm() < 1e-12));
            let mut dressed = basis.dress(&col.op);
            if product_diagonal {
                for a in 0..9 {
                    for b in 0..9 {
                        if a != b {
                            dressed[(a, b)] = c(0.0);
                        }
                    }
                }
            }
            Collapse::new(dressed, col.rate)
        })
        .collect()
}

/// Phenomenological channels of the ground manifold in the product basis:
/// electron all-to-all hopping (T₁ₑ), electron and nuclear pure dephasing
/// (T₂*), optional nuclear hopping (T₁ₙ).
pub fn ground_noise_collapses(noise: &NoiseModel) -> Vec<Collapse> {
    let ops = spin1_operators();
    let mut out = Vec::new();

    // All-to-all electron hopping at rate 1/(3 T₁ₑ) relaxes any population
    // imbalance with time constant T₁ₑ.
    let hop_e = 1.0 / (3.0 * noise.t1e);
    for from in 0..3 {
        for to in 0..3 {
            if from == to {
                continue;
            }
            let mut op = CMat::zeros(9, 9);
            for n in 0..3 {
                op[(3 * to + n, 3 * from + n)] = c(1.0);
            }
            out.push(Collapse::new(op, hop_e));
        }
    }

    // Pure electron dephasing beyond what the hopping already causes.
    // Hopping damps single-quantum coherences at 2/(3 T₁ₑ); a Z-type channel
    // at rate γ adds γ/2.
    let gamma_phi_e = (2.0 * (1.0 / noise.t2e_star - 2.0 / (3.0 * noise.t1e))).max(0.0);
    if gamma_phi_e > 0.0 {
        let sz_e = crate::linalg::kron(&ops.sz, &ops.identity);
        out.push(Collapse::new(sz_e, gamma_phi_e));
    }

    // Nuclear dephasing, including the extra pressure-dependent broadening.
    // t2n_star is the total observed coherence time: electron hopping
    // already dephases the nucleus (a flip carries the coherence into a
    // hyperfine-shifted manifold and scrambles its phase at rate
    // 2/(3 T₁ₑ)), so only the remainder enters as a pure-dephasing channel.
    let mut nuclear_rate = noise.nuclear_coherence_rate() - 2.0 / (3.0 * noise.t1e);
    if noise.t1n.is_finite() {
        let hop_n = 1.0 / (3.0 * noise.t1n);
        for from in 0..3 {
            for to in 0..3 {
                if from == to {
                    continue;
                }
                let mut op = CMat::zeros(9, 9);
                for e in 0..3 {
                    op[(3 * e + to, 3 * e + from)] = c(1.0);
                }
                out.push(Collapse::new(op, hop_n));
            }
        }
        nuclear_rate -= 2.0 / (3.0 * noise.t1n);
    }
    let gamma_phi_n = (2.0 * nuclear_rate).max(0.0);
    if gamma_phi_n > 0.0 {
        let iz_n = crate::linalg::kron(&ops.identity, &ops.sz);
        out.push(Collapse::new(iz_n, gamma_phi_n));
    }

    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spinops::{build_ground_hamiltonian, FieldVector, NvParams};
    use approx::assert_relative_eq;

    fn basis_at(b: f64) -> (NvParams, GroundBasis) {
        let p = NvParams::ambient();
        let h = build_ground_hamiltonian(&p, &FieldVector::aligned(b));
        let basis = GroundBasis::new(&h).unwrap();
        (p, basis)
    }

    #[test]
    fn dressed_energies_match_eigensystem() {
        let (p, basis) = basis_at(460.0);
        // The dressed diagonal reproduces the exact transition frequency,
        // second-order shifts included.
        let f0 = basis.energies[basis_index(0, 1)] - basis.energies[basis_index(0, 0)];
        let formula = -(p.q.abs() + p.gamma_n * 460.0);
        assert!((f0 - formula).abs() < 2.0e3, "{f0} vs {formula}");
    }

    #[test]
    fn unitary_transform_round_trips() {
        let (_, basis) = basis_at(460.0);
        let gram = basis.u.adjoint() * &basis.u;
        assert!(
            crate::linalg::max_abs_diff(&gram, &CMat::identity(9, 9)) < 1e-9,
            "dressing transform must be unitary"
        );
        let rho = super::super::DensityMatrix::pure_ground(0, 1).mat;
        let back = basis.to_product(&basis.to_dressed(&rho));
        assert!(crate::linalg::max_abs_diff(&back, &rho) < 1e-12);
    }

    #[test]
    fn resonant_rf_tone_sits_at_zero_detuning() {
        let (p, basis) = basis_at(460.0);
        let f0 = (basis.energies[basis_index(0, 0)] - basis.energies[basis_index(0, 1)]).abs();
        let frame = SequenceFrame::for_tones(None, Some(f0), p.q < 0.0);
        let gen = pulse_generator(
            &basis,
            &frame,
            Some(&DriveTone {
                channel: ToneChannel::Rf,
                freq: f0,
                rabi: 25.0e3,
                phase: 0.0,
            }),
            &NoiseModel::default(),
        );
        let a = basis_index(0, 1);
        let b = basis_index(0, 0);
        let detuning = (gen.h_rot[(a, a)] - gen.h_rot[(b, b)]).re;
        assert!(detuning.abs() < 1.0, "effective detuning {detuning}");
        // drive coupling = rabi/2 on the addressed pair
        assert_relative_eq!(gen.h_rot[(a, b)].norm(), 12.5e3, max_relative = 1e-3);
        assert!(!gen.rwa_warning);
        // the satellite m_I = 0 ↔ −1 transition sits ~283 kHz away
        let c_idx = basis_index(0, -1);
        let sat = (gen.h_rot[(b, b)] - gen.h_rot[(c_idx, c_idx)]).re;
        assert!(
            (sat.abs() - 283.0e3).abs() < 15.0e3,
            "satellite detuning {sat}"
        );
    }

    #[test]
    fn oversized_rabi_sets_rwa_warning() {
        let (p, basis) = basis_at(460.0);
        let f0 = (basis.energies[basis_index(0, 0)] - basis.energies[basis_index(0, 1)]).abs();
        let frame = SequenceFrame::for_tones(None, Some(f0), p.q < 0.0);
        let gen = pulse_generator(
            &basis,
            &frame,
            Some(&DriveTone {
                channel: ToneChannel::Rf,
                freq: f0,
                rabi: 120.0e3, // > 20% of the 283 kHz satellite detuning
                phase: 0.0,
            }),
            &NoiseModel::default(),
        );
        assert!(gen.rwa_warning);
    }

    #[test]
    fn noise_channels_have_nonnegative_rates() {
        let collapses = ground_noise_collapses(&NoiseModel::default());
        assert!(!collapses.is_empty());
        for col in &collapses {
            assert!(col.rate >= 0.0);
        }
    }
}
