//! The 21-level optical model: laser pumping, ESLAC nuclear polarization,
//! spin-dependent readout, and continuous-wave steady states.
//!
//! Levels: 9 ground ⊕ 9 excited (product bases as in `spinops`) ⊕ 3
//! nuclear-resolved singlet states. The optical cycle is a set of transfer
//! channels (pump, radiative decay, spin-dependent intersystem crossing,
//! singlet decay); the electron–nuclear flip-flops near the excited-state
//! level anti-crossing enter coherently through the transverse hyperfine
//! coupling of the excited Hamiltonian.
//!
//! Generators are evaluated in a secular frame: basis states are clustered
//! by near-degeneracy across nonzero couplings, each cluster rotates at its
//! mean energy, and couplings bridging more than [`KEEP_WINDOW`] are
//! dropped. Transfer channels are invariant under any diagonal frame, so
//! only the retained coherent couplings matter, and the resulting generator
//! norm stays at the scale of the physical detunings instead of the
//! zero-field splittings. Lab-frame coherence phases are restored on exit.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use super::frame::ground_noise_collapses;
use super::lindblad::{liouvillian, steady_state, Collapse, Propagator};
use super::{DensityMatrix, DynamicsError, NoiseModel, OpticalModel, StateSpace};
use crate::linalg::{c, CMat};
use crate::spinops::{
    basis_index, build_excited_hamiltonian, build_ground_hamiltonian, spin1_operators,
    FieldVector, NvParams,
};

pub const OPTICAL_DIM: usize = 21;

/// Couplings detuned by more than this (Hz) are dropped from the secular
/// optical generator.
const KEEP_WINDOW: f64 = 1.2e9;

/// Block of the optical level scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OpticalBlock {
    Ground,
    Excited,
    Singlet,
}

/// Index of |block; m_S, m_I⟩ in the 21-level space. The singlet block is
/// indexed by m_I alone.
pub fn optical_index(block: OpticalBlock, m_s: i8, m_i: i8) -> usize {
    match block {
        OpticalBlock::Ground => basis_index(m_s, m_i),
        OpticalBlock::Excited => 9 + basis_index(m_s, m_i),
        OpticalBlock::Singlet => 18 + (1 - m_i) as usize,
    }
}

/// Full 21-level Hamiltonian: ground ⊕ excited ⊕ singlet blocks, Hz.
fn optical_hamiltonian(p: &NvParams, b: &FieldVector) -> CMat {
    let mut h = CMat::zeros(OPTICAL_DIM, OPTICAL_DIM);
    let hg = build_ground_hamiltonian(p, b);
    let he = build_excited_hamiltonian(p, b);
    h.view_mut((0, 0), (9, 9)).copy_from(&hg.matrix);
    h.view_mut((9, 9), (9, 9)).copy_from(&he.matrix);
    // Singlet: nuclear quadrupole and Zeeman terms only.
    let ops = spin1_operators();
    let [bx, by, bz] = b.components();
    let hs = (&ops.sz * &ops.sz) * c(p.q)
        + (&ops.sx * c(bx) + &ops.sy * c(by) + &ops.sz * c(bz)) * c(-p.gamma_n);
    h.view_mut((18, 18), (3, 3)).copy_from(&hs);
    h
}

/// Transfer channels of the optical cycle plus the ground-manifold noise
/// and a global nuclear dephasing channel.
fn optical_collapses(
    model: &OpticalModel,
    noise: &NoiseModel,
    laser_on: bool,
) -> Vec<Collapse> {
    let mut out = Vec::new();
    let ms = [1i8, 0, -1];
    for &m_s in &ms {
        for &m_i in &ms {
            let g = optical_index(OpticalBlock::Ground, m_s, m_i);
            let e = optical_index(OpticalBlock::Excited, m_s, m_i);
            let s = optical_index(OpticalBlock::Singlet, 0, m_i);
            if laser_on && model.pump_rate > 0.0 {
                out.push(Collapse::transfer(OPTICAL_DIM, g, e, model.pump_rate));
            }
            out.push(Collapse::transfer(OPTICAL_DIM, e, g, model.radiative_rate));
            let isc = if m_s == 0 {
                model.isc_rate_ms0
            } else {
                model.isc_rate_ms1
            };
            out.push(Collapse::transfer(OPTICAL_DIM, e, s, isc));
        }
        // singlet decay branches over the electron sublevels
        let branch = if m_s == 0 {
            model.singlet_branching_ms0
        } else {
            (1.0 - model.singlet_branching_ms0) / 2.0
        };
        if branch > 0.0 {
            for &m_i in &ms {
                let s = optical_index(OpticalBlock::Singlet, 0, m_i);
                let g = optical_index(OpticalBlock::Ground, m_s, m_i);
                out.push(Collapse::transfer(
                    OPTICAL_DIM,
                    s,
                    g,
                    model.singlet_decay * branch,
                ));
            }
        }
    }

    // Ground-manifold relaxation/dephasing, embedded.
    for col in ground_noise_collapses(noise) {
        let mut op = CMat::zeros(OPTICAL_DIM, OPTICAL_DIM);
        op.view_mut((0, 0), (9, 9)).copy_from(&col.op);
        out.push(Collapse::new(op, col.rate));
    }
    out
}

/// Cluster levels linked by kept couplings and return the frame offsets
/// (cluster-mean energies) plus the secular Hamiltonian `H − diag(ν)` with
/// inter-cluster couplings dropped.
fn secular_frame(h: &CMat) -> (Vec<f64>, CMat) {
    let n = h.nrows();
    let energies: Vec<f64> = (0..n).map(|k| h[(k, k)].re).collect();

    // Union-find over kept couplings.
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut Vec<usize>, mut k: usize) -> usize {
        while parent[k] != k {
            parent[k] = parent[parent[k]];
            k = parent[k];
        }
        k
    }
    for a in 0..n {
        for b in (a + 1)..n {
            if h[(a, b)].norm() > 1e-3 && (energies[a] - energies[b]).abs() < KEEP_WINDOW {
                let ra = find(&mut parent, a);
                let rb = find(&mut parent, b);
                if ra != rb {
                    parent[ra] = rb;
                }
            }
        }
    }

    let mut cluster_sum: HashMap<usize, (f64, usize)> = HashMap::new();
    for k in 0..n {
        let r = find(&mut parent, k);
        let entry = cluster_sum.entry(r).or_insert((0.0, 0));
        entry.0 += energies[k];
        entry.1 += 1;
    }
    let nu: Vec<f64> = (0..n)
        .map(|k| {
            let r = find(&mut parent, k);
            let (sum, count) = cluster_sum[&r];
            sum / count as f64
        })
        .collect();

    let mut secular = CMat::zeros(n, n);
    for a in 0..n {
        secular[(a, a)] = c(energies[a] - nu[a]);
        for b in 0..n {
            if a != b && find(&mut parent, a) == find(&mut parent, b) {
                secular[(a, b)] = h[(a, b)];
            }
        }
    }
    (nu, secular)
}

/// Cached propagator of one optical segment, with the frame bookkeeping
/// needed to restore lab-frame coherence phases.
#[derive(Debug)]
pub struct OpticalPropagator {
    prop: Propagator,
    nu: Vec<f64>,
    duration: f64,
}

impl OpticalPropagator {
    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix, DynamicsError> {
        let mut out = self.prop.apply(rho)?;
        let tau = 2.0 * std::f64::consts::PI;
        let n = out.dim();
        for a in 0..n {
            for b in 0..n {
                let dphi = -tau * (self.nu[a] - self.nu[b]) * self.duration;
                if dphi != 0.0 {
                    out.mat[(a, b)] *= C64::from_polar(1.0, dphi);
                }
            }
        }
        Ok(out)
    }
}

fn f64_bits(values: &[f64]) -> Vec<u64> {
    values.iter().map(|v| v.to_bits()).collect()
}

fn propagator_cache() -> &'static Mutex<HashMap<Vec<u64>, Arc<OpticalPropagator>>> {
    static CACHE: OnceLock<Mutex<HashMap<Vec<u64>, Arc<OpticalPropagator>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Propagator for `duration` of laser illumination (or plain optical decay
/// when `laser_on` is false). Results are cached: sweeps and repeated shots
/// reuse the same exponential.
pub fn pump_propagator(
    p: &NvParams,
    b: &FieldVector,
    model: &OpticalModel,
    noise: &NoiseModel,
    duration: f64,
    laser_on: bool,
) -> Arc<OpticalPropagator> {
    let mut key = f64_bits(&[
        p.d_gs,
        p.d_es,
        p.q,
        p.a_par,
        p.a_perp,
        p.a_par_es,
        p.a_perp_es,
        p.gamma_e,
        p.gamma_n,
        b.magnitude,
        b.theta,
        b.phi,
        model.pump_rate,
        model.radiative_rate,
        model.isc_rate_ms0,
        model.isc_rate_ms1,
        model.singlet_decay,
        model.singlet_branching_ms0,
        noise.t1e,
        noise.t2e_star,
        noise.t2n_star,
        noise.t1n,
        noise.extra_nmr_fwhm,
        duration,
    ]);
    key.push(laser_on as u64);

    if let Some(hit) = propagator_cache().lock().unwrap().get(&key) {
        return Arc::clone(hit);
    }

    let h = optical_hamiltonian(p, b);
    let (nu, secular) = secular_frame(&h);
    let collapses = optical_collapses(model, noise, laser_on);
    let l = liouvillian(&secular, &collapses);
    let built = Arc::new(OpticalPropagator {
        prop: Propagator::from_liouvillian(&l, duration),
        nu,
        duration,
    });

    let mut cache = propagator_cache().lock().unwrap();
    if cache.len() >= 128 {
        cache.clear();
    }
    cache.insert(key, Arc::clone(&built));
    built
}

/// Evolve through `duration` of optical pumping. Ground-manifold input is
/// embedded into the 21-level space; the output stays 21-dimensional.
pub fn optical_pump(
    rho: &DensityMatrix,
    model: &OpticalModel,
    p: &NvParams,
    b: &FieldVector,
    duration: f64,
    noise: &NoiseModel,
) -> Result<DensityMatrix, DynamicsError> {
    let rho21 = rho.embed_optical();
    if duration == 0.0 {
        return Ok(rho21);
    }
    pump_propagator(p, b, model, noise, duration, true).apply(&rho21)
}

/// Optical decay with the laser off (excited and singlet populations drain
/// back to the ground manifold).
pub fn optical_settle(
    rho: &DensityMatrix,
    model: &OpticalModel,
    p: &NvParams,
    b: &FieldVector,
    duration: f64,
    noise: &NoiseModel,
) -> Result<DensityMatrix, DynamicsError> {
    let rho21 = rho.embed_optical();
    if duration == 0.0 {
        return Ok(rho21);
    }
    pump_propagator(p, b, model, noise, duration, false).apply(&rho21)
}

/// One point of a DNP field scan.
#[derive(Debug, Clone, Copy)]
pub struct DnpPoint {
    pub b_gauss: f64,
    /// Normalized nuclear polarization toward m_I = +1 after the pump.
    pub polarization: f64,
}

/// Nuclear polarization after a fixed pump time, for each aligned-field
/// magnitude. The curve peaks at the excited-state anti-crossing.
pub fn dnp_efficiency_scan(
    model: &OpticalModel,
    p: &NvParams,
    noise: &NoiseModel,
    b_magnitudes: &[f64],
    pump_time: f64,
) -> Result<Vec<DnpPoint>, DynamicsError> {
    b_magnitudes
        .par_iter()
        .map(|&b_mag| {
            let b = FieldVector::aligned(b_mag);
            let rho0 = DensityMatrix::thermal_ground();
            let out = optical_pump(&rho0, model, p, &b, pump_time, noise)?;
            Ok(DnpPoint {
                b_gauss: b_mag,
                polarization: out.nuclear_polarization(),
            })
        })
        .collect()
}

/// Photon count rates per level, counts/s: nuclear and electron contrast
/// factors multiply the bright-state rate; the singlet is dark. Excited
/// states carry the rate of the ground state they decay into.
pub fn readout_rates(model: &OpticalModel) -> Vec<f64> {
    let mut rates = vec![0.0; OPTICAL_DIM];
    let ms = [1i8, 0, -1];
    for &m_s in &ms {
        for &m_i in &ms {
            let f_e = if m_s == 0 {
                1.0
            } else {
                1.0 - model.contrast_electron
            };
            let f_n = if m_i == 1 {
                1.0
            } else {
                1.0 - model.contrast_nuclear
            };
            let r = model.counts_rate_bright * f_e * f_n;
            rates[optical_index(OpticalBlock::Ground, m_s, m_i)] = r;
            rates[optical_index(OpticalBlock::Excited, m_s, m_i)] = r;
        }
    }
    rates
}

/// Expected photon counts in one readout window and the standard error of
/// the mean over `shots` repetitions.
pub fn readout(
    rho: &DensityMatrix,
    model: &OpticalModel,
    window: f64,
    shots: u64,
) -> Result<(f64, f64), DynamicsError> {
    if !(window > 0.0) {
        return Err(DynamicsError::InvalidWindow { window });
    }
    if shots == 0 {
        return Err(DynamicsError::InvalidModel(
            "shots must be at least 1".into(),
        ));
    }
    let rates = readout_rates(model);
    let mean: f64 = match rho.space {
        StateSpace::Optical => (0..OPTICAL_DIM)
            .map(|k| rho.population(k) * rates[k])
            .sum::<f64>(),
        StateSpace::Ground => (0..9).map(|k| rho.population(k) * rates[k]).sum::<f64>(),
    } * window;
    let sigma = (mean.max(0.0) / shots as f64).sqrt();
    Ok((mean, sigma))
}

/// Reusable steady-state solver for the CW NMR configuration (continuous
/// laser plus one RF tone). The dissipator superoperator is frame-invariant
/// (transfer channels and diagonal dephasing), so it is assembled once;
/// each tone frequency only rebuilds the coherent part before the solve.
pub struct CwNmrSolver {
    h_lab: CMat,
    secular_base: CMat,
    l_diss: CMat,
    q_negative: bool,
    radiative_rate: f64,
}

impl CwNmrSolver {
    pub fn new(p: &NvParams, b: &FieldVector, model: &OpticalModel, noise: &NoiseModel) -> Self {
        let h = optical_hamiltonian(p, b);
        let (_, secular_base) = secular_frame(&h);
        let collapses = optical_collapses(model, noise, true);
        let l_diss = liouvillian(&CMat::zeros(OPTICAL_DIM, OPTICAL_DIM), &collapses);
        CwNmrSolver {
            h_lab: h,
            secular_base,
            l_diss,
            q_negative: p.q < 0.0,
            radiative_rate: model.radiative_rate,
        }
    }

    /// Steady-state emission rate at one RF tone.
    pub fn rate(&self, f_rf: f64, rabi: f64) -> Result<f64, DynamicsError> {
        let mut secular = self.secular_base.clone();

        // The ground block needs a tone-anchored frame, not the per-level
        // cluster frame: each manifold rotates its nuclear sublevels at
        // s·f·m_I² relative to the m_I = 0 level, so the residual detuning
        // (transition frequency minus f_rf) survives on the diagonal and
        // the drive is static. The excited and singlet blocks keep their
        // cluster frame; the RF does nothing on their lifetimes.
        let s_n = if self.q_negative { -1.0 } else { 1.0 };
        let ms = [1i8, 0, -1];
        for &m_s in &ms {
            let ref_idx = optical_index(OpticalBlock::Ground, m_s, 0);
            let ref_energy = self.h_lab[(ref_idx, ref_idx)].re;
            for &m_i in &ms {
                let k = optical_index(OpticalBlock::Ground, m_s, m_i);
                let nu = ref_energy + s_n * f_rf * (m_i as f64).powi(2);
                secular[(k, k)] = c(self.h_lab[(k, k)].re - nu);
            }
        }
        let half = c(rabi / 2.0);
        for &m_s in &ms {
            for (hi, lo) in [(1i8, 0i8), (0, -1)] {
                let a = optical_index(OpticalBlock::Ground, m_s, hi);
                let b_idx = optical_index(OpticalBlock::Ground, m_s, lo);
                // |Δν| = f for both nuclear steps in the m² frame: keep Ω/2.
                secular[(a, b_idx)] += half;
                secular[(b_idx, a)] += half;
            }
        }

        let id = CMat::identity(OPTICAL_DIM, OPTICAL_DIM);
        let tau = 2.0 * std::f64::consts::PI;
        let l_coh = (crate::linalg::kron(&id, &secular)
            - crate::linalg::kron(&secular.transpose(), &id))
            * (-crate::linalg::I * c(tau));
        let l = &self.l_diss + l_coh;
        let ss = steady_state(&l, StateSpace::Optical)?;
        let p_es: f64 = (9..18).map(|k| ss.population(k)).sum();
        Ok(self.radiative_rate * p_es)
    }
}

/// One-shot convenience wrapper around [`CwNmrSolver`].
pub fn cw_nmr_rate(
    p: &NvParams,
    b: &FieldVector,
    model: &OpticalModel,
    noise: &NoiseModel,
    f_rf: f64,
    rabi: f64,
) -> Result<f64, DynamicsError> {
    CwNmrSolver::new(p, b, model, noise).rate(f_rf, rabi)
}

/// CW ODMR steady-state fluorescence for a single NV orientation: 7-level
/// electron-only scheme (3 ground ⊕ 3 excited ⊕ 1 singlet) with the ground
/// block eigen-dressed so misaligned fields shift and mix the resonances
/// exactly.
pub fn cw_odmr_rate(
    p: &NvParams,
    b: &FieldVector,
    model: &OpticalModel,
    noise: &NoiseModel,
    f_mw: f64,
    rabi: f64,
) -> Result<f64, DynamicsError> {
    let ops = spin1_operators();
    let [bx, by, bz] = b.components();
    let h3 = (&ops.sz * &ops.sz) * c(p.d_gs)
        + (&ops.sx * c(bx) + &ops.sy * c(by) + &ops.sz * c(bz)) * c(p.gamma_e);
    let eig = h3.clone().symmetric_eigen();

    // Label dressed states by dominant m_S overlap.
    let mut order = [0usize; 3];
    let mut used = [false; 3];
    for label in 0..3 {
        let mut best = (usize::MAX, 0.0);
        for k in 0..3 {
            if used[k] {
                continue;
            }
            let w = eig.eigenvectors[(label, k)].norm_sqr();
            if w > best.1 {
                best = (k, w);
            }
        }
        order[label] = best.0;
        used[best.0] = true;
    }
    let energies: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut u = CMat::zeros(3, 3);
    for (label, &k) in order.iter().enumerate() {
        u.set_column(label, &eig.eigenvectors.column(k));
    }

    let dim = 7usize;
    let mut h = CMat::zeros(dim, dim);
    // Ground block: dressed energies minus the tone frame f·m_S².
    let frame = [f_mw, 0.0, f_mw];
    for k in 0..3 {
        h[(k, k)] = c(energies[k] - frame[k]);
    }
    // RWA drive √2·Sx dressed, kept where |Δν| = f.
    let x = u.adjoint() * (&ops.sx * c(2.0_f64.sqrt())) * &u;
    let half = c(rabi / 2.0);
    for a in 0..3 {
        for b_idx in 0..3 {
            if a == b_idx {
                continue;
            }
            if (frame[a] - frame[b_idx]).abs() > 1.0 {
                h[(a, b_idx)] += half * x[(a, b_idx)];
            }
        }
    }
    // Excited block: secular electron energies.
    let b_par = bz;
    for (slot, m_s) in [(3usize, 1i8), (4, 0), (5, -1)] {
        h[(slot, slot)] = c(p.d_es * (m_s as f64).powi(2) + p.gamma_e * b_par * m_s as f64);
    }

    let mut collapses = Vec::new();
    for (g, e, m_s) in [(0usize, 3usize, 1i8), (1, 4, 0), (2, 5, -1)] {
        collapses.push(Collapse::transfer(dim, g, e, model.pump_rate));
        collapses.push(Collapse::transfer(dim, e, g, model.radiative_rate));
        let isc = if m_s == 0 {
            model.isc_rate_ms0
        } else {
            model.isc_rate_ms1
        };
        collapses.push(Collapse::transfer(dim, e, 6, isc));
        let branch = if m_s == 0 {
            model.singlet_branching_ms0
        } else {
            (1.0 - model.singlet_branching_ms0) / 2.0
        };
        collapses.push(Collapse::transfer(dim, 6, g, model.singlet_decay * branch));
    }
    // Electron dephasing sets the ODMR linewidth. Keep only the diagonal
    // of the dressed operator: a pure-dephasing channel must not shuffle
    // population between mixed eigenstates.
    let sz_dressed = u.adjoint() * &ops.sz * &u;
    let mut op = CMat::zeros(dim, dim);
    for k in 0..3 {
        op[(k, k)] = c(sz_dressed[(k, k)].re);
    }
    collapses.push(Collapse::new(op, 2.0 / noise.t2e_star));
    // T₁ hopping keeps the zero-drive steady state honest.
    let hop = 1.0 / (3.0 * noise.t1e);
    for from in 0..3 {
        for to in 0..3 {
            if from != to {
                collapses.push(Collapse::transfer(dim, from, to, hop));
            }
        }
    }

    let l = liouvillian(&h, &collapses);
    let dim_space = StateSpace::Ground; // placeholder, dims differ
    let _ = dim_space;
    // steady_state expects a StateSpace; solve directly here instead.
    let n2 = dim * dim;
    let mut a_mat = l.clone();
    let mut rhs = crate::linalg::CVec::zeros(n2);
    rhs[0] = c(1.0);
    for j in 0..n2 {
        a_mat[(0, j)] = c(0.0);
    }
    for k in 0..dim {
        a_mat[(0, k * (dim + 1))] = c(1.0);
    }
    let x_vec = a_mat
        .full_piv_lu()
        .solve(&rhs)
        .ok_or(DynamicsError::SteadyStateFailed)?;
    let mat = CMat::from_column_slice(dim, dim, x_vec.as_slice());
    let tr: f64 = (0..dim).map(|k| mat[(k, k)].re).sum();
    let p_es: f64 = (3..6).map(|k| mat[(k, k)].re / tr).sum();
    Ok(model.radiative_rate * p_es)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn pump_far_from_eslac_polarizes_electron_only() {
        let p = NvParams::ambient();
        let model = OpticalModel::default();
        let noise = NoiseModel::default();
        let rho0 = DensityMatrix::thermal_ground();
        let out = optical_pump(&rho0, &model, &p, &FieldVector::zero(), 5.0e-6, &noise).unwrap();
        let settled = optical_settle(&out, &model, &p, &FieldVector::zero(), 4.0e-6, &noise)
            .unwrap();
        let pe = settled.ground_electron_populations();
        assert!(pe[1] > 0.85, "m_S = 0 population {pe:?}");
        let pn = settled.nuclear_populations();
        for p_i in pn {
            assert!((p_i - 1.0 / 3.0).abs() < 0.05, "nuclear stays thermal: {pn:?}");
        }
        assert!((settled.trace() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn pump_at_eslac_polarizes_nucleus() {
        let p = NvParams::ambient();
        let model = OpticalModel::default();
        let noise = NoiseModel::default();
        let rho0 = DensityMatrix::thermal_ground();
        let out =
            optical_pump(&rho0, &model, &p, &FieldVector::aligned(460.0), 5.0e-6, &noise)
                .unwrap();
        let pn = out.nuclear_populations();
        assert!(pn[0] > 0.8, "m_I = +1 population {}", pn[0]);
        assert!(out.min_eigenvalue() > -1e-8);
    }

    #[test]
    fn zero_duration_pump_is_identity() {
        let p = NvParams::ambient();
        let rho0 = DensityMatrix::thermal_ground();
        let out = optical_pump(
            &rho0,
            &OpticalModel::default(),
            &p,
            &FieldVector::aligned(460.0),
            0.0,
            &NoiseModel::default(),
        )
        .unwrap();
        let back = out.project_ground(1e-12).unwrap();
        assert!(crate::linalg::max_abs_diff(&back.mat, &rho0.mat) < 1e-12);
    }

    #[test]
    fn repeated_pumping_converges() {
        let p = NvParams::ambient();
        let model = OpticalModel::default();
        let noise = NoiseModel::default();
        let b = FieldVector::aligned(460.0);
        let mut rho = DensityMatrix::thermal_ground().embed_optical();
        let mut last_pol = rho.nuclear_polarization();
        let mut delta = f64::MAX;
        for _ in 0..10 {
            rho = optical_pump(&rho, &model, &p, &b, 5.0e-6, &noise).unwrap();
            let pol = rho.nuclear_polarization();
            delta = (pol - last_pol).abs();
            last_pol = pol;
        }
        assert!(delta < 1e-4, "polarization still changing by {delta}");
    }

    #[test]
    fn readout_contrast_and_linearity() {
        let model = OpticalModel::default();
        let bright = DensityMatrix::pure_ground(0, 1);
        let dim = DensityMatrix::pure_ground(0, 0);
        let window = 300.0e-9;
        let (m_bright, _) = readout(&bright, &model, window, 1).unwrap();
        let (m_dim, _) = readout(&dim, &model, window, 1).unwrap();
        assert_relative_eq!(m_dim / m_bright, 0.80, epsilon = 1e-12);

        // mixture = average of the pure-state means
        let mut mix = DensityMatrix::pure_ground(0, 1);
        mix.mat[(basis_index(0, 1), basis_index(0, 1))] = c(0.5);
        mix.mat[(basis_index(0, 0), basis_index(0, 0))] = c(0.5);
        let (m_mix, _) = readout(&mix, &model, window, 1).unwrap();
        assert_relative_eq!(m_mix, 0.5 * (m_bright + m_dim), epsilon = 1e-12);

        // σ/mean shrinks with shots
        let (_, s1) = readout(&bright, &model, window, 100).unwrap();
        let (_, s2) = readout(&bright, &model, window, 10_000).unwrap();
        assert_relative_eq!(s1 / s2, 10.0, epsilon = 1e-9);
    }

    #[test]
    fn readout_rejects_bad_window() {
        let model = OpticalModel::default();
        let rho = DensityMatrix::thermal_ground();
        assert!(matches!(
            readout(&rho, &model, 0.0, 1),
            Err(DynamicsError::InvalidWindow { .. })
        ));
    }

    #[test]
    fn dnp_scan_peaks_near_eslac() {
        let p = NvParams::ambient();
        let model = OpticalModel::default();
        let noise = NoiseModel::default();
        let fields: Vec<f64> = (0..=30).map(|k| 380.0 + k as f64 * 8.0).collect();
        let scan = dnp_efficiency_scan(&model, &p, &noise, &fields, 5.0e-6).unwrap();
        let peak = scan
            .iter()
            .max_by(|a, b| a.polarization.total_cmp(&b.polarization))
            .unwrap();
        let b_star = p.d_es / p.gamma_e;
        assert!(
            (peak.b_gauss - b_star).abs() < 30.0,
            "peak at {} G, anti-crossing at {b_star} G",
            peak.b_gauss
        );

        let zero = dnp_efficiency_scan(&model, &p, &noise, &[0.0], 5.0e-6).unwrap();
        assert!(zero[0].polarization < 0.1);

        let at_460 = scan
            .iter()
            .min_by(|a, b| {
                (a.b_gauss - 460.0).abs().total_cmp(&(b.b_gauss - 460.0).abs())
            })
            .unwrap();
        assert!(
            at_460.polarization > 0.85 * peak.polarization,
            "460 G within 15% of peak: {} vs {}",
            at_460.polarization,
            peak.polarization
        );
    }

    #[test]
    fn cw_nmr_dip_appears_on_resonance() {
        // CW mode runs at reduced laser power so continuous pumping does
        // not wash out the nuclear drive.
        let p = NvParams::ambient();
        let model = OpticalModel {
            pump_rate: 1.0e6,
            ..OpticalModel::default()
        };
        let noise = NoiseModel::default();
        let b = FieldVector::aligned(460.0);
        let f0 = p.q.abs() + p.gamma_n * 460.0;
        let on = cw_nmr_rate(&p, &b, &model, &noise, f0, 50.0e3).unwrap();
        let off = cw_nmr_rate(&p, &b, &model, &noise, f0 + 400.0e3, 50.0e3).unwrap();
        assert!(
            on < off * 0.999,
            "resonant CW rate {on} should dip below off-resonant {off}"
        );
    }

    #[test]
    fn cw_odmr_dip_at_electron_resonance() {
        let p = NvParams::ambient();
        let model = OpticalModel::default();
        let noise = NoiseModel::default();
        let b = FieldVector::aligned(460.0);
        let f_res = p.d_gs - p.gamma_e * 460.0;
        let on = cw_odmr_rate(&p, &b, &model, &noise, f_res, 2.0e6).unwrap();
        let off = cw_odmr_rate(&p, &b, &model, &noise, f_res - 60.0e6, 2.0e6).unwrap();
        assert!(on < off * 0.99, "on {on} off {off}");
    }
}
