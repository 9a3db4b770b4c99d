//! Sequence evaluation against an immutable simulation context.
//!
//! Pulsed mode folds the segments over the density matrix: laser segments
//! run the 21-level optical model, drives and waits run in the ground
//! manifold's rotating frame, and the readout window converts populations
//! into expected photon counts. CW mode solves for the steady state of the
//! combined laser+drive generator. Sweep points are independent; shot
//! noise is drawn from a per-point-index seeded generator, so results are
//! identical for any evaluation order or thread count.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use rand::SeedableRng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;

use super::{
    resolve_pulse, PulseKind, PulseSequence, ResolvedPulse, SequenceError, SweepMeta, SweepSeries,
};
use crate::dynamics::{
    cw_odmr_rate, optical_pump, optical_settle, propagator, pulse_generator, readout,
    CwNmrSolver, DensityMatrix, DriveTone, GroundBasis, NoiseModel, OpticalModel, Propagator,
    SequenceFrame, ToneChannel,
};
use crate::spinops::{build_ground_hamiltonian, nv_axes, project_on_axis, FieldVector, NvParams};

/// Everything a sequence needs to run: parameters at pressure, field,
/// optical and noise models, experiment bookkeeping. Immutable during
/// sweeps and safe to share across worker threads.
#[derive(Debug, Clone)]
pub struct SimContext {
    pub params: NvParams,
    pub field: FieldVector,
    pub optical: OpticalModel,
    pub noise: NoiseModel,
    pub pressure_gpa: f64,
    pub seed: u64,
    /// Laser-power reduction applied in CW mode; continuous pumping at the
    /// pulsed-mode rate would wash out the nuclear drive.
    pub cw_pump_scale: f64,
    /// Tag recorded in sweep metadata.
    pub mode_tag: String,
}

impl SimContext {
    pub fn new(params: NvParams, field: FieldVector, pressure_gpa: f64) -> Self {
        SimContext {
            params,
            field,
            optical: OpticalModel::default(),
            noise: NoiseModel::default(),
            pressure_gpa,
            seed: 1,
            cw_pump_scale: 0.1,
            mode_tag: "custom".into(),
        }
    }

    fn cw_optical(&self) -> OpticalModel {
        OpticalModel {
            pump_rate: self.optical.pump_rate * self.cw_pump_scale,
            ..self.optical
        }
    }
}

/// One evaluated sweep point before shot sampling.
#[derive(Debug, Clone, Copy)]
pub struct PointValue {
    /// Normalized mean signal (counts over the bright-state reference).
    pub signal: f64,
    /// Statistical σ of the normalized signal for the configured shots.
    pub sigma: f64,
    /// Expected photon counts per shot in the readout window.
    pub mean_counts: f64,
    /// Bright-reference counts used for normalization.
    pub reference_counts: f64,
    /// Number of drive segments that tripped the rotating-wave guard.
    pub rwa_warnings: usize,
}

fn mix_seed(seed: u64, index: u64) -> u64 {
    // splitmix64
    let mut z = seed ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Collect the carrier tones of a resolved pulse list; at most one carrier
/// per channel is supported within one sequence.
fn sequence_tones(pulses: &[ResolvedPulse]) -> Result<(Option<f64>, Option<f64>), SequenceError> {
    let mut f_mw = None;
    let mut f_rf = None;
    for p in pulses {
        let slot = match p.kind {
            PulseKind::Mw => &mut f_mw,
            PulseKind::Rf => &mut f_rf,
            _ => continue,
        };
        let f = p.frequency.expect("validated drive");
        match slot {
            None => *slot = Some(f),
            Some(existing) if (*existing - f).abs() < 1.0 => {}
            Some(_) => return Err(SequenceError::MultipleCarriers),
        }
    }
    Ok((f_mw, f_rf))
}

enum RunState {
    Ground(DensityMatrix),
    Optical(DensityMatrix),
}

/// Shared per-sweep cache: ground-manifold segment propagators keyed by
/// the resolved segment parameters and frame (swept NMR sequences reuse
/// the fixed microwave π and Ramsey π/2 pulses across points), the CW
/// steady-state solver, and the drive-off CW reference rate.
#[derive(Default)]
struct SegmentCache {
    map: Mutex<HashMap<Vec<u64>, Arc<(Propagator, bool)>>>,
    cw_solver: Mutex<Option<Arc<crate::dynamics::CwNmrSolver>>>,
    cw_reference: Mutex<Option<f64>>,
}

impl SegmentCache {
    fn get_or_build(
        &self,
        key: Vec<u64>,
        build: impl FnOnce() -> (Propagator, bool),
    ) -> Arc<(Propagator, bool)> {
        if let Some(hit) = self.map.lock().unwrap().get(&key) {
            return Arc::clone(hit);
        }
        let value = Arc::new(build());
        let mut map = self.map.lock().unwrap();
        map.entry(key).or_insert(value).clone()
    }

    fn cw_solver(
        &self,
        build: impl FnOnce() -> crate::dynamics::CwNmrSolver,
    ) -> Arc<crate::dynamics::CwNmrSolver> {
        let mut slot = self.cw_solver.lock().unwrap();
        if slot.is_none() {
            *slot = Some(Arc::new(build()));
        }
        Arc::clone(slot.as_ref().unwrap())
    }

    fn cw_reference(
        &self,
        build: impl FnOnce() -> Result<f64, SequenceError>,
    ) -> Result<f64, SequenceError> {
        {
            let slot = self.cw_reference.lock().unwrap();
            if let Some(v) = *slot {
                return Ok(v);
            }
        }
        let v = build()?;
        *self.cw_reference.lock().unwrap() = Some(v);
        Ok(v)
    }
}

/// Frame of one segment: drive segments rotate with their own tone; waits
/// follow the sequence's nuclear tone (else the electron tone) so Ramsey
/// phases stay consistent with the pulses around them.
fn segment_frame(p: &ResolvedPulse, tones: (Option<f64>, Option<f64>), q_negative: bool) -> SequenceFrame {
    match p.kind {
        PulseKind::Mw => SequenceFrame::for_tones(p.frequency, None, q_negative),
        PulseKind::Rf => SequenceFrame::for_tones(None, p.frequency, q_negative),
        _ => {
            let (f_mw, f_rf) = tones;
            if f_rf.is_some() {
                SequenceFrame::for_tones(None, f_rf, q_negative)
            } else {
                SequenceFrame::for_tones(f_mw, None, q_negative)
            }
        }
    }
}

fn segment_key(p: &ResolvedPulse, frame: &SequenceFrame) -> Vec<u64> {
    let mut key = vec![
        p.kind as u64,
        p.duration.to_bits(),
        p.frequency.unwrap_or(0.0).to_bits(),
        p.rabi.unwrap_or(0.0).to_bits(),
        p.phase.to_bits(),
    ];
    key.extend(frame.offsets.iter().map(|v| v.to_bits()));
    key
}

/// Evaluate one pulsed-mode point: apply the segments in order and read
/// out. Returns the deterministic expectation; sampling happens in
/// [`run_sweep`].
fn run_pulsed_point(
    pulses: &[ResolvedPulse],
    ctx: &SimContext,
    cache: &SegmentCache,
) -> Result<PointValue, SequenceError> {
    let h = build_ground_hamiltonian(&ctx.params, &ctx.field);
    let basis = GroundBasis::new(&h)?;
    let tones = sequence_tones(pulses)?;

    let mut state = RunState::Ground(DensityMatrix::thermal_ground());
    let mut rwa_warnings = 0usize;
    let mut last_read: Option<(f64, f64)> = None; // (mean counts, window)

    // Apply one cached ground-manifold propagator in the dressed basis.
    let apply_ground = |rho: &DensityMatrix,
                        p: &ResolvedPulse|
     -> Result<(DensityMatrix, bool), SequenceError> {
        let frame = segment_frame(p, tones, ctx.params.q < 0.0);
        let entry = cache.get_or_build(segment_key(p, &frame), || {
            let tone = match p.kind {
                PulseKind::Mw | PulseKind::Rf => Some(DriveTone {
                    channel: if p.kind == PulseKind::Mw {
                        ToneChannel::Mw
                    } else {
                        ToneChannel::Rf
                    },
                    freq: p.frequency.expect("validated drive"),
                    rabi: p.rabi.expect("validated drive"),
                    phase: p.phase,
                }),
                _ => None,
            };
            let gen = pulse_generator(&basis, &frame, tone.as_ref(), &ctx.noise);
            (
                propagator(&gen.h_rot, &gen.collapses, p.duration),
                gen.rwa_warning,
            )
        });
        let dressed = DensityMatrix {
            mat: basis.to_dressed(&rho.mat),
            space: crate::dynamics::StateSpace::Ground,
        };
        let out = entry.0.apply(&dressed)?;
        Ok((
            DensityMatrix {
                mat: basis.to_product(&out.mat),
                space: crate::dynamics::StateSpace::Ground,
            },
            entry.1,
        ))
    };

    for p in pulses {
        match p.kind {
            PulseKind::Laser => {
                let rho = match &state {
                    RunState::Ground(r) => r.embed_optical(),
                    RunState::Optical(r) => r.clone(),
                };
                let out = optical_pump(
                    &rho,
                    &ctx.optical,
                    &ctx.params,
                    &ctx.field,
                    p.duration,
                    &ctx.noise,
                )?;
                state = RunState::Optical(out);
            }
            PulseKind::Wait => {
                state = match state {
                    RunState::Optical(r) => RunState::Optical(optical_settle(
                        &r,
                        &ctx.optical,
                        &ctx.params,
                        &ctx.field,
                        p.duration,
                        &ctx.noise,
                    )?),
                    RunState::Ground(r) => {
                        if p.duration == 0.0 {
                            RunState::Ground(r)
                        } else {
                            RunState::Ground(apply_ground(&r, p)?.0)
                        }
                    }
                };
            }
            PulseKind::Mw | PulseKind::Rf => {
                let ground = match state {
                    RunState::Ground(r) => r,
                    RunState::Optical(r) => r.project_ground(1.0e-3)?,
                };
                if p.duration == 0.0 {
                    state = RunState::Ground(ground);
                    continue;
                }
                let (out, warned) = apply_ground(&ground, p)?;
                if warned {
                    rwa_warnings += 1;
                }
                state = RunState::Ground(out);
            }
            PulseKind::Read => {
                let rho = match &state {
                    RunState::Ground(r) => r.clone(),
                    RunState::Optical(r) => r.clone(),
                };
                let (mean, _) = readout(&rho, &ctx.optical, p.duration, 1)?;
                last_read = Some((mean, p.duration));
                // the collection laser keeps pumping through the window
                let rho21 = match &state {
                    RunState::Ground(r) => r.embed_optical(),
                    RunState::Optical(r) => r.clone(),
                };
                state = RunState::Optical(optical_pump(
                    &rho21,
                    &ctx.optical,
                    &ctx.params,
                    &ctx.field,
                    p.duration,
                    &ctx.noise,
                )?);
            }
        }
    }

    let (mean_counts, window) = last_read.ok_or(SequenceError::MissingRead)?;
    let reference_counts = ctx.optical.counts_rate_bright * window;
    Ok(PointValue {
        signal: mean_counts / reference_counts,
        sigma: 0.0,
        mean_counts,
        reference_counts,
        rwa_warnings,
    })
}

/// CW steady-state emission rate for one binding of the drive tone.
fn cw_rate(
    pulses: &[ResolvedPulse],
    ctx: &SimContext,
    cache: &SegmentCache,
    rabi_scale: f64,
) -> Result<f64, SequenceError> {
    let drive = pulses
        .iter()
        .find(|p| matches!(p.kind, PulseKind::Mw | PulseKind::Rf))
        .expect("validated CW sequence has one tone");
    let freq = drive.frequency.expect("validated drive");
    let rabi = drive.rabi.expect("validated drive") * rabi_scale;
    let model = ctx.cw_optical();
    match drive.kind {
        PulseKind::Rf => {
            let solver =
                cache.cw_solver(|| CwNmrSolver::new(&ctx.params, &ctx.field, &model, &ctx.noise));
            Ok(solver.rate(freq, rabi)?)
        }
        PulseKind::Mw => {
            // ensemble over the four NV orientations; the context field
            // tilts relative to axis 0
            let b_lab = crate::spinops::lab_field_near_axis(
                ctx.field.magnitude,
                0,
                ctx.field.theta,
                ctx.field.phi,
            );
            let mut sum = 0.0;
            for axis in nv_axes() {
                let (b_par, b_perp) = project_on_axis(&b_lab, &axis);
                let local = FieldVector::new(b_lab.norm(), b_perp.atan2(b_par.abs()), 0.0)
                    .map_err(crate::dynamics::DynamicsError::from)?;
                sum += cw_odmr_rate(&ctx.params, &local, &model, &ctx.noise, freq, rabi)?;
            }
            Ok(sum / 4.0)
        }
        _ => unreachable!(),
    }
}

fn run_cw_point(
    pulses: &[ResolvedPulse],
    ctx: &SimContext,
    cache: &SegmentCache,
) -> Result<PointValue, SequenceError> {
    let rate = cw_rate(pulses, ctx, cache, 1.0)?;
    // reference: same generator with the drive off (shared across a sweep)
    let reference = cache.cw_reference(|| cw_rate(pulses, ctx, cache, 0.0))?;
    let window = pulses
        .iter()
        .find(|p| p.kind == PulseKind::Read)
        .map(|p| if p.duration > 0.0 { p.duration } else { 3.0e-7 })
        .unwrap_or(3.0e-7);
    Ok(PointValue {
        signal: rate / reference,
        sigma: 0.0,
        mean_counts: rate * window,
        reference_counts: reference * window,
        rwa_warnings: 0,
    })
}

fn run_point_cached(
    seq: &PulseSequence,
    bindings: &HashMap<String, f64>,
    ctx: &SimContext,
    cache: &SegmentCache,
) -> Result<PointValue, SequenceError> {
    let resolved: Vec<ResolvedPulse> = seq
        .pulses
        .iter()
        .map(|p| resolve_pulse(p, bindings))
        .collect::<Result<_, _>>()?;
    if seq.cw {
        run_cw_point(&resolved, ctx, cache)
    } else {
        run_pulsed_point(&resolved, ctx, cache)
    }
}

/// Evaluate one point of a sequence with all variables bound.
pub fn run_point(
    seq: &PulseSequence,
    bindings: &HashMap<String, f64>,
    ctx: &SimContext,
) -> Result<PointValue, SequenceError> {
    seq.validate()?;
    run_point_cached(seq, bindings, ctx, &SegmentCache::default())
}

/// Run the sweep grid. Points are evaluated in parallel; the per-point
/// shot noise is seeded by the point index, so the output is identical
/// for any thread count.
pub fn run_sweep(seq: &PulseSequence, ctx: &SimContext) -> Result<SweepSeries, SequenceError> {
    seq.validate()?;
    let sweep = seq
        .sweep
        .as_ref()
        .ok_or_else(|| SequenceError::Invalid("run_sweep needs a sweep declaration".into()))?;
    let grid = sweep.grid();
    let cache = SegmentCache::default();

    let points: Vec<(f64, f64)> = grid
        .par_iter()
        .enumerate()
        .map(|(i, &xval)| -> Result<(f64, f64), SequenceError> {
            let mut bindings = HashMap::new();
            bindings.insert(sweep.var.clone(), xval);
            let pv = run_point_cached(seq, &bindings, ctx, &cache)?;

            let shots = seq.shots_per_point.max(1);
            let lambda_total = pv.mean_counts.max(0.0) * shots as f64;
            let sigma_norm =
                lambda_total.sqrt() / (shots as f64 * pv.reference_counts.max(1e-300));
            if ctx.noise.shot_noise && lambda_total > 0.0 {
                let mut rng =
                    rand_chacha::ChaCha8Rng::seed_from_u64(mix_seed(ctx.seed, i as u64));
                let poisson =
                    Poisson::new(lambda_total).map_err(|e| {
                        SequenceError::Invalid(format!("shot-noise sampling: {e}"))
                    })?;
                let counts = poisson.sample(&mut rng);
                let y = counts / (shots as f64 * pv.reference_counts);
                Ok((y, sigma_norm))
            } else {
                Ok((pv.signal, sigma_norm))
            }
        })
        .collect::<Result<_, _>>()?;

    let series = SweepSeries {
        x: grid,
        y: points.iter().map(|p| p.0).collect(),
        sigma: points.iter().map(|p| p.1).collect(),
        meta: SweepMeta {
            mode: ctx.mode_tag.clone(),
            pressure_gpa: ctx.pressure_gpa,
            field_gauss: ctx.field.magnitude,
        },
    };
    series.validate()?;
    Ok(series)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sequences::{parse_sequence, DurationSpec, FreqSpec, Pulse, Sweep, SweepScale};

    fn test_ctx() -> SimContext {
        let params = NvParams::ambient();
        SimContext::new(params, FieldVector::aligned(460.0), 0.0)
    }

    fn f_rf0(ctx: &SimContext) -> f64 {
        ctx.params.q.abs() + ctx.params.gamma_n * ctx.field.magnitude
    }

    #[test]
    fn off_resonant_point_stays_bright() {
        let ctx = test_ctx();
        let text = format!(
            "laser 5e-6\nwait 4e-6\nrf {} 25e3 pi\nlaser_read 3e-7\n",
            f_rf0(&ctx) + 2.0e6
        );
        let seq = parse_sequence(&text).unwrap();
        let pv = run_point(&seq, &HashMap::new(), &ctx).unwrap();
        // bright reference: polarized |0,+1⟩ gives signal ≈ 1
        assert!(pv.signal > 0.93, "off-resonant signal {}", pv.signal);
    }

    #[test]
    fn resonant_pi_pulse_dips_by_nuclear_contrast() {
        let ctx = test_ctx();
        let bright_text = format!(
            "laser 5e-6\nwait 4e-6\nrf {} 25e3 pi\nlaser_read 3e-7\n",
            f_rf0(&ctx) + 2.0e6
        );
        let dip_text = format!(
            "laser 5e-6\nwait 4e-6\nrf {} 25e3 pi\nlaser_read 3e-7\n",
            f_rf0(&ctx)
        );
        let bright = run_point(&parse_sequence(&bright_text).unwrap(), &HashMap::new(), &ctx)
            .unwrap();
        let dip = run_point(&parse_sequence(&dip_text).unwrap(), &HashMap::new(), &ctx).unwrap();
        let depth = bright.signal - dip.signal;
        // dip depth ≈ contrast_nuclear × polarization (π swaps +1 ↔ 0)
        let polarization = 0.9;
        let expected = ctx.optical.contrast_nuclear * polarization;
        assert!(
            (depth - expected).abs() < 0.04,
            "depth {depth} vs ≈{expected}"
        );
    }

    #[test]
    fn sweep_finds_nmr_dip_where_predicted() {
        let mut ctx = test_ctx();
        ctx.noise.shot_noise = false;
        let center = f_rf0(&ctx);
        let seq = PulseSequence {
            pulses: vec![
                Pulse::laser(5.0e-6),
                Pulse::wait(DurationSpec::Seconds(4.0e-6)),
                Pulse::drive(
                    PulseKind::Rf,
                    FreqSpec::Var("f".into()),
                    25.0e3,
                    DurationSpec::Pi,
                ),
                Pulse::read(3.0e-7),
            ],
            sweep: Some(Sweep {
                var: "f".into(),
                start: center - 0.2e6,
                stop: center + 0.2e6,
                points: 81,
                scale: SweepScale::Linear,
            }),
            shots_per_point: 1000,
            cw: false,
        };
        let series = run_sweep(&seq, &ctx).unwrap();
        let (imin, _) = series
            .y
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .unwrap();
        let found = series.x[imin];
        assert!(
            (found - center).abs() < 10.0e3,
            "dip at {found}, predicted {center}"
        );
    }

    #[test]
    fn sweep_deterministic_per_seed() {
        let mut ctx = test_ctx();
        ctx.seed = 42;
        let center = f_rf0(&ctx);
        let text = format!(
            "laser 5e-6\nwait 4e-6\nrf $f 25e3 pi\nlaser_read 3e-7\nsweep f {} {} 21\n",
            center - 0.1e6,
            center + 0.1e6
        );
        let seq = parse_sequence(&text).unwrap();
        let a = run_sweep(&seq, &ctx).unwrap();
        let b = run_sweep(&seq, &ctx).unwrap();
        assert_eq!(a, b);
        let mut ctx2 = ctx.clone();
        ctx2.seed = 43;
        let c = run_sweep(&seq, &ctx2).unwrap();
        assert_ne!(a.y, c.y);
    }

    #[test]
    fn cw_sweep_shows_shallower_dip_than_pulsed() {
        let mut ctx = test_ctx();
        ctx.noise.shot_noise = false;
        let center = f_rf0(&ctx);
        let cw_text = format!(
            "cw {{ laser; rf $f 25e3; read }}\nsweep f {} {} 31\n",
            center - 0.15e6,
            center + 0.15e6
        );
        let cw_seq = parse_sequence(&cw_text).unwrap();
        let cw = run_sweep(&cw_seq, &ctx).unwrap();
        let cw_depth = 1.0 - cw.y.iter().cloned().fold(f64::MAX, f64::min);
        assert!(cw_depth > 1e-4, "CW dip exists: {cw_depth}");

        let pulsed_text = format!(
            "laser 5e-6\nwait 4e-6\nrf $f 25e3 pi\nlaser_read 3e-7\nsweep f {} {} 31\n",
            center - 0.15e6,
            center + 0.15e6
        );
        let pulsed = run_sweep(&parse_sequence(&pulsed_text).unwrap(), &ctx).unwrap();
        let pulsed_base = pulsed.y.iter().cloned().fold(f64::MIN, f64::max);
        let pulsed_depth = pulsed_base - pulsed.y.iter().cloned().fold(f64::MAX, f64::min);
        assert!(
            cw_depth < pulsed_depth,
            "CW depth {cw_depth} must be below pulsed depth {pulsed_depth}"
        );
    }

    #[test]
    fn unbound_symbol_reported() {
        let ctx = test_ctx();
        let seq = PulseSequence {
            pulses: vec![
                Pulse::wait(DurationSpec::Var("tau".into())),
                Pulse::read(3.0e-7),
            ],
            sweep: Some(Sweep {
                var: "tau".into(),
                start: 0.0,
                stop: 1.0e-6,
                points: 3,
                scale: SweepScale::Linear,
            }),
            shots_per_point: 10,
            cw: false,
        };
        // run_point without bindings must fail cleanly
        assert!(matches!(
            run_point(&seq, &HashMap::new(), &ctx),
            Err(SequenceError::UnresolvedVar(_))
        ));
    }
}
