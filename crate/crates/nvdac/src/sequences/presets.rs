//! Canonical experiment sequences.
//!
//! Every preset is a ready-to-run sweep built against a simulation
//! context: centers and spans come from the exact level structure at the
//! context's pressure and field.
//!
//! Naming note for the two pulsed NMR presets: `nmr_pulsed_ms0` probes the
//! m_I = +1 ↔ 0 resonance with the electron left in m_S = 0. The
//! `nmr_pulsed_ms1` variant shifts the electron by a microwave π pulse
//! into the manifold where the hyperfine shift adds to the quadrupole
//! splitting, so the dip sits at f_RF0 + |A∥|; with this crate's signed
//! couplings (negative Q and A∥) that is the m_S = +1 manifold. A second
//! π pulse returns the electron before readout.

use std::str::FromStr;

use super::{
    DurationSpec, FreqSpec, Pulse, PulseKind, PulseSequence, SequenceError, SimContext, Sweep,
    SweepScale, DEFAULT_SHOTS_PER_POINT,
};
use crate::dynamics::GroundBasis;
use crate::spinops::{basis_index, build_ground_hamiltonian};

/// The preset experiments, one per reproduced measurement.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PresetName {
    OdmrCw,
    RabiE,
    NmrCw,
    NmrPulsedMs0,
    NmrPulsedMs1,
    RabiN,
    FidN,
    T1E,
}

impl PresetName {
    pub const ALL: [PresetName; 8] = [
        PresetName::OdmrCw,
        PresetName::RabiE,
        PresetName::NmrCw,
        PresetName::NmrPulsedMs0,
        PresetName::NmrPulsedMs1,
        PresetName::RabiN,
        PresetName::FidN,
        PresetName::T1E,
    ];

    pub fn tag(&self) -> &'static str {
        match self {
            PresetName::OdmrCw => "odmr_cw",
            PresetName::RabiE => "rabi_e",
            PresetName::NmrCw => "nmr_cw",
            PresetName::NmrPulsedMs0 => "nmr_pulsed_ms0",
            PresetName::NmrPulsedMs1 => "nmr_pulsed_ms1",
            PresetName::RabiN => "rabi_n",
            PresetName::FidN => "fid_n",
            PresetName::T1E => "t1_e",
        }
    }
}

impl FromStr for PresetName {
    type Err = SequenceError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PresetName::ALL
            .into_iter()
            .find(|p| p.tag() == s)
            .ok_or_else(|| SequenceError::UnknownPreset(s.to_string()))
    }
}

/// Optional knobs on top of the canonical sequences.
#[derive(Debug, Clone, Copy, Default)]
pub struct PresetOverrides {
    /// Drive Rabi frequency, Hz.
    pub rabi: Option<f64>,
    /// Sweep point count.
    pub points: Option<usize>,
    /// Full sweep span (frequency sweeps) or end time (time sweeps).
    pub span: Option<f64>,
    /// Sweep center (frequency sweeps only).
    pub center: Option<f64>,
    /// Shots averaged per point.
    pub shots: Option<u64>,
}

/// Exact transition frequencies of the working context.
pub(crate) struct ContextLines {
    pub f_rf0: f64,
    pub f_rf1: f64,
    /// Electron transition from m_S = 0 into the hyperfine-additive
    /// manifold, for the nuclear m_I = +1 line.
    pub f_mw: f64,
}

pub(crate) fn context_lines(ctx: &SimContext) -> Result<ContextLines, SequenceError> {
    let h = build_ground_hamiltonian(&ctx.params, &ctx.field);
    let basis = GroundBasis::new(&h)?;
    let e = |m_s: i8, m_i: i8| basis.energies[basis_index(m_s, m_i)];
    Ok(ContextLines {
        f_rf0: (e(0, 1) - e(0, 0)).abs(),
        f_rf1: (e(1, 1) - e(1, 0)).abs(),
        f_mw: (e(1, 1) - e(0, 1)).abs(),
    })
}

/// Exact (f_RF0, f_RF1) nuclear resonance frequencies of a context, from
/// the diagonalized level structure.
pub fn exact_lines(ctx: &SimContext) -> Result<(f64, f64), SequenceError> {
    let lines = context_lines(ctx)?;
    Ok((lines.f_rf0, lines.f_rf1))
}

const POLARIZE_DURATION: f64 = 5.0e-6;
const SETTLE_DURATION: f64 = 4.0e-6;
const READ_WINDOW: f64 = 3.0e-7;
const RF_RABI_DEFAULT: f64 = 25.0e3;
const MW_PI_RABI: f64 = 40.0e6;

fn polarize() -> [Pulse; 2] {
    [
        Pulse::laser(POLARIZE_DURATION),
        Pulse::wait(DurationSpec::Seconds(SETTLE_DURATION)),
    ]
}

fn freq_sweep(center: f64, span: f64, points: usize) -> Sweep {
    Sweep {
        var: "f".into(),
        start: center - span / 2.0,
        stop: center + span / 2.0,
        points,
        scale: SweepScale::Linear,
    }
}

fn time_sweep(stop: f64, points: usize) -> Sweep {
    Sweep {
        var: "t".into(),
        start: 0.0,
        stop,
        points,
        scale: SweepScale::Linear,
    }
}

/// Build the canonical sequence for a named experiment.
pub fn preset(
    name: PresetName,
    ctx: &SimContext,
    overrides: PresetOverrides,
) -> Result<PulseSequence, SequenceError> {
    let lines = context_lines(ctx)?;
    let shots = overrides.shots.unwrap_or(DEFAULT_SHOTS_PER_POINT);
    let seq = match name {
        PresetName::OdmrCw => {
            let rabi = overrides.rabi.unwrap_or(2.0e6);
            let span = overrides
                .span
                .unwrap_or(2.0 * (ctx.params.gamma_e * ctx.field.magnitude + 0.15e9));
            let center = overrides.center.unwrap_or(ctx.params.d_gs);
            PulseSequence {
                pulses: vec![
                    Pulse::laser(0.0),
                    Pulse::drive(
                        PulseKind::Mw,
                        FreqSpec::Var("f".into()),
                        rabi,
                        DurationSpec::Seconds(0.0),
                    ),
                    Pulse::read(READ_WINDOW),
                ],
                sweep: Some(freq_sweep(center, span, overrides.points.unwrap_or(601))),
                shots_per_point: shots,
                cw: true,
            }
        }
        PresetName::RabiE => {
            let rabi = overrides.rabi.unwrap_or(62.0e6);
            let stop = overrides.span.unwrap_or(0.12e-6);
            let mut pulses = polarize().to_vec();
            pulses.push(Pulse::drive(
                PulseKind::Mw,
                FreqSpec::Hz(lines.f_mw),
                rabi,
                DurationSpec::Var("t".into()),
            ));
            pulses.push(Pulse::read(READ_WINDOW));
            PulseSequence {
                pulses,
                sweep: Some(time_sweep(stop, overrides.points.unwrap_or(241))),
                shots_per_point: shots,
                cw: false,
            }
        }
        PresetName::NmrCw => {
            let rabi = overrides.rabi.unwrap_or(40.0e3);
            let center = overrides.center.unwrap_or(lines.f_rf0);
            let span = overrides.span.unwrap_or(0.3e6);
            PulseSequence {
                pulses: vec![
                    Pulse::laser(0.0),
                    Pulse::drive(
                        PulseKind::Rf,
                        FreqSpec::Var("f".into()),
                        rabi,
                        DurationSpec::Seconds(0.0),
                    ),
                    Pulse::read(READ_WINDOW),
                ],
                sweep: Some(freq_sweep(center, span, overrides.points.unwrap_or(151))),
                shots_per_point: shots,
                cw: true,
            }
        }
        PresetName::NmrPulsedMs0 | PresetName::NmrPulsedMs1 => {
            let rabi = overrides.rabi.unwrap_or(RF_RABI_DEFAULT);
            let ms1 = name == PresetName::NmrPulsedMs1;
            let center = overrides
                .center
                .unwrap_or(if ms1 { lines.f_rf1 } else { lines.f_rf0 });
            let span = overrides.span.unwrap_or(0.5e6);
            let mut pulses = polarize().to_vec();
            if ms1 {
                pulses.push(Pulse::drive(
                    PulseKind::Mw,
                    FreqSpec::Hz(lines.f_mw),
                    MW_PI_RABI,
                    DurationSpec::Pi,
                ));
            }
            pulses.push(Pulse::drive(
                PulseKind::Rf,
                FreqSpec::Var("f".into()),
                rabi,
                DurationSpec::Pi,
            ));
            if ms1 {
                pulses.push(Pulse::drive(
                    PulseKind::Mw,
                    FreqSpec::Hz(lines.f_mw),
                    MW_PI_RABI,
                    DurationSpec::Pi,
                ));
            }
            pulses.push(Pulse::read(READ_WINDOW));
            PulseSequence {
                pulses,
                sweep: Some(freq_sweep(center, span, overrides.points.unwrap_or(151))),
                shots_per_point: shots,
                cw: false,
            }
        }
        PresetName::RabiN => {
            let rabi = overrides.rabi.unwrap_or(RF_RABI_DEFAULT);
            let stop = overrides.span.unwrap_or(4.0 / rabi);
            let mut pulses = polarize().to_vec();
            pulses.push(Pulse::drive(
                PulseKind::Rf,
                FreqSpec::Hz(lines.f_rf0),
                rabi,
                DurationSpec::Var("t".into()),
            ));
            pulses.push(Pulse::read(READ_WINDOW));
            PulseSequence {
                pulses,
                sweep: Some(time_sweep(stop, overrides.points.unwrap_or(161))),
                shots_per_point: shots,
                cw: false,
            }
        }
        PresetName::FidN => {
            // Detuned by 5/T₂ₙ* so enough fringes fit inside the decay to
            // decorrelate the envelope from the slow relaxation baseline,
            // with the Rabi frequency raised to keep the soft π/2 pulses
            // effective at that detuning.
            let rabi = overrides.rabi.unwrap_or(5.0 * RF_RABI_DEFAULT);
            let detuning = 5.0 / ctx.noise.t2n_star;
            let f_drive = lines.f_rf0 + detuning;
            let stop = overrides.span.unwrap_or(3.0 * ctx.noise.t2n_star);
            let mut pulses = polarize().to_vec();
            pulses.push(Pulse::drive(
                PulseKind::Rf,
                FreqSpec::Hz(f_drive),
                rabi,
                DurationSpec::HalfPi,
            ));
            pulses.push(Pulse::wait(DurationSpec::Var("t".into())));
            pulses.push(Pulse::drive(
                PulseKind::Rf,
                FreqSpec::Hz(f_drive),
                rabi,
                DurationSpec::HalfPi,
            ));
            pulses.push(Pulse::read(READ_WINDOW));
            PulseSequence {
                pulses,
                sweep: Some(time_sweep(stop, overrides.points.unwrap_or(211))),
                shots_per_point: shots,
                cw: false,
            }
        }
        PresetName::T1E => {
            let stop = overrides.span.unwrap_or(3.0 * ctx.noise.t1e);
            let mut pulses = polarize().to_vec();
            pulses.push(Pulse::drive(
                PulseKind::Mw,
                FreqSpec::Hz(lines.f_mw),
                MW_PI_RABI,
                DurationSpec::Pi,
            ));
            pulses.push(Pulse::wait(DurationSpec::Var("t".into())));
            pulses.push(Pulse::read(READ_WINDOW));
            PulseSequence {
                pulses,
                sweep: Some(time_sweep(stop, overrides.points.unwrap_or(153))),
                shots_per_point: shots,
                cw: false,
            }
        }
    };
    seq.validate()?;
    Ok(seq)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sequences::run_sweep;
    use crate::spinops::{FieldVector, NvParams};

    fn ctx() -> SimContext {
        let mut c = SimContext::new(NvParams::ambient(), FieldVector::aligned(460.0), 0.0);
        c.noise.shot_noise = false;
        c
    }

    #[test]
    fn every_preset_validates() {
        let ctx = ctx();
        for name in PresetName::ALL {
            let seq = preset(name, &ctx, PresetOverrides::default()).unwrap();
            seq.validate().unwrap();
            assert!(seq.sweep.is_some(), "{:?} carries a sweep", name);
        }
    }

    #[test]
    fn preset_names_round_trip() {
        for name in PresetName::ALL {
            assert_eq!(name.tag().parse::<PresetName>().unwrap(), name);
        }
        assert!(matches!(
            "bogus".parse::<PresetName>(),
            Err(SequenceError::UnknownPreset(_))
        ));
    }

    #[test]
    fn ms1_preset_dips_at_additive_frequency() {
        let mut ctx = ctx();
        ctx.mode_tag = "nmr_pulsed_ms1".into();
        let overrides = PresetOverrides {
            points: Some(61),
            shots: Some(1000),
            ..Default::default()
        };
        let seq = preset(PresetName::NmrPulsedMs1, &ctx, overrides).unwrap();
        let series = run_sweep(&seq, &ctx).unwrap();
        let (imin, _) = series
            .y
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .unwrap();
        let lines = context_lines(&ctx).unwrap();
        assert!(
            (series.x[imin] - lines.f_rf1).abs() < 15.0e3,
            "ms1 dip at {} vs f_RF1 {}",
            series.x[imin],
            lines.f_rf1
        );
        // hyperfine offset from the ms0 line ≈ |A∥|
        assert!(
            ((lines.f_rf1 - lines.f_rf0) - ctx.params.a_par.abs()).abs() < 5.0e3,
            "f_RF1 − f_RF0 = {}",
            lines.f_rf1 - lines.f_rf0
        );
    }

    #[test]
    fn fid_preset_has_ramsey_structure() {
        let ctx = ctx();
        let seq = preset(PresetName::FidN, &ctx, PresetOverrides::default()).unwrap();
        let kinds: Vec<_> = seq.pulses.iter().map(|p| p.kind).collect();
        assert_eq!(
            kinds,
            vec![
                PulseKind::Laser,
                PulseKind::Wait,
                PulseKind::Rf,
                PulseKind::Wait,
                PulseKind::Rf,
                PulseKind::Read
            ]
        );
        assert_eq!(seq.pulses[2].duration, DurationSpec::HalfPi);
        assert_eq!(seq.pulses[4].duration, DurationSpec::HalfPi);
    }
}
