//! Pulse-sequence representation, the text DSL, the sweep engine, and the
//! preset experiments.
//!
//! A sequence is an ordered list of laser/microwave/RF/wait/readout
//! segments plus an optional swept variable. Sequences come from three
//! places: the DSL parser ([`parse_sequence`]), the presets
//! ([`preset`]), or direct construction. The engine evaluates one point
//! ([`run_point`]) or a whole sweep ([`run_sweep`]) against an immutable
//! simulation context.

mod engine;
mod parser;
mod presets;

pub use engine::{run_point, run_sweep, PointValue, SimContext};
pub use parser::{parse_sequence, render_sequence};
pub use presets::{exact_lines, preset, PresetName, PresetOverrides};

use std::collections::HashMap;

use thiserror::Error;

use crate::dynamics::DynamicsError;

#[derive(Debug, Error)]
pub enum SequenceError {
    #[error("line {line}, column {col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("unresolved variable ${0}")]
    UnresolvedVar(String),
    #[error("duplicate sweep declaration (line {line})")]
    DuplicateSweep { line: usize },
    #[error("sequence has no readout pulse and is not in CW mode")]
    MissingRead,
    #[error("invalid sequence: {0}")]
    Invalid(String),
    #[error("CW mode supports exactly one drive tone, found {0}")]
    CwTones(usize),
    #[error("multiple carrier frequencies on one channel are not supported in a single sequence")]
    MultipleCarriers,
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error("unknown preset '{0}'")]
    UnknownPreset(String),
    #[error("malformed CSV at row {row}: {msg}")]
    Csv { row: usize, msg: String },
}

/// Segment kind of a pulse.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PulseKind {
    Laser,
    Mw,
    Rf,
    Wait,
    /// Fluorescence collection window (laser on).
    Read,
}

/// A duration: concrete seconds, a π/π2 symbol resolved from the Rabi
/// frequency, or a sweep variable.
#[derive(Debug, Clone, PartialEq)]
pub enum DurationSpec {
    Seconds(f64),
    Pi,
    HalfPi,
    Var(String),
}

/// A frequency: concrete Hz or a sweep variable.
#[derive(Debug, Clone, PartialEq)]
pub enum FreqSpec {
    Hz(f64),
    Var(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pulse {
    pub kind: PulseKind,
    pub duration: DurationSpec,
    /// Carrier frequency; mw/rf only.
    pub frequency: Option<FreqSpec>,
    /// On-resonance Rabi frequency, Hz; mw/rf only.
    pub rabi: Option<f64>,
    /// Drive phase, rad.
    pub phase: f64,
}

impl Pulse {
    pub fn laser(duration: f64) -> Self {
        Pulse {
            kind: PulseKind::Laser,
            duration: DurationSpec::Seconds(duration),
            frequency: None,
            rabi: None,
            phase: 0.0,
        }
    }

    pub fn wait(duration: DurationSpec) -> Self {
        Pulse {
            kind: PulseKind::Wait,
            duration,
            frequency: None,
            rabi: None,
            phase: 0.0,
        }
    }

    pub fn read(window: f64) -> Self {
        Pulse {
            kind: PulseKind::Read,
            duration: DurationSpec::Seconds(window),
            frequency: None,
            rabi: None,
            phase: 0.0,
        }
    }

    pub fn drive(kind: PulseKind, frequency: FreqSpec, rabi: f64, duration: DurationSpec) -> Self {
        Pulse {
            kind,
            duration,
            frequency: Some(frequency),
            rabi: Some(rabi),
            phase: 0.0,
        }
    }
}

/// Sweep grids are linear; the scale field exists so serialized sequences
/// stay forward-compatible.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepScale {
    Linear,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub var: String,
    pub start: f64,
    pub stop: f64,
    pub points: usize,
    pub scale: SweepScale,
}

impl Sweep {
    pub fn grid(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.start];
        }
        (0..self.points)
            .map(|i| {
                self.start + (self.stop - self.start) * i as f64 / (self.points - 1) as f64
            })
            .collect()
    }
}

/// Default number of shots averaged per sweep point.
pub const DEFAULT_SHOTS_PER_POINT: u64 = 300_000;

#[derive(Debug, Clone, PartialEq)]
pub struct PulseSequence {
    pub pulses: Vec<Pulse>,
    pub sweep: Option<Sweep>,
    pub shots_per_point: u64,
    /// Continuous-wave mode: all segments run simultaneously and the
    /// signal is the steady-state emission.
    pub cw: bool,
}

impl PulseSequence {
    /// Structural validation: symbol resolution, read-pulse presence,
    /// per-kind field consistency.
    pub fn validate(&self) -> Result<(), SequenceError> {
        let sweep_var = self.sweep.as_ref().map(|s| s.var.as_str());
        let mut has_read = false;
        for p in &self.pulses {
            match p.kind {
                PulseKind::Mw | PulseKind::Rf => {
                    if p.frequency.is_none() || p.rabi.is_none() {
                        return Err(SequenceError::Invalid(
                            "mw/rf pulses need a frequency and a Rabi frequency".into(),
                        ));
                    }
                }
                _ => {
                    if matches!(p.duration, DurationSpec::Pi | DurationSpec::HalfPi) {
                        return Err(SequenceError::Invalid(
                            "symbolic π durations are only valid on mw/rf pulses".into(),
                        ));
                    }
                    if p.kind == PulseKind::Read {
                        has_read = true;
                    }
                }
            }
            if let DurationSpec::Var(name) = &p.duration {
                if sweep_var != Some(name.as_str()) {
                    return Err(SequenceError::UnresolvedVar(name.clone()));
                }
            }
            if let Some(FreqSpec::Var(name)) = &p.frequency {
                if sweep_var != Some(name.as_str()) {
                    return Err(SequenceError::UnresolvedVar(name.clone()));
                }
            }
        }
        if !has_read && !self.cw {
            return Err(SequenceError::MissingRead);
        }
        if self.cw {
            let tones = self
                .pulses
                .iter()
                .filter(|p| matches!(p.kind, PulseKind::Mw | PulseKind::Rf))
                .count();
            if tones != 1 {
                return Err(SequenceError::CwTones(tones));
            }
        }
        Ok(())
    }

    /// True when the sweep variable appears in a frequency slot (the sweep
    /// produces a spectrum rather than a time trace).
    pub fn sweep_is_frequency(&self) -> bool {
        let Some(sweep) = &self.sweep else {
            return false;
        };
        self.pulses.iter().any(|p| {
            matches!(&p.frequency, Some(FreqSpec::Var(v)) if *v == sweep.var)
        })
    }
}

/// Resolve durations and frequencies against variable bindings.
/// π durations become `1/(2·rabi)`, π/2 durations `1/(4·rabi)`.
pub fn resolve_pulse(
    pulse: &Pulse,
    bindings: &HashMap<String, f64>,
) -> Result<ResolvedPulse, SequenceError> {
    let duration = match &pulse.duration {
        DurationSpec::Seconds(s) => *s,
        DurationSpec::Pi => {
            1.0 / (2.0 * pulse.rabi.ok_or_else(|| {
                SequenceError::Invalid("π duration without a Rabi frequency".into())
            })?)
        }
        DurationSpec::HalfPi => {
            1.0 / (4.0 * pulse.rabi.ok_or_else(|| {
                SequenceError::Invalid("π/2 duration without a Rabi frequency".into())
            })?)
        }
        DurationSpec::Var(name) => *bindings
            .get(name)
            .ok_or_else(|| SequenceError::UnresolvedVar(name.clone()))?,
    };
    if duration < 0.0 || !duration.is_finite() {
        return Err(SequenceError::Invalid(format!(
            "resolved duration {duration} is not a valid time"
        )));
    }
    let frequency = match &pulse.frequency {
        None => None,
        Some(FreqSpec::Hz(f)) => Some(*f),
        Some(FreqSpec::Var(name)) => Some(*bindings.get(name).ok_or_else(|| {
            SequenceError::UnresolvedVar(name.clone())
        })?),
    };
    Ok(ResolvedPulse {
        kind: pulse.kind,
        duration,
        frequency,
        rabi: pulse.rabi,
        phase: pulse.phase,
    })
}

/// A pulse with all symbols bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolvedPulse {
    pub kind: PulseKind,
    pub duration: f64,
    pub frequency: Option<f64>,
    pub rabi: Option<f64>,
    pub phase: f64,
}

/// Sweep output metadata carried into the CSV header.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepMeta {
    pub mode: String,
    pub pressure_gpa: f64,
    pub field_gauss: f64,
}

/// Swept signal: x in Hz (spectrum) or seconds (time trace), normalized
/// counts, and the per-point statistical σ.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSeries {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub sigma: Vec<f64>,
    pub meta: SweepMeta,
}

impl SweepSeries {
    pub fn validate(&self) -> Result<(), SequenceError> {
        if self.x.len() != self.y.len() || self.x.len() != self.sigma.len() {
            return Err(SequenceError::Invalid(
                "x, y, sigma must have equal lengths".into(),
            ));
        }
        if self.x.windows(2).any(|w| w[1] <= w[0]) {
            return Err(SequenceError::Invalid("x must be strictly increasing".into()));
        }
        Ok(())
    }

    /// Serialize in the CSV exchange format:
    /// `# mode=<tag> pressure_gpa=<p> field_gauss=<b>` then `x,y,sigma`.
    pub fn to_csv(&self) -> String {
        let mut out = format!(
            "# mode={} pressure_gpa={} field_gauss={}\n",
            self.meta.mode, self.meta.pressure_gpa, self.meta.field_gauss
        );
        out.push_str("x,y,sigma\n");
        for i in 0..self.x.len() {
            out.push_str(&format!("{},{},{}\n", self.x[i], self.y[i], self.sigma[i]));
        }
        out
    }

    /// Parse the CSV exchange format. Header comment and column row are
    /// both optional; data errors carry the 1-based row number.
    pub fn from_csv(text: &str) -> Result<SweepSeries, SequenceError> {
        let mut meta = SweepMeta {
            mode: "unknown".into(),
            pressure_gpa: f64::NAN,
            field_gauss: f64::NAN,
        };
        let mut x = Vec::new();
        let mut y = Vec::new();
        let mut sigma = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            let row = idx + 1;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                for token in rest.split_whitespace() {
                    if let Some((key, value)) = token.split_once('=') {
                        match key {
                            "mode" => meta.mode = value.to_string(),
                            "pressure_gpa" => {
                                meta.pressure_gpa = value.parse().unwrap_or(f64::NAN)
                            }
                            "field_gauss" => {
                                meta.field_gauss = value.parse().unwrap_or(f64::NAN)
                            }
                            _ => {}
                        }
                    }
                }
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields[0] == "x" {
                continue; // column header
            }
            if fields.len() < 2 || fields.len() > 3 {
                return Err(SequenceError::Csv {
                    row,
                    msg: format!("expected 2 or 3 columns, got {}", fields.len()),
                });
            }
            let parse = |s: &str, what: &str| -> Result<f64, SequenceError> {
                s.parse().map_err(|_| SequenceError::Csv {
                    row,
                    msg: format!("cannot parse {what} value '{s}'"),
                })
            };
            x.push(parse(fields[0], "x")?);
            y.push(parse(fields[1], "y")?);
            sigma.push(if fields.len() == 3 {
                parse(fields[2], "sigma")?
            } else {
                0.0
            });
        }
        if x.is_empty() {
            return Err(SequenceError::Csv {
                row: 0,
                msg: "no data rows".into(),
            });
        }
        Ok(SweepSeries { x, y, sigma, meta })
    }
}
