//! Line-oriented pulse-sequence DSL.
//!
//! ```text
//! # comments with '#'; numbers are plain SI floats (seconds, Hz, rad)
//! file        := (line NEWLINE)*
//! line        := pulse | sweep | cwblock
//! pulse       := "laser" DUR | "laser_read" DUR | "wait" DUR
//!              | ("mw"|"rf") FREQ RABI (DUR|"pi"|"pi/2") [PHASE]
//! sweep       := "sweep" IDENT FLOAT FLOAT INT
//! cwblock     := "cw" "{" pulse (";" pulse)* "}"
//! FREQ        := FLOAT | "$" IDENT
//! DUR         := FLOAT | "$" IDENT
//! ```
//!
//! Inside a `cw` block segment durations are meaningless (the signal is a
//! steady state) and may be omitted; `read` is accepted there as shorthand
//! for `laser_read`. A duration slot accepts a `$`-variable so sweeps can
//! scan pulse lengths and wait times as well as frequencies.

use super::{
    DurationSpec, FreqSpec, Pulse, PulseKind, PulseSequence, SequenceError, Sweep, SweepScale,
    DEFAULT_SHOTS_PER_POINT,
};

struct Token<'a> {
    text: &'a str,
    col: usize,
}

fn tokenize(line: &str) -> Vec<Token<'_>> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, ch) in line.char_indices() {
        if ch.is_whitespace() {
            if let Some(s) = start.take() {
                out.push(Token {
                    text: &line[s..i],
                    col: s + 1,
                });
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        out.push(Token {
            text: &line[s..],
            col: s + 1,
        });
    }
    out
}

fn syntax(line: usize, col: usize, msg: impl Into<String>) -> SequenceError {
    SequenceError::Syntax {
        line,
        col,
        msg: msg.into(),
    }
}

fn parse_duration(tok: &Token, line: usize) -> Result<DurationSpec, SequenceError> {
    if let Some(name) = tok.text.strip_prefix('$') {
        if name.is_empty() {
            return Err(syntax(line, tok.col, "empty variable name"));
        }
        return Ok(DurationSpec::Var(name.to_string()));
    }
    match tok.text {
        "pi" => Ok(DurationSpec::Pi),
        "pi/2" => Ok(DurationSpec::HalfPi),
        other => other
            .parse::<f64>()
            .map(DurationSpec::Seconds)
            .map_err(|_| syntax(line, tok.col, format!("expected a duration, got '{other}'"))),
    }
}

fn parse_freq(tok: &Token, line: usize) -> Result<FreqSpec, SequenceError> {
    if let Some(name) = tok.text.strip_prefix('$') {
        if name.is_empty() {
            return Err(syntax(line, tok.col, "empty variable name"));
        }
        return Ok(FreqSpec::Var(name.to_string()));
    }
    tok.text
        .parse::<f64>()
        .map(FreqSpec::Hz)
        .map_err(|_| syntax(line, tok.col, format!("expected a frequency, got '{}'", tok.text)))
}

fn parse_float(tok: &Token, line: usize, what: &str) -> Result<f64, SequenceError> {
    tok.text
        .parse::<f64>()
        .map_err(|_| syntax(line, tok.col, format!("expected {what}, got '{}'", tok.text)))
}

/// Parse one pulse from tokens. `in_cw` relaxes the duration requirement.
fn parse_pulse(
    tokens: &[Token],
    line: usize,
    in_cw: bool,
) -> Result<Pulse, SequenceError> {
    let head = &tokens[0];
    let need = |n: usize, what: &str| -> Result<(), SequenceError> {
        if tokens.len() < n {
            Err(syntax(
                line,
                head.col,
                format!("'{}' needs {what}", head.text),
            ))
        } else {
            Ok(())
        }
    };
    match head.text {
        "laser" | "laser_read" | "read" | "wait" => {
            let kind = match head.text {
                "laser" => PulseKind::Laser,
                "wait" => PulseKind::Wait,
                _ => PulseKind::Read,
            };
            if head.text == "read" && !in_cw {
                return Err(syntax(
                    line,
                    head.col,
                    "'read' is only valid inside a cw block; use 'laser_read' with a window",
                ));
            }
            let duration = if tokens.len() >= 2 {
                parse_duration(&tokens[1], line)?
            } else if in_cw {
                // steady-state mode: durations are meaningless; reads keep a
                // default collection window for the shot-noise model
                DurationSpec::Seconds(if kind == PulseKind::Read { 3.0e-7 } else { 0.0 })
            } else {
                return Err(syntax(line, head.col, "missing duration"));
            };
            if tokens.len() > 2 {
                return Err(syntax(
                    line,
                    tokens[2].col,
                    format!("unexpected token '{}'", tokens[2].text),
                ));
            }
            Ok(Pulse {
                kind,
                duration,
                frequency: None,
                rabi: None,
                phase: 0.0,
            })
        }
        "mw" | "rf" => {
            let kind = if head.text == "mw" {
                PulseKind::Mw
            } else {
                PulseKind::Rf
            };
            if in_cw {
                need(3, "FREQ RABI")?;
            } else {
                need(4, "FREQ RABI DURATION")?;
            }
            let frequency = parse_freq(&tokens[1], line)?;
            let rabi = parse_float(&tokens[2], line, "a Rabi frequency")?;
            let duration = if tokens.len() >= 4 {
                parse_duration(&tokens[3], line)?
            } else {
                DurationSpec::Seconds(0.0)
            };
            let phase = if tokens.len() >= 5 {
                parse_float(&tokens[4], line, "a phase")?
            } else {
                0.0
            };
            if tokens.len() > 5 {
                return Err(syntax(
                    line,
                    tokens[5].col,
                    format!("unexpected token '{}'", tokens[5].text),
                ));
            }
            Ok(Pulse {
                kind,
                duration,
                frequency: Some(frequency),
                rabi: Some(rabi),
                phase,
            })
        }
        other => Err(syntax(line, head.col, format!("unknown keyword '{other}'"))),
    }
}

/// Parse DSL text into a validated sequence.
pub fn parse_sequence(text: &str) -> Result<PulseSequence, SequenceError> {
    let mut pulses = Vec::new();
    let mut sweep: Option<Sweep> = None;
    let mut cw = false;

    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let stripped = match raw_line.find('#') {
            Some(pos) => &raw_line[..pos],
            None => raw_line,
        };
        if stripped.trim().is_empty() {
            continue;
        }
        let trimmed = stripped.trim_start();

        if trimmed.starts_with("cw") {
            let open = stripped.find('{').ok_or_else(|| {
                syntax(line_no, stripped.find("cw").unwrap() + 1, "cw block needs '{'")
            })?;
            let close = stripped.rfind('}').ok_or_else(|| {
                syntax(line_no, stripped.len(), "cw block is missing '}'")
            })?;
            if cw || !pulses.is_empty() {
                return Err(syntax(
                    line_no,
                    1,
                    "cw block must be the only pulse content of the file",
                ));
            }
            cw = true;
            for part in stripped[open + 1..close].split(';') {
                if part.trim().is_empty() {
                    continue;
                }
                let tokens = tokenize(part);
                // columns inside the block are relative to the slice; good
                // enough for diagnostics
                pulses.push(parse_pulse(&tokens, line_no, true)?);
            }
            continue;
        }

        let tokens = tokenize(stripped);
        if tokens[0].text == "sweep" {
            if tokens.len() != 5 {
                return Err(syntax(
                    line_no,
                    tokens[0].col,
                    "sweep needs: sweep IDENT START STOP POINTS",
                ));
            }
            if sweep.is_some() {
                return Err(SequenceError::DuplicateSweep { line: line_no });
            }
            let var = tokens[1].text.to_string();
            if var.starts_with('$') {
                return Err(syntax(
                    line_no,
                    tokens[1].col,
                    "sweep variable is declared without '$'",
                ));
            }
            let start = parse_float(&tokens[2], line_no, "a start value")?;
            let stop = parse_float(&tokens[3], line_no, "a stop value")?;
            let points: usize = tokens[4].text.parse().map_err(|_| {
                syntax(line_no, tokens[4].col, "expected an integer point count")
            })?;
            if points < 2 {
                return Err(syntax(line_no, tokens[4].col, "sweep needs at least 2 points"));
            }
            sweep = Some(Sweep {
                var,
                start,
                stop,
                points,
                scale: SweepScale::Linear,
            });
            continue;
        }

        pulses.push(parse_pulse(&tokens, line_no, false)?);
    }

    let seq = PulseSequence {
        pulses,
        sweep,
        shots_per_point: DEFAULT_SHOTS_PER_POINT,
        cw,
    };
    seq.validate()?;
    Ok(seq)
}

fn render_duration(d: &DurationSpec) -> String {
    match d {
        DurationSpec::Seconds(s) => format!("{s}"),
        DurationSpec::Pi => "pi".into(),
        DurationSpec::HalfPi => "pi/2".into(),
        DurationSpec::Var(v) => format!("${v}"),
    }
}

fn render_pulse(p: &Pulse, in_cw: bool) -> String {
    match p.kind {
        PulseKind::Laser => {
            if in_cw {
                "laser".into()
            } else {
                format!("laser {}", render_duration(&p.duration))
            }
        }
        PulseKind::Wait => format!("wait {}", render_duration(&p.duration)),
        PulseKind::Read => {
            if in_cw {
                "read".into()
            } else {
                format!("laser_read {}", render_duration(&p.duration))
            }
        }
        PulseKind::Mw | PulseKind::Rf => {
            let name = if p.kind == PulseKind::Mw { "mw" } else { "rf" };
            let freq = match p.frequency.as_ref().expect("validated drive") {
                FreqSpec::Hz(f) => format!("{f}"),
                FreqSpec::Var(v) => format!("${v}"),
            };
            let mut out = if in_cw {
                format!("{name} {freq} {}", p.rabi.expect("validated drive"))
            } else {
                format!(
                    "{name} {freq} {} {}",
                    p.rabi.expect("validated drive"),
                    render_duration(&p.duration)
                )
            };
            if p.phase != 0.0 {
                out.push_str(&format!(" {}", p.phase));
            }
            out
        }
    }
}

/// Canonical DSL text for a sequence; `parse_sequence(render_sequence(s))`
/// is structurally equal to `s`.
pub fn render_sequence(seq: &PulseSequence) -> String {
    let mut out = String::new();
    if seq.cw {
        let parts: Vec<String> = seq.pulses.iter().map(|p| render_pulse(p, true)).collect();
        out.push_str(&format!("cw {{ {} }}\n", parts.join("; ")));
    } else {
        for p in &seq.pulses {
            out.push_str(&render_pulse(p, false));
            out.push('\n');
        }
    }
    if let Some(s) = &seq.sweep {
        out.push_str(&format!("sweep {} {} {} {}\n", s.var, s.start, s.stop, s.points));
    }
    out
}
