//! Flat `key = value` configuration with dotted section prefixes.
//!
//! Unknown keys are rejected and every value is checked against its type
//! invariant at load, naming the offending key. `inf` is a valid time for
//! the optional nuclear relaxation. The canonical template with comments
//! comes from [`Config::template`].

use std::collections::HashMap;

use thiserror::Error;

use crate::dynamics::{NoiseModel, OpticalModel};
use crate::pressure::{PressureModel, RubyGauge};
use crate::sequences::SimContext;
use crate::spinops::{FieldVector, NvParams};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: cannot parse '{text}' (expected key = value)")]
    Malformed { line: usize, text: String },
    #[error("line {line}: unknown key '{key}'")]
    UnknownKey { line: usize, key: String },
    #[error("key '{key}': cannot parse value '{value}'")]
    BadValue { key: String, value: String },
    #[error("key '{key}': {msg}")]
    Invalid { key: String, msg: String },
}

/// Full runtime configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub rng_seed: u64,
    pub shots_per_point: u64,
    pub cw_pump_scale: f64,
    pub field: FieldVector,
    pub pressure_model: PressureModel,
    /// Pressure-independent couplings and constants.
    pub base_params: NvParams,
    /// Skip the ¹⁴N plausibility window on q and a_par.
    pub allow_exotic: bool,
    pub optical: OpticalModel,
    pub noise: NoiseModel,
    pub ruby: RubyGauge,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            rng_seed: 1,
            shots_per_point: crate::sequences::DEFAULT_SHOTS_PER_POINT,
            cw_pump_scale: 0.1,
            field: FieldVector::aligned(460.0),
            pressure_model: PressureModel::default(),
            base_params: NvParams::ambient(),
            allow_exotic: false,
            optical: OpticalModel::default(),
            noise: NoiseModel::default(),
            ruby: RubyGauge::default(),
        }
    }
}

fn parse_f64(key: &str, value: &str) -> Result<f64, ConfigError> {
    match value {
        "inf" | "infinity" => Ok(f64::INFINITY),
        _ => value.parse().map_err(|_| ConfigError::BadValue {
            key: key.to_string(),
            value: value.to_string(),
        }),
    }
}

fn parse_bool(key: &str, value: &str) -> Result<bool, ConfigError> {
    match value {
        "true" | "on" | "1" => Ok(true),
        "false" | "off" | "0" => Ok(false),
        _ => Err(ConfigError::BadValue {
            key: key.to_string(),
            value: value.to_string(),
        }),
    }
}

impl Config {
    /// Parse the flat file format; unknown keys are errors.
    pub fn parse(text: &str) -> Result<Config, ConfigError> {
        let mut cfg = Config::default();
        let mut field_mag = cfg.field.magnitude;
        let mut field_theta = cfg.field.theta;
        let mut field_phi = cfg.field.phi;
        let mut seen: HashMap<String, usize> = HashMap::new();

        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let stripped = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            };
            let stripped = stripped.trim();
            if stripped.is_empty() {
                continue;
            }
            let (key, value) = stripped.split_once('=').ok_or_else(|| ConfigError::Malformed {
                line: line_no,
                text: stripped.to_string(),
            })?;
            let key = key.trim();
            let value = value.trim();
            if let Some(first) = seen.insert(key.to_string(), line_no) {
                return Err(ConfigError::Invalid {
                    key: key.to_string(),
                    msg: format!("duplicated (lines {first} and {line_no})"),
                });
            }
            let f = || parse_f64(key, value);
            match key {
                "rng_seed" => {
                    cfg.rng_seed = value.parse().map_err(|_| ConfigError::BadValue {
                        key: key.into(),
                        value: value.into(),
                    })?
                }
                "sim.shots_per_point" => {
                    cfg.shots_per_point =
                        value.parse().map_err(|_| ConfigError::BadValue {
                            key: key.into(),
                            value: value.into(),
                        })?
                }
                "sim.cw_pump_scale" => cfg.cw_pump_scale = f()?,
                "field.magnitude_gauss" => field_mag = f()?,
                "field.theta_rad" => field_theta = f()?,
                "field.phi_rad" => field_phi = f()?,
                "pressure_model.d_gs0_hz" => cfg.pressure_model.d_gs0 = f()?,
                "pressure_model.d_slope_hz_per_gpa" => cfg.pressure_model.d_slope = f()?,
                "pressure_model.q0_hz" => cfg.pressure_model.q0 = f()?,
                "pressure_model.q_slope_hz_per_gpa" => cfg.pressure_model.q_slope = f()?,
                "pressure_model.a_par0_hz" => cfg.pressure_model.a_par0 = f()?,
                "pressure_model.a_slope_hz_per_gpa" => cfg.pressure_model.a_slope = f()?,
                "pressure_model.width0_hz" => cfg.pressure_model.width0 = f()?,
                "pressure_model.width_slope_hz_per_gpa" => {
                    cfg.pressure_model.width_slope = f()?
                }
                "pressure_model.p_min_gpa" => cfg.pressure_model.p_min = f()?,
                "pressure_model.p_max_gpa" => cfg.pressure_model.p_max = f()?,
                "constants.gamma_e_hz_per_gauss" => cfg.base_params.gamma_e = f()?,
                "constants.gamma_n_hz_per_gauss" => cfg.base_params.gamma_n = f()?,
                "constants.d_es_hz" => cfg.base_params.d_es = f()?,
                "constants.a_perp_hz" => cfg.base_params.a_perp = f()?,
                "constants.a_par_es_hz" => cfg.base_params.a_par_es = f()?,
                "constants.a_perp_es_hz" => cfg.base_params.a_perp_es = f()?,
                "constants.allow_exotic" => cfg.allow_exotic = parse_bool(key, value)?,
                "optical.pump_rate_hz" => cfg.optical.pump_rate = f()?,
                "optical.radiative_rate_hz" => cfg.optical.radiative_rate = f()?,
                "optical.isc_rate_ms0_hz" => cfg.optical.isc_rate_ms0 = f()?,
                "optical.isc_rate_ms1_hz" => cfg.optical.isc_rate_ms1 = f()?,
                "optical.singlet_decay_hz" => cfg.optical.singlet_decay = f()?,
                "optical.singlet_branching_ms0" => cfg.optical.singlet_branching_ms0 = f()?,
                "optical.counts_rate_bright" => cfg.optical.counts_rate_bright = f()?,
                "optical.contrast_nuclear" => cfg.optical.contrast_nuclear = f()?,
                "optical.contrast_electron" => cfg.optical.contrast_electron = f()?,
                "noise.t1e_s" => cfg.noise.t1e = f()?,
                "noise.t2e_star_s" => cfg.noise.t2e_star = f()?,
                "noise.t2n_star_s" => cfg.noise.t2n_star = f()?,
                "noise.t1n_s" => cfg.noise.t1n = f()?,
                "noise.shot_noise" => cfg.noise.shot_noise = parse_bool(key, value)?,
                "noise.extra_nmr_fwhm_hz" => cfg.noise.extra_nmr_fwhm = f()?,
                "ruby.lambda0_nm" => cfg.ruby.lambda0 = f()?,
                "ruby.a_coeff_gpa" => cfg.ruby.a_coeff = f()?,
                "ruby.b_coeff" => cfg.ruby.b_coeff = f()?,
                other => {
                    return Err(ConfigError::UnknownKey {
                        line: line_no,
                        key: other.to_string(),
                    })
                }
            }
        }

        cfg.field = FieldVector::new(field_mag, field_theta, field_phi).map_err(|e| {
            ConfigError::Invalid {
                key: "field".into(),
                msg: e.to_string(),
            }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Run every type invariant, naming the offending section.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let wrap = |key: &str, msg: String| ConfigError::Invalid {
            key: key.to_string(),
            msg,
        };
        self.pressure_model
            .validate()
            .map_err(|e| wrap("pressure_model", e.to_string()))?;
        self.base_params
            .validate()
            .map_err(|e| wrap("constants", e.to_string()))?;
        self.optical
            .validate()
            .map_err(|e| wrap("optical", e.to_string()))?;
        self.noise
            .validate()
            .map_err(|e| wrap("noise", e.to_string()))?;
        self.ruby
            .validate()
            .map_err(|e| wrap("ruby", e.to_string()))?;
        if !(self.cw_pump_scale > 0.0 && self.cw_pump_scale <= 1.0) {
            return Err(wrap(
                "sim.cw_pump_scale",
                format!("must lie in (0, 1], got {}", self.cw_pump_scale),
            ));
        }
        if self.shots_per_point == 0 {
            return Err(wrap("sim.shots_per_point", "must be at least 1".into()));
        }
        Ok(())
    }

    /// Simulation context at one pressure: parameters from the pressure
    /// model, pressure broadening folded into the nuclear dephasing.
    pub fn context_at(&self, pressure_gpa: f64) -> Result<SimContext, ConfigError> {
        let params = self
            .pressure_model
            .params_at_with(pressure_gpa, &self.base_params)
            .map_err(|e| ConfigError::Invalid {
                key: "pressure_model".into(),
                msg: e.to_string(),
            })?;
        if !self.allow_exotic {
            params.check_physical_window().map_err(|e| ConfigError::Invalid {
                key: "pressure_model".into(),
                msg: format!("{e} (set constants.allow_exotic = true to override)"),
            })?;
        }
        let mut noise = self.noise;
        noise.extra_nmr_fwhm += self
            .pressure_model
            .extra_width_at(pressure_gpa)
            .map_err(|e| ConfigError::Invalid {
                key: "pressure_model".into(),
                msg: e.to_string(),
            })?;
        Ok(SimContext {
            params,
            field: self.field,
            optical: self.optical,
            noise,
            pressure_gpa,
            seed: self.rng_seed,
            cw_pump_scale: self.cw_pump_scale,
            mode_tag: "custom".into(),
        })
    }

    /// Canonical config text with inline documentation.
    pub fn template(&self) -> String {
        let p = &self.pressure_model;
        let b = &self.base_params;
        let o = &self.optical;
        let n = &self.noise;
        let t1n = if self.noise.t1n.is_infinite() {
            "inf".to_string()
        } else {
            format!("{}", self.noise.t1n)
        };
        format!(
            "# nvdac configuration (flat key = value; '#' comments)\n\
             # Units: Hz, seconds, Gauss, GPa, nm. Signed couplings; reported\n\
             # spectroscopic values are magnitudes.\n\
             rng_seed = {}\n\
             sim.shots_per_point = {}\n\
             sim.cw_pump_scale = {}\n\
             \n\
             # Static field in the NV frame of the addressed orientation\n\
             field.magnitude_gauss = {}\n\
             field.theta_rad = {}\n\
             field.phi_rad = {}\n\
             \n\
             # Linear pressure trends; anchored at the published couplings.\n\
             # The width trend beyond its 30 kHz anchor is an estimate of the\n\
             # observed broadening; adjust against your own dataset.\n\
             pressure_model.d_gs0_hz = {}\n\
             pressure_model.d_slope_hz_per_gpa = {}\n\
             pressure_model.q0_hz = {}\n\
             pressure_model.q_slope_hz_per_gpa = {}\n\
             pressure_model.a_par0_hz = {}\n\
             pressure_model.a_slope_hz_per_gpa = {}\n\
             pressure_model.width0_hz = {}\n\
             pressure_model.width_slope_hz_per_gpa = {}\n\
             pressure_model.p_min_gpa = {}\n\
             pressure_model.p_max_gpa = {}\n\
             \n\
             # Pressure-independent constants. a_perp is an effective value\n\
             # keeping second-order shifts of the nuclear resonances under\n\
             # 2 kHz at the working field; the ESR literature value is near\n\
             # -2.7e6. Excited-state couplings drive the anti-crossing\n\
             # flip-flops.\n\
             constants.gamma_e_hz_per_gauss = {}\n\
             constants.gamma_n_hz_per_gauss = {}\n\
             constants.d_es_hz = {}\n\
             constants.a_perp_hz = {}\n\
             constants.a_par_es_hz = {}\n\
             constants.a_perp_es_hz = {}\n\
             constants.allow_exotic = {}\n\
             \n\
             # Optical cycle rates and readout calibration\n\
             optical.pump_rate_hz = {}\n\
             optical.radiative_rate_hz = {}\n\
             optical.isc_rate_ms0_hz = {}\n\
             optical.isc_rate_ms1_hz = {}\n\
             optical.singlet_decay_hz = {}\n\
             optical.singlet_branching_ms0 = {}\n\
             optical.counts_rate_bright = {}\n\
             optical.contrast_nuclear = {}\n\
             optical.contrast_electron = {}\n\
             \n\
             # Relaxation and dephasing\n\
             noise.t1e_s = {}\n\
             noise.t2e_star_s = {}\n\
             noise.t2n_star_s = {}\n\
             noise.t1n_s = {}\n\
             noise.shot_noise = {}\n\
             noise.extra_nmr_fwhm_hz = {}\n\
             \n\
             # Ruby R1 pressure gauge\n\
             ruby.lambda0_nm = {}\n\
             ruby.a_coeff_gpa = {}\n\
             ruby.b_coeff = {}\n",
            self.rng_seed,
            self.shots_per_point,
            self.cw_pump_scale,
            self.field.magnitude,
            self.field.theta,
            self.field.phi,
            p.d_gs0,
            p.d_slope,
            p.q0,
            p.q_slope,
            p.a_par0,
            p.a_slope,
            p.width0,
            p.width_slope,
            p.p_min,
            p.p_max,
            b.gamma_e,
            b.gamma_n,
            b.d_es,
            b.a_perp,
            b.a_par_es,
            b.a_perp_es,
            self.allow_exotic,
            o.pump_rate,
            o.radiative_rate,
            o.isc_rate_ms0,
            o.isc_rate_ms1,
            o.singlet_decay,
            o.singlet_branching_ms0,
            o.counts_rate_bright,
            o.contrast_nuclear,
            o.contrast_electron,
            n.t1e,
            n.t2e_star,
            n.t2n_star,
            t1n,
            n.shot_noise,
            n.extra_nmr_fwhm,
            self.ruby.lambda0,
            self.ruby.a_coeff,
            self.ruby.b_coeff,
        )
    }
}
