//! Run configuration: a strict TOML schema with unit-suffixed quantities,
//! validated into SI form. The effective configuration echoes into every
//! run summary in the same schema, so a summary can reproduce its run.

use serde::{Deserialize, Serialize};

use rbsim::engine::SimConfig;
use rbsim::noise::{calibrate, AmplitudeErrorModel, OUParams, RelaxationParams};
use rbsim::pulse::{DdKind, GateParams, PulseStyle, SchemeId};

use crate::units;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub experiment: String,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub sim: RawSim,
    #[serde(default)]
    pub pulse: RawPulse,
    #[serde(default)]
    pub noise: RawNoise,
    #[serde(default)]
    pub eps: RawEps,
    #[serde(default)]
    pub relaxation: RawRelaxation,
    #[serde(default)]
    pub coherence: RawCoherence,
}

fn default_seed() -> u64 {
    20260811
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawSim {
    pub dt: String,
    pub n_sequences: usize,
    pub n_noise: usize,
    pub m_values: Vec<usize>,
    pub scheme: String,
}

impl Default for RawSim {
    fn default() -> Self {
        Self {
            dt: "0.1 us".into(),
            n_sequences: 32,
            n_noise: 100,
            m_values: vec![1, 2, 4, 8, 16, 32, 48, 64, 80],
            scheme: "bare_bb1".into(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawPulse {
    /// Pi-pulse duration; alternatively give the drive amplitude as
    /// `omega1` (a frequency like "62.5 kHz", meaning omega_1 = 2 pi f).
    pub t_pi: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega1: Option<String>,
    pub scheme_a_delay: String,
    pub scheme_a_lead_delay: bool,
    pub scheme_c_pad: String,
    pub scheme_d_delay: String,
    pub scheme_e_delay: String,
}

impl Default for RawPulse {
    fn default() -> Self {
        Self {
            t_pi: "8 us".into(),
            omega1: None,
            scheme_a_delay: "3 us".into(),
            scheme_a_lead_delay: true,
            scheme_c_pad: "18 us".into(),
            scheme_d_delay: "57 us".into(),
            scheme_e_delay: "69 us".into(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawNoise {
    /// "off", "calibrated" (from t2_fid/t2_hahn) or "explicit" (sigma/tau_c).
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t2_fid: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t2_hahn: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau_c: Option<String>,
}

impl Default for RawNoise {
    fn default() -> Self {
        Self { kind: "off".into(), t2_fid: None, t2_hahn: None, sigma: None, tau_c: None }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawEps {
    /// "off", "fixed", "gaussian" or "uniform".
    pub model: String,
    #[serde(default)]
    pub value: f64,
}

impl Default for RawEps {
    fn default() -> Self {
        Self { model: "off".into(), value: 0.0 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawRelaxation {
    /// "off" or a duration like "1.52 s".
    pub t1: String,
}

impl Default for RawRelaxation {
    fn default() -> Self {
        Self { t1: "off".into() }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawCoherence {
    /// "fid", "hahn", "xy4", "xy8" or "xy16".
    pub kind: String,
    pub t_max: String,
    pub points: usize,
    pub tau_delay: String,
    pub n_cycles: usize,
    /// "rect" or "bb1" decoupling pulses.
    pub dd_style: String,
}

impl Default for RawCoherence {
    fn default() -> Self {
        Self {
            kind: "fid".into(),
            t_max: "1.5 ms".into(),
            points: 24,
            tau_delay: "2 us".into(),
            n_cycles: 12,
            dd_style: "rect".into(),
        }
    }
}

/// Noise selection after validation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseChoice {
    Off,
    /// Calibrate (sigma, tau_c) from the two coherence-time targets.
    Calibrated { t2_fid: f64, t2_hahn: f64 },
    Explicit(OUParams),
}

/// Validated configuration in SI units.
#[derive(Debug, Clone)]
pub struct Config {
    pub experiment: String,
    pub seed: u64,
    pub dt: f64,
    pub n_sequences: usize,
    pub n_noise: usize,
    pub m_values: Vec<usize>,
    pub scheme: SchemeId,
    pub gate_params: GateParams,
    pub noise: NoiseChoice,
    pub eps_model: AmplitudeErrorModel,
    pub t1: Option<f64>,
    pub coherence_kind: String,
    pub coherence_t_max: f64,
    pub coherence_points: usize,
    pub coherence_tau_delay: f64,
    pub coherence_n_cycles: usize,
    pub coherence_dd_style: PulseStyle,
}

fn field_err(field: &str, msg: impl std::fmt::Display) -> String {
    format!("config field '{field}': {msg}")
}

impl RawConfig {
    pub fn parse_toml(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| format!("config parse error: {e}"))
    }

    pub fn validate(&self) -> Result<Config, String> {
        const EXPERIMENTS: [&str; 7] =
            ["rb", "coherence", "calibrate", "table1", "fig2", "fig3", "fig4"];
        if !EXPERIMENTS.contains(&self.experiment.as_str()) {
            return Err(field_err(
                "experiment",
                format!("'{}' is not one of {EXPERIMENTS:?}", self.experiment),
            ));
        }

        let dt = units::parse_time(&self.sim.dt).map_err(|e| field_err("sim.dt", e))?;
        let scheme =
            SchemeId::parse(&self.sim.scheme).map_err(|e| field_err("sim.scheme", e))?;
        if self.sim.m_values.is_empty() && self.experiment == "rb" {
            return Err(field_err("sim.m_values", "must not be empty"));
        }

        let t_pi = match &self.pulse.omega1 {
            Some(f) => {
                let freq = units::parse_frequency(f).map_err(|e| field_err("pulse.omega1", e))?;
                if !(freq > 0.0) {
                    return Err(field_err("pulse.omega1", "must be positive"));
                }
                // omega_1 = 2 pi f, and t_pi = pi / omega_1.
                1.0 / (2.0 * freq)
            }
            None => units::parse_time(&self.pulse.t_pi).map_err(|e| field_err("pulse.t_pi", e))?,
        };
        if !(t_pi > 0.0) {
            return Err(field_err("pulse.t_pi", "must be positive"));
        }
        let gate_params = GateParams {
            scheme_a_delay: units::parse_time(&self.pulse.scheme_a_delay)
                .map_err(|e| field_err("pulse.scheme_a_delay", e))?,
            scheme_a_lead_delay: self.pulse.scheme_a_lead_delay,
            scheme_c_pad: units::parse_time(&self.pulse.scheme_c_pad)
                .map_err(|e| field_err("pulse.scheme_c_pad", e))?,
            scheme_d_delay: units::parse_time(&self.pulse.scheme_d_delay)
                .map_err(|e| field_err("pulse.scheme_d_delay", e))?,
            scheme_e_delay: units::parse_time(&self.pulse.scheme_e_delay)
                .map_err(|e| field_err("pulse.scheme_e_delay", e))?,
            ..GateParams::default().with_t_pi(t_pi)
        };

        let noise = match self.noise.kind.as_str() {
            "off" => NoiseChoice::Off,
            "calibrated" => {
                let t2_fid = units::parse_time(
                    self.noise.t2_fid.as_deref().ok_or_else(|| {
                        field_err("noise.t2_fid", "required when noise.kind = \"calibrated\"")
                    })?,
                )
                .map_err(|e| field_err("noise.t2_fid", e))?;
                let t2_hahn = units::parse_time(
                    self.noise.t2_hahn.as_deref().ok_or_else(|| {
                        field_err("noise.t2_hahn", "required when noise.kind = \"calibrated\"")
                    })?,
                )
                .map_err(|e| field_err("noise.t2_hahn", e))?;
                NoiseChoice::Calibrated { t2_fid, t2_hahn }
            }
            "explicit" => {
                let sigma = units::parse_rate(self.noise.sigma.as_deref().ok_or_else(|| {
                    field_err("noise.sigma", "required when noise.kind = \"explicit\"")
                })?)
                .map_err(|e| field_err("noise.sigma", e))?;
                let tau_c = units::parse_time(self.noise.tau_c.as_deref().ok_or_else(|| {
                    field_err("noise.tau_c", "required when noise.kind = \"explicit\"")
                })?)
                .map_err(|e| field_err("noise.tau_c", e))?;
                NoiseChoice::Explicit(
                    OUParams::new(sigma, tau_c).map_err(|e| field_err("noise", e))?,
                )
            }
            other => {
                return Err(field_err(
                    "noise.kind",
                    format!("'{other}' is not one of off, calibrated, explicit"),
                ))
            }
        };

        let eps_model = match self.eps.model.as_str() {
            "off" | "none" => AmplitudeErrorModel::Off,
            "fixed" => AmplitudeErrorModel::Fixed(self.eps.value),
            "gaussian" => AmplitudeErrorModel::Gaussian { sigma: self.eps.value },
            "uniform" => AmplitudeErrorModel::Uniform { width: self.eps.value },
            other => {
                return Err(field_err(
                    "eps.model",
                    format!("'{other}' is not one of off, fixed, gaussian, uniform"),
                ))
            }
        };
        eps_model.validate().map_err(|e| field_err("eps.value", e))?;

        let t1 = units::parse_time_or_off(&self.relaxation.t1)
            .map_err(|e| field_err("relaxation.t1", e))?;
        if let Some(t1) = t1 {
            RelaxationParams::with_t1(t1).map_err(|e| field_err("relaxation.t1", e))?;
        }

        let coherence_kinds = ["fid", "hahn", "xy4", "xy8", "xy16"];
        if !coherence_kinds.contains(&self.coherence.kind.as_str()) {
            return Err(field_err(
                "coherence.kind",
                format!("'{}' is not one of {coherence_kinds:?}", self.coherence.kind),
            ));
        }
        let coherence_dd_style = match self.coherence.dd_style.as_str() {
            "rect" => PulseStyle::Rect,
            "bb1" => PulseStyle::Bb1,
            other => {
                return Err(field_err(
                    "coherence.dd_style",
                    format!("'{other}' is not one of rect, bb1"),
                ))
            }
        };

        Ok(Config {
            experiment: self.experiment.clone(),
            seed: self.seed,
            dt,
            n_sequences: self.sim.n_sequences,
            n_noise: self.sim.n_noise,
            m_values: self.sim.m_values.clone(),
            scheme,
            gate_params,
            noise,
            eps_model,
            t1,
            coherence_kind: self.coherence.kind.clone(),
            coherence_t_max: units::parse_time(&self.coherence.t_max)
                .map_err(|e| field_err("coherence.t_max", e))?,
            coherence_points: self.coherence.points,
            coherence_tau_delay: units::parse_time(&self.coherence.tau_delay)
                .map_err(|e| field_err("coherence.tau_delay", e))?,
            coherence_n_cycles: self.coherence.n_cycles,
            coherence_dd_style,
        })
    }
}

impl Config {
    /// Resolves the noise choice to concrete parameters (running the
    /// coherence-time calibration if requested).
    pub fn resolve_noise(&self) -> Result<Option<OUParams>, rbsim::Error> {
        match self.noise {
            NoiseChoice::Off => Ok(None),
            NoiseChoice::Calibrated { t2_fid, t2_hahn } => calibrate(t2_fid, t2_hahn).map(Some),
            NoiseChoice::Explicit(p) => Ok(Some(p)),
        }
    }

    pub fn sim_config(&self, noise: Option<OUParams>) -> Result<SimConfig, rbsim::Error> {
        let relaxation = match self.t1 {
            Some(t1) => RelaxationParams::with_t1(t1)?,
            None => RelaxationParams::off(),
        };
        Ok(SimConfig {
            dt: self.dt,
            n_noise: self.n_noise,
            n_sequences: self.n_sequences,
            m_values: self.m_values.clone(),
            scheme: self.scheme,
            gate_params: self.gate_params,
            noise,
            eps_model: self.eps_model,
            relaxation,
            master_seed: self.seed,
        })
    }

    pub fn coherence_dd_kind(&self) -> Option<DdKind> {
        match self.coherence_kind.as_str() {
            "xy4" => Some(DdKind::Xy4),
            "xy8" => Some(DdKind::Xy8),
            "xy16" => Some(DdKind::Xy16),
            _ => None,
        }
    }

    /// Canonical raw form for the summary echo; parsing it back yields a
    /// bit-identical run.
    pub fn to_raw(&self) -> RawConfig {
        let (noise_kind, t2_fid, t2_hahn, sigma, tau_c) = match self.noise {
            NoiseChoice::Off => ("off", None, None, None, None),
            NoiseChoice::Calibrated { t2_fid, t2_hahn } => (
                "calibrated",
                Some(units::format_time(t2_fid)),
                Some(units::format_time(t2_hahn)),
                None,
                None,
            ),
            NoiseChoice::Explicit(p) => (
                "explicit",
                None,
                None,
                Some(units::format_rate(p.sigma)),
                Some(units::format_time(p.tau_c)),
            ),
        };
        let (eps_model, eps_value) = match self.eps_model {
            AmplitudeErrorModel::Off => ("off", 0.0),
            AmplitudeErrorModel::Fixed(v) => ("fixed", v),
            AmplitudeErrorModel::Gaussian { sigma } => ("gaussian", sigma),
            AmplitudeErrorModel::Uniform { width } => ("uniform", width),
        };
        RawConfig {
            experiment: self.experiment.clone(),
            seed: self.seed,
            sim: RawSim {
                dt: units::format_time(self.dt),
                n_sequences: self.n_sequences,
                n_noise: self.n_noise,
                m_values: self.m_values.clone(),
                scheme: self.scheme.name().into(),
            },
            pulse: RawPulse {
                t_pi: units::format_time(self.gate_params.t_pi()),
                omega1: None,
                scheme_a_delay: units::format_time(self.gate_params.scheme_a_delay),
                scheme_a_lead_delay: self.gate_params.scheme_a_lead_delay,
                scheme_c_pad: units::format_time(self.gate_params.scheme_c_pad),
                scheme_d_delay: units::format_time(self.gate_params.scheme_d_delay),
                scheme_e_delay: units::format_time(self.gate_params.scheme_e_delay),
            },
            noise: RawNoise {
                kind: noise_kind.into(),
                t2_fid,
                t2_hahn,
                sigma,
                tau_c,
            },
            eps: RawEps { model: eps_model.into(), value: eps_value },
            relaxation: RawRelaxation {
                t1: match self.t1 {
                    Some(t1) => units::format_time(t1),
                    None => "off".into(),
                },
            },
            coherence: RawCoherence {
                kind: self.coherence_kind.clone(),
                t_max: units::format_time(self.coherence_t_max),
                points: self.coherence_points,
                tau_delay: units::format_time(self.coherence_tau_delay),
                n_cycles: self.coherence_n_cycles,
                dd_style: match self.coherence_dd_style {
                    PulseStyle::Rect => "rect".into(),
                    PulseStyle::Bb1 => "bb1".into(),
                },
            },
        }
    }
}
