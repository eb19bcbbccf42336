//! Scenario configuration: versioned JSON schema, strict about unknown keys,
//! with named parameter presets.

use serde::{Deserialize, Serialize};

use fblab_core::model::ModeParams;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    ScanDetuning,
    Quench,
    Squeeze,
    DistanceScan,
    KdEstimate,
    Sms,
}

impl Scenario {
    pub fn name(&self) -> &'static str {
        match self {
            Scenario::ScanDetuning => "scan-detuning",
            Scenario::Quench => "quench",
            Scenario::Squeeze => "squeeze",
            Scenario::DistanceScan => "distance-scan",
            Scenario::KdEstimate => "kd-estimate",
            Scenario::Sms => "sms",
        }
    }
}

/// Reduced-model parameters in experiment-friendly units (Hz, units of pi).
#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct ModeParamsConfig {
    pub omega_1_hz: Option<f64>,
    pub omega_2_hz: Option<f64>,
    pub gamma_hz: Option<f64>,
    pub g_hz: Option<f64>,
    /// Effective detuning from the detuning-branch resonance (Hz);
    /// delta_omega = (omega_2 - omega_1) + 2 pi delta_hz.
    pub delta_hz: Option<f64>,
    /// Absolute optical detuning (Hz); overrides `delta_hz` when set.
    pub delta_omega_hz: Option<f64>,
    pub delta_phi: Option<f64>,
    pub kd_pi: Option<f64>,
    pub temperature_k: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulationConfig {
    pub n_traj: usize,
    pub duration_s: f64,
    pub discard_s: f64,
    pub store_every: usize,
    pub seed: u64,
    pub mass_kg: f64,
    pub wavelength_m: f64,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig {
            n_traj: 64,
            duration_s: 0.05,
            discard_s: 0.01,
            store_every: 16,
            seed: 20_260_811,
            mass_kg: fblab_core::scenarios::DEFAULT_MASS,
            wavelength_m: 1064e-9,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisConfig {
    /// Welch segment duration (s).
    pub segment_time_s: f64,
    /// Maximum lag of the empirical g2 (s).
    pub tau_max_s: f64,
    /// Feedback damping for the quench protocol (Hz).
    pub gamma_fb_hz: Option<f64>,
    /// Stage durations for the quench protocol (s).
    pub t_cool_s: f64,
    pub t_free_s: f64,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            segment_time_s: 0.02,
            tau_max_s: 3e-3,
            gamma_fb_hz: None,
            t_cool_s: 2e-3,
            t_free_s: 10e-3,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct ScanConfig {
    /// Optical detunings for scan-detuning (Hz). When empty, a symmetric
    /// grid around the mechanical detuning is generated.
    pub delta_omega_hz: Vec<f64>,
    /// Half-span and point count of the generated grid.
    pub span_hz: f64,
    pub points: usize,
    /// Distance phases for distance-scan / kd-estimate, in units of pi.
    pub kd_pi: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub schema_version: u32,
    pub scenario: Scenario,
    #[serde(default)]
    pub preset: Option<String>,
    #[serde(default)]
    pub mode_params: ModeParamsConfig,
    #[serde(default)]
    pub simulation: SimulationConfig,
    #[serde(default)]
    pub analysis: AnalysisConfig,
    #[serde(default)]
    pub scan: ScanConfig,
    #[serde(default = "default_output_dir")]
    pub output_dir: String,
}

fn default_output_dir() -> String {
    "out".into()
}

/// A named parameter set.
#[derive(Debug, Clone, Serialize)]
pub struct Preset {
    pub name: &'static str,
    pub gamma_hz: f64,
    pub g_hz: f64,
    pub abs_delta_hz: f64,
    pub kd_pi: f64,
    /// Distance-phase grid for scan presets.
    pub kd_scan_pi: &'static [f64],
}

pub const FIG4_KDS: [f64; 8] = [1.19, 1.06, 0.94, 0.78, 0.65, 0.51, 0.39, 0.24];

pub fn presets() -> Vec<Preset> {
    vec![
        Preset { name: "fig3a-top", gamma_hz: 106.0, g_hz: 724.0, abs_delta_hz: 202.0, kd_pi: -0.029, kd_scan_pi: &[] },
        Preset { name: "fig3a-bottom", gamma_hz: 147.0, g_hz: 722.0, abs_delta_hz: 318.0, kd_pi: 0.489, kd_scan_pi: &[] },
        Preset { name: "fig3b-top", gamma_hz: 570.0, g_hz: 806.0, abs_delta_hz: 670.0, kd_pi: -0.07, kd_scan_pi: &[] },
        Preset { name: "fig3c", gamma_hz: 474.0, g_hz: 357.0, abs_delta_hz: 45.0, kd_pi: 0.51, kd_scan_pi: &[] },
        Preset { name: "fig4", gamma_hz: 466.0, g_hz: 276.0, abs_delta_hz: 127.0, kd_pi: 1.19, kd_scan_pi: &FIG4_KDS },
    ]
}

pub fn find_preset(name: &str) -> Option<Preset> {
    presets().into_iter().find(|p| p.name == name)
}

/// Fully resolved parameters, embedded verbatim in every output.
#[derive(Debug, Clone, Serialize)]
pub struct Resolved {
    pub schema_version: u32,
    pub scenario: &'static str,
    pub preset: Option<String>,
    pub params: ModeParams,
    pub simulation: SimulationConfig,
    pub analysis: AnalysisConfig,
    pub scan_kd: Vec<f64>,
    pub scan_delta_omega: Vec<f64>,
}

#[derive(Debug)]
pub struct ConfigError {
    pub pointer: String,
    pub message: String,
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.pointer, self.message)
    }
}

fn bad(pointer: &str, message: impl Into<String>) -> ConfigError {
    ConfigError { pointer: pointer.into(), message: message.into() }
}

impl ScenarioConfig {
    pub fn parse(text: &str) -> Result<ScenarioConfig, ConfigError> {
        let cfg: ScenarioConfig = serde_json::from_str(text)
            .map_err(|e| bad("/", format!("schema violation: {e}")))?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(bad(
                "/schema_version",
                format!("unsupported version {} (expected {SCHEMA_VERSION})", cfg.schema_version),
            ));
        }
        Ok(cfg)
    }

    /// Merge preset and explicit fields into concrete mode parameters.
    pub fn resolve(&self) -> Result<Resolved, ConfigError> {
        let preset = match &self.preset {
            Some(name) => Some(
                find_preset(name)
                    .ok_or_else(|| bad("/preset", format!("unknown preset '{name}'")))?,
            ),
            None => None,
        };
        let mp = &self.mode_params;
        let two_pi = 2.0 * std::f64::consts::PI;
        let omega_1 = two_pi * mp.omega_1_hz.unwrap_or(27e3);
        let omega_2 = two_pi * mp.omega_2_hz.unwrap_or(33e3);
        let gamma_hz = mp
            .gamma_hz
            .or(preset.as_ref().map(|p| p.gamma_hz))
            .ok_or_else(|| bad("/mode_params/gamma_hz", "missing (no preset either)"))?;
        let g_hz = mp
            .g_hz
            .or(preset.as_ref().map(|p| p.g_hz))
            .ok_or_else(|| bad("/mode_params/g_hz", "missing (no preset either)"))?;
        let kd_pi = mp
            .kd_pi
            .or(preset.as_ref().map(|p| p.kd_pi))
            .ok_or_else(|| bad("/mode_params/kd_pi", "missing (no preset either)"))?;
        let delta_omega = if let Some(dw) = mp.delta_omega_hz {
            two_pi * dw
        } else {
            let delta_hz =
                mp.delta_hz.or(preset.as_ref().map(|p| p.abs_delta_hz)).unwrap_or(0.0);
            (omega_2 - omega_1) + two_pi * delta_hz
        };
        let temperature = mp.temperature_k.unwrap_or(300.0);
        if !(temperature > 0.0) {
            return Err(bad("/mode_params/temperature_k", "must be positive"));
        }
        let params = ModeParams::new(
            omega_1,
            omega_2,
            two_pi * gamma_hz,
            two_pi * g_hz,
            delta_omega,
            mp.delta_phi.unwrap_or(0.0),
            kd_pi * std::f64::consts::PI,
            ModeParams::thermal_occupation(omega_1, temperature),
            ModeParams::thermal_occupation(omega_2, temperature),
        )
        .map_err(|e| bad("/mode_params", e.to_string()))?;
        let sim = &self.simulation;
        if sim.n_traj == 0 {
            return Err(bad("/simulation/n_traj", "must be at least 1"));
        }
        if !(sim.duration_s > 0.0) {
            return Err(bad("/simulation/duration_s", "must be positive"));
        }
        if sim.discard_s >= sim.duration_s {
            return Err(bad("/simulation/discard_s", "must be smaller than duration_s"));
        }
        // Scan grids.
        let scan_kd: Vec<f64> = if !self.scan.kd_pi.is_empty() {
            self.scan.kd_pi.iter().map(|v| v * std::f64::consts::PI).collect()
        } else if let Some(p) = &preset {
            p.kd_scan_pi.iter().map(|v| v * std::f64::consts::PI).collect()
        } else {
            Vec::new()
        };
        let scan_delta_omega: Vec<f64> = if !self.scan.delta_omega_hz.is_empty() {
            self.scan.delta_omega_hz.iter().map(|v| two_pi * v).collect()
        } else {
            let points = if self.scan.points >= 2 { self.scan.points } else { 21 };
            let span = if self.scan.span_hz > 0.0 { self.scan.span_hz } else { 2.5e3 };
            let center = omega_2 - omega_1;
            (0..points)
                .map(|i| {
                    center + two_pi * (-span + 2.0 * span * i as f64 / (points - 1) as f64)
                })
                .collect()
        };
        Ok(Resolved {
            schema_version: self.schema_version,
            scenario: self.scenario.name(),
            preset: self.preset.clone(),
            params,
            simulation: self.simulation.clone(),
            analysis: self.analysis.clone(),
            scan_kd,
            scan_delta_omega,
        })
    }
}
