use floqsweet::circuit::{Fluxonium, FluxoniumParams};
use floqsweet::noise::NoiseModel;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Parsed run configuration. Every block is optional and falls back to the
/// reference circuit, the reference noise and the task defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub circuit: Option<CircuitConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drive: Option<DriveConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scan: Option<ScanConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<TraceConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gap: Option<GapConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gate: Option<GateConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub two_qubit: Option<TwoQubitConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub limits: Option<LimitsConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
}

/// Circuit energies in GHz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircuitConfig {
    pub e_c: f64,
    pub e_j: f64,
    pub e_l: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub basis_dim: Option<usize>,
}

impl Default for CircuitConfig {
    fn default() -> Self {
        Self {
            e_c: 0.5,
            e_j: 4.0,
            e_l: 1.3,
            basis_dim: None,
        }
    }
}

impl CircuitConfig {
    pub fn params(&self) -> FluxoniumParams {
        let mut p = FluxoniumParams::new(self.e_c, self.e_j, self.e_l);
        if let Some(n) = self.basis_dim {
            p.basis_dim = n;
        }
        p
    }
}

/// Either the loss form (tan_delta_c, delta_f) or raw amplitudes (a_f, a_d).
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tan_delta_c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_f: Option<f64>,
    /// rad/ns.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a_f: Option<f64>,
    /// ns.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a_d: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub temperature_k: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ln_factor: Option<f64>,
    /// 1/f clamp margin in GHz.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub margin_ghz: Option<f64>,
}

impl NoiseConfig {
    pub fn model(&self, qubit: &Fluxonium) -> CliResult<NoiseModel> {
        let t = self.temperature_k.unwrap_or(0.015);
        let loss = self.tan_delta_c.is_some() || self.delta_f.is_some();
        let raw = self.a_f.is_some() || self.a_d.is_some();
        let mut m = match (loss, raw) {
            (true, true) => {
                return Err(CliError::schema(
                    "noise",
                    "give either tan_delta_c/delta_f or a_f/a_d, not both",
                ))
            }
            (false, true) => NoiseModel::new(self.a_f.unwrap_or(0.0), self.a_d.unwrap_or(0.0), t),
            _ => NoiseModel::from_loss(
                qubit,
                self.tan_delta_c.unwrap_or(1.1e-6),
                self.delta_f.unwrap_or(1.8e-6),
                t,
            ),
        };
        if let Some(l) = self.ln_factor {
            m.ln_factor = l;
        }
        if let Some(g) = self.margin_ghz {
            m.margin = floqsweet::units::ghz_to_angular(g);
        }
        m.validate()?;
        Ok(m)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriveConfig {
    pub phi_dc_over_2pi: f64,
    #[serde(default)]
    pub phi_ac_over_2pi: f64,
    #[serde(default = "default_f_d")]
    pub f_d_ghz: f64,
}

fn default_f_d() -> f64 {
    1.0
}

impl Default for DriveConfig {
    fn default() -> Self {
        Self {
            phi_dc_over_2pi: 0.52,
            phi_ac_over_2pi: 0.0,
            f_d_ghz: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub min: f64,
    pub max: f64,
    pub n: usize,
}

impl Grid {
    pub fn check(&self, path: &str) -> CliResult<()> {
        if self.n < 2 {
            return Err(CliError::schema(format!("{path}.n"), "grids need n >= 2"));
        }
        if !(self.min.is_finite() && self.max.is_finite() && self.min < self.max) {
            return Err(CliError::schema(path, "grids need finite min < max"));
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.n)
            .map(|i| self.min + (self.max - self.min) * i as f64 / (self.n - 1) as f64)
            .collect()
    }
}

/// Fig.-2-style window: drive frequency against ac flux amplitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    pub f_d_ghz: Grid,
    pub phi_ac_over_2pi: Grid,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self {
            f_d_ghz: Grid {
                min: 0.15,
                max: 0.8,
                n: 60,
            },
            phi_ac_over_2pi: Grid {
                min: 0.0005,
                max: 0.2,
                n: 30,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_jump_cells: Option<usize>,
    #[serde(default)]
    pub doubly: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GapConfig {
    #[serde(default = "default_orders")]
    pub orders: Vec<u32>,
    pub regime: floqsweet::sweetspot::Regime,
}

fn default_orders() -> Vec<u32> {
    vec![1, 2, 3]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GateConfig {
    /// Move f_d to the nearest dc sweet frequency at the given amplitude.
    #[serde(default = "yes")]
    pub locate_sweet: bool,
    /// Rabi pulse length for X and √X.
    #[serde(default = "default_rabi_duration")]
    pub duration_ns: f64,
    /// Secondary-tone amplitude for the chevron, GHz.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tone_amplitude_ghz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chevron_durations_ns: Option<Grid>,
    /// Carrier offsets from ε_01, GHz.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chevron_detunings_ghz: Option<Grid>,
    #[serde(default = "default_plateau")]
    pub plateau_ns: f64,
    #[serde(default = "default_phase_ramp")]
    pub ramp_ns: f64,
    /// Ramp-down times for the readout map.
    #[serde(default = "default_t_ramps")]
    pub t_ramp_ns: Vec<f64>,
}

fn yes() -> bool {
    true
}
fn default_rabi_duration() -> f64 {
    60.0
}
fn default_plateau() -> f64 {
    20.0
}
fn default_phase_ramp() -> f64 {
    5.0
}
fn default_t_ramps() -> Vec<f64> {
    vec![0.0, 10.0, 20.0, 30.0, 50.0, 100.0, 150.0, 200.0]
}

impl Default for GateConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("defaults")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QubitConfig {
    pub circuit: CircuitConfig,
    pub phi_dc_over_2pi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwoQubitConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub left: Option<QubitConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub right: Option<QubitConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub j_ghz: Option<f64>,
    /// Left idle amplitude as a fraction of its Ω_ge.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub idle_amp_ratio: Option<f64>,
    /// Right working amplitude as a fraction of its Ω_ge.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub right_amp_ratio: Option<f64>,
    #[serde(default = "default_waits")]
    pub tau_wait_ns: Grid,
    #[serde(default = "default_ramps")]
    pub t_ramp_ns: Grid,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub open_system: Option<OpenConfig>,
}

fn default_waits() -> Grid {
    Grid {
        min: 0.0,
        max: 60.0,
        n: 21,
    }
}
fn default_ramps() -> Grid {
    Grid {
        min: 4.0,
        max: 60.0,
        n: 15,
    }
}

impl Default for TwoQubitConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("defaults")
    }
}

/// Open-system run at the best grid point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OpenConfig {
    #[serde(default = "default_samples")]
    pub samples: usize,
}

fn default_samples() -> usize {
    64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LimitsConfig {
    /// Longitudinal modulation Ω(t) = Ω̄ + Σ_k 2 a_k cos(kω t); values GHz.
    #[serde(default = "default_mean")]
    pub fm_mean_ghz: f64,
    #[serde(default = "default_harmonics")]
    pub fm_harmonics_ghz: Vec<f64>,
    #[serde(default = "default_fm_omega")]
    pub fm_f_d_ghz: f64,
    #[serde(default = "default_detuning")]
    pub sl_detuning_ghz: f64,
    #[serde(default = "default_drive")]
    pub sl_drive_ghz: f64,
    #[serde(default = "default_carrier")]
    pub sl_f_d_ghz: f64,
}

fn default_mean() -> f64 {
    0.7
}
fn default_harmonics() -> Vec<f64> {
    vec![0.12, 0.03]
}
fn default_fm_omega() -> f64 {
    0.25
}
fn default_detuning() -> f64 {
    0.004
}
fn default_drive() -> f64 {
    0.01
}
fn default_carrier() -> f64 {
    0.7
}

impl Default for LimitsConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("defaults")
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> CliResult<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            CliError::schema(
                if path.is_empty() { ".".into() } else { path },
                e.into_inner().to_string(),
            )
        })?;
        cfg.check()?;
        Ok(cfg)
    }

    /// Schema-level checks that serde cannot express.
    pub fn check(&self) -> CliResult<()> {
        if let Some(s) = &self.scan {
            s.f_d_ghz.check("scan.f_d_ghz")?;
            s.phi_ac_over_2pi.check("scan.phi_ac_over_2pi")?;
        }
        if let Some(g) = &self.gate {
            if let Some(d) = &g.chevron_durations_ns {
                d.check("gate.chevron_durations_ns")?;
            }
            if let Some(d) = &g.chevron_detunings_ghz {
                d.check("gate.chevron_detunings_ghz")?;
            }
        }
        if let Some(t) = &self.two_qubit {
            t.tau_wait_ns.check("two_qubit.tau_wait_ns")?;
            t.t_ramp_ns.check("two_qubit.t_ramp_ns")?;
        }
        if self.threads == Some(0) {
            return Err(CliError::schema("threads", "thread count must be positive"));
        }
        Ok(())
    }

    pub fn circuit(&self) -> CircuitConfig {
        self.circuit.unwrap_or_default()
    }

    pub fn drive(&self) -> DriveConfig {
        self.drive.unwrap_or_default()
    }

    pub fn qubit(&self) -> CliResult<Fluxonium> {
        Ok(Fluxonium::new(self.circuit().params())?)
    }

    pub fn noise_model(&self, qubit: &Fluxonium) -> CliResult<NoiseModel> {
        self.noise.unwrap_or_default().model(qubit)
    }
}
