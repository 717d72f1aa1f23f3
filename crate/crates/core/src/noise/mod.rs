//! Noise spectra, Floquet filter weights and decoherence rates.

mod rates;
mod weights;

use serde::{Deserialize, Serialize};

use crate::circuit::Fluxonium;
use crate::units::{thermal_angular, DEFAULT_OMEGA_IR, TWO_PI};
use crate::{Error, Result};

pub use rates::{
    dephasing_envelope, dynamical_rates, envelope_decay_time, filter_function, rates_with_spectrum,
    static_rates, static_rates_circuit, Channel, RateFlags, RateTerm, Rates, SpectrumRates,
};
pub use weights::{coupling_weights, filter_weights, FilterWeights};

/// Default 1/f clamp margin, 2π·1 MHz in rad/ns.
pub const DEFAULT_MARGIN: f64 = TWO_PI * 1e-3;

/// Spectral parameters of the 1/f flux and dielectric channels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    /// 1/f amplitude in rad/ns.
    pub a_f: f64,
    /// Dielectric amplitude in ns.
    pub a_d: f64,
    /// Kelvin.
    pub temperature: f64,
    /// Infrared cutoff in rad/s.
    pub omega_ir: f64,
    /// √|ln ω_ir t_m|.
    pub ln_factor: f64,
    /// Filter frequencies closer to zero than this (rad/ns) sample the 1/f
    /// spectrum at the margin instead.
    pub margin: f64,
}

impl NoiseModel {
    pub fn new(a_f: f64, a_d: f64, temperature: f64) -> Self {
        Self {
            a_f,
            a_d,
            temperature,
            omega_ir: DEFAULT_OMEGA_IR,
            ln_factor: 4.0,
            margin: DEFAULT_MARGIN,
        }
    }

    /// Amplitudes from a loss tangent and a relative flux-noise amplitude,
    /// with φ̃_ge taken at half flux: 𝒜_d = π² tanδ_C φ̃_ge²/E_C and
    /// 𝒜_f = 2π δ_f E_L φ̃_ge (energies angular).
    pub fn from_loss(qubit: &Fluxonium, tan_delta_c: f64, delta_f: f64, temperature: f64) -> Self {
        let phi_ge = qubit.phi_ge();
        let e_c = TWO_PI * qubit.params.e_c;
        let a_d = std::f64::consts::PI.powi(2) * tan_delta_c * phi_ge * phi_ge / e_c;
        let a_f = TWO_PI * delta_f * qubit.e_l() * phi_ge;
        Self::new(a_f, a_d, temperature)
    }

    /// tanδ_C = 1.1e-6, δ_f = 1.8e-6, T = 15 mK.
    pub fn reference(qubit: &Fluxonium) -> Self {
        Self::from_loss(qubit, 1.1e-6, 1.8e-6, 0.015)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a_f >= 0.0 && self.a_d >= 0.0) {
            return Err(Error::invalid("noise amplitudes must be non-negative"));
        }
        if !(self.temperature > 0.0) {
            return Err(Error::invalid("temperature must be positive"));
        }
        if !(self.ln_factor > 0.0) {
            return Err(Error::invalid("ln_factor must be positive"));
        }
        if !(self.omega_ir > 0.0 && self.margin > 0.0) {
            return Err(Error::invalid("omega_ir and margin must be positive"));
        }
        Ok(())
    }

    /// Total spectrum S_d + S_f with the 1/f part clamped at the margin.
    /// The flag reports whether the clamp was applied.
    pub fn sample(&self, omega: f64) -> (f64, bool) {
        let clamped = omega.abs() < self.margin;
        let w_f = if clamped { self.margin } else { omega };
        let s_f = if self.a_f == 0.0 {
            0.0
        } else {
            spectrum_1f(w_f, self).unwrap_or(0.0)
        };
        (
            s_f + spectrum_dielectric(omega, self),
            clamped && self.a_f > 0.0,
        )
    }
}

/// S_f(ω) = 𝒜_f² |ω/2π|⁻¹.
pub fn spectrum_1f(omega: f64, model: &NoiseModel) -> Result<f64> {
    if omega == 0.0 {
        return Err(Error::ZeroFrequency);
    }
    Ok(model.a_f * model.a_f / (omega / TWO_PI).abs())
}

/// S_d(ω) = α(ω, T) 𝒜_d (ω/2π)² with α = |coth(ω/2k_BT) + 1|/2.
pub fn spectrum_dielectric(omega: f64, model: &NoiseModel) -> f64 {
    if omega == 0.0 {
        return 0.0;
    }
    let f = omega / TWO_PI;
    thermal_factor(omega, model.temperature) * model.a_d * f * f
}

/// α(ω, T) = |coth(ω/2k_BT) + 1|/2 = |1/(1 − e^{−ω/k_BT})|.
pub fn thermal_factor(omega: f64, temperature: f64) -> f64 {
    let x = omega / thermal_angular(temperature);
    (1.0 / -(-x).exp_m1()).abs()
}
