use serde::{Deserialize, Serialize};

use super::{FilterWeights, NoiseModel};
use crate::circuit::{StaticSpectrum, TwoLevelParams};
use crate::units::{ghz_to_angular, per_ns_to_per_us};
use crate::Result;

/// Weights below this are left out of the per-term breakdown.
const BREAKDOWN_FLOOR: f64 = 1e-24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    Plus,
    Minus,
    Phi,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateTerm {
    pub k: i64,
    pub channel: Channel,
    /// Filter frequency in rad/ns.
    pub freq: f64,
    /// |g_{k±}|² or 2|g_{kφ}|².
    pub weight: f64,
    /// Spectrum value the weight multiplies (rad/ns).
    pub spectrum: f64,
    /// Contribution to the rate in 1/μs.
    pub contribution: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RateFlags {
    /// A depolarisation filter frequency fell inside the 1/f clamp margin.
    pub one_over_f_limited_t1: bool,
    /// g_{0φ} vanishes exactly, so the leading 1/f dephasing term is absent.
    pub first_order_insensitive: bool,
}

/// Rates in 1/μs and times in μs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rates {
    pub gamma_plus: f64,
    pub gamma_minus: f64,
    pub gamma_phi: f64,
    pub t1: f64,
    pub t_phi: f64,
    /// Leading 1/f dephasing term 𝒜_f |2g_{0φ}| ln_factor, 1/μs.
    pub gamma_phi_1f: f64,
    pub breakdown: Vec<RateTerm>,
    pub flags: RateFlags,
}

/// γ_∓ = Σ_k |g_{k∓}|² S(ω̄_{k∓}),
/// γ_φ = 𝒜_f |2g_{0φ}| ln_factor + Σ_{k≠0} 2|g_{kφ}|² S(kω_d).
pub fn dynamical_rates(w: &FilterWeights, model: &NoiseModel) -> Result<Rates> {
    model.validate()?;
    let mut breakdown = Vec::new();
    let mut flags = RateFlags::default();
    let mut gamma_plus = 0.0;
    let mut gamma_minus = 0.0;
    let mut gamma_phi = 0.0;

    for k in w.ks() {
        for (channel, g, freq) in [
            (Channel::Minus, w.minus(k), w.freq_minus(k)),
            (Channel::Plus, w.plus(k), w.freq_plus(k)),
        ] {
            let weight = g.norm_sqr();
            if weight == 0.0 {
                continue;
            }
            let (s, clamped) = model.sample(freq);
            let c = per_ns_to_per_us(weight * s);
            if clamped && weight > BREAKDOWN_FLOOR {
                flags.one_over_f_limited_t1 = true;
            }
            match channel {
                Channel::Minus => gamma_minus += c,
                _ => gamma_plus += c,
            }
            if weight > BREAKDOWN_FLOOR {
                breakdown.push(RateTerm {
                    k,
                    channel,
                    freq,
                    weight,
                    spectrum: s,
                    contribution: c,
                });
            }
        }
        let g = w.phi(k);
        let weight = 2.0 * g.norm_sqr();
        if k == 0 || weight == 0.0 {
            continue;
        }
        let (s, _) = model.sample(w.freq_phi(k));
        let c = per_ns_to_per_us(weight * s);
        gamma_phi += c;
        if weight > BREAKDOWN_FLOOR {
            breakdown.push(RateTerm {
                k,
                channel: Channel::Phi,
                freq: w.freq_phi(k),
                weight,
                spectrum: s,
                contribution: c,
            });
        }
    }

    let g0 = w.phi(0);
    let gamma_phi_1f = per_ns_to_per_us(model.a_f * 2.0 * g0.norm() * model.ln_factor);
    flags.first_order_insensitive = g0.norm() == 0.0;
    if g0.norm() > 0.0 {
        let weight = 2.0 * g0.norm_sqr();
        breakdown.push(RateTerm {
            k: 0,
            channel: Channel::Phi,
            freq: 0.0,
            weight,
            spectrum: gamma_phi_1f / per_ns_to_per_us(weight),
            contribution: gamma_phi_1f,
        });
    }
    gamma_phi += gamma_phi_1f;

    Ok(Rates {
        gamma_plus,
        gamma_minus,
        gamma_phi,
        t1: 1.0 / (gamma_plus + gamma_minus),
        t_phi: 1.0 / gamma_phi,
        gamma_phi_1f,
        breakdown,
        flags,
    })
}

/// Rates of the undriven two-level model, Ω_ge = √(Δ² + B²).
pub fn static_rates(tl: &TwoLevelParams, model: &NoiseModel) -> Result<Rates> {
    let omega = tl.omega_ge();
    let sigma_ge = tl.delta / omega;
    let sigma_diff = 2.0 * tl.bias / omega;
    dynamical_rates(
        &FilterWeights::from_static(omega, sigma_ge, sigma_diff),
        model,
    )
}

/// Rates of the undriven circuit with σ_z = φ̂/φ̃_ge, where `phi_ge_at_pi`
/// is the half-flux matrix element used to define the noise amplitudes.
pub fn static_rates_circuit(
    spec: &StaticSpectrum,
    phi_ge_at_pi: f64,
    model: &NoiseModel,
) -> Result<Rates> {
    let omega = ghz_to_angular(spec.omega_ge());
    let sigma_ge = spec.phi_matrix[(0, 1)].abs() / phi_ge_at_pi;
    let sigma_diff = (spec.phi_matrix[(1, 1)] - spec.phi_matrix[(0, 0)]) / phi_ge_at_pi;
    dynamical_rates(
        &FilterWeights::from_static(omega, sigma_ge, sigma_diff),
        model,
    )
}

/// Coherence factor exp[−4𝒜_f²|g_{0φ}|² t² |ln ω_ir t| − Σ_{k≠0} 2|g_{kφ}|² S(kω_d) t]
/// at `t_us` microseconds.
pub fn dephasing_envelope(t_us: f64, w: &FilterWeights, model: &NoiseModel) -> f64 {
    if t_us <= 0.0 {
        return 1.0;
    }
    let t_ns = t_us * 1e3;
    let t_s = t_us * 1e-6;
    let g0 = w.phi(0).norm();
    let gauss = 4.0 * model.a_f.powi(2) * g0 * g0 * t_ns * t_ns * (model.omega_ir * t_s).ln().abs();
    let expo: f64 = w
        .ks()
        .filter(|&k| k != 0)
        .map(|k| 2.0 * w.phi(k).norm_sqr() * model.sample(w.freq_phi(k)).0)
        .sum::<f64>()
        * t_ns;
    (-(gauss + expo)).exp()
}

/// Time (μs) at which the envelope first drops to 1/e.
pub fn envelope_decay_time(w: &FilterWeights, model: &NoiseModel) -> f64 {
    let target = (-1.0f64).exp();
    let mut hi = 1e-6;
    while dephasing_envelope(hi, w, model) > target {
        hi *= 2.0;
        if hi > 1e15 {
            return f64::INFINITY;
        }
    }
    let mut lo = hi / 2.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if dephasing_envelope(mid, w, model) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// F_μ(ω, t) = ζ_μ⁻¹ Σ_k (t/π) sinc[(ω − ω̄_{kμ}) t] |g_{kμ}|², ζ_± = 1, ζ_φ = 1/2.
pub fn filter_function(omega: f64, t_ns: f64, w: &FilterWeights, channel: Channel) -> f64 {
    let sinc = |x: f64| {
        if x.abs() < 1e-8 {
            1.0 - x * x / 6.0
        } else {
            x.sin() / x
        }
    };
    let inv_zeta = if channel == Channel::Phi { 2.0 } else { 1.0 };
    w.ks()
        .map(|k| {
            let (g, f) = match channel {
                Channel::Plus => (w.plus(k), w.freq_plus(k)),
                Channel::Minus => (w.minus(k), w.freq_minus(k)),
                Channel::Phi => (w.phi(k), w.freq_phi(k)),
            };
            let weight = g.norm_sqr();
            if weight == 0.0 {
                0.0
            } else {
                t_ns / std::f64::consts::PI * sinc((omega - f) * t_ns) * weight
            }
        })
        .sum::<f64>()
        * inv_zeta
}

/// Rates for an arbitrary spectrum S(ω) sampled at every filter frequency,
/// including S(0) for the k = 0 dephasing term. Units follow the spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumRates {
    pub gamma_plus: f64,
    pub gamma_minus: f64,
    pub gamma_phi: f64,
}

pub fn rates_with_spectrum<S: Fn(f64) -> f64>(w: &FilterWeights, spectrum: S) -> SpectrumRates {
    let mut out = SpectrumRates {
        gamma_plus: 0.0,
        gamma_minus: 0.0,
        gamma_phi: 0.0,
    };
    for k in w.ks() {
        out.gamma_plus += w.plus(k).norm_sqr() * spectrum(w.freq_plus(k));
        out.gamma_minus += w.minus(k).norm_sqr() * spectrum(w.freq_minus(k));
        out.gamma_phi += 2.0 * w.phi(k).norm_sqr() * spectrum(w.freq_phi(k));
    }
    out
}
