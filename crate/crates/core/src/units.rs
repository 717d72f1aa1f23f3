//! Unit conversions between configuration units and internal angular units.

use std::f64::consts::PI;

pub const TWO_PI: f64 = 2.0 * PI;

/// Boltzmann constant over Planck constant in GHz per kelvin.
pub const KB_OVER_H_GHZ_PER_K: f64 = 20.836_619_12;

/// Infrared cutoff of 2π·1 Hz expressed in rad/s.
pub const DEFAULT_OMEGA_IR: f64 = TWO_PI;

#[inline]
pub fn ghz_to_angular(f_ghz: f64) -> f64 {
    TWO_PI * f_ghz
}

#[inline]
pub fn angular_to_ghz(omega: f64) -> f64 {
    omega / TWO_PI
}

/// Flux in units of the flux quantum (φ/2π) to reduced flux in radians.
#[inline]
pub fn flux_to_rad(phi_over_2pi: f64) -> f64 {
    TWO_PI * phi_over_2pi
}

#[inline]
pub fn rad_to_flux(phi: f64) -> f64 {
    phi / TWO_PI
}

/// k_B·T as an angular frequency in rad/ns.
#[inline]
pub fn thermal_angular(temperature_k: f64) -> f64 {
    TWO_PI * KB_OVER_H_GHZ_PER_K * temperature_k
}

/// Rate in 1/ns to rate in 1/μs.
#[inline]
pub fn per_ns_to_per_us(rate: f64) -> f64 {
    rate * 1.0e3
}
