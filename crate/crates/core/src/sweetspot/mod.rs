//! Quasi-energy dispersions and dynamical sweet spots.
//!
//! A drive point is dc-sweet when ∂ε_01/∂φ_dc = 0 and ac-sweet when
//! ∂ε_01/∂φ_ac = 0. Both derivatives follow from the Floquet modes alone:
//! ∂ε_01/∂B = g_{0φ} and ∂ε_01/∂A = 2 Re g_{1φ}.

mod gaps;
mod limits;
mod trace;

use std::cell::Cell;

use serde::{Deserialize, Serialize};

use crate::circuit::TwoLevelParams;
use crate::floquet::{floquet_solve_monodromy, FloquetSolution, FourierModes};
use crate::noise::Rates;
use crate::{Complex64, Error, Result};

pub use gaps::{
    fwhm_width, gap_strong, gap_weak, numeric_fwhm, numeric_gap, GapEstimate, NumericGap, Regime,
};
pub use limits::{
    general_sweet_condition, limit_frequency_modulation, limit_spin_locking, spin_locking_floquet,
    FrequencyModulation, FrequencyModulationLimit, GeneralSweet, SpinLocking, SpinLockingLimit,
};
pub use trace::{
    find_ac_roots, find_doubly_sweet, scan_point, sweet_point, sweet_scan, trace_dc_manifold,
    Region, ScanPoint, SweetCurve, Trace, TraceOptions,
};

/// Default bound on |g_{0φ}| (equivalently |∂ε_01/∂B|) for a sweet point.
pub const SWEET_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweetKind {
    Dc,
    Ac,
    Doubly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweetPoint {
    /// Radians.
    pub phi_dc: f64,
    /// Radians.
    pub phi_ac: f64,
    pub f_d: f64,
    /// GHz.
    pub eps01: f64,
    pub kind: SweetKind,
    /// Local gap min(ε_01, ω_d − ε_01) below the trace threshold.
    pub gap_flag: bool,
    /// min(ε_01, ω_d − ε_01) in GHz.
    pub gap: f64,
    /// ∂ε_01/∂B.
    pub g0_phi: f64,
    /// ∂ε_01/∂A.
    pub d_amp: f64,
    /// ∂ε_01/∂φ_dc in rad/ns per radian.
    pub dispersion_dc: f64,
    /// ∂ε_01/∂φ_ac in rad/ns per radian.
    pub dispersion_ac: f64,
    /// Set when a two-dimensional refinement could not be carried out.
    pub unrefined: bool,
    pub rates: Option<Rates>,
}

/// Quasi-energy data and first derivatives at one drive point, rad/ns.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Dispersion {
    pub omega_d: f64,
    pub eps01: f64,
    /// min(ε_01, ω_d − ε_01).
    pub gap: f64,
    /// ∂ε_01/∂B = g_{0φ}.
    pub d_bias: f64,
    /// ∂ε_01/∂A = 2 Re g_{1φ}.
    pub d_amp: f64,
}

/// Σ_k u_k† σ_z u_{k+q}.
fn sigma_z_harmonic(m: &FourierModes, q: i64) -> Complex64 {
    m.ks()
        .map(|k| {
            let a = m.get(k);
            let b = m.get(k + q);
            a[0].conj() * b[0] - a[1].conj() * b[1]
        })
        .sum()
}

pub fn dispersion_of(sol: &FloquetSolution) -> Result<Dispersion> {
    if sol.is_degenerate() {
        return Err(Error::Degenerate { eps01: sol.eps01 });
    }
    let d_bias = 0.5 * (sol.mean_sigma_z(1) - sol.mean_sigma_z(0));
    let d_amp = (sigma_z_harmonic(&sol.modes[1], 1) - sigma_z_harmonic(&sol.modes[0], 1)).re;
    Ok(Dispersion {
        omega_d: sol.omega_d,
        eps01: sol.eps01,
        gap: sol.eps01.min(sol.omega_d - sol.eps01),
        d_bias,
        d_amp,
    })
}

pub fn dispersion(tl: &TwoLevelParams) -> Result<Dispersion> {
    dispersion_of(&floquet_solve_monodromy(tl)?)
}

/// ∂ε_01/∂B.
pub fn dispersion_bias(tl: &TwoLevelParams) -> Result<f64> {
    Ok(dispersion(tl)?.d_bias)
}

/// ∂ε_01/∂A.
pub fn dispersion_amp(tl: &TwoLevelParams) -> Result<f64> {
    Ok(dispersion(tl)?.d_amp)
}

/// ∂ε_01/∂φ_dc = g_{0φ} · 2E_L φ̃_ge.
pub fn dispersion_dc(tl: &TwoLevelParams) -> Result<f64> {
    let scale = tl
        .bias_per_flux()
        .ok_or_else(|| Error::invalid("dc dispersion needs circuit provenance"))?;
    Ok(dispersion_bias(tl)? * scale)
}

/// ∂ε_01/∂φ_ac = 2 Re g_{1φ} · E_L φ̃_ge.
pub fn dispersion_ac(tl: &TwoLevelParams) -> Result<f64> {
    let scale = tl
        .amp_per_flux()
        .ok_or_else(|| Error::invalid("ac dispersion needs circuit provenance"))?;
    Ok(dispersion_amp(tl)? * scale)
}

/// Brent root of a fallible function on a sign-changing bracket.
pub(crate) fn brent<F>(f: F, a: f64, b: f64, tol: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let failure: Cell<Option<Error>> = Cell::new(None);
    let wrapped = |x: f64| match f(x) {
        Ok(v) => v,
        Err(e) => {
            failure.set(Some(e));
            f64::NAN
        }
    };
    let mut conv = roots::SimpleConvergency {
        eps: tol,
        max_iter: 200,
    };
    let root = roots::find_root_brent(a, b, &wrapped, &mut conv);
    if let Some(e) = failure.take() {
        return Err(e);
    }
    root.map_err(|e| Error::NoRoot(format!("{e:?} on [{a}, {b}]")))
}
