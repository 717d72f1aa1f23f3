use serde::{Deserialize, Serialize};

use crate::floquet::{solve_extended, ExtendedOptions, FloquetSolution, FourierHamiltonian};
use crate::linalg::{sigma_z, Mat2};
use crate::noise::{coupling_weights, rates_with_spectrum};
use crate::{Complex64, Error, Result};

/// Purely longitudinal modulation H = Ω_ge(λ, t) σ_z/2 with
/// Ω_ge(t) = Σ_k Ω_k e^{−ikω_d t}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyModulation {
    pub omega_d: f64,
    /// Ω_k for every k present; Ω_{−k} must equal Ω_k*.
    pub splitting: Vec<(i32, Complex64)>,
    /// ∂Ω_k/∂λ, same convention.
    pub slope: Vec<(i32, Complex64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyModulationLimit {
    /// Ω̄_ge = Ω_0.
    pub eps01_analytic: f64,
    /// g^λ_{kφ} = ½ ∂Ω_k/∂λ.
    pub g_phi_analytic: Vec<(i32, Complex64)>,
    /// ε_e − ε_g from the extended-space solver, reduced into [0, ω_d).
    pub eps01_floquet: f64,
    /// g^λ_{kφ} from the solver's modes, for the same k.
    pub g_phi_floquet: Vec<(i32, Complex64)>,
}

fn series_to_harmonics(series: &[(i32, Complex64)], scale: f64) -> Vec<(i32, Mat2)> {
    series
        .iter()
        .map(|&(k, c)| (k, sigma_z() * (c * scale)))
        .collect()
}

fn check_real_series(series: &[(i32, Complex64)]) -> Result<()> {
    for &(k, c) in series {
        let partner = series
            .iter()
            .find(|(q, _)| *q == -k)
            .map(|(_, c)| *c)
            .unwrap_or_default();
        if (partner - c.conj()).norm() > 1e-12 * (1.0 + c.norm()) {
            return Err(Error::invalid(format!(
                "Fourier series is not real at k = {k}"
            )));
        }
    }
    Ok(())
}

/// Relabels a longitudinal solution so that mode 1 is the σ_z = +1 state.
fn excited_last(sol: FloquetSolution) -> FloquetSolution {
    if sol.mean_sigma_z(0) > sol.mean_sigma_z(1) {
        sol.swapped()
    } else {
        sol
    }
}

pub fn limit_frequency_modulation(fm: &FrequencyModulation) -> Result<FrequencyModulationLimit> {
    check_real_series(&fm.splitting)?;
    check_real_series(&fm.slope)?;
    let omega_bar = fm
        .splitting
        .iter()
        .find(|(k, _)| *k == 0)
        .map(|(_, c)| c.re)
        .unwrap_or(0.0);
    let mut ks: Vec<i32> = fm.slope.iter().map(|(k, _)| *k).collect();
    ks.sort_unstable();
    ks.dedup();

    let h = FourierHamiltonian::new(fm.omega_d, series_to_harmonics(&fm.splitting, 0.5));
    let sol = excited_last(solve_extended(&h, &ExtendedOptions::default())?);
    let sigma = series_to_harmonics(&fm.slope, 0.5);
    let w = coupling_weights(&sol, &sigma);
    Ok(FrequencyModulationLimit {
        eps01_analytic: omega_bar,
        g_phi_analytic: fm.slope.iter().map(|&(k, c)| (k, c * 0.5)).collect(),
        eps01_floquet: (sol.eps[1] - sol.eps[0]).rem_euclid(fm.omega_d),
        g_phi_floquet: fm
            .slope
            .iter()
            .map(|&(k, _)| (k, w.phi(k as i64)))
            .collect(),
    })
}

/// Resonantly driven qubit in the rotating-wave form
/// H = Ω_ge σ_z/2 + (d/2)(σ⁺e^{−iω_d t} + h.c.) with detuning δ = Ω_ge − ω_d
/// and noise entering as (∂Ω_ge/∂λ) δλ σ_z/2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpinLocking {
    pub detuning: f64,
    pub drive: f64,
    pub slope: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpinLockingLimit {
    /// Ω_R = √(δ² + d²) analytically; the solver value is reduced into [0, ω_d).
    pub eps01: f64,
    /// atan(d/δ).
    pub theta: f64,
    /// Coefficient of S_λ(0) in γ_φ.
    pub phi_coefficient: f64,
    pub gamma_phi: f64,
    /// Rate sampling S_λ(+Ω_R).
    pub gamma_minus: f64,
    /// Rate sampling S_λ(−Ω_R).
    pub gamma_plus: f64,
}

/// γ_φ = ½[slope cosθ]² S(0), γ_∓ = ¼[slope sinθ]² S(±Ω_R).
pub fn limit_spin_locking<S: Fn(f64) -> f64>(p: &SpinLocking, spectrum: S) -> SpinLockingLimit {
    let rabi = p.detuning.hypot(p.drive);
    let theta = p.drive.atan2(p.detuning);
    let phi_coefficient = 0.5 * (p.slope * theta.cos()).powi(2);
    let depol = 0.25 * (p.slope * theta.sin()).powi(2);
    SpinLockingLimit {
        eps01: rabi,
        theta,
        phi_coefficient,
        gamma_phi: phi_coefficient * spectrum(0.0),
        gamma_minus: depol * spectrum(rabi),
        gamma_plus: depol * spectrum(-rabi),
    }
}

/// The same quantities from the lab-frame Floquet solution and the generic
/// coupling weights. Depolarising terms are assigned to ±Ω_R by their filter
/// frequency, so the result does not depend on how the two modes are labelled.
pub fn spin_locking_floquet<S: Fn(f64) -> f64>(
    p: &SpinLocking,
    omega_d: f64,
    spectrum: S,
) -> Result<SpinLockingLimit> {
    let c = Complex64::from;
    let omega_ge = omega_d + p.detuning;
    let raise = Mat2::new(c(0.0), c(0.5 * p.drive), c(0.0), c(0.0));
    let h = FourierHamiltonian::new(
        omega_d,
        vec![
            (0, sigma_z() * c(0.5 * omega_ge)),
            (1, raise),
            (-1, raise.adjoint()),
        ],
    );
    let sol = solve_extended(&h, &ExtendedOptions::default())?;
    let w = coupling_weights(&sol, &[(0, sigma_z() * c(0.5 * p.slope))]);

    let rabi = p.detuning.hypot(p.drive);
    let tol = 1e-9 * (rabi + omega_d);
    let mut gamma_minus = 0.0;
    let mut gamma_plus = 0.0;
    for k in w.ks() {
        for (g, f) in [(w.plus(k), w.freq_plus(k)), (w.minus(k), w.freq_minus(k))] {
            if (f - rabi).abs() < tol {
                gamma_minus += g.norm_sqr() * spectrum(f);
            } else if (f + rabi).abs() < tol {
                gamma_plus += g.norm_sqr() * spectrum(f);
            }
        }
    }
    let r = rates_with_spectrum(&w, &spectrum);
    let phi_coefficient = 2.0 * w.phi(0).norm_sqr();
    Ok(SpinLockingLimit {
        eps01: sol.eps01,
        theta: p.drive.atan2(p.detuning),
        phi_coefficient,
        gamma_phi: r.gamma_phi,
        gamma_minus,
        gamma_plus,
    })
}

/// Both sides of g^λ_{0φ} = ½ ∂ε_01/∂λ for a periodic family H(λ, t).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneralSweet {
    /// (1/2T)∫ tr[σ(t) ĉ_φ(t)] dt with σ = ∂H/∂λ.
    pub g0_phi: f64,
    /// ∂ε_01/∂λ by Richardson-extrapolated central differences.
    pub slope: f64,
}

impl GeneralSweet {
    pub fn half_slope(&self) -> f64 {
        0.5 * self.slope
    }
}

pub fn general_sweet_condition<F>(family: F, lambda0: f64, step: f64) -> Result<GeneralSweet>
where
    F: Fn(f64) -> FourierHamiltonian,
{
    if !(step > 0.0) {
        return Err(Error::invalid("finite-difference step must be positive"));
    }
    let opts = ExtendedOptions::default();
    let h0 = family(lambda0);
    let sol0 = solve_extended(&h0, &opts)?;
    if sol0.is_degenerate() {
        return Err(Error::Degenerate { eps01: sol0.eps01 });
    }

    let hp = family(lambda0 + step);
    let hm = family(lambda0 - step);
    let mut orders: Vec<i32> = hp
        .harmonics
        .iter()
        .chain(hm.harmonics.iter())
        .map(|(m, _)| *m)
        .collect();
    orders.sort_unstable();
    orders.dedup();
    let sigma: Vec<(i32, Mat2)> = orders
        .into_iter()
        .map(|m| {
            (
                m,
                (hp.harmonic(m) - hm.harmonic(m)) / Complex64::from(2.0 * step),
            )
        })
        .collect();
    let g0_phi = coupling_weights(&sol0, &sigma).phi(0).re;

    let eps01_at = |lambda: f64| -> Result<f64> {
        let sol = solve_extended(&family(lambda), &opts)?.relabel_like(&sol0);
        Ok(sol.eps[1] - sol.eps[0])
    };
    let central = |s: f64| -> Result<f64> {
        let mut d = eps01_at(lambda0 + s)? - eps01_at(lambda0 - s)?;
        d -= h0.omega * (d / h0.omega).round();
        Ok(d / (2.0 * s))
    };
    let slope = (4.0 * central(0.5 * step)? - central(step)?) / 3.0;
    Ok(GeneralSweet { g0_phi, slope })
}
