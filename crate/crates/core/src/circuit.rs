//! Static fluxonium spectrum and its reduction to a driven two-level model.
//!
//! H = 4E_C n² + ½E_L(φ + φ_ext)² − E_J cos φ is diagonalised in the
//! harmonic-oscillator basis of the shifted coordinate θ = φ + φ_ext, where the
//! Josephson term has closed-form matrix elements in terms of generalised
//! Laguerre polynomials.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::units::{ghz_to_angular, TWO_PI};
use crate::{Error, Result};

/// Number of levels kept in a [`StaticSpectrum`].
pub const KEPT_LEVELS: usize = 6;

const MAX_BASIS: usize = 1600;
const CONVERGENCE_RTOL: f64 = 1e-9;

/// Circuit energies in GHz (energy/h).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FluxoniumParams {
    pub e_c: f64,
    pub e_j: f64,
    pub e_l: f64,
    pub basis_dim: usize,
}

impl FluxoniumParams {
    pub fn new(e_c: f64, e_j: f64, e_l: f64) -> Self {
        Self {
            e_c,
            e_j,
            e_l,
            basis_dim: 100,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("e_c", self.e_c), ("e_j", self.e_j), ("e_l", self.e_l)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(format!("{name} must be positive, got {v}")));
            }
        }
        if self.basis_dim < 20 {
            return Err(Error::invalid(format!(
                "basis_dim must be at least 20, got {}",
                self.basis_dim
            )));
        }
        Ok(())
    }

    /// Oscillator length of the L-C part, (8E_C/E_L)^(1/4).
    pub fn phi_osc(&self) -> f64 {
        (8.0 * self.e_c / self.e_l).powf(0.25)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Parity {
    Even,
    Odd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StaticSpectrum {
    pub params: FluxoniumParams,
    /// Reduced dc flux in radians.
    pub phi_dc: f64,
    /// Lowest eigenenergies in GHz, strictly increasing.
    pub energies: Vec<f64>,
    /// ⟨l|φ̂|l′⟩ for the kept levels.
    pub phi_matrix: DMatrix<f64>,
    /// Parity under θ → −θ, only when `phi_dc` sits at half a flux quantum.
    pub parity_labels: Option<Vec<Parity>>,
    /// Basis size at which the spectrum was accepted.
    pub basis_used: usize,
}

impl StaticSpectrum {
    pub fn at_half_flux(&self) -> bool {
        is_half_flux(self.phi_dc)
    }

    /// Ω_ge in GHz.
    pub fn omega_ge(&self) -> f64 {
        self.energies[1] - self.energies[0]
    }

    /// |⟨g|φ̂|e⟩|.
    pub fn phi_ge(&self) -> f64 {
        self.phi_matrix[(0, 1)].abs()
    }
}

fn is_half_flux(phi_dc: f64) -> bool {
    let r = (phi_dc - PI).rem_euclid(TWO_PI);
    r < 1e-12 || TWO_PI - r < 1e-12
}

/// Diagonalises the static fluxonium at dc flux `phi_dc` (radians), doubling
/// the basis until the lowest four levels are stable.
pub fn diagonalize_fluxonium(params: &FluxoniumParams, phi_dc: f64) -> Result<StaticSpectrum> {
    params.validate()?;
    if !phi_dc.is_finite() {
        return Err(Error::invalid("phi_dc must be finite"));
    }
    let mut dim = params.basis_dim.max(KEPT_LEVELS + 4);
    let mut current = solve_in_basis(params, phi_dc, dim);
    loop {
        let next_dim = 2 * dim;
        if next_dim > MAX_BASIS {
            let residual = f64::NAN;
            return Err(Error::BasisNotConverged { dim, residual });
        }
        let next = solve_in_basis(params, phi_dc, next_dim);
        let residual = (0..4)
            .map(|l| {
                let scale = current.energies[l]
                    .abs()
                    .max(next.energies[l].abs())
                    .max(1e-300);
                (current.energies[l] - next.energies[l]).abs() / scale
            })
            .fold(0.0, f64::max);
        if residual < CONVERGENCE_RTOL {
            return Ok(StaticSpectrum {
                params: *params,
                ..next
            });
        }
        if 2 * next_dim > MAX_BASIS {
            return Err(Error::BasisNotConverged {
                dim: next_dim,
                residual,
            });
        }
        dim = next_dim;
        current = next;
    }
}

/// Single diagonalisation at a fixed basis size.
pub fn solve_in_basis(params: &FluxoniumParams, phi_dc: f64, dim: usize) -> StaticSpectrum {
    let h = hamiltonian_matrix(params, phi_dc, dim);
    let eig = SymmetricEigen::new(h);
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let kept = KEPT_LEVELS.min(dim);

    let mut vecs = DMatrix::<f64>::zeros(dim, kept);
    let mut energies = Vec::with_capacity(kept);
    for (col, &idx) in order.iter().take(kept).enumerate() {
        energies.push(eig.eigenvalues[idx]);
        let mut v = eig.eigenvectors.column(idx).clone_owned();
        let pivot = v.iamax();
        if v[pivot] < 0.0 {
            v.neg_mut();
        }
        vecs.set_column(col, &v);
    }

    let a0 = params.phi_osc() / 2f64.sqrt();
    let mut theta = DMatrix::<f64>::zeros(dim, dim);
    for n in 1..dim {
        let v = a0 * (n as f64).sqrt();
        theta[(n - 1, n)] = v;
        theta[(n, n - 1)] = v;
    }
    let mut phi_matrix = vecs.transpose() * theta * &vecs;
    for l in 0..kept {
        phi_matrix[(l, l)] -= phi_dc;
    }
    let phi_matrix = (&phi_matrix + phi_matrix.transpose()) * 0.5;

    let parity_labels = is_half_flux(phi_dc).then(|| {
        (0..kept)
            .map(|c| {
                let s: f64 = (0..dim)
                    .map(|n| if n % 2 == 0 { 1.0 } else { -1.0 } * vecs[(n, c)].powi(2))
                    .sum();
                if s >= 0.0 {
                    Parity::Even
                } else {
                    Parity::Odd
                }
            })
            .collect()
    });

    StaticSpectrum {
        params: *params,
        phi_dc,
        energies,
        phi_matrix,
        parity_labels,
        basis_used: dim,
    }
}

/// Hamiltonian in the oscillator basis, GHz.
pub fn hamiltonian_matrix(params: &FluxoniumParams, phi_dc: f64, dim: usize) -> DMatrix<f64> {
    let a0 = params.phi_osc() / 2f64.sqrt();
    let x = a0 * a0;
    let omega_p = (8.0 * params.e_c * params.e_l).sqrt();
    let ln_fact = ln_factorials(dim);
    let mut h = DMatrix::<f64>::zeros(dim, dim);
    for lo in 0..dim {
        let laguerre = laguerre_column(lo, dim - lo, x);
        for d in 0..dim - lo {
            let hi = lo + d;
            let (sign, ln_l) = laguerre[d];
            let ln_mag = d as f64 * a0.ln() + 0.5 * (ln_fact[lo] - ln_fact[hi]) - 0.5 * x + ln_l;
            let cos_elem = sign * ln_mag.exp() * (d as f64 * PI / 2.0 - phi_dc).cos();
            let v = -params.e_j * cos_elem;
            h[(lo, hi)] = v;
            h[(hi, lo)] = v;
        }
        h[(lo, lo)] += omega_p * (lo as f64 + 0.5);
    }
    h
}

fn ln_factorials(n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n + 1];
    for k in 1..=n {
        out[k] = out[k - 1] + (k as f64).ln();
    }
    out
}

/// (sign, ln|L_n^(d)(x)|) for fixed n and d = 0..count.
fn laguerre_column(n: usize, count: usize, x: f64) -> Vec<(f64, f64)> {
    (0..count)
        .map(|d| {
            let d = d as f64;
            let mut prev = 1.0;
            let mut scale = 0.0;
            if n == 0 {
                return (1.0, 0.0);
            }
            let mut cur = 1.0 + d - x;
            for k in 1..n {
                let k = k as f64;
                let next = ((2.0 * k + 1.0 + d - x) * cur - (k + d) * prev) / (k + 1.0);
                prev = cur;
                cur = next;
                if cur.abs() > 1e100 {
                    cur *= 1e-100;
                    prev *= 1e-100;
                    scale += 100.0 * 10f64.ln();
                }
            }
            if cur == 0.0 {
                (0.0, 0.0)
            } else {
                (cur.signum(), cur.abs().ln() + scale)
            }
        })
        .collect()
}

/// Effective two-level parameters in rad/ns.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoLevelParams {
    pub delta: f64,
    pub amp: f64,
    pub bias: f64,
    pub omega_d: f64,
    pub provenance: Option<Provenance>,
    /// Drive frequency inside the e–f guard band.
    pub ef_warning: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub phi_ac: f64,
    pub phi_dc: f64,
    pub phi_ge: f64,
    /// E_L in rad/ns.
    pub e_l: f64,
}

impl TwoLevelParams {
    /// Bare model without circuit provenance.
    pub fn new(delta: f64, amp: f64, bias: f64, omega_d: f64) -> Self {
        Self {
            delta,
            amp,
            bias,
            omega_d,
            provenance: None,
            ef_warning: false,
        }
    }

    /// Static splitting √(Δ² + B²).
    pub fn omega_ge(&self) -> f64 {
        self.delta.hypot(self.bias)
    }

    pub fn with_amp(mut self, amp: f64) -> Self {
        if let Some(p) = self.provenance.as_mut() {
            p.phi_ac = amp / (p.e_l * p.phi_ge);
        }
        self.amp = amp;
        self
    }

    pub fn with_bias(mut self, bias: f64) -> Self {
        self.bias = bias;
        self
    }

    pub fn with_omega(mut self, omega_d: f64) -> Self {
        self.omega_d = omega_d;
        self
    }

    /// dB/dφ_dc = 2 E_L φ̃_ge.
    pub fn bias_per_flux(&self) -> Option<f64> {
        self.provenance.map(|p| 2.0 * p.e_l * p.phi_ge)
    }

    /// dA/dφ_ac = E_L φ̃_ge.
    pub fn amp_per_flux(&self) -> Option<f64> {
        self.provenance.map(|p| p.e_l * p.phi_ge)
    }
}

/// Relative guard band around Ω̃_f − Ω̃_e used for the validity warning.
pub const EF_GUARD_BAND: f64 = 0.2;

/// Two-level reduction about half flux. `spec_at_pi` must be computed at φ_dc = π.
pub fn two_level_reduce(
    spec_at_pi: &StaticSpectrum,
    phi_ac: f64,
    phi_dc: f64,
    omega_d: f64,
) -> Result<TwoLevelParams> {
    if !spec_at_pi.at_half_flux() {
        return Err(Error::invalid(
            "two-level reduction needs the spectrum at phi_dc = pi",
        ));
    }
    if !(phi_ac.is_finite() && phi_dc.is_finite() && omega_d.is_finite()) {
        return Err(Error::invalid("drive parameters must be finite"));
    }
    let e_l = ghz_to_angular(spec_at_pi.params.e_l);
    let phi_ge = spec_at_pi.phi_ge();
    let delta = ghz_to_angular(spec_at_pi.energies[1] - spec_at_pi.energies[0]);
    let omega_ef = ghz_to_angular(spec_at_pi.energies[2] - spec_at_pi.energies[1]);
    Ok(TwoLevelParams {
        delta,
        amp: e_l * phi_ac * phi_ge,
        bias: 2.0 * e_l * (phi_dc - PI) * phi_ge,
        omega_d,
        provenance: Some(Provenance {
            phi_ac,
            phi_dc,
            phi_ge,
            e_l,
        }),
        ef_warning: omega_d >= (1.0 - EF_GUARD_BAND) * omega_ef,
    })
}

/// A circuit together with its half-flux spectrum, ready to be reduced at any
/// drive point.
#[derive(Debug, Clone, PartialEq)]
pub struct Fluxonium {
    pub params: FluxoniumParams,
    pub spectrum_at_pi: StaticSpectrum,
}

impl Fluxonium {
    pub fn new(params: FluxoniumParams) -> Result<Self> {
        let spectrum_at_pi = diagonalize_fluxonium(&params, PI)?;
        Ok(Self {
            params,
            spectrum_at_pi,
        })
    }

    /// Δ in rad/ns.
    pub fn delta(&self) -> f64 {
        ghz_to_angular(self.spectrum_at_pi.omega_ge())
    }

    pub fn phi_ge(&self) -> f64 {
        self.spectrum_at_pi.phi_ge()
    }

    /// E_L in rad/ns.
    pub fn e_l(&self) -> f64 {
        ghz_to_angular(self.params.e_l)
    }

    /// Drive point given in configuration units: fluxes over 2π and f_d in GHz.
    pub fn reduce(
        &self,
        phi_ac_over_2pi: f64,
        phi_dc_over_2pi: f64,
        f_d_ghz: f64,
    ) -> Result<TwoLevelParams> {
        two_level_reduce(
            &self.spectrum_at_pi,
            TWO_PI * phi_ac_over_2pi,
            TWO_PI * phi_dc_over_2pi,
            ghz_to_angular(f_d_ghz),
        )
    }

    /// φ_ac in radians that produces amplitude `amp` (rad/ns).
    pub fn phi_ac_for_amp(&self, amp: f64) -> f64 {
        amp / (self.e_l() * self.phi_ge())
    }

    /// φ_dc in radians that produces bias `bias` (rad/ns).
    pub fn phi_dc_for_bias(&self, bias: f64) -> f64 {
        PI + bias / (2.0 * self.e_l() * self.phi_ge())
    }
}
